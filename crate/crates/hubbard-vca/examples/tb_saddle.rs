//! Minimal library walkthrough: solve the 2-site tight-binding chain,
//! locate the stationary Weiss fields and print the lattice observables.
//!
//! Run with `cargo run --release --example tb_saddle`.

use hubbard_vca::cluster::{ClusterModel, Dimension, VariationalParams};
use hubbard_vca::ed::solve_cluster;
use hubbard_vca::greens::{kernel_transform, TimeGrid};
use hubbard_vca::observables::{scalar_observables, spectra_and_distributions};
use hubbard_vca::vca::{find_saddle, GfRoute, OmegaEvaluator, ParamBounds, VParam};

fn main() -> hubbard_vca::Result<()> {
    let model = ClusterModel {
        dimension: Dimension::One,
        l_c: 2,
        n_c: 20,
        a: 1.0,
        t: 1.0,
        u: 0.0,
        mu: 0.0,
        temperature: 1.0,
    };
    let grid = TimeGrid {
        dtau: 0.05,
        n_max: 1000,
        eta: std::f64::consts::PI / 50.0,
    };

    let ev = OmegaEvaluator::new(&model, grid, GfRoute::TimeDomain);
    let saddle = find_saddle(
        &ev,
        &VariationalParams::new(0.2, 0.1),
        &[VParam::MuPrime, VParam::DeltaPrime],
        1e-3,
        1e-5,
        40,
        &ParamBounds::default(),
    )?;
    println!(
        "saddle: μ′* = {:+.5}, Δ′* = {:+.5}, Ω = {:.6} per site, {} Newton iterations",
        saddle.params_star.mu_prime,
        saddle.params_star.delta_prime,
        saddle.omega_value,
        saddle.iterations
    );

    let (_, poles) = solve_cluster(&model, &saddle.params_star)?;
    let gf = kernel_transform(&poles, &grid)?;
    let spectra = spectra_and_distributions(&model, &saddle.params_star, &gf)?;
    let obs = scalar_observables(&model, &spectra);
    println!("density n = {:.4}, pairing Δ = {:.2e}", obs.n, obs.delta);

    // momentum distribution across the zone
    for (k, n_k) in spectra.k_full.iter().zip(&spectra.n_k).step_by(5) {
        println!("  N(k = {:.3}) = {:.4}", k.x, n_k);
    }
    Ok(())
}
