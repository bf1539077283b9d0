//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line with the measured values. Run with `cargo test --test acceptance
//! -- --nocapture` to see every line.
//!
//! Criterion 1's μ′ window is known-red: the functional is exactly even in
//! μ′ at U = 0, μ = 0 (particle-hole symmetry), so the stationary point
//! sits at μ′ = 0, outside the demanded window around the reference value
//! 0.0046. See the README for the full analysis; the Δ′ and ⟨n⟩
//! components of the criterion pass.

use hubbard_vca::cluster::{build_cluster_hamiltonian, ClusterModel, Dimension, VariationalParams};
use hubbard_vca::ed::{lehmann_data, matsubara_occupation, solve_cluster};
use hubbard_vca::emulator::{
    exact_gibbs, measure_nambu_correlators, prepare_gibbs_riera, Emulator, Evolution,
    GibbsPrepConfig,
};
use hubbard_vca::greens::{kernel_transform, moments, TimeGrid};
use hubbard_vca::observables::{scalar_observables, spectra_and_distributions};
use hubbard_vca::pauli::{jw_annihilate, PauliOperator, Spin};
use hubbard_vca::vca::{find_saddle, GfRoute, OmegaEvaluator, ParamBounds, VParam};
use num_complex::Complex64;

type C64 = Complex64;

fn tb_chain(l_c: usize, n_c: usize, t: f64, u: f64, mu: f64, temperature: f64) -> ClusterModel {
    ClusterModel {
        dimension: Dimension::One,
        l_c,
        n_c,
        a: 1.0,
        t,
        u,
        mu,
        temperature,
    }
}

fn appendix_grid() -> TimeGrid {
    TimeGrid {
        dtau: 0.05,
        n_max: 2000,
        eta: std::f64::consts::PI / 50.0,
    }
}

struct Checker {
    criterion: &'static str,
    failures: Vec<String>,
}

impl Checker {
    fn new(criterion: &'static str) -> Self {
        Checker {
            criterion,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, label: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!(
            "ACCEPTANCE {} [{label}]: {verdict} — {detail}",
            self.criterion
        );
        if !pass {
            self.failures.push(format!("{label}: {detail}"));
        }
    }

    fn finish(self) {
        assert!(
            self.failures.is_empty(),
            "criterion {} failed: {:?}",
            self.criterion,
            self.failures
        );
    }
}

/// Criterion 1: saddle-point reproduction for the tight-binding chain at
/// T = 1 plus the half-filling density. The μ′ window around the printed
/// reference value excludes the particle-hole symmetric answer and is
/// expected to fail; see the module docs.
#[test]
fn acceptance_1_saddle_point_reproduction() {
    let model = tb_chain(2, 50, 1.0, 0.0, 0.0, 1.0);
    let ev = OmegaEvaluator::new(&model, appendix_grid(), GfRoute::TimeDomain);
    let res = find_saddle(
        &ev,
        &VariationalParams::new(0.2, 0.1),
        &[VParam::MuPrime, VParam::DeltaPrime],
        1e-3,
        1e-5,
        50,
        &ParamBounds::default(),
    )
    .expect("saddle search runs");

    let v_star = res.params_star;
    let (_, poles) = solve_cluster(&model, &v_star).unwrap();
    let gf = kernel_transform(&poles, &appendix_grid()).unwrap();
    let spec = spectra_and_distributions(&model, &v_star, &gf).unwrap();
    let obs = scalar_observables(&model, &spec);

    let mut c = Checker::new("1");
    c.check(
        "converged",
        res.converged,
        format!(
            "|∇Ω| = {:.2e} after {} iterations",
            res.gradient_norm, res.iterations
        ),
    );
    c.check(
        "mu_prime window",
        (v_star.mu_prime - 0.0046).abs() <= 2e-3,
        format!(
            "μ′* = {:+.5} vs reference 0.0046 ± 2e-3 (functional is even in μ′; see README)",
            v_star.mu_prime
        ),
    );
    c.check(
        "delta_prime",
        v_star.delta_prime.abs() <= 1e-3,
        format!("Δ′* = {:+.5} (window 0 ± 1e-3)", v_star.delta_prime),
    );
    c.check(
        "density",
        (obs.n - 0.5).abs() <= 0.01,
        format!("⟨n⟩ = {:.4} (window 0.5 ± 0.01)", obs.n),
    );
    c.finish();
}

/// Criterion 2: interacting saddle, t = 1, U = 4, μ = −2, T = 0.1.
///
/// The functional at β = 10 carries a symmetric pair of secondary
/// stationary points near μ′ ≈ −2 ± 0.15 (η-independent); the
/// start sits in the central basin of the physical saddle.
#[test]
fn acceptance_2_interacting_saddle() {
    let model = tb_chain(2, 50, 1.0, 4.0, -2.0, 0.1);
    let ev = OmegaEvaluator::new(&model, appendix_grid(), GfRoute::TimeDomain);
    let res = find_saddle(
        &ev,
        &VariationalParams::new(-1.95, 0.05),
        &[VParam::MuPrime, VParam::DeltaPrime],
        1e-3,
        1e-4,
        40,
        &ParamBounds::default(),
    )
    .expect("saddle search runs");

    let mut c = Checker::new("2");
    c.check(
        "converged",
        res.converged,
        format!(
            "|∇Ω| = {:.2e} after {} iterations",
            res.gradient_norm, res.iterations
        ),
    );
    c.check(
        "mu_prime",
        (res.params_star.mu_prime + 2.0).abs() <= 0.05,
        format!("μ′* = {:+.4} (window −2 ± 0.05)", res.params_star.mu_prime),
    );
    c.check(
        "delta_prime",
        res.params_star.delta_prime.abs() <= 1e-3,
        format!(
            "Δ′* = {:+.5} (window 0 ± 1e-3)",
            res.params_star.delta_prime
        ),
    );
    c.finish();
}

/// Criterion 3: emulator (exact Gibbs + exact evolution) vs the Lehmann
/// oracle, all 4L_c² pairs over 200 τ points, deviation ≤ 1e−6.
#[test]
fn acceptance_3_backend_equivalence() {
    let model = tb_chain(2, 2, 1.0, 0.0, 0.0, 0.1);
    let v = VariationalParams::default();
    let h = build_cluster_hamiltonian(&model, &v).unwrap();
    let emu = Emulator::new(&h).unwrap();
    let rho = exact_gibbs(&h.total, model.beta()).unwrap();
    let tau: Vec<f64> = (0..200).map(|n| n as f64 * 0.05).collect();
    let meas =
        measure_nambu_correlators(&emu, &rho, model.l_c, &tau, Evolution::Exact, None).unwrap();

    let (sol, _) = solve_cluster(&model, &v).unwrap();
    let oracle = lehmann_data(&sol, model.l_c).poles().correlators(&tau);

    let mut worst = 0.0f64;
    for (series, want) in meas.correlators.iter().zip(&oracle) {
        for (a, b) in series.iter().zip(want) {
            worst = worst.max((a - b).norm());
        }
    }
    let mut c = Checker::new("3");
    c.check(
        "max deviation",
        worst <= 1e-6,
        format!("max |C_emulator − C_lehmann| = {worst:.2e} over 16 pairs × 200 τ (tol 1e-6)"),
    );
    c.finish();
}

/// Criterion 4: momentum distribution from the time-domain pipeline
/// (dτ = 0.02, τ_max = 200) vs the imaginary-frequency summation, three
/// (μ, T) combinations, pointwise ≤ 0.05.
#[test]
fn acceptance_4_occupation_oracle_match() {
    let mut c = Checker::new("4");
    for (mu, temperature) in [(0.0, 0.2), (-1.0, 0.2), (0.0, 1.0)] {
        let model = tb_chain(2, 50, 1.0, 0.0, mu, temperature);
        let v = VariationalParams::new(0.0, 0.0);
        let (_, poles) = solve_cluster(&model, &v).unwrap();
        let grid = TimeGrid {
            dtau: 0.02,
            n_max: 10_000,
            eta: std::f64::consts::PI / 50.0,
        };
        let gf = kernel_transform(&poles, &grid).unwrap();
        let spec = spectra_and_distributions(&model, &v, &gf).unwrap();
        let oracle = matsubara_occupation(&model, &v, &poles, 1500, 1e-4).unwrap();
        let max_dev = spec
            .n_k
            .iter()
            .zip(&oracle.n_k)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        c.check(
            &format!("mu={mu}, T={temperature}"),
            max_dev <= 0.05,
            format!("max |N_pipeline − N_matsubara| = {max_dev:.4} (tol 0.05)"),
        );
    }
    c.finish();
}

/// Criterion 5: U = 0 CPT spectral checks at the appendix grid — peak
/// positions on the band −2t cos(ka) − μ within Δω + η, and the per-k sum
/// rule ∫A dω = 1 ± 0.02.
#[test]
fn acceptance_5_spectral_checks() {
    let mut c = Checker::new("5");
    for mu in [0.0, -0.7] {
        let model = tb_chain(2, 50, 1.0, 0.0, mu, 1.0);
        let v = VariationalParams::new(0.0, 0.0);
        let (_, poles) = solve_cluster(&model, &v).unwrap();
        let grid = appendix_grid();
        let gf = kernel_transform(&poles, &grid).unwrap();
        let spec = spectra_and_distributions(&model, &v, &gf).unwrap();
        let d_omega = grid.d_omega();
        let tol = d_omega + grid.eta;

        let mut worst_peak = 0.0f64;
        let mut worst_sum = 0.0f64;
        for (ik, k) in spec.k_full.iter().enumerate() {
            let eps = -2.0 * model.t * (k.x * model.a).cos() - model.mu;
            let imax = spec.a_kw[ik]
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            worst_peak = worst_peak.max((spec.omega[imax] - eps).abs());
            let total: f64 = spec.a_kw[ik].iter().sum::<f64>() * d_omega;
            worst_sum = worst_sum.max((total - 1.0).abs());
        }
        c.check(
            &format!("peaks on band, mu={mu}"),
            worst_peak <= tol,
            format!("max |ω_peak − ε(k)| = {worst_peak:.4} (tol Δω + η = {tol:.4})"),
        );
        c.check(
            &format!("sum rule, mu={mu}"),
            worst_sum <= 0.02,
            format!("max |∫A dω − 1| = {worst_sum:.4} (tol 0.02)"),
        );
    }
    c.finish();
}

/// Criterion 6: exhaustive canonical anticommutation relations for all
/// Jordan-Wigner operators, L_c ≤ 3, exact to 1e−12.
#[test]
fn acceptance_6_car_property_suite() {
    let mut worst = 0.0f64;
    for l_c in 1..=3usize {
        let n = 2 * l_c;
        let mut ann = Vec::new();
        for spin in Spin::BOTH {
            for site in 1..=l_c {
                ann.push(jw_annihilate(site, spin, l_c).unwrap());
            }
        }
        for (a, ca) in ann.iter().enumerate() {
            for (b, cb) in ann.iter().enumerate() {
                let mut acc = ca.anticommutator(&cb.adjoint());
                if a == b {
                    acc = acc.minus(&PauliOperator::identity(n));
                }
                worst = worst.max(acc.max_coeff());
                worst = worst.max(ca.anticommutator(cb).max_coeff());
            }
        }
    }
    let mut c = Checker::new("6");
    c.check(
        "CAR residual",
        worst <= 1e-12,
        format!("max residual over all pairs, L_c ≤ 3: {worst:.2e} (tol 1e-12)"),
    );
    c.finish();
}

/// Criterion 7: first-order Trotter error in C_μν halves when n_T doubles
/// (ratio 2 ± 20%) for the 2-site cluster at τ ≤ 1.
#[test]
fn acceptance_7_trotter_scaling() {
    let model = tb_chain(2, 2, 1.0, 0.0, 0.0, 1.0);
    // Weiss fields make the split non-commuting; U stays 0. The error is
    // taken as the max over the full measured pair set (individual pairs
    // can show accidental first-order cancellations).
    let v = VariationalParams::new(0.5, 0.3);
    let h = build_cluster_hamiltonian(&model, &v).unwrap();
    let emu = Emulator::new(&h).unwrap();
    let rho = exact_gibbs(&h.total, model.beta()).unwrap();
    let tau: Vec<f64> = (0..=20).map(|n| n as f64 * 0.05).collect();

    let run = |evolution: Evolution| {
        measure_nambu_correlators(&emu, &rho, model.l_c, &tau, evolution, None)
            .unwrap()
            .correlators
    };
    let exact = run(Evolution::Exact);
    let err = |n_t: usize| {
        let t = run(Evolution::Trotter { n_t });
        let mut worst = 0.0f64;
        for (series, want) in t.iter().zip(&exact) {
            for (a, b) in series.iter().zip(want) {
                worst = worst.max((a - b).norm());
            }
        }
        worst
    };
    let e1 = err(1);
    let e2 = err(2);
    let e4 = err(4);
    let ratio12 = e1 / e2;
    let ratio24 = e2 / e4;

    let mut c = Checker::new("7");
    c.check(
        "ratio n_T 1→2",
        (ratio12 - 2.0).abs() <= 0.4,
        format!("err({e1:.3e})/err({e2:.3e}) = {ratio12:.3} (window 2 ± 0.4)"),
    );
    c.check(
        "ratio n_T 2→4",
        (ratio24 - 2.0).abs() <= 0.4,
        format!("ratio = {ratio24:.3} (window 2 ± 0.4)"),
    );
    c.check(
        "monotone",
        e1 > e2 && e2 > e4,
        format!("errors {e1:.2e} > {e2:.2e} > {e4:.2e}"),
    );
    c.finish();
}

/// Criterion 8: Gibbs preparation study — single-qubit system + 4-qubit
/// bath, r = 8, q = 4: trace distance within the evaluated bound, fitted β
/// within δβ of the readout β(s_*), repeat count within the run bound.
#[test]
fn acceptance_8_gibbs_preparation_study() {
    let h = {
        use hubbard_vca::pauli::{Factor, PauliString};
        PauliOperator::from_term(
            C64::new(1.0, 0.0),
            PauliString::from_sites(1, &[(1, Factor::Num)]).unwrap(),
        )
    };
    let cfg = GibbsPrepConfig {
        m: 4,
        r: 8,
        q: 4,
        lambda: 1.0,
        target_beta: 1.0,
    };
    let out = prepare_gibbs_riera(&h, &cfg, 7).unwrap();
    out.rho_s.validate().unwrap();

    let mut c = Checker::new("8");
    c.check(
        "trace distance bound",
        out.trace_distance <= out.error_bound,
        format!(
            "D(ρ_QC, ρ_Gibbs) = {:.4} ≤ bound {:.4}",
            out.trace_distance, out.error_bound
        ),
    );
    c.check(
        "beta within resolution",
        (out.beta_fit - out.beta_formula).abs() <= out.delta_beta,
        format!(
            "|β_fit − β(s*)| = |{:.4} − {:.4}| = {:.4} ≤ δβ = {:.4}",
            out.beta_fit,
            out.beta_formula,
            (out.beta_fit - out.beta_formula).abs(),
            out.delta_beta
        ),
    );
    c.check(
        "repeat count",
        (out.runs_used as f64) <= out.expected_runs_bound,
        format!(
            "runs = {} ≤ expected-runs bound {:.0}",
            out.runs_used, out.expected_runs_bound
        ),
    );
    c.finish();
}

/// Criterion 9: forward finite-difference moments s ≤ 2 match the Lehmann
/// moments within 5·Δτ·(max|E_m−E_n|)^{s+1} for the 2-site cluster.
#[test]
fn acceptance_9_moment_expansion() {
    let model = tb_chain(2, 2, 1.0, 0.0, 0.0, 1.0);
    let v = VariationalParams::default();
    let (sol, _) = solve_cluster(&model, &v).unwrap();
    let poles = lehmann_data(&sol, model.l_c).poles();
    let dtau = 0.05;
    let tau: Vec<f64> = (0..8).map(|n| n as f64 * dtau).collect();
    let correlators = poles.correlators(&tau);
    // largest pole frequency on the Lehmann support
    let w_max = poles.omega.iter().fold(0.0f64, |a, &w| a.max(w.abs()));

    let mut c = Checker::new("9");
    for (a, b) in [(0usize, 0usize), (0, 1)] {
        let series = &correlators[a * 4 + b];
        let fd = moments(series, 2, dtau).unwrap();
        for s in 0..=2usize {
            let lehmann: C64 = poles
                .omega
                .iter()
                .zip(&poles.weight)
                .map(|(&w, res)| res[(a, b)] * C64::new(0.0, -w).powu(s as u32))
                .sum();
            let envelope = if s == 0 {
                1e-12
            } else {
                5.0 * dtau * w_max.powi(s as i32 + 1)
            };
            let dev = (fd[s] - lehmann).norm();
            c.check(
                &format!("entry ({a},{b}), s={s}"),
                dev <= envelope,
                format!("|C_fd^({s}) − C_lehmann^({s})| = {dev:.3e} (envelope {envelope:.3e})"),
            );
        }
    }
    c.finish();
}
