//! Lattice observables from the saddle-point cluster Green's function:
//! the CPT lattice Green's function 𝒢̂ = (Ĝ′⁻¹ − V̂)⁻¹, its periodization to
//! the full reciprocal lattice, spectra, momentum distributions and scalar
//! observables.

use crate::cluster::{perturbation_matrix_unchecked, ClusterModel, KVec, VariationalParams};
use crate::ed::LehmannPoles;
use crate::error::{Result, VcaError};
use crate::greens::NambuGreensFunction;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

type C64 = Complex64;

/// Fold a full-zone wavevector onto the reduced zone of the superlattice.
pub fn fold_k(model: &ClusterModel, k: KVec) -> KVec {
    let zone = 2.0 * std::f64::consts::PI / (model.cluster_extent() as f64 * model.a);
    KVec {
        x: k.x.rem_euclid(zone),
        y: if model.dimension == crate::cluster::Dimension::Two {
            k.y.rem_euclid(zone)
        } else {
            0.0
        },
    }
}

/// Lattice-perturbed Green's function at one (k̃, z):
/// 𝒢̂(k̃, z) = (Ĝ′(z)⁻¹ − V̂(k̃))⁻¹.
pub fn cpt_matrix_at(
    model: &ClusterModel,
    v: &VariationalParams,
    g_cluster: &DMatrix<C64>,
    k_tilde: KVec,
) -> Option<DMatrix<C64>> {
    let vk = perturbation_matrix_unchecked(model, v, k_tilde);
    let g_inv = g_cluster.clone().try_inverse()?;
    (g_inv - vk).try_inverse()
}

/// Periodized normal-block Green's function at a full-lattice wavevector:
/// 𝒢_cpt(k, ω) = (1/L_c) Σ_ij 𝒢_ij e^{−ik·(r_i − r_j)}.
pub fn periodize_normal(model: &ClusterModel, gmat: &DMatrix<C64>, k: KVec) -> C64 {
    periodize_block(model, gmat, k, 0, 0)
}

/// Periodized anomalous block ℱ_cpt(k, ω).
pub fn periodize_anomalous(model: &ClusterModel, gmat: &DMatrix<C64>, k: KVec) -> C64 {
    periodize_block(model, gmat, k, 0, model.l_c)
}

fn periodize_block(
    model: &ClusterModel,
    gmat: &DMatrix<C64>,
    k: KVec,
    row0: usize,
    col0: usize,
) -> C64 {
    let l_c = model.l_c;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..l_c {
        let ri = model.site_position(i + 1);
        for j in 0..l_c {
            let rj = model.site_position(j + 1);
            let phase = C64::from_polar(1.0, -(k.x * (ri.x - rj.x) + k.y * (ri.y - rj.y)));
            acc += gmat[(row0 + i, col0 + j)] * phase;
        }
    }
    acc / C64::new(l_c as f64, 0.0)
}

/// Periodized normal Green's function at arbitrary complex frequency,
/// straight from the Lehmann poles (used for Matsubara sums).
pub fn cpt_periodized_at(
    model: &ClusterModel,
    v: &VariationalParams,
    poles: &LehmannPoles,
    k: KVec,
    z: C64,
) -> C64 {
    let g = poles.green_at(z);
    let kt = fold_k(model, k);
    match cpt_matrix_at(model, v, &g, kt) {
        Some(m) => periodize_normal(model, &m, k),
        None => C64::new(0.0, 0.0),
    }
}

/// CPT lattice Green's function tabulated over (k̃, ω).
#[derive(Debug, Clone)]
pub struct LatticeGreens {
    pub k_tilde: Vec<KVec>,
    pub omega: Vec<f64>,
    pub eta: f64,
    /// `mats[ik][iw]`
    pub mats: Vec<Vec<DMatrix<C64>>>,
    /// (k̃ index, ω index) pairs where Ĝ′ was singular and the frequency
    /// was skipped (matrix left zero).
    pub skipped: Vec<(usize, usize)>,
}

/// Build the lattice Green's function on the full (k̃, ω) grid.
pub fn cpt_green(
    model: &ClusterModel,
    v: &VariationalParams,
    gf: &NambuGreensFunction,
) -> Result<LatticeGreens> {
    let k_tilde = model.k_tilde_grid();
    let n_orb = gf.n_orbitals();
    if n_orb != 2 * model.l_c {
        return Err(VcaError::domain(
            "cluster Green's function does not match the model size",
        ));
    }
    let per_omega: Vec<(Vec<DMatrix<C64>>, Vec<usize>)> = gf
        .mats
        .par_iter()
        .map(|g| {
            let mut row = Vec::with_capacity(k_tilde.len());
            let mut skipped = Vec::new();
            match g.clone().try_inverse() {
                Some(g_inv) => {
                    for (ik, &kt) in k_tilde.iter().enumerate() {
                        let vk = perturbation_matrix_unchecked(model, v, kt);
                        match (&g_inv - vk).try_inverse() {
                            Some(m) => row.push(m),
                            None => {
                                skipped.push(ik);
                                row.push(DMatrix::zeros(n_orb, n_orb));
                            }
                        }
                    }
                }
                None => {
                    for ik in 0..k_tilde.len() {
                        skipped.push(ik);
                        row.push(DMatrix::zeros(n_orb, n_orb));
                    }
                }
            }
            (row, skipped)
        })
        .collect();

    let mut mats: Vec<Vec<DMatrix<C64>>> = vec![Vec::new(); k_tilde.len()];
    let mut skipped = Vec::new();
    for (iw, (row, skip)) in per_omega.into_iter().enumerate() {
        for (ik, m) in row.into_iter().enumerate() {
            mats[ik].push(m);
        }
        for ik in skip {
            skipped.push((ik, iw));
        }
    }
    Ok(LatticeGreens {
        k_tilde,
        omega: gf.omega.clone(),
        eta: gf.eta,
        mats,
        skipped,
    })
}

/// Spectra and momentum distributions on the full reciprocal lattice.
#[derive(Debug, Clone)]
pub struct LatticeSpectra {
    pub k_full: Vec<KVec>,
    pub omega: Vec<f64>,
    /// Quasiparticle spectrum A(k, ω) = −(1/π) Im 𝒢_cpt, indexed `[ik][iw]`.
    pub a_kw: Vec<Vec<f64>>,
    /// Bogoliubov spectrum F(k, ω), same layout.
    pub f_kw: Vec<Vec<f64>>,
    /// Density of states N(ω) = (1/N) Σ_k A(k, ω).
    pub n_omega: Vec<f64>,
    /// Momentum distribution N(k) = ∫dω f(ω) A(k, ω).
    pub n_k: Vec<f64>,
    /// Condensation amplitude distribution F(k).
    pub f_k: Vec<f64>,
}

/// Compute A(k,ω), F(k,ω), N(ω), N(k) and F(k) from a cluster Green's
/// function, streaming over ω. The Fermi weight is f(ω) = 1/(1 + e^{βω})
/// in the frame where −μ sits inside the one-body matrices.
pub fn spectra_and_distributions(
    model: &ClusterModel,
    v: &VariationalParams,
    gf: &NambuGreensFunction,
) -> Result<LatticeSpectra> {
    let k_full = model.k_full_grid();
    let k_tilde = model.k_tilde_grid();
    let n_orb = 2 * model.l_c;
    if gf.n_orbitals() != n_orb {
        return Err(VcaError::domain(
            "cluster Green's function does not match the model size",
        ));
    }
    let beta = model.beta();
    let d_omega = gf.d_omega();
    let n_k_pts = k_full.len();

    // map each full-grid k to its reduced-zone index
    let fiber: Vec<usize> = match model.dimension {
        crate::cluster::Dimension::One => (0..n_k_pts).map(|m| model.fold_index(m)).collect(),
        crate::cluster::Dimension::Two => {
            let n_per_dim = model.n_c * 2;
            (0..n_k_pts)
                .map(|idx| {
                    let mx = idx % n_per_dim;
                    let my = idx / n_per_dim;
                    model.fold_index(my) * model.n_c + model.fold_index(mx)
                })
                .collect()
        }
    };

    // per ω: A(k) and F(k) rows
    let rows: Vec<(Vec<f64>, Vec<f64>)> = gf
        .mats
        .par_iter()
        .map(|g| {
            let mut a_row = vec![0.0; n_k_pts];
            let mut f_row = vec![0.0; n_k_pts];
            if let Some(g_inv) = g.clone().try_inverse() {
                let cpt: Vec<Option<DMatrix<C64>>> = k_tilde
                    .iter()
                    .map(|&kt| {
                        let vk = perturbation_matrix_unchecked(model, v, kt);
                        (&g_inv - vk).try_inverse()
                    })
                    .collect();
                for (ikf, &k) in k_full.iter().enumerate() {
                    if let Some(m) = &cpt[fiber[ikf]] {
                        let gk = periodize_normal(model, m, k);
                        let fk = periodize_anomalous(model, m, k);
                        a_row[ikf] = -gk.im / std::f64::consts::PI;
                        f_row[ikf] = -fk.im / std::f64::consts::PI;
                    }
                }
            }
            (a_row, f_row)
        })
        .collect();

    let n_w = gf.omega.len();
    let mut a_kw = vec![vec![0.0; n_w]; n_k_pts];
    let mut f_kw = vec![vec![0.0; n_w]; n_k_pts];
    for (iw, (a_row, f_row)) in rows.iter().enumerate() {
        for ik in 0..n_k_pts {
            a_kw[ik][iw] = a_row[ik];
            f_kw[ik][iw] = f_row[ik];
        }
    }

    let n_omega: Vec<f64> = (0..n_w)
        .map(|iw| a_kw.iter().map(|row| row[iw]).sum::<f64>() / n_k_pts as f64)
        .collect();

    let fermi: Vec<f64> = gf
        .omega
        .iter()
        .map(|&w| 1.0 / (1.0 + (beta * w).exp()))
        .collect();
    let weighted_sum = |row: &Vec<f64>| -> f64 {
        row.iter().zip(&fermi).map(|(a, f)| a * f).sum::<f64>() * d_omega
    };
    let n_k: Vec<f64> = a_kw.iter().map(weighted_sum).collect();
    let f_k: Vec<f64> = f_kw.iter().map(weighted_sum).collect();

    Ok(LatticeSpectra {
        k_full,
        omega: gf.omega.clone(),
        a_kw,
        f_kw,
        n_omega,
        n_k,
        f_k,
    })
}

/// Scalar observables of the solved lattice.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ScalarObservables {
    /// Average particle density per spin-orbital.
    pub n: f64,
    /// s-wave pairing expectation ⟨c↑ c↓⟩.
    pub delta: f64,
    /// Pair coherence length from the reciprocal-space form; `None` when
    /// the condensate amplitude vanishes.
    pub xi: Option<f64>,
    /// Real-space cross-check of ξ.
    pub xi_real: Option<f64>,
}

/// Compute n, Δ and ξ from the spectra.
pub fn scalar_observables(model: &ClusterModel, spectra: &LatticeSpectra) -> ScalarObservables {
    let n_pts = spectra.n_k.len() as f64;
    let n = spectra.n_k.iter().sum::<f64>() / n_pts;
    let delta = spectra.f_k.iter().sum::<f64>() / n_pts;

    let f_norm: f64 = spectra.f_k.iter().map(|f| f * f).sum();
    let (xi, xi_real) = if f_norm < 1e-16 {
        (None, None)
    } else {
        // reciprocal form: ξ² = Σ_k |∇_k F|² / Σ_k |F|², central differences
        // on the periodic grid (1D here; the 2D grid differentiates both
        // components)
        let xi2 = match model.dimension {
            crate::cluster::Dimension::One => {
                let m = spectra.f_k.len();
                let dk = spectra.k_full[1].x - spectra.k_full[0].x;
                let grad2: f64 = (0..m)
                    .map(|i| {
                        let g =
                            (spectra.f_k[(i + 1) % m] - spectra.f_k[(i + m - 1) % m]) / (2.0 * dk);
                        g * g
                    })
                    .sum();
                grad2 / f_norm
            }
            crate::cluster::Dimension::Two => {
                let n_per_dim = model.n_c * 2;
                let dk = spectra.k_full[1].x - spectra.k_full[0].x;
                let at = |mx: usize, my: usize| spectra.f_k[my * n_per_dim + mx];
                let mut grad2 = 0.0;
                for my in 0..n_per_dim {
                    for mx in 0..n_per_dim {
                        let gx = (at((mx + 1) % n_per_dim, my)
                            - at((mx + n_per_dim - 1) % n_per_dim, my))
                            / (2.0 * dk);
                        let gy = (at(mx, (my + 1) % n_per_dim)
                            - at(mx, (my + n_per_dim - 1) % n_per_dim))
                            / (2.0 * dk);
                        grad2 += gx * gx + gy * gy;
                    }
                }
                grad2 / f_norm
            }
        };
        // real-space form: F(r) = (1/N) Σ_k e^{ik·r} F(k), minimal-image r
        let xi2_real = {
            let n_sites = spectra.k_full.len();
            match model.dimension {
                crate::cluster::Dimension::One => {
                    let len = n_sites as f64 * model.a;
                    let mut num = 0.0;
                    let mut den = 0.0;
                    for m in 0..n_sites {
                        let mut r = m as f64 * model.a;
                        if r > len / 2.0 {
                            r -= len;
                        }
                        let f_r: C64 = spectra
                            .k_full
                            .iter()
                            .zip(&spectra.f_k)
                            .map(|(k, &f)| C64::from_polar(1.0, k.x * r) * f)
                            .sum::<C64>()
                            / C64::new(n_sites as f64, 0.0);
                        let w = f_r.norm_sqr();
                        num += r * r * w;
                        den += w;
                    }
                    if den < 1e-300 {
                        f64::NAN
                    } else {
                        num / den
                    }
                }
                crate::cluster::Dimension::Two => f64::NAN,
            }
        };
        (
            Some(xi2.sqrt()),
            if xi2_real.is_nan() {
                None
            } else {
                Some(xi2_real.sqrt())
            },
        )
    };

    ScalarObservables {
        n,
        delta,
        xi,
        xi_real,
    }
}

/// Bisect the lattice chemical potential until the density hits a target.
/// `solve_n` maps μ to the resulting density (re-solving whatever the
/// caller wants re-solved); returns the μ bracket midpoint after
/// convergence.
pub fn find_mu_for_filling(
    mut lo: f64,
    mut hi: f64,
    n_target: f64,
    tol: f64,
    max_iter: usize,
    mut solve_n: impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    let n_lo = solve_n(lo)?;
    let n_hi = solve_n(hi)?;
    if (n_lo - n_target) * (n_hi - n_target) > 0.0 {
        return Err(VcaError::domain(format!(
            "filling target {n_target} not bracketed: n({lo}) = {n_lo}, n({hi}) = {n_hi}"
        )));
    }
    // density increases with μ
    let (mut lo_val, _) = (n_lo, n_hi);
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let n_mid = solve_n(mid)?;
        if (n_mid - n_target).abs() < tol {
            return Ok(mid);
        }
        if (lo_val - n_target) * (n_mid - n_target) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            lo_val = n_mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
