//! Classical exact-diagonalization backend: full spectrum of H′ in the
//! occupation basis and the Lehmann-form Nambu Green's function.
//!
//! The Lehmann data keeps, for every ordered eigenstate pair (m, n) with
//! nonvanishing amplitude, the pole ω_r = E_n − E_m, the thermal weight
//! P_mn = (e^{−βE_n} + e^{−βE_m})/Z and the amplitudes ⟨φ_m|Ψ_a|φ_n⟩ of the
//! Nambu field vector Ψ = (c_{1↑} ... c_{L_c↑}, c†_{1↓} ... c†_{L_c↓}).
//! Poles at equal energy are merged into matrix-valued residues Ŵ_r, giving
//!
//!   Ĝ′(z)      = Σ_r Ŵ_r / (z − ω_r),
//!   C_ab(τ)    = Σ_r (Ŵ_r)_ab e^{−i ω_r τ}  (the anticommutator correlator
//!                ⟨{Ψ_a(τ), Ψ†_b}⟩, which is what the measurement circuit
//!                reproduces),
//!
//! so the frequency- and time-domain routes share one data structure.

use crate::cluster::{ClusterModel, VariationalParams};
use crate::error::{Result, VcaError};
use crate::greens::NambuGreensFunction;
use crate::pauli::{jw_annihilate, jw_create, PauliOperator, Spin};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

type C64 = Complex64;

/// Dense-diagonalization guard: 2·L_c qubits at most.
pub const MAX_QUBITS: usize = 14;

/// Weight below which a Lehmann pair is dropped.
const PAIR_EPS: f64 = 1e-14;

/// Poles closer than this are merged into one residue matrix.
const POLE_MERGE_EPS: f64 = 1e-9;

/// Full eigensystem of a cluster Hamiltonian plus thermal bookkeeping.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    /// Eigenvalues in ascending order.
    pub energies: DVector<f64>,
    /// Eigenvectors as columns, matching `energies`.
    pub states: DMatrix<C64>,
    /// ln Z at the stored β (log-sum-exp form, always finite).
    pub log_z: f64,
    pub beta: f64,
}

impl EigenSolution {
    /// Partition function Z = Σ_n e^{−βE_n}.
    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    /// Grand potential of the cluster, Ω′ = −T ln Z.
    pub fn omega_prime(&self) -> f64 {
        -self.log_z / self.beta
    }

    /// Boltzmann weights e^{−βE_n}/Z, computed stably.
    pub fn weights(&self) -> Vec<f64> {
        let e0 = self.energies[0];
        let z_sh: f64 = self
            .energies
            .iter()
            .map(|e| (-self.beta * (e - e0)).exp())
            .sum();
        self.energies
            .iter()
            .map(|e| (-self.beta * (e - e0)).exp() / z_sh)
            .collect()
    }
}

/// Diagonalize a Hermitian cluster Hamiltonian.
pub fn diagonalize(h: &PauliOperator, beta: f64) -> Result<EigenSolution> {
    if h.n_qubits() > MAX_QUBITS {
        return Err(VcaError::resource(format!(
            "{} qubits exceeds the dense-diagonalization guard of {MAX_QUBITS}",
            h.n_qubits()
        )));
    }
    if !h.is_hermitian(1e-10) {
        return Err(VcaError::domain("Hamiltonian is not Hermitian"));
    }
    let m = h.to_matrix();
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let mut states = DMatrix::<C64>::zeros(order.len(), order.len());
    for (col, &i) in order.iter().enumerate() {
        states.set_column(col, &eig.eigenvectors.column(i));
    }
    let e0 = energies[0];
    let z_sh: f64 = energies.iter().map(|e| (-beta * (e - e0)).exp()).sum();
    let log_z = -beta * e0 + z_sh.ln();
    Ok(EigenSolution {
        energies,
        states,
        log_z,
        beta,
    })
}

/// The Nambu field operators Ψ_a for a cluster of `l_c` sites.
pub fn nambu_field_operators(l_c: usize) -> Vec<PauliOperator> {
    let mut out = Vec::with_capacity(2 * l_c);
    for site in 1..=l_c {
        out.push(jw_annihilate(site, Spin::Up, l_c).expect("valid site"));
    }
    for site in 1..=l_c {
        out.push(jw_create(site, Spin::Down, l_c).expect("valid site"));
    }
    out
}

/// Per-pair Lehmann amplitudes before pole merging: only pairs with
/// non-negligible thermal weight × amplitude are materialized.
#[derive(Debug, Clone)]
pub struct LehmannData {
    /// Pole positions ω_r = E_n − E_m per retained pair.
    pub omega_mn: Vec<f64>,
    /// Thermal weights P_mn per retained pair.
    pub p_mn: Vec<f64>,
    /// Amplitudes ⟨φ_m|Ψ_a|φ_n⟩; one row per Nambu index, one column per
    /// retained pair.
    pub q: DMatrix<C64>,
}

/// Compact merged form: distinct poles with matrix residues.
#[derive(Debug, Clone)]
pub struct LehmannPoles {
    pub n_orbitals: usize,
    pub omega: Vec<f64>,
    pub weight: Vec<DMatrix<C64>>,
}

/// Build the Lehmann amplitudes of the Nambu Green's function from an
/// eigensolution.
pub fn lehmann_data(sol: &EigenSolution, l_c: usize) -> LehmannData {
    let dim = sol.energies.len();
    let n_orb = 2 * l_c;
    let weights = sol.weights();
    // field operators rotated to the eigenbasis
    let ops: Vec<DMatrix<C64>> = nambu_field_operators(l_c)
        .par_iter()
        .map(|op| {
            let m = op.to_matrix();
            sol.states.adjoint() * m * &sol.states
        })
        .collect();

    let mut omega_mn = Vec::new();
    let mut p_mn = Vec::new();
    let mut cols: Vec<C64> = Vec::new();
    for m in 0..dim {
        for n in 0..dim {
            let p = weights[m] + weights[n];
            let mut amax = 0.0f64;
            for op in &ops {
                amax = amax.max(op[(m, n)].norm_sqr());
            }
            if p * amax < PAIR_EPS {
                continue;
            }
            omega_mn.push(sol.energies[n] - sol.energies[m]);
            p_mn.push(p);
            for op in &ops {
                cols.push(op[(m, n)]);
            }
        }
    }
    let n_pairs = omega_mn.len();
    let q = DMatrix::from_fn(n_orb, n_pairs, |a, r| cols[r * n_orb + a]);
    LehmannData { omega_mn, p_mn, q }
}

impl LehmannData {
    /// Merge equal poles into matrix residues Ŵ_r = Σ P_mn q q†.
    pub fn poles(&self) -> LehmannPoles {
        let n_orb = self.q.nrows();
        let mut idx: Vec<usize> = (0..self.omega_mn.len()).collect();
        idx.sort_by(|&a, &b| self.omega_mn[a].total_cmp(&self.omega_mn[b]));
        let mut omega: Vec<f64> = Vec::new();
        let mut weight: Vec<DMatrix<C64>> = Vec::new();
        for &r in &idx {
            let w = self.omega_mn[r];
            let fresh = match omega.last() {
                Some(&last) => (w - last).abs() > POLE_MERGE_EPS,
                None => true,
            };
            if fresh {
                omega.push(w);
                weight.push(DMatrix::zeros(n_orb, n_orb));
            }
            let wm = weight.last_mut().unwrap();
            let p = self.p_mn[r];
            let col = self.q.column(r);
            for a in 0..n_orb {
                if col[a].norm_sqr() * p < PAIR_EPS * 1e-3 {
                    continue;
                }
                for b in 0..n_orb {
                    wm[(a, b)] += col[a] * col[b].conj() * p;
                }
            }
        }
        LehmannPoles {
            n_orbitals: n_orb,
            omega,
            weight,
        }
    }
}

impl LehmannPoles {
    /// Ĝ′(z) = Σ_r Ŵ_r / (z − ω_r) at one complex frequency.
    pub fn green_at(&self, z: C64) -> DMatrix<C64> {
        let n = self.n_orbitals;
        let mut g = DMatrix::<C64>::zeros(n, n);
        for (w, res) in self.omega.iter().zip(&self.weight) {
            let k = C64::new(1.0, 0.0) / (z - C64::new(*w, 0.0));
            g.zip_apply(res, |gv, rv| *gv += rv * k);
        }
        g
    }

    /// Anticommutator correlators C_ab(τ_n) = Σ_r (Ŵ_r)_ab e^{−i ω_r τ_n}
    /// for every Nambu pair on the given time grid; index = a·2L_c + b.
    pub fn correlators(&self, tau: &[f64]) -> Vec<Vec<C64>> {
        let n = self.n_orbitals;
        let mut out = vec![vec![C64::new(0.0, 0.0); tau.len()]; n * n];
        for (idx, &t) in tau.iter().enumerate() {
            for (w, res) in self.omega.iter().zip(&self.weight) {
                let ph = C64::from_polar(1.0, -w * t);
                for a in 0..n {
                    for b in 0..n {
                        out[a * n + b][idx] += res[(a, b)] * ph;
                    }
                }
            }
        }
        out
    }

    /// First spectral moment matrix Σ_r ω_r Ŵ_r (the 1/z² coefficient).
    pub fn first_moment(&self) -> DMatrix<C64> {
        let n = self.n_orbitals;
        let mut m = DMatrix::<C64>::zeros(n, n);
        for (w, res) in self.omega.iter().zip(&self.weight) {
            m += res * C64::new(*w, 0.0);
        }
        m
    }

    /// Total spectral weight Σ_r Ŵ_r (the anticommutator sum rule; the
    /// identity matrix for a complete fermion basis).
    pub fn total_weight(&self) -> DMatrix<C64> {
        let n = self.n_orbitals;
        let mut m = DMatrix::<C64>::zeros(n, n);
        for res in &self.weight {
            m += res;
        }
        m
    }
}

/// Evaluate the Lehmann Green's function on a real frequency grid.
pub fn lehmann_green(
    poles: &LehmannPoles,
    omega_grid: &[f64],
    eta: f64,
) -> Result<NambuGreensFunction> {
    if !(eta > 0.0) {
        return Err(VcaError::domain("broadening η must be positive"));
    }
    if omega_grid.is_empty() {
        return Err(VcaError::domain("empty frequency grid"));
    }
    let mats: Vec<DMatrix<C64>> = omega_grid
        .par_iter()
        .map(|&w| poles.green_at(C64::new(w, eta)))
        .collect();
    Ok(NambuGreensFunction {
        omega: omega_grid.to_vec(),
        eta,
        mats,
    })
}

/// Solve a cluster (Hamiltonian → eigensystem → merged Lehmann poles).
pub fn solve_cluster(
    model: &ClusterModel,
    v: &VariationalParams,
) -> Result<(EigenSolution, LehmannPoles)> {
    let h = crate::cluster::build_cluster_hamiltonian(model, v)?;
    let sol = diagonalize(&h.total, model.beta())?;
    let poles = lehmann_data(&sol, model.l_c).poles();
    Ok((sol, poles))
}

/// Result of the imaginary-frequency occupation sum.
#[derive(Debug, Clone)]
pub struct MatsubaraOccupation {
    pub n_k: Vec<f64>,
    /// Estimated magnitude of the truncated tail.
    pub achieved_tol: f64,
    pub converged: bool,
}

/// Momentum distribution N(k) from a Matsubara sum over the CPT-periodized
/// Green's function: N(k) = ½ + 2T Σ_{n≥0} Re[𝒢_cpt(k, iω_n)], accelerated
/// by subtracting a single-pole reference tail that is summed analytically.
///
/// This route needs no broadening η and serves as the oracle for the
/// time-domain pipeline.
pub fn matsubara_occupation(
    model: &ClusterModel,
    v: &VariationalParams,
    poles: &LehmannPoles,
    n_freq: usize,
    tol: f64,
) -> Result<MatsubaraOccupation> {
    let temp = model.temperature;
    let beta = model.beta();
    let k_full = model.k_full_grid();

    // single-pole reference ε_ref(k) from the high-frequency expansion
    let w_big = 1e4;
    let fermi = |e: f64| 1.0 / (1.0 + (beta * e).exp());

    let values: Vec<(f64, f64)> = k_full
        .par_iter()
        .map(|&k| {
            let g_big =
                crate::observables::cpt_periodized_at(model, v, poles, k, C64::new(0.0, w_big));
            let eps_ref = -(C64::new(1.0, 0.0) / g_big).re;
            let mut acc = 0.0f64;
            let mut last_mag = 0.0f64;
            for n in 0..n_freq {
                let wn = (2.0 * n as f64 + 1.0) * std::f64::consts::PI * temp;
                let z = C64::new(0.0, wn);
                let g = crate::observables::cpt_periodized_at(model, v, poles, k, z);
                let g_ref = C64::new(1.0, 0.0) / (z - C64::new(eps_ref, 0.0));
                let term = (g - g_ref).re;
                acc += term;
                last_mag = term.abs();
            }
            (
                fermi(eps_ref) + 2.0 * temp * acc,
                2.0 * temp * last_mag * n_freq as f64,
            )
        })
        .collect();

    let achieved = values.iter().map(|v| v.1).fold(0.0, f64::max);
    let n_k = values.into_iter().map(|v| v.0).collect();
    let converged = achieved <= tol;
    if !converged {
        // numerical-accuracy warning travels in the result, not as an error
        eprintln!(
            "warning: Matsubara sum reached tail estimate {achieved:.2e} > tol {tol:.2e} \
             with {n_freq} frequencies"
        );
    }
    Ok(MatsubaraOccupation {
        n_k,
        achieved_tol: achieved,
        converged,
    })
}
