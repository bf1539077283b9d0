//! Desk-scale density-matrix emulation of the quantum measurement
//! subroutine: Gibbs-state input (exact, or prepared by the partial
//! phase-estimation circuit), controlled evolution O_μν(τ) = U†(τ)σ_ν U(τ)σ_μ
//! (exact or Trotterized), and extraction of the correlation function from
//! the ancilla outcome probabilities
//!
//!   P(M=0, τ) = ½(1 + ½C(τ)),   P(M=1, τ) = ½(1 − ½C(τ)),
//!   C(τ) = 2(P₀ − P₁) = Tr[ρ O†_μν + O_μν ρ] = ⟨{σ_ν(τ), σ_μ}⟩.
//!
//! The quadrature observables X = c + c† and Y = −i(c − c†) square to the
//! identity, which is what makes the τ = 0 check P(M=0) = 1 exact.

use crate::cluster::ClusterHamiltonian;
use crate::error::{Result, VcaError};
use crate::greens::{invert_xy, XyTraces};
use crate::pauli::{jw_hermitian_pair, PauliOperator, Spin};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

type C64 = Complex64;

/// Dense density matrix on an n-qubit register.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub n_qubits: usize,
    pub mat: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Check trace, Hermiticity and the positive-semidefinite floor.
    pub fn validate(&self) -> Result<()> {
        let tr: C64 = self.mat.diagonal().iter().sum();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(VcaError::domain(format!("trace {} ≠ 1", tr.re)));
        }
        if (&self.mat - self.mat.adjoint()).norm() > 1e-10 {
            return Err(VcaError::domain("density matrix is not Hermitian"));
        }
        let eig = self.mat.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&p| p < -1e-9) {
            return Err(VcaError::domain("density matrix is not positive"));
        }
        Ok(())
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }
}

/// Exact Gibbs state ρ = e^{−βH}/Z via eigendecomposition. Negative β is
/// rejected here; inverted populations are reachable only through
/// [`prepare_gibbs_riera`].
pub fn exact_gibbs(h: &PauliOperator, beta: f64) -> Result<DensityMatrix> {
    if beta < 0.0 {
        return Err(VcaError::domain(
            "negative β requires the phase-estimation preparation path",
        ));
    }
    let sol = crate::ed::diagonalize(h, beta.max(1e-300))?;
    Ok(gibbs_from_solution(&sol, beta, h.n_qubits()))
}

fn gibbs_from_solution(
    sol: &crate::ed::EigenSolution,
    beta: f64,
    n_qubits: usize,
) -> DensityMatrix {
    // shift from whichever spectrum edge dominates, so the weights stay in
    // [0, 1] for either sign of β (negative β = inverted population)
    let e_ref = if beta >= 0.0 {
        sol.energies[0]
    } else {
        sol.energies[sol.energies.len() - 1]
    };
    let w: Vec<f64> = sol
        .energies
        .iter()
        .map(|e| (-beta * (e - e_ref)).exp())
        .collect();
    let z: f64 = w.iter().sum();
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(
        w.len(),
        w.iter().map(|&x| C64::new(x / z, 0.0)),
    ));
    DensityMatrix {
        n_qubits,
        mat: &sol.states * diag * sol.states.adjoint(),
    }
}

/// Evolution backend for the controlled-U_S(τ) gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Evolution {
    Exact,
    Trotter { n_t: usize },
}

/// Ancilla probability trajectory of one operator pair.
#[derive(Debug, Clone)]
pub struct MeasurementTrace {
    pub tau: Vec<f64>,
    pub p0: Vec<f64>,
    pub p1: Vec<f64>,
    pub c: Vec<f64>,
}

/// Reproducible binomial shot noise applied to the probability readout.
pub struct ShotSampler {
    pub shots: u64,
    rng: ChaCha8Rng,
}

impl ShotSampler {
    pub fn new(shots: u64, seed: u64) -> Self {
        ShotSampler {
            shots,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn sample(&mut self, p0: f64) -> f64 {
        let p = p0.clamp(0.0, 1.0);
        let bin = Binomial::new(self.shots, p).expect("valid binomial");
        bin.sample(&mut self.rng) as f64 / self.shots as f64
    }
}

/// Emulator for one cluster Hamiltonian: holds the eigensystem for exact
/// evolution and the named Hermitian parts for the Trotter decomposition.
pub struct Emulator {
    pub n_qubits: usize,
    parts: Vec<PauliOperator>,
    energies: DVector<f64>,
    states: DMatrix<C64>,
}

impl Emulator {
    pub fn new(h: &ClusterHamiltonian) -> Result<Self> {
        let sol = crate::ed::diagonalize(&h.total, 1.0)?;
        Ok(Emulator {
            n_qubits: h.total.n_qubits(),
            parts: h.parts.iter().map(|(_, p)| p.clone()).collect(),
            energies: sol.energies,
            states: sol.states,
        })
    }

    /// Exact propagator e^{−iHτ}.
    pub fn exact_unitary(&self, tau: f64) -> DMatrix<C64> {
        let phases = DMatrix::from_diagonal(&DVector::from_iterator(
            self.energies.len(),
            self.energies
                .iter()
                .map(|&e| C64::from_polar(1.0, -e * tau)),
        ));
        &self.states * phases * self.states.adjoint()
    }

    /// Partition the Hamiltonian parts into mutually commuting groups
    /// (greedy, deterministic order).
    pub fn commuting_groups(&self) -> Vec<PauliOperator> {
        let mut groups: Vec<(PauliOperator, Vec<usize>)> = Vec::new();
        'parts: for (idx, part) in self.parts.iter().enumerate() {
            for (sum, members) in groups.iter_mut() {
                let commutes = members
                    .iter()
                    .all(|&m| self.parts[m].commutator(part).is_zero(1e-10));
                if commutes {
                    *sum = sum.plus(part);
                    members.push(idx);
                    continue 'parts;
                }
            }
            groups.push((part.clone(), vec![idx]));
        }
        groups.into_iter().map(|(sum, _)| sum).collect()
    }

    /// One first-order Trotter-Suzuki approximation of e^{−iHτ} built from
    /// n_T repetitions of the split-group product.
    pub fn trotter_unitary(&self, tau: f64, n_t: usize) -> Result<DMatrix<C64>> {
        if n_t == 0 {
            return Err(VcaError::domain("n_T must be ≥ 1"));
        }
        let dim = 1 << self.n_qubits;
        let groups = self.commuting_groups();
        let mut step = DMatrix::<C64>::identity(dim, dim);
        for g in &groups {
            step *= hermitian_exp(&g.to_matrix(), -tau / n_t as f64);
        }
        let mut u = DMatrix::<C64>::identity(dim, dim);
        for _ in 0..n_t {
            u = &u * &step;
        }
        Ok(u)
    }

    /// Propagators on a τ grid. The Trotter backend steps the grid
    /// cumulatively (requires a uniform grid starting at 0), mirroring how
    /// a device would chain Δτ evolutions.
    pub fn evolution_set(&self, tau: &[f64], ev: Evolution) -> Result<Vec<DMatrix<C64>>> {
        match ev {
            Evolution::Exact => Ok(tau.par_iter().map(|&t| self.exact_unitary(t)).collect()),
            Evolution::Trotter { n_t } => {
                if tau.is_empty() {
                    return Ok(Vec::new());
                }
                let dtau = if tau.len() > 1 {
                    tau[1] - tau[0]
                } else {
                    tau[0]
                };
                for (n, &t) in tau.iter().enumerate() {
                    if (t - n as f64 * dtau).abs() > 1e-9 {
                        return Err(VcaError::domain(
                            "Trotter evolution needs a uniform τ grid starting at 0",
                        ));
                    }
                }
                let dim = 1 << self.n_qubits;
                let step = self.trotter_unitary(dtau, n_t)?;
                let mut us = Vec::with_capacity(tau.len());
                let mut u = DMatrix::<C64>::identity(dim, dim);
                for _ in 0..tau.len() {
                    us.push(u.clone());
                    u = &u * &step;
                }
                Ok(us)
            }
        }
    }

    /// Measure one probability trajectory: `evolved` is the operator that
    /// carries the time argument (σ_ν in O_μν = U†σ_ν U σ_μ), `fixed` is
    /// applied first (σ_μ). Returns the anticommutator correlator
    /// C(τ) = ⟨{evolved(τ), fixed}⟩ recovered from P₀ − P₁.
    pub fn correlation_trace(
        &self,
        rho: &DensityMatrix,
        evolved: &PauliOperator,
        fixed: &PauliOperator,
        tau: &[f64],
        us: &[DMatrix<C64>],
        noise: Option<&mut ShotSampler>,
    ) -> Result<MeasurementTrace> {
        for (name, op) in [("σ_ν", evolved), ("σ_μ", fixed)] {
            if !op.is_hermitian(1e-10) {
                return Err(VcaError::domain(format!("{name} is not Hermitian")));
            }
            let sq = op.mul(op);
            if !sq
                .minus(&PauliOperator::identity(self.n_qubits))
                .is_zero(1e-10)
            {
                return Err(VcaError::domain(format!(
                    "{name} must square to the identity (operator norm 1)"
                )));
            }
        }
        let ev = evolved.to_matrix();
        let fx = fixed.to_matrix();
        let raw: Vec<f64> = us
            .par_iter()
            .map(|u| {
                // O = U†·evolved·U·fixed; C = 2 Re Tr[Oρ]
                let o = u.adjoint() * &ev * u * &fx;
                2.0 * (o * &rho.mat).trace().re
            })
            .collect();

        let mut p0 = Vec::with_capacity(raw.len());
        let mut p1 = Vec::with_capacity(raw.len());
        let mut c_out = Vec::with_capacity(raw.len());
        let mut noise = noise;
        for &c_val in &raw {
            let prob0 = 0.5 * (1.0 + 0.5 * c_val);
            let prob0 = match noise.as_deref_mut() {
                Some(sampler) => sampler.sample(prob0),
                None => prob0,
            };
            let prob1 = 1.0 - prob0;
            p0.push(prob0);
            p1.push(prob1);
            c_out.push(2.0 * (prob0 - prob1));
        }
        Ok(MeasurementTrace {
            tau: tau.to_vec(),
            p0,
            p1,
            c: c_out,
        })
    }
}

/// e^{i·scale·H} for Hermitian H.
fn hermitian_exp(h: &DMatrix<C64>, scale: f64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .map(|&e| C64::from_polar(1.0, e * scale)),
    ));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// One labelled probability trajectory of the full Nambu measurement set.
#[derive(Debug, Clone)]
pub struct LabelledTrace {
    /// Operator carrying the time argument, e.g. "X(2,dn)".
    pub evolved: String,
    /// Operator applied at τ = 0.
    pub fixed: String,
    pub trace: MeasurementTrace,
}

/// All measured traces plus the reconstructed fermionic correlators
/// (Nambu-indexed, row-major a·2L_c + b).
pub struct NambuMeasurement {
    pub tau: Vec<f64>,
    pub traces: Vec<LabelledTrace>,
    pub correlators: Vec<Vec<C64>>,
}

/// Orbital labels in Nambu order: a < L_c ↦ (a+1, ↑), a ≥ L_c ↦ (a−L_c+1, ↓).
fn orbital_of(a: usize, l_c: usize) -> (usize, Spin) {
    if a < l_c {
        (a + 1, Spin::Up)
    } else {
        (a - l_c + 1, Spin::Down)
    }
}

/// Run the measurement circuit for every quadrature pair needed to
/// reconstruct the 2L_c × 2L_c matrix of anticommutator correlators
/// ⟨{Ψ_a(τ), Ψ†_b}⟩ (4L_c² operator pairs, four traces each).
pub fn measure_nambu_correlators(
    emu: &Emulator,
    rho: &DensityMatrix,
    l_c: usize,
    tau: &[f64],
    evolution: Evolution,
    shots: Option<(u64, u64)>,
) -> Result<NambuMeasurement> {
    let n_orb = 2 * l_c;
    let us = emu.evolution_set(tau, evolution)?;

    let quads: Vec<(PauliOperator, PauliOperator)> = (0..n_orb)
        .map(|o| {
            let (site, spin) = orbital_of(o, l_c);
            jw_hermitian_pair(site, spin, l_c)
        })
        .collect::<Result<_>>()?;
    let label = |o: usize, which: &str| {
        let (site, spin) = orbital_of(o, l_c);
        format!("{which}({site},{spin})")
    };

    let mut sampler = shots.map(|(s, seed)| ShotSampler::new(s, seed));
    let mut traces = Vec::new();
    // measured[oa][ob] = (xx, yy, yx, xy) with the first index evolved
    let mut measured: Vec<Vec<[Vec<f64>; 4]>> = Vec::with_capacity(n_orb);
    for oa in 0..n_orb {
        let mut row = Vec::with_capacity(n_orb);
        for ob in 0..n_orb {
            let mut run = |ev_op: &PauliOperator,
                           fx_op: &PauliOperator,
                           ev_lbl: String,
                           fx_lbl: String|
             -> Result<Vec<f64>> {
                let tr = emu.correlation_trace(rho, ev_op, fx_op, tau, &us, sampler.as_mut())?;
                let c = tr.c.clone();
                traces.push(LabelledTrace {
                    evolved: ev_lbl,
                    fixed: fx_lbl,
                    trace: tr,
                });
                Ok(c)
            };
            let (xa, ya) = &quads[oa];
            let (xb, yb) = &quads[ob];
            let xx = run(xa, xb, label(oa, "X"), label(ob, "X"))?;
            let yy = run(ya, yb, label(oa, "Y"), label(ob, "Y"))?;
            let yx = run(ya, xb, label(oa, "Y"), label(ob, "X"))?;
            let xy = run(xa, yb, label(oa, "X"), label(ob, "Y"))?;
            row.push([xx, yy, yx, xy]);
        }
        measured.push(row);
    }

    // assemble the Nambu channels from the quadrature inversions
    let mut correlators = vec![Vec::new(); n_orb * n_orb];
    for a in 0..n_orb {
        for b in 0..n_orb {
            let (oa, ob) = (a, b);
            let m = &measured[oa][ob];
            let f = invert_xy(&XyTraces {
                tau: tau.to_vec(),
                xx: m[0].clone(),
                yy: m[1].clone(),
                yx: m[2].clone(),
                xy: m[3].clone(),
            })?;
            let series = match (a < l_c, b < l_c) {
                (true, true) => f.cc_dag,
                (true, false) => f.cc,
                (false, true) => f.cdag_cdag,
                (false, false) => f.cdag_c,
            };
            correlators[a * n_orb + b] = series;
        }
    }
    Ok(NambuMeasurement {
        tau: tau.to_vec(),
        traces,
        correlators,
    })
}

/// Configuration of the phase-estimation Gibbs preparation.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct GibbsPrepConfig {
    /// Bath qubits.
    pub m: usize,
    /// Phase-register width.
    pub r: u32,
    /// Measured prefix width.
    pub q: u32,
    /// Bath coupling scale; the bath splitting is η = √(λ/m)·‖H′‖∞.
    pub lambda: f64,
    pub target_beta: f64,
}

impl GibbsPrepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(VcaError::config("bath needs m ≥ 1 qubits"));
        }
        if self.q < 1 || self.r <= self.q {
            return Err(VcaError::config("register widths must satisfy r > q ≥ 1"));
        }
        if !(self.lambda > 0.0) {
            return Err(VcaError::config("λ must be positive"));
        }
        Ok(())
    }
}

/// Outcome of one Gibbs preparation run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GibbsPrepOutcome {
    pub s_star: u64,
    /// β implied by s_* through the readout formula.
    pub beta_formula: f64,
    /// β fitted from the prepared state (minimal trace distance to a Gibbs
    /// family member).
    pub beta_fit: f64,
    /// Readout resolution bound δβ.
    pub delta_beta: f64,
    /// Trace distance D(ρ_QC^S, ρ_Gibbs(β_formula)).
    pub trace_distance: f64,
    /// The preparation error bound evaluated at β_formula (the
    /// m-exponentially-small additive constant is omitted).
    pub error_bound: f64,
    pub runs_used: u64,
    pub expected_runs_bound: f64,
    #[serde(skip)]
    pub rho_s: DensityMatrix,
}

fn dirichlet_weight(phi: f64, s: u64, r: u32) -> f64 {
    let two_r = (1u64 << r) as f64;
    let y = phi - s as f64 / two_r;
    let den = (std::f64::consts::PI * y).sin();
    if den.abs() < 1e-12 {
        return 1.0;
    }
    let num = (std::f64::consts::PI * y * two_r).sin();
    let ratio = num / (two_r * den);
    ratio * ratio
}

fn binomial_coeff(m: usize, w: usize) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..w {
        acc = acc * (m - i) as f64 / (i + 1) as f64;
    }
    acc
}

fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let eig = (a - b).symmetric_eigen();
    0.5 * eig.eigenvalues.iter().map(|v| v.abs()).sum::<f64>()
}

/// Prepare an approximate Gibbs state of `h_sys` through the partial
/// phase-estimation protocol: a bath of m spins at splitting η is attached,
/// the joint register starts fully mixed, the phase register is read out
/// and runs are repeated until the prefix s_* matching the target β is
/// observed. The system channel is returned together with the bound
/// bookkeeping.
pub fn prepare_gibbs_riera(
    h_sys: &PauliOperator,
    cfg: &GibbsPrepConfig,
    seed: u64,
) -> Result<GibbsPrepOutcome> {
    cfg.validate()?;
    let n_sys = h_sys.n_qubits();
    if n_sys + cfg.m + cfg.r as usize > 16 {
        return Err(VcaError::resource(
            "system + bath + phase register exceeds the dense emulation guard",
        ));
    }
    let sol = crate::ed::diagonalize(h_sys, 1.0)?;
    let dim_s = sol.energies.len();
    let h_norm = sol.energies.iter().fold(0.0f64, |acc, &e| acc.max(e.abs()));
    if h_norm == 0.0 {
        return Err(VcaError::domain("system Hamiltonian is zero"));
    }
    let eta = (cfg.lambda / cfg.m as f64).sqrt() * h_norm;
    let hb_norm = cfg.m as f64 * eta;
    let kappa = 1.0 + h_norm / hb_norm;

    // β(s) readout and its resolution
    let two_q = (1u64 << cfg.q) as f64;
    let beta_of = |s: u64| (4.0 / eta) * (0.5 - (s as f64 / two_q) * kappa);
    let delta_beta = (4.0 / (eta * two_q)) * kappa;

    // reachability of the target
    let n_prefix = 1u64 << cfg.q;
    let (s_target, beta_err) = (0..n_prefix)
        .map(|s| (s, (beta_of(s) - cfg.target_beta).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if beta_err > delta_beta {
        return Err(VcaError::config(format!(
            "target β = {} unreachable: nearest readout β = {} differs by {beta_err:.3e} \
             > δβ = {delta_beta:.3e}; increase q",
            cfg.target_beta,
            beta_of(s_target)
        )));
    }

    // uncoupled spectrum E_k = E_p + η·w with bath multiplicity C(m, w)
    let mut levels: Vec<(f64, f64, usize)> = Vec::new(); // (E_k, multiplicity, p)
    for p in 0..dim_s {
        for w in 0..=cfg.m {
            levels.push((
                sol.energies[p] + eta * w as f64,
                binomial_coeff(cfg.m, w),
                p,
            ));
        }
    }
    let h0_norm = levels
        .iter()
        .fold(0.0f64, |acc, &(e, _, _)| acc.max(e.abs()));
    let d_total = (1u64 << cfg.m) as f64 * dim_s as f64;

    // prefix window weights g(k, s*) = Σ_{s in window} |α_s(φ_k)|²
    let width = 1u64 << (cfg.r - cfg.q);
    let window_weight = |phi: f64, s_star: u64| -> f64 {
        let start = s_star * width;
        (start..start + width)
            .map(|s| dirichlet_weight(phi, s, cfg.r))
            .sum()
    };
    let prefix_probs: Vec<f64> = (0..n_prefix)
        .map(|s_star| {
            levels
                .iter()
                .map(|&(e, mult, _)| mult * window_weight(e / h0_norm, s_star) / d_total)
                .sum()
        })
        .collect();

    // rejection sampling of the measurement until the target prefix is hit
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total_p: f64 = prefix_probs.iter().sum();
    let mut runs_used = 0u64;
    loop {
        runs_used += 1;
        if runs_used > 1_000_000 {
            return Err(VcaError::numerics(
                "prefix rejection sampling did not hit the target window",
            ));
        }
        let u: f64 = rng.gen::<f64>() * total_p;
        let mut acc = 0.0;
        let mut drawn = n_prefix - 1;
        for (s, &p) in prefix_probs.iter().enumerate() {
            acc += p;
            if u <= acc {
                drawn = s as u64;
                break;
            }
        }
        if drawn == s_target {
            break;
        }
    }
    let s_star = s_target;
    let beta_formula = beta_of(s_star);

    // post-measurement system state: bath traced out in the product basis
    let mut lambda_p = vec![0.0f64; dim_s];
    for &(e, mult, p) in &levels {
        lambda_p[p] += mult * window_weight(e / h0_norm, s_star);
    }
    let norm: f64 = lambda_p.iter().sum();
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(
        dim_s,
        lambda_p.iter().map(|&l| C64::new(l / norm, 0.0)),
    ));
    let rho_s = DensityMatrix {
        n_qubits: n_sys,
        mat: &sol.states * diag * sol.states.adjoint(),
    };

    // distance to the exact Gibbs state at the readout β
    let gibbs = gibbs_from_solution(&sol, beta_formula, n_sys);
    let dist = trace_distance(&rho_s.mat, &gibbs.mat);

    // effective β of the prepared state: regression of ln(level weight /
    // degeneracy) against level energy, the slope a Gibbs state would show
    let beta_fit = {
        let mut levels_grouped: Vec<(f64, f64, f64)> = Vec::new(); // (E, Σλ, count)
        for p in 0..dim_s {
            let e = sol.energies[p];
            match levels_grouped.last_mut() {
                Some(last) if (last.0 - e).abs() < 1e-9 => {
                    last.1 += lambda_p[p] / norm;
                    last.2 += 1.0;
                }
                _ => levels_grouped.push((e, lambda_p[p] / norm, 1.0)),
            }
        }
        let pts: Vec<(f64, f64)> = levels_grouped
            .iter()
            .filter(|(_, l, g)| *l / *g > 1e-12)
            .map(|(e, l, g)| (*e, (l / g).ln()))
            .collect();
        if pts.len() < 2 {
            beta_formula
        } else {
            let n = pts.len() as f64;
            let me = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let cov: f64 = pts.iter().map(|p| (p.0 - me) * (p.1 - ml)).sum();
            let var: f64 = pts.iter().map(|p| (p.0 - me) * (p.0 - me)).sum();
            -cov / var
        }
    };

    let r_minus_q = (cfg.r - cfg.q) as f64;
    let exponent = 2.0 / cfg.lambda
        + beta_formula * h_norm
        + cfg.lambda * (h_norm * beta_formula).powi(2) / 8.0;
    let error_bound = (1.0 + (r_minus_q * std::f64::consts::LN_2) / std::f64::consts::PI.powi(2))
        * exponent.exp()
        / 2f64.powf(r_minus_q - 2.0)
        + 0.5 * ((2.0 / cfg.lambda).exp() - 1.0);
    let expected_runs_bound =
        two_q * (std::f64::consts::PI / (2.0 * cfg.m as f64)).sqrt() * exponent.exp();

    Ok(GibbsPrepOutcome {
        s_star,
        beta_formula,
        beta_fit,
        delta_beta,
        trace_distance: dist,
        error_bound,
        runs_used,
        expected_runs_bound,
        rho_s,
    })
}
