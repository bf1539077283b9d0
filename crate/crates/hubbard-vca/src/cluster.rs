//! Cluster geometry, the cluster Hamiltonian H′ and the one-body matrices
//! t̂(k̃), t̂′ and V̂(k̃) of the superlattice construction.
//!
//! The lattice Hamiltonian is H = −t Σ_{⟨ij⟩σ} c†_{iσ}c_{jσ} − U Σ_i n_{i↑}n_{i↓}
//! − μ Σ_{iσ} n_{iσ} (attractive interaction for U > 0). A cluster keeps the
//! hopping and interaction terms, replaces −μ by the variational −μ′ and adds
//! the Weiss fields: s-wave pairing Δ′, d-wave pairing Δ′_d and the Néel
//! field M′ (the latter two on the 2×2 square cluster only).
//!
//! Nambu convention: Ψ† = (c†_{1↑} ... c†_{L_c↑}, c_{1↓} ... c_{L_c↓}), so
//! one-body matrices are 2L_c × 2L_c with the particle block up-left. The
//! operator identity H_one-body = Ψ† t̂′ Ψ + tr B_↓ fixes all signs; the
//! builder is tested against that identity.

use crate::error::{Result, VcaError};
use crate::pauli::{jw_create, jw_number, PauliOperator, Spin};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C64 = Complex64;

fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Lattice dimensionality. The 2D case is the fixed 2×2 square cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Dimension {
    One,
    Two,
}

impl TryFrom<u8> for Dimension {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Dimension::One),
            2 => Ok(Dimension::Two),
            _ => Err(format!("dimension must be 1 or 2, got {v}")),
        }
    }
}

impl From<Dimension> for u8 {
    fn from(d: Dimension) -> u8 {
        match d {
            Dimension::One => 1,
            Dimension::Two => 2,
        }
    }
}

/// A wavevector; `y` is zero for 1D models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KVec {
    pub x: f64,
    pub y: f64,
}

impl KVec {
    pub fn new(x: f64, y: f64) -> Self {
        KVec { x, y }
    }
    pub fn dot(&self, r: &RVec) -> f64 {
        self.x * r.x + self.y * r.y
    }
}

/// A real-space displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RVec {
    pub x: f64,
    pub y: f64,
}

/// Lattice and cluster description plus physical couplings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterModel {
    pub dimension: Dimension,
    /// Sites per cluster (2D: must be 4, the 2×2 square).
    pub l_c: usize,
    /// Number of clusters per dimension (the k̃-grid size).
    pub n_c: usize,
    /// Lattice spacing.
    pub a: f64,
    /// Hopping energy; the reference energy unit.
    pub t: f64,
    /// On-site attraction strength (H_int = −U Σ n↑n↓).
    pub u: f64,
    /// Lattice chemical potential.
    pub mu: f64,
    /// Temperature in units of t/k_B.
    pub temperature: f64,
}

impl ClusterModel {
    pub fn validate(&self) -> Result<()> {
        if self.l_c < 1 {
            return Err(VcaError::config("l_c must be ≥ 1"));
        }
        if self.n_c < 1 {
            return Err(VcaError::config("n_c must be ≥ 1"));
        }
        if !(self.temperature > 0.0) {
            return Err(VcaError::config("temperature must be > 0"));
        }
        if !(self.a > 0.0) {
            return Err(VcaError::config("lattice spacing must be > 0"));
        }
        if self.dimension == Dimension::Two && self.l_c != 4 {
            return Err(VcaError::config(
                "2D geometry is the fixed 2×2 cluster: l_c must be 4",
            ));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    /// Cluster extent (number of sites) along each dimension.
    pub fn cluster_extent(&self) -> usize {
        match self.dimension {
            Dimension::One => self.l_c,
            Dimension::Two => 2,
        }
    }

    /// Position of site i (1-based, labels match the reference matrices:
    /// 1D a chain along x, 2D the square 1=(0,0), 2=(a,0), 3=(0,a), 4=(a,a)).
    pub fn site_position(&self, site: usize) -> RVec {
        let a = self.a;
        match self.dimension {
            Dimension::One => RVec {
                x: (site - 1) as f64 * a,
                y: 0.0,
            },
            Dimension::Two => {
                let idx = site - 1;
                RVec {
                    x: (idx % 2) as f64 * a,
                    y: (idx / 2) as f64 * a,
                }
            }
        }
    }

    /// Intra-cluster nearest-neighbor bonds (i < j, 1-based).
    pub fn intra_bonds(&self) -> Vec<(usize, usize)> {
        match self.dimension {
            Dimension::One => (1..self.l_c).map(|i| (i, i + 1)).collect(),
            Dimension::Two => vec![(1, 2), (1, 3), (2, 4), (3, 4)],
        }
    }

    /// Directed inter-cluster bonds `(i, j, R)`: site i of the home cluster
    /// hops to site j of the cluster displaced by the superlattice vector R.
    pub fn inter_bonds(&self) -> Vec<(usize, usize, RVec)> {
        let a = self.a;
        match self.dimension {
            Dimension::One => {
                let span = self.l_c as f64 * a;
                vec![(self.l_c, 1, RVec { x: span, y: 0.0 })]
            }
            Dimension::Two => vec![
                (2, 1, RVec { x: 2.0 * a, y: 0.0 }),
                (4, 3, RVec { x: 2.0 * a, y: 0.0 }),
                (3, 1, RVec { x: 0.0, y: 2.0 * a }),
                (4, 2, RVec { x: 0.0, y: 2.0 * a }),
            ],
        }
    }

    /// e^{iQ·R_i} for Q = (π/a, π/a): the antiferromagnetic sign of site i.
    pub fn neel_sign(&self, site: usize) -> f64 {
        let r = self.site_position(site);
        let q = std::f64::consts::PI / self.a;
        (q * (r.x + r.y)).cos().round()
    }

    /// Reduced-zone wavevectors k̃ = 2πq/(Na), q = 0..N_c−1 per dimension,
    /// with N = N_c · (cluster extent) sites per dimension.
    pub fn k_tilde_grid(&self) -> Vec<KVec> {
        let n_per_dim = self.n_c * self.cluster_extent();
        let step = 2.0 * std::f64::consts::PI / (n_per_dim as f64 * self.a);
        match self.dimension {
            Dimension::One => (0..self.n_c)
                .map(|q| KVec::new(q as f64 * step, 0.0))
                .collect(),
            Dimension::Two => {
                let mut out = Vec::with_capacity(self.n_c * self.n_c);
                for qy in 0..self.n_c {
                    for qx in 0..self.n_c {
                        out.push(KVec::new(qx as f64 * step, qy as f64 * step));
                    }
                }
                out
            }
        }
    }

    /// Full reciprocal-lattice grid k = 2πm/(Na), m = 0..N−1 per dimension.
    pub fn k_full_grid(&self) -> Vec<KVec> {
        let n_per_dim = self.n_c * self.cluster_extent();
        let step = 2.0 * std::f64::consts::PI / (n_per_dim as f64 * self.a);
        match self.dimension {
            Dimension::One => (0..n_per_dim)
                .map(|m| KVec::new(m as f64 * step, 0.0))
                .collect(),
            Dimension::Two => {
                let mut out = Vec::with_capacity(n_per_dim * n_per_dim);
                for my in 0..n_per_dim {
                    for mx in 0..n_per_dim {
                        out.push(KVec::new(mx as f64 * step, my as f64 * step));
                    }
                }
                out
            }
        }
    }

    /// Fold a full-grid index m (per dimension) onto the reduced-zone index
    /// q = m mod N_c.
    pub fn fold_index(&self, m: usize) -> usize {
        m % self.n_c
    }

    /// Number of lattice sites N (total over all dimensions).
    pub fn n_sites(&self) -> usize {
        match self.dimension {
            Dimension::One => self.n_c * self.l_c,
            Dimension::Two => (self.n_c * 2) * (self.n_c * 2),
        }
    }

    /// Number of clusters in the k̃ grid.
    pub fn n_clusters(&self) -> usize {
        match self.dimension {
            Dimension::One => self.n_c,
            Dimension::Two => self.n_c * self.n_c,
        }
    }
}

/// Weiss fields of the variational cluster Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct VariationalParams {
    pub mu_prime: f64,
    pub delta_prime: f64,
    #[serde(default)]
    pub delta_d_prime: f64,
    #[serde(default)]
    pub m_prime: f64,
}

impl VariationalParams {
    pub fn new(mu_prime: f64, delta_prime: f64) -> Self {
        VariationalParams {
            mu_prime,
            delta_prime,
            delta_d_prime: 0.0,
            m_prime: 0.0,
        }
    }

    pub fn validate(&self, model: &ClusterModel) -> Result<()> {
        if model.dimension == Dimension::One && (self.delta_d_prime != 0.0 || self.m_prime != 0.0) {
            return Err(VcaError::config(
                "d-wave pairing and Néel fields require the 2×2 square cluster",
            ));
        }
        Ok(())
    }
}

/// d_ij: +1 for x-neighbors, −1 for y-neighbors, 0 otherwise.
pub fn d_wave_sign(model: &ClusterModel, i: usize, j: usize) -> f64 {
    let ri = model.site_position(i);
    let rj = model.site_position(j);
    let dx = ri.x - rj.x;
    let dy = ri.y - rj.y;
    let a = model.a;
    if dy == 0.0 && dx.abs() == a {
        1.0
    } else if dx == 0.0 && dy.abs() == a {
        -1.0
    } else {
        0.0
    }
}

/// The cluster Hamiltonian as a sum of named Hermitian parts, kept separate
/// for the Trotter decomposition.
#[derive(Debug, Clone)]
pub struct ClusterHamiltonian {
    pub total: PauliOperator,
    pub parts: Vec<(String, PauliOperator)>,
}

/// Assemble H′ = H_FH + H_local + H_s-pair + H_d + H_AF on 2·L_c qubits.
///
/// All terms are built from operator products of the Jordan-Wigner images,
/// so fermionic signs are exact by construction. Sign conventions: −t on
/// hopping, −U n↑n↓, −μ′ Σn, +Δ′ pairing.
pub fn build_cluster_hamiltonian(
    model: &ClusterModel,
    v: &VariationalParams,
) -> Result<ClusterHamiltonian> {
    model.validate()?;
    v.validate(model)?;
    let l_c = model.l_c;
    let n = 2 * l_c;
    let mut parts: Vec<(String, PauliOperator)> = Vec::new();

    for (i, j) in model.intra_bonds() {
        for spin in Spin::BOTH {
            let ci = jw_create(i, spin, l_c)?;
            let cj = jw_create(j, spin, l_c)?;
            let hop = ci
                .mul(&cj.adjoint())
                .plus(&cj.mul(&ci.adjoint()))
                .scale(cr(-model.t));
            parts.push((format!("hop({i},{j},{spin})"), hop));
        }
    }

    if model.u != 0.0 {
        for i in 1..=l_c {
            let nu = jw_number(i, Spin::Up, l_c)?;
            let nd = jw_number(i, Spin::Down, l_c)?;
            parts.push((format!("int({i})"), nu.mul(&nd).scale(cr(-model.u))));
        }
    }

    if v.mu_prime != 0.0 {
        for i in 1..=l_c {
            for spin in Spin::BOTH {
                let num = jw_number(i, spin, l_c)?.scale(cr(-v.mu_prime));
                parts.push((format!("local({i},{spin})"), num));
            }
        }
    }

    if v.delta_prime != 0.0 {
        for i in 1..=l_c {
            let cu = jw_create(i, Spin::Up, l_c)?;
            let cd = jw_create(i, Spin::Down, l_c)?;
            let pair = cu
                .mul(&cd)
                .plus(&cd.adjoint().mul(&cu.adjoint()))
                .scale(cr(v.delta_prime));
            parts.push((format!("spair({i})"), pair));
        }
    }

    if v.delta_d_prime != 0.0 {
        for i in 1..=l_c {
            for j in 1..=l_c {
                let d = d_wave_sign(model, i, j);
                if d == 0.0 {
                    continue;
                }
                let cu = jw_create(i, Spin::Up, l_c)?;
                let cd = jw_create(j, Spin::Down, l_c)?;
                let pair = cu
                    .mul(&cd)
                    .plus(&cd.adjoint().mul(&cu.adjoint()))
                    .scale(cr(v.delta_d_prime * d));
                parts.push((format!("dpair({i},{j})"), pair));
            }
        }
    }

    if v.m_prime != 0.0 {
        for i in 1..=l_c {
            let sign = model.neel_sign(i);
            let nu = jw_number(i, Spin::Up, l_c)?;
            let nd = jw_number(i, Spin::Down, l_c)?;
            let af = nu.minus(&nd).scale(cr(v.m_prime * sign));
            parts.push((format!("af({i})"), af));
        }
    }

    let mut total = PauliOperator::zero(n);
    for (_, p) in &parts {
        total = total.plus(p);
    }
    Ok(ClusterHamiltonian { total, parts })
}

/// Spin-resolved intra-cluster one-body matrix B^{(σ)} (L_c × L_c):
/// −t on bonds, −μ′ + σ M′ e^{iQ·R_i} on the diagonal.
fn intra_one_body(model: &ClusterModel, v: &VariationalParams, spin: Spin) -> DMatrix<C64> {
    let l_c = model.l_c;
    let mut b = DMatrix::<C64>::zeros(l_c, l_c);
    let spin_sign = match spin {
        Spin::Up => 1.0,
        Spin::Down => -1.0,
    };
    for i in 1..=l_c {
        b[(i - 1, i - 1)] = cr(-v.mu_prime + spin_sign * v.m_prime * model.neel_sign(i));
    }
    for (i, j) in model.intra_bonds() {
        b[(i - 1, j - 1)] += cr(-model.t);
        b[(j - 1, i - 1)] += cr(-model.t);
    }
    b
}

/// Pairing block C: Δ′ on the diagonal plus Δ′_d d_ij.
fn pairing_block(model: &ClusterModel, v: &VariationalParams) -> DMatrix<C64> {
    let l_c = model.l_c;
    let mut cmat = DMatrix::<C64>::zeros(l_c, l_c);
    for i in 1..=l_c {
        cmat[(i - 1, i - 1)] = cr(v.delta_prime);
        if v.delta_d_prime != 0.0 {
            for j in 1..=l_c {
                let d = d_wave_sign(model, i, j);
                if d != 0.0 {
                    cmat[(i - 1, j - 1)] += cr(v.delta_d_prime * d);
                }
            }
        }
    }
    cmat
}

/// Cluster one-body Nambu matrix t̂′ = [[B, C], [C, D]] with D = −B^{(↓)ᵀ}.
pub fn t_hat_prime(model: &ClusterModel, v: &VariationalParams) -> DMatrix<C64> {
    let l_c = model.l_c;
    let b_up = intra_one_body(model, v, Spin::Up);
    let b_dn = intra_one_body(model, v, Spin::Down);
    let cblk = pairing_block(model, v);
    let mut m = DMatrix::<C64>::zeros(2 * l_c, 2 * l_c);
    m.view_mut((0, 0), (l_c, l_c)).copy_from(&b_up);
    m.view_mut((0, l_c), (l_c, l_c)).copy_from(&cblk);
    m.view_mut((l_c, 0), (l_c, l_c)).copy_from(&cblk.adjoint());
    m.view_mut((l_c, l_c), (l_c, l_c))
        .copy_from(&(-b_dn.transpose()));
    m
}

/// Bare-lattice block A(k̃): all one-body terms of the lattice folded onto
/// the cluster basis, A_ij(k̃) = Σ_R h_ij(R) e^{+i k̃·R}.
pub fn lattice_block(model: &ClusterModel, k_tilde: KVec) -> DMatrix<C64> {
    let l_c = model.l_c;
    let mut a = DMatrix::<C64>::zeros(l_c, l_c);
    for i in 1..=l_c {
        a[(i - 1, i - 1)] = cr(-model.mu);
    }
    for (i, j) in model.intra_bonds() {
        a[(i - 1, j - 1)] += cr(-model.t);
        a[(j - 1, i - 1)] += cr(-model.t);
    }
    for (i, j, rvec) in model.inter_bonds() {
        let phase = C64::from_polar(1.0, k_tilde.x * rvec.x + k_tilde.y * rvec.y);
        a[(i - 1, j - 1)] += cr(-model.t) * phase;
        a[(j - 1, i - 1)] += cr(-model.t) * phase.conj();
    }
    a
}

/// Lattice one-body Nambu matrix t̂(k̃) = [[A(k̃), 0], [0, −A(k̃)]].
pub fn t_hat_k(model: &ClusterModel, k_tilde: KVec) -> DMatrix<C64> {
    let l_c = model.l_c;
    let a = lattice_block(model, k_tilde);
    let mut m = DMatrix::<C64>::zeros(2 * l_c, 2 * l_c);
    m.view_mut((0, 0), (l_c, l_c)).copy_from(&a);
    m.view_mut((l_c, l_c), (l_c, l_c)).copy_from(&(-&a));
    m
}

fn on_grid(model: &ClusterModel, k_tilde: KVec) -> bool {
    let zone = 2.0 * std::f64::consts::PI / (model.cluster_extent() as f64 * model.a);
    let close = |v: f64| {
        let folded = v.rem_euclid(zone);
        model.k_tilde_grid().iter().any(|k| {
            let kx = k.x.rem_euclid(zone);
            (folded - kx).abs() < 1e-9 || (folded - kx).abs() > zone - 1e-9
        })
    };
    match model.dimension {
        Dimension::One => close(k_tilde.x) && k_tilde.y == 0.0,
        Dimension::Two => {
            // check each component against the 1D sub-grid
            let n_per_dim = model.n_c * 2;
            let step = 2.0 * std::f64::consts::PI / (n_per_dim as f64 * model.a);
            let comp_ok = |v: f64| {
                let folded = v.rem_euclid(zone);
                let q = (folded / step).round();
                (folded - q * step).abs() < 1e-9
            };
            comp_ok(k_tilde.x) && comp_ok(k_tilde.y)
        }
    }
}

/// CPT perturbation V̂(k̃) = t̂(k̃) − t̂′. Hermitian at every grid point.
pub fn perturbation_matrix(
    model: &ClusterModel,
    v: &VariationalParams,
    k_tilde: KVec,
) -> Result<DMatrix<C64>> {
    if !on_grid(model, k_tilde) {
        return Err(VcaError::domain(format!(
            "k̃ = ({}, {}) is not on the reciprocal superlattice grid",
            k_tilde.x, k_tilde.y
        )));
    }
    Ok(t_hat_k(model, k_tilde) - t_hat_prime(model, v))
}

/// Same as [`perturbation_matrix`] without the grid membership check, for
/// internal evaluation on trusted wavevectors.
pub fn perturbation_matrix_unchecked(
    model: &ClusterModel,
    v: &VariationalParams,
    k_tilde: KVec,
) -> DMatrix<C64> {
    t_hat_k(model, k_tilde) - t_hat_prime(model, v)
}

/// Per-site one-body trace constant (tr B_↓,lattice − tr B_↓,cluster)/L_c
/// relating the Nambu-space Tr ln to the physical grand potential. The
/// represented spin-down blocks are B_↓ = −Dᵀ, so the constant evaluates to
/// μ′ − μ for the models here; it is computed from the matrices so Weiss
/// fields enter correctly.
pub fn nambu_trace_constant(model: &ClusterModel, v: &VariationalParams) -> f64 {
    let l_c = model.l_c;
    // lattice: D_latt(k̃) = −A(k̃); trace is k̃-independent
    let a0 = lattice_block(model, KVec::new(0.0, 0.0));
    let tr_b_latt: C64 = (0..l_c).map(|i| a0[(i, i)]).sum();
    let tp = t_hat_prime(model, v);
    let tr_d: C64 = (0..l_c).map(|i| tp[(l_c + i, l_c + i)]).sum();
    // B_↓,latt = A(k̃)ᵀ (trace −L_c μ); B_↓,cluster = −D′ᵀ
    (tr_b_latt.re - (-tr_d.re)) / l_c as f64
}
