//! Pauli-string operator algebra and the Jordan-Wigner images of fermionic
//! operators.
//!
//! Tensor-factor ordering convention, used everywhere in this crate: the
//! *leftmost* factor acts on the *highest* qubit index. A register of n
//! qubits is written `f_n ⊗ f_{n-1} ⊗ ... ⊗ f_1`, so for a cluster with
//! `L_c` sites the spin-up orbital of site i lives on qubit i (low block)
//! and the spin-down orbital on qubit `L_c + i` (high block).
//!
//! Single-qubit symbols follow σ₊ = (σx + iσy)/2, σ₋ = σ₊†, σn = σ₊σ₋ and
//! σz = 2σn − 𝕀, so the occupied state of an orbital is the σz = +1
//! eigenstate and the many-body vacuum is |1...1⟩.

use crate::error::{Result, VcaError};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;

/// Coefficients with magnitude below this are dropped during
/// canonicalization.
pub const COEFF_EPS: f64 = 1e-12;

type C64 = Complex64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// One tensor factor of a Pauli string.
///
/// The set {𝕀, σx, σy, σz, σ₊, σ₋, σn, σ̄n} is closed under products up to
/// a complex scalar (σ̄n ≡ σ₋σ₊ is the hole projector, needed for closure).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    I,
    X,
    Y,
    Z,
    /// σ₊ = (σx + iσy)/2
    Plus,
    /// σ₋ = σ₊†
    Minus,
    /// σn = σ₊σ₋, the orbital number operator
    Num,
    /// σ̄n = σ₋σ₊ = 𝕀 − σn, the hole projector
    Hole,
}

impl Factor {
    /// Expansion onto the orthogonal single-qubit basis {𝕀, σx, σy, σz}:
    /// σ± = (σx ± iσy)/2, σn = (𝕀 + σz)/2, σ̄n = (𝕀 − σz)/2.
    fn pauli_expansion(self) -> &'static [(C64, Factor)] {
        const ONE: C64 = C64::new(1.0, 0.0);
        const HALF: C64 = C64::new(0.5, 0.0);
        const IHALF: C64 = C64::new(0.0, 0.5);
        const MHALF: C64 = C64::new(-0.5, 0.0);
        const MIHALF: C64 = C64::new(0.0, -0.5);
        match self {
            Factor::I => &[(ONE, Factor::I)],
            Factor::X => &[(ONE, Factor::X)],
            Factor::Y => &[(ONE, Factor::Y)],
            Factor::Z => &[(ONE, Factor::Z)],
            Factor::Plus => &[(HALF, Factor::X), (IHALF, Factor::Y)],
            Factor::Minus => &[(HALF, Factor::X), (MIHALF, Factor::Y)],
            Factor::Num => &[(HALF, Factor::I), (HALF, Factor::Z)],
            Factor::Hole => &[(HALF, Factor::I), (MHALF, Factor::Z)],
        }
    }

    /// 2×2 matrix entries in row-major order [m00, m01, m10, m11].
    fn entries(self) -> [C64; 4] {
        let o = c(0.0, 0.0);
        let l = c(1.0, 0.0);
        match self {
            Factor::I => [l, o, o, l],
            Factor::X => [o, l, l, o],
            Factor::Y => [o, c(0.0, -1.0), c(0.0, 1.0), o],
            Factor::Z => [l, o, o, -l],
            Factor::Plus => [o, l, o, o],
            Factor::Minus => [o, o, l, o],
            Factor::Num => [l, o, o, o],
            Factor::Hole => [o, o, o, l],
        }
    }

    fn adjoint(self) -> Factor {
        match self {
            Factor::Plus => Factor::Minus,
            Factor::Minus => Factor::Plus,
            f => f,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Factor::I => "I",
            Factor::X => "σx",
            Factor::Y => "σy",
            Factor::Z => "σz",
            Factor::Plus => "σ+",
            Factor::Minus => "σ-",
            Factor::Num => "σn",
            Factor::Hole => "σh",
        }
    }
}

fn is_zero_c(v: C64) -> bool {
    v.re == 0.0 && v.im == 0.0
}

/// Multiply two factors, returning `Some((scalar, factor))` with
/// `a · b = scalar · factor`, or `None` when the product is the zero matrix.
fn mul_factors(a: Factor, b: Factor) -> Option<(C64, Factor)> {
    let ma = a.entries();
    let mb = b.entries();
    let m00 = ma[0] * mb[0] + ma[1] * mb[2];
    let m01 = ma[0] * mb[1] + ma[1] * mb[3];
    let m10 = ma[2] * mb[0] + ma[3] * mb[2];
    let m11 = ma[2] * mb[1] + ma[3] * mb[3];
    let diag = (!is_zero_c(m00), !is_zero_c(m11));
    let off = (!is_zero_c(m01), !is_zero_c(m10));
    match (diag, off) {
        ((false, false), (false, false)) => None,
        (d, (false, false)) => Some(match d {
            (true, false) => (m00, Factor::Num),
            (false, true) => (m11, Factor::Hole),
            _ => {
                if m00 == m11 {
                    (m00, Factor::I)
                } else {
                    debug_assert_eq!(m00, -m11);
                    (m00, Factor::Z)
                }
            }
        }),
        ((false, false), o) => Some(match o {
            (true, false) => (m01, Factor::Plus),
            (false, true) => (m10, Factor::Minus),
            _ => {
                if m01 == m10 {
                    (m01, Factor::X)
                } else {
                    debug_assert_eq!(m01, -m10);
                    // [[0, v], [-v, 0]] = (iv) σy
                    (m01 * c(0.0, 1.0), Factor::Y)
                }
            }
        }),
        _ => unreachable!("factor algebra is closed: no mixed products"),
    }
}

/// An n-qubit Pauli string: one factor per qubit plus a complex phase.
///
/// `factors[q]` acts on qubit q+1, i.e. storage is in ascending qubit order
/// while `Display` prints the conventional form (highest qubit leftmost).
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    pub phase: C64,
    pub factors: Vec<Factor>,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        PauliString {
            phase: c(1.0, 0.0),
            factors: vec![Factor::I; n_qubits],
        }
    }

    /// Build a string from `(qubit, factor)` pairs (1-based qubit indices),
    /// identity elsewhere.
    pub fn from_sites(n_qubits: usize, sites: &[(usize, Factor)]) -> Result<Self> {
        let mut factors = vec![Factor::I; n_qubits];
        for &(q, f) in sites {
            if q == 0 || q > n_qubits {
                return Err(VcaError::domain(format!(
                    "qubit index {q} outside register of {n_qubits} qubits"
                )));
            }
            factors[q - 1] = f;
        }
        Ok(PauliString {
            phase: c(1.0, 0.0),
            factors,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.factors.len()
    }

    /// Factor-wise product; `None` when any single-qubit product vanishes.
    pub fn mul(&self, other: &PauliString) -> Option<PauliString> {
        debug_assert_eq!(self.factors.len(), other.factors.len());
        let mut phase = self.phase * other.phase;
        let mut factors = Vec::with_capacity(self.factors.len());
        for (&a, &b) in self.factors.iter().zip(&other.factors) {
            let (scale, f) = mul_factors(a, b)?;
            phase *= scale;
            factors.push(f);
        }
        Some(PauliString { phase, factors })
    }

    pub fn adjoint(&self) -> PauliString {
        PauliString {
            phase: self.phase.conj(),
            factors: self.factors.iter().map(|f| f.adjoint()).collect(),
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.phase != c(1.0, 0.0) {
            write!(f, "({:.3}{:+.3}i)·", self.phase.re, self.phase.im)?;
        }
        let syms: Vec<&str> = self.factors.iter().rev().map(|x| x.symbol()).collect();
        write!(f, "{}", syms.join("⊗"))
    }
}

/// A weighted sum of Pauli strings in canonical form: every term is
/// expanded onto the orthogonal basis of {𝕀, σx, σy, σz} strings (so
/// operator identities like σn + σ̄n = 𝕀 merge exactly), identical strings
/// are combined with the string phase folded into the coefficient, and
/// small-coefficient terms are dropped.
#[derive(Debug, Clone)]
pub struct PauliOperator {
    n_qubits: usize,
    terms: BTreeMap<Vec<Factor>, C64>,
}

impl PauliOperator {
    pub fn zero(n_qubits: usize) -> Self {
        PauliOperator {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::from_term(c(1.0, 0.0), PauliString::identity(n_qubits))
    }

    pub fn from_term(coeff: C64, string: PauliString) -> Self {
        let mut op = PauliOperator::zero(string.n_qubits());
        op.add_term(coeff, string);
        op
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (C64, PauliString)> + '_ {
        self.terms.iter().map(|(f, &coeff)| {
            (
                coeff,
                PauliString {
                    phase: c(1.0, 0.0),
                    factors: f.clone(),
                },
            )
        })
    }

    pub fn add_term(&mut self, coeff: C64, string: PauliString) {
        debug_assert_eq!(string.n_qubits(), self.n_qubits);
        // expand non-Pauli factors recursively (depth-first over qubits)
        let mut stack: Vec<(C64, Vec<Factor>, usize)> = vec![(
            coeff * string.phase,
            Vec::with_capacity(string.factors.len()),
            0,
        )];
        while let Some((w, mut prefix, pos)) = stack.pop() {
            if pos == string.factors.len() {
                let entry = self
                    .terms
                    .entry(prefix.clone())
                    .or_insert_with(|| c(0.0, 0.0));
                *entry += w;
                if entry.norm() < COEFF_EPS {
                    self.terms.remove(&prefix);
                }
                continue;
            }
            let expansion = string.factors[pos].pauli_expansion();
            if expansion.len() == 1 {
                prefix.push(expansion[0].1);
                stack.push((w * expansion[0].0, prefix, pos + 1));
            } else {
                for &(scale, f) in expansion {
                    let mut branch = prefix.clone();
                    branch.push(f);
                    stack.push((w * scale, branch, pos + 1));
                }
            }
        }
    }

    pub fn plus(&self, other: &PauliOperator) -> PauliOperator {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        let mut out = self.clone();
        for (factors, &coeff) in &other.terms {
            out.add_term(
                coeff,
                PauliString {
                    phase: c(1.0, 0.0),
                    factors: factors.clone(),
                },
            );
        }
        out
    }

    pub fn minus(&self, other: &PauliOperator) -> PauliOperator {
        self.plus(&other.scale(c(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> PauliOperator {
        let mut out = PauliOperator::zero(self.n_qubits);
        for (factors, &coeff) in &self.terms {
            let v = coeff * s;
            if v.norm() >= COEFF_EPS {
                out.terms.insert(factors.clone(), v);
            }
        }
        out
    }

    /// Operator product, distributing over terms.
    pub fn mul(&self, other: &PauliOperator) -> PauliOperator {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        let mut out = PauliOperator::zero(self.n_qubits);
        for (fa, &ca) in &self.terms {
            let sa = PauliString {
                phase: c(1.0, 0.0),
                factors: fa.clone(),
            };
            for (fb, &cb) in &other.terms {
                let sb = PauliString {
                    phase: c(1.0, 0.0),
                    factors: fb.clone(),
                };
                if let Some(prod) = sa.mul(&sb) {
                    out.add_term(ca * cb, prod);
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> PauliOperator {
        let mut out = PauliOperator::zero(self.n_qubits);
        for (factors, &coeff) in &self.terms {
            let s = PauliString {
                phase: c(1.0, 0.0),
                factors: factors.clone(),
            }
            .adjoint();
            out.add_term(coeff.conj(), s);
        }
        out
    }

    pub fn commutator(&self, other: &PauliOperator) -> PauliOperator {
        self.mul(other).minus(&other.mul(self))
    }

    pub fn anticommutator(&self, other: &PauliOperator) -> PauliOperator {
        self.mul(other).plus(&other.mul(self))
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.terms.values().all(|v| v.norm() <= tol)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.minus(&self.adjoint()).is_zero(tol)
    }

    /// Largest coefficient magnitude (0 for the zero operator).
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Dense matrix realization on 2^n dimensions. Basis states are indexed
    /// with qubit 1 as the least significant bit.
    pub fn to_matrix(&self) -> DMatrix<C64> {
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for (factors, &coeff) in &self.terms {
            let fe: Vec<[C64; 4]> = factors.iter().map(|f| f.entries()).collect();
            for row in 0..dim {
                'col: for col in 0..dim {
                    let mut v = coeff;
                    for (q, e) in fe.iter().enumerate() {
                        let rb = (row >> q) & 1;
                        let cb = (col >> q) & 1;
                        let entry = e[rb * 2 + cb];
                        if is_zero_c(entry) {
                            continue 'col;
                        }
                        v *= entry;
                    }
                    m[(row, col)] += v;
                }
            }
        }
        m
    }
}

/// Electron spin label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spin::Up => write!(f, "up"),
            Spin::Down => write!(f, "dn"),
        }
    }
}

fn check_site(site: usize, l_c: usize) -> Result<()> {
    if site == 0 || site > l_c {
        return Err(VcaError::domain(format!(
            "site index {site} outside 1..={l_c}"
        )));
    }
    Ok(())
}

/// Qubit index (1-based) carrying the given spin-orbital: spin-up orbitals
/// occupy the low block, spin-down the high block.
pub fn orbital_qubit(site: usize, spin: Spin, l_c: usize) -> usize {
    match spin {
        Spin::Up => site,
        Spin::Down => l_c + site,
    }
}

/// Jordan-Wigner image of the creation operator c†_{site,spin} on the
/// 2·L_c qubit register: σ₊ on the orbital qubit, σz on every qubit below.
pub fn jw_create(site: usize, spin: Spin, l_c: usize) -> Result<PauliOperator> {
    check_site(site, l_c)?;
    let n = 2 * l_c;
    let q = orbital_qubit(site, spin, l_c);
    let mut sites = vec![(q, Factor::Plus)];
    for lower in 1..q {
        sites.push((lower, Factor::Z));
    }
    Ok(PauliOperator::from_term(
        c(1.0, 0.0),
        PauliString::from_sites(n, &sites)?,
    ))
}

/// Jordan-Wigner image of the annihilation operator c_{site,spin}.
pub fn jw_annihilate(site: usize, spin: Spin, l_c: usize) -> Result<PauliOperator> {
    Ok(jw_create(site, spin, l_c)?.adjoint())
}

/// Number operator n_{site,spin} = c†c; the string tails cancel leaving σn
/// on the orbital qubit.
pub fn jw_number(site: usize, spin: Spin, l_c: usize) -> Result<PauliOperator> {
    let cr = jw_create(site, spin, l_c)?;
    Ok(cr.mul(&cr.adjoint()))
}

/// The Hermitian quadrature pair X = c + c†, Y = −i(c − c†) for one
/// spin-orbital. Both square to the identity on the full register.
pub fn jw_hermitian_pair(
    site: usize,
    spin: Spin,
    l_c: usize,
) -> Result<(PauliOperator, PauliOperator)> {
    let cr = jw_create(site, spin, l_c)?;
    let an = cr.adjoint();
    let x = an.plus(&cr);
    let y = an.minus(&cr).scale(c(0.0, -1.0));
    Ok((x, y))
}

/// Which of the named Pauli-string constructions to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StringKind {
    /// 𝕋_{L_c}(i,j), i > j — hopping-type string on an L_c-qubit spin block.
    Hop,
    /// 𝕋_{L_c}(i) — the number string σn on site i of an L_c-qubit block.
    Local,
    /// 𝔻_{L_c}(i,j) — pairing-type string on the full 2·L_c register.
    Pair,
}

/// The named strings 𝕋_{L_c}(i,j), 𝕋_{L_c}(i) and 𝔻_{L_c}(i,j).
///
/// `Hop` and `Local` act on an L_c-qubit spin block and commute with the
/// total number operator; `Pair` acts on the full 2·L_c register and does
/// not. Note the operator products of the Jordan-Wigner images satisfy
/// c†_i c_j + c†_j c_i = −𝕋(i,j) and c†_{i↑}c†_{j↓} + c_{j↓}c_{i↑} = −𝔻(i,j);
/// Hamiltonian assembly works with the products directly.
pub fn pauli_strings_t_d(
    i: usize,
    j: usize,
    l_c: usize,
    kind: StringKind,
) -> Result<PauliOperator> {
    match kind {
        StringKind::Hop => {
            check_site(i, l_c)?;
            check_site(j, l_c)?;
            if i <= j {
                return Err(VcaError::domain(format!(
                    "hop string requires i > j, got i={i}, j={j}"
                )));
            }
            let mut a = vec![(i, Factor::Plus), (j, Factor::Minus)];
            let mut b = vec![(i, Factor::Minus), (j, Factor::Plus)];
            for q in (j + 1)..i {
                a.push((q, Factor::Z));
                b.push((q, Factor::Z));
            }
            let mut op = PauliOperator::from_term(c(1.0, 0.0), PauliString::from_sites(l_c, &a)?);
            op.add_term(c(1.0, 0.0), PauliString::from_sites(l_c, &b)?);
            Ok(op)
        }
        StringKind::Local => {
            check_site(i, l_c)?;
            Ok(PauliOperator::from_term(
                c(1.0, 0.0),
                PauliString::from_sites(l_c, &[(i, Factor::Num)])?,
            ))
        }
        StringKind::Pair => {
            check_site(i, l_c)?;
            check_site(j, l_c)?;
            let n = 2 * l_c;
            let top = l_c + j; // spin-down orbital j
            let mut a = vec![(top, Factor::Plus), (i, Factor::Plus)];
            let mut b = vec![(top, Factor::Minus), (i, Factor::Minus)];
            for q in (i + 1)..top {
                a.push((q, Factor::Z));
                b.push((q, Factor::Z));
            }
            let mut op = PauliOperator::from_term(c(1.0, 0.0), PauliString::from_sites(n, &a)?);
            op.add_term(c(1.0, 0.0), PauliString::from_sites(n, &b)?);
            Ok(op)
        }
    }
}

/// Total number operator Σ_{i,σ} n_{iσ} on the full register.
pub fn total_number(l_c: usize) -> PauliOperator {
    let mut op = PauliOperator::zero(2 * l_c);
    for site in 1..=l_c {
        for spin in Spin::BOTH {
            op = op.plus(&jw_number(site, spin, l_c).expect("valid site"));
        }
    }
    op
}
