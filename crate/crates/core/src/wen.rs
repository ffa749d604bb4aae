//! Wen matrices, Wen data and the finite group `Π = K⁻¹Zᵍ/Zᵍ`.
//!
//! All arithmetic in this module is exact. Elements of `Π` are stored by
//! their numerators: the coset of `c ∈ K⁻¹Zᵍ` is kept as `v = δ·c` reduced
//! into `[0, δ)ᵍ`, so `c = v/δ` has entries in `[0, 1)`.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{self, IntMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WenError {
    #[error("EmptyMatrix: a Wen matrix needs at least one row")]
    EmptyMatrix,
    #[error("NotSquare: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("NotSymmetric: entry ({row},{col}) differs from ({col},{row})")]
    NotSymmetric { row: usize, col: usize },
    #[error("NegativeEntry: entry ({row},{col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: i64 },
    #[error("NotPositiveDefinite: leading principal minor of order {order} is {minor}")]
    NotPositiveDefinite { order: usize, minor: String },
    #[error("MixedParity: diagonal entries are neither all even nor all odd")]
    MixedParity,
    #[error("NonPositiveU: entry {index} of K^-1 e is {value}")]
    NonPositiveU { index: usize, value: String },
    #[error("Overflow: {0} does not fit in 64-bit integers")]
    Overflow(&'static str),
    #[error("NotEigenvectorOfE: K n = {image:?} is not a multiple of (1,...,1)")]
    NotEigenvectorOfE { image: Vec<i64> },
    #[error("NonPositiveCount: particle counts must be positive, got {0:?}")]
    NonPositiveCount(Vec<i64>),
    #[error("ShapeMismatch: expected {expected} layers, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("InvalidJainParameters: p and g must be positive, got p={p}, g={g}")]
    InvalidJainParameters { p: i64, g: usize },
}

/// Exchange statistics selected by the parity of the diagonal of `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistics {
    Bosonic,
    Fermionic,
}

impl Statistics {
    /// `+1` for bosonic, `-1` for fermionic.
    pub fn sign(self) -> i64 {
        match self {
            Statistics::Bosonic => 1,
            Statistics::Fermionic => -1,
        }
    }
}

/// A validated Wen matrix together with its cached invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WenMatrix {
    k: IntMatrix,
    delta: i64,
    adjugate: IntMatrix,
    rho: i64,
    statistics: Statistics,
    u: Vec<BigRational>,
}

impl WenMatrix {
    /// Checks the Wen axioms and caches the derived invariants.
    ///
    /// The first violated axiom is reported, in the order: shape, symmetry,
    /// sign of entries, positive definiteness, diagonal parity, positivity of
    /// `K⁻¹e`.
    pub fn new(k: IntMatrix) -> Result<Self, WenError> {
        let g = k.len();
        if g == 0 {
            return Err(WenError::EmptyMatrix);
        }
        for (row, r) in k.iter().enumerate() {
            if r.len() != g {
                return Err(WenError::NotSquare { row, len: r.len(), expected: g });
            }
        }
        for i in 0..g {
            for j in i + 1..g {
                if k[i][j] != k[j][i] {
                    return Err(WenError::NotSymmetric { row: i, col: j });
                }
            }
        }
        for (i, r) in k.iter().enumerate() {
            for (j, &value) in r.iter().enumerate() {
                if value < 0 {
                    return Err(WenError::NegativeEntry { row: i, col: j, value });
                }
            }
        }
        let minors = exact::leading_principal_minors(&k);
        for (idx, m) in minors.iter().enumerate() {
            if !m.is_positive() {
                return Err(WenError::NotPositiveDefinite { order: idx + 1, minor: m.to_string() });
            }
        }
        let parity = k[0][0].rem_euclid(2);
        if (0..g).any(|i| k[i][i].rem_euclid(2) != parity) {
            return Err(WenError::MixedParity);
        }
        let statistics = if parity == 0 { Statistics::Bosonic } else { Statistics::Fermionic };

        let det = exact::determinant(&k);
        let delta = exact::to_i64(&det).ok_or(WenError::Overflow("determinant"))?;
        let adj_big = exact::adjugate(&k);
        let mut adjugate = vec![vec![0i64; g]; g];
        for i in 0..g {
            for j in 0..g {
                adjugate[i][j] =
                    exact::to_i64(&adj_big[i][j]).ok_or(WenError::Overflow("adjugate"))?;
            }
        }
        let rho_big: BigInt = adj_big.iter().flatten().sum();
        let rho = exact::to_i64(&rho_big).ok_or(WenError::Overflow("adjugate sum"))?;
        let u: Vec<BigRational> = adj_big
            .iter()
            .map(|row| BigRational::new(row.iter().sum(), det.clone()))
            .collect();
        if let Some((index, value)) = u.iter().enumerate().find(|(_, x)| !x.is_positive()) {
            return Err(WenError::NonPositiveU { index, value: exact::rational_to_string(value) });
        }
        Ok(WenMatrix { k, delta, adjugate, rho, statistics, u })
    }

    pub fn g(&self) -> usize {
        self.k.len()
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.k
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.k[i][j]
    }

    pub fn delta(&self) -> i64 {
        self.delta
    }

    pub fn adjugate(&self) -> &IntMatrix {
        &self.adjugate
    }

    pub fn rho(&self) -> i64 {
        self.rho
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    /// `K⁻¹e` as exact rationals.
    pub fn u(&self) -> &[BigRational] {
        &self.u
    }

    /// Row sums of the adjugate, i.e. `δ·u`.
    pub fn adjugate_row_sums(&self) -> Vec<i64> {
        self.adjugate.iter().map(|r| r.iter().sum()).collect()
    }

    /// `gcd(δ, ρ) = 1`.
    pub fn is_primary(&self) -> bool {
        self.delta.gcd(&self.rho) == 1
    }

    /// `K⁻¹` as floating point, via the exact adjugate.
    pub fn inverse_f64(&self) -> Vec<Vec<f64>> {
        let d = self.delta as f64;
        self.adjugate
            .iter()
            .map(|r| r.iter().map(|&x| x as f64 / d).collect())
            .collect()
    }

    /// Detects `K = I + pN` (all off-diagonal entries `p`, diagonal `p + 1`).
    pub fn as_jain(&self) -> Option<(i64, usize)> {
        let g = self.g();
        let p = self.k[0][0] - 1;
        if p < 1 {
            return None;
        }
        let ok = (0..g).all(|i| (0..g).all(|j| self.k[i][j] == if i == j { p + 1 } else { p }));
        ok.then_some((p, g))
    }

    /// The minimal Wen datum: `n⃗ = K♯e / gcd(K♯e)`.
    pub fn minimal_counts(&self) -> Vec<i64> {
        let r = self.adjugate_row_sums();
        let gcd = exact::gcd_all(&r);
        r.iter().map(|x| x / gcd).collect()
    }
}

impl fmt::Display for WenMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .k
            .iter()
            .map(|r| r.iter().map(i64::to_string).collect::<Vec<_>>().join(" "))
            .collect();
        write!(f, "[{}]", rows.join("; "))
    }
}

/// `K_{p,g} = I + pN`, where `N` is the all-ones matrix.
pub fn jain_matrix(p: i64, g: usize) -> Result<WenMatrix, WenError> {
    if p < 1 || g < 1 {
        return Err(WenError::InvalidJainParameters { p, g });
    }
    let k = (0..g)
        .map(|i| (0..g).map(|j| if i == j { p + 1 } else { p }).collect())
        .collect();
    WenMatrix::new(k)
}

/// A Wen matrix together with particle counts `n⃗` satisfying `K n⃗ = d e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WenDatum {
    matrix: WenMatrix,
    counts: Vec<i64>,
    d: i64,
    n: i64,
}

impl WenDatum {
    pub fn new(matrix: WenMatrix, counts: Vec<i64>) -> Result<Self, WenError> {
        let g = matrix.g();
        if counts.len() != g {
            return Err(WenError::ShapeMismatch { expected: g, got: counts.len() });
        }
        if counts.iter().any(|&x| x <= 0) {
            return Err(WenError::NonPositiveCount(counts));
        }
        let image = exact::mat_vec(matrix.matrix(), &counts);
        if image.iter().any(|&x| x != image[0]) {
            return Err(WenError::NotEigenvectorOfE { image });
        }
        let d = image[0];
        let n: i64 = counts.iter().sum();
        // n = d Σu = dρ/δ, so nδ = dρ must hold identically.
        debug_assert_eq!(
            BigInt::from(n) * BigInt::from(matrix.delta()),
            BigInt::from(d) * BigInt::from(matrix.rho())
        );
        Ok(WenDatum { matrix, counts, d, n })
    }

    /// Datum with the smallest admissible particle counts.
    pub fn minimal(matrix: WenMatrix) -> Self {
        let counts = matrix.minimal_counts();
        WenDatum::new(matrix, counts).expect("K♯e is an eigenvector of K with eigenvalue δ")
    }

    pub fn matrix(&self) -> &WenMatrix {
        &self.matrix
    }

    pub fn counts(&self) -> &[i64] {
        &self.counts
    }

    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn g(&self) -> usize {
        self.matrix.g()
    }

    /// `ρ = nδ/d`, recomputed from the counts.
    pub fn rho_from_counts(&self) -> BigRational {
        BigRational::new(
            BigInt::from(self.n) * BigInt::from(self.matrix.delta()),
            BigInt::from(self.d),
        )
    }

    /// Order of `[u]` in `Π`.
    pub fn u_order(&self) -> i64 {
        u_order(&self.matrix)
    }
}

/// Order of `[K⁻¹e]` in `Π`: the smallest `m` with `m·K♯e ≡ 0 (mod δ)`.
pub fn u_order(k: &WenMatrix) -> i64 {
    let delta = k.delta();
    let mut r = k.adjugate_row_sums();
    r.push(delta);
    delta / exact::gcd_all(&r)
}

/// Element of `Π` stored as the numerator vector `δ·c` with entries in `[0, δ)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PiElement(pub Vec<i64>);

impl PiElement {
    pub fn zero(g: usize) -> Self {
        PiElement(vec![0; g])
    }

    /// Reduces an arbitrary numerator vector modulo `δ`.
    pub fn reduced(v: &[i64], delta: i64) -> Self {
        PiElement(v.iter().map(|&x| exact::modulo(x, delta)).collect())
    }

    pub fn add(&self, other: &Self, delta: i64) -> Self {
        let v: Vec<i64> = self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect();
        Self::reduced(&v, delta)
    }

    pub fn neg(&self, delta: i64) -> Self {
        let v: Vec<i64> = self.0.iter().map(|a| -a).collect();
        Self::reduced(&v, delta)
    }

    pub fn scale(&self, m: i64, delta: i64) -> Self {
        let v: Vec<i64> = self.0.iter().map(|a| (*a as i128 * m as i128).rem_euclid(delta as i128) as i64).collect();
        PiElement(v)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    /// The representative `c ∈ [0,1)ᵍ` as floating point.
    pub fn to_f64(&self, delta: i64) -> Vec<f64> {
        self.0.iter().map(|&x| x as f64 / delta as f64).collect()
    }

    /// The representative as exact rationals.
    pub fn to_rationals(&self, delta: i64) -> Vec<BigRational> {
        self.0
            .iter()
            .map(|&x| BigRational::new(BigInt::from(x), BigInt::from(delta)))
            .collect()
    }

    /// Renders the representative as `(p/q, ...)`.
    pub fn display(&self, delta: i64) -> String {
        let parts: Vec<String> = self
            .to_rationals(delta)
            .iter()
            .map(exact::rational_to_string)
            .collect();
        format!("({})", parts.join(", "))
    }
}

/// The finite abelian group `Π = K⁻¹Zᵍ/Zᵍ` with an enumeration of its elements.
#[derive(Debug, Clone)]
pub struct PiGroup {
    delta: i64,
    invariant_factors: Vec<i64>,
    elements: Vec<PiElement>,
    index: HashMap<PiElement, usize>,
}

impl PiGroup {
    /// Enumerates `Π` as the subgroup of `(Z/δ)ᵍ` generated by the columns of
    /// `K♯`, sorted lexicographically; the identity has index 0.
    pub fn new(k: &WenMatrix) -> Self {
        let g = k.g();
        let delta = k.delta();
        let adj = k.adjugate();
        let generators: Vec<PiElement> = (0..g)
            .map(|j| PiElement::reduced(&(0..g).map(|i| adj[i][j]).collect::<Vec<_>>(), delta))
            .collect();
        let mut seen = std::collections::HashSet::new();
        let zero = PiElement::zero(g);
        seen.insert(zero.clone());
        let mut frontier = vec![zero];
        while let Some(x) = frontier.pop() {
            for gen in &generators {
                let y = x.add(gen, delta);
                if seen.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        let mut elements: Vec<PiElement> = seen.into_iter().collect();
        elements.sort();
        let index = elements.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let invariant_factors = smith_invariant_factors(k.matrix())
            .into_iter()
            .map(|x| x as i64)
            .collect();
        PiGroup { delta, invariant_factors, elements, index }
    }

    pub fn delta(&self) -> i64 {
        self.delta
    }

    /// Diagonal of the Smith normal form of `K`, each dividing the next.
    pub fn invariant_factors(&self) -> &[i64] {
        &self.invariant_factors
    }

    pub fn elements(&self) -> &[PiElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, x: &PiElement) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn element(&self, i: usize) -> &PiElement {
        &self.elements[i]
    }

    /// `true` when `v/δ` lies in `K⁻¹Zᵍ`, i.e. `K v ≡ 0 (mod δ)`.
    pub fn contains(&self, k: &WenMatrix, x: &PiElement) -> bool {
        x.0.iter().all(|&v| (0..self.delta).contains(&v))
            && exact::mat_vec(k.matrix(), &x.0).iter().all(|&y| y % self.delta == 0)
    }
}

/// The class of `u = K⁻¹e` in `Π`.
pub fn u_element(k: &WenMatrix) -> PiElement {
    PiElement::reduced(&k.adjugate_row_sums(), k.delta())
}

/// Exponent `e` such that `υ(a, b) = exp(2πi e/δ)`, where `υ(a,b) = exp(2πi aᵀKb)`.
pub fn upsilon_exponent(k: &WenMatrix, a: &PiElement, b: &PiElement) -> i64 {
    let delta = k.delta() as i128;
    let g = k.g();
    // aᵀKb = vₐᵀ (K v_b) / δ², and K v_b is divisible by δ.
    let mut acc: i128 = 0;
    for i in 0..g {
        let kb: i128 = (0..g).map(|j| k.entry(i, j) as i128 * b.0[j] as i128).sum();
        debug_assert_eq!(kb % delta, 0);
        acc += a.0[i] as i128 * (kb / delta);
    }
    acc.rem_euclid(delta) as i64
}

/// Invariant factors of an integer matrix (Smith normal form diagonal, made
/// non-negative). Pivots are chosen as the entry of smallest nonzero absolute
/// value in the remaining block, first in row-major order on ties.
pub fn smith_invariant_factors(m: &[Vec<i64>]) -> Vec<i128> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut diag = Vec::new();
    for t in 0..rows.min(cols) {
        loop {
            let mut pivot: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if a[i][j] != 0
                        && pivot.is_none_or(|(pi, pj)| a[i][j].abs() < a[pi][pj].abs())
                    {
                        pivot = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = pivot else {
                diag.extend(std::iter::repeat_n(0, rows.min(cols) - t));
                return diag;
            };
            a.swap(t, pi);
            for r in a.iter_mut() {
                r.swap(t, pj);
            }
            let p = a[t][t];
            let mut clean = true;
            for i in t + 1..rows {
                let q = a[i][t].div_euclid(p);
                if q != 0 {
                    for j in t..cols {
                        a[i][j] -= q * a[t][j];
                    }
                }
                clean &= a[i][t] == 0;
            }
            for j in t + 1..cols {
                let q = a[t][j].div_euclid(p);
                if q != 0 {
                    for i in t..rows {
                        a[i][j] -= q * a[i][t];
                    }
                }
                clean &= a[t][j] == 0;
            }
            if !clean {
                continue;
            }
            // Divisibility of the remaining block by the pivot.
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| a[i][j] % p != 0));
            match bad {
                Some(i) => {
                    for j in t..cols {
                        a[t][j] += a[i][j];
                    }
                }
                None => break,
            }
        }
        diag.push(a[t][t].abs());
    }
    diag
}

/// Slope `−ρ/δ` as an exact rational.
pub fn slope(k: &WenMatrix) -> BigRational {
    BigRational::new(BigInt::from(-k.rho()), BigInt::from(k.delta()))
}

/// `true` iff `exp(2πi x/m)` is a primitive `m`-th root of unity.
pub fn is_primitive_exponent(x: i64, m: i64) -> bool {
    x.gcd(&m) == 1
}
