//! Finite Heisenberg groups `G_K`, the pairing `υ`, and the standard
//! representation by magnetic translations.
//!
//! Roots of unity are stored as exponents modulo `δ`, i.e. `ζ^e` with
//! `ζ = exp(2πi/δ)`, so all group-law and relation checks are exact.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use serde::Serialize;
use thiserror::Error;

use crate::wen::{self, PiElement, PiGroup, WenDatum, WenMatrix};

/// Largest `δ` for which the character norm is computed.
pub const MAX_NORM_DELTA: i64 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeisenbergError {
    #[error("NonCyclicBasisOrder: [u] has order {order} < delta = {delta}, so the u-power ordering does not span the basis")]
    NonCyclicBasisOrder { order: i64, delta: i64 },
    #[error("DeltaTooLarge: delta = {delta} exceeds the limit {max} for character sums")]
    DeltaTooLarge { delta: i64, max: i64 },
    #[error("NotInPi: {0:?} is not an element of K^-1 Z^g / Z^g")]
    NotInPi(Vec<i64>),
}

/// `((a, b), ζ^γ)` in `G_K`, with an extra central sign for the twisted
/// extension by `Z/2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct HeisenbergElement {
    pub a: PiElement,
    pub b: PiElement,
    pub gamma: i64,
    /// `+1` or `−1`; the nontrivial central element of the twisted extension
    /// acts as `−Id`.
    pub sign: i8,
}

/// The group `G_K` together with the enumeration of `Π` it is built on.
#[derive(Debug, Clone)]
pub struct HeisenbergGroup {
    k: WenMatrix,
    pi: PiGroup,
}

impl HeisenbergGroup {
    pub fn new(k: &WenMatrix) -> Self {
        HeisenbergGroup { k: k.clone(), pi: PiGroup::new(k) }
    }

    pub fn delta(&self) -> i64 {
        self.k.delta()
    }

    pub fn pi(&self) -> &PiGroup {
        &self.pi
    }

    pub fn matrix(&self) -> &WenMatrix {
        &self.k
    }

    pub fn identity(&self) -> HeisenbergElement {
        let g = self.k.g();
        HeisenbergElement { a: PiElement::zero(g), b: PiElement::zero(g), gamma: 0, sign: 1 }
    }

    pub fn element(&self, a: PiElement, b: PiElement, gamma: i64) -> Result<HeisenbergElement, HeisenbergError> {
        for x in [&a, &b] {
            if !self.pi.contains(&self.k, x) {
                return Err(HeisenbergError::NotInPi(x.0.clone()));
            }
        }
        Ok(HeisenbergElement { a, b, gamma: gamma.rem_euclid(self.delta()), sign: 1 })
    }

    /// Exponent of `υ(a, b) = exp(2πi aᵀKb)`.
    pub fn upsilon(&self, a: &PiElement, b: &PiElement) -> i64 {
        wen::upsilon_exponent(&self.k, a, b)
    }

    /// The cocycle `ω((a₁,b₁),(a₂,b₂)) = υ(a₁, b₂)` as an exponent.
    pub fn cocycle(&self, x: (&PiElement, &PiElement), y: (&PiElement, &PiElement)) -> i64 {
        self.upsilon(x.0, y.1)
    }

    /// `(a₁,b₁,γ₁)·(a₂,b₂,γ₂) = (a₁+a₂, b₁+b₂, υ(a₁,b₂)γ₁γ₂)`.
    pub fn multiply(&self, x: &HeisenbergElement, y: &HeisenbergElement) -> HeisenbergElement {
        let delta = self.delta();
        HeisenbergElement {
            a: x.a.add(&y.a, delta),
            b: x.b.add(&y.b, delta),
            gamma: (x.gamma + y.gamma + self.upsilon(&x.a, &y.b)).rem_euclid(delta),
            sign: x.sign * y.sign,
        }
    }

    /// Inverse, from `υ(a, −b) = υ(a, b)⁻¹`.
    pub fn inverse(&self, x: &HeisenbergElement) -> HeisenbergElement {
        let delta = self.delta();
        HeisenbergElement {
            a: x.a.neg(delta),
            b: x.b.neg(delta),
            gamma: (-x.gamma + self.upsilon(&x.a, &x.b)).rem_euclid(delta),
            sign: x.sign,
        }
    }

    /// `S_a`: diagonal, `S_a H_c = υ(a, c) H_c`, in the `Π` index order.
    pub fn s_operator(&self, a: &PiElement) -> MonomialMatrix {
        let exps = self.pi.elements().iter().map(|c| self.upsilon(a, c)).collect();
        MonomialMatrix::new((0..self.pi.len()).collect(), exps, self.delta())
    }

    /// `R_b`: permutation, `R_b H_c = H_{c+b}`, in the `Π` index order.
    pub fn r_operator(&self, b: &PiElement) -> MonomialMatrix {
        let delta = self.delta();
        let perm = self
            .pi
            .elements()
            .iter()
            .map(|c| self.pi.index_of(&c.add(b, delta)).expect("Π is closed under addition"))
            .collect();
        MonomialMatrix::new(perm, vec![0; self.pi.len()], delta)
    }

    /// The operator `±γ·R_b·S_a` representing `((a,b),γ)` on the span of `(H_c)`.
    pub fn represent(&self, x: &HeisenbergElement) -> MonomialMatrix {
        let mut m = self.r_operator(&x.b).mul(&self.s_operator(&x.a)).scaled(x.gamma);
        if x.sign < 0 {
            m = m.scaled_by_sign();
        }
        m
    }

    /// All `δ³` elements with trivial sign, in a fixed order.
    pub fn elements(&self) -> Vec<HeisenbergElement> {
        let mut out = Vec::with_capacity(self.pi.len().pow(2) * self.delta() as usize);
        for a in self.pi.elements() {
            for b in self.pi.elements() {
                for gamma in 0..self.delta() {
                    out.push(HeisenbergElement { a: a.clone(), b: b.clone(), gamma, sign: 1 });
                }
            }
        }
        out
    }
}

/// Matrix with exactly one nonzero entry `±ζ^e` per column, `ζ = exp(2πi/m)`.
/// The overall sign is shared by all entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialMatrix {
    /// Column `j` has its entry in row `perm[j]`.
    perm: Vec<usize>,
    exps: Vec<i64>,
    modulus: i64,
    negated: bool,
}

impl MonomialMatrix {
    pub fn new(perm: Vec<usize>, exps: Vec<i64>, modulus: i64) -> Self {
        let exps = exps.into_iter().map(|e| e.rem_euclid(modulus)).collect();
        MonomialMatrix { perm, exps, modulus, negated: false }
    }

    pub fn identity(n: usize, modulus: i64) -> Self {
        Self::new((0..n).collect(), vec![0; n], modulus)
    }

    /// Diagonal matrix `diag(ζ^{e_0}, ζ^{e_1}, ...)`.
    pub fn diagonal(exps: Vec<i64>, modulus: i64) -> Self {
        Self::new((0..exps.len()).collect(), exps, modulus)
    }

    /// Permutation matrix sending `e_j` to `e_{perm[j]}`.
    pub fn permutation(perm: Vec<usize>, modulus: i64) -> Self {
        let n = perm.len();
        Self::new(perm, vec![0; n], modulus)
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn modulus(&self) -> i64 {
        self.modulus
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn exps(&self) -> &[i64] {
        &self.exps
    }

    pub fn is_negated(&self) -> bool {
        self.negated
    }

    pub fn mul(&self, rhs: &MonomialMatrix) -> MonomialMatrix {
        assert_eq!(self.modulus, rhs.modulus);
        assert_eq!(self.dim(), rhs.dim());
        let perm = rhs.perm.iter().map(|&p| self.perm[p]).collect();
        let exps = rhs
            .exps
            .iter()
            .zip(&rhs.perm)
            .map(|(&e, &p)| (e + self.exps[p]).rem_euclid(self.modulus))
            .collect();
        MonomialMatrix { perm, exps, modulus: self.modulus, negated: self.negated ^ rhs.negated }
    }

    pub fn pow(&self, k: u64) -> MonomialMatrix {
        let mut out = Self::identity(self.dim(), self.modulus);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Multiplies every entry by `ζ^e`.
    pub fn scaled(&self, e: i64) -> MonomialMatrix {
        let mut out = self.clone();
        for x in &mut out.exps {
            *x = (*x + e).rem_euclid(self.modulus);
        }
        out
    }

    pub fn scaled_by_sign(&self) -> MonomialMatrix {
        let mut out = self.clone();
        out.negated = !out.negated;
        out
    }

    pub fn is_identity(&self) -> bool {
        !self.negated
            && self.perm.iter().enumerate().all(|(j, &p)| p == j)
            && self.exps.iter().all(|&e| e == 0)
    }

    fn root(&self, e: i64) -> Complex64 {
        let z = Complex64::from_polar(1.0, 2.0 * PI * e as f64 / self.modulus as f64);
        if self.negated { -z } else { z }
    }

    pub fn trace(&self) -> Complex64 {
        self.perm
            .iter()
            .enumerate()
            .filter(|&(j, &p)| p == j)
            .map(|(j, _)| self.root(self.exps[j]))
            .sum()
    }

    /// Dense complex matrix, row-major.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let n = self.dim();
        let mut m = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for j in 0..n {
            m[self.perm[j]][j] = self.root(self.exps[j]);
        }
        m
    }

    /// `max |M M† − I|` computed on the dense matrix.
    pub fn unitarity_defect(&self) -> f64 {
        let m = self.to_dense();
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let s: Complex64 = (0..n).map(|k| m[i][k] * m[j][k].conj()).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }
}

/// Basis ordering for the magnetic translation matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BasisOrder {
    /// `Φ_{i·u}`, `i = 0..δ−1`; requires `[u]` to generate `Π`.
    UPowers,
    /// Elements of `Π` in [`PiGroup`] order.
    PiIndex,
}

/// Matrices of `T1` and `T2` on the span of `(Φ_c)`.
#[derive(Debug, Clone)]
pub struct RepMatrices {
    pub t1: MonomialMatrix,
    pub t2: MonomialMatrix,
    /// `q = ζ^{q_exponent}`, `ζ = exp(2πi/δ)`.
    pub q_exponent: i64,
    pub delta: i64,
    pub order: BasisOrder,
    /// Basis labels `c` in the chosen order.
    pub basis: Vec<PiElement>,
}

impl RepMatrices {
    /// `T1^δ = I`, `T2^δ = I` and `T1T2 = q·T2T1`, all exact.
    pub fn relations_hold(&self) -> (bool, bool, bool) {
        let d = self.delta as u64;
        let lhs = self.t1.mul(&self.t2);
        let rhs = self.t2.mul(&self.t1).scaled(self.q_exponent);
        (self.t1.pow(d).is_identity(), self.t2.pow(d).is_identity(), lhs == rhs)
    }

    /// `q` as a complex number.
    pub fn q(&self) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * self.q_exponent as f64 / self.delta as f64)
    }
}

/// `T1` (shift of every coordinate by `1/d`) and `T2` (by `τ/d`) acting on
/// `Φ_c`: `T1 Φ_c = υ(u,c) Φ_c`, `T2 Φ_c = Φ_{c+u}`.
pub fn rep_matrices(datum: &WenDatum, order: BasisOrder) -> Result<RepMatrices, HeisenbergError> {
    let k = datum.matrix();
    let delta = k.delta();
    let group = HeisenbergGroup::new(k);
    let u = wen::u_element(k);
    let q_exponent = group.upsilon(&u, &u);
    let basis: Vec<PiElement> = match order {
        BasisOrder::UPowers => {
            let order = datum.u_order();
            if order != delta {
                return Err(HeisenbergError::NonCyclicBasisOrder { order, delta });
            }
            (0..delta).map(|i| u.scale(i, delta)).collect()
        }
        BasisOrder::PiIndex => group.pi().elements().to_vec(),
    };
    let position = |c: &PiElement| basis.iter().position(|x| x == c).expect("basis covers Π");
    let t1 = MonomialMatrix::diagonal(basis.iter().map(|c| group.upsilon(&u, c)).collect(), delta);
    let t2 = MonomialMatrix::permutation(basis.iter().map(|c| position(&c.add(&u, delta))).collect(), delta);
    Ok(RepMatrices { t1, t2, q_exponent, delta, order, basis })
}

/// Order of `q = exp(2πi n/d)` computed from the particle counts.
pub fn q_order_from_counts(datum: &WenDatum) -> i64 {
    datum.d() / datum.n().gcd(&datum.d())
}

/// `(χ,χ) = (1/|G|) Σ_x |tr ρ(x)|²` for an arbitrary trace function on `G_K`.
pub fn character_norm<F>(group: &HeisenbergGroup, trace: F) -> f64
where
    F: Fn(&HeisenbergElement) -> Complex64,
{
    let elements = group.elements();
    let total: f64 = elements.iter().map(|x| trace(x).norm_sqr()).sum();
    total / elements.len() as f64
}

/// Character norm of the standard representation `((a,b),γ) ↦ γR_bS_a`.
/// Equals 1 exactly when the representation is irreducible.
pub fn irreducibility_norm(k: &WenMatrix) -> Result<f64, HeisenbergError> {
    if k.delta() > MAX_NORM_DELTA {
        return Err(HeisenbergError::DeltaTooLarge { delta: k.delta(), max: MAX_NORM_DELTA });
    }
    let group = HeisenbergGroup::new(k);
    Ok(character_norm(&group, |x| group.represent(x).trace()))
}
