//! Chern data, rank, degree and slope of the magnetic bundle, and the dual
//! lattice of the center-of-mass torus.
//!
//! All coefficients are exact. Chern forms are represented by their
//! coefficient matrices in the coframe `dξ_p ∧ dξ̄_q`, with the prefactor
//! `−i/(2t)` kept symbolic.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::exact::{self, IntMatrix};
use crate::theta::TorusParams;
use crate::wen::WenMatrix;

/// Rank, degree, slope and stability of the restricted bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleInvariants {
    pub rank: i64,
    /// First Chern class coefficients, in units of `−i/(2t)·dξ_p∧dξ̄_q`.
    pub c1_coeff: IntMatrix,
    pub degree: i64,
    /// Reduced slope `−ρ/δ`.
    pub slope: BigRational,
    /// Slope as `−ρ/δ` without cancelling common factors.
    pub slope_unreduced: String,
    pub stable: bool,
    /// Coefficients of `c1^i`, `i = 0..=min(g, δ)`.
    pub total_chern: Vec<BigRational>,
    /// `(p, g)` when `K = K_{p,g}`.
    pub jain: Option<(i64, usize)>,
}

impl BundleInvariants {
    /// `g/(gp+1)` when the matrix is a Jain matrix.
    pub fn jain_fraction(&self) -> Option<BigRational> {
        self.jain
            .map(|(p, g)| BigRational::new(BigInt::from(g as i64), BigInt::from(g as i64 * p + 1)))
    }
}

/// First Chern class coefficient matrix: the adjugate `K♯`.
pub fn chern1_matrix(k: &WenMatrix) -> IntMatrix {
    k.adjugate().clone()
}

/// `C(δ, i)/δ^i` for `i = 0..=min(g, δ)`.
pub fn total_chern(k: &WenMatrix) -> Vec<BigRational> {
    let delta = BigInt::from(k.delta());
    let top = (k.g() as i64).min(k.delta());
    let mut binom = BigInt::one();
    let mut power = BigInt::one();
    let mut out = Vec::with_capacity(top as usize + 1);
    for i in 0..=top {
        if i > 0 {
            binom = binom * (&delta - BigInt::from(i - 1)) / BigInt::from(i);
            power *= &delta;
        }
        out.push(BigRational::new(binom.clone(), power.clone()));
    }
    out
}

pub fn restricted_invariants(k: &WenMatrix) -> BundleInvariants {
    let delta = k.delta();
    let rho = k.rho();
    BundleInvariants {
        rank: delta,
        c1_coeff: chern1_matrix(k),
        degree: -rho,
        slope: BigRational::new(BigInt::from(-rho), BigInt::from(delta)),
        slope_unreduced: format!("{}/{}", -rho, delta),
        stable: k.is_primary(),
        total_chern: total_chern(k),
        jain: k.as_jain(),
    }
}

/// Generators `(1/t)K⁻¹e_j` followed by `(1/t)τe_j` of the dual lattice
/// `(1/t)(K⁻¹Zᵍ + τZᵍ)`.
pub fn dual_lattice_generators(k: &WenMatrix, tau: &TorusParams) -> Vec<Vec<Complex64>> {
    let g = k.g();
    let inv = k.inverse_f64();
    let t = tau.t();
    let mut out: Vec<Vec<Complex64>> = (0..g)
        .map(|j| (0..g).map(|i| Complex64::new(inv[i][j] / t, 0.0)).collect())
        .collect();
    out.extend((0..g).map(|j| {
        (0..g)
            .map(|i| if i == j { tau.tau() / t } else { Complex64::new(0.0, 0.0) })
            .collect()
    }));
    out
}

/// Generators `e_j` followed by `τKe_j` of `Zᵍ + τKZᵍ`.
pub fn primal_lattice_generators(k: &WenMatrix, tau: &TorusParams) -> Vec<Vec<Complex64>> {
    let g = k.g();
    let mut out: Vec<Vec<Complex64>> = (0..g)
        .map(|j| (0..g).map(|i| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
        .collect();
    out.extend((0..g).map(|j| (0..g).map(|i| tau.tau() * k.entry(i, j) as f64).collect()));
    out
}

/// `Im Σ λ_j·conj(v_j)`.
pub fn pairing(lambda: &[Complex64], v: &[Complex64]) -> f64 {
    lambda.iter().zip(v).map(|(l, x)| l * x.conj()).sum::<Complex64>().im
}

/// Largest distance of a dual/primal pairing from the nearest integer.
pub fn max_pairing_defect(k: &WenMatrix, tau: &TorusParams) -> f64 {
    let dual = dual_lattice_generators(k, tau);
    let primal = primal_lattice_generators(k, tau);
    dual.iter()
        .flat_map(|l| primal.iter().map(move |v| pairing(l, v)))
        .map(|p| (p - p.round()).abs())
        .fold(0.0, f64::max)
}

/// Label/value rows for display.
pub fn describe(inv: &BundleInvariants) -> Vec<(String, String)> {
    let mut rows = vec![
        ("rank".to_string(), inv.rank.to_string()),
        ("degree".to_string(), inv.degree.to_string()),
        ("slope".to_string(), inv.slope_unreduced.clone()),
        ("slope (reduced)".to_string(), exact::rational_to_string(&inv.slope)),
        ("stable".to_string(), inv.stable.to_string()),
        (
            "total Chern".to_string(),
            inv.total_chern.iter().map(exact::rational_to_string).collect::<Vec<_>>().join(", "),
        ),
    ];
    if let Some(f) = inv.jain_fraction() {
        rows.push(("Jain fraction".to_string(), exact::rational_to_string(&f)));
    }
    rows
}

/// `|slope|`, the filling fraction of the state.
pub fn filling(inv: &BundleInvariants) -> BigRational {
    inv.slope.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wen::jain_matrix;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn jain_chern_matrix() {
        let k = jain_matrix(2, 3).unwrap();
        let c1 = chern1_matrix(&k);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(c1[i][j], if i == j { 2 * 2 + 1 } else { -2 });
            }
        }
        assert_eq!(chern1_matrix(&WenMatrix::new(vec![vec![5]]).unwrap()), vec![vec![1]]);
    }

    #[test]
    fn total_chern_values() {
        let k = jain_matrix(2, 2).unwrap();
        assert_eq!(total_chern(&k), vec![r(1, 1), r(1, 1), r(2, 5)]);
        let k = WenMatrix::new(vec![vec![1]]).unwrap();
        assert_eq!(total_chern(&k), vec![r(1, 1), r(1, 1)]);
    }

    #[test]
    fn restricted_examples() {
        let inv = restricted_invariants(&WenMatrix::new(vec![vec![3]]).unwrap());
        assert_eq!((inv.rank, inv.degree, inv.stable), (3, -1, true));
        let inv = restricted_invariants(&WenMatrix::new(vec![vec![2, 0], vec![0, 2]]).unwrap());
        assert_eq!((inv.rank, inv.degree, inv.stable), (4, -4, false));
        assert_eq!(inv.slope_unreduced, "-4/4");
        assert_eq!(inv.slope, r(-1, 1));
        let inv = restricted_invariants(&jain_matrix(2, 2).unwrap());
        assert_eq!(inv.slope, r(-2, 5));
        assert_eq!(inv.jain_fraction(), Some(r(2, 5)));
    }

    #[test]
    fn dual_generators() {
        let tau = TorusParams::new(Complex64::new(0.0, 1.0)).unwrap();
        let gens = dual_lattice_generators(&WenMatrix::new(vec![vec![2]]).unwrap(), &tau);
        assert_eq!(gens, vec![vec![Complex64::new(0.5, 0.0)], vec![Complex64::new(0.0, 1.0)]]);
        let tau = TorusParams::new(Complex64::new(0.3, 1.1)).unwrap();
        assert!(max_pairing_defect(&jain_matrix(2, 3).unwrap(), &tau) < 1e-12);
    }
}
