//! Jacobi theta functions with characteristics and multivariate Riemann theta
//! functions, evaluated by truncated lattice sums with a rigorous Gaussian
//! tail bound.
//!
//! ```text
//! θ[a,b](z|τ) = Σ_k exp(πiτ(k+a)² + 2πi(k+a)(z+b))
//! Θ[a,b](z|Ω) = Σ_{k∈Zᵍ} exp(πi(k+a)ᵀΩ(k+a) + 2πi(k+a)ᵀ(z+b))
//! ```
//!
//! Characteristics are used exactly as given. Shifting them by integers
//! changes the value by the factor returned from
//! [`ThetaCharacteristics::reduced`].

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest tolerance accepted by the one-dimensional evaluator.
pub const MIN_TOL_1D: f64 = 1e-15;
/// Smallest tolerance accepted by the multivariate evaluator.
pub const MIN_TOL_MULTI: f64 = 1e-14;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThetaError {
    #[error("NonconvergentModulus: Im tau = {0} must be positive")]
    NonconvergentModulus(f64),
    #[error("ToleranceTooSmall: {tol} is below the supported minimum {min}")]
    ToleranceTooSmall { tol: f64, min: f64 },
    #[error("AsymmetricOmega: |Omega - Omega^T| = {0}")]
    AsymmetricOmega(f64),
    #[error("ImagNotPositiveDefinite: Cholesky factorisation of Im Omega failed")]
    ImagNotPositiveDefinite,
    #[error("DimensionMismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("NonFinite: {0} contains a non-finite value")]
    NonFinite(&'static str),
}

/// Modulus `τ` of the torus `C/(Z + τZ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusParams {
    tau: Complex64,
}

impl TorusParams {
    pub fn new(tau: Complex64) -> Result<Self, ThetaError> {
        if !(tau.re.is_finite() && tau.im.is_finite()) {
            return Err(ThetaError::NonFinite("tau"));
        }
        if tau.im <= 0.0 {
            return Err(ThetaError::NonconvergentModulus(tau.im));
        }
        Ok(TorusParams { tau })
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    /// `Im τ`.
    pub fn t(&self) -> f64 {
        self.tau.im
    }

    /// `Re τ`.
    pub fn s(&self) -> f64 {
        self.tau.re
    }

    /// The point `x + τy`.
    pub fn point(&self, x: f64, y: f64) -> Complex64 {
        x + self.tau * y
    }

    /// Real coordinates `(x, y)` with `z = x + τy`.
    pub fn coordinates(&self, z: Complex64) -> (f64, f64) {
        let y = z.im / self.tau.im;
        (z.re - self.tau.re * y, y)
    }

    /// `σ = (1 + τ)/2`.
    pub fn sigma(&self) -> Complex64 {
        (1.0 + self.tau) / 2.0
    }
}

fn check_tol(tol: f64, min: f64) -> Result<(), ThetaError> {
    if !(tol >= min) || !tol.is_finite() {
        return Err(ThetaError::ToleranceTooSmall { tol, min });
    }
    Ok(())
}

/// Smallest `W` with `2·exp(−πtW²)/(1 − exp(−2πtW)) ≤ tol/2`.
///
/// This bounds the sum of all terms of the one-dimensional series farther
/// than `W` from its peak, relative to the peak term.
fn window_1d(t: f64, tol: f64) -> f64 {
    let mut w = ((4.0 / tol).ln() / (PI * t)).sqrt();
    loop {
        let tail = 2.0 * (-PI * t * w * w).exp() / (1.0 - (-2.0 * PI * t * w).exp());
        if tail <= tol / 2.0 {
            return w;
        }
        w += 0.05;
    }
}

/// `θ[a,b](z|τ)`, accurate to `tol` relative to `max(1, peak term)`.
pub fn jacobi_theta(a: f64, b: f64, z: Complex64, tau: &TorusParams, tol: f64) -> Result<Complex64, ThetaError> {
    check_tol(tol, MIN_TOL_1D)?;
    if !(a.is_finite() && b.is_finite() && z.re.is_finite() && z.im.is_finite()) {
        return Err(ThetaError::NonFinite("theta arguments"));
    }
    let t = tau.t();
    let w = window_1d(t, tol);
    // |term(n)| = exp(−πt(n − n0)² + πt n0²) with n = k + a and n0 = −Im z / t.
    let n0 = -z.im / t;
    let k_lo = (n0 - w - a).ceil() as i64;
    let k_hi = (n0 + w - a).floor() as i64;
    let zb = z + b;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in k_lo..=k_hi {
        let n = k as f64 + a;
        sum += (PI * I * tau.tau() * n * n + 2.0 * PI * I * n * zb).exp();
    }
    Ok(sum)
}

/// The odd theta function `ϑ(z) = θ[1/2,1/2](z|τ)`.
pub fn theta_odd(z: Complex64, tau: &TorusParams, tol: f64) -> Result<Complex64, ThetaError> {
    jacobi_theta(0.5, 0.5, z, tau, tol)
}

/// `φ(z) = exp(−πiτ − 2πiz)`, the multiplier of `ϑ` under `z ↦ z + τ` (up to sign).
pub fn phi(z: Complex64, tau: &TorusParams) -> Complex64 {
    (-PI * I * tau.tau() - 2.0 * PI * I * z).exp()
}

/// Real characteristic vectors `a, b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaCharacteristics {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl ThetaCharacteristics {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self, ThetaError> {
        if a.len() != b.len() {
            return Err(ThetaError::DimensionMismatch { expected: a.len(), got: b.len() });
        }
        if a.iter().chain(&b).any(|x| !x.is_finite()) {
            return Err(ThetaError::NonFinite("characteristics"));
        }
        Ok(ThetaCharacteristics { a, b })
    }

    pub fn zero(g: usize) -> Self {
        ThetaCharacteristics { a: vec![0.0; g], b: vec![0.0; g] }
    }

    pub fn g(&self) -> usize {
        self.a.len()
    }

    /// Characteristics reduced into `[0,1)ᵍ` together with the factor `f` such
    /// that `Θ[a,b] = f·Θ[a',b']`.
    ///
    /// Shifting `a` by an integer vector reindexes the series; shifting `b` by
    /// `l` multiplies each term by `exp(2πi(k+a)ᵀl) = exp(2πi aᵀl)`.
    pub fn reduced(&self) -> (ThetaCharacteristics, Complex64) {
        let a: Vec<f64> = self.a.iter().map(|x| x.rem_euclid(1.0)).collect();
        let b: Vec<f64> = self.b.iter().map(|x| x.rem_euclid(1.0)).collect();
        let phase: f64 = a
            .iter()
            .zip(self.b.iter().zip(&b))
            .map(|(ar, (bo, br))| ar * (bo - br))
            .sum();
        (ThetaCharacteristics { a, b }, (2.0 * PI * I * phase).exp())
    }
}

/// Symmetric complex matrix with positive definite imaginary part.
#[derive(Debug, Clone)]
pub struct OmegaMatrix {
    omega: Vec<Vec<Complex64>>,
    imag: DMatrix<f64>,
    imag_cholesky: DMatrix<f64>,
    imag_inverse: DMatrix<f64>,
    min_eigenvalue: f64,
}

impl OmegaMatrix {
    pub fn new(omega: Vec<Vec<Complex64>>) -> Result<Self, ThetaError> {
        let g = omega.len();
        for row in &omega {
            if row.len() != g {
                return Err(ThetaError::DimensionMismatch { expected: g, got: row.len() });
            }
            if row.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
                return Err(ThetaError::NonFinite("Omega"));
            }
        }
        let mut defect: f64 = 0.0;
        for i in 0..g {
            for j in 0..g {
                defect = defect.max((omega[i][j] - omega[j][i]).norm());
            }
        }
        if defect > 1e-14 {
            return Err(ThetaError::AsymmetricOmega(defect));
        }
        let imag = DMatrix::from_fn(g, g, |i, j| 0.5 * (omega[i][j].im + omega[j][i].im));
        let chol = imag.clone().cholesky().ok_or(ThetaError::ImagNotPositiveDefinite)?;
        let imag_cholesky = chol.l();
        let imag_inverse = chol.inverse();
        let min_eigenvalue = imag.clone().symmetric_eigen().eigenvalues.min();
        if !(min_eigenvalue > 0.0) {
            return Err(ThetaError::ImagNotPositiveDefinite);
        }
        Ok(OmegaMatrix { omega, imag, imag_cholesky, imag_inverse, min_eigenvalue })
    }

    /// `Ω = τK`.
    pub fn from_tau_k(tau: &TorusParams, k: &[Vec<i64>]) -> Result<Self, ThetaError> {
        Self::new(
            k.iter()
                .map(|r| r.iter().map(|&x| tau.tau() * x as f64).collect())
                .collect(),
        )
    }

    /// Diagonal `Ω` with the given entries.
    pub fn diagonal(entries: &[Complex64]) -> Result<Self, ThetaError> {
        let g = entries.len();
        Self::new(
            (0..g)
                .map(|i| {
                    (0..g)
                        .map(|j| if i == j { entries[i] } else { Complex64::new(0.0, 0.0) })
                        .collect()
                })
                .collect(),
        )
    }

    pub fn g(&self) -> usize {
        self.omega.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.omega[i][j]
    }

    pub fn rows(&self) -> &[Vec<Complex64>] {
        &self.omega
    }

    /// Lower-triangular `L` with `Im Ω = L Lᵀ`.
    pub fn imag_cholesky(&self) -> &DMatrix<f64> {
        &self.imag_cholesky
    }

    pub fn min_imag_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// `Ω·v`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.omega
            .iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `Ω·l` for a real vector.
    pub fn apply_real(&self, v: &[f64]) -> Vec<Complex64> {
        self.omega
            .iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Enumeration bound for the multivariate lattice sum.
///
/// With `Y = Im Ω` and the series centred at `c = −Y⁻¹ Im z`, all lattice
/// points `n` with `(n−c)ᵀY(n−c) ≤ R²` are summed. For any `0 < s < 1` the
/// discarded terms total at most
/// `exp(−π(1−s)R²)·(1 + 1/√(sλ_min))ᵍ` times the peak term, and `R` is the
/// smallest radius (over a grid of `s`) making this at most `tol/2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationPlan {
    pub radius: f64,
    pub s: f64,
    pub tail_bound: f64,
    /// `R·√((Y⁻¹)_ii)`: the ellipsoid's extent along each axis.
    pub half_widths: Vec<f64>,
}

impl TruncationPlan {
    /// The same plan with the radius multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        TruncationPlan {
            radius: self.radius * factor,
            s: self.s,
            tail_bound: self.tail_bound,
            half_widths: self.half_widths.iter().map(|h| h * factor).collect(),
        }
    }
}

/// Radius and per-axis bounds such that the discarded tail is below `tol/2`
/// relative to the peak term. The centre (and thus `a`) only shifts the box,
/// so the radius is independent of `a`.
pub fn truncation_plan(omega: &OmegaMatrix, tol: f64) -> TruncationPlan {
    let g = omega.g() as f64;
    let lambda = omega.min_eigenvalue;
    let target = (tol / 2.0).ln();
    let mut best: Option<(f64, f64)> = None;
    for i in 1..100 {
        let s = i as f64 / 100.0;
        let log_sum = g * (1.0 + 1.0 / (s * lambda).sqrt()).ln();
        // exp(−π(1−s)R²) · exp(log_sum) ≤ tol/2
        let r2 = (log_sum - target) / (PI * (1.0 - s));
        let r = r2.max(0.0).sqrt();
        if best.is_none_or(|(br, _)| r < br) {
            best = Some((r, s));
        }
    }
    let (radius, s) = best.expect("grid is non-empty");
    let tail_bound =
        (-PI * (1.0 - s) * radius * radius).exp() * (1.0 + 1.0 / (s * lambda).sqrt()).powf(g);
    let half_widths = (0..omega.g())
        .map(|i| radius * omega.imag_inverse[(i, i)].sqrt())
        .collect();
    TruncationPlan { radius, s, tail_bound, half_widths }
}

/// `Θ[a,b](z|Ω)` to `tol` relative to `max(1, peak term)`.
pub fn riemann_theta(
    chars: &ThetaCharacteristics,
    z: &[Complex64],
    omega: &OmegaMatrix,
    tol: f64,
) -> Result<Complex64, ThetaError> {
    check_tol(tol, MIN_TOL_MULTI)?;
    let plan = truncation_plan(omega, tol);
    check_dims(chars, z, omega)?;
    Ok(riemann_theta_with_plan(chars, z, omega, &plan))
}

/// Evaluates `Θ[a,b](z|Ω)` at many points sharing one truncation plan.
/// Results are in input order regardless of thread scheduling.
pub fn riemann_theta_batch(
    chars: &ThetaCharacteristics,
    zs: &[Vec<Complex64>],
    omega: &OmegaMatrix,
    tol: f64,
) -> Result<Vec<Complex64>, ThetaError> {
    check_tol(tol, MIN_TOL_MULTI)?;
    let plan = truncation_plan(omega, tol);
    for z in zs {
        check_dims(chars, z, omega)?;
    }
    Ok(zs
        .par_iter()
        .map(|z| riemann_theta_with_plan(chars, z, omega, &plan))
        .collect())
}

fn check_dims(chars: &ThetaCharacteristics, z: &[Complex64], omega: &OmegaMatrix) -> Result<(), ThetaError> {
    let g = omega.g();
    for len in [chars.a.len(), chars.b.len(), z.len()] {
        if len != g {
            return Err(ThetaError::DimensionMismatch { expected: g, got: len });
        }
    }
    if z.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(ThetaError::NonFinite("z"));
    }
    Ok(())
}

/// Lattice sum over the ellipsoid described by `plan`, centred for this `z`.
pub fn riemann_theta_with_plan(
    chars: &ThetaCharacteristics,
    z: &[Complex64],
    omega: &OmegaMatrix,
    plan: &TruncationPlan,
) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for_each_term(chars, z, omega, plan, |_, term| sum += term);
    sum
}

/// Visits every retained lattice point `n = k + a` with its series term
/// `exp(πi nᵀΩn + 2πi nᵀ(z+b))`.
///
/// The outer `g−1` axes run over the circumscribing box; the last axis runs
/// over the exact chord of the ellipsoid, with consecutive terms obtained by
/// the multiplicative recurrence `term ← term·r, r ← r·exp(2πiΩ_gg)`.
pub fn for_each_term<F>(
    chars: &ThetaCharacteristics,
    z: &[Complex64],
    omega: &OmegaMatrix,
    plan: &TruncationPlan,
    mut visit: F,
) where
    F: FnMut(&[f64], Complex64),
{
    let g = omega.g();
    let y = &omega.imag;
    let im_z: Vec<f64> = z.iter().map(|v| v.im).collect();
    // Centre in n-coordinates (n = k + a).
    let center: Vec<f64> = (0..g)
        .map(|i| -(0..g).map(|j| omega.imag_inverse[(i, j)] * im_z[j]).sum::<f64>())
        .collect();
    let zb: Vec<Complex64> = z.iter().zip(&chars.b).map(|(zi, bi)| zi + bi).collect();
    let last = g - 1;
    let r2 = plan.radius * plan.radius;
    let omega_ll = omega.omega[last][last];
    let step = (2.0 * PI * I * omega_ll).exp();

    let lo: Vec<i64> = (0..g)
        .map(|i| (center[i] - plan.half_widths[i] - chars.a[i]).ceil() as i64)
        .collect();
    let hi: Vec<i64> = (0..g)
        .map(|i| (center[i] + plan.half_widths[i] - chars.a[i]).floor() as i64)
        .collect();

    let mut k: Vec<i64> = lo[..last].to_vec();
    if (0..last).any(|i| lo[i] > hi[i]) {
        return;
    }
    let mut n = vec![0.0; g];
    loop {
        for i in 0..last {
            n[i] = k[i] as f64 + chars.a[i];
        }
        // Quadratic in x = n_last − c_last: Y_ll x² + 2βx + γ ≤ R².
        let dx: Vec<f64> = (0..last).map(|i| n[i] - center[i]).collect();
        let beta: f64 = (0..last).map(|i| y[(last, i)] * dx[i]).sum();
        let gamma: f64 = (0..last)
            .map(|i| (0..last).map(|j| dx[i] * y[(i, j)] * dx[j]).sum::<f64>())
            .sum();
        let yll = y[(last, last)];
        let disc = beta * beta - yll * (gamma - r2);
        if disc >= 0.0 {
            let root = disc.sqrt();
            let x_lo = (-beta - root) / yll;
            let x_hi = (-beta + root) / yll;
            let k_lo = (center[last] + x_lo - chars.a[last]).ceil() as i64;
            let k_hi = (center[last] + x_hi - chars.a[last]).floor() as i64;
            if k_lo <= k_hi {
                n[last] = k_lo as f64 + chars.a[last];
                // exponent(n) = πi nᵀΩn + 2πi nᵀ(z+b)
                let mut quad = Complex64::new(0.0, 0.0);
                for i in 0..g {
                    let mut row = Complex64::new(0.0, 0.0);
                    for j in 0..g {
                        row += omega.omega[i][j] * n[j];
                    }
                    quad += n[i] * row;
                }
                let lin: Complex64 = (0..g).map(|i| n[i] * zb[i]).sum();
                let mut term = (PI * I * quad + 2.0 * PI * I * lin).exp();
                // Ratio between consecutive terms along the last axis:
                // exp(2πi(Ωn)_g + πiΩ_gg + 2πi(z+b)_g).
                let omega_n: Complex64 = (0..g).map(|j| omega.omega[last][j] * n[j]).sum();
                let mut ratio =
                    (2.0 * PI * I * omega_n + PI * I * omega_ll + 2.0 * PI * I * zb[last]).exp();
                for kk in k_lo..=k_hi {
                    n[last] = kk as f64 + chars.a[last];
                    visit(&n, term);
                    term *= ratio;
                    ratio *= step;
                }
            }
        }
        // Advance the odometer over the outer axes.
        let mut axis = 0;
        loop {
            if axis == last {
                return;
            }
            k[axis] += 1;
            if k[axis] <= hi[axis] {
                break;
            }
            k[axis] = lo[axis];
            axis += 1;
        }
    }
}

/// Residual `|lhs − rhs| / max(1, |rhs|)` used by all quasi-periodicity checks.
pub fn residual(lhs: Complex64, rhs: Complex64) -> f64 {
    (lhs - rhs).norm() / rhs.norm().max(1.0)
}
