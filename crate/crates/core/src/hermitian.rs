//! Hermitian metrics on theta line bundles, scalar products by quadrature,
//! and Gram matrices of the center-of-mass and many-body bases.
//!
//! Points of the torus are written `z = x + τy` with `(x, y) ∈ [0,1)²`, and
//! `ξ = b + τa`. The one-particle weight of strength `k` is
//! `exp(−2πkty² − 4πaty)`; for `Θ`-functions of `K` it is
//! `exp(−2πt(y, Ky + 2a))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact;
use crate::theta::TorusParams;
use crate::wavefunctions::{split_xi, Configuration, WaveError, WaveFunctionSpec};
use crate::wen::{PiElement, WenDatum, WenMatrix};

/// Default Gauss–Legendre points per axis for center-of-mass integrals.
pub const DEFAULT_POINTS: usize = 48;
/// Largest number of tensor-grid evaluation points accepted.
pub const MAX_TENSOR_POINTS: u64 = 50_000_000;
/// Largest number of points per scrambled Sobol batch.
pub const MAX_BATCH: usize = 1 << 16;
/// Number of independently scrambled batches a QMC sample budget is split into.
pub const TARGET_BATCHES: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HermitianError {
    #[error("QuadratureTooCoarse: halving the grid from {points} points/axis moved the result by {shift:e} (> {tol:e})")]
    QuadratureTooCoarse { points: usize, shift: f64, tol: f64 },
    #[error("SamplingBudgetExceeded: {requested} evaluation points exceed the budget {budget}")]
    SamplingBudgetExceeded { requested: u64, budget: u64 },
    #[error("InvalidQuadrature: {0}")]
    InvalidQuadrature(String),
    #[error(transparent)]
    Wave(#[from] WaveError),
}

/// How an integral over a unit box is discretised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum QuadratureSpec {
    /// Tensor Gauss–Legendre rule with this many points per axis.
    TensorGauss { points: usize },
    /// Randomised quasi-Monte-Carlo: independently scrambled Sobol batches.
    QuasiMonteCarlo { samples: usize, seed: u64 },
}

impl QuadratureSpec {
    fn validate(&self) -> Result<(), HermitianError> {
        match *self {
            QuadratureSpec::TensorGauss { points } if points < 2 => {
                Err(HermitianError::InvalidQuadrature(format!("{points} points per axis")))
            }
            QuadratureSpec::QuasiMonteCarlo { samples, .. } if samples < 2 => {
                Err(HermitianError::InvalidQuadrature(format!("{samples} samples")))
            }
            _ => Ok(()),
        }
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n−1}(x)
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [−1, 1] → [0, 1].
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// `exp(−2πkty² − 4πaty)` with `z = x + τy`, `ξ = aτ + b`.
pub fn metric_weight_1d(k: f64, xi: Complex64, tau: &TorusParams, z: Complex64) -> f64 {
    let (a, _) = split_xi(xi, tau);
    let (_, y) = tau.coordinates(z);
    let t = tau.t();
    (-2.0 * PI * k * t * y * y - 4.0 * PI * a * t * y).exp()
}

/// `exp(−2πt(y, Ky + 2a))` with `z = x + τy` and `ξ = aτ + b` componentwise.
pub fn metric_weight_g(k: &WenMatrix, xi: &[Complex64], tau: &TorusParams, z: &[Complex64]) -> f64 {
    let a: Vec<f64> = xi.iter().map(|&x| split_xi(x, tau).0).collect();
    let y: Vec<f64> = z.iter().map(|&w| tau.coordinates(w).1).collect();
    weight_from_y(k.matrix(), &a, tau.t(), &y)
}

fn weight_from_y(k: &[Vec<i64>], a: &[f64], t: f64, y: &[f64]) -> f64 {
    let g = y.len();
    let mut form = 0.0;
    for i in 0..g {
        let ky: f64 = (0..g).map(|j| k[i][j] as f64 * y[j]).sum();
        form += y[i] * (ky + 2.0 * a[i]);
    }
    (-2.0 * PI * t * form).exp()
}

/// `κ(ξ) = (2tδ)^{−g/2}·exp(2πt(a, K⁻¹a))`, the common norm square of the `H_c`.
pub fn kappa_closed_form(k: &WenMatrix, xi: &[Complex64], tau: &TorusParams) -> f64 {
    let g = k.g();
    let t = tau.t();
    let a: Vec<f64> = xi.iter().map(|&x| split_xi(x, tau).0).collect();
    let inv = k.inverse_f64();
    let form: f64 = (0..g).map(|i| (0..g).map(|j| a[i] * inv[i][j] * a[j]).sum::<f64>()).sum();
    (2.0 * t * k.delta() as f64).powf(-(g as f64) / 2.0) * (2.0 * PI * t * form).exp()
}

/// `(2t)^{−g/2}·δ^{−1/2}·exp(2πt(a, K⁻¹a))`.
///
/// Integrating `|H_c|²` over `x` keeps only the diagonal terms of the series
/// (the frequencies `Kn` are distinct), and the sum over `n ∈ c + Zᵍ` of the
/// `y`-integrals over `[0,1]ᵍ` assembles `∫_{Rᵍ} exp(−2πt(v,Kv+2a)) dv`.
/// For `g = 1` this coincides with [`kappa_closed_form`]; for `g ≥ 2` the two
/// differ by the factor `δ^{(g−1)/2}`.
pub fn kappa_gaussian_integral(k: &WenMatrix, xi: &[Complex64], tau: &TorusParams) -> f64 {
    let g = k.g() as f64;
    let delta = k.delta() as f64;
    kappa_closed_form(k, xi, tau) * delta.powf((g - 1.0) / 2.0)
}

/// Multi-index odometer over `{0..n}^dim`, flattened.
fn multi_index(mut flat: usize, n: usize, dim: usize, out: &mut [usize]) {
    for slot in out.iter_mut().take(dim) {
        *slot = flat % n;
        flat /= n;
    }
}

fn tensor_cost(points: usize, dim: usize) -> Result<u64, HermitianError> {
    let requested = (points as u64).checked_pow(dim as u32).unwrap_or(u64::MAX);
    if requested > MAX_TENSOR_POINTS {
        return Err(HermitianError::SamplingBudgetExceeded { requested, budget: MAX_TENSOR_POINTS });
    }
    Ok(requested)
}

/// Tensor Gauss–Legendre estimate of the Gram matrix
/// `G_ij = ∫_{[0,1]^{2g}} exp(−2πt(y,Ky+2a)) F_i(x+τy) conj(F_j(x+τy)) dx dy`
/// for a family of functions evaluated jointly at each point.
///
/// `eval(w, out)` writes the values of all functions at `w` into `out`.
pub fn center_gram_tensor<F>(
    k: &WenMatrix,
    xi: &[Complex64],
    tau: &TorusParams,
    count: usize,
    points: usize,
    eval: F,
) -> Result<Vec<Vec<Complex64>>, HermitianError>
where
    F: Fn(&[Complex64], &mut [Complex64]) + Sync,
{
    let g = k.g();
    tensor_cost(points, 2 * g)?;
    let (nodes, weights) = gauss_legendre(points);
    let a: Vec<f64> = xi.iter().map(|&x| split_xi(x, tau).0).collect();
    let per_axis = points.pow(g as u32);
    let partials: Vec<Vec<Complex64>> = (0..per_axis)
        .into_par_iter()
        .map(|iy| {
            let mut idx = vec![0; g];
            multi_index(iy, points, g, &mut idx);
            let y: Vec<f64> = idx.iter().map(|&i| nodes[i]).collect();
            let wy: f64 = idx.iter().map(|&i| weights[i]).product::<f64>()
                * weight_from_y(k.matrix(), &a, tau.t(), &y);
            let mut acc = vec![Complex64::new(0.0, 0.0); count * count];
            let mut values = vec![Complex64::new(0.0, 0.0); count];
            let mut w = vec![Complex64::new(0.0, 0.0); g];
            for ix in 0..per_axis {
                multi_index(ix, points, g, &mut idx);
                let mut wx = 1.0;
                for j in 0..g {
                    w[j] = tau.point(nodes[idx[j]], y[j]);
                    wx *= weights[idx[j]];
                }
                eval(&w, &mut values);
                for i in 0..count {
                    let vi = values[i] * wx;
                    for j in 0..count {
                        acc[i * count + j] += vi * values[j].conj();
                    }
                }
            }
            acc.iter().map(|v| v * wy).collect()
        })
        .collect();
    let mut total = vec![Complex64::new(0.0, 0.0); count * count];
    for p in &partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    Ok((0..count).map(|i| total[i * count..(i + 1) * count].to_vec()).collect())
}

/// `⟨F1, F2⟩` on the center-of-mass torus by tensor Gauss–Legendre.
///
/// With `check_tol = Some(tol)` the estimate is repeated on a grid of half
/// the size and `QuadratureTooCoarse` is returned when the two differ by more
/// than `tol` relative to `max(1, |⟨F1,F2⟩|)`.
#[allow(clippy::too_many_arguments)]
pub fn inner_product_center<F1, F2>(
    k: &WenMatrix,
    xi: &[Complex64],
    tau: &TorusParams,
    f1: F1,
    f2: F2,
    points: usize,
    check_tol: Option<f64>,
) -> Result<Complex64, HermitianError>
where
    F1: Fn(&[Complex64]) -> Complex64 + Sync,
    F2: Fn(&[Complex64]) -> Complex64 + Sync,
{
    QuadratureSpec::TensorGauss { points }.validate()?;
    let eval = |w: &[Complex64], out: &mut [Complex64]| {
        out[0] = f1(w);
        out[1] = f2(w);
    };
    let fine = center_gram_tensor(k, xi, tau, 2, points, eval)?[0][1];
    if let Some(tol) = check_tol {
        let coarse = center_gram_tensor(k, xi, tau, 2, points / 2, eval)?[0][1];
        let shift = (fine - coarse).norm() / fine.norm().max(1.0);
        if shift > tol {
            return Err(HermitianError::QuadratureTooCoarse { points, shift, tol });
        }
    }
    Ok(fine)
}

/// Measured Gram matrix with error estimates and scalarness diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct GramReport {
    pub basis: Vec<String>,
    pub matrix: Vec<Vec<Complex64>>,
    /// Zero for tensor rules (see `coarse_shift`), batch standard errors for QMC.
    pub stderr: Vec<Vec<f64>>,
    pub scheme: QuadratureSpec,
    pub evaluations: u64,
    /// `κ(ξ) = (2tδ)^{−g/2}·exp(2πt(a, K⁻¹a))`.
    pub kappa_ref: Option<f64>,
    /// Gaussian integral of the series term by term:
    /// `(2t)^{−g/2}·δ^{−1/2}·exp(2πt(a, K⁻¹a))`.
    pub kappa_integral: Option<f64>,
    /// Max off-diagonal modulus divided by the mean diagonal.
    pub scalar_deviation: f64,
    /// Max |G_ii − mean| divided by the mean diagonal.
    pub diag_spread: f64,
    /// Max |G − G†|.
    pub hermitian_defect: f64,
    /// For tensor rules: max entry change when the grid is halved.
    pub coarse_shift: Option<f64>,
    /// For QMC: max over pairs of |G_ii − G_jj| divided by the batch standard
    /// error of that difference.
    pub diag_difference_z: Option<f64>,
    /// For QMC: max over off-diagonals of |G_ij| divided by its standard error.
    pub offdiag_z: Option<f64>,
    pub primary: bool,
}

impl GramReport {
    fn from_matrix(basis: Vec<String>, matrix: Vec<Vec<Complex64>>, scheme: QuadratureSpec, evaluations: u64, primary: bool) -> Self {
        let n = matrix.len();
        let mean = (0..n).map(|i| matrix[i][i].re).sum::<f64>() / n as f64;
        let mut off: f64 = 0.0;
        let mut herm: f64 = 0.0;
        let mut spread: f64 = 0.0;
        for i in 0..n {
            spread = spread.max((matrix[i][i].re - mean).abs());
            for j in 0..n {
                if i != j {
                    off = off.max(matrix[i][j].norm());
                }
                herm = herm.max((matrix[i][j] - matrix[j][i].conj()).norm());
            }
        }
        GramReport {
            basis,
            stderr: vec![vec![0.0; n]; n],
            matrix,
            scheme,
            evaluations,
            kappa_ref: None,
            kappa_integral: None,
            scalar_deviation: off / mean,
            diag_spread: spread / mean,
            hermitian_defect: herm,
            coarse_shift: None,
            diag_difference_z: None,
            offdiag_z: None,
            primary,
        }
    }

    pub fn mean_diagonal(&self) -> f64 {
        let n = self.matrix.len();
        (0..n).map(|i| self.matrix[i][i].re).sum::<f64>() / n as f64
    }

    /// Max relative deviation of the diagonal from `κ`.
    pub fn kappa_deviation(&self) -> Option<f64> {
        let kappa = self.kappa_ref?;
        Some(
            (0..self.matrix.len())
                .map(|i| (self.matrix[i][i].re - kappa).abs() / kappa)
                .fold(0.0, f64::max),
        )
    }

    /// Max relative deviation of the diagonal from the term-by-term integral.
    pub fn kappa_integral_deviation(&self) -> Option<f64> {
        let kappa = self.kappa_integral?;
        Some(
            (0..self.matrix.len())
                .map(|i| (self.matrix[i][i].re - kappa).abs() / kappa)
                .fold(0.0, f64::max),
        )
    }

    /// Gram matrix of the basis permuted by `perm` (new index `i` holds old `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> Vec<Vec<Complex64>> {
        perm.iter().map(|&i| perm.iter().map(|&j| self.matrix[i][j]).collect()).collect()
    }
}

/// Gram matrix of `(H_c)_{c∈Π}` (in [`crate::wen::PiGroup`] order) by tensor
/// Gauss–Legendre, compared with `κ(ξ)`.
///
/// For each quadrature row `y` the series of every `H_c` is enumerated once and
/// evaluated on the whole `x`-grid from tables of `exp(2πi f x)`; the values
/// are the same truncated series as [`WaveFunctionSpec::center_basis`].
pub fn gram_center(
    k: &WenMatrix,
    xi: &[Complex64],
    tau: &TorusParams,
    points: usize,
    check_tol: Option<f64>,
) -> Result<GramReport, HermitianError> {
    QuadratureSpec::TensorGauss { points }.validate()?;
    let spec = WaveFunctionSpec::new(WenDatum::minimal(k.clone()), xi.to_vec(), *tau, crate::wavefunctions::DEFAULT_TOL)?;
    let basis: Vec<PiElement> = spec.pi().elements().to_vec();
    let matrix = center_gram_fourier(&spec, &basis, points)?;
    let evaluations = tensor_cost(points, 2 * k.g())?;
    let labels = basis.iter().map(|c| c.display(k.delta())).collect();
    let mut report = GramReport::from_matrix(labels, matrix, QuadratureSpec::TensorGauss { points }, evaluations, k.is_primary());
    report.kappa_ref = Some(kappa_closed_form(k, xi, tau));
    report.kappa_integral = Some(kappa_gaussian_integral(k, xi, tau));
    if let Some(tol) = check_tol {
        let coarse = center_gram_fourier(&spec, &basis, points / 2)?;
        let scale = report.mean_diagonal();
        let shift = report
            .matrix
            .iter()
            .flatten()
            .zip(coarse.iter().flatten())
            .map(|(a, b)| (a - b).norm() / scale)
            .fold(0.0, f64::max);
        report.coarse_shift = Some(shift);
        if shift > tol {
            return Err(HermitianError::QuadratureTooCoarse { points, shift, tol });
        }
    }
    Ok(report)
}

fn center_gram_fourier(spec: &WaveFunctionSpec, basis: &[PiElement], points: usize) -> Result<Vec<Vec<Complex64>>, HermitianError> {
    let k = spec.datum().matrix();
    let g = k.g();
    let tau = spec.tau();
    tensor_cost(points, 2 * g)?;
    let (nodes, weights) = gauss_legendre(points);
    let (a, _) = spec.xi_split();
    let chars: Vec<Vec<f64>> = basis.iter().map(|c| c.to_f64(spec.delta())).collect();
    let count = basis.len();
    let per_axis = points.pow(g as u32);
    let partials: Vec<Vec<Complex64>> = (0..per_axis)
        .into_par_iter()
        .map(|iy| {
            let mut idx = vec![0; g];
            multi_index(iy, points, g, &mut idx);
            let y: Vec<f64> = idx.iter().map(|&i| nodes[i]).collect();
            let wy: f64 = idx.iter().map(|&i| weights[i]).product::<f64>()
                * weight_from_y(k.matrix(), &a, tau.t(), &y);
            let terms: Vec<Vec<(Complex64, Vec<i64>)>> =
                chars.iter().map(|c| spec.center_fourier_terms(c, &y)).collect();
            let fmax = terms
                .iter()
                .flatten()
                .flat_map(|(_, f)| f.iter().map(|v| v.abs()))
                .max()
                .unwrap_or(0);
            let width = (2 * fmax + 1) as usize;
            // table[i * width + (f + fmax)] = exp(2πi f x_i)
            let table: Vec<Complex64> = nodes
                .iter()
                .flat_map(|&x| (-fmax..=fmax).map(move |f| Complex64::from_polar(1.0, 2.0 * PI * f as f64 * x)))
                .collect();
            let mut acc = vec![Complex64::new(0.0, 0.0); count * count];
            let mut values = vec![Complex64::new(0.0, 0.0); count];
            for ix in 0..per_axis {
                multi_index(ix, points, g, &mut idx);
                let wx: f64 = idx.iter().map(|&i| weights[i]).product();
                for (v, ts) in values.iter_mut().zip(&terms) {
                    let mut sum = Complex64::new(0.0, 0.0);
                    for (amp, f) in ts {
                        let mut term = *amp;
                        for j in 0..g {
                            term *= table[idx[j] * width + (f[j] + fmax) as usize];
                        }
                        sum += term;
                    }
                    *v = sum;
                }
                for i in 0..count {
                    let vi = values[i] * wx;
                    for j in 0..count {
                        acc[i * count + j] += vi * values[j].conj();
                    }
                }
            }
            acc.iter().map(|v| v * wy).collect()
        })
        .collect();
    let mut total = vec![Complex64::new(0.0, 0.0); count * count];
    for p in &partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    Ok((0..count).map(|i| total[i * count..(i + 1) * count].to_vec()).collect())
}

/// Product weight for a many-body configuration: each particle in layer `k`
/// carries the one-particle weight of strength `d` with `ξ_k`.
fn manybody_weight(spec: &WaveFunctionSpec, ys: &[Vec<f64>]) -> f64 {
    let d = spec.datum().d() as f64;
    let t = spec.tau().t();
    let (a, _) = spec.xi_split();
    let mut exponent = 0.0;
    for (layer, row) in ys.iter().enumerate() {
        for &y in row {
            exponent += -2.0 * PI * d * t * y * y - 4.0 * PI * a[layer] * t * y;
        }
    }
    exponent.exp()
}

/// Builds a configuration from unit-box coordinates `(x_1, y_1, x_2, y_2, ...)`.
fn config_from_unit(spec: &WaveFunctionSpec, u: &[f64]) -> (Configuration, Vec<Vec<f64>>) {
    let mut layers = Vec::with_capacity(spec.datum().g());
    let mut ys = Vec::with_capacity(spec.datum().g());
    let mut pos = 0;
    for &n in spec.datum().counts() {
        let mut layer = Vec::with_capacity(n as usize);
        let mut yrow = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let (x, y) = (u[pos], u[pos + 1]);
            pos += 2;
            layer.push(spec.tau().point(x, y));
            yrow.push(y);
        }
        layers.push(layer);
        ys.push(yrow);
    }
    (Configuration::new(layers), ys)
}

/// Gram matrix of `(Φ_c)` in the order of [`WaveFunctionSpec::basis`] under the
/// product metric on `[0,1]^{2n}`.
pub fn gram_manybody(spec: &WaveFunctionSpec, quad: &QuadratureSpec) -> Result<GramReport, HermitianError> {
    quad.validate()?;
    let basis = spec.basis();
    let count = basis.len();
    let dim = 2 * spec.datum().n() as usize;
    let labels: Vec<String> = basis.iter().map(|c| c.display(spec.delta())).collect();
    let primary = spec.datum().matrix().is_primary();
    let integrand = |u: &[f64], acc: &mut [Complex64]| -> Result<(), HermitianError> {
        let (config, ys) = config_from_unit(spec, u);
        let w = manybody_weight(spec, &ys);
        let values = spec.basis_values(&config)?;
        for i in 0..count {
            let vi = values[i] * w;
            for j in 0..count {
                acc[i * count + j] += vi * values[j].conj();
            }
        }
        Ok(())
    };
    let reshape = |flat: &[Complex64]| -> Vec<Vec<Complex64>> {
        (0..count).map(|i| flat[i * count..(i + 1) * count].to_vec()).collect()
    };
    match *quad {
        QuadratureSpec::TensorGauss { points } => {
            let total = tensor_cost(points, dim)?;
            let (nodes, weights) = gauss_legendre(points);
            let partials: Result<Vec<Vec<Complex64>>, HermitianError> = (0..total as usize)
                .into_par_iter()
                .with_min_len(1024)
                .fold(
                    || Ok((vec![Complex64::new(0.0, 0.0); count * count], vec![0usize; dim], vec![0.0; dim])),
                    |state: Result<(Vec<Complex64>, Vec<usize>, Vec<f64>), HermitianError>, flat| {
                        let (mut acc, mut idx, mut u) = state?;
                        multi_index(flat, points, dim, &mut idx);
                        let mut wq = 1.0;
                        for (slot, &i) in u.iter_mut().zip(&idx) {
                            *slot = nodes[i];
                            wq *= weights[i];
                        }
                        let mut local = vec![Complex64::new(0.0, 0.0); count * count];
                        integrand(&u, &mut local)?;
                        for (a, l) in acc.iter_mut().zip(&local) {
                            *a += l * wq;
                        }
                        Ok((acc, idx, u))
                    },
                )
                .map(|r| r.map(|(acc, _, _)| acc))
                .collect();
            let mut sum = vec![Complex64::new(0.0, 0.0); count * count];
            for p in partials? {
                for (s, v) in sum.iter_mut().zip(&p) {
                    *s += v;
                }
            }
            Ok(GramReport::from_matrix(labels, reshape(&sum), quad.clone(), total, primary))
        }
        QuadratureSpec::QuasiMonteCarlo { samples, seed } => {
            if dim > 256 {
                return Err(HermitianError::InvalidQuadrature(format!("{dim} dimensions exceed the Sobol limit 256")));
            }
            let per_batch = samples.div_ceil(TARGET_BATCHES).next_power_of_two().clamp(2, MAX_BATCH);
            let batches = samples.div_ceil(per_batch).max(2);
            let estimates: Result<Vec<Vec<Complex64>>, HermitianError> = (0..batches)
                .into_par_iter()
                .map(|batch| {
                    let scramble = batch_seed(seed, batch as u64);
                    let mut acc = vec![Complex64::new(0.0, 0.0); count * count];
                    let mut u = vec![0.0; dim];
                    for i in 0..per_batch {
                        for (d, slot) in u.iter_mut().enumerate() {
                            *slot = sobol_burley::sample(i as u32, d as u32, scramble) as f64;
                        }
                        integrand(&u, &mut acc)?;
                    }
                    Ok(acc.iter().map(|v| v / per_batch as f64).collect())
                })
                .collect();
            let estimates = estimates?;
            let b = estimates.len() as f64;
            let mean: Vec<Complex64> = (0..count * count)
                .map(|e| estimates.iter().map(|est| est[e]).sum::<Complex64>() / b)
                .collect();
            let stderr_of = |f: &dyn Fn(&[Complex64]) -> Complex64| -> f64 {
                let m: Complex64 = estimates.iter().map(|est| f(est)).sum::<Complex64>() / b;
                let var: f64 = estimates.iter().map(|est| (f(est) - m).norm_sqr()).sum::<f64>() / (b - 1.0);
                (var / b).sqrt()
            };
            let mut report = GramReport::from_matrix(labels, reshape(&mean), quad.clone(), (per_batch * batches) as u64, primary);
            let mut off_z: f64 = 0.0;
            let mut diag_z: f64 = 0.0;
            for i in 0..count {
                for j in 0..count {
                    let se = stderr_of(&|est| est[i * count + j]);
                    report.stderr[i][j] = se;
                    if i != j {
                        off_z = off_z.max(mean[i * count + j].norm() / se);
                        let se_diff = stderr_of(&|est| est[i * count + i] - est[j * count + j]);
                        let diff = (mean[i * count + i] - mean[j * count + j]).norm();
                        diag_z = diag_z.max(diff / se_diff);
                    }
                }
            }
            report.offdiag_z = Some(off_z);
            report.diag_difference_z = Some(diag_z);
            Ok(report)
        }
    }
}

/// Independent 32-bit scrambling seed per batch.
fn batch_seed(seed: u64, batch: u64) -> u32 {
    // SplitMix64 finaliser.
    let mut z = seed.wrapping_add(batch.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31)) as u32
}

/// `u` as floating point.
pub fn u_f64(k: &WenMatrix) -> Vec<f64> {
    k.u().iter().map(exact::rational_to_f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 12, 48] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            // Exact for degree 2n−1: ∫_0^1 x^{2n−1} = 1/(2n).
            let deg = 2 * n - 1;
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((s - 1.0 / (2 * n) as f64).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn weights_at_zero_height() {
        let tau = TorusParams::new(c(0.3, 1.1)).unwrap();
        assert_eq!(metric_weight_1d(3.0, c(0.2, 0.4), &tau, c(0.7, 0.0)), 1.0);
        let k = WenMatrix::new(vec![vec![2, 1], vec![1, 2]]).unwrap();
        assert_eq!(metric_weight_g(&k, &[c(0.1, 0.3), c(0.0, 0.2)], &tau, &[c(0.4, 0.0), c(0.9, 0.0)]), 1.0);
        let k1 = WenMatrix::new(vec![vec![3]]).unwrap();
        let z = tau.point(0.2, 0.6);
        let xi = c(0.1, 0.25);
        assert!((metric_weight_g(&k1, &[xi], &tau, &[z]) - metric_weight_1d(3.0, xi, &tau, z)).abs() < 1e-15);
    }

    #[test]
    fn kappa_values() {
        let tau = TorusParams::new(c(0.0, 1.0)).unwrap();
        let k = WenMatrix::new(vec![vec![2]]).unwrap();
        assert!((kappa_closed_form(&k, &[c(0.0, 0.0)], &tau) - 0.5).abs() < 1e-15);
        let k = WenMatrix::new(vec![vec![2, 1], vec![1, 2]]).unwrap();
        assert!((kappa_closed_form(&k, &[c(0.3, 0.0), c(-0.2, 0.0)], &tau) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn single_layer_gram_is_kappa() {
        let tau = TorusParams::new(c(0.0, 1.0)).unwrap();
        let k = WenMatrix::new(vec![vec![2]]).unwrap();
        let report = gram_center(&k, &[c(0.0, 0.0)], &tau, 32, Some(1e-8)).unwrap();
        assert!(report.scalar_deviation < 1e-10);
        assert!(report.kappa_deviation().unwrap() < 1e-10);
    }

    #[test]
    fn too_coarse_is_reported() {
        let tau = TorusParams::new(c(0.0, 1.0)).unwrap();
        let k = WenMatrix::new(vec![vec![5]]).unwrap();
        let err = gram_center(&k, &[c(0.0, 0.0)], &tau, 6, Some(1e-12)).unwrap_err();
        assert!(matches!(err, HermitianError::QuadratureTooCoarse { .. }));
    }

    #[test]
    fn budget_is_enforced() {
        let tau = TorusParams::new(c(0.0, 1.0)).unwrap();
        let datum = WenDatum::new(WenMatrix::new(vec![vec![1]]).unwrap(), vec![6]).unwrap();
        let spec = WaveFunctionSpec::new(datum, vec![c(0.0, 0.0)], tau, 1e-12).unwrap();
        let err = gram_manybody(&spec, &QuadratureSpec::TensorGauss { points: 10 }).unwrap_err();
        assert!(matches!(err, HermitianError::SamplingBudgetExceeded { .. }));
    }

    #[test]
    fn fourier_rows_match_direct_quadrature() {
        let tau = TorusParams::new(c(0.3, 1.1)).unwrap();
        let k = WenMatrix::new(vec![vec![2, 1], vec![1, 2]]).unwrap();
        let xi = vec![c(0.2, 0.1), c(-0.1, 0.3)];
        let spec = WaveFunctionSpec::new(WenDatum::minimal(k.clone()), xi.clone(), tau, 1e-13).unwrap();
        let basis: Vec<PiElement> = spec.pi().elements().to_vec();
        let fast = center_gram_fourier(&spec, &basis, 6).unwrap();
        let direct = center_gram_tensor(&k, &xi, &tau, basis.len(), 6, |w, out| {
            for (o, c) in out.iter_mut().zip(&basis) {
                *o = spec.center_basis(c, w).unwrap();
            }
        })
        .unwrap();
        for (rf, rd) in fast.iter().zip(&direct) {
            for (a, b) in rf.iter().zip(rd) {
                assert!((a - b).norm() < 1e-12 * b.norm().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn two_layer_gram_matches_gaussian_integral() {
        let tau = TorusParams::new(c(0.0, 1.0)).unwrap();
        let k = WenMatrix::new(vec![vec![2, 1], vec![1, 2]]).unwrap();
        let xi = vec![c(0.1, 0.0), c(0.0, 0.0)];
        let report = gram_center(&k, &xi, &tau, 24, None).unwrap();
        assert!(report.kappa_integral_deviation().unwrap() < 1e-10);
        let ratio = kappa_gaussian_integral(&k, &xi, &tau) / kappa_closed_form(&k, &xi, &tau);
        assert!((ratio - 3f64.sqrt()).abs() < 1e-14);
    }
}
