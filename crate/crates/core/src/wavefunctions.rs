//! One-particle theta basis, center-of-mass thetas `H_c`, the Jastrow factor
//! `D_{K,n⃗}` and the multi-layer many-body wave functions
//! `Φ_c = H_c(w)·D_{K,n⃗}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::theta::{self, OmegaMatrix, ThetaCharacteristics, ThetaError, TorusParams, TruncationPlan};
use crate::wen::{self, PiElement, PiGroup, WenDatum};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default tolerance for theta evaluations inside wave functions.
pub const DEFAULT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WaveError {
    #[error("IndexOutOfRange: index {index} is outside 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("ShapeMismatch: {0}")]
    ShapeMismatch(String),
    #[error("NotInPi: {0:?} is not an element of K^-1 Z^g / Z^g")]
    NotInPi(Vec<i64>),
    #[error(transparent)]
    Theta(#[from] ThetaError),
}

/// Particle positions grouped by layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub layers: Vec<Vec<Complex64>>,
}

impl Configuration {
    pub fn new(layers: Vec<Vec<Complex64>>) -> Self {
        Configuration { layers }
    }

    /// Layer sums `w_k = Σ_p z_p^(k)`.
    pub fn w(&self) -> Vec<Complex64> {
        self.layers.iter().map(|l| l.iter().sum()).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    /// Copy with `z_p^(k)` shifted by `delta`.
    pub fn shifted(&self, layer: usize, p: usize, delta: Complex64) -> Self {
        let mut out = self.clone();
        out.layers[layer][p] += delta;
        out
    }

    /// Copy with every coordinate shifted by `delta`.
    pub fn translated(&self, delta: Complex64) -> Self {
        Configuration {
            layers: self.layers.iter().map(|l| l.iter().map(|z| z + delta).collect()).collect(),
        }
    }

    /// Random configuration with coordinates `x + τy`, `x, y ∈ [0,1)`.
    pub fn random<R: rand::Rng>(counts: &[i64], tau: &TorusParams, rng: &mut R) -> Self {
        Configuration {
            layers: counts
                .iter()
                .map(|&n| (0..n).map(|_| tau.point(rng.gen::<f64>(), rng.gen::<f64>())).collect())
                .collect(),
        }
    }
}

/// Splits `ξ = b + τa` into real `(a, b)`.
pub fn split_xi(xi: Complex64, tau: &TorusParams) -> (f64, f64) {
    let a = xi.im / tau.t();
    (a, xi.re - tau.s() * a)
}

/// `h_j(z) = θ[(j−1)/k, 0](kz + ξ | kτ)`, `1 ≤ j ≤ k`.
pub fn one_particle_basis(k: usize, xi: Complex64, tau: &TorusParams, j: usize, z: Complex64, tol: f64) -> Result<Complex64, WaveError> {
    if k == 0 || j == 0 || j > k {
        return Err(WaveError::IndexOutOfRange { index: j, max: k });
    }
    let kf = k as f64;
    let ktau = TorusParams::new(tau.tau() * kf)?;
    Ok(theta::jacobi_theta((j - 1) as f64 / kf, 0.0, kf * z + xi, &ktau, tol)?)
}

/// Haldane–Rezayi `Φ_j = θ[(j−1)/m, 0](mw + ξ | mτ)·Π_{p<q} ϑ(z_p − z_q)^m`,
/// evaluated through the one-dimensional theta series.
pub fn hr_wavefunction(
    m: usize,
    xi: Complex64,
    tau: &TorusParams,
    j: usize,
    z: &[Complex64],
    tol: f64,
) -> Result<Complex64, WaveError> {
    let w: Complex64 = z.iter().sum();
    let center = one_particle_basis(m, xi, tau, j, w, tol)?;
    let mut d = Complex64::new(1.0, 0.0);
    for p in 0..z.len() {
        for q in p + 1..z.len() {
            d *= theta::theta_odd(z[p] - z[q], tau, tol)?.powu(m as u32);
        }
    }
    Ok(center * d)
}

/// Everything needed to evaluate `Φ_c` for a fixed datum, `ξ` and `τ`.
#[derive(Debug, Clone)]
pub struct WaveFunctionSpec {
    datum: WenDatum,
    xi: Vec<Complex64>,
    tau: TorusParams,
    omega: OmegaMatrix,
    pi: PiGroup,
    tol: f64,
    plan: TruncationPlan,
}

impl WaveFunctionSpec {
    pub fn new(datum: WenDatum, xi: Vec<Complex64>, tau: TorusParams, tol: f64) -> Result<Self, WaveError> {
        let g = datum.g();
        if xi.len() != g {
            return Err(WaveError::ShapeMismatch(format!("xi has {} entries, expected {g}", xi.len())));
        }
        if !(tol >= theta::MIN_TOL_MULTI) {
            return Err(ThetaError::ToleranceTooSmall { tol, min: theta::MIN_TOL_MULTI }.into());
        }
        let omega = OmegaMatrix::from_tau_k(&tau, datum.matrix().matrix())?;
        let plan = theta::truncation_plan(&omega, tol);
        let pi = PiGroup::new(datum.matrix());
        Ok(WaveFunctionSpec { datum, xi, tau, omega, pi, tol, plan })
    }

    pub fn datum(&self) -> &WenDatum {
        &self.datum
    }

    pub fn xi(&self) -> &[Complex64] {
        &self.xi
    }

    pub fn tau(&self) -> &TorusParams {
        &self.tau
    }

    pub fn omega(&self) -> &OmegaMatrix {
        &self.omega
    }

    pub fn pi(&self) -> &PiGroup {
        &self.pi
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn delta(&self) -> i64 {
        self.datum.matrix().delta()
    }

    /// Real parts `(a, b)` of `ξ = b + τa`, componentwise.
    pub fn xi_split(&self) -> (Vec<f64>, Vec<f64>) {
        self.xi.iter().map(|&x| split_xi(x, &self.tau)).unzip()
    }

    /// Sign acquired by `Φ_c` when one coordinate in layer `k` moves by `1`:
    /// `(−1)^{d + K_kk}`. All diagonal entries share a parity, so this does
    /// not depend on `k`.
    pub fn sector_sign(&self) -> f64 {
        if (self.datum.d() + self.datum.matrix().entry(0, 0)) % 2 == 0 { 1.0 } else { -1.0 }
    }

    /// The basis labels: `i·u` for `i = 0..δ−1` when `[u]` generates `Π`,
    /// otherwise the [`PiGroup`] order.
    pub fn basis(&self) -> Vec<PiElement> {
        let delta = self.delta();
        if self.datum.u_order() == delta {
            let u = wen::u_element(self.datum.matrix());
            (0..delta).map(|i| u.scale(i, delta)).collect()
        } else {
            self.pi.elements().to_vec()
        }
    }

    fn check_c(&self, c: &PiElement) -> Result<(), WaveError> {
        if c.0.len() != self.datum.g() || !self.pi.contains(self.datum.matrix(), c) {
            return Err(WaveError::NotInPi(c.0.clone()));
        }
        Ok(())
    }

    fn check_config(&self, config: &Configuration) -> Result<(), WaveError> {
        let expected: Vec<usize> = self.datum.counts().iter().map(|&n| n as usize).collect();
        if config.sizes() != expected {
            return Err(WaveError::ShapeMismatch(format!(
                "configuration has layer sizes {:?}, expected {:?}",
                config.sizes(),
                expected
            )));
        }
        Ok(())
    }

    fn characteristics(&self, c: &PiElement) -> ThetaCharacteristics {
        ThetaCharacteristics { a: c.to_f64(self.delta()), b: vec![0.0; self.datum.g()] }
    }

    /// `Kw + ξ`.
    fn theta_argument(&self, w: &[Complex64]) -> Vec<Complex64> {
        let k = self.datum.matrix();
        (0..k.g())
            .map(|i| (0..k.g()).map(|j| w[j] * k.entry(i, j) as f64).sum::<Complex64>() + self.xi[i])
            .collect()
    }

    /// `H_c(w) = Θ[c, 0](Kw + ξ | τK)`.
    pub fn center_basis(&self, c: &PiElement, w: &[Complex64]) -> Result<Complex64, WaveError> {
        self.check_c(c)?;
        if w.len() != self.datum.g() {
            return Err(WaveError::ShapeMismatch(format!("w has {} entries", w.len())));
        }
        Ok(self.center_unchecked(&self.characteristics(c), w))
    }

    /// `H_c` with real (possibly unreduced) characteristic `c`.
    pub fn center_with_characteristic(&self, c: &[f64], w: &[Complex64]) -> Complex64 {
        let chars = ThetaCharacteristics { a: c.to_vec(), b: vec![0.0; c.len()] };
        self.center_unchecked(&chars, w)
    }

    fn center_unchecked(&self, chars: &ThetaCharacteristics, w: &[Complex64]) -> Complex64 {
        theta::riemann_theta_with_plan(chars, &self.theta_argument(w), &self.omega, &self.plan)
    }

    /// Fourier data of `x ↦ H_c(x + τy)` at fixed `y`: pairs `(A_n, Kn)` with
    /// `H_c(x + τy) = Σ A_n·exp(2πi (Kn)ᵀx)`, over the same lattice points the
    /// truncated series keeps. `Kn` is an integer vector because `Kc ∈ Zᵍ`.
    pub fn center_fourier_terms(&self, c: &[f64], y: &[f64]) -> Vec<(Complex64, Vec<i64>)> {
        let k = self.datum.matrix();
        let g = k.g();
        let w: Vec<Complex64> = y.iter().map(|&yi| self.tau.tau() * yi).collect();
        let chars = ThetaCharacteristics { a: c.to_vec(), b: vec![0.0; g] };
        let mut out = Vec::new();
        theta::for_each_term(&chars, &self.theta_argument(&w), &self.omega, &self.plan, |n, term| {
            let f = (0..g)
                .map(|i| (0..g).map(|j| k.entry(i, j) as f64 * n[j]).sum::<f64>().round() as i64)
                .collect();
            out.push((term, f));
        });
        out
    }

    /// `H_c` at many center-of-mass points, in input order.
    pub fn center_basis_batch(&self, c: &PiElement, ws: &[Vec<Complex64>]) -> Result<Vec<Complex64>, WaveError> {
        self.check_c(c)?;
        let chars = self.characteristics(c);
        Ok(ws.par_iter().map(|w| self.center_unchecked(&chars, w)).collect())
    }

    /// `D_{K,n⃗} = Π_k Π_{p<q} ϑ(z_p^k − z_q^k)^{K_kk} · Π_{k<l} Π_{p,q} ϑ(z_p^k − z_q^l)^{K_kl}`.
    pub fn jastrow_factor(&self, config: &Configuration) -> Result<Complex64, WaveError> {
        self.check_config(config)?;
        jastrow(self.datum.matrix().matrix(), &self.tau, config, self.tol)
    }

    /// `Φ_c = H_c(w)·D_{K,n⃗}`.
    pub fn kvw_wavefunction(&self, c: &PiElement, config: &Configuration) -> Result<Complex64, WaveError> {
        self.check_config(config)?;
        let h = self.center_basis(c, &config.w())?;
        Ok(h * jastrow(self.datum.matrix().matrix(), &self.tau, config, self.tol)?)
    }

    /// All `Φ_c` of [`Self::basis`] at one configuration, sharing the Jastrow factor.
    pub fn basis_values(&self, config: &Configuration) -> Result<Vec<Complex64>, WaveError> {
        self.check_config(config)?;
        let d = jastrow(self.datum.matrix().matrix(), &self.tau, config, self.tol)?;
        let w = config.w();
        Ok(self
            .basis()
            .iter()
            .map(|c| self.center_unchecked(&self.characteristics(c), &w) * d)
            .collect())
    }

    /// Expected factor for `z_p^(k) ↦ z_p^(k) + τ`: `±exp(−2πiξ_k)·φ(z_p^(k))^d`.
    pub fn tau_shift_factor(&self, layer: usize, z: Complex64) -> Complex64 {
        self.sector_sign()
            * (-2.0 * PI * I * self.xi[layer]).exp()
            * theta::phi(z, &self.tau).powi(self.datum.d() as i32)
    }

    /// Largest residual of both shift rules over every coordinate of `config`.
    pub fn quasi_periodicity_residual(&self, c: &PiElement, config: &Configuration) -> Result<f64, WaveError> {
        let base = self.kvw_wavefunction(c, config)?;
        let sign = self.sector_sign();
        let mut worst: f64 = 0.0;
        for (k, layer) in config.layers.iter().enumerate() {
            for (p, &z) in layer.iter().enumerate() {
                let one = self.kvw_wavefunction(c, &config.shifted(k, p, Complex64::new(1.0, 0.0)))?;
                worst = worst.max(theta::residual(one, sign * base));
                let tau = self.kvw_wavefunction(c, &config.shifted(k, p, self.tau.tau()))?;
                worst = worst.max(theta::residual(tau, self.tau_shift_factor(k, z) * base));
            }
        }
        Ok(worst)
    }

    /// `T1Φ`: every coordinate shifted by `1/d`.
    pub fn apply_t1(&self, c: &PiElement, config: &Configuration) -> Result<Complex64, WaveError> {
        self.kvw_wavefunction(c, &config.translated(Complex64::new(1.0 / self.datum.d() as f64, 0.0)))
    }

    /// `T2Φ`: `exp(2πi(u,ξ) + πiτn/d)·exp(2πi(e,w))·Φ(z + τ/d)`.
    pub fn apply_t2(&self, c: &PiElement, config: &Configuration) -> Result<Complex64, WaveError> {
        let d = self.datum.d() as f64;
        let shifted = self.kvw_wavefunction(c, &config.translated(self.tau.tau() / d))?;
        let u: Vec<f64> = self.datum.matrix().u().iter().map(crate::exact::rational_to_f64).collect();
        let u_xi: Complex64 = u.iter().zip(&self.xi).map(|(a, b)| a * b).sum();
        let e_w: Complex64 = config.w().iter().sum();
        let prefactor = (2.0 * PI * I * u_xi + PI * I * self.tau.tau() * self.datum.n() as f64 / d).exp()
            * (2.0 * PI * I * e_w).exp();
        Ok(prefactor * shifted)
    }

    /// Residual of `T1Φ_c = υ(u,c)Φ_c` or `T2Φ_c = Φ_{c+u}` at one configuration.
    pub fn magnetic_residual(&self, c: &PiElement, which: Translation, config: &Configuration) -> Result<f64, WaveError> {
        let delta = self.delta();
        let u = wen::u_element(self.datum.matrix());
        match which {
            Translation::T1 => {
                let e = wen::upsilon_exponent(self.datum.matrix(), &u, c);
                let eig = Complex64::from_polar(1.0, 2.0 * PI * e as f64 / delta as f64);
                let lhs = self.apply_t1(c, config)?;
                Ok(theta::residual(lhs, eig * self.kvw_wavefunction(c, config)?))
            }
            Translation::T2 => {
                let lhs = self.apply_t2(c, config)?;
                let rhs = self.kvw_wavefunction(&c.add(&u, delta), config)?;
                Ok(theta::residual(lhs, rhs))
            }
        }
    }

    /// Maximum of [`Self::magnetic_residual`] over a sample set.
    pub fn magnetic_action_residual(&self, c: &PiElement, which: Translation, samples: &[Configuration]) -> Result<f64, WaveError> {
        let residuals: Result<Vec<f64>, WaveError> =
            samples.par_iter().map(|s| self.magnetic_residual(c, which, s)).collect();
        Ok(residuals?.into_iter().fold(0.0, f64::max))
    }

    /// Leading power of `|Φ_c|` as `z_p^(k) → z_q^(l)` along `direction`,
    /// from a log-log fit at two offsets.
    pub fn vanishing_order(
        &self,
        c: &PiElement,
        config: &Configuration,
        (k, p): (usize, usize),
        (l, q): (usize, usize),
        direction: Complex64,
    ) -> Result<f64, WaveError> {
        let target = config.layers[l][q];
        let at = |h: f64| -> Result<f64, WaveError> {
            let mut moved = config.clone();
            moved.layers[k][p] = target + direction * h;
            Ok(self.kvw_wavefunction(c, &moved)?.norm())
        };
        let (h1, h2) = (1e-2, 1e-3);
        Ok((at(h1)?.ln() - at(h2)?.ln()) / (h1.ln() - h2.ln()))
    }
}

/// Magnetic translation selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Translation {
    T1,
    T2,
}

fn jastrow(k: &[Vec<i64>], tau: &TorusParams, config: &Configuration, tol: f64) -> Result<Complex64, WaveError> {
    let g = k.len();
    let mut d = Complex64::new(1.0, 0.0);
    for a in 0..g {
        for b in a..g {
            let power = k[a][b];
            if power == 0 {
                continue;
            }
            for (p, &zp) in config.layers[a].iter().enumerate() {
                let start = if a == b { p + 1 } else { 0 };
                for &zq in &config.layers[b][start..] {
                    d *= theta::theta_odd(zp - zq, tau, tol)?.powi(power as i32);
                }
            }
        }
    }
    Ok(d)
}
