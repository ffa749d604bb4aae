//! Verification checks for one validated problem, grouped by subject.
//!
//! Every group draws its random samples from its own seeded stream, so the
//! result of a group does not depend on which other groups ran.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::bundle;
use crate::exact;
use crate::heisenberg::{self, BasisOrder, HeisenbergError};
use crate::hermitian::{self, GramReport, HermitianError, QuadratureSpec};
use crate::io::Problem;
use crate::report::{self, Check, Report};
use crate::theta::{self, OmegaMatrix, ThetaCharacteristics, TorusParams};
use crate::wavefunctions::{Configuration, Translation, WaveFunctionSpec};
use crate::wen::{self, PiGroup, WenDatum, WenMatrix};

/// Largest total particle number for which the many-body Gram is sampled.
pub const MAX_MANYBODY_PARTICLES: i64 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Series truncation tolerance.
    pub tol: f64,
    /// Gauss–Legendre points per axis; chosen from `g` when absent.
    pub points: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    pub theta_samples: usize,
    pub configurations: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            tol: 1e-12,
            points: None,
            samples: 1 << 20,
            seed: 0,
            theta_samples: 100,
            configurations: 20,
        }
    }
}

impl VerifyOptions {
    /// The requested points per axis, or 48 when `g ≤ 2`. Larger `g` has no
    /// default: a converged tensor rule is out of reach at desk scale.
    pub fn points_for(&self, g: usize) -> Option<usize> {
        self.points.or((g <= 2).then_some(hermitian::DEFAULT_POINTS))
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Both shift rules of `θ[a,b](·|τ)` at random points, plus `ϑ(0) = 0` and
/// oddness of `ϑ`.
pub fn theta_checks(tau: &TorusParams, opts: &VerifyOptions) -> Vec<Check> {
    let mut rng = opts.rng(1);
    let (mut one, mut shift_tau, mut odd) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..opts.theta_samples {
        let (a, b) = (rng.gen::<f64>(), rng.gen::<f64>());
        let z = tau.point(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let eval = |z: Complex64| theta::jacobi_theta(a, b, z, tau, opts.tol).expect("finite arguments");
        let base = eval(z);
        one = one.max(theta::residual(eval(z + 1.0), Complex64::from_polar(1.0, 2.0 * PI * a) * base));
        let factor = (-2.0 * PI * Complex64::i() * (z + b) - PI * Complex64::i() * tau.tau()).exp();
        shift_tau = shift_tau.max(theta::residual(eval(z + tau.tau()), factor * base));
        let th = theta::theta_odd(z, tau, opts.tol).expect("finite arguments");
        let th_neg = theta::theta_odd(-z, tau, opts.tol).expect("finite arguments");
        odd = odd.max((th + th_neg).norm() / th.norm().max(1.0));
    }
    let zero = theta::theta_odd(c(0.0, 0.0), tau, opts.tol).expect("finite arguments").norm();
    vec![
        Check::below("theta shift by 1", "theta: z -> z+1 multiplies by exp(2 pi i a)", one, 1e-11),
        Check::below("theta shift by tau", "theta: z -> z+tau multiplies by exp(-2 pi i (z+b) - pi i tau)", shift_tau, 1e-11),
        Check::below("odd theta at 0", "odd theta vanishes at the origin", zero, 1e-12),
        Check::below("odd theta parity", "odd theta is odd", odd, 1e-12),
    ]
}

/// Shift rules of `Θ[a,b](·|τK)` and agreement of a diagonal period matrix
/// with the product of one-variable thetas.
pub fn riemann_checks(k: &WenMatrix, tau: &TorusParams, opts: &VerifyOptions) -> Vec<Check> {
    let g = k.g();
    let mut rng = opts.rng(2);
    let omega = OmegaMatrix::from_tau_k(tau, k.matrix()).expect("tau K has positive imaginary part");
    let diag_entries: Vec<Complex64> = (0..g).map(|i| tau.tau() * k.entry(i, i) as f64).collect();
    let diag = OmegaMatrix::diagonal(&diag_entries).expect("positive diagonal");
    let samples = (opts.theta_samples / 5).max(1);
    let (mut lattice, mut period, mut factor) = (0.0f64, 0.0f64, 0.0f64);
    let i = Complex64::i();
    for _ in 0..samples {
        let a: Vec<f64> = (0..g).map(|_| rng.gen()).collect();
        let b: Vec<f64> = (0..g).map(|_| rng.gen()).collect();
        let chars = ThetaCharacteristics::new(a.clone(), b.clone()).expect("finite");
        let y: Vec<f64> = (0..g).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let oy = omega.apply_real(&y);
        let z: Vec<Complex64> = oy.iter().map(|v| v + rng.gen_range(-1.0..1.0)).collect();
        let l: Vec<i64> = (0..g).map(|_| rng.gen_range(-2..=2)).collect();
        let lf: Vec<f64> = l.iter().map(|&x| x as f64).collect();
        let eval = |z: &[Complex64]| theta::riemann_theta(&chars, z, &omega, opts.tol).expect("valid dims");
        let base = eval(&z);

        let z1: Vec<Complex64> = z.iter().zip(&lf).map(|(v, l)| v + l).collect();
        let phase: f64 = a.iter().zip(&lf).map(|(a, l)| a * l).sum();
        lattice = lattice.max(theta::residual(eval(&z1), Complex64::from_polar(1.0, 2.0 * PI * phase) * base));

        let ol = omega.apply_real(&lf);
        let z2: Vec<Complex64> = z.iter().zip(&ol).map(|(v, s)| v + s).collect();
        let l_zb: Complex64 = lf.iter().zip(z.iter().zip(&b)).map(|(l, (z, b))| l * (z + b)).sum();
        let l_ol: Complex64 = lf.iter().zip(&ol).map(|(l, s)| l * s).sum();
        let mult = (-2.0 * PI * i * l_zb - PI * i * l_ol).exp();
        period = period.max(theta::residual(eval(&z2), mult * base));

        let full = theta::riemann_theta(&chars, &z, &diag, opts.tol).expect("valid dims");
        let mut product = c(1.0, 0.0);
        for j in 0..g {
            let tj = TorusParams::new(diag_entries[j]).expect("upper half plane");
            product *= theta::jacobi_theta(a[j], b[j], z[j], &tj, opts.tol).expect("finite");
        }
        factor = factor.max((full - product).norm() / product.norm().max(f64::MIN_POSITIVE));
    }
    vec![
        Check::below("multi-theta integer shift", "Theta: z -> z+l multiplies by exp(2 pi i a.l)", lattice, 1e-10),
        Check::below(
            "multi-theta period shift",
            "Theta: z -> z+Omega l multiplies by exp(-2 pi i l.(z+b) - pi i l.Omega l)",
            period,
            1e-10,
        ),
        Check::below("diagonal factorisation", "Theta with diagonal Omega is a product of thetas", factor, 1e-11),
    ]
}

/// Exact integer identities for `K`, `K♯`, `u` and `Π`.
pub fn wen_checks(k: &WenMatrix) -> Vec<Check> {
    let g = k.g();
    let delta = k.delta();
    let prod = exact::mat_mul(k.matrix(), k.adjugate());
    let scaled_identity: Vec<Vec<i64>> = exact::identity(g).iter().map(|r| r.iter().map(|x| x * delta).collect()).collect();
    let pi = PiGroup::new(k);
    let factors = pi.invariant_factors();
    let order: i64 = factors.iter().product();
    let sums = k.adjugate_row_sums();
    let u_ok = sums
        .iter()
        .zip(k.u())
        .all(|(s, u)| BigRational::from_integer(BigInt::from(*s)) == u * BigInt::from(delta));
    let u_order = wen::u_order(k);
    vec![
        Check::holds("adjugate", "K times its adjugate is det(K) I", prod == scaled_identity, json!(k.adjugate())),
        Check::holds(
            "order of Pi",
            "|K^-1 Z^g / Z^g| = det K via Smith normal form",
            order == delta && pi.len() as i64 == delta,
            json!({"invariant_factors": factors, "enumerated": pi.len(), "delta": delta}),
        ),
        Check::holds("adjugate row sums", "row sums of the adjugate equal det(K) u", u_ok, json!(sums)),
        Check::holds(
            "u generates Pi iff primary",
            "u has order det K exactly when gcd(delta, rho) = 1",
            (u_order == delta) == k.is_primary(),
            json!({"u_order": u_order, "primary": k.is_primary()}),
        ),
    ]
}

/// Relations of the magnetic translations, primitivity of `q` and the
/// character norm of the standard representation.
pub fn heisenberg_checks(datum: &WenDatum) -> Vec<Check> {
    let k = datum.matrix();
    let delta = k.delta();
    let order = if wen::u_order(k) == delta { BasisOrder::UPowers } else { BasisOrder::PiIndex };
    let mut checks = Vec::new();
    match heisenberg::rep_matrices(datum, order) {
        Ok(rep) => {
            let (t1, t2, comm) = rep.relations_hold();
            checks.push(Check::holds("T1^delta = I", "T1 has order dividing det K", t1, json!(t1)));
            checks.push(Check::holds("T2^delta = I", "T2 has order dividing det K", t2, json!(t2)));
            checks.push(Check::holds("T1 T2 = q T2 T1", "magnetic translations commute up to q", comm, json!(rep.q_exponent)));
            let primitive = wen::is_primitive_exponent(rep.q_exponent, delta);
            checks.push(Check::holds(
                "q primitive iff primary",
                "q = exp(2 pi i rho/delta) is a primitive root exactly when gcd(delta, rho) = 1",
                primitive == k.is_primary(),
                json!({"q_exponent": rep.q_exponent, "delta": delta, "primitive": primitive}),
            ));
        }
        Err(e) => checks.push(Check::holds("magnetic translations", "T1, T2 matrices exist", false, json!(e.to_string()))),
    }
    match heisenberg::irreducibility_norm(k) {
        Ok(norm) => checks.push(Check::below(
            "irreducibility",
            "character norm (chi, chi) = 1 for the standard representation",
            (norm - 1.0).abs(),
            1e-10,
        )),
        Err(e @ HeisenbergError::DeltaTooLarge { .. }) => {
            checks.push(Check::skipped("irreducibility", "character norm (chi, chi) = 1", &e.to_string()))
        }
        Err(e) => checks.push(Check::holds("irreducibility", "character norm (chi, chi) = 1", false, json!(e.to_string()))),
    }
    checks
}

/// Orthogonality and normalisation of the center-of-mass basis.
pub fn center_gram_checks(problem: &Problem, opts: &VerifyOptions) -> (Option<GramReport>, Vec<Check>) {
    let k = problem.matrix();
    let Some(points) = opts.points_for(k.g()) else {
        let reason = format!("g = {} needs an explicit --points", k.g());
        return (None, vec![Check::skipped("center Gram", "center-of-mass basis is orthogonal", &reason)]);
    };
    match hermitian::gram_center(k, &problem.xi, &problem.tau, points, Some(1e-8)) {
        Ok(rep) => {
            let checks = vec![
                Check::below("center Gram orthogonality", "center-of-mass basis is orthogonal", rep.scalar_deviation, 1e-8),
                Check::below("center Gram equal norms", "center-of-mass basis has a common norm", rep.diag_spread, 1e-8),
                Check::below(
                    "center Gram closed-form norm",
                    "common norm equals (2 t delta)^(-g/2) exp(2 pi t (a, K^-1 a))",
                    rep.kappa_deviation().unwrap_or(f64::NAN),
                    1e-6,
                ),
                Check::below(
                    "center Gram Gaussian-integral norm",
                    "common norm equals (2t)^(-g/2) delta^(-1/2) exp(2 pi t (a, K^-1 a))",
                    rep.kappa_integral_deviation().unwrap_or(f64::NAN),
                    1e-6,
                ),
            ];
            (Some(rep), checks)
        }
        Err(HermitianError::QuadratureTooCoarse { points, shift, .. }) => (
            None,
            vec![Check::below(
                &format!("center Gram quadrature ({points} points/axis)"),
                "tensor quadrature has converged",
                shift,
                1e-8,
            )],
        ),
        Err(e) => (None, vec![Check::skipped("center Gram", "center-of-mass basis is orthogonal", &e.to_string())]),
    }
}

fn configurations(problem: &Problem, opts: &VerifyOptions) -> Vec<Configuration> {
    let mut rng = opts.rng(3);
    let mut out: Vec<Configuration> = problem.positions.iter().map(|p| Configuration::new(p.clone())).collect();
    out.extend((0..opts.configurations).map(|_| Configuration::random(problem.datum.counts(), &problem.tau, &mut rng)));
    out
}

/// Configuration drawn uniformly on the torus from `seed`.
pub fn random_configuration(problem: &Problem, seed: u64) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Configuration::random(problem.datum.counts(), &problem.tau, &mut rng)
}

pub fn wave_spec(problem: &Problem, opts: &VerifyOptions) -> Result<WaveFunctionSpec, crate::wavefunctions::WaveError> {
    WaveFunctionSpec::new(problem.datum.clone(), problem.xi.clone(), problem.tau, opts.tol)
}

/// Shift rules and magnetic-translation action of the many-body basis.
pub fn wave_checks(problem: &Problem, opts: &VerifyOptions) -> Vec<Check> {
    let spec = match wave_spec(problem, opts) {
        Ok(s) => s,
        Err(e) => return vec![Check::holds("wave functions", "many-body basis can be built", false, json!(e.to_string()))],
    };
    let configs = configurations(problem, opts);
    let basis = spec.pi().elements().to_vec();
    let mut quasi = 0.0f64;
    let mut t1 = 0.0f64;
    let mut t2 = 0.0f64;
    for cfg in &configs {
        for cc in &basis {
            quasi = quasi.max(spec.quasi_periodicity_residual(cc, cfg).unwrap_or(f64::NAN));
            t1 = t1.max(spec.magnetic_residual(cc, Translation::T1, cfg).unwrap_or(f64::NAN));
            t2 = t2.max(spec.magnetic_residual(cc, Translation::T2, cfg).unwrap_or(f64::NAN));
        }
    }
    vec![
        Check::below(
            "wave function shift rules",
            "z -> z+1 gives (-1)^(d+K_kk), z -> z+tau gives (-1)^(d+K_kk) exp(-2 pi i xi_k) phi(z)^d",
            quasi,
            1e-9,
        ),
        Check::below("T1 action", "T1 Phi_c = upsilon(u, c) Phi_c", t1, 1e-9),
        Check::below("T2 action", "T2 Phi_c = Phi_(c+u)", t2, 1e-9),
    ]
}

/// Many-body Gram matrix by scrambled Sobol sampling.
pub fn manybody_checks(problem: &Problem, opts: &VerifyOptions) -> (Option<GramReport>, Vec<Check>) {
    let anchor = "many-body Gram matrix is a multiple of the identity";
    if problem.datum.n() > MAX_MANYBODY_PARTICLES {
        let reason = format!("{} particles exceed the sampling limit {MAX_MANYBODY_PARTICLES}", problem.datum.n());
        return (None, vec![Check::skipped("many-body Gram", anchor, &reason)]);
    }
    let spec = match wave_spec(problem, opts) {
        Ok(s) => s,
        Err(e) => return (None, vec![Check::holds("many-body Gram", anchor, false, json!(e.to_string()))]),
    };
    let quad = QuadratureSpec::QuasiMonteCarlo { samples: opts.samples, seed: opts.seed };
    match hermitian::gram_manybody(&spec, &quad) {
        Ok(rep) => {
            let checks = vec![
                Check::below("many-body off-diagonal z-score", anchor, rep.offdiag_z.unwrap_or(0.0), 3.0),
                Check::below("many-body diagonal z-score", anchor, rep.diag_difference_z.unwrap_or(0.0), 3.0),
                Check::below("many-body relative deviation", anchor, rep.scalar_deviation.max(rep.diag_spread), 0.02),
            ];
            (Some(rep), checks)
        }
        Err(e) => (None, vec![Check::skipped("many-body Gram", anchor, &e.to_string())]),
    }
}

/// Exact bundle invariants and integrality of the dual-lattice pairing.
pub fn bundle_checks(k: &WenMatrix, tau: &TorusParams) -> Vec<Check> {
    let inv = bundle::restricted_invariants(k);
    let delta = BigInt::from(inv.rank);
    let slope_ok = &inv.slope * &delta == BigRational::from_integer(BigInt::from(inv.degree));
    let mut expected = vec![BigRational::from_integer(BigInt::from(1))];
    for i in 1..inv.total_chern.len() as i64 {
        let prev = expected.last().expect("nonempty").clone();
        expected.push(prev * BigRational::new(&delta - BigInt::from(i - 1), BigInt::from(i) * &delta));
    }
    let mut checks = vec![
        Check::holds("slope times rank", "slope * rank = degree = -rho", slope_ok && inv.degree == -k.rho(), report::rational(&inv.slope)),
        Check::holds(
            "stability",
            "bundle is stable exactly when gcd(delta, rho) = 1",
            inv.stable == (exact::gcd_all(&[inv.rank, inv.degree]) == 1) && inv.stable == (wen::u_order(k) == inv.rank),
            json!(inv.stable),
        ),
        Check::holds(
            "total Chern class",
            "coefficient of c1^i is C(delta, i)/delta^i",
            inv.total_chern == expected,
            json!(inv.total_chern.iter().map(exact::rational_to_string).collect::<Vec<_>>()),
        ),
    ];
    if let Some((p, g)) = inv.jain {
        let jain = BigRational::new(BigInt::from(-(g as i64)), BigInt::from(g as i64 * p + 1));
        checks.push(Check::holds("Jain slope", "slope of K_(p,g) is -g/(gp+1)", inv.slope == jain, report::rational(&jain)));
    }
    checks.push(Check::below(
        "dual lattice pairing",
        "dual generators pair integrally with Z^g + tau K Z^g",
        bundle::max_pairing_defect(k, tau),
        1e-12,
    ));
    checks
}

/// Basic facts about the problem, shared by several commands.
pub fn describe_problem(report: &mut Report, problem: &Problem) {
    let k = problem.matrix();
    report.value("K", json!(k.matrix()));
    report.value("n", json!(problem.datum.counts()));
    report.value("d", json!(problem.datum.d()));
    report.value("delta", json!(k.delta()));
    report.value("rho", json!(k.rho()));
    report.value("primary", json!(k.is_primary()));
    report.value("tau", report::complex(problem.tau.tau()));
}

/// Every check group on one problem.
pub fn verify_all(problem: &Problem, opts: &VerifyOptions) -> Report {
    let mut rep = Report::new("verify-all");
    describe_problem(&mut rep, problem);
    let k = problem.matrix();
    rep.extend(theta_checks(&problem.tau, opts));
    rep.extend(riemann_checks(k, &problem.tau, opts));
    rep.extend(wen_checks(k));
    rep.extend(heisenberg_checks(&problem.datum));
    let (center, checks) = center_gram_checks(problem, opts);
    if let Some(center) = center {
        rep.value("center Gram mean diagonal", report::float(center.mean_diagonal()));
    }
    rep.extend(checks);
    rep.extend(wave_checks(problem, opts));
    let (many, checks) = manybody_checks(problem, opts);
    if let Some(many) = many {
        rep.value("many-body Gram mean diagonal", report::float(many.mean_diagonal()));
    }
    rep.extend(checks);
    rep.extend(bundle_checks(k, &problem.tau));
    rep
}
