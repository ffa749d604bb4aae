use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use kvw_core::bundle;
use kvw_core::exact;
use kvw_core::heisenberg::{self, BasisOrder, MonomialMatrix};
use kvw_core::hermitian::{self, GramReport, QuadratureSpec};
use kvw_core::io::{self, Problem};
use kvw_core::report::{self, Report};
use kvw_core::theta::{self, OmegaMatrix};
use kvw_core::verify::{self, VerifyOptions};
use kvw_core::wavefunctions::Configuration;
use kvw_core::wen::{self, PiGroup};

/// Environment variable overriding the worker thread count.
const THREADS_ENV: &str = "KVW_THREADS";

#[derive(Parser, Debug)]
#[command(name = "kvw", version, about = "Multi-layer quantum Hall states on a torus: evaluation and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Input document (JSON or a plain integer matrix); `-` reads stdin.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Series truncation tolerance.
    #[arg(long, global = true, default_value_t = 1e-12, value_parser = positive_f64)]
    tol: f64,
    /// Gauss-Legendre points per axis.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    points: Option<u32>,
    /// Quasi-Monte-Carlo samples.
    #[arg(long, global = true, default_value_t = 1 << 20, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Check the input and print the basic data of K.
    Validate,
    /// Exact invariants of K, Pi and the magnetic bundle.
    Invariants,
    /// Evaluate Theta[a,b](z | tau K) and check its shift rules.
    ThetaEval,
    /// Evaluate the many-body basis at a configuration.
    WfEval,
    /// Magnetic translation matrices and Heisenberg relations.
    Heisenberg,
    /// Gram matrix of the center-of-mass basis.
    GramCenter,
    /// Gram matrix of the many-body basis.
    GramManybody,
    /// Every check on the input.
    VerifyAll,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Human,
    Json,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(_) => Err("must be a positive number".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let problem = match load(cli.input.as_ref()) {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    let opts = VerifyOptions {
        tol: cli.tol,
        points: cli.points.map(|p| p as usize),
        samples: cli.samples as usize,
        seed: cli.seed,
        ..VerifyOptions::default()
    };
    let rep = run(cli.command, &problem, &opts);
    match cli.format {
        Format::Human => print!("{}", rep.to_human()),
        Format::Json => println!("{}", rep.to_json()),
    }
    if rep.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn load(path: Option<&PathBuf>) -> Result<Problem, String> {
    let path = path.ok_or("ParseError: --input is required")?;
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| format!("ParseError: stdin: {e}"))?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("ParseError: {}: {e}", path.display()))?
    };
    let doc = io::parse_document(&text).map_err(|e| e.to_string())?;
    io::validate(&doc).map_err(|e| e.to_string())
}

fn run(command: Command, problem: &Problem, opts: &VerifyOptions) -> Report {
    match command {
        Command::Validate => validate(problem),
        Command::Invariants => invariants(problem),
        Command::ThetaEval => theta_eval(problem, opts),
        Command::WfEval => wf_eval(problem, opts),
        Command::Heisenberg => heisenberg_report(problem),
        Command::GramCenter => gram_center(problem, opts),
        Command::GramManybody => gram_manybody(problem, opts),
        Command::VerifyAll => verify::verify_all(problem, opts),
    }
}

fn validate(problem: &Problem) -> Report {
    let mut rep = Report::new("validate");
    verify::describe_problem(&mut rep, problem);
    let k = problem.matrix();
    rep.value("statistics", json!(format!("{:?}", k.statistics()).to_lowercase()));
    rep.value("u", json!(k.u().iter().map(exact::rational_to_string).collect::<Vec<_>>()));
    rep
}

fn invariants(problem: &Problem) -> Report {
    let mut rep = Report::new("invariants");
    let k = problem.matrix();
    verify::describe_problem(&mut rep, problem);
    rep.value("adjugate", json!(k.adjugate()));
    rep.value("u", json!(k.u().iter().map(exact::rational_to_string).collect::<Vec<_>>()));
    let pi = PiGroup::new(k);
    rep.value("Pi invariant factors", json!(pi.invariant_factors()));
    rep.value("order of u in Pi", json!(wen::u_order(k)));
    let inv = bundle::restricted_invariants(k);
    rep.value("first Chern coefficients", json!(inv.c1_coeff));
    for (name, value) in bundle::describe(&inv) {
        rep.value(&name, json!(value));
    }
    rep.extend(verify::wen_checks(k));
    rep.extend(verify::bundle_checks(k, &problem.tau));
    rep
}

fn theta_eval(problem: &Problem, opts: &VerifyOptions) -> Report {
    let mut rep = Report::new("theta-eval");
    let k = problem.matrix();
    let omega = OmegaMatrix::from_tau_k(&problem.tau, k.matrix()).expect("tau K has positive imaginary part");
    rep.value("Omega", report::complex_matrix(omega.rows()));
    rep.value("a", json!(problem.theta.a));
    rep.value("b", json!(problem.theta.b));
    rep.value("z", json!(problem.theta_z.iter().copied().map(io::pair).collect::<Vec<_>>()));
    match theta::riemann_theta(&problem.theta, &problem.theta_z, &omega, opts.tol) {
        Ok(v) => rep.value("Theta", report::complex(v)),
        Err(e) => rep.value("Theta", json!(e.to_string())),
    }
    rep.value("truncation radius", report::float(theta::truncation_plan(&omega, opts.tol).radius));
    rep.extend(verify::theta_checks(&problem.tau, opts));
    rep.extend(verify::riemann_checks(k, &problem.tau, opts));
    rep
}

fn wf_eval(problem: &Problem, opts: &VerifyOptions) -> Report {
    let mut rep = Report::new("wf-eval");
    verify::describe_problem(&mut rep, problem);
    let spec = match verify::wave_spec(problem, opts) {
        Ok(s) => s,
        Err(e) => {
            rep.value("error", json!(e.to_string()));
            return rep;
        }
    };
    let config = match &problem.positions {
        Some(p) => Configuration::new(p.clone()),
        None => verify::random_configuration(problem, opts.seed),
    };
    rep.value(
        "positions",
        json!(config.layers.iter().map(|l| l.iter().copied().map(io::pair).collect::<Vec<_>>()).collect::<Vec<_>>()),
    );
    let delta = spec.delta();
    for c in spec.pi().elements() {
        let value = spec.kvw_wavefunction(c, &config).map(report::complex).unwrap_or_else(|e| json!(e.to_string()));
        rep.value(&format!("Phi[{}]", c.display(delta)), value);
    }
    rep.extend(verify::wave_checks(problem, opts));
    rep
}

fn monomial(m: &MonomialMatrix) -> serde_json::Value {
    json!({"perm": m.perm(), "exponents": m.exps(), "modulus": m.modulus()})
}

fn heisenberg_report(problem: &Problem) -> Report {
    let mut rep = Report::new("heisenberg");
    verify::describe_problem(&mut rep, problem);
    let k = problem.matrix();
    let order = if wen::u_order(k) == k.delta() { BasisOrder::UPowers } else { BasisOrder::PiIndex };
    if let Ok(m) = heisenberg::rep_matrices(&problem.datum, order) {
        rep.value("basis", json!(m.basis.iter().map(|c| c.display(k.delta())).collect::<Vec<_>>()));
        rep.value("T1", monomial(&m.t1));
        rep.value("T2", monomial(&m.t2));
        rep.value("q", json!(format!("exp(2 pi i {}/{})", m.q_exponent, m.delta)));
    }
    rep.extend(verify::heisenberg_checks(&problem.datum));
    rep
}

fn gram_values(rep: &mut Report, gram: &GramReport) {
    rep.value("basis", json!(gram.basis));
    rep.value("scheme", json!(format!("{:?}", gram.scheme)));
    rep.value("evaluations", json!(gram.evaluations));
    rep.value("Gram", report::complex_matrix(&gram.matrix));
    if gram.stderr.iter().flatten().any(|&s| s > 0.0) {
        rep.value("stderr", json!(gram.stderr.iter().map(|r| r.iter().copied().map(report::float).collect::<Vec<_>>()).collect::<Vec<_>>()));
    }
    rep.value("mean diagonal", report::float(gram.mean_diagonal()));
    if let Some(k) = gram.kappa_ref {
        rep.value("kappa closed form", report::float(k));
    }
    if let Some(k) = gram.kappa_integral {
        rep.value("kappa Gaussian integral", report::float(k));
    }
}

fn gram_center(problem: &Problem, opts: &VerifyOptions) -> Report {
    let mut rep = Report::new("gram-center");
    verify::describe_problem(&mut rep, problem);
    if let Some(points) = opts.points_for(problem.g()) {
        rep.value("points per axis", json!(points));
    }
    let (gram, checks) = verify::center_gram_checks(problem, opts);
    if let Some(gram) = gram {
        gram_values(&mut rep, &gram);
    }
    rep.extend(checks);
    rep
}

fn gram_manybody(problem: &Problem, opts: &VerifyOptions) -> Report {
    let mut rep = Report::new("gram-manybody");
    verify::describe_problem(&mut rep, problem);
    match opts.points {
        None => {
            let (gram, checks) = verify::manybody_checks(problem, opts);
            if let Some(gram) = gram {
                gram_values(&mut rep, &gram);
            }
            rep.extend(checks);
        }
        Some(points) => {
            let anchor = "many-body Gram matrix is a multiple of the identity";
            let result = verify::wave_spec(problem, opts)
                .map_err(|e| e.to_string())
                .and_then(|spec| {
                    hermitian::gram_manybody(&spec, &QuadratureSpec::TensorGauss { points }).map_err(|e| e.to_string())
                });
            match result {
                Ok(gram) => {
                    gram_values(&mut rep, &gram);
                    rep.extend([report::Check::below(
                        "many-body relative deviation",
                        anchor,
                        gram.scalar_deviation.max(gram.diag_spread),
                        0.02,
                    )]);
                }
                Err(e) => rep.extend([report::Check::skipped("many-body Gram", anchor, &e)]),
            }
        }
    }
    rep
}
