//! Command-line surface over the sublevel-volume library.
//!
//! One binary, subcommand dispatch, all numerics in the library. Results go
//! to stdout, errors to stderr. Exit codes: 0 success, 1 malformed input,
//! 2 computation failure, 3 inconclusive verdict.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pdform::{
    binary_volume_quadrature, classify_binary, cm_check, directional_derivative_mc,
    expand_power_quadratic, finiteness_diagnostic, gaussian_moment, generic_check,
    gram_identity_residual, gram_identity_residual_exact, l2l1_extremal_check, moment_matrix,
    moment_matrix_exact, monomial_basis, nesterov_gram, quadratic_matrix, sigma_d,
    sigma_pow_d_exact, sos_volume, sphere_measure_moment_mc, volume_mc, volume_quadratic_closed,
    Coeff, DiagnosticVerdict, Error, Form, GenericConfig, GramForm, McConfig, MultiIndex,
    PseudoMomentFunctional, RatMatrix, Result, SymMatrix, Verdict,
};

#[derive(Parser)]
#[command(
    name = "pdform",
    version,
    about = "Volumes of sublevel sets of non-negative forms",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFmt {
    Json,
    Csv,
    Text,
}

/// Monte Carlo run configuration shared by the sampling commands.
#[derive(Args, Clone)]
struct RunOpts {
    /// Monte Carlo sample count
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    /// Deterministic RNG seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Shard count (default: logical CPUs, capped by PDFORM_THREADS)
    #[arg(long)]
    shards: Option<usize>,
    /// Output format
    #[arg(long, value_enum)]
    output: Option<OutputFmt>,
}

impl RunOpts {
    fn config(&self) -> McConfig {
        let cfg = McConfig::new(self.samples, self.seed);
        match self.shards {
            Some(s) => cfg.with_shards(s),
            None => cfg,
        }
    }

    fn fmt(&self) -> OutputFmt {
        self.output.unwrap_or(OutputFmt::Json)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate vol{g <= 1}; adds the spectral closed form when d = 2
    Volume {
        /// Form JSON file ({"n":…,"d":…,"terms":[{"alpha":[…],"coef":"…"}]})
        form: Option<PathBuf>,
        #[command(flatten)]
        run: RunOpts,
        /// Also run the staged sampling diagnostic (exit 3 if inconclusive)
        #[arg(long)]
        diagnose: bool,
        /// Parameter sweep, e.g. --sweep Q=diag(1,t) t=1..10 (CSV rows of
        /// t, MC estimate, stderr, closed form; common random numbers)
        #[arg(long, num_args = 1..=2)]
        sweep: Vec<String>,
    },
    /// Gaussian-like moment matrix M[Q] over the degree-d/2 basis
    MomentMatrix {
        /// Symmetric PD matrix JSON file ({"size":…,"rows":[[…]]})
        #[arg(long = "Q")]
        q: PathBuf,
        /// Even form degree d
        #[arg(long)]
        d: u32,
        /// Exact rational arithmetic (matrix entries may be rational strings)
        #[arg(long)]
        exact: bool,
        #[arg(long, value_enum)]
        output: Option<OutputFmt>,
    },
    /// Residual of the Gram identity m(x)^T M[Q]^{-1} m(x) = (x^T Q x)^{d/2}
    GramCheck {
        #[arg(long = "Q")]
        q: PathBuf,
        #[arg(long)]
        d: u32,
        /// Exact rational arithmetic: the residual is exactly zero
        #[arg(long)]
        exact: bool,
        #[arg(long, value_enum)]
        output: Option<OutputFmt>,
    },
    /// Sphere-measure moment against its moment-matrix counterpart
    SphereMoments {
        #[arg(long = "Q")]
        q: PathBuf,
        #[arg(long)]
        d: u32,
        /// Moment exponent, comma-separated (degree must equal d), e.g. 2,2
        #[arg(long)]
        gamma: String,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Exact finite/infinite/negative classification of a binary form
    ClassifyBinary {
        form: PathBuf,
        /// Append the certified quadrature volume on finite verdicts
        #[arg(long)]
        volume: bool,
        #[arg(long, value_enum)]
        output: Option<OutputFmt>,
    },
    /// Numeric zero-structure check on the unit sphere (n >= 3)
    GenericCheck {
        form: PathBuf,
        /// Random starts per variable
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Zero threshold override (absolute, on the input form's scale)
        #[arg(long)]
        tol_zero: Option<f64>,
        /// Gradient-convergence threshold override
        #[arg(long)]
        tol_grad: Option<f64>,
        /// Tangent-eigenvalue threshold override
        #[arg(long)]
        tol_pd: Option<f64>,
        #[arg(long, value_enum)]
        output: Option<OutputFmt>,
    },
    /// Sign check of the alternating volume derivatives (complete monotonicity)
    CmCheck {
        form: PathBuf,
        /// Highest derivative order to test
        #[arg(long, default_value_t = 3)]
        max_k: u32,
        /// Random direction tuples per order
        #[arg(long, default_value_t = 10)]
        trials: u32,
        #[command(flatten)]
        run: RunOpts,
    },
    /// L^2/L^1 extremal-property check for a form against random competitors
    L2l1Check {
        form: PathBuf,
        /// Number of random competitors
        #[arg(long, default_value_t = 100)]
        trials: u32,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Gram-matrix operations for sums of squares
    Sos {
        #[command(subcommand)]
        op: SosCmd,
    },
    /// Directional derivatives of the volume with a finite-difference cross-check
    Derivative {
        form: PathBuf,
        /// JSON file with an array of direction forms
        #[arg(long)]
        dirs: PathBuf,
        /// Optional weight form h (defaults to 1)
        #[arg(long)]
        h: Option<PathBuf>,
        #[command(flatten)]
        run: RunOpts,
    },
}

#[derive(Subcommand)]
enum SosCmd {
    /// Expand a Gram matrix over the degree-d/2 basis into its form
    Expand {
        /// Symmetric Gram matrix JSON file
        #[arg(long = "G")]
        g: PathBuf,
        /// Number of variables
        #[arg(long)]
        n: usize,
        /// Form degree (even); the basis has degree d/2
        #[arg(long)]
        d: u32,
        #[arg(long, value_enum)]
        output: Option<OutputFmt>,
    },
    /// Volume of the sublevel set of the form a Gram bundle represents
    Volume {
        /// Gram bundle JSON file (as emitted by sos expand / sos nesterov)
        #[arg(long)]
        bundle: PathBuf,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Gram matrix from the inverse moment matrix of a functional
    Nesterov {
        /// Pseudo-moment functional JSON file ({"n":…,"d":…,"moments":[…]})
        #[arg(long = "L")]
        l: Option<PathBuf>,
        /// Build the Gaussian functional attached to this PD matrix instead
        #[arg(long = "Q")]
        q: Option<PathBuf>,
        /// Degree for --Q mode
        #[arg(long)]
        d: Option<u32>,
        #[arg(long, value_enum)]
        output: Option<OutputFmt>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    match run(cli.cmd) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Input(_)
        | Error::DimensionMismatch { .. }
        | Error::DegreeMismatch(_)
        | Error::OddDegree(_)
        | Error::ZeroPolynomial
        | Error::MissingMoment(_) => 1,
        Error::Inconclusive(_) => 3,
        _ => 2,
    }
}

/// Print one stdout line, exiting quietly when the reader closed the pipe
/// (e.g. `pdform … | head`).
fn print_out(line: std::fmt::Arguments<'_>) {
    use std::io::Write;
    let mut so = std::io::stdout().lock();
    if writeln!(so, "{line}").is_err() {
        std::process::exit(0);
    }
}

macro_rules! outln {
    ($($arg:tt)*) => { print_out(format_args!($($arg)*)) };
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

fn read_form_f64(path: &Path) -> Result<Form<f64>> {
    Form::<f64>::from_json(&read(path)?)
}

fn read_matrix(path: &Path) -> Result<SymMatrix> {
    SymMatrix::from_json(&read(path)?)
}

fn parse_value(s: &str) -> Result<Value> {
    serde_json::from_str(s).map_err(|e| Error::Input(format!("internal JSON error: {e}")))
}

fn run(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Volume { form, run, diagnose, sweep } => {
            if !sweep.is_empty() {
                return run_sweep(&sweep, &run);
            }
            let path = form.ok_or_else(|| {
                Error::Input("volume needs a form file (or --sweep)".into())
            })?;
            let g = read_form_f64(&path)?;
            let cfg = run.config();
            let est = volume_mc(&g, &cfg)?;
            let mut out = parse_value(&est.to_json())?;
            if g.degree() == 2 {
                let closed = volume_quadratic_closed(&quadratic_matrix(&g)?)?;
                out["closed_form"] = json!(closed);
            }
            let mut code = 0;
            if diagnose {
                let rep = finiteness_diagnostic(&g, &cfg)?;
                if rep.verdict == DiagnosticVerdict::Inconclusive {
                    code = 3;
                }
                out["diagnostic"] = parse_value(&rep.to_json())?;
            }
            emit(&out, run.fmt());
            Ok(code)
        }
        Cmd::MomentMatrix { q, d, exact, output } => {
            let out = if exact {
                let qr = RatMatrix::from_json(&read(&q)?)?;
                let (basis, mat) = moment_matrix_exact(&qr, d)?;
                let sig = sigma_pow_d_exact(basis.n(), d)?;
                let mat_repr: Value = parse_value(&mat.to_json())?;
                json!({
                    "sigma_d_pow_d": sig.format_coef(),
                    "basis": basis.indices().iter().map(|a| a.exps().to_vec()).collect::<Vec<_>>(),
                    "matrix": mat_repr,
                })
            } else {
                let qm = read_matrix(&q)?;
                let mm = moment_matrix(&qm, d)?;
                let mut v = parse_value(&mm.to_json())?;
                v["sigma_d"] = json!(sigma_d(qm.size(), d)?);
                v
            };
            emit(&out, output.unwrap_or(OutputFmt::Json));
            Ok(0)
        }
        Cmd::GramCheck { q, d, exact, output } => {
            let out = if exact {
                let qr = RatMatrix::from_json(&read(&q)?)?;
                let res = gram_identity_residual_exact(&qr, d)?;
                let repr = res.format_coef();
                json!({
                    "exact_zero": repr == "0",
                    "residual": repr,
                    "mode": "exact",
                })
            } else {
                let qm = read_matrix(&q)?;
                let res = gram_identity_residual(&qm, d)?;
                json!({
                    "residual": res.residual,
                    "condition": res.condition,
                    "mode": "f64",
                })
            };
            emit(&out, output.unwrap_or(OutputFmt::Json));
            Ok(0)
        }
        Cmd::SphereMoments { q, d, gamma, run } => {
            let qm = read_matrix(&q)?;
            let gamma = parse_gamma(&gamma)?;
            if gamma.degree() != d {
                return Err(Error::Input(format!(
                    "gamma has degree {}, expected d = {d}",
                    gamma.degree()
                )));
            }
            let cfg = run.config();
            let est = sphere_measure_moment_mc(&qm, d, &gamma, &cfg)?;
            let mm = moment_matrix(&qm, d)?;
            let (alpha, beta) = split_exponent(&gamma, d)?;
            let a = mm.basis().position(&alpha).ok_or_else(|| {
                Error::Input(format!("no basis slot for {:?}", alpha.exps()))
            })?;
            let b = mm.basis().position(&beta).ok_or_else(|| {
                Error::Input(format!("no basis slot for {:?}", beta.exps()))
            })?;
            let reference = mm.matrix().get(a, b);
            let z = (est.value - reference).abs() / est.stderr.max(1e-300);
            let out = json!({
                "gamma": gamma.exps().to_vec(),
                "estimate": { "value": est.value, "stderr": est.stderr, "samples": est.samples },
                "reference": reference,
                "z": z,
            });
            emit(&out, run.fmt());
            Ok(0)
        }
        Cmd::ClassifyBinary { form, volume, output } => {
            let g = Form::<num_rational::BigRational>::from_json(&read(&form)?)?;
            let cls = classify_binary(&g)?;
            let mut out = parse_value(&cls.to_json())?;
            if volume {
                match cls.verdict {
                    Verdict::Finite | Verdict::PositiveDefinite => {
                        out["volume"] = json!(binary_volume_quadrature(&g)?);
                    }
                    _ => {}
                }
            }
            emit(&out, output.unwrap_or(OutputFmt::Json));
            Ok(0)
        }
        Cmd::GenericCheck { form, starts, seed, tol_zero, tol_grad, tol_pd, output } => {
            let g = read_form_f64(&form)?;
            let mut cfg = GenericConfig { seed, ..GenericConfig::default() };
            if let Some(s) = starts {
                cfg.starts_per_var = s;
            }
            cfg.tol_zero = tol_zero;
            if let Some(t) = tol_grad {
                cfg.tol_grad = t;
            }
            cfg.tol_pd = tol_pd;
            let cls = generic_check(&g, &cfg)?;
            let inconclusive = cls.verdict == Verdict::Inconclusive;
            emit(&parse_value(&cls.to_json())?, output.unwrap_or(OutputFmt::Json));
            Ok(if inconclusive { 3 } else { 0 })
        }
        Cmd::CmCheck { form, max_k, trials, run } => {
            let g = read_form_f64(&form)?;
            let rep = cm_check(&g, max_k, trials, &run.config())?;
            emit(&parse_value(&rep.to_json())?, run.fmt());
            Ok(0)
        }
        Cmd::L2l1Check { form, trials, run } => {
            let g = read_form_f64(&form)?;
            let rep = l2l1_extremal_check(&g, trials, &run.config())?;
            emit(&parse_value(&rep.to_json())?, run.fmt());
            Ok(0)
        }
        Cmd::Sos { op } => run_sos(op),
        Cmd::Derivative { form, dirs, h, run } => {
            let g = read_form_f64(&form)?;
            let dir_reprs: Vec<pdform::FormRepr> = serde_json::from_str(&read(&dirs)?)?;
            let directions = dir_reprs
                .into_iter()
                .map(Form::<f64>::from_repr)
                .collect::<Result<Vec<_>>>()?;
            let hform = h.map(|p| read_form_f64(&p)).transpose()?;
            let rep = directional_derivative_mc(&g, &directions, hform.as_ref(), &run.config())?;
            let z = (rep.estimate.value - rep.fd_value).abs() / rep.estimate.stderr.max(1e-300);
            let out = json!({
                "order": rep.order,
                "estimate": {
                    "value": rep.estimate.value,
                    "stderr": rep.estimate.stderr,
                    "samples": rep.estimate.samples,
                },
                "fd_value": rep.fd_value,
                "fd_step": rep.fd_step,
                "agreement_z": z,
            });
            emit(&out, run.fmt());
            Ok(0)
        }
    }
}

fn run_sos(op: SosCmd) -> Result<i32> {
    match op {
        SosCmd::Expand { g, n, d, output } => {
            if d == 0 || d % 2 != 0 {
                return Err(Error::OddDegree(d));
            }
            let mat = read_matrix(&g)?;
            let basis = monomial_basis(n, d / 2)?;
            let gram = GramForm::new(mat, basis)?;
            let mut out = parse_value(&gram.to_json())?;
            out["is_sos_certificate"] = json!(gram.is_sos_certificate());
            emit(&out, output.unwrap_or(OutputFmt::Json));
            Ok(0)
        }
        SosCmd::Volume { bundle, run } => {
            let gram = GramForm::from_json(&read(&bundle)?)?;
            let est = sos_volume(&gram, &run.config())?;
            emit(&parse_value(&est.to_json())?, run.fmt());
            Ok(0)
        }
        SosCmd::Nesterov { l, q, d, output } => {
            let (func, target) = match (l, q) {
                (Some(path), None) => {
                    (PseudoMomentFunctional::from_json(&read(&path)?)?, None)
                }
                (None, Some(path)) => {
                    let d = d.ok_or_else(|| {
                        Error::Input("--Q mode needs --d for the functional degree".into())
                    })?;
                    let qm = read_matrix(&path)?;
                    (gaussian_functional(&qm, d)?, Some(expand_power_quadratic(&qm, d)?))
                }
                _ => {
                    return Err(Error::Input(
                        "nesterov needs exactly one of --L <moments.json> or --Q <mat.json>".into(),
                    ))
                }
            };
            let gram = nesterov_gram(&func)?;
            let mut out = parse_value(&gram.to_json())?;
            out["is_sos_certificate"] = json!(gram.is_sos_certificate());
            if let Some(t) = target {
                let dev = gram.form().sub(&t)?.max_abs_coefficient();
                out["max_coefficient_deviation"] = json!(dev);
            }
            emit(&out, output.unwrap_or(OutputFmt::Json));
            Ok(0)
        }
    }
}

/// The functional whose moment matrix is M[Q]: L(y^γ) = σ_d^d E[z^γ] for
/// z ~ N(0, Q^{-1}); its Nesterov Gram matrix expands to (x^T Q x)^{d/2}.
fn gaussian_functional(q: &SymMatrix, d: u32) -> Result<PseudoMomentFunctional> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::OddDegree(d));
    }
    let n = q.size();
    let cov = q.inverse_pd()?;
    let sig: f64 = Coeff::to_f64(&sigma_pow_d_exact(n, d)?);
    let moments = monomial_basis(n, d)?
        .indices()
        .iter()
        .map(|gamma| Ok((gamma.clone(), sig * gaussian_moment(&cov, gamma)?)))
        .collect::<Result<Vec<_>>>()?;
    PseudoMomentFunctional::from_moments(n, d, moments)
}

fn parse_gamma(s: &str) -> Result<MultiIndex> {
    let exps = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Error::Input(format!("bad exponent {t:?} in gamma")))
        })
        .collect::<Result<Vec<u32>>>()?;
    if exps.is_empty() {
        return Err(Error::Input("gamma must have at least one exponent".into()));
    }
    Ok(MultiIndex::new(exps))
}

/// Split a degree-d exponent into two degree-d/2 halves (greedy fill).
fn split_exponent(gamma: &MultiIndex, d: u32) -> Result<(MultiIndex, MultiIndex)> {
    if d % 2 != 0 {
        return Err(Error::OddDegree(d));
    }
    let half = d / 2;
    let mut left = vec![0u32; gamma.n()];
    let mut remaining = half;
    for (i, &e) in gamma.exps().iter().enumerate() {
        let take = e.min(remaining);
        left[i] = take;
        remaining -= take;
        if remaining == 0 {
            break;
        }
    }
    let right: Vec<u32> = gamma.exps().iter().zip(&left).map(|(&e, &l)| e - l).collect();
    Ok((MultiIndex::new(left), MultiIndex::new(right)))
}

// ---- sweep -----------------------------------------------------------------

struct Sweep {
    entries: Vec<Option<f64>>, // None marks the swept slot t
    lo: i64,
    hi: i64,
}

/// Parse `Q=diag(a,…,t,…) t=lo..hi` (whitespace-separated or two args).
fn parse_sweep(args: &[String]) -> Result<Sweep> {
    let joined = args.join(" ");
    let parts: Vec<&str> = joined.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(Error::Input(
            "sweep syntax: --sweep Q=diag(…,t,…) t=lo..hi".into(),
        ));
    }
    let diag = parts[0]
        .strip_prefix("Q=diag(")
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| Error::Input(format!("bad sweep spec {:?}", parts[0])))?;
    let entries = diag
        .split(',')
        .map(|t| {
            let t = t.trim();
            if t == "t" {
                Ok(None)
            } else {
                t.parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::Input(format!("bad diagonal entry {t:?}")))
            }
        })
        .collect::<Result<Vec<Option<f64>>>>()?;
    if entries.len() < 2 {
        return Err(Error::Input("sweep needs at least two diagonal entries".into()));
    }
    if !entries.iter().any(|e| e.is_none()) {
        return Err(Error::Input("sweep diagonal must contain the parameter t".into()));
    }
    let range = parts[1]
        .strip_prefix("t=")
        .ok_or_else(|| Error::Input(format!("bad sweep range {:?}", parts[1])))?;
    let (lo, hi) = range
        .split_once("..")
        .ok_or_else(|| Error::Input(format!("bad sweep range {:?}", parts[1])))?;
    let lo: i64 = lo
        .parse()
        .map_err(|_| Error::Input(format!("bad sweep bound {lo:?}")))?;
    let hi: i64 = hi
        .parse()
        .map_err(|_| Error::Input(format!("bad sweep bound {hi:?}")))?;
    if lo > hi {
        return Err(Error::Input("empty sweep range".into()));
    }
    Ok(Sweep { entries, lo, hi })
}

fn run_sweep(args: &[String], run: &RunOpts) -> Result<i32> {
    let sweep = parse_sweep(args)?;
    let cfg = run.config();
    let n = sweep.entries.len();
    match run.output {
        None | Some(OutputFmt::Csv) | Some(OutputFmt::Text) => {
            outln!("t,value,stderr,closed_form");
        }
        Some(OutputFmt::Json) => {}
    }
    let mut rows = Vec::new();
    for t in sweep.lo..=sweep.hi {
        let diag: Vec<f64> = sweep
            .entries
            .iter()
            .map(|e| e.unwrap_or(t as f64))
            .collect();
        if diag.iter().any(|&v| v <= 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "sweep diagonal at t = {t} is not positive"
            )));
        }
        let mut g = Form::<f64>::zero(n, 2);
        for (i, &v) in diag.iter().enumerate() {
            let mut alpha = vec![0u32; n];
            alpha[i] = 2;
            g.add_term(MultiIndex::new(alpha), v)?;
        }
        let est = volume_mc(&g, &cfg)?;
        let closed = volume_quadratic_closed(&quadratic_matrix(&g)?)?;
        match run.output {
            None | Some(OutputFmt::Csv) | Some(OutputFmt::Text) => {
                outln!("{t},{},{},{closed}", est.value, est.stderr);
            }
            Some(OutputFmt::Json) => rows.push(json!({
                "t": t,
                "value": est.value,
                "stderr": est.stderr,
                "closed_form": closed,
            })),
        }
    }
    if run.output == Some(OutputFmt::Json) {
        outln!("{}", serde_json::to_string_pretty(&Value::Array(rows)).expect("serializable"));
    }
    Ok(0)
}

// ---- output ----------------------------------------------------------------

fn emit(value: &Value, fmt: OutputFmt) {
    match fmt {
        OutputFmt::Json => {
            outln!("{}", serde_json::to_string_pretty(value).expect("serializable"));
        }
        OutputFmt::Text => {
            for (k, v) in flatten(value) {
                outln!("{k} = {v}");
            }
        }
        OutputFmt::Csv => {
            outln!("key,value");
            for (k, v) in flatten(value) {
                outln!("{},{}", csv_escape(&k), csv_escape(&v));
            }
        }
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Depth-first flattening of a JSON value into (dotted-path, scalar) rows.
fn flatten(value: &Value) -> Vec<(String, String)> {
    let mut rows = Vec::new();
    walk(value, String::new(), &mut rows);
    rows
}

fn walk(value: &Value, path: String, rows: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            let sorted: BTreeMap<&String, &Value> = map.iter().collect();
            for (k, v) in sorted {
                let next = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                walk(v, next, rows);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                walk(v, format!("{path}[{i}]"), rows);
            }
        }
        Value::Null => rows.push((path, "null".into())),
        Value::Bool(b) => rows.push((path, b.to_string())),
        Value::Number(n) => rows.push((path, n.to_string())),
        Value::String(s) => rows.push((path, s.clone())),
    }
}
