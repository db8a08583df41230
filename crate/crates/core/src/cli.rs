//! Command-line front end.
//!
//! Every result file starts with `#`-prefixed metadata lines echoing the
//! flags it was produced with, so it can be regenerated exactly.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::em::{
    naive_em, recover_new_approach, ConvergenceOptions, EmResult, MStep, NaiveOptions,
    PipelineOptions, TestScale,
};
use crate::error::{ensure, Error, Result};
use crate::l1::{default_lambda, recover_conventional, L1Options};
use crate::linalg::{
    generate_sensing_matrix, rip_constant_estimate, sample_signal, RipMode, SparseMean,
};
use crate::sim::{
    self, derive_seed, emit_plot, format_sig9, run_comparison, run_init_study, run_m_sweep,
    ExperimentConfig, MSweepConfig, Method, PlotAxis, PlotOptions, EXP_INIT_STUDY, EXP_RECOVER,
    EXP_RIP, NEAR_ZERO_INIT, STREAM_CONVENTIONAL_DRAW, STREAM_EM_DRAW, STREAM_PHI,
};

const DEFAULT_INITS: &str =
    "0.0001,0.0001,0.0001,0.0001;12.52,22.76,35.98,67.72;10.5,11.25,25.62,19.74";

#[derive(Debug, Parser)]
#[command(
    name = "sparse-em",
    version,
    about = "Sparse signal recovery by EM and L1 minimisation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recover one simulated signal with a single method.
    Recover(RecoverArgs),
    /// Compare methods over a grid of noise levels.
    Compare(CompareArgs),
    /// Unrestricted-EM limit as a function of the starting point.
    InitStudy(InitStudyArgs),
    /// New-approach residual as the number of measurements varies.
    MSweep(MSweepArgs),
    /// Estimate the restricted isometry constant of a random sensing matrix.
    Rip(RipArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Conventional,
    Naive,
    New,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScaleArg {
    Unit,
    Sigma,
}

impl From<ScaleArg> for TestScale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Unit => TestScale::Unit,
            ScaleArg::Sigma => TestScale::Sigma,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RipModeArg {
    Brute,
    MonteCarlo,
}

#[derive(Debug, Args)]
struct Common {
    /// Master seed; all randomness derives from it.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct MeanArgs {
    /// Sparse mean as `firstK=V`: first K coordinates equal V, the rest zero.
    #[arg(long, default_value = "first4=5")]
    mu_spec: String,
    /// File with one mean value per line; overrides --mu-spec.
    #[arg(long)]
    mu_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EmArgs {
    /// EM stopping tolerance on ‖Δμ‖₂.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// EM iteration cap.
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Noise scale the support-test statistics are divided by.
    #[arg(long, value_enum, default_value_t = ScaleArg::Unit)]
    test_scale: ScaleArg,
}

#[derive(Debug, Args)]
struct RecoverArgs {
    /// Reconstruction method.
    #[arg(long, value_enum, default_value_t = ModeArg::New)]
    mode: ModeArg,
    /// Signal dimension.
    #[arg(long)]
    n: usize,
    /// Measurements (default n/2).
    #[arg(long)]
    m: Option<usize>,
    /// Support bound for the naive method (default m).
    #[arg(long)]
    k: Option<usize>,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Level of the per-coordinate support tests.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// L1 penalty (default σ√(2 ln n)).
    #[arg(long)]
    lambda: Option<f64>,
    #[command(flatten)]
    mean: MeanArgs,
    #[command(flatten)]
    em: EmArgs,
    #[command(flatten)]
    common: Common,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Signal dimension.
    #[arg(long)]
    n: usize,
    /// Measurements (default n/2).
    #[arg(long)]
    m: Option<usize>,
    /// Support bound for the naive method (default m).
    #[arg(long)]
    k: Option<usize>,
    /// `lo:hi:step` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "0.1:1.0:0.1")]
    sigma_grid: String,
    /// Replications.
    #[arg(long, default_value_t = 10)]
    outer_reps: usize,
    /// Fresh signal draws per replication in the conventional arm.
    #[arg(long, default_value_t = 1000)]
    inner_reps: usize,
    /// Level of the per-coordinate support tests.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// L1 penalty (default σ√(2 ln n) per grid point).
    #[arg(long)]
    lambda: Option<f64>,
    /// Comma-separated subset of conventional,naive,new.
    #[arg(long, default_value = "conventional,new")]
    methods: String,
    /// Add the conventional arm's ‖μ − mean(x̂)‖ rows.
    #[arg(long)]
    supplementary: bool,
    #[command(flatten)]
    mean: MeanArgs,
    #[command(flatten)]
    em: EmArgs,
    #[command(flatten)]
    common: Common,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Optional SVG chart.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InitStudyArgs {
    /// Signal dimension.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Number of measurements.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Initializers separated by `;`, entries by `,`.
    #[arg(long, default_value = DEFAULT_INITS)]
    inits: String,
    /// Additional random initializers with entries uniform in [10, 70].
    #[arg(long, default_value_t = 0)]
    random_inits: usize,
    #[command(flatten)]
    mean: MeanArgs,
    #[command(flatten)]
    em: EmArgs,
    #[command(flatten)]
    common: Common,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MSweepArgs {
    /// Signal dimension.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 0.001)]
    sigma: f64,
    /// `lo:hi:step` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "100,300,500")]
    m_grid: String,
    /// Replications.
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Level of the per-coordinate support tests.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    mean: MeanArgs,
    #[command(flatten)]
    em: EmArgs,
    #[command(flatten)]
    common: Common,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Optional SVG chart.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RipArgs {
    /// Signal dimension.
    #[arg(long)]
    n: usize,
    /// Number of measurements.
    #[arg(long)]
    m: usize,
    /// Sparsity level.
    #[arg(long)]
    k: usize,
    /// Exhaustive search or random supports.
    #[arg(long, value_enum, default_value_t = RipModeArg::Brute)]
    mode: RipModeArg,
    /// Random supports drawn in Monte-Carlo mode.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[command(flatten)]
    common: Common,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `argv` (including the program name), runs, and returns the exit status.
pub fn main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Recover(a) => recover(a),
        Command::Compare(a) => compare(a),
        Command::InitStudy(a) => init_study(a),
        Command::MSweep(a) => m_sweep(a),
        Command::Rip(a) => rip(a),
    }
}

fn configure_threads(common: &Common) -> Result<()> {
    if let Some(t) = common.threads {
        ensure(t >= 1, || "--threads must be positive".into())?;
        // a second call within one process keeps the existing pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    Ok(())
}

/// Parses `lo:hi:step` (inclusive, `round((hi − lo)/step) + 1` points) or a
/// comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::contract(format!("invalid grid '{s}'"));
    let values: Vec<f64> = if s.contains(':') {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        ensure(parts.len() == 3, || {
            format!("grid '{s}' must be lo:hi:step")
        })?;
        let (lo, hi, step) = (parts[0], parts[1], parts[2]);
        ensure(step > 0.0 && hi >= lo, || {
            format!("grid '{s}' needs step > 0 and hi >= lo")
        })?;
        let count = ((hi - lo) / step).round() as usize + 1;
        (0..count).map(|i| snap(lo + i as f64 * step)).collect()
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    ensure(!values.is_empty(), || format!("grid '{s}' is empty"))?;
    ensure(values.iter().all(|v| v.is_finite()), bad_msg(s))?;
    Ok(values)
}

fn bad_msg(s: &str) -> impl FnOnce() -> String + '_ {
    move || format!("invalid grid '{s}'")
}

/// Removes accumulated floating error so `0.1 + 2·0.1` reads as `0.3`.
fn snap(v: f64) -> f64 {
    format!("{v:.12}").parse().unwrap_or(v)
}

fn parse_m_grid(s: &str) -> Result<Vec<usize>> {
    parse_grid(s)?
        .into_iter()
        .map(|v| {
            ensure(v >= 1.0 && v.fract() == 0.0, || {
                format!("m grid values must be positive integers, got {v}")
            })?;
            Ok(v as usize)
        })
        .collect()
}

fn parse_mean(args: &MeanArgs, n: usize) -> Result<SparseMean> {
    if let Some(path) = &args.mu_file {
        let text = std::fs::read_to_string(path)?;
        let values: Vec<f64> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.parse::<f64>()
                    .map_err(|_| Error::contract(format!("bad value '{l}' in {}", path.display())))
            })
            .collect::<Result<_>>()?;
        ensure(values.len() == n, || {
            format!(
                "{} has {} values, expected n = {n}",
                path.display(),
                values.len()
            )
        })?;
        return SparseMean::new(DVector::from_vec(values), n);
    }
    let spec = args.mu_spec.trim();
    let bad = || Error::contract(format!("invalid --mu-spec '{spec}' (expected firstK=V)"));
    let rest = spec.strip_prefix("first").ok_or_else(bad)?;
    let (count, value) = rest.split_once('=').ok_or_else(bad)?;
    let count: usize = count.parse().map_err(|_| bad())?;
    let value: f64 = value.parse().map_err(|_| bad())?;
    ensure(count <= n, || {
        format!("--mu-spec sets {count} coordinates but n = {n}")
    })?;
    SparseMean::leading(n, count, value, n)
}

fn parse_vector_list(s: &str, n: usize) -> Result<Vec<DVector<f64>>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|part| {
            let v: Vec<f64> = part
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::contract(format!("bad initializer entry '{x}'")))
                })
                .collect::<Result<_>>()?;
            ensure(v.len() == n, || {
                format!(
                    "initializer '{part}' has {} entries, expected n = {n}",
                    v.len()
                )
            })?;
            Ok(DVector::from_vec(v))
        })
        .collect()
}

fn em_options(em: &EmArgs) -> Result<ConvergenceOptions> {
    ensure(em.tol > 0.0, || "--tol must be positive".into())?;
    ensure(em.max_iter >= 1, || "--max-iter must be positive".into())?;
    Ok(ConvergenceOptions {
        tol: em.tol,
        max_iter: em.max_iter,
    })
}

fn check_dims(n: usize, m: usize) -> Result<()> {
    ensure(n >= 1 && m >= 1, || "n and m must be positive".into())?;
    ensure(m <= n, || "m must not exceed n".into())
}

struct Meta(Vec<(String, String)>);

impl Meta {
    fn new(command: &str) -> Self {
        Meta(vec![("command".into(), command.into())])
    }

    fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.push((key.into(), value.to_string()));
        self
    }

    fn mean(&mut self, args: &MeanArgs) -> &mut Self {
        match &args.mu_file {
            Some(p) => self.push("mu_file", p.display()),
            None => self.push("mu_spec", &args.mu_spec),
        }
    }

    fn em(&mut self, args: &EmArgs) -> &mut Self {
        self.push("tol", format_sig9(args.tol))
            .push("max_iter", args.max_iter)
            .push("test_scale", TestScale::from(args.test_scale).as_str())
    }

    fn common(&mut self, c: &Common) -> &mut Self {
        self.push("seed", c.seed);
        if let Some(t) = c.threads {
            self.push("threads", t);
        }
        self
    }
}

fn recover(a: RecoverArgs) -> Result<()> {
    configure_threads(&a.common)?;
    let n = a.n;
    let m = a.m.unwrap_or((n / 2).max(1));
    check_dims(n, m)?;
    let k = a.k.unwrap_or(m);
    ensure(k >= 1 && k <= n, || format!("k = {k} must lie in 1..={n}"))?;
    ensure(a.sigma > 0.0, || "sigma must be positive".into())?;
    ensure(a.alpha > 0.0 && a.alpha < 1.0, || {
        "alpha must lie in (0, 1)".into()
    })?;
    let mu = parse_mean(&a.mean, n)?;
    let conv = em_options(&a.em)?;
    let seed = a.common.seed;

    let phi = generate_sensing_matrix(n, m, derive_seed(seed, &[EXP_RECOVER, STREAM_PHI]))?;
    let x = sample_signal(
        &mu,
        a.sigma,
        derive_seed(seed, &[EXP_RECOVER, STREAM_EM_DRAW]),
    )?;
    let y = phi.measure(&x)?;

    let mut meta = Meta::new("recover");
    let mode = match a.mode {
        ModeArg::Conventional => "conventional",
        ModeArg::Naive => "naive",
        ModeArg::New => "new",
    };
    meta.push("mode", mode)
        .push("n", n)
        .push("m", m)
        .push("k", k)
        .push("sigma", format_sig9(a.sigma))
        .push("alpha", format_sig9(a.alpha));
    meta.mean(&a.mean).em(&a.em).common(&a.common);

    let (estimate, support, residual, residual_type) = match a.mode {
        ModeArg::Conventional => {
            let lambda = a.lambda.unwrap_or_else(|| default_lambda(a.sigma, n));
            meta.push("lambda", format_sig9(lambda));
            let sol = recover_conventional(&phi, &y, lambda, None, &L1Options::default())?;
            meta.push("iterations", sol.iterations)
                .push("converged", sol.converged)
                .push("kkt_residual", format_sig9(sol.kkt_residual));
            let support: Vec<usize> = (0..n).filter(|&i| sol.x_hat[i] != 0.0).collect();
            let r = (x.values() - &sol.x_hat).norm();
            (sol.x_hat, support, r, "x")
        }
        ModeArg::Naive => {
            let opts = NaiveOptions {
                convergence: conv,
                m_step: MStep::TopK,
            };
            let res = naive_em(&phi, &y, a.sigma, k, &DVector::zeros(n), &opts)?;
            em_meta(&mut meta, &res);
            let support: Vec<usize> = (0..n).filter(|&i| res.estimate[i] != 0.0).collect();
            let r = (mu.values() - &res.estimate).norm();
            (res.estimate, support, r, "mu")
        }
        ModeArg::New => {
            let opts = PipelineOptions {
                convergence: conv,
                test_scale: a.em.test_scale.into(),
            };
            let res = recover_new_approach(&phi, &y, a.sigma, a.alpha, &opts)?;
            em_meta(&mut meta, &res);
            let support = res
                .support_used
                .as_ref()
                .map(|s| s.indices().to_vec())
                .unwrap_or_default();
            let r = (mu.values() - &res.estimate).norm();
            (res.estimate, support, r, "mu")
        }
    };
    let support_str: Vec<String> = support.iter().map(|i| (i + 1).to_string()).collect();
    meta.push("support", support_str.join(";"))
        .push("residual_type", residual_type)
        .push("residual", format_sig9(residual))
        .push("index_base", 1);

    write_file(&a.out, |w| {
        for (k, v) in &meta.0 {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "index,mu,x,estimate,in_support")?;
        for i in 0..n {
            writeln!(
                w,
                "{},{},{},{},{}",
                i + 1,
                format_sig9(mu.values()[i]),
                format_sig9(x.values()[i]),
                format_sig9(estimate[i]),
                support.binary_search(&i).is_ok()
            )?;
        }
        Ok(())
    })
}

fn em_meta(meta: &mut Meta, res: &EmResult) {
    meta.push("iterations", res.iterations)
        .push("converged", res.converged);
    if !res.warnings.is_empty() {
        meta.push("warnings", format!("{:?}", res.warnings));
    }
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>,
) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

fn compare(a: CompareArgs) -> Result<()> {
    configure_threads(&a.common)?;
    let n = a.n;
    let m = a.m.unwrap_or((n / 2).max(1));
    check_dims(n, m)?;
    let methods = a
        .methods
        .split(',')
        .map(Method::parse)
        .collect::<Result<Vec<_>>>()?;
    let mut config = ExperimentConfig::new(n)?;
    config.m = m;
    config.k = a.k.unwrap_or(m);
    config.mu = parse_mean(&a.mean, n)?;
    config.sigma_grid = parse_grid(&a.sigma_grid)?;
    config.outer_reps = a.outer_reps;
    config.inner_reps = a.inner_reps;
    config.alpha = a.alpha;
    config.lambda = a.lambda;
    config.seed = a.common.seed;
    config.methods = methods;
    config.test_scale = a.em.test_scale.into();
    config.supplementary = a.supplementary;
    config.em = em_options(&a.em)?;
    config.validate()?;

    let rows = run_comparison(&config)?;

    let mut meta = Meta::new("compare");
    meta.push("n", n)
        .push("m", m)
        .push("k", config.k)
        .push("sigma_grid", &a.sigma_grid)
        .push("outer_reps", a.outer_reps)
        .push("inner_reps", a.inner_reps)
        .push("alpha", format_sig9(a.alpha))
        .push(
            "lambda",
            a.lambda
                .map(format_sig9)
                .unwrap_or_else(|| "sigma*sqrt(2 ln n)".into()),
        )
        .push("methods", &a.methods)
        .push("supplementary", a.supplementary);
    meta.mean(&a.mean).em(&a.em).common(&a.common);
    sim::write_comparison_csv(&rows, &meta.0, &a.out)?;
    if let Some(plot) = &a.plot {
        let opts = PlotOptions {
            title: Some(format!("n = {n}, m = {m}")),
            ..Default::default()
        };
        emit_plot(&rows, PlotAxis::Sigma, &opts, plot)?;
    }
    Ok(())
}

fn init_study(a: InitStudyArgs) -> Result<()> {
    configure_threads(&a.common)?;
    check_dims(a.n, a.m)?;
    ensure(a.sigma > 0.0, || "sigma must be positive".into())?;
    let mu = parse_mean(&a.mean, a.n)?;
    let conv = em_options(&a.em)?;
    let seed = a.common.seed;
    let phi = generate_sensing_matrix(a.n, a.m, derive_seed(seed, &[EXP_INIT_STUDY, STREAM_PHI]))?;

    let mut inits: Vec<(String, DVector<f64>)> = parse_vector_list(&a.inits, a.n)?
        .into_iter()
        .map(|v| (init_label(&v), v))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        seed,
        &[EXP_INIT_STUDY, STREAM_CONVENTIONAL_DRAW + 1],
    ));
    for i in 0..a.random_inits {
        let v = DVector::from_fn(a.n, |_, _| rng.gen_range(10.0..70.0));
        inits.push((format!("random-{}", i + 1), v));
    }
    if !inits
        .iter()
        .any(|(_, v)| v.iter().all(|&x| x == NEAR_ZERO_INIT))
    {
        inits.insert(
            0,
            (
                "near-zero".into(),
                DVector::from_element(a.n, NEAR_ZERO_INIT),
            ),
        );
    }
    let rows = run_init_study(&phi, &mu, a.sigma, &inits, seed, &conv)?;

    let mut meta = Meta::new("init-study");
    meta.push("n", a.n)
        .push("m", a.m)
        .push("sigma", format_sig9(a.sigma))
        .push("inits", &a.inits)
        .push("random_inits", a.random_inits);
    meta.mean(&a.mean).em(&a.em).common(&a.common);
    sim::write_init_study_csv(&rows, seed, &meta.0, &a.out)
}

fn init_label(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|x| format_sig9(*x)).collect();
    format!("({})", parts.join(" "))
}

fn m_sweep(a: MSweepArgs) -> Result<()> {
    configure_threads(&a.common)?;
    let m_grid = parse_m_grid(&a.m_grid)?;
    let mut config = MSweepConfig::new(a.n, a.sigma, m_grid)?;
    config.reps = a.reps;
    config.alpha = a.alpha;
    config.mu = parse_mean(&a.mean, a.n)?;
    config.seed = a.common.seed;
    config.test_scale = a.em.test_scale.into();
    config.em = em_options(&a.em)?;
    config.validate()?;

    let rows = run_m_sweep(&config)?;
    let mut meta = Meta::new("m-sweep");
    meta.push("n", a.n)
        .push("sigma", format_sig9(a.sigma))
        .push("m_grid", &a.m_grid)
        .push("reps", a.reps)
        .push("alpha", format_sig9(a.alpha));
    meta.mean(&a.mean).em(&a.em).common(&a.common);
    sim::write_m_sweep_csv(&rows, &meta.0, &a.out)?;
    if let Some(plot) = &a.plot {
        let opts = PlotOptions {
            title: Some(format!("n = {}, σ = {}", a.n, format_sig9(a.sigma))),
            ..Default::default()
        };
        emit_plot(&rows, PlotAxis::M, &opts, plot)?;
    }
    Ok(())
}

fn rip(a: RipArgs) -> Result<()> {
    configure_threads(&a.common)?;
    check_dims(a.n, a.m)?;
    let seed = a.common.seed;
    let phi = generate_sensing_matrix(a.n, a.m, derive_seed(seed, &[EXP_RIP, STREAM_PHI]))?;
    let mode = match a.mode {
        RipModeArg::Brute => RipMode::BruteForce,
        RipModeArg::MonteCarlo => RipMode::MonteCarlo {
            samples: a.samples,
            seed: derive_seed(seed, &[EXP_RIP, STREAM_EM_DRAW]),
        },
    };
    let est = rip_constant_estimate(phi.phi(), a.k, mode)?;
    let mut meta = Meta::new("rip");
    meta.push("n", a.n).push("m", a.m).push("k", a.k).push(
        "mode",
        match a.mode {
            RipModeArg::Brute => "brute",
            RipModeArg::MonteCarlo => "monte-carlo",
        },
    );
    if let RipModeArg::MonteCarlo = a.mode {
        meta.push("samples", a.samples);
    }
    meta.common(&a.common);

    let mut text = String::new();
    for (k, v) in &meta.0 {
        text.push_str(&format!("# {k}={v}\n"));
    }
    text.push_str("k,delta,supports_checked,distinct_supports,total_supports,lower_bound\n");
    text.push_str(&format!(
        "{},{},{},{},{},{}\n",
        a.k,
        format_sig9(est.delta),
        est.supports_checked,
        est.distinct_supports,
        est.total_supports,
        est.lower_bound
    ));
    match &a.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_grammar() {
        let g = parse_grid("0.1:1.0:0.1").unwrap();
        assert_eq!(g.len(), 10);
        assert_eq!(g[2], 0.3);
        assert_eq!(g[9], 1.0);
        assert_eq!(parse_grid("0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_grid("1,2.5").unwrap(), vec![1.0, 2.5]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a,b").is_err());
        assert_eq!(parse_m_grid("100:500:200").unwrap(), vec![100, 300, 500]);
        assert!(parse_m_grid("1.5").is_err());
    }

    #[test]
    fn mean_spec_grammar() {
        let args = MeanArgs {
            mu_spec: "first4=5".into(),
            mu_file: None,
        };
        let mu = parse_mean(&args, 10).unwrap();
        assert_eq!(mu.support(), &[0, 1, 2, 3]);
        assert_eq!(mu.values()[0], 5.0);
        let bad = MeanArgs {
            mu_spec: "last4=5".into(),
            mu_file: None,
        };
        assert!(parse_mean(&bad, 10).is_err());
    }
}
