//! The `cusp-extend` command line: argument model, dispatch and JSON reports.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

mod commands;
pub mod config;
pub mod json;

pub use config::parse_config;

pub const SCHEMA_VERSION: u32 = 1;
pub const THREADS_ENV: &str = "CUSP_EXTEND_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser, Serialize)]
#[command(name = "cusp-extend", version, about = "Cusp reflections, extension bounds and Neumann eigenvalue estimates")]
pub struct Cli {
    /// Worker threads (default: available parallelism; CUSP_EXTEND_THREADS overrides).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Evaluate or classify maps.
    #[command(subcommand)]
    Maps(MapsCommand),
    /// Distortion integrals.
    #[command(subcommand)]
    Distortion(DistortionCommand),
    /// Admissible α = q/p interval for a cusp, pick or ridge.
    AlphaRange(AlphaRangeArgs),
    /// Extension operator checks.
    #[command(subcommand)]
    Extend(ExtendCommand),
    /// Neumann (p,q)-eigenvalues.
    #[command(subcommand)]
    Eigen(EigenCommand),
    /// Reproduce the displayed quantities of one worked example.
    PaperReproduce(ReproduceArgs),
    /// Run a key = value config file.
    Run(RunArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapsCommand {
    /// Jet of a map at one point.
    Eval(MapsEvalArgs),
    /// p-quasiconformality of a radial map.
    Classify(MapsClassifyArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct Output {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MapsEvalArgs {
    #[arg(long)]
    pub map: String,
    #[arg(long)]
    pub point: String,
    /// Also report the p-dilatation.
    #[arg(long)]
    pub p: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct MapsClassifyArgs {
    /// A radial map, e.g. `radial:alphas=0.5,1.5`.
    #[arg(long)]
    pub map: String,
    #[arg(long)]
    pub p: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistortionCommand {
    /// K_{p,q} with grid refinement.
    Kpq(KpqArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct KpqArgs {
    #[arg(long)]
    pub map: String,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value = "N=128,beta=2")]
    pub grid: String,
    #[arg(long, default_value_t = 5)]
    pub max_doublings: usize,
    /// Exit with status 3 unless the refinement series converges.
    #[arg(long)]
    pub require_convergence: bool,
    /// Write the refinement series as `N,estimate` CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct AlphaRangeArgs {
    /// Cusp, pick or ridge domain; overrides --gamma-tilde/--gamma/--n.
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub gamma_tilde: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long)]
    pub p: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtendCommand {
    /// Check ‖∇Ef‖_q ≤ ‖E‖·‖∇f‖_p for a function manifest.
    Verify(ExtendVerifyArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ExtendVerifyArgs {
    #[arg(long)]
    pub domain: String,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    /// TOML manifest of `[[function]]` tables (default: the bundled battery).
    #[arg(long)]
    pub functions: Option<PathBuf>,
    #[arg(long, default_value = "N=128,beta=2")]
    pub grid: String,
    /// Use central differences with this step instead of analytic gradients.
    #[arg(long)]
    pub fd_step: Option<f64>,
    /// Exit with status 3 unless every check passes.
    #[arg(long)]
    pub require_pass: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenCommand {
    /// Minimize the (p,q) Rayleigh quotient.
    Min(EigenMinArgs),
    /// Lower bound for the cusp eigenvalue from a ball eigenvalue.
    Bound(EigenBoundArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct Descent {
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct EigenMinArgs {
    #[arg(long)]
    pub domain: String,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value = "N=64,beta=1")]
    pub grid: String,
    #[command(flatten)]
    pub descent: Descent,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct EigenBoundArgs {
    #[arg(long)]
    pub domain: String,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub alpha: f64,
    /// Norm exponent of the ball eigenvalue μ_{αp,r}.
    #[arg(long, default_value_t = 2.0)]
    pub r: f64,
    /// Ball eigenvalue; computed on the disc when omitted.
    #[arg(long)]
    pub mu_ball: Option<f64>,
    #[arg(long, default_value = "N=64,beta=1")]
    pub grid: String,
    #[command(flatten)]
    pub descent: Descent,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Section {
    #[value(name = "2.3-2d", alias = "2.3", alias = "cusp-2d")]
    Cusp2d,
    #[value(name = "2.3-picks", alias = "picks")]
    Picks,
    #[value(name = "2.3-ridges", alias = "ridges")]
    Ridges,
    #[value(name = "4-eigen", alias = "4", alias = "eigen")]
    Eigen,
}

#[derive(Debug, Args, Serialize)]
pub struct ReproduceArgs {
    #[arg(long, value_enum)]
    pub section: Section,
    #[arg(long, default_value_t = 0.5)]
    pub gamma_tilde: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Exponent q (cusp, pick and ridge sections).
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Dimension for picks (default 3) and ridges (default 3).
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// α for the eigenvalue section.
    #[arg(long, default_value_t = 0.55)]
    pub alpha: f64,
    /// Norm exponent r for the eigenvalue section.
    #[arg(long, default_value_t = 2.0)]
    pub r: f64,
    /// Starting grid of the K_{p,q} refinement.
    #[arg(long, default_value = "N=32,beta=2")]
    pub grid: String,
    #[arg(long, default_value = "N=64,beta=1")]
    pub disc_grid: String,
    #[arg(long, default_value = "N=64,beta=2")]
    pub cusp_grid: String,
    #[command(flatten)]
    pub descent: Descent,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Validation(String),
    Numerical(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Validation(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<cusp_extend::Error> for Failure {
    fn from(e: cusp_extend::Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

/// A finished command: results plus the exit status to report them with.
pub(crate) struct Outcome {
    pub results: Value,
    pub status: i32,
    pub message: Option<String>,
}

impl Outcome {
    pub fn ok(results: Value) -> Self {
        Self { results, status: EXIT_OK, message: None }
    }

    pub fn failing(results: Value, why: impl Into<String>) -> Self {
        Self { results, status: EXIT_NUMERICAL, message: Some(why.into()) }
    }
}

/// Assemble a report. Everything except `wall_time` is a function of the config.
pub fn report(command: &str, config: Value, results: Value, wall_time: f64) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "results": results,
        "wall_time": json::num(wall_time),
    })
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    let from_env = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| Failure::Validation(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?,
        ),
        _ => None,
    };
    match from_env.or(flag) {
        Some(0) => Err(Failure::Validation("thread count must be positive".into())),
        Some(n) if n > 4096 => Err(Failure::Validation(format!("thread count {n} is too large"))),
        other => Ok(other),
    }
}

/// Run the CLI on `args` (including the program name) and return the exit status.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                ErrorKind::InvalidValue | ErrorKind::ValueValidation => EXIT_VALIDATION,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    match execute(cli, stdout, 0) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.code()
        }
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write, depth: usize) -> Result<i32, Failure> {
    if let Command::Run(args) = &cli.command {
        if depth > 0 {
            return Err(Failure::Validation("run configs cannot invoke run".into()));
        }
        let text = std::fs::read_to_string(&args.config)
            .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", args.config.display())))?;
        let mut argv = vec!["cusp-extend".to_string()];
        argv.extend(parse_config(&text).map_err(Failure::Validation)?);
        let mut inner = Cli::try_parse_from(argv).map_err(|e| {
            Failure::Validation(format!("config: {}", e.render().to_string().trim_end()))
        })?;
        if inner.threads.is_none() {
            inner.threads = cli.threads;
        }
        return execute(inner, stdout, depth + 1);
    }

    let threads = thread_count(cli.threads)?;
    let command_name = commands::name(&cli.command);
    let config = serde_json::to_value(&cli.command).unwrap_or(Value::Null);
    let output = commands::output_path(&cli.command);
    let start = Instant::now();

    let outcome = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Numerical(format!("thread pool: {e}")))?;
            pool.install(|| commands::dispatch(&cli.command))?
        }
        None => commands::dispatch(&cli.command)?,
    };

    let doc = report(command_name, config, outcome.results, start.elapsed().as_secs_f64());
    let text = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Validation(format!("cannot write {}: {e}", path.display())))?,
        None => stdout.write_all(text.as_bytes()).map_err(|e| Failure::Numerical(e.to_string()))?,
    }
    if let Some(msg) = outcome.message {
        return Err(Failure::Numerical(msg));
    }
    Ok(outcome.status)
}
