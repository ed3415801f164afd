//! `arrival`: run the face-detector engines from a config file, compare
//! them on one scenario, or drive a refinement ladder. See the presets
//! for worked configurations.

mod compare;
mod config;
mod converge;
mod emit;
mod legs;
mod run;

use std::fmt;
use std::path::{Path, PathBuf};

use arrival_core::record::RunFlags;
use arrival_core::{AccountingError, EngineError, FieldError, OracleError};
use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Validity(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Validity(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical error: {m}"),
            Failure::Validity(m) => write!(f, "validity failure: {m}"),
            Failure::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        Failure::Numerical(e.to_string())
    }
}
impl From<AccountingError> for Failure {
    fn from(e: AccountingError) -> Self {
        Failure::Numerical(e.to_string())
    }
}
impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        Failure::Numerical(e.to_string())
    }
}
impl From<FieldError> for Failure {
    fn from(e: FieldError) -> Self {
        Failure::Numerical(e.to_string())
    }
}

pub fn flag_list(f: &RunFlags) -> String {
    let mut out = Vec::new();
    if f.far_wall_contaminated {
        out.push("far-wall contamination");
    }
    if f.budget_exceeded {
        out.push("budget exceeded");
    }
    if f.truncated {
        out.push("run truncated before the interior drained");
    }
    if f.resolution_warning {
        out.push("resolution warning");
    }
    out.join(", ")
}

const PRESETS: &[(&str, &str, &str)] = &[
    (
        "gaussian-right",
        include_str!("../presets/gaussian-right.cfg"),
        "right-moving packet, fully absorbed; run, compare and ladder sections",
    ),
    (
        "backflow",
        include_str!("../presets/backflow.cfg"),
        "two-momentum packet whose face flux turns negative in a window",
    ),
    (
        "walled",
        include_str!("../presets/walled.cfg"),
        "sealed box, the face stays a plain wall and nothing arrives",
    ),
    (
        "screen-2d",
        include_str!("../presets/screen-2d.cfg"),
        "beam onto a two-dimensional screen, periodic transverse direction",
    ),
];

fn load_config_text(spec: &str) -> Result<String, Failure> {
    let p = Path::new(spec);
    if p.is_file() {
        return std::fs::read_to_string(p).map_err(|e| Failure::Io(format!("{spec}: {e}")));
    }
    if let Some((_, text, _)) = PRESETS.iter().find(|(name, _, _)| *name == spec) {
        return Ok(text.to_string());
    }
    Err(Failure::Config(format!(
        "`{spec}` is neither a config file nor a preset (see `arrival presets`)"
    )))
}

#[derive(Parser)]
#[command(
    name = "arrival",
    version,
    about = "Arrival-time statistics for wave packets hitting an absorbing surface"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
pub struct JobArgs {
    /// Config file path, or the name of a built-in preset.
    #[arg(long)]
    pub config: String,
    /// Directory for output artifacts.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for independent sub-runs (0 = all cores).
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Suppress progress output.
    #[arg(long)]
    pub quiet: bool,
    /// Exit nonzero when a run raises any validity flag.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve one engine and write record/arrival artifacts.
    Run(JobArgs),
    /// Run several engines on one scenario and diff their cumulative curves.
    Compare(JobArgs),
    /// Run the configured grid-refinement ladder and fit the order.
    Convergence(JobArgs),
    /// List the built-in preset configurations.
    Presets,
}

fn with_pool<T>(jobs: usize, f: impl FnOnce() -> Result<T, Failure> + Send) -> Result<T, Failure>
where
    T: Send,
{
    if jobs == 1 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Io(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Presets => {
            for (name, _, blurb) in PRESETS {
                println!("{name:<16} {blurb}");
            }
            Ok(())
        }
        Cmd::Run(args) => {
            let cfg = config::parse_config(&load_config_text(&args.config)?)?;
            with_pool(args.jobs, || run::cmd_run(&cfg, &args))
        }
        Cmd::Compare(args) => {
            let cfg = config::parse_config(&load_config_text(&args.config)?)?;
            with_pool(args.jobs, || compare::cmd_compare(&cfg, &args))
        }
        Cmd::Convergence(args) => {
            let cfg = config::parse_config(&load_config_text(&args.config)?)?;
            with_pool(args.jobs, || converge::cmd_convergence(&cfg, &args))
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(f) = dispatch(cli) {
        eprintln!("{f}");
        std::process::exit(f.code());
    }
}
