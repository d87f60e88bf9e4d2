mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::PlanArgs;

const PRECEDENCE: &str = "\
Settings are resolved per field, highest priority first: command-line flag, \
environment variable (shown as [env: ...]), the TOML file named by --config or \
MMORF_CONFIG, built-in default. The http backend also reads MMORF_LLM_BASE_URL, \
MMORF_LLM_API_KEY and MMORF_LLM_MODEL, which override the [http] table of the file.

Exit status: 0 on success, 1 when no route was found, 2 on usage or input errors.";

#[derive(Debug, Parser)]
#[command(name = "mmorf", version, about = "Multi-objective retrosynthesis planning with agent guidance", after_help = PRECEDENCE)]
struct Cli {
    /// TOML settings file
    #[arg(long, global = true, env = "MMORF_CONFIG")]
    config: Option<PathBuf>,
    /// Log more to stderr (repeat for more detail)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plan one task and write its result as a JSONL line
    #[command(after_help = PRECEDENCE)]
    Plan {
        /// Task file: one task object, or a manifest (pick with --id)
        #[arg(long, conflicts_with = "product", required_unless_present = "product")]
        task: Option<PathBuf>,
        /// Task id inside a multi-task manifest
        #[arg(long, requires = "task")]
        id: Option<String>,
        /// Plan for a bare product with no constraints instead of a task file
        #[arg(long)]
        product: Option<String>,
        #[arg(long)]
        world: PathBuf,
        /// JSONL destination; the result goes to stdout when omitted and the
        /// readable report moves to stderr
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        settings: PlanArgs,
    },
    /// Run every task in a manifest, then print the summary
    #[command(after_help = PRECEDENCE)]
    Bench {
        #[arg(long, conflicts_with = "scmo", required_unless_present = "scmo")]
        manifest: Option<PathBuf>,
        /// Use the bundled soft-constraint manifest
        #[arg(long)]
        scmo: bool,
        #[arg(long)]
        world: PathBuf,
        /// Results JSONL, one line per task in manifest order
        #[arg(long)]
        out: PathBuf,
        /// Also write the summary JSON here
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Tasks run concurrently
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        jobs: u64,
        #[command(flatten)]
        settings: PlanArgs,
    },
    /// Recompute summaries from result files; with several files, compare
    /// their routes task by task on the Pareto objectives
    Eval {
        #[arg(required = true)]
        results: Vec<PathBuf>,
        #[arg(long)]
        world: PathBuf,
        #[arg(long, env = "MMORF_SMP_PER_OCCURRENCE", num_args = 0..=1, default_missing_value = "true")]
        smp_per_occurrence: Option<bool>,
    },
    /// Enumerate every route up to a depth, with reports
    Oracle {
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        product: String,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
        depth: u64,
        /// Restriction set JSON; only routes it allows are printed
        #[arg(long)]
        restrictions: Option<PathBuf>,
        #[arg(long, env = "MMORF_SMP_PER_OCCURRENCE", num_args = 0..=1, default_missing_value = "true")]
        smp_per_occurrence: Option<bool>,
    },
    /// Value-function expressions
    #[command(subcommand)]
    Vf(VfCommand),
}

#[derive(Debug, Subcommand)]
enum VfCommand {
    /// Print the canonical form of an expression
    Parse { expr: String },
    /// Evaluate an expression on a route, with per-component values
    Eval {
        expr: String,
        /// Route JSON: {"reactions": [...], "frontier": [...]}; a planned
        /// route ({"target", "reactions"}) also works
        #[arg(long)]
        route: PathBuf,
        #[arg(long)]
        world: PathBuf,
    },
}

/// A non-zero exit with a message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn no_route(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level));
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).try_init();
}

fn run_cli(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => config::FileConfig::load(path)?,
        None => config::FileConfig::default(),
    };
    match cli.command {
        Command::Plan { task, id, product, world, out, settings } => {
            let resolved = config::resolve(&settings, &file)?;
            commands::plan(commands::TaskSource { file: task, id, product }, &world, out.as_deref(), resolved)
        }
        Command::Bench { manifest, scmo: _, world, out, summary, jobs, settings } => {
            let resolved = config::resolve(&settings, &file)?;
            commands::bench(manifest.as_deref(), &world, &out, summary.as_deref(), jobs as usize, resolved)
        }
        Command::Eval { results, world, smp_per_occurrence } => {
            let smp = smp_per_occurrence.or(file.smp_per_occurrence).unwrap_or(false);
            commands::eval(&results, &world, smp)
        }
        Command::Oracle { world, product, depth, restrictions, smp_per_occurrence } => {
            let smp = smp_per_occurrence.or(file.smp_per_occurrence).unwrap_or(false);
            commands::oracle(&world, &product, depth as usize, restrictions.as_deref(), smp)
        }
        Command::Vf(VfCommand::Parse { expr }) => commands::vf_parse(&expr),
        Command::Vf(VfCommand::Eval { expr, route, world }) => commands::vf_eval(&expr, &route, &world),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    init_logging(cli.verbose);
    match run_cli(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mmorf: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
