//! Command-line interface: each subcommand reads a JSON config, runs one
//! analysis, prints the report to stdout, and optionally writes it (plus a
//! CSV for scans) under an output directory.
//!
//! Exit codes: 0 on success, 2 when a verification completes and finds the
//! property violated, 1 on input or configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use redyn::scenario::{run_command, Command, Overrides, RunOutcome};

#[derive(Debug, Parser)]
#[command(
    name = "redyn",
    about = "Construct and classify reduced dynamics of open quantum systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Path to the JSON config file for this command.
    #[arg(long)]
    config: PathBuf,

    /// Directory for report files; overrides the config's `output_path`.
    /// Without either, the report is only printed to stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Scales every tolerance threshold uniformly by this factor.
    #[arg(long)]
    tol: Option<f64>,

    /// Number of worker threads (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Classify a superoperator: Hermiticity/trace preservation, sampled
    /// positivity, and complete positivity via the Choi spectrum.
    ClassifyMap(CommonArgs),
    /// Build the assignment map of an initial family and classify it.
    BuildAssignment(CommonArgs),
    /// Test joint unitaries for consistency with an initial family.
    UConsistency(CommonArgs),
    /// Certify that product-family reduced dynamics are completely positive
    /// trace-preserving channels; exits 2 if a counterexample is found.
    VerifyProp1(CommonArgs),
    /// Decompose a product-lift reduced map into its weighted family of
    /// completely positive components.
    CpFamily(CommonArgs),
    /// Scan intermediate maps of a piecewise-constant generator schedule for
    /// complete-positivity violations.
    LindbladScan(CommonArgs),
}

impl CliCommand {
    fn split(&self) -> (Command, &CommonArgs) {
        match self {
            CliCommand::ClassifyMap(a) => (Command::ClassifyMap, a),
            CliCommand::BuildAssignment(a) => (Command::BuildAssignment, a),
            CliCommand::UConsistency(a) => (Command::UConsistency, a),
            CliCommand::VerifyProp1(a) => (Command::VerifyProp1, a),
            CliCommand::CpFamily(a) => (Command::CpFamily, a),
            CliCommand::LindbladScan(a) => (Command::LindbladScan, a),
        }
    }
}

fn write_outputs(outcome: &RunOutcome, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let stem = outcome.command.slug();
    let mut written = Vec::new();
    let json_path = dir.join(format!("{stem}.json"));
    std::fs::write(&json_path, &outcome.report_json)?;
    written.push(json_path);
    if let Some(csv) = &outcome.csv {
        let csv_path = dir.join(format!("{stem}.csv"));
        std::fs::write(&csv_path, csv)?;
        written.push(csv_path);
    }
    Ok(written)
}

fn run(cli: &Cli) -> Result<RunOutcome, String> {
    let (command, args) = cli.command.split();
    if let Some(n) = args.threads {
        // build_global fails if a pool already exists; the run still works
        // with the existing pool, so only a genuinely bad config is fatal
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: thread pool not resized: {e}");
        }
    }
    let config_text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read config {}: {e}", args.config.display()))?;
    let overrides = Overrides {
        seed: args.seed,
        tol_scale: args.tol,
    };
    let outcome = run_command(command, &config_text, &overrides)
        .map_err(|e| format!("{} failed: {e}", command.slug()))?;

    // report assembly and output are single-threaded and ordered
    print!("{}", outcome.report_json);
    let out_dir = args
        .out
        .clone()
        .or_else(|| outcome.output_path.as_ref().map(PathBuf::from));
    if let Some(dir) = out_dir {
        let written =
            write_outputs(&outcome, &dir).map_err(|e| format!("cannot write reports: {e}"))?;
        for p in written {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
