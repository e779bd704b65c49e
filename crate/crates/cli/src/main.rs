use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use readout_cli::config::parse_override;
use readout_cli::{execute, load, ConfigError, Plan, TOLERANCES};

/// Root for outputs when neither `--output-dir` nor the config names one.
const OUTPUT_ENV: &str = "READOUT_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "readout", version, about = "Run Matsubara readout scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Eigensolver threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Override a named tolerance, e.g. `--tolerance oracle=1e-5`.
    #[arg(long = "tolerance", global = true, value_name = "NAME=VALUE")]
    tolerances: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every task of a scenario.
    Run { config: PathBuf },
    /// Check a scenario without executing it.
    Validate { config: PathBuf },
}

fn output_dir(cli: &Cli, config_path: &Path, configured: Option<&Path>) -> PathBuf {
    if let Some(dir) = &cli.output_dir {
        return dir.clone();
    }
    if let Some(dir) = configured {
        return match config_path.parent() {
            Some(base) if dir.is_relative() => base.join(dir),
            _ => dir.to_path_buf(),
        };
    }
    let root = std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("output"));
    let stem = config_path.file_stem().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("scenario"));
    root.join(stem)
}

fn plan(cli: &Cli, path: &Path) -> anyhow::Result<Plan> {
    let overrides = cli.tolerances.iter().map(|t| parse_override(t)).collect::<anyhow::Result<Vec<_>>>()?;
    Plan::new(load(path)?, &overrides)
}

fn report_error(e: &anyhow::Error) {
    match e.downcast_ref::<ConfigError>() {
        Some(c) => {
            eprintln!("error: invalid scenario");
            for issue in &c.issues {
                eprintln!("  - {issue}");
            }
        }
        None => eprintln!("error: {e:#}"),
    }
}

fn validate(cli: &Cli, path: &Path) -> anyhow::Result<()> {
    let plan = plan(cli, path)?;
    let dimensions = plan.preflight()?;
    let names = |tasks: &[readout_cli::Task]| tasks.iter().map(|t| t.name()).collect::<Vec<_>>().join(", ");
    println!("config: {}", path.display());
    println!("tasks: {}", names(&plan.tasks));
    if plan.inserted.is_empty() {
        println!("auto-inserted: none");
    } else {
        println!("auto-inserted: {}", names(&plan.inserted));
    }
    println!("couplings: {:?}", plan.lambdas);
    if !dimensions.is_empty() {
        println!("oracle dimensions (before refinement): {dimensions:?}");
    }
    for (name, _, about) in TOLERANCES {
        println!("tolerance {name} = {:e}  ({about})", plan.tolerance(name));
    }
    println!("errors: none");
    Ok(())
}

fn run(cli: &Cli, path: &Path) -> anyhow::Result<bool> {
    let plan = plan(cli, path)?;
    let out = output_dir(cli, path, plan.config.output_dir.as_deref());
    let summary = execute(&plan, &out, cli.threads)?;
    for c in &summary.checks {
        println!(
            "{} {}: {:.3e} ({} = {:e}) {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance_name,
            c.tolerance,
            c.detail
        );
    }
    let failed = summary.checks.iter().filter(|c| !c.pass).count();
    println!("{} checks, {failed} failed; outputs in {}", summary.checks.len(), out.display());
    Ok(summary.pass)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => run(&cli, config),
        Command::Validate { config } => validate(&cli, config).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            report_error(&e);
            ExitCode::from(1)
        }
    }
}
