use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use kfp_cli::{resolve_out_dir, run, RunConfig, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "kfp", version, about = "Fractional Kramers-Fokker-Planck solver and estimate checker")]
struct Cli {
    /// Output directory (default: $KFP_OUT_DIR, then output.dir, then ./kfp-out)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for random initial data and the lemma family, overriding the config
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Also write SVG charts
    #[arg(long, global = true)]
    plot: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and check the energy and smoothing estimates
    Run { config: PathBuf },
    /// Check the commutator and interpolation inequalities on the test family
    VerifyLemmas { config: PathBuf },
    /// Run every (gamma, s) combination in parallel
    Sweep {
        config: PathBuf,
        /// Weight exponents, comma separated
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true, allow_negative_numbers = true)]
        gamma: Vec<f64>,
        /// Fractional orders in (0, 1], comma separated
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        s: Vec<f64>,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<RunConfig> {
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = seed {
        config.override_seed(seed);
    }
    Ok(config)
}

fn print_summary(report: &kfp_cli::Report) {
    for check in &report.checks {
        println!(
            "{:<32} {:<18} C = {:<12.6e} ratio = {:.4} (threshold {})",
            check.name,
            format!("{:?}", check.verdict),
            check.fitted_constant,
            check.stability_ratio,
            check.threshold
        );
    }
    for s in &report.skipped {
        println!("{:<32} skipped: {}", s.name, s.reason);
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let env = std::env::var(OUT_DIR_ENV).ok();
    match cli.command {
        Command::Run { config } => {
            let config = load(&config, cli.seed)?;
            let dir = resolve_out_dir(cli.out.as_deref(), env.as_deref(), &config);
            let out = run::run(&config)?;
            run::write_run(&out, &dir, cli.plot || config.output.plot)?;
            print_summary(&out.report);
            println!("wrote {}", dir.display());
            Ok(out.report.passed)
        }
        Command::VerifyLemmas { config } => {
            let config = load(&config, cli.seed)?;
            let dir = resolve_out_dir(cli.out.as_deref(), env.as_deref(), &config);
            let report = run::verify_lemmas(&config)?;
            run::write_lemmas(&report, &dir)?;
            print_summary(&report);
            println!("wrote {}", dir.display());
            Ok(report.passed)
        }
        Command::Sweep { config, gamma, s } => {
            let config = load(&config, cli.seed)?;
            let dir = resolve_out_dir(cli.out.as_deref(), env.as_deref(), &config);
            let entries = run::sweep(&config, &gamma, &s, &dir, cli.plot || config.output.plot)?;
            for e in &entries {
                match &e.outcome {
                    Ok(r) => println!("gamma = {:<6} s = {:<6} passed = {}", e.gamma, e.s, r.passed),
                    Err(msg) => println!("gamma = {:<6} s = {:<6} error: {msg}", e.gamma, e.s),
                }
            }
            println!("wrote {}", dir.join("index.csv").display());
            Ok(entries.iter().all(|e| e.passed()))
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
