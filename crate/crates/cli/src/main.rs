use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oedcss_cli::config::ExperimentConfig;
use oedcss_cli::record::{header_of, write_rows, Format, Row};
use oedcss_cli::runner::{self, Extras, RunError};

#[derive(Parser)]
#[command(name = "oedcss", version, about = "D-optimal sensor selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Run only this seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// One record per (method, k, seed).
    Select,
    /// Records over a k-range plus a trend summary.
    SweepK,
    /// Methods against uniformly random designs.
    CompareRandom,
    /// Data completion errors and bounds.
    Complete,
    /// Bound chain for each design; fails if a deterministic bound breaks.
    Bounds,
}

fn write<R: Row>(out: &Path, stem: &str, format: Format, rows: &[R]) -> Result<(), RunError> {
    let Some(first) = rows.first() else {
        return Ok(());
    };
    let path = write_rows(out, stem, format, rows, &header_of(first))?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), RunError> {
    let path = cli.config.as_ref().ok_or_else(|| RunError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path).map_err(|e| RunError::Config(e.to_string()))?;
    if let Some(seed) = cli.seed {
        cfg.run.seeds = Some(vec![seed]);
        cfg.run.seed_count = None;
    }
    let (out, fmt) = (cli.out.as_path(), cli.format);
    match cli.command {
        Command::Select => write(out, "select", fmt, &runner::run_select(&cfg, Extras::default())?),
        Command::SweepK => {
            let (records, summary) = runner::run_sweep_k(&cfg)?;
            write(out, "sweep_k", fmt, &records)?;
            write(out, "sweep_summary", fmt, &summary)?;
            runner::check_sweep(&summary)
        }
        Command::CompareRandom => {
            let (records, summary) = runner::run_compare_random(&cfg)?;
            write(out, "compare_random", fmt, &records)?;
            write(out, "random_summary", fmt, &summary)?;
            for s in &summary {
                println!("{} k={} seed={}: beats {}/{} random designs", s.method, s.k, s.seed, s.beaten, s.designs);
            }
            Ok(())
        }
        Command::Complete => write(out, "complete", fmt, &runner::run_complete(&cfg)?),
        Command::Bounds => {
            let records = runner::run_bounds(&cfg)?;
            write(out, "bounds", fmt, &records)?;
            runner::check_bounds(&records)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
