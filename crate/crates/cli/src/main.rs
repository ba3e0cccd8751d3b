use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use hodge_experiments::config::{Experiment, Format, RunConfig};
use hodge_experiments::experiments::run;

const EXIT_CONFIG: u8 = 2;
const EXIT_GAP: u8 = 3;
const EXIT_ASSERT: u8 = 4;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Generate,
    Exp1,
    Exp2,
    Exp3,
    Exp4,
    Exp5,
}

/// Hodge zero-mode curvature, transport and holonomy experiments on
/// time-evolving point clouds.
#[derive(Debug, Parser)]
#[command(name = "hodge-transport", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Flat `key = value` file overriding the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the grid sweeps; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,
    /// Exit with status 4 when an acceptance check fails.
    #[arg(long)]
    assert: bool,
    /// Also render SVG heatmaps.
    #[arg(long)]
    svg: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let experiment = match cli.command {
        Command::Generate => Experiment::Generate,
        Command::Exp1 => Experiment::Exp1,
        Command::Exp2 => Experiment::Exp2,
        Command::Exp3 => Experiment::Exp3,
        Command::Exp4 => Experiment::Exp4,
        Command::Exp5 => Experiment::Exp5,
    };
    let text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG);
            }
        },
        None => String::new(),
    };
    let mut cfg = match RunConfig::parse(experiment, &text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    if cli.svg && !cfg.wants(Format::Svg) {
        cfg.formats.push(Format::Svg);
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }

    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return if e.is_config() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::FAILURE
            };
        }
    };
    match outcome.write(&cfg.out, &cfg) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", cfg.out.join(f).display());
            }
        }
        Err(e) => {
            eprintln!("error: writing to {}: {e}", cfg.out.display());
            return ExitCode::FAILURE;
        }
    }
    for c in &outcome.checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if outcome.gap_failure_fraction > 0.5 {
        eprintln!(
            "error: gap failure on {:.0}% of the grid",
            100.0 * outcome.gap_failure_fraction
        );
        return ExitCode::from(EXIT_GAP);
    }
    if cli.assert && !outcome.all_passed() {
        return ExitCode::from(EXIT_ASSERT);
    }
    ExitCode::SUCCESS
}
