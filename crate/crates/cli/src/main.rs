use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use polarsim_cli::{
    format_report, germany, load_scenario, simulate, staircase, sweep, thresholds, verify, CliError, RunSummary,
};
use polarsim_core::verify::VerifyOptions;

#[derive(Parser)]
#[command(
    name = "polarsim",
    version,
    about = "Radicalisation dynamics: scenarios, sweeps and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write trajectories plus a summary.
    Simulate(ScenarioArgs),
    /// Evaluate equilibria or Phi over a parameter grid.
    Sweep(ScenarioArgs),
    /// Run a shock sequence and write the per-shock table.
    Staircase(ScenarioArgs),
    /// Run the randomised property suites; exit 1 on any failure.
    Verify {
        /// Optional scenario whose [verify] table sets defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Base draw count per suite.
        #[arg(long)]
        samples: Option<usize>,
        /// Ten times the default draw counts.
        #[arg(long)]
        full: bool,
    },
    /// Write the Bundestag proxy rows and calibrated floors.
    Germany {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print Perron root, critical shocks and window bounds as JSON.
    Thresholds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn report_files(summary: &RunSummary, out: &Path) {
    for f in &summary.files {
        println!("wrote {} ({} rows)", out.join(&f.path).display(), f.rows);
    }
    println!("wrote {}", out.join(format!("{}_summary.json", summary.name)).display());
    for d in summary.diagnostics.iter().filter(|d| !d.pass) {
        println!("{}", format_report(d));
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => report_files(&simulate(&load_scenario(&a.config)?, &a.out)?, &a.out),
        Command::Sweep(a) => report_files(&sweep(&load_scenario(&a.config)?, &a.out)?, &a.out),
        Command::Staircase(a) => report_files(&staircase(&load_scenario(&a.config)?, &a.out)?, &a.out),
        Command::Verify {
            config,
            out,
            seed,
            samples,
            full,
        } => {
            let mut opts = VerifyOptions::default();
            if let Some(path) = config {
                let v = load_scenario(&path)?.verify;
                opts.seed = v.seed.unwrap_or(opts.seed);
                opts.draws = v.draws.or(opts.draws);
                opts.scale = v.scale.unwrap_or(opts.scale);
            }
            opts.seed = seed.unwrap_or(opts.seed);
            opts.draws = samples.or(opts.draws);
            if full {
                opts.scale = 10;
            }
            let outcome = verify(opts, out.as_deref())?;
            for r in &outcome.reports {
                println!("{}", format_report(r));
            }
            let failed = outcome.reports.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                return Err(CliError::VerificationFailed(failed));
            }
        }
        Command::Germany { out } => {
            let r = germany(&out)?;
            for row in &r.rows {
                println!(
                    "{}  V={:.4} C={:.4} A={:.4}  sum={:.4}",
                    row.year,
                    row.v,
                    row.c,
                    row.a,
                    row.total()
                );
            }
            println!(
                "floors C={:.4}, {:.4}  radical={:.4}, {:.4}  k*={:?}",
                r.floors[0], r.floors[1], r.radical_floors[0], r.radical_floors[1], r.k_star
            );
        }
        Command::Thresholds { config, out } => {
            let list = thresholds(&load_scenario(&config)?, out.as_deref())?;
            let text = serde_json::to_string_pretty(&list).map_err(|e| CliError::Json(e.to_string()))?;
            println!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
