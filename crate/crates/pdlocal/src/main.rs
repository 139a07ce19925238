use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pdlocal::config::ExperimentConfig;
use pdlocal::emit::{self, Format};
use pdlocal::{files, grid, verify};
use pdlocal_core::rate;

#[derive(Parser)]
#[command(name = "pdlocal", version, about = "Primal-dual local-update methods for distributed optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the grid described by a TOML config.
    Run {
        config: PathBuf,
        /// Overrides `output.csv`.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Overrides `output.json`.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Run cells one at a time.
        #[arg(long)]
        sequential: bool,
    },
    /// Run the dual-analysis lemma suite and print a pass/fail table.
    Verify,
    /// Fit geometric rates to every record in a CSV or JSON record file.
    Rate {
        records: PathBuf,
        #[arg(long, default_value_t = rate::DEFAULT_BURN_IN)]
        burn_in: f64,
    },
    /// Write a configured problem to a JSON problem file.
    ExportProblem {
        config: PathBuf,
        out: PathBuf,
        /// Which `[[problem]]` block.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
}

fn run(config: PathBuf, csv: Option<PathBuf>, json: Option<PathBuf>, sequential: bool) -> pdlocal::Result<bool> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if sequential {
        cfg.run.parallel = false;
    }
    let out = grid::run_experiment(&cfg)?;
    for s in &out.summaries {
        let gap = s.mean_final_gap.map_or("-".to_string(), |g| format!("{g:.3e}"));
        println!("{:<40} completed {:>3}  failed {:>3}  mean final gap {gap}", s.algorithm, s.completed, s.failed);
    }
    for f in &out.failures {
        eprintln!("cell {} seed {} failed: {}", f.key.algorithm, f.key.seed, f.error);
    }
    if let Some(path) = csv.or_else(|| cfg.output.csv.as_ref().map(|p| cfg.resolve_path(p))) {
        emit::emit_metrics(&out.records, Format::Csv, &path)?;
    }
    if let Some(path) = json.or_else(|| cfg.output.json.as_ref().map(|p| cfg.resolve_path(p))) {
        emit::emit_metrics(&out.records, Format::Json, &path)?;
    }
    Ok(out.all_completed())
}

fn rate_cmd(path: PathBuf, burn_in: f64) -> pdlocal::Result<bool> {
    let mut ok = true;
    for r in emit::load_records(&path)? {
        match rate::fit_geometric_rate_with(&r.gap_series(), burn_in) {
            Ok(fit) => println!("{} seed {}: rate {:.6} r2 {:.4} ({} points)", r.algorithm, r.master_seed, fit.rate, fit.r_squared, fit.points),
            Err(e) => {
                ok = false;
                println!("{} seed {}: {e}", r.algorithm, r.master_seed);
            }
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, csv, json, sequential } => run(config, csv, json, sequential),
        Command::Verify => {
            let checks = verify::lemma_suite();
            print!("{}", verify::render(&checks));
            Ok(checks.iter().all(|c| c.passed))
        }
        Command::Rate { records, burn_in } => rate_cmd(records, burn_in),
        Command::ExportProblem { config, out, index } => (|| {
            let cfg = ExperimentConfig::load(&config)?;
            let pc = cfg.problem.get(index).ok_or_else(|| pdlocal::Error::Config {
                field: format!("problem[{index}]"),
                reason: "no such block".into(),
            })?;
            files::save_problem(&grid::build_problem(&cfg, index, pc)?, &out)?;
            Ok(true)
        })(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
