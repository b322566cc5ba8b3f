use std::path::PathBuf;

use clap::{Parser, Subcommand};
use entrolab::cat::{bundled_corpus, load_fixtures, run_cat, CatOptions};
use entrolab::config::{Format, Overrides, RunConfig};
use entrolab::corpus::NamedSystem;
use entrolab::verify::{default_corpus, verify, VerifyReport, DEFAULT_VERIFY_GRID, DEFAULT_VERIFY_HORIZON};
use entrolab::{config, estimate, report, to_json, write_file, CliError};
use entrolab_core::solver::{SolveMode, DEFAULT_NODE_BUDGET};
use entrolab_core::systems::build_system;

/// Size of the bundled preorder corpus used by `cat` without fixtures.
const BUNDLED_PREORDERS: usize = 1200;

#[derive(Parser)]
#[command(name = "entrolab", version, about = "Finite-scale topological entropy estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Debug, Default)]
struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// KIND or KIND:key=value,...
    #[arg(long)]
    system: Option<String>,
    #[arg(long = "eps-grid", value_name = "A,B,C")]
    eps_grid: Option<String>,
    #[arg(long = "n-max")]
    n_max: Option<usize>,
    #[arg(long)]
    mode: Option<SolveMode>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            system: self.system.clone(),
            eps_grid: self.eps_grid.clone(),
            n_max: self.n_max,
            mode: self.mode,
            budget: self.budget,
            out: self.out.clone(),
            format: self.format,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the configured methods over the grain grid.
    Estimate(RunArgs),
    /// Run the invariant suites on the configured system or the default corpus.
    Verify(RunArgs),
    /// Run the order-kernel suites on fixtures or the bundled corpus.
    Cat {
        /// Directory of `*.json` fixtures.
        fixtures: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn sweep artifacts into one tidy CSV.
    Report {
        /// Artifact files or estimate output directories.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match configure_threads().and_then(|()| run(cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("ENTROLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("ENTROLAB_THREADS = {raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Estimate(a) => {
            let cfg = RunConfig::load(a.config.as_deref(), &a.overrides())?;
            let out = estimate::estimate(&cfg)?;
            estimate::write_artifacts(&cfg, &out)?;
            for line in estimate::summary_lines(&out.summary) {
                println!("{line}");
            }
            Ok(())
        }
        Command::Verify(a) => {
            let report = run_verify(&a)?;
            let text = to_json(&report);
            if let Some(dir) = &a.out {
                write_file(&dir.join("verify.json"), &text)?;
            }
            print!("{text}");
            match report.first_failing() {
                None => Ok(()),
                Some(s) => Err(CliError::Failed(format!(
                    "invariant {} failed on {} of {} instances; first counterexample: {}",
                    s.name,
                    s.instances - s.passed,
                    s.instances,
                    s.first_failure.as_ref().map_or("null".into(), |v| v.to_string())
                ))),
            }
        }
        Command::Cat { fixtures, seed, out } => {
            let opts = CatOptions {
                seed: seed.unwrap_or(CatOptions::default().seed),
                ..CatOptions::default()
            };
            let (preorders, maps) = match &fixtures {
                Some(dir) => load_fixtures(dir)?,
                None => (bundled_corpus(BUNDLED_PREORDERS, opts.seed), Vec::new()),
            };
            let report = run_cat(&preorders, &maps, opts)?;
            let text = to_json(&report);
            if let Some(dir) = &out {
                write_file(&dir.join("cat.json"), &text)?;
            }
            print!("{text}");
            match report.first_failing() {
                None => Ok(()),
                Some(s) => Err(CliError::Failed(format!(
                    "{} found a counterexample: {}",
                    s.name,
                    s.first_failure.as_ref().map_or("null".into(), |v| v.to_string())
                ))),
            }
        }
        Command::Report { inputs, out } => {
            let table = report::report(&inputs)?;
            match out {
                Some(p) => write_file(&p, &table),
                None => {
                    print!("{table}");
                    Ok(())
                }
            }
        }
    }
}

/// A configured system is checked alone, with the configured grid, horizon
/// and budget; otherwise the default corpus with verification defaults.
fn run_verify(a: &RunArgs) -> Result<VerifyReport, CliError> {
    if a.config.is_some() || a.system.is_some() {
        let cfg = RunConfig::load(a.config.as_deref(), &a.overrides())?;
        let s = build_system(&cfg.system)?;
        let system = NamedSystem {
            name: serde_json::to_string(&cfg.system).expect("spec serializes"),
            space: s.space,
            map: s.map,
        };
        return verify(&[system], &cfg.eps_grid, cfg.n_max, cfg.solver.budget);
    }
    let grid = match &a.eps_grid {
        Some(g) => config::parse_grid(g)?,
        None => DEFAULT_VERIFY_GRID.to_vec(),
    };
    let n_max = a.n_max.unwrap_or(DEFAULT_VERIFY_HORIZON);
    verify(&default_corpus(), &grid, n_max, a.budget.unwrap_or(DEFAULT_NODE_BUDGET))
}
