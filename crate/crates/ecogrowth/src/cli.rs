//! Command-line front end.
//!
//! Flags select a scenario preset and optionally override parts of it; a
//! `--config` file can replace or patch the preset wholesale. The file's
//! `case` key outranks `--case` (recorded as a manifest warning), while
//! every other explicit flag outranks the file.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

use crate::error::Result;
use crate::scenario::{parse_config, run_scenario, RunOutcome, ScenarioConfig};

#[derive(Parser, Debug)]
#[command(
    name = "ecogrowth",
    version,
    about = "Optimal consumption, green-tax, and abatement policies for a spatial capital-pollution system"
)]
struct Args {
    /// Scenario preset: 0 no control, 1 small disk, 2 large disk, 3 whole domain.
    #[arg(long)]
    case: Option<u8>,

    /// Key-value configuration file; its `case` key wins over --case.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (preset default: out/case<N>).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Use an n-by-n element grid.
    #[arg(long)]
    grid: Option<usize>,

    /// Time-step size.
    #[arg(long)]
    dt: Option<f64>,

    /// Maximum number of control updates; 0 just simulates.
    #[arg(long)]
    max_iter: Option<usize>,

    /// Raw ascent step applied before projection.
    #[arg(long)]
    eps0: Option<f64>,

    /// Number of line-search subintervals.
    #[arg(long)]
    eta_samples: Option<usize>,

    /// Stop once an update gains less than this.
    #[arg(long)]
    tol: Option<f64>,

    /// Comma-separated snapshot times.
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<f64>>,

    /// Skip heatmap rendering.
    #[arg(long)]
    no_images: bool,
}

/// Resolves flags and config file into one validated scenario.
fn assemble(args: &Args) -> Result<(ScenarioConfig, Vec<String>)> {
    let (mut config, warnings) = match &args.config {
        Some(path) => parse_config(path, args.case)?,
        None => (ScenarioConfig::preset(args.case.unwrap_or(0))?, Vec::new()),
    };
    if let Some(dir) = &args.out {
        config.out_dir = dir.clone();
    }
    if let Some(n) = args.grid {
        config.nx = n;
        config.ny = n;
    }
    if let Some(dt) = args.dt {
        config.params.dt = dt;
    }
    if let Some(max_iter) = args.max_iter {
        config.optimizer.max_iter = max_iter;
    }
    if let Some(eps0) = args.eps0 {
        config.optimizer.eps0 = eps0;
    }
    if let Some(m) = args.eta_samples {
        config.optimizer.eta_samples = m;
    }
    if let Some(tol) = args.tol {
        config.optimizer.tol = tol;
    }
    if let Some(times) = &args.snapshots {
        config.snapshots = times.clone();
    }
    if args.no_images {
        config.images = false;
    }
    config.finalize();
    config.validate()?;
    Ok((config, warnings))
}

fn summarize(config: &ScenarioConfig, outcome: &RunOutcome) {
    let history = &outcome.result.objective_history;
    let first = history.first().expect("nonempty history");
    let last = history.last().expect("nonempty history");
    println!(
        "case {}: {}x{} grid, {} time steps, {} control update(s)",
        config.case_id,
        config.nx,
        config.ny,
        config.params.num_steps(),
        outcome.result.eta_history.len(),
    );
    println!(
        "objective {} -> {} ({})",
        first.total, last.total, outcome.result.stop_reason
    );
    println!(
        "wrote {} file(s) and a manifest to {} in {:.3}s",
        outcome.files.len(),
        outcome.out_dir.display(),
        outcome.duration_seconds,
    );
}

/// Runs the tool on an argument list (without the program name) and returns
/// the exit code: 0 on success, 1 on a run error, 2 on a usage error.
pub fn run_cli<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("ecogrowth"))
        .chain(args.into_iter().map(Into::into));
    let parsed = match Args::try_parse_from(argv) {
        Ok(parsed) => parsed,
        Err(err) => {
            // clap renders --help/--version through the same path.
            let _ = err.print();
            return if err.use_stderr() { 2 } else { 0 };
        }
    };
    let (config, warnings) = match assemble(&parsed) {
        Ok(resolved) => resolved,
        Err(err) => {
            eprintln!("error: {err}");
            return 2;
        }
    };
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    match run_scenario(&config, &warnings) {
        Ok(outcome) => {
            summarize(&config, &outcome);
            0
        }
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}
