//! Scenario presets, text configuration, and end-to-end run orchestration.
//!
//! A [`ScenarioConfig`] bundles everything one run needs: model
//! coefficients, grid, control region, optimizer knobs, and output options.
//! Four presets cover the benchmark setups (no control, small disk, large
//! disk, whole domain); a small key-value file format can override any part
//! of them. [`run_scenario`] takes a validated config through the full
//! pipeline: lock the output directory, assemble the system, optimize,
//! export snapshots and images, and leave behind a manifest describing the
//! run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::dynamics::{ControlSet, System, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Rect};
use crate::io::{
    export_snapshot, render_heatmap, write_convergence_log, LockGuard, OutputTracker,
};
use crate::model::{ModelParams, RegionMask, RegionShape};
use crate::objective::{optimize, OptimizationResult, OptimizerConfig};

/// Relative slack when checking that a snapshot time sits on a time level.
const SNAPSHOT_TIME_TOL: f64 = 1e-9;

/// Complete description of one solver run.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    /// Which benchmark scenario this run derives from (0..=3).
    pub case_id: u8,
    /// Model coefficients.
    pub params: ModelParams<f64>,
    /// Elements along x.
    pub nx: usize,
    /// Elements along y.
    pub ny: usize,
    /// Spatial domain.
    pub bounds: Rect<f64>,
    /// Control-region shape.
    pub region: RegionShape<f64>,
    /// Ascent-loop knobs.
    pub optimizer: OptimizerConfig<f64>,
    /// Directory all artifacts go to.
    pub out_dir: PathBuf,
    /// Times at which fields are exported; each must be a multiple of dt.
    pub snapshots: Vec<f64>,
    /// Whether to render grayscale heatmaps next to the CSV snapshots.
    pub images: bool,
    /// Pixels per node along each axis in rendered images.
    pub pixel_block: usize,
}

impl ScenarioConfig {
    /// Benchmark setup for one of the four scenarios.
    ///
    /// All presets share the same coefficients, a 64x64 grid on the
    /// standard domain, and snapshots at t = 0, T/2, T; they differ in the
    /// control region. Case 0 applies no control at all, case 1 controls a
    /// small disk around (0.5, 0.5), case 2 a large disk around the origin,
    /// case 3 the whole domain.
    pub fn preset(case_id: u8) -> Result<Self> {
        let region = match case_id {
            0 => RegionShape::Empty,
            1 => RegionShape::Disk {
                center: [0.5, 0.5],
                radius: 0.25,
            },
            2 => RegionShape::Disk {
                center: [0.0, 0.0],
                radius: 0.75,
            },
            3 => RegionShape::Whole,
            _ => {
                return Err(Error::Config(format!(
                    "unknown case {case_id}; the presets are 0, 1, 2, 3"
                )))
            }
        };
        let params = ModelParams::default();
        let horizon = params.horizon;
        let mut config = ScenarioConfig {
            case_id,
            params,
            nx: 64,
            ny: 64,
            bounds: Rect::standard(),
            region,
            optimizer: OptimizerConfig::default(),
            out_dir: PathBuf::from(format!("out/case{case_id}")),
            snapshots: vec![0.0, horizon / 2.0, horizon],
            images: true,
            pixel_block: 4,
        };
        config.finalize();
        Ok(config)
    }

    /// Applies the cross-field rules that overrides may have disturbed.
    ///
    /// Case 0 means "no control", so it always runs with zero updates no
    /// matter what the optimizer settings say.
    pub fn finalize(&mut self) {
        if self.case_id == 0 {
            self.optimizer.max_iter = 0;
        }
    }

    /// Checks every invariant a run depends on.
    pub fn validate(&self) -> Result<()> {
        if self.case_id > 3 {
            return Err(Error::Config(format!(
                "unknown case {}; the presets are 0, 1, 2, 3",
                self.case_id
            )));
        }
        self.params.validate()?;
        self.optimizer.validate()?;
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Config(format!(
                "grid must have elements in both directions, got {}x{}",
                self.nx, self.ny
            )));
        }
        if self.pixel_block == 0 {
            return Err(Error::Config("output.pixel_block must be positive".into()));
        }
        if self.case_id == 0 && self.optimizer.max_iter != 0 {
            return Err(Error::Config(
                "case 0 runs without control updates; optimizer.max_iter must be 0".into(),
            ));
        }
        let horizon = self.params.horizon;
        let dt = self.params.dt;
        for &t in &self.snapshots {
            if !t.is_finite() || t < 0.0 || t > horizon * (1.0 + SNAPSHOT_TIME_TOL) {
                return Err(Error::Config(format!(
                    "snapshot time {t} lies outside [0, {horizon}]"
                )));
            }
            let ratio = t / dt;
            if (ratio - ratio.round()).abs() > SNAPSHOT_TIME_TOL * ratio.abs().max(1.0) {
                return Err(Error::Config(format!(
                    "snapshot time {t} is not a multiple of dt = {dt}"
                )));
            }
        }
        Ok(())
    }

    /// The resolved configuration as `(key, value)` pairs in schema order.
    ///
    /// The keys match the configuration-file schema, so the echo in a run
    /// manifest doubles as a reusable config.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        let p = &self.params;
        push("case", self.case_id.to_string());
        push("params.d1", format!("{}", p.d1));
        push("params.d2", format!("{}", p.d2));
        push("params.delta1", format!("{}", p.delta1));
        push("params.delta2", format!("{}", p.delta2));
        push("params.tech", format!("{}", p.tech));
        push("params.theta", format!("{}", p.theta));
        push("params.alpha1", format!("{}", p.alpha1));
        push("params.alpha2", format!("{}", p.alpha2));
        push("params.gamma", format!("{}", p.gamma));
        push("params.chi", format!("{}", p.chi));
        push("params.phi", format!("{}", p.phi));
        push("params.saving", format!("{}", p.saving));
        push("params.abatement_cap", format!("{}", p.abatement_cap));
        push("params.beta0", format!("{}", p.beta0));
        push("params.beta1", format!("{}", p.beta1));
        push("params.beta2", format!("{}", p.beta2));
        push("params.horizon", format!("{}", p.horizon));
        push("params.dt", format!("{}", p.dt));
        push("grid.nx", self.nx.to_string());
        push("grid.ny", self.ny.to_string());
        push("grid.xmin", format!("{}", self.bounds.xmin));
        push("grid.xmax", format!("{}", self.bounds.xmax));
        push("grid.ymin", format!("{}", self.bounds.ymin));
        push("grid.ymax", format!("{}", self.bounds.ymax));
        match self.region {
            RegionShape::Empty => push("region.shape", "none".into()),
            RegionShape::Whole => push("region.shape", "whole".into()),
            RegionShape::Disk { center, radius } => {
                push("region.shape", "disk".into());
                push("region.center_x", format!("{}", center[0]));
                push("region.center_y", format!("{}", center[1]));
                push("region.radius", format!("{}", radius));
            }
        }
        push("optimizer.eps0", format!("{}", self.optimizer.eps0));
        push(
            "optimizer.eta_samples",
            self.optimizer.eta_samples.to_string(),
        );
        push("optimizer.tol", format!("{}", self.optimizer.tol));
        push("optimizer.max_iter", self.optimizer.max_iter.to_string());
        push("output.dir", self.out_dir.display().to_string());
        let times: Vec<String> = self.snapshots.iter().map(|t| format!("{t}")).collect();
        push("output.snapshots", times.join(","));
        push("output.images", self.images.to_string());
        push("output.pixel_block", self.pixel_block.to_string());
        out
    }
}

/// Initial capital and pollution distributions of the benchmark runs.
///
/// Capital starts as a narrow Gaussian bump of height 0.1 centered at
/// (0.5, 0.5); pollution starts as `exp(x + y)`, lowest in the southwest
/// corner and highest in the northeast.
pub fn initial_fields(grid: &Grid<f64>) -> (Field<f64>, Field<f64>) {
    let k0 = grid.field_from_fn(|x: f64, y: f64| {
        0.1 * (-((x - 0.5).powi(2) + (y - 0.5).powi(2)) / 0.1).exp()
    });
    let p0 = grid.field_from_fn(|x: f64, y: f64| (x + y).exp());
    (k0, p0)
}

/// Starting controls for the ascent loop.
///
/// With updates enabled, consumption and tax each take half the consumable
/// share `1 - s` and abatement takes half its cap, placing the start in the
/// interior of the feasible set. A pure simulation (`max_iter == 0`) starts
/// from zero controls instead, so nothing perturbs the uncontrolled dynamics.
pub fn initial_controls(
    grid: &Grid<f64>,
    mask: &RegionMask,
    params: &ModelParams<f64>,
    max_iter: usize,
) -> Result<ControlSet<f64>> {
    let steps = params.num_steps();
    let (c, tau, xi) = if max_iter == 0 {
        (
            Trajectory::zeros(grid, steps, params.dt),
            Trajectory::zeros(grid, steps, params.dt),
            Trajectory::zeros(grid, steps, params.dt),
        )
    } else {
        let half_share = params.consumable() / 2.0;
        let half_cap = params.abatement_cap / 2.0;
        (
            Trajectory::constant(grid, steps, params.dt, half_share),
            Trajectory::constant(grid, steps, params.dt, half_share),
            Trajectory::constant(grid, steps, params.dt, half_cap),
        )
    };
    ControlSet::new(c, tau, xi, mask.clone(), params)
}

/// One `key = value` line with its 1-based line number.
type ConfigEntry = (usize, String, String);

fn read_entries(path: &Path) -> Result<Vec<ConfigEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(Error::Config(format!(
                "expected 'key = value' at line {line}, got '{stripped}'"
            )));
        };
        entries.push((line, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| {
        Error::Config(format!(
            "key '{key}' needs a number, got '{value}' (line {line})"
        ))
    })
}

fn parse_flag(key: &str, value: &str, line: usize) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!(
            "key '{key}' needs true or false, got '{value}' (line {line})"
        ))),
    }
}

fn parse_times(key: &str, value: &str, line: usize) -> Result<Vec<f64>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|piece| parse_num(key, piece.trim(), line))
        .collect()
}

/// Disk fields mentioned in a config, merged into a shape once all lines
/// are read so the keys may appear in any order.
#[derive(Default)]
struct RegionPatch {
    shape: Option<String>,
    shape_line: usize,
    center_x: Option<f64>,
    center_y: Option<f64>,
    radius: Option<f64>,
}

impl RegionPatch {
    fn is_empty(&self) -> bool {
        self.shape.is_none()
            && self.center_x.is_none()
            && self.center_y.is_none()
            && self.radius.is_none()
    }

    fn apply(&self, base: RegionShape<f64>) -> Result<RegionShape<f64>> {
        if self.is_empty() {
            return Ok(base);
        }
        let (base_center, base_radius) = match base {
            RegionShape::Disk { center, radius } => (center, radius),
            _ => ([0.0, 0.0], 0.5),
        };
        let shape = match self.shape.as_deref() {
            None => match base {
                RegionShape::Disk { .. } => "disk",
                RegionShape::Empty => "none",
                RegionShape::Whole => "whole",
            },
            Some("none") => "none",
            Some("disk") => "disk",
            Some("whole") => "whole",
            Some(other) => {
                return Err(Error::Config(format!(
                    "key 'region.shape' must be none, disk, or whole, got '{other}' (line {})",
                    self.shape_line
                )))
            }
        };
        if shape != "disk" {
            if self.center_x.is_some() || self.center_y.is_some() || self.radius.is_some() {
                return Err(Error::Config(format!(
                    "region.center_x, region.center_y, and region.radius apply only to \
                     region.shape = disk, not '{shape}'"
                )));
            }
            return Ok(match shape {
                "none" => RegionShape::Empty,
                _ => RegionShape::Whole,
            });
        }
        Ok(RegionShape::Disk {
            center: [
                self.center_x.unwrap_or(base_center[0]),
                self.center_y.unwrap_or(base_center[1]),
            ],
            radius: self.radius.unwrap_or(base_radius),
        })
    }
}

/// Loads a configuration file over a preset base.
///
/// The file holds `key = value` lines; `#` starts a comment and blank lines
/// are skipped. A `case` key picks the preset the other keys patch, and it
/// wins over `fallback_case` (normally the `--case` flag); the returned
/// warnings record such a conflict for the manifest. Unknown keys and
/// invariant violations are reported with the key name and line number.
pub fn parse_config(
    path: &Path,
    fallback_case: Option<u8>,
) -> Result<(ScenarioConfig, Vec<String>)> {
    let entries = read_entries(path)?;
    let mut config_case = None;
    for (line, key, value) in &entries {
        if key == "case" {
            config_case = Some(parse_num::<u8>(key, value, *line)?);
        }
    }
    let mut warnings = Vec::new();
    if let (Some(from_file), Some(from_flag)) = (config_case, fallback_case) {
        if from_file != from_flag {
            warnings.push(format!(
                "config file sets case {from_file}, overriding --case {from_flag}"
            ));
        }
    }
    let base_case = config_case.or(fallback_case).unwrap_or(0);
    let mut config = ScenarioConfig::preset(base_case)?;
    let mut region = RegionPatch::default();
    for (line, key, value) in &entries {
        let line = *line;
        let p = &mut config.params;
        match key.as_str() {
            "case" => {}
            "params.d1" => p.d1 = parse_num(key, value, line)?,
            "params.d2" => p.d2 = parse_num(key, value, line)?,
            "params.delta1" => p.delta1 = parse_num(key, value, line)?,
            "params.delta2" => p.delta2 = parse_num(key, value, line)?,
            "params.tech" => p.tech = parse_num(key, value, line)?,
            "params.theta" => p.theta = parse_num(key, value, line)?,
            "params.alpha1" => p.alpha1 = parse_num(key, value, line)?,
            "params.alpha2" => p.alpha2 = parse_num(key, value, line)?,
            "params.gamma" => p.gamma = parse_num(key, value, line)?,
            "params.chi" => p.chi = parse_num(key, value, line)?,
            "params.phi" => p.phi = parse_num(key, value, line)?,
            "params.saving" => p.saving = parse_num(key, value, line)?,
            "params.abatement_cap" => p.abatement_cap = parse_num(key, value, line)?,
            "params.beta0" => p.beta0 = parse_num(key, value, line)?,
            "params.beta1" => p.beta1 = parse_num(key, value, line)?,
            "params.beta2" => p.beta2 = parse_num(key, value, line)?,
            "params.horizon" => p.horizon = parse_num(key, value, line)?,
            "params.dt" => p.dt = parse_num(key, value, line)?,
            "grid.nx" => config.nx = parse_num(key, value, line)?,
            "grid.ny" => config.ny = parse_num(key, value, line)?,
            "grid.xmin" => config.bounds.xmin = parse_num(key, value, line)?,
            "grid.xmax" => config.bounds.xmax = parse_num(key, value, line)?,
            "grid.ymin" => config.bounds.ymin = parse_num(key, value, line)?,
            "grid.ymax" => config.bounds.ymax = parse_num(key, value, line)?,
            "region.shape" => {
                region.shape = Some(value.clone());
                region.shape_line = line;
            }
            "region.center_x" => region.center_x = Some(parse_num(key, value, line)?),
            "region.center_y" => region.center_y = Some(parse_num(key, value, line)?),
            "region.radius" => region.radius = Some(parse_num(key, value, line)?),
            "optimizer.eps0" => config.optimizer.eps0 = parse_num(key, value, line)?,
            "optimizer.eta_samples" => {
                config.optimizer.eta_samples = parse_num(key, value, line)?
            }
            "optimizer.tol" => config.optimizer.tol = parse_num(key, value, line)?,
            "optimizer.max_iter" => config.optimizer.max_iter = parse_num(key, value, line)?,
            "output.dir" => config.out_dir = PathBuf::from(value),
            "output.snapshots" => config.snapshots = parse_times(key, value, line)?,
            "output.images" => config.images = parse_flag(key, value, line)?,
            "output.pixel_block" => config.pixel_block = parse_num(key, value, line)?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown key '{key}' at line {line}"
                )))
            }
        }
    }
    config.region = region.apply(config.region)?;
    config.finalize();
    config.validate()?;
    Ok((config, warnings))
}

/// What a finished run left behind.
#[derive(Debug)]
pub struct RunOutcome {
    /// Full optimizer output.
    pub result: OptimizationResult<f64>,
    /// Directory the artifacts were written to.
    pub out_dir: PathBuf,
    /// Name and checksum of every tracked file, in write order.
    pub files: Vec<(String, String)>,
    /// Wall-clock time of the solve-and-export pipeline.
    pub duration_seconds: f64,
}

/// Runs one scenario end to end and writes all artifacts.
///
/// The output directory is claimed with a `.run.lock` file for the duration
/// of the run. Snapshots of capital and pollution are always exported at
/// the configured times; the three controls are exported too when the run
/// actually optimizes. The manifest is written last so its inventory covers
/// every other file.
pub fn run_scenario(config: &ScenarioConfig, warnings: &[String]) -> Result<RunOutcome> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let _lock = LockGuard::acquire(&config.out_dir)?;
    let started = Instant::now();

    let grid = Grid::new(config.nx, config.ny, config.bounds)?;
    let mask = RegionMask::build(&grid, &config.region);
    let system = System::with_constant_kernel(grid, config.params, mask)?;
    let (k0, p0) = initial_fields(system.grid());
    let initial = initial_controls(
        system.grid(),
        system.mask(),
        system.params(),
        config.optimizer.max_iter,
    )?;
    let result = optimize(&system, &k0, &p0, initial, &config.optimizer)?;

    let mut tracker = OutputTracker::new();
    let dt = config.params.dt;
    let with_controls = config.optimizer.max_iter > 0;
    for &t in &config.snapshots {
        let level = (t / dt).round() as usize;
        let mut fields: Vec<(&str, &Field<f64>)> = vec![
            ("k", result.state.k.level(level)),
            ("p", result.state.p.level(level)),
        ];
        if with_controls {
            fields.push(("c", result.controls.c().level(level)));
            fields.push(("tau", result.controls.tau().level(level)));
            fields.push(("xi", result.controls.xi().level(level)));
        }
        for (name, field) in fields {
            let stem = format!("{name}_t{t:.6}");
            let csv = config.out_dir.join(format!("{stem}.csv"));
            export_snapshot(&mut tracker, system.grid(), field, &csv)?;
            if config.images {
                let pgm = config.out_dir.join(format!("{stem}.pgm"));
                render_heatmap(&mut tracker, system.grid(), field, &pgm, config.pixel_block)?;
            }
        }
    }
    let history: Vec<_> = result.objective_history.clone();
    let etas: Vec<f64> = result.eta_history.clone();
    write_convergence_log(
        &mut tracker,
        &history,
        &etas,
        &config.out_dir.join("convergence.csv"),
    )?;

    let duration_seconds = started.elapsed().as_secs_f64();
    let manifest = build_manifest(config, warnings, &system, &result, duration_seconds, &tracker);
    let manifest_path = config.out_dir.join("manifest.txt");
    fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))?;

    Ok(RunOutcome {
        result,
        out_dir: config.out_dir.clone(),
        files: tracker.entries().to_vec(),
        duration_seconds,
    })
}

/// Renders the manifest text: config echo, run summary, warnings, and the
/// checksummed file inventory. The manifest itself is deliberately absent
/// from the inventory, and it is the one artifact that differs between
/// otherwise identical runs (it records wall-clock time).
fn build_manifest(
    config: &ScenarioConfig,
    warnings: &[String],
    system: &System<f64>,
    result: &OptimizationResult<f64>,
    duration_seconds: f64,
    tracker: &OutputTracker,
) -> String {
    let mut text = String::from("# run manifest\n");
    for (key, value) in config.echo() {
        let _ = writeln!(text, "config.{key} = {value}");
    }
    let nodes = system.grid().num_nodes();
    let _ = writeln!(text, "nodes = {nodes}");
    let _ = writeln!(text, "unknowns_per_step = {}", 2 * nodes);
    let _ = writeln!(text, "time_steps = {}", config.params.num_steps());
    let first = result.objective_history.first().expect("nonempty history");
    let last = result.objective_history.last().expect("nonempty history");
    let _ = writeln!(text, "start.I_total = {}", first.total);
    let _ = writeln!(text, "start.t1 = {}", first.t1_consumption);
    let _ = writeln!(text, "start.t2 = {}", first.t2_pollution);
    let _ = writeln!(text, "start.t3 = {}", first.t3_taxation);
    let _ = writeln!(text, "start.t4 = {}", first.t4_abatement);
    let _ = writeln!(text, "end.I_total = {}", last.total);
    let _ = writeln!(text, "end.t1 = {}", last.t1_consumption);
    let _ = writeln!(text, "end.t2 = {}", last.t2_pollution);
    let _ = writeln!(text, "end.t3 = {}", last.t3_taxation);
    let _ = writeln!(text, "end.t4 = {}", last.t4_abatement);
    let _ = writeln!(text, "best.I_total = {}", result.best_objective.total);
    let _ = writeln!(text, "updates = {}", result.eta_history.len());
    let _ = writeln!(text, "stop_reason = {}", result.stop_reason);
    let _ = writeln!(text, "duration_seconds = {duration_seconds:.3}");
    for warning in warnings {
        let _ = writeln!(text, "warning = {warning}");
    }
    for (name, checksum) in tracker.entries() {
        let _ = writeln!(text, "inventory.{name} = {checksum}");
    }
    text
}
