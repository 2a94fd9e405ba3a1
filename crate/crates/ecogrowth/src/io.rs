//! Run-artifact serialization: CSV snapshots, convergence logs, raster
//! heatmaps, checksummed write tracking, and the output-directory lock.
//!
//! Every artifact write goes through an [`OutputTracker`], which records the
//! file name and SHA-256 of the bytes so the manifest can list exactly what
//! the run produced. Numeric CSV cells use 17 significant digits, enough to
//! reproduce any `f64` bitwise on re-parse.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Formats a value with 17 significant digits, the shortest width that
/// round-trips every `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Records every artifact written during a run, keyed by file name, with
/// the checksum of the exact bytes on disk.
#[derive(Debug, Default)]
pub struct OutputTracker {
    entries: Vec<(String, String)>,
}

impl OutputTracker {
    /// Empty tracker.
    pub fn new() -> Self {
        OutputTracker::default()
    }

    /// Writes `bytes` to `path` and records the file name and checksum.
    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.entries.push((name, sha256_hex(bytes)));
        Ok(())
    }

    /// File name and checksum of every write, in write order.
    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}

/// Writes one nodal field as CSV: header `x,y,value`, one row per node in
/// row-major node order.
pub fn export_snapshot(
    tracker: &mut OutputTracker,
    grid: &Grid<f64>,
    field: &Field<f64>,
    path: &Path,
) -> Result<()> {
    grid.check_field(field)?;
    let mut out = String::with_capacity(40 * grid.num_nodes());
    out.push_str("x,y,value\n");
    for i in 0..grid.num_nodes() {
        let [x, y] = grid.node_position(i);
        let _ = writeln!(
            out,
            "{},{},{}",
            format_value(x),
            format_value(y),
            format_value(field[i])
        );
    }
    tracker.write(path, out.as_bytes())
}

/// Reads a snapshot CSV back as node positions and values, in file order.
pub fn import_snapshot(path: &Path) -> Result<(Vec<[f64; 2]>, Vec<f64>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "x,y,value")) => {}
        _ => {
            return Err(Error::Config(format!(
                "{}: missing 'x,y,value' header",
                path.display()
            )))
        }
    }
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        let mut cell = |what: &str| -> Result<f64> {
            cells
                .next()
                .ok_or_else(|| {
                    Error::Config(format!(
                        "{}: line {}: missing {what} column",
                        path.display(),
                        idx + 1
                    ))
                })?
                .parse()
                .map_err(|_| {
                    Error::Config(format!(
                        "{}: line {}: unparsable {what}",
                        path.display(),
                        idx + 1
                    ))
                })
        };
        let x = cell("x")?;
        let y = cell("y")?;
        let v = cell("value")?;
        coords.push([x, y]);
        values.push(v);
    }
    Ok((coords, values))
}

/// Renders a field as a 16-bit grayscale binary image, one `pixel_block`
/// square of pixels per node, higher values brighter, plus a sidecar text
/// file recording the linear scale. A constant field renders uniformly.
///
/// Image rows run top to bottom, so the last node row appears first.
pub fn render_heatmap(
    tracker: &mut OutputTracker,
    grid: &Grid<f64>,
    field: &Field<f64>,
    path: &Path,
    pixel_block: usize,
) -> Result<()> {
    grid.check_field(field)?;
    if pixel_block == 0 {
        return Err(Error::InvalidParams("pixel block must be positive".into()));
    }
    let (nnx, nny) = (grid.nx() + 1, grid.ny() + 1);
    let width = nnx * pixel_block;
    let height = nny * pixel_block;
    let lo = field.min_value();
    let hi = field.max_value();
    let span = hi - lo;
    let mut bytes = Vec::with_capacity(32 + 2 * width * height);
    bytes.extend_from_slice(format!("P5\n{width} {height}\n65535\n").as_bytes());
    for row in 0..height {
        let iy = nny - 1 - row / pixel_block;
        for col in 0..width {
            let ix = col / pixel_block;
            let v = field[iy * nnx + ix];
            let level = if span > 0.0 {
                (((v - lo) / span) * 65535.0).round().clamp(0.0, 65535.0) as u16
            } else {
                0
            };
            bytes.extend_from_slice(&level.to_be_bytes());
        }
    }
    tracker.write(path, &bytes)?;
    let sidecar = path.with_extension("scale.txt");
    let meta = format!(
        "min = {}\nmax = {}\ncolormap = linear grayscale, 16-bit\n",
        format_value(lo),
        format_value(hi)
    );
    tracker.write(&sidecar, meta.as_bytes())
}

/// Writes the per-iteration objective record as CSV with columns
/// `iter,I_total,t1,t2,t3,t4,eta0,improvement`. Row 0 describes the initial
/// controls, so its last two cells are empty; later rows carry the chosen
/// line-search weight and the objective increment.
pub fn write_convergence_log(
    tracker: &mut OutputTracker,
    history: &[crate::objective::ObjectiveBreakdown<f64>],
    etas: &[f64],
    path: &Path,
) -> Result<()> {
    if history.is_empty() || etas.len() + 1 != history.len() {
        return Err(Error::ShapeMismatch(format!(
            "log needs one eta per update: {} objectives, {} etas",
            history.len(),
            etas.len()
        )));
    }
    let mut out = String::new();
    out.push_str("iter,I_total,t1,t2,t3,t4,eta0,improvement\n");
    for (i, b) in history.iter().enumerate() {
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            i,
            format_value(b.total),
            format_value(b.t1_consumption),
            format_value(b.t2_pollution),
            format_value(b.t3_taxation),
            format_value(b.t4_abatement)
        );
        if i == 0 {
            out.push_str(",,\n");
        } else {
            let _ = writeln!(
                out,
                ",{},{}",
                format_value(etas[i - 1]),
                format_value(b.total - history[i - 1].total)
            );
        }
    }
    tracker.write(path, out.as_bytes())
}

/// Exclusive claim on an output directory, held through a `.run.lock` file
/// created atomically and removed on drop.
#[derive(Debug)]
pub struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    /// Claims `dir`; fails with [`Error::Locked`] if another run holds it.
    pub fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(".run.lock");
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(LockGuard { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(Error::Locked(path))
            }
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
