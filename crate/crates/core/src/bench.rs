//! Benchmark harness: per-frame tracking error against ground truth, fail
//! accounting, suite execution over the method/step grid, and CSV reports.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::optim::{Method, OptimizerSpec};
use crate::raster::Image;
use crate::synthgen::GroundTruth;
use crate::tracker::{track_sequence, TrackBox, TrackConfig, Trajectory};

/// Tracking-box error threshold in pixels: frames beyond it count as fails
/// and are excluded from the error average.
pub const FAIL_THRESHOLD_PX: f64 = 10.0;

/// Aggregated quality of one tracked sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    /// Mean center error over the non-fail frames; absent when every frame
    /// failed.
    pub avg_error_px: Option<f64>,
    /// Mean per-frame solver time in seconds.
    pub avg_time_s: f64,
    /// Percentage of frames with error above the threshold.
    pub fail_pct: f64,
}

/// One cell of the report grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: String,
    /// `None` renders as "auto" (Gauss-Newton computes its own step).
    pub step: Option<f64>,
    pub avg_error_px: Option<f64>,
    pub avg_time_s: f64,
    pub fail_pct: f64,
}

/// Suite parameters: where the sequences live and which grid to run.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub dataset_root: PathBuf,
    pub methods: Vec<Method>,
    pub steps: Vec<f64>,
    pub threshold_px: f64,
    pub workers: usize,
}

impl SuiteConfig {
    pub fn new(dataset_root: impl Into<PathBuf>) -> Self {
        SuiteConfig {
            dataset_root: dataset_root.into(),
            methods: Method::ALL.to_vec(),
            steps: crate::optim::STEP_GRID.to_vec(),
            threshold_px: FAIL_THRESHOLD_PX,
            workers: 1,
        }
    }
}

/// Suite results plus everything that went wrong per sequence; failed
/// sequences are reported, never silently dropped.
#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub rows: Vec<BenchRow>,
    /// `(sequence or cell description, error message)` pairs.
    pub sequence_errors: Vec<(String, String)>,
    /// Sequences that loaded and were tracked, in aggregation order.
    pub sequences: Vec<String>,
    /// Frames accounted per grid cell.
    pub frames_per_cell: usize,
}

/// Euclidean distance between box centers.
pub fn box_error(est: &TrackBox, gt: &TrackBox) -> f64 {
    let (ex, ey) = est.center();
    let (gx, gy) = gt.center();
    (ex - gx).hypot(ey - gy)
}

#[derive(Debug, Clone, Copy, Default)]
struct SeqStats {
    frames: usize,
    fails: usize,
    nonfail: usize,
    err_sum: f64,
    time_sum: f64,
}

impl SeqStats {
    fn accumulate(&mut self, other: &SeqStats) {
        self.frames += other.frames;
        self.fails += other.fails;
        self.nonfail += other.nonfail;
        self.err_sum += other.err_sum;
        self.time_sum += other.time_sum;
    }

    fn into_eval(self) -> EvalResult {
        EvalResult {
            avg_error_px: (self.nonfail > 0).then(|| self.err_sum / self.nonfail as f64),
            avg_time_s: if self.frames > 0 {
                self.time_sum / self.frames as f64
            } else {
                0.0
            },
            fail_pct: if self.frames > 0 {
                100.0 * self.fails as f64 / self.frames as f64
            } else {
                0.0
            },
        }
    }
}

fn seq_stats(traj: &Trajectory, gt: &GroundTruth, threshold: f64) -> Result<SeqStats> {
    if gt.boxes.len() != traj.frames.len() + 1 {
        return Err(Error::InvalidArgument(format!(
            "ground truth has {} boxes but the trajectory tracked {} frames (expected {})",
            gt.boxes.len(),
            traj.frames.len(),
            traj.frames.len() + 1
        )));
    }
    let mut stats = SeqStats {
        frames: traj.frames.len(),
        ..SeqStats::default()
    };
    for (fr, gt_box) in traj.frames.iter().zip(gt.boxes.iter().skip(1)) {
        let e = box_error(&fr.bbox, gt_box);
        if e > threshold {
            stats.fails += 1;
        } else {
            stats.nonfail += 1;
            stats.err_sum += e;
        }
        stats.time_sum += fr.elapsed;
    }
    Ok(stats)
}

/// Score a trajectory against ground truth. The ground truth carries one
/// more box than the trajectory: its first entry seeded the tracker.
pub fn evaluate(traj: &Trajectory, gt: &GroundTruth, threshold: f64) -> Result<EvalResult> {
    seq_stats(traj, gt, threshold).map(SeqStats::into_eval)
}

/// Load a sequence directory: `*.pgm` frames in name order plus `gt.csv`.
///
/// Ground-truth boxes of varying size are normalized to the fixed size
/// `round((min + max) / 2)` per axis, re-centered on their original centers.
/// Constant-size ground truth passes through unchanged.
pub fn load_external_sequence(dir: &Path) -> Result<(Vec<Image>, GroundTruth)> {
    let mut frame_paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "pgm"))
        .collect();
    frame_paths.sort();
    if frame_paths.is_empty() {
        return Err(Error::parse(dir.display(), "no .pgm frames found"));
    }
    let frames: Vec<Image> = frame_paths
        .iter()
        .map(|p| crate::pgm::read_pgm(p))
        .collect::<Result<_>>()?;

    let gt_path = dir.join("gt.csv");
    let text = fs::read_to_string(&gt_path).map_err(|e| Error::io(&gt_path, e))?;
    let boxes = parse_gt_csv(&text, &gt_path)?;
    if boxes.len() != frames.len() {
        return Err(Error::parse(
            gt_path.display(),
            format!("{} boxes for {} frames", boxes.len(), frames.len()),
        ));
    }
    Ok((frames, GroundTruth {
        boxes: normalize_boxes(&boxes),
    }))
}

fn parse_gt_csv(text: &str, path: &Path) -> Result<Vec<TrackBox>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "frame,x,y,w,h" => {}
        other => {
            return Err(Error::parse(
                path.display(),
                format!(
                    "bad header {:?}, expected 'frame,x,y,w,h'",
                    other.map(|(_, l)| l).unwrap_or("")
                ),
            ))
        }
    }
    let mut boxes = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::parse(
                path.display(),
                format!("line {}: expected 5 fields, got {}", lineno + 1, fields.len()),
            ));
        }
        let mut nums = [0i32; 5];
        for (slot, field) in nums.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| {
                Error::parse(
                    path.display(),
                    format!("line {}: bad integer '{field}'", lineno + 1),
                )
            })?;
        }
        boxes.push(TrackBox::new(nums[1], nums[2], nums[3], nums[4]));
    }
    Ok(boxes)
}

fn normalize_boxes(boxes: &[TrackBox]) -> Vec<TrackBox> {
    if boxes.is_empty() {
        return Vec::new();
    }
    let half_round = |min: i32, max: i32| -> i32 { ((min + max) as f64 / 2.0).round() as i32 };
    let w = half_round(
        boxes.iter().map(|b| b.w).min().expect("nonempty"),
        boxes.iter().map(|b| b.w).max().expect("nonempty"),
    );
    let h = half_round(
        boxes.iter().map(|b| b.h).min().expect("nonempty"),
        boxes.iter().map(|b| b.h).max().expect("nonempty"),
    );
    boxes
        .iter()
        .map(|b| {
            let (cx, cy) = b.center();
            TrackBox {
                x: (cx - w as f64 / 2.0).round() as i32,
                y: (cy - h as f64 / 2.0).round() as i32,
                w,
                h,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    method: Method,
    step: Option<f64>,
}

fn grid(methods: &[Method], steps: &[f64]) -> Vec<Cell> {
    let mut sorted_steps = steps.to_vec();
    sorted_steps.sort_by(|a, b| a.partial_cmp(b).expect("finite steps"));
    let mut cells = Vec::new();
    for &method in methods {
        if method == Method::GaussNewton {
            cells.push(Cell { method, step: None });
        } else {
            for &step in &sorted_steps {
                cells.push(Cell {
                    method,
                    step: Some(step),
                });
            }
        }
    }
    cells
}

/// Run every (method, step) cell over every sequence under the dataset
/// root. Work items execute on a thread pool of `workers` threads; results
/// are reduced in a fixed order so the report does not depend on scheduling.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let mut seq_dirs: Vec<PathBuf> = fs::read_dir(&cfg.dataset_root)
        .map_err(|e| Error::io(&cfg.dataset_root, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    seq_dirs.sort();
    if seq_dirs.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no sequence directories under {}",
            cfg.dataset_root.display()
        )));
    }

    let mut sequence_errors: Vec<(String, String)> = Vec::new();
    let mut sequences: Vec<(String, Vec<Image>, GroundTruth)> = Vec::new();
    for dir in &seq_dirs {
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        match load_external_sequence(dir) {
            Ok((frames, gt)) => sequences.push((name, frames, gt)),
            Err(e) => sequence_errors.push((name, e.to_string())),
        }
    }
    if sequences.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no loadable sequences under {}",
            cfg.dataset_root.display()
        )));
    }

    let cells = grid(&cfg.methods, &cfg.steps);
    let items: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..sequences.len()).map(move |s| (c, s)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?;

    let results: Vec<std::result::Result<SeqStats, String>> = pool.install(|| {
        items
            .par_iter()
            .map(|&(c, s)| {
                let cell = cells[c];
                let (_, frames, gt) = &sequences[s];
                let spec = match cell.step {
                    Some(step) => OptimizerSpec::new(cell.method, step),
                    None => Ok(OptimizerSpec::gauss_newton()),
                }
                .map_err(|e| e.to_string())?;
                let cfg_track = TrackConfig::new(spec);
                let traj =
                    track_sequence(frames, &gt.boxes[0], &cfg_track).map_err(|e| e.to_string())?;
                seq_stats(&traj, gt, cfg.threshold_px).map_err(|e| e.to_string())
            })
            .collect()
    });

    let mut per_cell = vec![SeqStats::default(); cells.len()];
    for (&(c, s), result) in items.iter().zip(&results) {
        match result {
            Ok(stats) => per_cell[c].accumulate(stats),
            Err(message) => {
                let cell = cells[c];
                sequence_errors.push((
                    format!(
                        "{} [{} step {}]",
                        sequences[s].0,
                        cell.method,
                        cell.step.map_or("auto".into(), |s| s.to_string())
                    ),
                    message.clone(),
                ));
            }
        }
    }

    let frames_per_cell = sequences
        .iter()
        .map(|(_, frames, _)| frames.len() - 1)
        .sum();
    let rows = cells
        .iter()
        .zip(per_cell)
        .map(|(cell, stats)| {
            let eval = stats.into_eval();
            BenchRow {
                method: cell.method.token().to_string(),
                step: cell.step,
                avg_error_px: eval.avg_error_px,
                avg_time_s: eval.avg_time_s,
                fail_pct: eval.fail_pct,
            }
        })
        .collect();

    Ok(SuiteOutcome {
        rows,
        sequence_errors,
        sequences: sequences.into_iter().map(|(name, _, _)| name).collect(),
        frames_per_cell,
    })
}

fn fmt_step(step: Option<f64>) -> String {
    step.map_or_else(|| "auto".to_string(), |s| format!("{s:.6}"))
}

/// Serialize rows as CSV with 6-decimal fixed-point reals; an absent error
/// average becomes an empty field.
pub fn report_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("method,step,avg_error_px,avg_time_s,fail_pct\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6}\n",
            row.method,
            fmt_step(row.step),
            row.avg_error_px
                .map_or(String::new(), |e| format!("{e:.6}")),
            row.avg_time_s,
            row.fail_pct
        ));
    }
    out
}

pub fn emit_report(rows: &[BenchRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no rows to report".into()));
    }
    fs::write(path, report_csv(rows)).map_err(|e| Error::io(path, e))
}

/// Parse a report produced by [`report_csv`] back into rows.
pub fn parse_report(text: &str) -> Result<Vec<BenchRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("method,step,avg_error_px,avg_time_s,fail_pct") => {}
        other => {
            return Err(Error::parse(
                "report",
                format!("bad header {:?}", other.unwrap_or("")),
            ))
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::parse(
                "report",
                format!("line {}: expected 5 fields", lineno + 2),
            ));
        }
        let parse_f64 = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::parse("report", format!("line {}: bad real '{s}'", lineno + 2)))
        };
        rows.push(BenchRow {
            method: fields[0].to_string(),
            step: if fields[1] == "auto" {
                None
            } else {
                Some(parse_f64(fields[1])?)
            },
            avg_error_px: if fields[2].is_empty() {
                None
            } else {
                Some(parse_f64(fields[2])?)
            },
            avg_time_s: parse_f64(fields[3])?,
            fail_pct: parse_f64(fields[4])?,
        });
    }
    Ok(rows)
}

/// Human-readable aligned table for terminal output.
pub fn render_table(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:>10} {:>14} {:>12} {:>10}\n",
        "method", "step", "avg_error_px", "avg_time_s", "fail_pct"
    ));
    for row in rows {
        out.push_str(&format!(
            "{:<14} {:>10} {:>14} {:>12.6} {:>10.3}\n",
            row.method,
            fmt_step(row.step),
            row.avg_error_px
                .map_or("-".to_string(), |e| format!("{e:.6}")),
            row.avg_time_s,
            row.fail_pct
        ));
    }
    out
}
