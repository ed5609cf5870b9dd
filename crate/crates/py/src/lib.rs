//! Python bindings for the Lucas-Kanade tracker: the image container,
//! tracking box, optimizer configuration, sequence tracking, synthetic
//! video generation and the benchmark runner.

use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lktrack::bench;
use lktrack::hull;
use lktrack::optim;
use lktrack::synthgen;
use lktrack::tracker;

fn to_py_err(e: lktrack::Error) -> PyErr {
    match e {
        lktrack::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Grayscale image with intensities in [0, 1].
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Image {
    inner: lktrack::Image,
}

#[pymethods]
impl Image {
    /// Build from a row-major list of intensities.
    #[new]
    fn new(width: usize, height: usize, values: Vec<f64>) -> PyResult<Self> {
        Ok(Image {
            inner: lktrack::Image::from_vec(width, height, values).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn load_pgm(path: PathBuf) -> PyResult<Self> {
        Ok(Image {
            inner: lktrack::pgm::read_pgm(&path).map_err(to_py_err)?,
        })
    }

    fn save_pgm(&self, path: PathBuf) -> PyResult<()> {
        lktrack::pgm::write_pgm(&self.inner, &path).map_err(to_py_err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn values(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    /// Bilinear interpolation with border clamping.
    fn sample(&self, x: f64, y: f64) -> f64 {
        self.inner.sample_bilinear(x, y)
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.inner.width(), self.inner.height())
    }
}

/// Axis-aligned tracking rectangle (integer frame coordinates).
#[pyclass(from_py_object)]
#[derive(Clone)]
struct TrackBox {
    inner: tracker::TrackBox,
}

#[pymethods]
impl TrackBox {
    #[new]
    fn new(x: i32, y: i32, w: i32, h: i32) -> Self {
        TrackBox {
            inner: tracker::TrackBox::new(x, y, w, h),
        }
    }

    #[getter]
    fn x(&self) -> i32 {
        self.inner.x
    }

    #[getter]
    fn y(&self) -> i32 {
        self.inner.y
    }

    #[getter]
    fn w(&self) -> i32 {
        self.inner.w
    }

    #[getter]
    fn h(&self) -> i32 {
        self.inner.h
    }

    fn center(&self) -> (f64, f64) {
        self.inner.center()
    }

    fn __repr__(&self) -> String {
        format!(
            "TrackBox(x={}, y={}, w={}, h={})",
            self.inner.x, self.inner.y, self.inner.w, self.inner.h
        )
    }
}

/// Step-rule selection: method name plus the constant step size (required
/// for every method except gauss_newton).
#[pyclass(from_py_object)]
#[derive(Clone)]
struct OptimizerSpec {
    inner: optim::OptimizerSpec,
}

#[pymethods]
impl OptimizerSpec {
    #[new]
    #[pyo3(signature = (method, step=None))]
    fn new(method: &str, step: Option<f64>) -> PyResult<Self> {
        let method: optim::Method = method.parse().map_err(to_py_err)?;
        let inner = if method == optim::Method::GaussNewton {
            optim::OptimizerSpec::gauss_newton()
        } else {
            let step = step.ok_or_else(|| {
                PyValueError::new_err(format!("method {method} requires a step size"))
            })?;
            optim::OptimizerSpec::new(method, step).map_err(to_py_err)?
        };
        Ok(OptimizerSpec { inner })
    }

    #[getter]
    fn method(&self) -> String {
        self.inner.method.token().to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "OptimizerSpec(method='{}', step={})",
            self.inner.method.token(),
            self.inner.eta
        )
    }
}

/// Alignment stopping rules around an optimizer.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct TrackConfig {
    inner: tracker::TrackConfig,
}

#[pymethods]
impl TrackConfig {
    #[new]
    #[pyo3(signature = (optimizer, max_iters=50, tol_dp=1e-3))]
    fn new(optimizer: OptimizerSpec, max_iters: u32, tol_dp: f64) -> PyResult<Self> {
        if max_iters < 1 || !(tol_dp > 0.0) {
            return Err(PyValueError::new_err(
                "max_iters must be >= 1 and tol_dp > 0",
            ));
        }
        Ok(TrackConfig {
            inner: tracker::TrackConfig {
                max_iters,
                tol_dp,
                optimizer: optimizer.inner,
            },
        })
    }
}

/// Outcome of aligning one frame.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct FrameResult {
    inner: tracker::FrameResult,
}

#[pymethods]
impl FrameResult {
    #[getter]
    fn bbox(&self) -> TrackBox {
        TrackBox {
            inner: self.inner.bbox,
        }
    }

    /// Subpixel translation the box was rounded from.
    #[getter]
    fn p_refined(&self) -> (f64, f64) {
        (self.inner.p_refined.tx, self.inner.p_refined.ty)
    }

    #[getter]
    fn iterations(&self) -> u32 {
        self.inner.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn degenerate(&self) -> bool {
        self.inner.degenerate
    }

    #[getter]
    fn elapsed_s(&self) -> f64 {
        self.inner.elapsed
    }

    fn __repr__(&self) -> String {
        format!(
            "FrameResult(bbox=({}, {}), p=({:.3}, {:.3}), iterations={}, converged={})",
            self.inner.bbox.x,
            self.inner.bbox.y,
            self.inner.p_refined.tx,
            self.inner.p_refined.ty,
            self.inner.iterations,
            self.inner.converged
        )
    }
}

/// Track a box across consecutive frames (the template is re-cut from each
/// frame). Returns one result per frame after the first.
#[pyfunction]
fn track_sequence(
    frames: Vec<Image>,
    init_box: TrackBox,
    config: TrackConfig,
) -> PyResult<Vec<FrameResult>> {
    let frames: Vec<lktrack::Image> = frames.into_iter().map(|f| f.inner).collect();
    let trajectory = tracker::track_sequence(&frames, &init_box.inner, &config.inner)
        .map_err(to_py_err)?;
    Ok(trajectory
        .frames
        .into_iter()
        .map(|inner| FrameResult { inner })
        .collect())
}

/// Score a tracked sequence against per-frame ground-truth boxes (one more
/// box than results: the first seeded the tracker). Returns a dict with
/// avg_error_px (None if every frame failed), avg_time_s and fail_pct.
#[pyfunction]
#[pyo3(signature = (results, ground_truth, threshold_px=10.0))]
fn evaluate<'py>(
    py: Python<'py>,
    results: Vec<FrameResult>,
    ground_truth: Vec<TrackBox>,
    threshold_px: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let trajectory = tracker::Trajectory {
        frames: results.into_iter().map(|r| r.inner).collect(),
    };
    let gt = synthgen::GroundTruth {
        boxes: ground_truth.into_iter().map(|b| b.inner).collect(),
    };
    let eval = bench::evaluate(&trajectory, &gt, threshold_px).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("avg_error_px", eval.avg_error_px)?;
    out.set_item("avg_time_s", eval.avg_time_s)?;
    out.set_item("fail_pct", eval.fail_pct)?;
    Ok(out)
}

/// Euclidean distance between box centers.
#[pyfunction]
fn box_error(a: TrackBox, b: TrackBox) -> f64 {
    bench::box_error(&a.inner, &b.inner)
}

/// Convex hull (counter-clockwise, lexicographically least vertex first)
/// by monotone chain.
#[pyfunction]
fn monotone_chain(points: Vec<(f64, f64)>) -> PyResult<Vec<(f64, f64)>> {
    let points: Vec<hull::Point> = points
        .iter()
        .map(|&(x, y)| hull::Point::new(x, y))
        .collect();
    let polygon = hull::monotone_chain(&points).map_err(to_py_err)?;
    Ok(polygon.vertices().iter().map(|p| (p.x, p.y)).collect())
}

/// Render one synthetic video in memory: frames plus the ground-truth box
/// per frame. Shapes: circle, rectangle, triangle, hexagram, hull5, hull7,
/// hull9; sizes: 15, 20 or 25.
#[pyfunction]
#[pyo3(signature = (shape, size, frames, seed, noise_density=0.01, frame_size=200))]
fn render_video(
    shape: &str,
    size: u32,
    frames: u32,
    seed: u64,
    noise_density: f64,
    frame_size: usize,
) -> PyResult<(Vec<Image>, Vec<TrackBox>)> {
    let kind: synthgen::ShapeKind = shape.parse().map_err(to_py_err)?;
    let spec = synthgen::SynthSpec {
        frame_width: frame_size,
        frame_height: frame_size,
        noise_density,
        frames_per_video: frames,
        object_sizes: vec![size],
        videos_per_shape: 1,
        seed,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (images, gt) = synthgen::render_video(&spec, kind, size, &mut rng).map_err(to_py_err)?;
    Ok((
        images.into_iter().map(|inner| Image { inner }).collect(),
        gt.boxes
            .into_iter()
            .map(|inner| TrackBox { inner })
            .collect(),
    ))
}

/// Generate a full synthetic suite on disk (`scale` = "desk" or "full").
/// Returns the created video directories.
#[pyfunction]
#[pyo3(signature = (out_dir, seed=42, scale="desk"))]
fn generate_dataset(out_dir: PathBuf, seed: u64, scale: &str) -> PyResult<Vec<String>> {
    let spec = match scale {
        "full" => synthgen::SynthSpec::full(seed),
        "desk" => synthgen::SynthSpec::desk(seed),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown scale '{other}', expected 'desk' or 'full'"
            )))
        }
    };
    let manifests = synthgen::generate_dataset(&spec, &out_dir).map_err(to_py_err)?;
    Ok(manifests
        .into_iter()
        .map(|m| m.dir.display().to_string())
        .collect())
}

/// Run the benchmark grid over a dataset directory. Returns one dict per
/// (method, step) cell; Gauss-Newton has step None.
#[pyfunction]
#[pyo3(signature = (dataset, methods=None, steps=None, workers=1, threshold_px=10.0))]
fn run_benchmark<'py>(
    py: Python<'py>,
    dataset: PathBuf,
    methods: Option<Vec<String>>,
    steps: Option<Vec<f64>>,
    workers: usize,
    threshold_px: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut cfg = bench::SuiteConfig::new(Path::new(&dataset));
    if let Some(names) = methods {
        cfg.methods = names
            .iter()
            .map(|n| n.parse::<optim::Method>())
            .collect::<lktrack::Result<_>>()
            .map_err(to_py_err)?;
    }
    if let Some(steps) = steps {
        cfg.steps = steps;
    }
    cfg.workers = workers;
    cfg.threshold_px = threshold_px;
    let outcome = bench::run_suite(&cfg).map_err(to_py_err)?;
    if !outcome.sequence_errors.is_empty() {
        return Err(PyValueError::new_err(format!(
            "sequence errors: {:?}",
            outcome.sequence_errors
        )));
    }
    outcome
        .rows
        .iter()
        .map(|row| {
            let d = PyDict::new(py);
            d.set_item("method", &row.method)?;
            d.set_item("step", row.step)?;
            d.set_item("avg_error_px", row.avg_error_px)?;
            d.set_item("avg_time_s", row.avg_time_s)?;
            d.set_item("fail_pct", row.fail_pct)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn lktrack_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Image>()?;
    m.add_class::<TrackBox>()?;
    m.add_class::<OptimizerSpec>()?;
    m.add_class::<TrackConfig>()?;
    m.add_class::<FrameResult>()?;
    m.add_function(wrap_pyfunction!(track_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(box_error, m)?)?;
    m.add_function(wrap_pyfunction!(monotone_chain, m)?)?;
    m.add_function(wrap_pyfunction!(render_video, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    Ok(())
}
