//! Python bindings: configuration, the loss and its gradient, diffusion,
//! colour conversion, evaluation, synthetic data and the full pipeline.

use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use gazeseg::boost::SampleKind;
use gazeseg::gazeprop::AffinityGraph;
use gazeseg::pipeline::{run, write_run, Mode};
use gazeseg::seqdata::output::{list_pngs, read_mask_png};
use gazeseg::seqdata::{load_sequence, parse_gaze_trace};
use gazeseg::synthgen::{generate, generate_observers, write_synth, SynthSpec};

fn py_err(e: gazeseg::Error) -> PyErr {
    match e {
        gazeseg::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "PipelineConfig", from_py_object)]
#[derive(Clone)]
struct PyPipelineConfig {
    inner: gazeseg::pipeline::PipelineConfig,
}

#[pymethods]
impl PyPipelineConfig {
    /// Defaults, optionally overridden by `key = value` settings.
    #[new]
    #[pyo3(signature = (**settings))]
    fn new(settings: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut inner = gazeseg::pipeline::PipelineConfig::default();
        if let Some(d) = settings {
            for (k, v) in d.iter() {
                let key: String = k.extract()?;
                let value = v.str()?.to_string();
                let value = match value.as_str() {
                    "True" => "true".to_string(),
                    "False" => "false".to_string(),
                    _ => value,
                };
                inner.set(&key, &value).map_err(py_err)?;
            }
        }
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let mut inner = gazeseg::pipeline::PipelineConfig::default();
        inner.apply_str(text).map_err(py_err)?;
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    fn to_text(&self) -> String {
        self.inner.to_config_string()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.mode.as_str()
    }

    #[getter]
    fn rounds(&self) -> usize {
        self.inner.rounds
    }

    fn __repr__(&self) -> String {
        format!("PipelineConfig({})", self.inner.to_config_string().trim().replace('\n', ", "))
    }
}

fn kinds(epsilon: &[f64], positive: &[bool]) -> PyResult<Vec<SampleKind>> {
    if epsilon.len() != positive.len() {
        return Err(PyValueError::new_err("epsilon and positive differ in length"));
    }
    Ok(epsilon
        .iter()
        .zip(positive)
        .map(|(&e, &p)| if p { SampleKind::Positive } else { SampleKind::Unknown { epsilon: e } })
        .collect())
}

/// Summed expected exponential loss. `positive[i]` marks gazed samples,
/// whose `epsilon[i]` is ignored.
#[pyfunction]
fn eel_loss(scores: Vec<f64>, epsilon: Vec<f64>, positive: Vec<bool>) -> PyResult<f64> {
    gazeseg::boost::eel_loss(&scores, &kinds(&epsilon, &positive)?).map_err(py_err)
}

/// Per-sample negative gradient of `eel_loss`.
#[pyfunction]
fn eel_gradient(scores: Vec<f64>, epsilon: Vec<f64>, positive: Vec<bool>) -> PyResult<Vec<f64>> {
    gazeseg::boost::eel_gradient(&scores, &kinds(&epsilon, &positive)?).map_err(py_err)
}

#[pyfunction]
fn rgb_to_lab(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    let [l, a, bb] = gazeseg::seqdata::rgb_pixel_to_lab([r, g, b]);
    (l, a, bb)
}

/// Diffuses `p0` over an undirected graph given as `(i, j, weight)` edges.
#[pyfunction]
#[pyo3(signature = (n, edges, p0, gazed, alpha=0.95, iterations=10))]
fn diffuse(
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    p0: Vec<f64>,
    gazed: Vec<usize>,
    alpha: f64,
    iterations: usize,
) -> PyResult<Vec<f64>> {
    let graph = AffinityGraph::from_edges(n, &edges).map_err(py_err)?;
    gazeseg::gazeprop::diffuse(&graph, &p0, &gazed, alpha, iterations).map_err(py_err)
}

fn metrics_dict<'py>(py: Python<'py>, m: &gazeseg::metrics::Metrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("auc", m.auc)?;
    d.set_item("f_score_at_5fpr", m.f_score_at_5fpr)?;
    d.set_item("precision_at_5fpr", m.precision_at_5fpr)?;
    d.set_item("recall_at_5fpr", m.recall_at_5fpr)?;
    d.set_item("threshold_used", m.threshold_used)?;
    d.set_item("roc", m.roc.clone())?;
    Ok(d)
}

/// Pixel ROC metrics for flat score and ground-truth lists.
#[pyfunction]
fn evaluate_pixels<'py>(py: Python<'py>, scores: Vec<f64>, truth: Vec<bool>) -> PyResult<Bound<'py, PyDict>> {
    let m = gazeseg::metrics::evaluate_pixels(&scores, &truth).map_err(py_err)?;
    metrics_dict(py, &m)
}

/// Writes a synthetic sequence into `out_dir` and returns the manifest path.
#[pyfunction]
#[pyo3(signature = (out_dir, frames=30, width=128, height=128, radius=12.0, observers=1, seed=42, jitter=2.0))]
#[allow(clippy::too_many_arguments)]
fn synth(
    out_dir: PathBuf,
    frames: usize,
    width: u32,
    height: u32,
    radius: f64,
    observers: usize,
    seed: u64,
    jitter: f64,
) -> PyResult<PathBuf> {
    let mut spec = SynthSpec::circling(frames, width, height, radius, seed);
    spec.jitter_sigma = jitter;
    let out = generate(&spec).map_err(py_err)?;
    let traces = generate_observers(&spec, observers).map_err(py_err)?;
    write_synth(&out, &traces, &out_dir).map_err(py_err)?;
    Ok(out_dir.join("manifest.txt"))
}

fn load_masks(dir: &Path) -> gazeseg::Result<Vec<Vec<bool>>> {
    list_pngs(dir)?.iter().map(|p| read_mask_png(p).map(|m| m.2)).collect()
}

/// Runs the pipeline and writes its outputs; returns the metrics when
/// `gt_dir` is given, else `None`.
#[pyfunction]
#[pyo3(signature = (manifest, gaze, out_dir, config=None, gt_dir=None, mode=None))]
fn segment<'py>(
    py: Python<'py>,
    manifest: PathBuf,
    gaze: Vec<PathBuf>,
    out_dir: PathBuf,
    config: Option<PyPipelineConfig>,
    gt_dir: Option<PathBuf>,
    mode: Option<&str>,
) -> PyResult<Option<Bound<'py, PyDict>>> {
    let mut cfg = config.map(|c| c.inner).unwrap_or_default();
    if let Some(m) = mode {
        cfg.mode = m.parse::<Mode>().map_err(py_err)?;
    }
    let out = py
        .detach(|| -> gazeseg::Result<_> {
            let sequence = load_sequence(&manifest)?;
            let mut traces = Vec::new();
            for g in &gaze {
                traces.extend(parse_gaze_trace(g, &sequence)?.traces);
            }
            let gt = gt_dir.as_deref().map(load_masks).transpose()?;
            let out = run(&cfg, &sequence, &traces, gt.as_deref())?;
            write_run(&out.results[0], &out.segmentation.frames, &out_dir)?;
            Ok(out)
        })
        .map_err(py_err)?;
    out.results[0].metrics.as_ref().map(|m| metrics_dict(py, m)).transpose()
}

#[pymodule]
fn gazeseg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPipelineConfig>()?;
    m.add_function(wrap_pyfunction!(eel_loss, m)?)?;
    m.add_function(wrap_pyfunction!(eel_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(rgb_to_lab, m)?)?;
    m.add_function(wrap_pyfunction!(diffuse, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_pixels, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    Ok(())
}
