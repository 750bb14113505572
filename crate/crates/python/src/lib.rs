//! Python bindings. Gaussian integers travel as Python `complex` values
//! with integral parts; structured results come back as dicts.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use signal_codes::channel::{self, SimConfig};
use signal_codes::decoder::{self, BlockInput, FanoConfig, PathMemory};
use signal_codes::lattice::{is_minimum_phase, PatternSpec};
use signal_codes::shaping::{self, Scheme, ShaperState};
use signal_codes::spectrum::{self, SearchOptions, DEFAULT_NODE_BUDGET};
use signal_codes::{FilterPattern, GaussInt, Qam};

fn err(e: signal_codes::Error) -> PyErr {
    match e {
        signal_codes::Error::RootFinding | signal_codes::Error::EmptyHeap => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Serialize through JSON into plain Python objects.
fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn gauss(v: &[Complex64]) -> PyResult<Vec<GaussInt>> {
    v.iter()
        .map(|z| {
            let g = GaussInt::round(*z);
            if (g.to_c64() - z).norm() > 1e-9 {
                Err(PyValueError::new_err(format!("{z} is not a Gaussian integer")))
            } else {
                Ok(g)
            }
        })
        .collect()
}

fn complex(v: &[GaussInt]) -> Vec<Complex64> {
    v.iter().map(|g| g.to_c64()).collect()
}

fn scheme(kind: &str, m_alg: usize, radius: i64) -> PyResult<Scheme> {
    match kind {
        "tomlinson" => Ok(Scheme::Tomlinson),
        "flexible" => Ok(Scheme::Flexible),
        "nested" => Ok(Scheme::Nested { m_alg, radius }),
        _ => Err(PyValueError::new_err(format!("unknown shaping scheme {kind:?}"))),
    }
}

/// A monic filter pattern.
#[pyclass(name = "Pattern", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPattern {
    inner: FilterPattern,
}

#[pymethods]
impl PyPattern {
    /// `Pattern("table1:4")`, `Pattern("identity")` or a JSON spec.
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        let inner = PatternSpec::parse(spec).and_then(|s| s.build()).map_err(err)?;
        Ok(PyPattern { inner })
    }

    /// Pattern from explicit taps `[1, f_1, .., f_L]`.
    #[staticmethod]
    fn fir(taps: Vec<Complex64>) -> PyResult<Self> {
        Ok(PyPattern {
            inner: FilterPattern::fir(&taps).map_err(err)?,
        })
    }

    #[getter]
    fn taps(&self) -> Vec<Complex64> {
        self.inner.taps().to_vec()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    fn is_minimum_phase(&self) -> PyResult<bool> {
        is_minimum_phase(&self.inner).map_err(err)
    }

    /// Squared Euclidean weight of an error sequence.
    fn error_weight(&self, e: Vec<Complex64>) -> PyResult<f64> {
        Ok(spectrum::error_weight(&gauss(&e)?, &self.inner))
    }

    /// `x = b ⊛ f` over the full support.
    fn encode(&self, b: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        Ok(signal_codes::encode_convolve(&gauss(&b)?, &self.inner).samples)
    }

    fn __repr__(&self) -> String {
        format!("Pattern(taps={:?})", self.inner.taps())
    }
}

#[pyfunction]
#[pyo3(signature = (pattern, n_max = 16, budget = DEFAULT_NODE_BUDGET))]
fn min_distance<'py>(py: Python<'py>, pattern: &PyPattern, n_max: usize, budget: u64) -> PyResult<Bound<'py, PyAny>> {
    let opts = SearchOptions {
        node_budget: budget,
        parallel: true,
    };
    let md = py.detach(|| spectrum::min_distance(&pattern.inner, n_max, &opts)).map_err(err)?;
    to_py(py, &md)
}

#[pyfunction]
#[pyo3(signature = (pattern, d2_search, n_max = 16, d2_tail = None, budget = DEFAULT_NODE_BUDGET))]
fn search_spectrum<'py>(
    py: Python<'py>,
    pattern: &PyPattern,
    d2_search: f64,
    n_max: usize,
    d2_tail: Option<f64>,
    budget: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = SearchOptions {
        node_budget: budget,
        parallel: true,
    };
    let rep = py
        .detach(|| match d2_tail {
            Some(t) => spectrum::backward_forward_search(&pattern.inner, d2_search, t, n_max, &opts),
            None => spectrum::search_spectrum(&pattern.inner, d2_search, n_max, &opts),
        })
        .map_err(err)?;
    to_py(py, &rep)
}

/// First `k_max` terms of the cartesian spectrum counts `(a, b)`.
#[pyfunction]
fn cartesian_spectrum(k_max: usize) -> (Vec<u64>, Vec<u64>) {
    spectrum::cartesian_spectrum(k_max)
}

/// Shape QAM data (odd Gaussian integers) and return a dict with `b`, `x`,
/// the raw `tail` and its compressed form `tail_packed`.
#[pyfunction]
#[pyo3(signature = (pattern, data, m = 8, scheme_kind = "tomlinson", m_alg = 16, radius = shaping::DEFAULT_K_RADIUS))]
fn shape<'py>(
    py: Python<'py>,
    pattern: &PyPattern,
    data: Vec<Complex64>,
    m: u32,
    scheme_kind: &str,
    m_alg: usize,
    radius: i64,
) -> PyResult<Bound<'py, PyDict>> {
    let f = &pattern.inner;
    let qam = Qam::new(m).map_err(err)?;
    let a = gauss(&data)?
        .into_iter()
        .map(|g| qam.symbol(g))
        .collect::<signal_codes::Result<Vec<_>>>()
        .map_err(err)?;
    let s = scheme(scheme_kind, m_alg, radius)?;
    let mut st = ShaperState::new(f, m).map_err(err)?;
    let blk = shaping::shape_block(&a, s, &mut st, f).map_err(err)?;
    let tail = shaping::terminate_block(&st, f).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("b", complex(&blk.b))?;
    d.set_item("x", blk.x)?;
    d.set_item("tail", complex(&tail.raw_b))?;
    d.set_item("tail_packed", pyo3::types::PyBytes::new(py, &tail.packed))?;
    Ok(d)
}

/// Recover data symbols from shaped lattice coordinates.
#[pyfunction]
#[pyo3(signature = (pattern, b, m = 8, scheme_kind = "tomlinson", head = None))]
fn unshape(pattern: &PyPattern, b: Vec<Complex64>, m: u32, scheme_kind: &str, head: Option<Vec<Complex64>>) -> PyResult<Vec<Complex64>> {
    let f = &pattern.inner;
    let head = match head {
        Some(h) => gauss(&h)?,
        None => vec![GaussInt::ZERO; f.order()],
    };
    let s = scheme(scheme_kind, 1, shaping::DEFAULT_K_RADIUS)?;
    let a = shaping::inverse_shape(&gauss(&b)?, s, f, m, &head).map_err(err)?;
    Ok(a.iter().map(|s| s.value().to_c64()).collect())
}

/// Undo tail compression.
#[pyfunction]
fn decompress_tail(pattern: &PyPattern, packed: &[u8]) -> PyResult<Vec<Complex64>> {
    Ok(complex(&shaping::decompress_tail(packed, &pattern.inner).map_err(err)?))
}

/// Add complex Gaussian noise of total variance `sigma2` per sample.
#[pyfunction]
#[pyo3(signature = (x, sigma2, seed = 0))]
fn awgn(x: Vec<Complex64>, sigma2: f64, seed: u64) -> PyResult<Vec<Complex64>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    channel::awgn_add(&x, sigma2, &mut rng).map_err(err)
}

/// Sequential decoding of one block. Returns `{"b": [...] or None, "score", "stats"}`.
#[pyfunction]
#[pyo3(signature = (
    pattern, y, tail, sigma2, m = 8, head = None, decoder = "stack", max_stack = 10_000,
    x_range_test = true, max_entries = None, truncated_memory = None,
))]
#[allow(clippy::too_many_arguments)]
fn decode<'py>(
    py: Python<'py>,
    pattern: &PyPattern,
    y: Vec<Complex64>,
    tail: Vec<Complex64>,
    sigma2: f64,
    m: u32,
    head: Option<Vec<Complex64>>,
    decoder: &str,
    max_stack: usize,
    x_range_test: bool,
    max_entries: Option<u64>,
    truncated_memory: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let f = &pattern.inner;
    let head = match head {
        Some(h) => gauss(&h)?,
        None => vec![GaussInt::ZERO; f.order()],
    };
    let tail = gauss(&tail)?;
    let cfg = FanoConfig {
        max_stack,
        x_range_test,
        max_entries,
        path_memory: truncated_memory.map_or(PathMemory::Full, |depth| PathMemory::Truncated { depth }),
        ..FanoConfig::new(sigma2)
    };
    let blk = BlockInput {
        y: &y,
        n: y.len(),
        head: &head,
        tail: &tail,
        m,
        truth: None,
    };
    let r = py
        .detach(|| match decoder {
            "stack" => decoder::stack_decode(f, &blk, &cfg),
            "bidir" | "bidirectional" => decoder::bidirectional_decode(f, &blk, &cfg),
            other => Err(signal_codes::Error::InvalidArgument(format!("unknown decoder {other:?}"))),
        })
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("b", r.b.as_deref().map(complex))?;
    d.set_item("score", r.score)?;
    d.set_item("stats", to_py(py, &r.stats)?)?;
    Ok(d.into_any())
}

/// Run a simulation from a JSON config (missing keys take defaults).
#[pyfunction]
fn simulate<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = SimConfig::from_json(config_json).map_err(err)?;
    let r = py.detach(|| channel::run_simulation(&cfg)).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (pattern, m_algs, ms, symbols = 100_000, block_len = 1000, seed = 1))]
fn shaping_gain<'py>(
    py: Python<'py>,
    pattern: &PyPattern,
    m_algs: Vec<usize>,
    ms: Vec<u32>,
    symbols: usize,
    block_len: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let rows = py
        .detach(|| channel::shaping_gain_experiment(&pattern.inner, &m_algs, &ms, symbols, block_len, seed))
        .map_err(err)?;
    to_py(py, &rows)
}

/// Capacity (bits per complex symbol) with uniform input over the box of
/// an `m×m` QAM at `snr_db` (relative to the box power).
#[pyfunction]
fn uniform_capacity(m: u32, snr_db: f64) -> PyResult<f64> {
    channel::uniform_input_capacity(m, snr_db).map_err(err)
}

#[pyfunction]
fn uniform_cutoff(m: u32, snr_db: f64) -> PyResult<f64> {
    channel::uniform_input_cutoff(m, snr_db).map_err(err)
}

#[pyfunction]
fn gaussian_capacity(snr_db: f64) -> f64 {
    channel::gaussian_capacity(snr_db)
}

#[pyfunction]
fn snr_to_sigma2(snr_db: f64, signal_power: f64) -> PyResult<f64> {
    channel::snr_to_sigma2(snr_db, signal_power).map_err(err)
}

#[pymodule]
#[pyo3(name = "signal_codes")]
pub fn signal_codes_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyPattern>()?;
    m.add_function(wrap_pyfunction!(min_distance, m)?)?;
    m.add_function(wrap_pyfunction!(search_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(cartesian_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(shape, m)?)?;
    m.add_function(wrap_pyfunction!(unshape, m)?)?;
    m.add_function(wrap_pyfunction!(decompress_tail, m)?)?;
    m.add_function(wrap_pyfunction!(awgn, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(shaping_gain, m)?)?;
    m.add_function(wrap_pyfunction!(uniform_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(uniform_cutoff, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(snr_to_sigma2, m)?)?;
    Ok(())
}
