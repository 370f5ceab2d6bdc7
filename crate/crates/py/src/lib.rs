//! Python bindings: `import crom`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use crom_core::codec_io;
use crom_core::crom::{self as core_crom, Schedule};
use crom_core::harness::{self, CodecSpec, ExperimentSpec, SourceKind, SourceSpec};
use crom_core::sparc::SparcParams;
use crom_core::topk::IndexMessage;
use crom_core::transform::{SchemeKind, TransformScheme};

create_exception!(crom, StreamError, PyValueError, "Malformed or corrupt .crom stream.");

fn to_py(e: crom_core::Error) -> PyErr {
    if e.is_format() {
        StreamError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn messages_from(n: usize, raw: Vec<Vec<usize>>) -> PyResult<Vec<IndexMessage>> {
    raw.into_iter().map(|idx| IndexMessage::new(n, idx).map_err(to_py)).collect()
}

fn messages_to(messages: &[IndexMessage]) -> Vec<Vec<usize>> {
    messages.iter().map(|m| m.indices().to_vec()).collect()
}

#[pyclass(frozen, skip_from_py_object, module = "crom")]
#[derive(Clone)]
struct CromParams {
    inner: core_crom::CromParams,
}

#[pymethods]
impl CromParams {
    #[new]
    #[pyo3(signature = (n, rate, k = 1, scheme = "sparse-givens-dct", seed = 0, sigma2 = 1.0, schedule = "simulation", gamma = 0.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n: usize,
        rate: f64,
        k: usize,
        scheme: &str,
        seed: u64,
        sigma2: f64,
        schedule: &str,
        gamma: f64,
    ) -> PyResult<Self> {
        let kind: SchemeKind = scheme.parse().map_err(to_py)?;
        let schedule: Schedule = schedule.parse().map_err(to_py)?;
        let scheme = TransformScheme::new(kind, seed, n).map_err(to_py)?;
        let inner = core_crom::CromParams::from_parts(n, k, rate, sigma2, gamma, schedule, scheme).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate()
    }

    /// Number of messages L.
    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations()
    }

    #[getter]
    fn sigma2(&self) -> f64 {
        self.inner.sigma2()
    }

    #[getter]
    fn scheme(&self) -> &'static str {
        self.inner.scheme().kind.name()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.scheme().seed
    }

    /// Step size of iteration i (1-based).
    fn alpha(&self, i: usize) -> PyResult<f64> {
        self.inner.alpha(i).map_err(to_py)
    }

    /// Rate in nats per sample used by the first i messages.
    fn rate_after(&self, i: usize) -> f64 {
        self.inner.rate_after(i)
    }

    fn __repr__(&self) -> String {
        format!(
            "CromParams(n={}, k={}, rate={}, L={}, scheme='{}', seed={})",
            self.inner.n(),
            self.inner.k(),
            self.inner.rate(),
            self.inner.iterations(),
            self.inner.scheme().kind.name(),
            self.inner.scheme().seed
        )
    }
}

#[pyclass(frozen, module = "crom")]
struct CromEncoding {
    inner: core_crom::CromEncoding,
}

#[pymethods]
impl CromEncoding {
    #[getter]
    fn params(&self) -> CromParams {
        CromParams { inner: self.inner.params }
    }

    /// Selected indices of each message.
    #[getter]
    fn messages(&self) -> Vec<Vec<usize>> {
        messages_to(&self.inner.messages)
    }

    #[getter]
    fn residual_norms(&self) -> Vec<f64> {
        self.inner.residual_norms.clone()
    }

    #[getter]
    fn final_residual_norm(&self) -> f64 {
        self.inner.final_residual_norm()
    }

    /// Per-sample distortion after 0, 1, ..., L messages.
    fn distortion_profile(&self) -> Vec<f64> {
        self.inner.distortion_profile()
    }

    /// Serialized .crom stream.
    fn to_bytes<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let bytes = codec_io::write_stream(&self.inner).map_err(to_py)?;
        Ok(PyBytes::new(py, &bytes))
    }

    fn __len__(&self) -> usize {
        self.inner.messages.len()
    }
}

#[pyfunction]
fn encode(x: Vec<f64>, params: &CromParams) -> PyResult<CromEncoding> {
    let inner = core_crom::crom_encode(&x, &params.inner).map_err(to_py)?;
    Ok(CromEncoding { inner })
}

/// Reconstruction from the first len(messages) messages.
#[pyfunction]
fn decode_prefix(messages: Vec<Vec<usize>>, params: &CromParams) -> PyResult<Vec<f64>> {
    let msgs = messages_from(params.inner.n(), messages)?;
    core_crom::decode_prefix(&msgs, &params.inner).map_err(to_py)
}

/// List of (iteration, rate, distortion) rows for `x` under the messages of `encoding`.
#[pyfunction]
fn distortion_trace(x: Vec<f64>, encoding: &CromEncoding) -> PyResult<Vec<(usize, f64, f64)>> {
    let trace = core_crom::distortion_trace(&x, &encoding.inner).map_err(to_py)?;
    Ok(trace.rows.iter().map(|r| (r.iteration, r.rate, r.distortion)).collect())
}

/// Parses a possibly truncated stream into (params, messages, truncated, partial_discarded).
#[pyfunction]
#[pyo3(signature = (data, max_messages = None))]
fn read_stream(data: &[u8], max_messages: Option<usize>) -> PyResult<(CromParams, Vec<Vec<usize>>, bool, bool)> {
    let d = codec_io::read_stream(data, max_messages).map_err(to_py)?;
    Ok((CromParams { inner: d.params }, messages_to(&d.messages), d.truncated, d.partial_discarded))
}

/// Indices of the k largest entries, ties toward the smaller index.
#[pyfunction]
fn top_k(x: Vec<f64>, k: usize) -> PyResult<Vec<usize>> {
    Ok(crom_core::g_k(&x, k).map_err(to_py)?.indices().to_vec())
}

#[pyclass(frozen, module = "crom")]
struct ZeroRateCode {
    inner: crom_core::ZeroRateCode,
}

#[pymethods]
impl ZeroRateCode {
    #[new]
    #[pyo3(signature = (n, k = 1, expected_alpha = false))]
    fn new(n: usize, k: usize, expected_alpha: bool) -> PyResult<Self> {
        let inner = if expected_alpha {
            crom_core::ZeroRateCode::with_expected_order_statistic(n, k)
        } else {
            crom_core::ZeroRateCode::new(n, k)
        }
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate()
    }

    fn encode(&self, x: Vec<f64>) -> PyResult<Vec<usize>> {
        Ok(self.inner.encode(&x).map_err(to_py)?.indices().to_vec())
    }

    fn decode(&self, indices: Vec<usize>) -> PyResult<Vec<f64>> {
        let m = IndexMessage::new(self.inner.n(), indices).map_err(to_py)?;
        self.inner.decode(&m).map_err(to_py)
    }

    fn distortion(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.distortion(&x).map_err(to_py)
    }
}

#[pyclass(frozen, module = "crom")]
struct ChannelCode {
    inner: crom_core::ChannelCode,
}

#[pymethods]
impl ChannelCode {
    #[new]
    fn new(n: usize) -> PyResult<Self> {
        Ok(Self { inner: crom_core::ChannelCode::new(n).map_err(to_py)? })
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.inner.eps()
    }

    #[getter]
    fn power(&self) -> f64 {
        self.inner.power()
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate()
    }

    fn capacity_ratio(&self) -> f64 {
        self.inner.capacity_ratio()
    }

    fn encode(&self, m: usize) -> PyResult<Vec<f64>> {
        self.inner.encode(m).map_err(to_py)
    }

    fn decode(&self, y: Vec<f64>) -> PyResult<usize> {
        self.inner.decode(&y).map_err(to_py)
    }

    /// Empirical error rate over `trials` noisy transmissions.
    #[pyo3(signature = (trials, seed = 0))]
    fn error_rate(&self, py: Python<'_>, trials: usize, seed: u64) -> PyResult<f64> {
        let inner = self.inner;
        let e = py.detach(move || inner.simulate(trials, seed)).map_err(to_py)?;
        Ok(e.rate())
    }
}

/// Runs a distortion-rate experiment and returns its CSV text.
#[pyfunction]
#[pyo3(signature = (codec, n, rate = 1.0, k = 1, m = 256, trials = 100, scheme = "uniform-haar", seed = 0, source = "gaussian", variance = 1.0, rho = 0.9, source_seed = 1, grid = None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    codec: &str,
    n: usize,
    rate: f64,
    k: usize,
    m: usize,
    trials: usize,
    scheme: &str,
    seed: u64,
    source: &str,
    variance: f64,
    rho: f64,
    source_seed: u64,
    grid: Option<Vec<f64>>,
) -> PyResult<String> {
    let spec = match codec {
        "crom" => {
            let kind: SchemeKind = scheme.parse().map_err(to_py)?;
            let scheme = TransformScheme::new(kind, seed, n).map_err(to_py)?;
            let p = core_crom::CromParams::new(n, k, rate, scheme).and_then(|p| p.with_sigma2(variance));
            CodecSpec::Crom(p.map_err(to_py)?)
        }
        "sparc" => CodecSpec::Sparc(
            SparcParams::from_rate(n, m, rate, seed).and_then(|p| p.with_sigma2(variance)).map_err(to_py)?,
        ),
        "zero-rate" => CodecSpec::ZeroRate(crom_core::ZeroRateCode::new(n, k).map_err(to_py)?),
        other => return Err(PyValueError::new_err(format!("unknown codec '{other}'"))),
    };
    let top = match spec {
        CodecSpec::ZeroRate(c) => c.rate(),
        _ => rate,
    };
    let grid = grid.unwrap_or_else(|| (0..=4).map(|q| top * q as f64 / 4.0).collect());
    let kind: SourceKind = source.parse().map_err(to_py)?;
    let source = SourceSpec::new(kind, variance, rho, source_seed).map_err(to_py)?;
    let exp = ExperimentSpec::new(spec, source, trials, grid).map_err(to_py)?;
    let result = py.detach(move || harness::run_experiment(&exp)).map_err(to_py)?;
    Ok(result.to_csv())
}

#[pymodule]
fn crom(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("StreamError", m.py().get_type::<StreamError>())?;
    m.add_class::<CromParams>()?;
    m.add_class::<CromEncoding>()?;
    m.add_class::<ZeroRateCode>()?;
    m.add_class::<ChannelCode>()?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(decode_prefix, m)?)?;
    m.add_function(wrap_pyfunction!(distortion_trace, m)?)?;
    m.add_function(wrap_pyfunction!(read_stream, m)?)?;
    m.add_function(wrap_pyfunction!(top_k, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
