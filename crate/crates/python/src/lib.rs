//! Python bindings: signals, spectra, feature extraction, trend filtering,
//! noise estimation and the Monte Carlo test.

use hffeat::nulltest::{self, CloudPoint, Smoothing};
use hffeat::testsignal::{self, TestSignalParams};
use hffeat::{features, noise, spectrum, trend, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyType;
use num_complex::Complex64;

fn to_py(e: Error) -> PyErr {
    match e.root() {
        Error::Convergence { .. } | Error::Internal(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Uniformly sampled real series; `dt` in seconds.
#[pyclass(name = "Signal", module = "hffeat_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySignal {
    inner: hffeat::Signal,
}

#[pymethods]
impl PySignal {
    #[new]
    #[pyo3(signature = (samples, dt = 1.0))]
    fn new(samples: Vec<f64>, dt: f64) -> PyResult<Self> {
        Ok(Self { inner: hffeat::Signal::new(samples, dt).map_err(to_py)? })
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.inner.samples().to_vec()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Signal(n={}, dt={})", self.inner.len(), self.inner.dt())
    }
}

#[pyclass(name = "HFFeature", module = "hffeat_py", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyFeature {
    g_index: usize,
    g_hz: f64,
    d_value: f64,
    iota: f64,
    a_index: usize,
    b_index: usize,
    m_used: usize,
}

impl From<hffeat::HFFeature> for PyFeature {
    fn from(f: hffeat::HFFeature) -> Self {
        Self {
            g_index: f.g_index,
            g_hz: f.g_hz,
            d_value: f.d_value,
            iota: f.iota,
            a_index: f.a_index,
            b_index: f.b_index,
            m_used: f.m_used,
        }
    }
}

impl From<&PyFeature> for hffeat::HFFeature {
    fn from(f: &PyFeature) -> Self {
        Self {
            g_index: f.g_index,
            g_hz: f.g_hz,
            d_value: f.d_value,
            iota: f.iota,
            a_index: f.a_index,
            b_index: f.b_index,
            m_used: f.m_used,
        }
    }
}

#[pymethods]
impl PyFeature {
    fn __repr__(&self) -> String {
        format!(
            "HFFeature(G={}, D={}, a={}, b={}, m={})",
            self.g_index, self.d_value, self.a_index, self.b_index, self.m_used
        )
    }
}

#[pyclass(name = "TrendEstimate", module = "hffeat_py", frozen, get_all)]
struct PyTrend {
    values: Vec<f64>,
    lambda_: f64,
    knots: Vec<usize>,
    objective: f64,
    dual_gap: f64,
    iterations: usize,
}

/// Simulated null features, one `(G, D)` pair per replicate.
#[pyclass(name = "NullCloud", module = "hffeat_py", frozen, skip_from_py_object)]
struct PyCloud {
    inner: nulltest::NullCloud,
}

#[pymethods]
impl PyCloud {
    /// Builds a cloud from `(G, D)` pairs.
    #[classmethod]
    #[pyo3(signature = (points, dt = 1.0))]
    fn from_points(_cls: &Bound<'_, PyType>, points: Vec<(usize, f64)>, dt: f64) -> PyResult<Self> {
        let points = points.into_iter().map(|(g, d)| CloudPoint { g, d }).collect();
        let mut inner = nulltest::NullCloud::from_points(points).map_err(to_py)?;
        inner.dt = dt;
        Ok(Self { inner })
    }

    #[getter]
    fn points(&self) -> Vec<(usize, f64)> {
        self.inner.points.iter().map(|p| (p.g, p.d)).collect()
    }

    /// Empirical probability of each point's upper-right quadrant.
    fn probabilities(&self) -> Vec<f64> {
        self.inner.probabilities()
    }

    fn empirical_p(&self, g: f64, d: f64) -> f64 {
        nulltest::empirical_p(&self.inner, g, d)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "TestReport", module = "hffeat_py", frozen, skip_from_py_object)]
struct PyReport {
    inner: nulltest::TestReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn statistic(&self) -> PyFeature {
        self.inner.statistic.into()
    }

    #[getter]
    fn p_value_proxy(&self) -> f64 {
        self.inner.p_value_proxy
    }

    #[getter]
    fn alpha_star(&self) -> f64 {
        self.inner.alpha_star
    }

    /// `"reject-null"` or `"accept-null"`.
    #[getter]
    fn decision(&self) -> &'static str {
        match self.inner.decision {
            nulltest::Decision::RejectNull => "reject-null",
            nulltest::Decision::AcceptNull => "accept-null",
        }
    }

    #[getter]
    fn rejected(&self) -> bool {
        self.inner.decision == nulltest::Decision::RejectNull
    }

    #[getter]
    fn thresholds_hit(&self) -> Option<(usize, f64)> {
        self.inner.thresholds_hit.map(|p| (p.g, p.d))
    }

    #[getter]
    fn m_used(&self) -> usize {
        self.inner.provenance.m_used
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.provenance.sigma
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "TestReport({}, p={}, alpha*={})",
            self.decision(),
            self.inner.p_value_proxy,
            self.inner.alpha_star
        )
    }
}

/// Unnormalised DFT of a real sequence, as complex numbers.
#[pyfunction]
fn dft(samples: Vec<f64>) -> PyResult<Vec<Complex64>> {
    spectrum::dft_samples(&samples).map_err(to_py)
}

/// Windowed-RMS amplitude spectrum at smoothing width `m`; entry `i` is
/// frequency bin `m + i`.
#[pyfunction]
fn amplitude_spectrum(signal: &PySignal, m: usize) -> PyResult<Vec<f64>> {
    let s = hffeat::AmplitudeSpectrum::from_signal(&signal.inner, m).map_err(to_py)?;
    Ok(s.smoothed)
}

/// The `(G, D)` feature of the amplitude spectrum at width `m`.
#[pyfunction]
fn extract(signal: &PySignal, m: usize) -> PyResult<PyFeature> {
    let s = hffeat::AmplitudeSpectrum::from_signal(&signal.inner, m).map_err(to_py)?;
    Ok(hffeat::extract(&s).into())
}

/// Largest-jump choice of `m` over `1..=k`, `k = ceil(sqrt(n))` by default.
/// Returns `(m, G values over the schedule)`.
#[pyfunction]
#[pyo3(signature = (signal, k = None))]
fn select_m(signal: &PySignal, k: Option<usize>) -> PyResult<(usize, Vec<usize>)> {
    let n = signal.inner.len();
    let schedule = match k {
        Some(k) => features::SmoothingSchedule::linear(n, k),
        None => features::SmoothingSchedule::default_for(n),
    }
    .map_err(to_py)?;
    let sel = features::select_m_detailed(&signal.inner, &schedule).map_err(to_py)?;
    Ok((sel.m, sel.g_values))
}

/// l1 trend filter: minimises `1/2 |y - x|^2 + lam |D2 x|_1`.
#[pyfunction]
#[pyo3(signature = (samples, lam, tol = trend::DEFAULT_TOL))]
fn l1_trend(py: Python<'_>, samples: Vec<f64>, lam: f64, tol: f64) -> PyResult<PyTrend> {
    let est = py
        .detach(|| trend::l1_trend_filter_samples(&samples, lam, tol))
        .map_err(to_py)?;
    Ok(PyTrend {
        values: est.values,
        lambda_: est.lambda,
        knots: est.knots,
        objective: est.objective,
        dual_gap: est.dual_gap,
        iterations: est.iterations,
    })
}

/// Smallest penalty at which the trend filter returns the least-squares line.
#[pyfunction]
fn lambda_max(samples: Vec<f64>) -> f64 {
    trend::lambda_max_samples(&samples)
}

/// Penalty of a named preset (`"sls31"` or `"synth301"`).
#[pyfunction]
fn lambda_preset(name: &str) -> PyResult<f64> {
    trend::LambdaPreset::parse(name)
        .map(|p| p.value())
        .ok_or_else(|| PyValueError::new_err(format!("unknown preset {name:?}")))
}

/// Noise level from the median absolute finest wavelet coefficient.
#[pyfunction]
fn estimate_sigma(signal: &PySignal) -> PyResult<f64> {
    Ok(noise::estimate_sigma_signal(&signal.inner).map_err(to_py)?.sigma_hat)
}

/// Soft-threshold denoising of levels finer than `j0`.
#[pyfunction]
#[pyo3(signature = (signal, j0 = noise::DEFAULT_J0))]
fn visushrink(signal: &PySignal, j0: usize) -> PyResult<PySignal> {
    Ok(PySignal { inner: noise::visushrink(&signal.inner, j0).map_err(to_py)? })
}

/// Features of `replicates` null signals `trend + sigma * eps` at width `m`.
#[pyfunction]
#[pyo3(signature = (trend, sigma, replicates, m, seed = 0, dt = 1.0))]
fn simulate_null(
    py: Python<'_>,
    trend: Vec<f64>,
    sigma: f64,
    replicates: usize,
    m: usize,
    seed: u64,
    dt: f64,
) -> PyResult<PyCloud> {
    let inner = py
        .detach(|| nulltest::simulate_null(&trend, sigma, replicates, m, seed, dt))
        .map_err(to_py)?;
    Ok(PyCloud { inner })
}

/// Compares a statistic with a cloud; rejects iff `p <= alpha*`.
#[pyfunction]
fn decide(cloud: &PyCloud, statistic: &PyFeature) -> PyResult<PyReport> {
    let inner = nulltest::decide(&cloud.inner, &statistic.into()).map_err(to_py)?;
    Ok(PyReport { inner })
}

/// End-to-end test. `m` fixes the smoothing width, otherwise it is selected
/// over `1..=k`. `trend` and `sigma` replace the estimates when given.
#[pyfunction]
#[pyo3(signature = (signal, lam, replicates = 200, seed = 0, k = None, m = None, trend = None, sigma = None))]
#[allow(clippy::too_many_arguments)]
fn run_full_test(
    py: Python<'_>,
    signal: &PySignal,
    lam: f64,
    replicates: usize,
    seed: u64,
    k: Option<usize>,
    m: Option<usize>,
    trend: Option<Vec<f64>>,
    sigma: Option<f64>,
) -> PyResult<PyReport> {
    if k.is_some() && m.is_some() {
        return Err(PyValueError::new_err("give at most one of k and m"));
    }
    let mut config = hffeat::TestConfig::new(lam, replicates, seed);
    config.smoothing = match m {
        Some(m) => Smoothing::Fixed(m),
        None => Smoothing::Auto { k },
    };
    config.trend_override = trend;
    config.sigma_override = sigma;
    let inner = py
        .detach(|| hffeat::run_full_test(&signal.inner, &config))
        .map_err(to_py)?;
    Ok(PyReport { inner })
}

fn benchmark_params(n: usize, sigma: f64, c_a: f64, c_f: f64, seed: u64) -> TestSignalParams {
    TestSignalParams { sigma, c_a, c_f, seed, ..TestSignalParams::scaled(n) }
}

/// Synthetic benchmark `T + O + sigma xi` over 84 hours.
#[pyfunction]
#[pyo3(signature = (n = testsignal::REFERENCE_LEN, sigma = 0.025, c_a = 0.05, c_f = 10.0, seed = 0))]
fn generate(n: usize, sigma: f64, c_a: f64, c_f: f64, seed: u64) -> PyResult<PySignal> {
    let params = benchmark_params(n, sigma, c_a, c_f, seed);
    Ok(PySignal { inner: testsignal::generate(&params).map_err(to_py)? })
}

/// Noise-free parts of the benchmark: `(trend, oscillation)`.
#[pyfunction]
#[pyo3(signature = (n = testsignal::REFERENCE_LEN, c_a = 0.05, c_f = 10.0))]
fn benchmark_components(n: usize, c_a: f64, c_f: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let params = benchmark_params(n, 0.0, c_a, c_f, 0);
    Ok((
        testsignal::lj_trend(&params).map_err(to_py)?,
        testsignal::oscillation(&params).map_err(to_py)?,
    ))
}

#[pymodule]
fn hffeat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", hffeat::VERSION)?;
    m.add_class::<PySignal>()?;
    m.add_class::<PyFeature>()?;
    m.add_class::<PyTrend>()?;
    m.add_class::<PyCloud>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(dft, m)?)?;
    m.add_function(wrap_pyfunction!(amplitude_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(select_m, m)?)?;
    m.add_function(wrap_pyfunction!(l1_trend, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_max, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_preset, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(visushrink, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_null, m)?)?;
    m.add_function(wrap_pyfunction!(decide, m)?)?;
    m.add_function(wrap_pyfunction!(run_full_test, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(benchmark_components, m)?)?;
    Ok(())
}
