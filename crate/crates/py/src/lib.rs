//! Python bindings. Complex values cross the boundary as Python `complex`;
//! mode-coefficient vectors are lists ordered from `-order` to `order`.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use spatial_anc::anc::{self, Method};
use spatial_anc::config::RunConfig;
use spatial_anc::field::{self, ArrayRole, Point, Source};
use spatial_anc::harness::{self, Experiment};
use spatial_anc::modal::{self, ModeCoefficients};
use spatial_anc::{metrics, sparse, specfun, ComplexVec};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn config(toml: Option<&str>) -> PyResult<RunConfig> {
    let cfg = match toml {
        Some(text) => RunConfig::from_toml(text).map_err(err)?,
        None => RunConfig::default(),
    };
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

fn parse_method(s: &str) -> PyResult<Method> {
    s.parse().map_err(err)
}

fn coeffs_to_list(beta: &ModeCoefficients) -> Vec<Option<Complex64>> {
    beta.iter().map(|(m, c)| (!beta.is_flagged(m)).then_some(c)).collect()
}

#[pyfunction]
fn bessel_j(m: i32, x: f64) -> PyResult<f64> {
    specfun::bessel_j(m, x).map_err(err)
}

#[pyfunction]
fn bessel_y(m: i32, x: f64) -> PyResult<f64> {
    specfun::bessel_y(m, x).map_err(err)
}

#[pyfunction]
fn hankel2(m: i32, x: f64) -> PyResult<Complex64> {
    specfun::hankel2(m, x).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (frequency, speed_of_sound = 343.0))]
fn wavenumber(frequency: f64, speed_of_sound: f64) -> f64 {
    anc::wavenumber(frequency, speed_of_sound)
}

/// Uniform circular microphone or loudspeaker array.
#[pyclass(name = "ArrayGeometry", frozen)]
struct PyArrayGeometry(field::ArrayGeometry);

#[pymethods]
impl PyArrayGeometry {
    #[new]
    #[pyo3(signature = (radius, count, role = "reference"))]
    fn new(radius: f64, count: usize, role: &str) -> PyResult<Self> {
        let role = match role {
            "reference" => ArrayRole::Reference,
            "error" => ArrayRole::Error,
            "loudspeaker" => ArrayRole::Loudspeaker,
            other => return Err(PyValueError::new_err(format!("unknown array role '{other}'"))),
        };
        field::ArrayGeometry::new(radius, count, role).map(Self).map_err(err)
    }

    #[getter]
    fn radius(&self) -> f64 {
        self.0.radius()
    }

    #[getter]
    fn count(&self) -> usize {
        self.0.count()
    }

    fn angles(&self) -> Vec<f64> {
        self.0.angles()
    }

    fn positions(&self) -> Vec<(f64, f64)> {
        self.0.positions().into_iter().map(|p| (p.x, p.y)).collect()
    }

    fn __repr__(&self) -> String {
        format!("ArrayGeometry(radius={}, count={})", self.0.radius(), self.0.count())
    }
}

/// Set of line sources and plane waves.
#[pyclass(name = "Scene")]
struct PyScene(field::Scene);

#[pymethods]
impl PyScene {
    #[new]
    #[pyo3(signature = (speed_of_sound = 343.0))]
    fn new(speed_of_sound: f64) -> Self {
        Self(field::Scene::new(Vec::new(), speed_of_sound))
    }

    /// Scene from the `[scene]` table of a TOML config (defaults when omitted).
    #[staticmethod]
    #[pyo3(signature = (toml = None))]
    fn from_config(toml: Option<&str>) -> PyResult<Self> {
        let cfg = config(toml)?;
        Ok(Self(cfg.scene.to_scene(cfg.speed_of_sound)))
    }

    #[pyo3(signature = (radius, azimuth, amplitude = Complex64::new(1.0, 0.0)))]
    fn add_line_source(&mut self, radius: f64, azimuth: f64, amplitude: Complex64) {
        self.0.sources.push(Source::line(radius, azimuth, amplitude));
    }

    #[pyo3(signature = (azimuth, amplitude = Complex64::new(1.0, 0.0)))]
    fn add_plane_wave(&mut self, azimuth: f64, amplitude: Complex64) {
        self.0.sources.push(Source::plane_wave(azimuth, amplitude));
    }

    fn __len__(&self) -> usize {
        self.0.sources.len()
    }

    fn pressure(&self, frequency: f64, x: f64, y: f64) -> PyResult<Complex64> {
        field::pressure_at(&self.0, frequency, Point::new(x, y)).map_err(err)
    }

    fn sample(&self, frequency: f64, array: &PyArrayGeometry) -> PyResult<Vec<Complex64>> {
        let s = field::sample_array(&self.0, frequency, &array.0).map_err(err)?;
        Ok(s.iter().copied().collect())
    }

    /// Exact mode coefficients, orders `-order..=order`.
    fn modes(&self, frequency: f64, order: usize) -> PyResult<Vec<Complex64>> {
        let beta = field::true_mode_coefficients(&self.0, frequency, order).map_err(err)?;
        Ok(beta.as_slice().to_vec())
    }
}

/// Mode coefficients from circular-array samples. Orders whose Bessel
/// factor is too small to invert come back as `None`.
#[pyfunction]
fn extract_modes(
    samples: Vec<Complex64>,
    array: &PyArrayGeometry,
    k: f64,
    order: usize,
) -> PyResult<Vec<Option<Complex64>>> {
    let beta = modal::extract_modes(&ComplexVec::from_vec(samples), &array.0, k, order).map_err(err)?;
    Ok(coeffs_to_list(&beta))
}

/// Mode coefficients of a plane-wave decomposition.
#[pyfunction]
fn modes_from_plane_waves(gamma: Vec<Complex64>, angles: Vec<f64>, k: f64, order: usize) -> PyResult<Vec<Complex64>> {
    let beta = modal::modes_from_plane_waves(&ComplexVec::from_vec(gamma), &angles, k, order).map_err(err)?;
    Ok(beta.as_slice().to_vec())
}

fn result_dict<'py>(py: Python<'py>, r: &sparse::SolveResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("gamma", r.gamma.iter().copied().collect::<Vec<_>>())?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("residual_norm", r.residual_norm)?;
    d.set_item("converged", r.converged)?;
    d.set_item("residual_history", r.residual_history.clone())?;
    Ok(d)
}

/// Plane-wave dictionary for one array and wavenumber.
#[pyclass(name = "Dictionary", frozen)]
struct PyDictionary(sparse::Dictionary);

#[pymethods]
impl PyDictionary {
    #[new]
    #[pyo3(signature = (array, k, atoms = 128))]
    fn new(array: &PyArrayGeometry, k: f64, atoms: usize) -> PyResult<Self> {
        sparse::build_dictionary(&array.0, k, atoms).map(Self).map_err(err)
    }

    fn angles(&self) -> Vec<f64> {
        self.0.angles().to_vec()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.rows(), self.0.atoms())
    }

    fn spectral_norm(&self) -> f64 {
        self.0.spectral_norm()
    }

    /// Matrix rows as lists of complex numbers.
    fn matrix(&self) -> Vec<Vec<Complex64>> {
        let e = self.0.matrix();
        (0..e.nrows()).map(|q| e.row(q).iter().copied().collect()).collect()
    }

    /// l1-regularised steepest descent.
    #[pyo3(signature = (samples, max_iters = None))]
    fn solve_l1<'py>(
        &self,
        py: Python<'py>,
        samples: Vec<Complex64>,
        max_iters: Option<usize>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mut cfg = sparse::SolverConfig::l1();
        if let Some(n) = max_iters {
            cfg.max_iters = n;
        }
        let r = sparse::solve_l1(&ComplexVec::from_vec(samples), &self.0, &cfg).map_err(err)?;
        result_dict(py, &r)
    }

    /// Iteratively reweighted least squares for the lp-penalised problem.
    #[pyo3(signature = (samples, p = 0.5, max_iters = None))]
    fn solve_irls<'py>(
        &self,
        py: Python<'py>,
        samples: Vec<Complex64>,
        p: f64,
        max_iters: Option<usize>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mut cfg = sparse::SolverConfig::irls(p);
        if let Some(n) = max_iters {
            cfg.max_iters = n;
        }
        let r = sparse::solve_irls(&ComplexVec::from_vec(samples), &self.0, &cfg).map_err(err)?;
        result_dict(py, &r)
    }
}

/// Per-mode secondary-path gains of a loudspeaker ring.
#[pyfunction]
fn secondary_path(radius: f64, k: f64, order: usize) -> PyResult<Vec<Complex64>> {
    let g = anc::secondary_path(radius, k, order).map_err(err)?;
    Ok(g.gains().as_slice().to_vec())
}

/// Runs the adaptive loop for one frequency bin using the geometry, scene
/// and settings of a TOML config (defaults when omitted).
#[pyfunction]
#[pyo3(signature = (method, frequency, config_toml = None))]
fn run_anc<'py>(
    py: Python<'py>,
    method: &str,
    frequency: f64,
    config_toml: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(config_toml)?;
    let method = parse_method(method)?;
    let scene = cfg.scene.to_scene(cfg.speed_of_sound);
    let trace = anc::run_anc(&scene, &cfg.geometry(), method, frequency, &cfg.anc_settings()).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("frequency", trace.frequency)?;
    d.set_item("method", trace.method.clone())?;
    d.set_item(
        "noise_level_db",
        trace.records.iter().map(|r| r.noise_level_db).collect::<Vec<_>>(),
    )?;
    d.set_item("final_noise_level_db", trace.final_noise_level_db)?;
    d.set_item("final_weights", trace.final_weights.as_slice().to_vec())?;
    Ok(d)
}

/// Signal-to-distortion ratio in dB.
#[pyfunction]
fn sdr(truth: Vec<Complex64>, reproduced: Vec<Complex64>) -> PyResult<f64> {
    metrics::sdr(&truth, &reproduced).map_err(err)
}

/// Residual-to-initial power ratio in dB.
#[pyfunction]
fn noise_level(residual: Vec<Complex64>, initial: Vec<Complex64>) -> PyResult<f64> {
    metrics::noise_level_values(&residual, &initial).map_err(err)
}

/// Runs a canned experiment and returns the written CSV paths.
#[pyfunction]
#[pyo3(signature = (name, out_dir, config_toml = None))]
fn run_experiment(py: Python<'_>, name: &str, out_dir: PathBuf, config_toml: Option<&str>) -> PyResult<Vec<String>> {
    let experiment: Experiment = name.parse().map_err(err)?;
    let cfg = config(config_toml)?;
    let files = py
        .detach(|| harness::run_experiment(experiment, &cfg, &out_dir))
        .map_err(err)?;
    Ok(files.into_iter().map(|p| p.display().to_string()).collect())
}

/// Built-in default configuration as TOML.
#[pyfunction]
fn default_config() -> String {
    RunConfig::default().to_toml()
}

#[pymodule(name = "spatial_anc")]
fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyArrayGeometry>()?;
    m.add_class::<PyScene>()?;
    m.add_class::<PyDictionary>()?;
    m.add_function(wrap_pyfunction!(bessel_j, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_y, m)?)?;
    m.add_function(wrap_pyfunction!(hankel2, m)?)?;
    m.add_function(wrap_pyfunction!(wavenumber, m)?)?;
    m.add_function(wrap_pyfunction!(extract_modes, m)?)?;
    m.add_function(wrap_pyfunction!(modes_from_plane_waves, m)?)?;
    m.add_function(wrap_pyfunction!(secondary_path, m)?)?;
    m.add_function(wrap_pyfunction!(run_anc, m)?)?;
    m.add_function(wrap_pyfunction!(sdr, m)?)?;
    m.add_function(wrap_pyfunction!(noise_level, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    Ok(())
}
