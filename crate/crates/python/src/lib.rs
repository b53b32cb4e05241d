//! Python bindings: scenarios, landscapes, trade-offs, sweeps and the
//! single-state correction.

use birefsim::config::{load_config_or_preset, ScenarioConfig};
use birefsim::correction::optimal_correction as core_correction;
use birefsim::experiment::{run_scenario, sweep_deliberate, tradeoff_curve, ScenarioResult, TRADEOFF_SAMPLES};
use birefsim::herald::{raw_fidelity as core_raw_fidelity, BellPhase, ConditionalState, HeraldPattern};
use birefsim::landscape::{FidelityKind, HeraldLandscape, Region};
use birefsim::model::C64;
use birefsim::output::{landscape_csv, parse_landscape_csv};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: birefsim::Error) -> PyErr {
    if e.is_solver_failure() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn kind(s: &str) -> PyResult<FidelityKind> {
    match s {
        "raw" => Ok(FidelityKind::Raw),
        "corrected" => Ok(FidelityKind::Corrected),
        _ => Err(PyValueError::new_err(format!("fidelity kind '{s}': expected raw or corrected"))),
    }
}

fn phase(s: &str) -> PyResult<BellPhase> {
    match s {
        "plus" | "+" => Ok(BellPhase::Plus),
        "minus" | "-" => Ok(BellPhase::Minus),
        _ => Err(PyValueError::new_err(format!("Bell phase '{s}': expected plus or minus"))),
    }
}

/// A scenario config, loaded from a preset name, a file or TOML text.
#[pyclass(name = "Scenario", module = "pybirefsim", from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyScenario {
    /// Preset name or path to a TOML scenario file.
    #[staticmethod]
    fn load(spec: &str) -> PyResult<Self> {
        Ok(PyScenario { inner: load_config_or_preset(spec).map_err(err)? })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(PyScenario { inner: ScenarioConfig::from_toml(text).map_err(err)? })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml().map_err(err)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn resolution(&self) -> usize {
        self.inner.landscape.resolution
    }

    #[setter]
    fn set_resolution(&mut self, n: usize) -> PyResult<()> {
        let mut next = self.inner.clone();
        next.landscape.resolution = n;
        next.validate().map_err(err)?;
        self.inner = next;
        Ok(())
    }

    #[getter]
    fn patterns(&self) -> Vec<String> {
        self.inner.landscape.patterns.iter().map(|p| p.to_string()).collect()
    }

    #[setter]
    fn set_patterns(&mut self, patterns: Vec<String>) -> PyResult<()> {
        let parsed = patterns
            .iter()
            .map(|p| p.parse::<HeraldPattern>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        let mut next = self.inner.clone();
        next.landscape.patterns = parsed;
        next.validate().map_err(err)?;
        self.inner = next;
        Ok(())
    }

    /// Ω_B values of the study, in run order.
    fn study_values(&self) -> Vec<f64> {
        self.inner.study_values()
    }

    /// One study point at node-B splitting `omega_b`.
    fn run(&self, py: Python<'_>, omega_b: f64) -> PyResult<PyScenarioResult> {
        let cfg = self.inner.clone();
        let r = py.detach(move || run_scenario(&cfg, omega_b)).map_err(err)?;
        Ok(PyScenarioResult::from(r))
    }

    /// Average fidelities and success probability against deliberate
    /// splitting; defaults to the config's sweep values.
    #[pyo3(signature = (delta_b=None))]
    fn sweep(&self, py: Python<'_>, delta_b: Option<Vec<f64>>) -> PyResult<Vec<PySweepPoint>> {
        let values = match delta_b {
            Some(v) => v,
            None => self
                .inner
                .sweep
                .as_ref()
                .map(|s| s.delta_b.clone())
                .ok_or_else(|| PyValueError::new_err("scenario has no sweep section"))?,
        };
        let cfg = self.inner.clone();
        let result = py.detach(move || sweep_deliberate(&cfg, &values)).map_err(err)?;
        Ok(result
            .points
            .into_iter()
            .map(|p| PySweepPoint {
                delta_b: p.delta_b,
                average_raw: p.average_raw,
                average_corrected: p.average_corrected,
                success_total: p.success_total,
                rabi_down: p.rabi_down,
                rabi_up: p.rabi_up,
            })
            .collect())
    }
}

/// Fidelity, density and correction fields over detection times.
/// Fields are flat, row-major over (t_h, t_v).
#[pyclass(name = "Landscape", module = "pybirefsim", from_py_object)]
#[derive(Clone)]
struct PyLandscape {
    inner: HeraldLandscape,
}

#[pymethods]
impl PyLandscape {
    #[staticmethod]
    #[pyo3(signature = (text, pattern="cc"))]
    fn from_csv(text: &str, pattern: &str) -> PyResult<Self> {
        let pattern = pattern.parse().map_err(err)?;
        Ok(PyLandscape { inner: parse_landscape_csv(text, pattern).map_err(err)? })
    }

    fn to_csv(&self) -> String {
        landscape_csv(&self.inner)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    #[getter]
    fn pattern(&self) -> String {
        self.inner.pattern.to_string()
    }

    #[getter]
    fn t_h(&self) -> Vec<f64> {
        self.inner.t_h.clone()
    }

    #[getter]
    fn t_v(&self) -> Vec<f64> {
        self.inner.t_v.clone()
    }

    #[getter]
    fn f_raw(&self) -> Vec<f64> {
        self.inner.f_raw.clone()
    }

    #[getter]
    fn f_corr(&self) -> Vec<f64> {
        self.inner.f_corr.clone()
    }

    #[getter]
    fn density(&self) -> Vec<f64> {
        self.inner.density.clone()
    }

    #[getter]
    fn corr_angle(&self) -> Vec<f64> {
        self.inner.corr_angle.clone()
    }

    #[getter]
    fn corr_azimuth(&self) -> Vec<f64> {
        self.inner.corr_azimuth.clone()
    }

    fn success_probability(&self) -> PyResult<f64> {
        self.inner.success_probability(&Region::Full).map_err(err)
    }

    /// Density-weighted average of the `kind` fidelity ("raw" or "corrected").
    fn integrated_fidelity(&self, kind_name: &str) -> PyResult<f64> {
        self.inner.integrated_fidelity(kind(kind_name)?, &Region::Full).map_err(err)
    }

    /// Retained success probability per threshold plus, for each target
    /// average, `(target, retained, min_fidelity or None)`.
    #[pyo3(signature = (kind_name, targets=vec![0.99, 0.999]))]
    fn tradeoff(&self, kind_name: &str, targets: Vec<f64>) -> PyResult<PyTradeoff> {
        let c = tradeoff_curve(std::slice::from_ref(&self.inner), kind(kind_name)?, &targets, TRADEOFF_SAMPLES)
            .map_err(err)?;
        Ok(PyTradeoff {
            total: c.total,
            thresholds: c.thresholds,
            retained: c.retained,
            marks: c.marks.iter().map(|m| (m.target_average, m.retained, m.min_fidelity)).collect(),
        })
    }
}

#[pyclass(name = "Tradeoff", module = "pybirefsim", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyTradeoff {
    total: f64,
    thresholds: Vec<f64>,
    retained: Vec<f64>,
    marks: Vec<(f64, f64, Option<f64>)>,
}

#[pyclass(name = "ScenarioResult", module = "pybirefsim", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyScenarioResult {
    omega_b: f64,
    average_raw: f64,
    average_corrected: f64,
    /// Herald probability summed over all four click patterns.
    success_total: f64,
    /// Herald probability over the configured patterns.
    success_patterns: f64,
    /// Peak Rabi frequencies (down tone, up tone) after calibration.
    rabi_node_a: (f64, f64),
    rabi_node_b: (f64, f64),
    landscapes: Vec<PyLandscape>,
    times: Vec<f64>,
    /// Six basis populations of the birefringent node over `times`.
    populations: Vec<Vec<f64>>,
}

impl From<ScenarioResult> for PyScenarioResult {
    fn from(r: ScenarioResult) -> Self {
        let rabi = |p: &birefsim::model::SystemParams| (p.drive.down.rabi_peak, p.drive.up.rabi_peak);
        let traj = &r.node_b.trajectory;
        PyScenarioResult {
            omega_b: r.omega_b,
            average_raw: r.average_raw,
            average_corrected: r.average_corrected,
            success_total: r.success_total,
            success_patterns: r.success_patterns,
            rabi_node_a: rabi(&r.node_a.params),
            rabi_node_b: rabi(&r.node_b.params),
            times: traj.grid.times(),
            populations: (0..6).map(|k| traj.populations(k)).collect(),
            landscapes: r.landscapes.into_iter().map(|inner| PyLandscape { inner }).collect(),
        }
    }
}

#[pyclass(name = "SweepPoint", module = "pybirefsim", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PySweepPoint {
    delta_b: f64,
    average_raw: f64,
    average_corrected: f64,
    success_total: f64,
    rabi_down: f64,
    rabi_up: f64,
}

#[pyclass(name = "Correction", module = "pybirefsim", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyCorrection {
    fidelity_corrected: f64,
    /// Node-B unitary as rows of complex entries.
    unitary: [[C64; 2]; 2],
    rotation_angle: f64,
    rotation_axis: [f64; 3],
    azimuth: f64,
}

/// Two-qubit state from amplitudes over |↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩.
fn state(amps: [C64; 4]) -> ConditionalState {
    ConditionalState { t_h: 0.0, t_v: 0.0, amps }
}

/// Best node-B unitary for a two-qubit state against the Bell state of the
/// given phase.
#[pyfunction]
#[pyo3(signature = (amps, bell_phase="plus"))]
fn optimal_correction(amps: [C64; 4], bell_phase: &str) -> PyResult<PyCorrection> {
    let c = core_correction(&state(amps), phase(bell_phase)?).map_err(err)?;
    let u = c.unitary;
    Ok(PyCorrection {
        fidelity_corrected: c.fidelity_corrected,
        unitary: [[u[(0, 0)], u[(0, 1)]], [u[(1, 0)], u[(1, 1)]]],
        rotation_angle: c.rotation_angle,
        rotation_axis: c.rotation_axis,
        azimuth: c.azimuth,
    })
}

#[pyfunction]
#[pyo3(signature = (amps, bell_phase="plus"))]
fn raw_fidelity(amps: [C64; 4], bell_phase: &str) -> PyResult<f64> {
    core_raw_fidelity(&state(amps), phase(bell_phase)?).map_err(err)
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    birefsim::config::PRESET_NAMES.to_vec()
}

#[pymodule]
fn pybirefsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyLandscape>()?;
    m.add_class::<PyTradeoff>()?;
    m.add_class::<PyScenarioResult>()?;
    m.add_class::<PySweepPoint>()?;
    m.add_class::<PyCorrection>()?;
    m.add_function(wrap_pyfunction!(optimal_correction, m)?)?;
    m.add_function(wrap_pyfunction!(raw_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
