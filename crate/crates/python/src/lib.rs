//! Python bindings. Noise models are passed as JSON strings in the same
//! tagged form the CLI accepts, e.g. `{"kind": "depolarizing", "p": 0.01}`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use num_complex::Complex64;
use qudit_rb::analysis::{fit_decay, FitStatus};
use qudit_rb::gateset::{GateSet, GroupElement, Mode};
use qudit_rb::quantum_core::{NoiseModel, WeylBasis};
use qudit_rb::rbsim::{default_depths, ExperimentConfig, InitialState, Simulator};
use qudit_rb::twirl::{agf_from_eta, twirl, IrrepProjectors};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn noise(json: &str) -> PyResult<NoiseModel> {
    serde_json::from_str(json).map_err(err)
}

/// The single-qudit gate group. Elements are exchanged as strings such as
/// `"((23); (7,8,8))"`.
#[pyclass(name = "GateSet", frozen)]
struct PyGateSet {
    inner: GateSet,
}

impl PyGateSet {
    fn parse(&self, text: &str) -> PyResult<GroupElement> {
        self.inner.parse_element(text).map_err(err)
    }
}

#[pymethods]
impl PyGateSet {
    #[new]
    #[pyo3(signature = (d, mode = "maximal"))]
    fn new(d: usize, mode: &str) -> PyResult<Self> {
        let mode: Mode = mode.parse().map_err(err)?;
        Ok(Self { inner: GateSet::build(d, mode).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn order(&self) -> u128 {
        self.inner.group_order()
    }

    #[getter]
    fn cyclic_orders(&self) -> Vec<u64> {
        self.inner.cyclic_orders().to_vec()
    }

    fn identity(&self) -> String {
        self.inner.identity().to_string()
    }

    fn sample(&self, seed: u64) -> String {
        self.inner.sample_uniform(seed).to_string()
    }

    fn multiply(&self, a: &str, b: &str) -> PyResult<String> {
        let (a, b) = (self.parse(a)?, self.parse(b)?);
        Ok(self.inner.multiply(&a, &b).map_err(err)?.to_string())
    }

    fn invert(&self, g: &str) -> PyResult<String> {
        Ok(self.inner.invert(&self.parse(g)?).map_err(err)?.to_string())
    }

    /// The element that undoes `gates` applied left to right.
    fn invert_sequence(&self, gates: Vec<String>) -> PyResult<String> {
        let gates = gates.iter().map(|g| self.parse(g)).collect::<PyResult<Vec<_>>>()?;
        Ok(self.inner.invert_sequence(&gates).map_err(err)?.to_string())
    }

    /// Dense unitary as a list of rows of complex numbers.
    fn matrix(&self, g: &str) -> PyResult<Vec<Vec<Complex64>>> {
        let u = self.inner.representative(&self.parse(g)?).map_err(err)?;
        let m = u.matrix();
        Ok((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect())
    }

    fn elements(&self) -> PyResult<Vec<String>> {
        Ok(self.inner.elements().map_err(err)?.iter().map(ToString::to_string).collect())
    }

    fn __repr__(&self) -> String {
        format!("GateSet(d={}, mode='{}', order={})", self.inner.dim(), self.inner.mode(), self.inner.group_order())
    }
}

/// `(η_I, η_0, η_+)` of the twirled noise channel.
#[pyfunction]
fn twirl_parameters(noise_json: &str, d: usize) -> PyResult<(f64, f64, f64)> {
    let ch = noise(noise_json)?.superoperator(d).map_err(err)?;
    let basis = WeylBasis::new(d, 1).map_err(err)?;
    let t = twirl(&ch, &basis, &IrrepProjectors::new(&basis)).map_err(err)?;
    Ok((t.eta_i, t.eta_0, t.eta_plus))
}

/// Average gate fidelity of the noise channel, computed from its twirl.
#[pyfunction]
fn average_gate_fidelity(noise_json: &str, d: usize) -> PyResult<f64> {
    let (eta_i, eta_0, eta_plus) = twirl_parameters(noise_json, d)?;
    Ok(agf_from_eta(&qudit_rb::twirl::TwirledChannel { eta_i, eta_0, eta_plus }, d))
}

/// Simulate one RB experiment. Returns `(depth, mean, per-circuit frequencies)` per depth.
#[pyfunction]
#[pyo3(signature = (d, noise_json, depths = None, shots = 100, circuits = 100, seed = 0, initial_state = "zero", mode = "maximal"))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    d: usize,
    noise_json: &str,
    depths: Option<Vec<usize>>,
    shots: u64,
    circuits: usize,
    seed: u64,
    initial_state: &str,
    mode: &str,
) -> PyResult<Vec<(usize, f64, Vec<f64>)>> {
    let mut cfg = ExperimentConfig::new(d, noise(noise_json)?);
    cfg.depths = depths.unwrap_or_else(default_depths);
    cfg.shots = shots;
    cfg.circuits = circuits;
    cfg.seed = seed;
    cfg.initial_state = initial_state.parse::<InitialState>().map_err(err)?;
    cfg.gateset_mode = mode.parse().map_err(err)?;
    let sim = Simulator::new(cfg).map_err(err)?;
    let run = py.detach(|| sim.run());
    Ok(run.records.into_iter().map(|r| (r.depth, r.mean, r.frequencies)).collect())
}

/// Fit `A + B η^m`; returns a dict with `a`, `b`, `eta`, `eta_std_error`, `status`.
#[pyfunction]
fn fit<'py>(py: Python<'py>, depths: Vec<usize>, values: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let f = fit_decay(&depths, &values).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("a", f.a)?;
    out.set_item("b", f.b)?;
    out.set_item("eta", f.eta)?;
    out.set_item("eta_std_error", f.eta_std_error())?;
    out.set_item("residual_norm", f.residual_norm)?;
    let status = match f.status {
        FitStatus::Converged => "converged",
        FitStatus::Degenerate => "degenerate",
        FitStatus::NotConverged => "not_converged",
    };
    out.set_item("status", status)?;
    Ok(out)
}

/// Run the built-in verification suite; returns `(report, passed)`.
#[pyfunction]
#[pyo3(signature = (d, n = 1, seed = 0))]
fn verify(d: usize, n: usize, seed: u64) -> PyResult<(String, bool)> {
    qudit_rb::cli::verify_report(d, n, seed).map_err(err)
}

#[pymodule]
fn qudit_rb_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGateSet>()?;
    m.add_function(wrap_pyfunction!(twirl_parameters, m)?)?;
    m.add_function(wrap_pyfunction!(average_gate_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
