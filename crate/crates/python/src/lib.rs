//! Python bindings: lattice and emitter specifications, time evolution,
//! self-energies, spectra, bound states and scenario runs.

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use skinbath::effective::dfi_report;
use skinbath::evolution::uniform_grid;
use skinbath::hyperbolic::{curvature, pseudosphere_sample};
use skinbath::selfenergy::{sigma_giant, SelfEnergyQuery};
use skinbath::spectra::{hidden_bound_state, obc_modes, pbc_spectrum, BoundStateOptions};
use skinbath::{
    assemble_hamiltonian, classify_regime, evolve, initial_state, Boundary, Complex64, CouplingPoint, EmitterSpec,
    IntegratorConfig, LatticeSpec, Method, SystemSpec,
};
use skinbath_cli::config::ScenarioConfig;
use skinbath_cli::error::CliError;
use skinbath_cli::run::{execute, Command};

fn numerical(e: skinbath::Error) -> PyErr {
    match CliError::from(e) {
        CliError::Numerical(e) => PyArithmeticError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn cli(e: CliError) -> PyErr {
    match e {
        CliError::Numerical(e) => PyArithmeticError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Hatano-Nelson lattice with hoppings `t_R = nu + gamma`, `t_L = nu - gamma`.
#[pyclass(name = "Lattice", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLattice {
    inner: LatticeSpec,
}

#[pymethods]
impl PyLattice {
    #[new]
    #[pyo3(signature = (sites, nu, gamma, loss = 0.0, boundary = "OBC"))]
    fn new(sites: usize, nu: f64, gamma: f64, loss: f64, boundary: &str) -> PyResult<Self> {
        let boundary = match boundary {
            "OBC" => Boundary::Open,
            "PBC" => Boundary::Periodic,
            other => return Err(PyValueError::new_err(format!("boundary must be OBC or PBC, got {other:?}"))),
        };
        Ok(Self { inner: LatticeSpec::open(sites, nu, gamma).with_loss(loss).with_boundary(boundary) })
    }

    #[getter]
    fn sites(&self) -> usize {
        self.inner.sites
    }

    #[getter]
    fn t_r(&self) -> f64 {
        self.inner.t_r()
    }

    #[getter]
    fn t_l(&self) -> f64 {
        self.inner.t_l()
    }

    #[getter]
    fn beta(&self) -> PyResult<f64> {
        self.inner.beta().map_err(numerical)
    }

    fn regime(&self) -> PyResult<String> {
        classify_regime(&self.inner).map(|r| r.to_string()).map_err(numerical)
    }

    /// Periodic-boundary spectrum at `k_count` evenly spaced momenta.
    #[pyo3(signature = (k_count = 512))]
    fn pbc_spectrum(&self, k_count: usize) -> PyResult<Vec<Complex64>> {
        let s = pbc_spectrum(&self.inner, k_count).map_err(numerical)?;
        Ok(s.points.iter().map(|p| p.energy).collect())
    }

    /// Analytic open-boundary modes as `(energy, profile)` pairs.
    fn obc_modes(&self) -> PyResult<Vec<(Complex64, Vec<f64>)>> {
        let modes = obc_modes(&self.inner).map_err(numerical)?;
        Ok(modes.into_iter().map(|m| (m.energy, m.profile)).collect())
    }

    fn __repr__(&self) -> String {
        let l = &self.inner;
        format!("Lattice(sites={}, nu={}, gamma={}, loss={})", l.sites, l.nu, l.gamma, l.onsite_loss)
    }
}

/// Emitter coupled to one or more lattice sites.
#[pyclass(name = "Emitter", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEmitter {
    inner: EmitterSpec,
}

#[pymethods]
impl PyEmitter {
    #[new]
    #[pyo3(signature = (label, couplings, detuning = 0.0))]
    fn new(label: String, couplings: Vec<(i64, f64)>, detuning: f64) -> Self {
        let points = couplings.into_iter().map(|(site, g)| CouplingPoint::new(site, g)).collect();
        Self { inner: EmitterSpec::new(label, points).with_detuning(detuning) }
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label.clone()
    }

    fn __repr__(&self) -> String {
        format!("Emitter({:?}, {} coupling points)", self.inner.label, self.inner.couplings.len())
    }
}

/// A lattice together with its emitters.
#[pyclass(name = "System", frozen, skip_from_py_object)]
struct PySystem {
    inner: SystemSpec,
}

#[pymethods]
impl PySystem {
    #[new]
    fn new(lattice: PyRef<'_, PyLattice>, emitters: Vec<PyRef<'_, PyEmitter>>) -> Self {
        let emitters = emitters.iter().map(|e| e.inner.clone()).collect();
        Self { inner: SystemSpec::new(lattice.inner.clone(), emitters) }
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    /// Evolves from a single excitation on `excited` and returns a dict with
    /// `times`, `populations` and `ln_populations` keyed by emitter label.
    #[pyo3(signature = (excited, t_max, samples, dt = None, rtol = None))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        excited: &str,
        t_max: f64,
        samples: usize,
        dt: Option<f64>,
        rtol: Option<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let cfg = match (dt, rtol) {
            (Some(dt), _) => IntegratorConfig::fixed(dt, t_max, samples),
            (None, Some(rtol)) => {
                IntegratorConfig::new(Method::Dopri5 { rtol, atol: rtol * 1e-3 }, uniform_grid(t_max, samples))
            }
            (None, None) => IntegratorConfig::adaptive(t_max, samples),
        };
        let spec = &self.inner;
        let traj = py
            .detach(|| {
                let h = assemble_hamiltonian(spec)?;
                evolve(&h, &initial_state(spec, excited)?, &cfg)
            })
            .map_err(numerical)?;
        let pops = PyDict::new(py);
        let lns = PyDict::new(py);
        for label in &traj.labels {
            pops.set_item(label, traj.population(label).map_err(numerical)?)?;
            lns.set_item(label, traj.ln_population(label).map_err(numerical)?)?;
        }
        let out = PyDict::new(py);
        out.set_item("times", traj.times.clone())?;
        out.set_item("populations", pops)?;
        out.set_item("ln_populations", lns)?;
        out.set_item("warnings", traj.warnings.clone())?;
        Ok(out)
    }

    /// Hidden bound state by shifted inverse iteration.
    #[pyo3(signature = (target = None, tol = 1e-10, max_iter = 200))]
    fn bound_state<'py>(
        &self,
        py: Python<'py>,
        target: Option<f64>,
        tol: f64,
        max_iter: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let opts = BoundStateOptions { target, tol, max_iter, ..BoundStateOptions::default() };
        let r = hidden_bound_state(&self.inner, &opts).map_err(numerical)?;
        let out = PyDict::new(py);
        out.set_item("energy", r.energy)?;
        out.set_item("residual", r.residual)?;
        out.set_item("converged", r.converged)?;
        out.set_item("modulus", r.modulus())?;
        out.set_item("amplitudes", r.amplitudes)?;
        Ok(out)
    }

    /// Reduced two-emitter description of a braided pair.
    fn dfi<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = dfi_report(&self.inner).map_err(numerical)?;
        let out = PyDict::new(py);
        out.set_item("is_dfi", r.is_dfi)?;
        out.set_item("nonreciprocity_ratio", r.nonreciprocity_ratio)?;
        out.set_item("omega", r.omega)?;
        out.set_item("period", r.period)?;
        Ok(out)
    }
}

/// Self-energy of a two-point emitter (`g` at the origin, `g_far` at
/// `separation`) at `delta + i eta`; on the real axis inside the band the
/// retarded branch is taken.
#[pyfunction]
#[pyo3(signature = (delta, g, g_far, separation, t_r, t_l, eta = 0.0))]
fn sigma(delta: f64, g: f64, g_far: f64, separation: u32, t_r: f64, t_l: f64, eta: f64) -> PyResult<Complex64> {
    let q = SelfEnergyQuery { z: Complex64::new(delta, eta), g_n: g, g_np: g_far, separation, t_r, t_l };
    sigma_giant(&q).map(|r| r.b).map_err(numerical)
}

#[pyfunction(name = "curvature")]
fn py_curvature(beta: f64) -> PyResult<f64> {
    curvature(beta).map_err(numerical)
}

/// Pseudosphere samples as `(u, v, w, residual)` tuples.
#[pyfunction]
#[pyo3(signature = (kappa, r_count = 32, theta_count = 48))]
fn pseudosphere(kappa: f64, r_count: usize, theta_count: usize) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let pts = pseudosphere_sample(kappa, r_count, theta_count).map_err(numerical)?;
    Ok(pts.iter().map(|p| (p.u, p.v, p.w, p.residual)).collect())
}

/// Runs a command on a JSON scenario config, writing outputs and
/// `manifest.json` into `out_dir`. Returns the written file names.
#[pyfunction]
fn run_scenario(py: Python<'_>, command: &str, config_json: &str, out_dir: PathBuf) -> PyResult<Vec<String>> {
    let command = [
        Command::Simulate,
        Command::Spectrum,
        Command::Selfenergy,
        Command::Boundstate,
        Command::Dfi,
        Command::Hyperbolic,
    ]
    .into_iter()
    .find(|c| c.name() == command)
    .ok_or_else(|| PyValueError::new_err(format!("unknown command {command:?}")))?;
    let cfg = ScenarioConfig::from_json_str(config_json).map_err(cli)?;
    let report = py.detach(|| execute(command, &cfg, &out_dir, None)).map_err(cli)?;
    Ok(report.files)
}

#[pymodule]
fn pyskinbath(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLattice>()?;
    m.add_class::<PyEmitter>()?;
    m.add_class::<PySystem>()?;
    m.add_function(wrap_pyfunction!(sigma, m)?)?;
    m.add_function(wrap_pyfunction!(py_curvature, m)?)?;
    m.add_function(wrap_pyfunction!(pseudosphere, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
