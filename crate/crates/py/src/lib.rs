//! Python bindings: `import continuum_arm`.
//!
//! Vectors and matrices cross the boundary as (nested) lists of floats;
//! records come back as dicts.

use continuum_core::sim::{self, LoadDirection, PerchingOptions, SolverOptions};
use continuum_core::stiffness::DEFAULT_DAMPING;
use continuum_core::{self as core, Error};
use nalgebra::{DVector, Dim, Matrix, RawStorage, Vector2, Vector3};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(continuum_arm, SingularError, PyException, "Linearization point is singular.");
create_exception!(continuum_arm, SolverError, PyException, "Nonlinear solve failed.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Singular { .. } => SingularError::new_err(e.to_string()),
        Error::Infeasible { .. }
        | Error::NonConvergence { .. }
        | Error::ForceCapExceeded { .. }
        | Error::Unreachable { .. }
        | Error::SweepPoint { .. } => SolverError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn rows<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn vec3(v: [f64; 3]) -> Vector3<f64> {
    Vector3::from(v)
}

#[pyclass(name = "ArmParameters", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyArmParameters {
    inner: core::ArmParameters,
}

#[pymethods]
impl PyArmParameters {
    /// Built-in defaults, optionally overridden field by field.
    #[new]
    #[pyo3(signature = (*, backbone_length=None, pitch_radius=None, tendon_division_angle=None, tendon_count=None,
        backbone_youngs_modulus=None, backbone_second_moment=None, tendon_youngs_modulus=None, tendon_cross_section=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        backbone_length: Option<f64>,
        pitch_radius: Option<f64>,
        tendon_division_angle: Option<f64>,
        tendon_count: Option<usize>,
        backbone_youngs_modulus: Option<f64>,
        backbone_second_moment: Option<f64>,
        tendon_youngs_modulus: Option<f64>,
        tendon_cross_section: Option<f64>,
    ) -> PyResult<Self> {
        let d = core::ArmParameters::default();
        let inner = core::ArmParameters {
            backbone_length: backbone_length.unwrap_or(d.backbone_length),
            pitch_radius: pitch_radius.unwrap_or(d.pitch_radius),
            tendon_division_angle: tendon_division_angle.unwrap_or(d.tendon_division_angle),
            tendon_count: tendon_count.unwrap_or(d.tendon_count),
            backbone_youngs_modulus: backbone_youngs_modulus.unwrap_or(d.backbone_youngs_modulus),
            backbone_second_moment: backbone_second_moment.unwrap_or(d.backbone_second_moment),
            tendon_youngs_modulus: tendon_youngs_modulus.unwrap_or(d.tendon_youngs_modulus),
            tendon_cross_section: tendon_cross_section.unwrap_or(d.tendon_cross_section),
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let (inner, _) = core::ArmParameters::from_toml_str(text).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        let (inner, _) = core::ArmParameters::from_file(path).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    #[getter]
    fn backbone_length(&self) -> f64 {
        self.inner.backbone_length
    }
    #[getter]
    fn pitch_radius(&self) -> f64 {
        self.inner.pitch_radius
    }
    #[getter]
    fn tendon_count(&self) -> usize {
        self.inner.tendon_count
    }
    #[getter]
    fn bending_rigidity(&self) -> f64 {
        self.inner.bending_rigidity()
    }
    #[getter]
    fn tendon_axial_stiffness(&self) -> f64 {
        self.inner.tendon_axial_stiffness()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "Configuration", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyConfiguration {
    inner: core::Configuration,
}

#[pymethods]
impl PyConfiguration {
    /// `(θ, δ)` in radians, canonicalized to `θ ≥ 0`, `δ ∈ (−π, π]`.
    #[new]
    fn new(theta: f64, delta: f64) -> PyResult<Self> {
        Ok(Self {
            inner: core::Configuration::new(theta, delta).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_degrees(theta_deg: f64, delta_deg: f64) -> PyResult<Self> {
        Ok(Self {
            inner: core::Configuration::from_degrees(theta_deg, delta_deg).map_err(to_py)?,
        })
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta()
    }
    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    fn __repr__(&self) -> String {
        format!("Configuration(theta={}, delta={})", self.inner.theta(), self.inner.delta())
    }
}

impl From<core::Configuration> for PyConfiguration {
    fn from(inner: core::Configuration) -> Self {
        Self { inner }
    }
}

type Pose = (Vec<f64>, Vec<Vec<f64>>);
type Sample = (f64, Vec<f64>, Vec<f64>);

/// `(position, rotation)` of the end disk.
#[pyfunction]
fn forward_kinematics(params: &PyArmParameters, psi: &PyConfiguration) -> Pose {
    let pose = core::forward_kinematics(&params.inner, &psi.inner);
    (pose.position.as_slice().to_vec(), rows(&pose.rotation))
}

/// `[(arc_position, point, tangent), ...]` along the backbone.
#[pyfunction]
fn sample_backbone(
    params: &PyArmParameters,
    psi: &PyConfiguration,
    count: usize,
) -> PyResult<Vec<Sample>> {
    Ok(core::sample_backbone(&params.inner, &psi.inner, count)
        .map_err(to_py)?
        .into_iter()
        .map(|s| (s.arc_position, s.point.as_slice().to_vec(), s.tangent.as_slice().to_vec()))
        .collect())
}

#[pyfunction]
fn configuration_to_joints(params: &PyArmParameters, psi: &PyConfiguration) -> Vec<f64> {
    core::configuration_to_joints(&params.inner, &psi.inner)
        .displacements
        .as_slice()
        .to_vec()
}

#[pyfunction]
fn jacobian_q_psi(params: &PyArmParameters, psi: &PyConfiguration) -> Vec<Vec<f64>> {
    rows(&core::jacobian_q_psi(&params.inner, &psi.inner))
}

#[pyfunction]
fn jacobian_v_psi(params: &PyArmParameters, psi: &PyConfiguration) -> Vec<Vec<f64>> {
    rows(&core::jacobian_v_psi(&params.inner, &psi.inner))
}

#[pyfunction]
fn jacobian_w_psi(params: &PyArmParameters, psi: &PyConfiguration) -> Vec<Vec<f64>> {
    rows(&core::jacobian_w_psi(&params.inner, &psi.inner))
}

#[pyfunction]
fn jacobian_w_psi_vectorized(params: &PyArmParameters, psi: &PyConfiguration) -> Vec<Vec<f64>> {
    rows(&core::jacobian_w_psi_vectorized(&params.inner, &psi.inner))
}

#[pyfunction]
fn jacobian_x_psi(params: &PyArmParameters, psi: &PyConfiguration) -> Vec<Vec<f64>> {
    rows(&core::jacobian_x_psi(&params.inner, &psi.inner))
}

#[pyfunction]
fn elastic_energy(params: &PyArmParameters, psi: &PyConfiguration) -> f64 {
    core::elastic_energy(&params.inner, &psi.inner)
}

fn wrench(force: [f64; 3], moment: [f64; 3]) -> PyResult<core::Wrench> {
    core::Wrench::new(vec3(force), vec3(moment)).map_err(to_py)
}

/// Minimum-norm tensions `≥ pretension` holding `psi` under the tip wrench.
#[pyfunction]
#[pyo3(signature = (params, psi, force=[0.0; 3], moment=[0.0; 3], pretension=0.0))]
fn allocate_tensions<'py>(
    py: Python<'py>,
    params: &PyArmParameters,
    psi: &PyConfiguration,
    force: [f64; 3],
    moment: [f64; 3],
    pretension: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let report =
        core::allocate_tensions(&params.inner, &psi.inner, &wrench(force, moment)?, pretension).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("tensions", report.tensions.as_slice().to_vec())?;
    d.set_item("residual", report.residual.as_slice().to_vec())?;
    d.set_item("generalized_force", report.generalized_force.as_slice().to_vec())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (params, psi, tensions, force=[0.0; 3], moment=[0.0; 3]))]
fn equilibrium_residual(
    params: &PyArmParameters,
    psi: &PyConfiguration,
    tensions: Vec<f64>,
    force: [f64; 3],
    moment: [f64; 3],
) -> PyResult<Vec<f64>> {
    let r = core::equilibrium_residual(&params.inner, &psi.inner, &DVector::from_vec(tensions), &wrench(force, moment)?)
        .map_err(to_py)?;
    Ok(r.as_slice().to_vec())
}

fn coupling(name: &str) -> PyResult<core::TendonCoupling> {
    match name {
        "slackening" => Ok(core::TendonCoupling::Slackening),
        "tightening" => Ok(core::TendonCoupling::Tightening),
        other => Err(PyValueError::new_err(format!(
            "coupling must be 'slackening' or 'tightening', got {other:?}"
        ))),
    }
}

#[pyfunction]
#[pyo3(signature = (params, psi, tensions, coupling="slackening"))]
fn configuration_stiffness(
    params: &PyArmParameters,
    psi: &PyConfiguration,
    tensions: Vec<f64>,
    coupling: &str,
) -> PyResult<Vec<Vec<f64>>> {
    let k = core::configuration_stiffness(&params.inner, &psi.inner, &DVector::from_vec(tensions), self::coupling(coupling)?)
        .map_err(to_py)?;
    Ok(rows(&k))
}

/// `K_X`; `f_star=None` uses the generalized force implied by the tensions.
#[pyfunction]
#[pyo3(signature = (params, psi, tensions, f_star=None, damped=false, coupling="slackening"))]
fn task_stiffness(
    params: &PyArmParameters,
    psi: &PyConfiguration,
    tensions: Vec<f64>,
    f_star: Option<[f64; 2]>,
    damped: bool,
    coupling: &str,
) -> PyResult<Vec<Vec<f64>>> {
    let tau = DVector::from_vec(tensions);
    let f_star = match f_star {
        Some(f) => Vector2::from(f),
        None => core::generalized_force(&params.inner, &psi.inner, &tau).map_err(to_py)?,
    };
    let opts = core::TaskStiffnessOptions {
        coupling: self::coupling(coupling)?,
        damping: damped.then_some(DEFAULT_DAMPING),
        ..Default::default()
    };
    let k = core::task_stiffness(&params.inner, &psi.inner, &tau, &f_star, &opts).map_err(to_py)?;
    Ok(rows(&k))
}

fn deflection_dict<'py>(py: Python<'py>, rec: &sim::DeflectionRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("applied_force", rec.applied_force.as_slice().to_vec())?;
    d.set_item("equilibrium_config", PyConfiguration::from(rec.equilibrium_config))?;
    d.set_item("tip_displacement", rec.tip_displacement.as_slice().to_vec())?;
    d.set_item("solver_iterations", rec.solver_iterations)?;
    d.set_item("residual_norm", rec.residual_norm)?;
    d.set_item("tensions", rec.tensions.as_slice().to_vec())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (params, commanded, tip_force, pretension=0.0))]
fn solve_deflection<'py>(
    py: Python<'py>,
    params: &PyArmParameters,
    commanded: &PyConfiguration,
    tip_force: [f64; 3],
    pretension: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let rec = sim::solve_deflection(&params.inner, &commanded.inner, &vec3(tip_force), pretension, &SolverOptions::default())
        .map_err(to_py)?;
    deflection_dict(py, &rec)
}

/// Radial-load sweep; one record per (configuration, load), in input order.
#[pyfunction]
#[pyo3(signature = (params, configs, loads, direction="inward", pretension=0.0))]
fn run_stiffness_sweep<'py>(
    py: Python<'py>,
    params: &PyArmParameters,
    configs: Vec<PyConfiguration>,
    loads: Vec<f64>,
    direction: &str,
    pretension: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let direction = match direction {
        "inward" => LoadDirection::Inward,
        "outward" => LoadDirection::Outward,
        other => return Err(PyValueError::new_err(format!("direction must be 'inward' or 'outward', got {other:?}"))),
    };
    let configs: Vec<_> = configs.into_iter().map(|c| c.inner).collect();
    let params = params.inner;
    let points = py.detach(|| {
        sim::run_stiffness_sweep(&params, &configs, &loads, direction, pretension, &SolverOptions::default())
    });
    points
        .into_iter()
        .map(|pt| {
            let d = deflection_dict(py, &pt.into_record().map_err(to_py)?)?;
            Ok(d)
        })
        .collect()
}

fn perching_dict<'py>(py: Python<'py>, rec: &sim::PerchingRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("base_offset", rec.base_offset.as_slice().to_vec())?;
    d.set_item("reaction_force", rec.reaction_force.as_slice().to_vec())?;
    d.set_item("reaction_moment", rec.reaction_moment.as_slice().to_vec())?;
    d.set_item("equilibrium_config", PyConfiguration::from(rec.equilibrium_config))?;
    d.set_item("tip_miss", rec.tip_miss.as_slice().to_vec())?;
    d.set_item("ik_iterations", rec.ik_iterations)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (params, commanded, tip_anchor, base_offset, pretension=0.0))]
fn solve_perching_reaction<'py>(
    py: Python<'py>,
    params: &PyArmParameters,
    commanded: &PyConfiguration,
    tip_anchor: [f64; 3],
    base_offset: [f64; 3],
    pretension: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = PerchingOptions {
        pretension,
        ..Default::default()
    };
    let rec = sim::solve_perching_reaction(&params.inner, &commanded.inner, &vec3(tip_anchor), &vec3(base_offset), &opts)
        .map_err(to_py)?;
    perching_dict(py, &rec)
}

/// Out-and-back base travel with the tip clamped at its unloaded position.
#[pyfunction]
#[pyo3(signature = (params, commanded, travel=0.010, steps=10, axis=[1.0, 0.0, 0.0], pretension=0.0))]
fn run_perching_sweep<'py>(
    py: Python<'py>,
    params: &PyArmParameters,
    commanded: &PyConfiguration,
    travel: f64,
    steps: usize,
    axis: [f64; 3],
    pretension: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let offsets = sim::perching_offsets(travel, steps, &vec3(axis));
    let opts = PerchingOptions {
        pretension,
        ..Default::default()
    };
    let (params, psi) = (params.inner, commanded.inner);
    let points = py
        .detach(|| sim::run_perching_sweep(&params, &psi, &offsets, &opts))
        .map_err(to_py)?;
    points
        .into_iter()
        .map(|pt| perching_dict(py, &pt.outcome.map_err(to_py)?))
        .collect()
}

#[pymodule]
fn continuum_arm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyArmParameters>()?;
    m.add_class::<PyConfiguration>()?;
    m.add("SingularError", m.py().get_type::<SingularError>())?;
    m.add("SolverError", m.py().get_type::<SolverError>())?;
    m.add("STANDARD_GRAVITY", sim::STANDARD_GRAVITY)?;
    m.add_function(wrap_pyfunction!(forward_kinematics, m)?)?;
    m.add_function(wrap_pyfunction!(sample_backbone, m)?)?;
    m.add_function(wrap_pyfunction!(configuration_to_joints, m)?)?;
    m.add_function(wrap_pyfunction!(jacobian_q_psi, m)?)?;
    m.add_function(wrap_pyfunction!(jacobian_v_psi, m)?)?;
    m.add_function(wrap_pyfunction!(jacobian_w_psi, m)?)?;
    m.add_function(wrap_pyfunction!(jacobian_w_psi_vectorized, m)?)?;
    m.add_function(wrap_pyfunction!(jacobian_x_psi, m)?)?;
    m.add_function(wrap_pyfunction!(elastic_energy, m)?)?;
    m.add_function(wrap_pyfunction!(allocate_tensions, m)?)?;
    m.add_function(wrap_pyfunction!(equilibrium_residual, m)?)?;
    m.add_function(wrap_pyfunction!(configuration_stiffness, m)?)?;
    m.add_function(wrap_pyfunction!(task_stiffness, m)?)?;
    m.add_function(wrap_pyfunction!(solve_deflection, m)?)?;
    m.add_function(wrap_pyfunction!(run_stiffness_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(solve_perching_reaction, m)?)?;
    m.add_function(wrap_pyfunction!(run_perching_sweep, m)?)?;
    Ok(())
}
