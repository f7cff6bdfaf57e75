//! Quasi-static model of a single-segment, four-tendon, constant-curvature
//! continuum arm: kinematics, statics, stiffness and the nonlinear bench
//! solvers built on them.
//!
//! Configurations are `(θ, δ)`: total bending angle and bending-plane
//! direction. All quantities are SI; angles are radians.

pub mod error;
pub mod kinematics;
pub mod params;
pub mod sim;
pub mod so3;
pub mod statics;
pub mod stiffness;
pub mod types;

pub use error::{Error, Result};
pub use kinematics::{
    configuration_to_joints, forward_kinematics, jacobian_q_psi, jacobian_v_psi, jacobian_w_psi,
    jacobian_w_psi_vectorized, jacobian_x_psi, jacobians, sample_backbone, BackboneSample,
};
pub use params::{ArmParameters, ParamWarning};
pub use statics::{
    allocate_tensions, elastic_energy, energy_gradient, equilibrium_residual, generalized_force,
    EquilibriumReport,
};
pub use stiffness::{
    configuration_stiffness, stiffness_set, task_stiffness, TaskStiffnessOptions, TendonCoupling,
};
pub use types::{Configuration, JacobianSet, JointState, Pose, StiffnessSet, Wrench};
