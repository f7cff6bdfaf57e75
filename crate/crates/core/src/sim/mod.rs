//! Nonlinear quasi-static solvers for the two bench experiments: tip-load
//! deflection sweeps and the constrained-tip (perching) base-motion benchmark.
//!
//! Tendons are modeled as linear springs with rate `E_T A / L` behind
//! position-locked motors, and they can only pull:
//! `τ(ψ) = max(0, τ₀ − K_q (q(ψ) − q_cmd))`.

mod deflection;
mod oracle;
mod perching;

pub use deflection::{
    external_work, run_stiffness_sweep, solve_deflection, DeflectionModel, DeflectionRecord,
    LoadDirection, LoadSchedule, StiffnessSweepPoint, TipLoad,
};
pub use oracle::finite_difference_oracle;
pub use perching::{
    perching_offsets, run_perching_sweep, solve_perching_reaction, PerchingOptions,
    PerchingRecord, PerchingSweepPoint,
};

use nalgebra::DVector;

use crate::kinematics::joints_at;
use crate::params::ArmParameters;
use crate::statics::{allocate_tensions, energy_at};
use crate::types::{Configuration, Wrench};
use crate::Result;

/// Standard gravity, used to turn gram-denominated loads into newtons.
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Newton solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Convergence bound on the configuration-space residual (N·m).
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Step shrink factor of the backtracking line search.
    pub backtrack: f64,
    /// Largest accepted tip-force magnitude (N).
    pub force_cap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 100,
            backtrack: 0.5,
            force_cap: 2.0,
        }
    }
}

/// Pull-only linear tendons anchored at a commanded configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TendonLaw {
    /// Per-tendon spring rate (N/m).
    pub rate: f64,
    /// Displacement at which each tendon goes slack: `q_cmd + τ₀ / k`.
    pub slack_point: DVector<f64>,
}

impl TendonLaw {
    /// Locks the motors at `commanded`, preloaded with the minimum-norm tensions
    /// that hold it unloaded with every tendon at least `pretension`.
    pub fn locked_at(params: &ArmParameters, commanded: &Configuration, pretension: f64) -> Result<Self> {
        let report = allocate_tensions(params, commanded, &Wrench::zero(), pretension)?;
        let rate = params.tendon_axial_stiffness();
        let q_cmd = joints_at(params, commanded.theta(), commanded.delta());
        Ok(Self {
            rate,
            slack_point: q_cmd + report.tensions / rate,
        })
    }

    /// Tendon elongation beyond its natural length; negative when slack.
    pub fn stretch(&self, params: &ArmParameters, theta: f64, delta: f64) -> DVector<f64> {
        &self.slack_point - joints_at(params, theta, delta)
    }

    pub fn tensions(&self, params: &ArmParameters, theta: f64, delta: f64) -> DVector<f64> {
        self.stretch(params, theta, delta)
            .map(|s| self.rate * s.max(0.0))
    }

    /// Diagonal of `∂τ/∂(−q)`: the rate for taut tendons, zero for slack ones.
    pub fn active_rates(&self, params: &ArmParameters, theta: f64, delta: f64) -> DVector<f64> {
        self.stretch(params, theta, delta)
            .map(|s| if s > 0.0 { self.rate } else { 0.0 })
    }

    /// Backbone bending energy plus the elastic energy of the taut tendons.
    pub fn stored_energy(&self, params: &ArmParameters, psi: &Configuration) -> f64 {
        let tendon: f64 = self
            .stretch(params, psi.theta(), psi.delta())
            .iter()
            .map(|&s| 0.5 * self.rate * s.max(0.0).powi(2))
            .sum();
        energy_at(params, psi.theta()) + tendon
    }
}
