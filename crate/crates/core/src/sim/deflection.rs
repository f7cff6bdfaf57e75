use nalgebra::{DMatrix, Matrix2, Vector2, Vector3};
use rayon::prelude::*;

use super::{SolverOptions, TendonLaw, STANDARD_GRAVITY};
use crate::error::{Error, Result};
use crate::kinematics::{jacobian_q_at, jacobian_v_at, jacobian_v_partials, position_at};
use crate::params::ArmParameters;
use crate::statics::gradient_at;
use crate::stiffness::{configuration_stiffness_at, TendonCoupling};
use crate::types::Configuration;

/// In-plane radial load relative to the current bend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadDirection {
    /// Pushes the tip further along the bend (θ grows).
    Inward,
    /// Pushes against the bend.
    Outward,
}

impl LoadDirection {
    fn sign(self) -> f64 {
        match self {
            LoadDirection::Inward => 1.0,
            LoadDirection::Outward => -1.0,
        }
    }
}

/// External tip force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TipLoad {
    /// Constant base-frame force.
    Fixed(Vector3<f64>),
    /// Force of fixed magnitude kept perpendicular to the end-disk normal
    /// inside the bending plane, re-aimed as the arm deflects.
    Radial {
        magnitude: f64,
        direction: LoadDirection,
    },
}

impl TipLoad {
    fn magnitude(&self) -> f64 {
        match self {
            TipLoad::Fixed(f) => f.norm(),
            TipLoad::Radial { magnitude, .. } => magnitude.abs(),
        }
    }

    /// Force at `(θ, δ)` and its partials with respect to θ and δ.
    fn evaluate(&self, theta: f64, delta: f64) -> (Vector3<f64>, [Vector3<f64>; 2]) {
        match *self {
            TipLoad::Fixed(f) => (f, [Vector3::zeros(); 2]),
            TipLoad::Radial {
                magnitude,
                direction,
            } => {
                let m = magnitude * direction.sign();
                let (sd, cd) = delta.sin_cos();
                let (st, ct) = theta.sin_cos();
                (
                    m * Vector3::new(cd * ct, sd * ct, -st),
                    [
                        m * Vector3::new(-cd * st, -sd * st, -ct),
                        m * Vector3::new(-sd * ct, cd * ct, 0.0),
                    ],
                )
            }
        }
    }
}

/// One converged deflection solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflectionRecord {
    pub applied_force: Vector3<f64>,
    pub equilibrium_config: Configuration,
    /// Tip position change relative to the unloaded equilibrium.
    pub tip_displacement: Vector3<f64>,
    pub solver_iterations: usize,
    pub residual_norm: f64,
    pub tensions: nalgebra::DVector<f64>,
}

/// An arm with motors locked at a commanded configuration.
#[derive(Debug, Clone)]
pub struct DeflectionModel {
    pub params: ArmParameters,
    pub commanded: Configuration,
    pub law: TendonLaw,
    pub options: SolverOptions,
    reference: (f64, f64),
    reference_tip: Vector3<f64>,
}

struct Solution {
    theta: f64,
    delta: f64,
    iterations: usize,
    residual: f64,
}

impl DeflectionModel {
    pub fn new(
        params: &ArmParameters,
        commanded: &Configuration,
        pretension: f64,
        options: SolverOptions,
    ) -> Result<Self> {
        let law = TendonLaw::locked_at(params, commanded, pretension)?;
        let mut model = Self {
            params: *params,
            commanded: *commanded,
            law,
            options,
            reference: (commanded.theta(), commanded.delta()),
            reference_tip: Vector3::zeros(),
        };
        let unloaded = model.newton(&TipLoad::Fixed(Vector3::zeros()), model.reference)?;
        model.reference = (unloaded.theta, unloaded.delta);
        model.reference_tip = position_at(params.backbone_length, unloaded.theta, unloaded.delta);
        Ok(model)
    }

    /// Unloaded equilibrium configuration.
    pub fn reference_config(&self) -> Configuration {
        Configuration::new(self.reference.0, self.reference.1).expect("finite reference")
    }

    /// Configuration-space residual `∇E − J_qᵀτ(ψ) − J_vᵀF(ψ)` at raw angles.
    pub fn residual(&self, load: &TipLoad, theta: f64, delta: f64) -> Vector2<f64> {
        let p = &self.params;
        let tau = self.law.tensions(p, theta, delta);
        let (force, _) = load.evaluate(theta, delta);
        gradient_at(p, theta)
            - jacobian_q_at(p, theta, delta).transpose() * tau
            - jacobian_v_at(p.backbone_length, theta, delta).transpose() * force
    }

    fn tangent(&self, load: &TipLoad, theta: f64, delta: f64) -> Matrix2<f64> {
        let p = &self.params;
        let tau = self.law.tensions(p, theta, delta);
        let gain = DMatrix::from_diagonal(&self.law.active_rates(p, theta, delta));
        let structural =
            configuration_stiffness_at(p, theta, delta, &tau, &gain, TendonCoupling::Slackening);

        let (force, dforce) = load.evaluate(theta, delta);
        let l = p.backbone_length;
        let j_v = jacobian_v_at(l, theta, delta);
        let [dj_t, dj_d] = jacobian_v_partials(l, theta, delta);
        let geometric = Matrix2::from_columns(&[
            dj_t.transpose() * force + j_v.transpose() * dforce[0],
            dj_d.transpose() * force + j_v.transpose() * dforce[1],
        ]);
        structural - geometric
    }

    fn newton(&self, load: &TipLoad, start: (f64, f64)) -> Result<Solution> {
        let opts = &self.options;
        let (mut theta, mut delta) = start;
        let mut r = self.residual(load, theta, delta);
        let mut norm = r.norm();
        let mut iterations = 0;
        while norm >= opts.tolerance {
            if iterations == opts.max_iterations {
                return Err(Error::NonConvergence {
                    iterations,
                    residual: norm,
                });
            }
            iterations += 1;
            let k = self.tangent(load, theta, delta);
            let tol = 1e-12 * k.amax().max(f64::MIN_POSITIVE);
            let step = k
                .svd(true, true)
                .solve(&(-r), tol)
                .expect("svd computed with both factors");

            let mut alpha = 1.0;
            let mut best = (f64::INFINITY, theta, delta, r);
            for _ in 0..40 {
                let (t, d) = (theta + alpha * step[0], delta + alpha * step[1]);
                let rt = self.residual(load, t, d);
                let nt = rt.norm();
                if nt < best.0 {
                    best = (nt, t, d, rt);
                }
                if nt <= (1.0 - 1e-4 * alpha) * norm {
                    break;
                }
                alpha *= opts.backtrack;
            }
            (norm, theta, delta, r) = best;
        }
        Ok(Solution {
            theta,
            delta,
            iterations,
            residual: norm,
        })
    }

    /// Solves for the equilibrium under `load`, starting from the unloaded state.
    pub fn solve(&self, load: &TipLoad) -> Result<DeflectionRecord> {
        let magnitude = load.magnitude();
        if !magnitude.is_finite() {
            return Err(Error::NonFinite("tip force"));
        }
        if magnitude > self.options.force_cap {
            return Err(Error::ForceCapExceeded {
                magnitude,
                cap: self.options.force_cap,
            });
        }
        let sol = self.newton(load, self.reference)?;
        let (force, _) = load.evaluate(sol.theta, sol.delta);
        let tip = position_at(self.params.backbone_length, sol.theta, sol.delta);
        Ok(DeflectionRecord {
            applied_force: force,
            equilibrium_config: Configuration::new(sol.theta, sol.delta)?,
            tip_displacement: tip - self.reference_tip,
            solver_iterations: sol.iterations,
            residual_norm: sol.residual,
            tensions: self.law.tensions(&self.params, sol.theta, sol.delta),
        })
    }
}

/// Equilibrium of the arm locked at `commanded` under a constant tip force.
pub fn solve_deflection(
    params: &ArmParameters,
    commanded: &Configuration,
    tip_force: &Vector3<f64>,
    pretension: f64,
    options: &SolverOptions,
) -> Result<DeflectionRecord> {
    DeflectionModel::new(params, commanded, pretension, *options)?.solve(&TipLoad::Fixed(*tip_force))
}

/// Load/unload cycles of equal increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadSchedule {
    /// Load added per step (N).
    pub increment: f64,
    pub steps: usize,
    pub cycles: usize,
}

impl Default for LoadSchedule {
    /// Five cycles of five 20 g increments.
    fn default() -> Self {
        Self {
            increment: 0.020 * STANDARD_GRAVITY,
            steps: 5,
            cycles: 5,
        }
    }
}

impl LoadSchedule {
    /// Loads of a single cycle: `0, 1, …, steps, …, 1, 0` increments.
    pub fn cycle_loads(&self) -> Vec<f64> {
        (0..=self.steps)
            .chain((0..self.steps).rev())
            .map(|k| k as f64 * self.increment)
            .collect()
    }

    /// `(cycle index, load)` for every point of every cycle.
    pub fn loads(&self) -> Vec<(usize, f64)> {
        let one = self.cycle_loads();
        (0..self.cycles)
            .flat_map(|c| one.iter().map(move |&l| (c, l)))
            .collect()
    }
}

/// Outcome of one (configuration, load) point of a sweep.
#[derive(Debug)]
pub struct StiffnessSweepPoint {
    pub config: Configuration,
    pub load: f64,
    pub outcome: Result<DeflectionRecord>,
}

impl StiffnessSweepPoint {
    /// The record, or the failure annotated with its sweep coordinates.
    pub fn into_record(self) -> Result<DeflectionRecord> {
        let (config, load) = (self.config, self.load);
        self.outcome.map_err(|e| Error::SweepPoint {
            theta_deg: config.theta().to_degrees(),
            delta_deg: config.delta().to_degrees(),
            load,
            source: Box::new(e),
        })
    }
}

/// Radial-load sweep over several commanded configurations.
///
/// Every point is solved from the unloaded equilibrium, so the results do not
/// depend on load order and an unloading branch retraces the loading branch.
/// Configurations are solved in parallel; output keeps the input order.
pub fn run_stiffness_sweep(
    params: &ArmParameters,
    configs: &[Configuration],
    load_schedule: &[f64],
    direction: LoadDirection,
    pretension: f64,
    options: &SolverOptions,
) -> Vec<StiffnessSweepPoint> {
    configs
        .par_iter()
        .map(|config| {
            let model = DeflectionModel::new(params, config, pretension, *options);
            load_schedule
                .iter()
                .map(|&load| StiffnessSweepPoint {
                    config: *config,
                    load,
                    outcome: match &model {
                        Ok(m) => m.solve(&TipLoad::Radial {
                            magnitude: load,
                            direction,
                        }),
                        Err(e) => Err(clone_error(e)),
                    },
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn clone_error(e: &Error) -> Error {
    match e {
        Error::Infeasible { residual } => Error::Infeasible {
            residual: *residual,
        },
        Error::NonConvergence {
            iterations,
            residual,
        } => Error::NonConvergence {
            iterations: *iterations,
            residual: *residual,
        },
        other => Error::InvalidParameter {
            field: "commanded",
            reason: other.to_string(),
        },
    }
}

/// Trapezoidal work `Σ ½(F_k + F_{k+1})·(p_{k+1} − p_k)` along a load path.
pub fn external_work(records: &[DeflectionRecord]) -> f64 {
    records
        .windows(2)
        .map(|w| {
            0.5 * (w[0].applied_force + w[1].applied_force)
                .dot(&(w[1].tip_displacement - w[0].tip_displacement))
        })
        .sum()
}
