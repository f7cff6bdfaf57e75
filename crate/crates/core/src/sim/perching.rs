use nalgebra::{Matrix2, Vector2, Vector3};
use rayon::prelude::*;

use super::TendonLaw;
use crate::error::{Error, Result};
use crate::kinematics::{jacobian_q_at, jacobian_v_at, position_at};
use crate::params::ArmParameters;
use crate::statics::gradient_at;
use crate::stiffness::{jv_transpose_pseudo_inverse, SINGULAR_TOLERANCE};
use crate::types::Configuration;

/// Settings of the constrained-tip solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerchingOptions {
    /// Minimum tendon tension of the motor preload (N).
    pub pretension: f64,
    /// Bound on the reachable part of the tip miss (m).
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Levenberg damping of the Gauss–Newton step.
    pub damping: f64,
}

impl Default for PerchingOptions {
    fn default() -> Self {
        Self {
            pretension: 0.0,
            tolerance: 1e-8,
            max_iterations: 100,
            damping: 1e-6,
        }
    }
}

/// Reaction transmitted to the carrier for one base offset.
#[derive(Debug, Clone, PartialEq)]
pub struct PerchingRecord {
    pub base_offset: Vector3<f64>,
    pub reaction_force: Vector3<f64>,
    /// Moment of the reaction about the base origin.
    pub reaction_moment: Vector3<f64>,
    pub equilibrium_config: Configuration,
    /// Part of the anchor the arm cannot reach (`base + p(ψ) − anchor`).
    pub tip_miss: Vector3<f64>,
    pub ik_iterations: usize,
}

/// Least-squares IK of the tip onto `anchor − base_offset`, then the
/// reaction `−(J_vᵀ)†(∇E − J_qᵀτ(ψ))` with the motors locked at `commanded`.
pub fn solve_perching_reaction(
    params: &ArmParameters,
    commanded: &Configuration,
    tip_anchor: &Vector3<f64>,
    base_offset: &Vector3<f64>,
    options: &PerchingOptions,
) -> Result<PerchingRecord> {
    let law = TendonLaw::locked_at(params, commanded, options.pretension)?;
    solve_with_law(params, commanded, &law, tip_anchor, base_offset, options)
}

fn solve_with_law(
    params: &ArmParameters,
    commanded: &Configuration,
    law: &TendonLaw,
    tip_anchor: &Vector3<f64>,
    base_offset: &Vector3<f64>,
    options: &PerchingOptions,
) -> Result<PerchingRecord> {
    let l = params.backbone_length;
    let target = tip_anchor - base_offset;
    if !target.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("tip anchor"));
    }
    if target.norm() > l {
        return Err(Error::Unreachable {
            distance: target.norm(),
            length: l,
        });
    }

    let damp = Matrix2::identity() * options.damping * options.damping;
    let (mut theta, mut delta) = (commanded.theta(), commanded.delta());
    let mut iterations = 0;
    loop {
        let miss = position_at(l, theta, delta) - target;
        let j = jacobian_v_at(l, theta, delta);
        let g = j.transpose() * miss;
        let step = (j.transpose() * j + damp)
            .try_inverse()
            .map(|m| -(m * g))
            .unwrap_or_else(Vector2::zeros);
        // Reachable part of the miss: its projection on the tangent plane.
        if (j * step).norm() < options.tolerance {
            break;
        }
        if iterations == options.max_iterations {
            return Err(Error::NonConvergence {
                iterations,
                residual: (j * step).norm(),
            });
        }
        iterations += 1;
        let mut alpha = 1.0;
        let before = miss.norm_squared();
        for _ in 0..30 {
            let trial = position_at(l, theta + alpha * step[0], delta + alpha * step[1]) - target;
            if trial.norm_squared() <= before {
                break;
            }
            alpha *= 0.5;
        }
        theta += alpha * step[0];
        delta += alpha * step[1];
    }

    let f_star = gradient_at(params, theta)
        - jacobian_q_at(params, theta, delta).transpose() * law.tensions(params, theta, delta);
    let j_v = jacobian_v_at(l, theta, delta);
    let sigma = j_v.singular_values().min();
    let damping = if sigma < SINGULAR_TOLERANCE * l {
        options.damping
    } else {
        0.0
    };
    let pinv_t = jv_transpose_pseudo_inverse(&j_v, damping).ok_or(Error::Singular {
        sigma_min: sigma,
        threshold: SINGULAR_TOLERANCE * l,
    })?;
    let reaction_force = -(pinv_t * f_star);
    let tip = position_at(l, theta, delta);
    Ok(PerchingRecord {
        base_offset: *base_offset,
        reaction_force,
        reaction_moment: tip.cross(&reaction_force),
        equilibrium_config: Configuration::new(theta, delta)?,
        tip_miss: tip - target,
        ik_iterations: iterations,
    })
}

/// Offsets `0 → travel·axis → 0` in `steps` equal increments each way.
pub fn perching_offsets(travel: f64, steps: usize, axis: &Vector3<f64>) -> Vec<Vector3<f64>> {
    let unit = axis.normalize();
    (0..=steps)
        .chain((0..steps).rev())
        .map(|k| unit * (travel * k as f64 / steps.max(1) as f64))
        .collect()
}

/// Outcome of one base offset of a perching sweep.
#[derive(Debug)]
pub struct PerchingSweepPoint {
    pub base_offset: Vector3<f64>,
    pub outcome: Result<PerchingRecord>,
}

/// Moves the base through `offsets` with the tip clamped where the unloaded
/// arm puts it. Each offset is solved independently from the commanded
/// configuration, so forward and return passes agree exactly.
pub fn run_perching_sweep(
    params: &ArmParameters,
    commanded: &Configuration,
    offsets: &[Vector3<f64>],
    options: &PerchingOptions,
) -> Result<Vec<PerchingSweepPoint>> {
    let law = TendonLaw::locked_at(params, commanded, options.pretension)?;
    let anchor = position_at(params.backbone_length, commanded.theta(), commanded.delta());
    Ok(offsets
        .par_iter()
        .map(|offset| PerchingSweepPoint {
            base_offset: *offset,
            outcome: solve_with_law(params, commanded, &law, &anchor, offset, options),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_offset_has_no_reaction() {
        let p = ArmParameters::default();
        let psi = Configuration::from_degrees(30.0, 0.0).unwrap();
        let anchor = position_at(p.backbone_length, psi.theta(), psi.delta());
        let rec =
            solve_perching_reaction(&p, &psi, &anchor, &Vector3::zeros(), &Default::default()).unwrap();
        assert!(rec.reaction_force.norm() < 1e-9);
        assert_eq!(rec.ik_iterations, 0);
    }

    #[test]
    fn far_anchor_is_unreachable() {
        let p = ArmParameters::default();
        let psi = Configuration::from_degrees(30.0, 0.0).unwrap();
        let err = solve_perching_reaction(
            &p,
            &psi,
            &Vector3::new(0.0, 0.0, 0.3),
            &Vector3::zeros(),
            &Default::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Unreachable { .. }));
    }

    #[test]
    fn offsets_go_out_and_back() {
        let o = perching_offsets(0.01, 4, &Vector3::x());
        assert_eq!(o.len(), 9);
        assert_eq!(o[4], Vector3::new(0.01, 0.0, 0.0));
        assert_eq!(o[0], o[8]);
        assert_eq!(o[1], o[7]);
    }

    #[test]
    fn moment_is_tip_cross_force() {
        let p = ArmParameters::default();
        let psi = Configuration::from_degrees(30.0, 10.0).unwrap();
        let anchor = position_at(p.backbone_length, psi.theta(), psi.delta());
        let rec = solve_perching_reaction(
            &p,
            &psi,
            &anchor,
            &Vector3::new(0.004, 0.0, 0.0),
            &Default::default(),
        )
        .unwrap();
        let tip = anchor - rec.base_offset + rec.tip_miss;
        assert!((tip.cross(&rec.reaction_force) - rec.reaction_moment).norm() < 1e-15);
        assert!(rec.reaction_force.norm() > 0.0);
    }
}
