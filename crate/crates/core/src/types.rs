//! Value types shared by every module. All of them are plain immutable data.

use std::f64::consts::PI;

use nalgebra::{DVector, Matrix2, Matrix3, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::kinematics::{JqMatrix, JvMatrix, JwMatrix, JxMatrix};

/// Default upper bound on the bending angle.
pub const DEFAULT_THETA_MAX: f64 = PI;

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a - 2.0 * PI
    } else {
        a
    }
}

/// Canonical configuration `ψ = [θ, δ]` with `θ ≥ 0` and `δ ∈ (-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Configuration {
    theta: f64,
    delta: f64,
}

impl Configuration {
    /// Canonicalizes `(θ, δ)`. A negative bend is the same shape as a positive
    /// bend in the opposite plane, so `(-θ, δ)` maps to `(θ, δ + π)`.
    pub fn new(theta: f64, delta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::NonFinite("theta"));
        }
        if !delta.is_finite() {
            return Err(Error::NonFinite("delta"));
        }
        let (theta, delta) = if theta < 0.0 {
            (-theta, delta + PI)
        } else {
            (theta, delta)
        };
        Ok(Self {
            theta,
            delta: wrap_angle(delta),
        })
    }

    pub fn from_degrees(theta_deg: f64, delta_deg: f64) -> Result<Self> {
        Self::new(theta_deg.to_radians(), delta_deg.to_radians())
    }

    /// The home (straight) configuration.
    pub fn straight() -> Self {
        Self {
            theta: 0.0,
            delta: 0.0,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn as_vector(&self) -> nalgebra::Vector2<f64> {
        nalgebra::Vector2::new(self.theta, self.delta)
    }

    /// Rejects bends beyond `theta_max`.
    pub fn check_limit(&self, theta_max: f64) -> Result<()> {
        if self.theta > theta_max {
            return Err(Error::InvalidParameter {
                field: "theta",
                reason: format!("{} rad exceeds theta_max {} rad", self.theta, theta_max),
            });
        }
        Ok(())
    }
}

/// Free-function form of [`Configuration::new`].
pub fn wrap_configuration(theta: f64, delta: f64) -> Result<Configuration> {
    Configuration::new(theta, delta)
}

/// Tendon displacements `q` and, when known, tensions `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub displacements: DVector<f64>,
    pub tensions: Option<DVector<f64>>,
}

impl JointState {
    pub fn with_tensions(displacements: DVector<f64>, tensions: DVector<f64>) -> Result<Self> {
        check_tensions(&tensions)?;
        Ok(Self {
            displacements,
            tensions: Some(tensions),
        })
    }
}

/// Errors on the first negative (or non-finite) tension.
pub fn check_tensions(tensions: &DVector<f64>) -> Result<()> {
    for (index, &value) in tensions.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite("tension"));
        }
        if value < 0.0 {
            return Err(Error::NegativeTension { index, value });
        }
    }
    Ok(())
}

/// Gripper frame in the base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub position: Vector3<f64>,
}

/// Force and moment acting at the gripper origin, expressed in the base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
}

impl Wrench {
    pub fn zero() -> Self {
        Self {
            force: Vector3::zeros(),
            moment: Vector3::zeros(),
        }
    }

    pub fn from_force(force: Vector3<f64>) -> Self {
        Self {
            force,
            moment: Vector3::zeros(),
        }
    }

    pub fn new(force: Vector3<f64>, moment: Vector3<f64>) -> Result<Self> {
        if force.iter().chain(moment.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("wrench"));
        }
        Ok(Self { force, moment })
    }

    /// `[f; m]`, the ordering that matches a `[J_v; J_ω]` twist Jacobian.
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.force.x,
            self.force.y,
            self.force.z,
            self.moment.x,
            self.moment.y,
            self.moment.z,
        )
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            force: self.force * factor,
            moment: self.moment * factor,
        }
    }
}

/// All three Jacobians evaluated at one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianSet {
    pub j_q_psi: JqMatrix,
    pub j_v_psi: JvMatrix,
    pub j_w_psi: JwMatrix,
    pub evaluated_at: Configuration,
}

impl JacobianSet {
    /// `[J_v; J_ω]`.
    pub fn j_x_psi(&self) -> JxMatrix {
        let mut j = JxMatrix::zeros();
        j.fixed_view_mut::<3, 2>(0, 0).copy_from(&self.j_v_psi);
        j.fixed_view_mut::<3, 2>(3, 0).copy_from(&self.j_w_psi);
        j
    }
}

/// Stiffness matrices at one linearization point.
///
/// `k_psi` mixes units: the θθ entry is N·m/rad while entries involving δ carry
/// the θ factor of the tendon geometry. Nothing here enforces that.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessSet {
    pub k_psi: Matrix2<f64>,
    pub k_q: nalgebra::DMatrix<f64>,
    /// `None` when `J_v` is rank deficient at the linearization point.
    pub k_x: Option<Matrix3<f64>>,
    pub evaluated_at: Configuration,
    pub tensions_at_point: DVector<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_bend_flips_plane() {
        let c = Configuration::new(-PI / 4.0, 0.0).unwrap();
        assert_eq!(c.theta(), PI / 4.0);
        assert_eq!(c.delta(), PI);
    }

    #[test]
    fn delta_wraps_into_half_open_interval() {
        let c = Configuration::new(PI / 4.0, 3.0 * PI).unwrap();
        assert_eq!(c.theta(), PI / 4.0);
        assert!((c.delta() - PI).abs() < 1e-12);
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(PI), PI);
    }

    #[test]
    fn identity_case() {
        let c = Configuration::new(0.0, 1.2).unwrap();
        assert_eq!((c.theta(), c.delta()), (0.0, 1.2));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            Configuration::new(f64::NAN, 0.0),
            Err(Error::NonFinite("theta"))
        ));
        assert!(matches!(
            Configuration::new(0.1, f64::INFINITY),
            Err(Error::NonFinite("delta"))
        ));
    }

    #[test]
    fn theta_limit() {
        let c = Configuration::new(3.5, 0.0).unwrap();
        assert!(c.check_limit(DEFAULT_THETA_MAX).is_err());
        assert!(c.check_limit(4.0).is_ok());
    }

    #[test]
    fn negative_tension_rejected() {
        let t = DVector::from_vec(vec![1.0, -0.5, 0.0, 0.0]);
        assert!(matches!(
            check_tensions(&t),
            Err(Error::NegativeTension { index: 1, .. })
        ));
    }
}
