//! Constant-curvature kinematics of the segment.
//!
//! The gripper frame is `RotZ(δ)·RotY(θ)·RotZ(−δ)` at the arc tip
//! `(L/θ)[cosδ(1−cosθ), sinδ(1−cosθ), sinθ]`. Every quotient by θ is evaluated
//! through [`ArcTerms`], which switches to a Taylor series near the straight
//! configuration so all maps stay total and smooth through θ = 0.
//!
//! Internally the `*_at` functions accept any finite `(θ, δ)`, including negative
//! θ; the public API takes canonical [`Configuration`]s.

use nalgebra::{Dyn, Matrix3, Matrix3x2, Matrix6x2, OMatrix, SMatrix, Vector3, U2};

use crate::error::{Error, Result};
use crate::params::ArmParameters;
use crate::so3::{hat, rot_y, rot_y_derivative, rot_z, rot_z_derivative, vec9};
use crate::types::{Configuration, JacobianSet, JointState, Pose};

/// `J_qψ`, one row per tendon.
pub type JqMatrix = OMatrix<f64, Dyn, U2>;
pub type JvMatrix = Matrix3x2<f64>;
pub type JwMatrix = Matrix3x2<f64>;
pub type JxMatrix = Matrix6x2<f64>;

/// Below this |θ| the arc quotients are evaluated by series.
pub const SERIES_THRESHOLD: f64 = 0.1;

const SERIES_TERMS: usize = 9;

/// The singular arc quotients and their first two θ-derivatives.
///
/// `g = (1 − cosθ)/θ`, `h = sinθ/θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcTerms {
    pub g: f64,
    pub h: f64,
    pub dg: f64,
    pub dh: f64,
    pub ddg: f64,
    pub ddh: f64,
}

impl ArcTerms {
    pub fn new(theta: f64) -> Self {
        if theta.abs() < SERIES_THRESHOLD {
            Self::series(theta)
        } else {
            Self::closed_form(theta)
        }
    }

    fn closed_form(t: f64) -> Self {
        let (s, c) = t.sin_cos();
        let half = (0.5 * t).sin();
        let one_minus_cos = 2.0 * half * half;
        let t2 = t * t;
        let t3 = t2 * t;
        Self {
            g: one_minus_cos / t,
            h: s / t,
            dg: (t * s - one_minus_cos) / t2,
            dh: (t * c - s) / t2,
            ddg: (t2 * c - 2.0 * t * s + 2.0 * one_minus_cos) / t3,
            ddh: (2.0 * s - t2 * s - 2.0 * t * c) / t3,
        }
    }

    // h = Σ (−1)^k θ^{2k}/(2k+1)!,  g = Σ (−1)^k θ^{2k+1}/(2k+2)!
    fn series(t: f64) -> Self {
        let mut out = Self {
            g: 0.0,
            h: 0.0,
            dg: 0.0,
            dh: 0.0,
            ddg: 0.0,
            ddh: 0.0,
        };
        let mut factorial = 1.0; // (2k+1)!
        for k in 0..SERIES_TERMS {
            let n = 2 * k;
            if k > 0 {
                factorial *= (n * (n + 1)) as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let a = sign / factorial;
            let b = sign / (factorial * (n + 2) as f64);
            let (nf, mf) = (n as f64, (n + 1) as f64);

            out.h += a * t.powi(n as i32);
            if n >= 1 {
                out.dh += a * nf * t.powi(n as i32 - 1);
            }
            if n >= 2 {
                out.ddh += a * nf * (nf - 1.0) * t.powi(n as i32 - 2);
            }
            out.g += b * t.powi(n as i32 + 1);
            out.dg += b * mf * t.powi(n as i32);
            if n >= 1 {
                out.ddg += b * mf * nf * t.powi(n as i32 - 1);
            }
        }
        out
    }
}

pub(crate) fn rotation_at(theta: f64, delta: f64) -> Matrix3<f64> {
    rot_z(delta) * rot_y(theta) * rot_z(-delta)
}

pub(crate) fn position_at(length: f64, theta: f64, delta: f64) -> Vector3<f64> {
    let arc = ArcTerms::new(theta);
    let (sd, cd) = delta.sin_cos();
    length * Vector3::new(cd * arc.g, sd * arc.g, arc.h)
}

pub fn forward_kinematics(params: &ArmParameters, psi: &Configuration) -> Pose {
    Pose {
        rotation: rotation_at(psi.theta(), psi.delta()),
        position: position_at(params.backbone_length, psi.theta(), psi.delta()),
    }
}

/// One point on the backbone arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackboneSample {
    pub arc_position: f64,
    pub point: Vector3<f64>,
    pub tangent: Vector3<f64>,
}

/// Samples the arc at `count` equally spaced arc positions from base to tip.
pub fn sample_backbone(
    params: &ArmParameters,
    psi: &Configuration,
    count: usize,
) -> Result<Vec<BackboneSample>> {
    if count < 2 {
        return Err(Error::TooFewSamples { min: 2, got: count });
    }
    let length = params.backbone_length;
    let (sd, cd) = psi.delta().sin_cos();
    Ok((0..count)
        .map(|k| {
            let s = if k + 1 == count {
                length
            } else {
                length * k as f64 / (count - 1) as f64
            };
            let phi = psi.theta() * s / length;
            let (sp, cp) = phi.sin_cos();
            BackboneSample {
                arc_position: s,
                point: position_at(s, phi, psi.delta()),
                tangent: Vector3::new(cd * sp, sd * sp, cp),
            }
        })
        .collect())
}

pub(crate) fn joints_at(params: &ArmParameters, theta: f64, delta: f64) -> nalgebra::DVector<f64> {
    let (sd, cd) = delta.sin_cos();
    let r = params.pitch_radius;
    nalgebra::DVector::from_iterator(
        params.tendon_count,
        params
            .tendon_phases()
            .into_iter()
            .map(|(ci, si)| r * (cd * ci - sd * si) * theta),
    )
}

/// Tendon displacements `q_i = r·cos(δ + (i−1)β)·θ`.
pub fn configuration_to_joints(params: &ArmParameters, psi: &Configuration) -> JointState {
    JointState {
        displacements: joints_at(params, psi.theta(), psi.delta()),
        tensions: None,
    }
}

pub(crate) fn jacobian_q_at(params: &ArmParameters, theta: f64, delta: f64) -> JqMatrix {
    let (sd, cd) = delta.sin_cos();
    let r = params.pitch_radius;
    let phases = params.tendon_phases();
    JqMatrix::from_fn(phases.len(), |i, j| {
        let (ci, si) = phases[i];
        if j == 0 {
            r * (cd * ci - sd * si)
        } else {
            -r * (sd * ci + cd * si) * theta
        }
    })
}

pub fn jacobian_q_psi(params: &ArmParameters, psi: &Configuration) -> JqMatrix {
    jacobian_q_at(params, psi.theta(), psi.delta())
}

pub(crate) fn jacobian_v_at(length: f64, theta: f64, delta: f64) -> JvMatrix {
    let arc = ArcTerms::new(theta);
    let (sd, cd) = delta.sin_cos();
    length
        * JvMatrix::new(
            cd * arc.dg,
            -sd * arc.g,
            sd * arc.dg,
            cd * arc.g,
            arc.dh,
            0.0,
        )
}

pub fn jacobian_v_psi(params: &ArmParameters, psi: &Configuration) -> JvMatrix {
    jacobian_v_at(params.backbone_length, psi.theta(), psi.delta())
}

/// `∂J_v/∂θ` and `∂J_v/∂δ`.
pub(crate) fn jacobian_v_partials(length: f64, theta: f64, delta: f64) -> [JvMatrix; 2] {
    let arc = ArcTerms::new(theta);
    let (sd, cd) = delta.sin_cos();
    [
        length
            * JvMatrix::new(
                cd * arc.ddg,
                -sd * arc.dg,
                sd * arc.ddg,
                cd * arc.dg,
                arc.ddh,
                0.0,
            ),
        length * JvMatrix::new(-sd * arc.dg, -cd * arc.g, cd * arc.dg, -sd * arc.g, 0.0, 0.0),
    ]
}

pub(crate) fn jacobian_w_at(theta: f64, delta: f64) -> JwMatrix {
    let (sd, cd) = delta.sin_cos();
    let (st, ct) = theta.sin_cos();
    JwMatrix::new(-sd, -cd * st, cd, -sd * st, 0.0, 1.0 - ct)
}

pub fn jacobian_w_psi(_params: &ArmParameters, psi: &Configuration) -> JwMatrix {
    jacobian_w_at(psi.theta(), psi.delta())
}

/// `∂R/∂θ` and `∂R/∂δ` of `RotZ(δ)·RotY(θ)·RotZ(−δ)`.
pub fn rotation_partials(theta: f64, delta: f64) -> [Matrix3<f64>; 2] {
    let (rz, rz_inv, ry) = (rot_z(delta), rot_z(-delta), rot_y(theta));
    [
        rz * rot_y_derivative(theta) * rz_inv,
        rot_z_derivative(delta) * ry * rz_inv - rz * ry * rot_z_derivative(-delta),
    ]
}

/// Stacked transposed skew matrices of the columns of `R` (9×3).
pub fn stacked_skew_matrix(rotation: &Matrix3<f64>) -> SMatrix<f64, 9, 3> {
    let mut d = SMatrix::<f64, 9, 3>::zeros();
    for (k, column) in rotation.column_iter().enumerate() {
        let n: Vector3<f64> = column.into_owned();
        d.fixed_view_mut::<3, 3>(3 * k, 0)
            .copy_from(&hat(&n).transpose());
    }
    d
}

/// `[vec(∂R/∂θ), vec(∂R/∂δ)]` (9×2).
pub fn vectorized_rotation_partials(theta: f64, delta: f64) -> SMatrix<f64, 9, 2> {
    let [dr_dtheta, dr_ddelta] = rotation_partials(theta, delta);
    let mut e = SMatrix::<f64, 9, 2>::zeros();
    e.set_column(0, &vec9(&dr_dtheta));
    e.set_column(1, &vec9(&dr_ddelta));
    e
}

/// `J_ωψ` recovered from `vec(dR) = D·ω = E·ψ̇` through the left inverse
/// `(DᵀD)⁻¹Dᵀ`. An independent route to [`jacobian_w_psi`].
pub fn jacobian_w_psi_vectorized(_params: &ArmParameters, psi: &Configuration) -> JwMatrix {
    let rotation = rotation_at(psi.theta(), psi.delta());
    let d = stacked_skew_matrix(&rotation);
    let e = vectorized_rotation_partials(psi.theta(), psi.delta());
    let gram = d.transpose() * d;
    // DᵀD = 2I for any orthonormal frame, so the inverse always exists.
    let gram_inv = gram
        .try_inverse()
        .expect("DᵀD of a rotation is 2I and invertible");
    gram_inv * d.transpose() * e
}

pub(crate) fn jacobian_x_at(length: f64, theta: f64, delta: f64) -> JxMatrix {
    let mut j = JxMatrix::zeros();
    j.fixed_view_mut::<3, 2>(0, 0)
        .copy_from(&jacobian_v_at(length, theta, delta));
    j.fixed_view_mut::<3, 2>(3, 0)
        .copy_from(&jacobian_w_at(theta, delta));
    j
}

pub fn jacobian_x_psi(params: &ArmParameters, psi: &Configuration) -> JxMatrix {
    jacobian_x_at(params.backbone_length, psi.theta(), psi.delta())
}

pub fn jacobians(params: &ArmParameters, psi: &Configuration) -> JacobianSet {
    JacobianSet {
        j_q_psi: jacobian_q_psi(params, psi),
        j_v_psi: jacobian_v_psi(params, psi),
        j_w_psi: jacobian_w_psi(params, psi),
        evaluated_at: *psi,
    }
}

/// Numerical rank with singular values below `rel_tol · σ_max` treated as zero.
pub fn numerical_rank<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>, rel_tol: f64) -> usize {
    let sigma = nalgebra::DMatrix::from_column_slice(R, C, m.as_slice()).singular_values();
    let max = sigma.max();
    if max == 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > rel_tol * max).count()
}
