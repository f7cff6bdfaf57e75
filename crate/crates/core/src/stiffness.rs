//! Configuration-space and task-space stiffness.
//!
//! `K_ψ = ∂F*/∂ψ` with `F* = ∇E − J_qψᵀ τ(ψ)`. Differentiating gives the energy
//! Hessian, the contraction of the third-order tensor `∂J_qψᵀ/∂ψ` with `τ`, and a
//! tendon-elasticity term `∓ J_qψᵀ K_q J_qψ` whose sign depends on how tension
//! responds to tendon displacement (see [`TendonCoupling`]).
//!
//! `K_X = [∂(J_vψᵀ)†/∂ψ] F* J_vψ† + (J_vψᵀ)† K_ψ J_vψ†` maps it to the tip.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix2x3, Matrix3, Matrix3x2, OMatrix, U2, Dyn};

use crate::error::{Error, Result};
use crate::kinematics::{jacobian_q_at, jacobian_v_at, jacobian_v_partials, JvMatrix};
use crate::params::ArmParameters;
use crate::statics::generalized_force;
use crate::types::{check_tensions, Configuration, StiffnessSet};

/// `σ_min(J_v) < SINGULAR_TOLERANCE · L` refuses an undamped `K_X`.
pub const SINGULAR_TOLERANCE: f64 = 1e-8;

/// Damping used by the explicit damped variant of `K_X` (m).
pub const DEFAULT_DAMPING: f64 = 1e-6;

/// How tendon tension responds to a change of tendon displacement `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TendonCoupling {
    /// Motors hold position: pulling a tendon further by bending slackens it,
    /// `τ = τ₀ − K_q (q − q_cmd)`. The tendons add stiffness.
    #[default]
    Slackening,
    /// `τ = τ₀ + K_q (q − q_cmd)`, giving `K_ψ = H_ψ − [∂J_qψᵀ/∂ψ]τ − J_qψᵀ K_q J_qψ`
    /// term for term. The tendons remove stiffness.
    Tightening,
}

impl TendonCoupling {
    fn sign(self) -> f64 {
        match self {
            TendonCoupling::Slackening => 1.0,
            TendonCoupling::Tightening => -1.0,
        }
    }
}

/// `∂J_qψᵀ/∂θ` and `∂J_qψᵀ/∂δ`, each 2 × n.
pub type JqTransposeSlice = OMatrix<f64, U2, Dyn>;

pub fn hessian_energy(params: &ArmParameters, _psi: &Configuration) -> Matrix2<f64> {
    Matrix2::new(
        params.bending_rigidity() / params.backbone_length,
        0.0,
        0.0,
        0.0,
    )
}

/// `K_q = diag(E_T A / L)`.
pub fn tendon_stiffness(params: &ArmParameters) -> DMatrix<f64> {
    DMatrix::from_diagonal_element(
        params.tendon_count,
        params.tendon_count,
        params.tendon_axial_stiffness(),
    )
}

pub(crate) fn jq_transpose_partials_at(
    params: &ArmParameters,
    theta: f64,
    delta: f64,
) -> [JqTransposeSlice; 2] {
    let (sd, cd) = delta.sin_cos();
    let r = params.pitch_radius;
    let phases = params.tendon_phases();
    let n = phases.len();
    let cos_i = |i: usize| cd * phases[i].0 - sd * phases[i].1;
    let sin_i = |i: usize| sd * phases[i].0 + cd * phases[i].1;
    let d_theta = JqTransposeSlice::from_fn(n, |row, i| if row == 0 { 0.0 } else { -r * sin_i(i) });
    let d_delta = JqTransposeSlice::from_fn(n, |row, i| {
        if row == 0 {
            -r * sin_i(i)
        } else {
            -r * cos_i(i) * theta
        }
    });
    [d_theta, d_delta]
}

/// The two slices of the third-order tensor `∂J_qψᵀ/∂ψ`.
pub fn jacobian_q_psi_derivative_tensor(
    params: &ArmParameters,
    psi: &Configuration,
) -> [JqTransposeSlice; 2] {
    jq_transpose_partials_at(params, psi.theta(), psi.delta())
}

/// `[∂J_qψᵀ/∂θ · τ, ∂J_qψᵀ/∂δ · τ]`.
pub fn contract_tensor(slices: &[JqTransposeSlice; 2], tensions: &DVector<f64>) -> Matrix2<f64> {
    let c0 = &slices[0] * tensions;
    let c1 = &slices[1] * tensions;
    Matrix2::from_columns(&[c0, c1])
}

pub(crate) fn configuration_stiffness_at(
    params: &ArmParameters,
    theta: f64,
    delta: f64,
    tensions: &DVector<f64>,
    tendon_gain: &DMatrix<f64>,
    coupling: TendonCoupling,
) -> Matrix2<f64> {
    let h = Matrix2::new(
        params.bending_rigidity() / params.backbone_length,
        0.0,
        0.0,
        0.0,
    );
    let tensor = contract_tensor(&jq_transpose_partials_at(params, theta, delta), tensions);
    let j_q = jacobian_q_at(params, theta, delta);
    let elastic = j_q.transpose() * tendon_gain * &j_q;
    h - tensor + coupling.sign() * elastic
}

/// `K_ψ` at `psi` with tendon tensions `tensions`.
pub fn configuration_stiffness(
    params: &ArmParameters,
    psi: &Configuration,
    tensions: &DVector<f64>,
    coupling: TendonCoupling,
) -> Result<Matrix2<f64>> {
    check_len(params, tensions)?;
    check_tensions(tensions)?;
    Ok(configuration_stiffness_at(
        params,
        psi.theta(),
        psi.delta(),
        tensions,
        &tendon_stiffness(params),
        coupling,
    ))
}

fn check_len(params: &ArmParameters, tensions: &DVector<f64>) -> Result<()> {
    if tensions.len() != params.tendon_count {
        return Err(Error::InvalidParameter {
            field: "tensions",
            reason: format!(
                "expected {} tensions, got {}",
                params.tendon_count,
                tensions.len()
            ),
        });
    }
    Ok(())
}

/// Smallest singular value of `J_v`.
pub fn jv_sigma_min(j_v: &JvMatrix) -> f64 {
    j_v.singular_values().min()
}

fn damped_gram_inverse(j_v: &JvMatrix, damping: f64) -> Option<Matrix2<f64>> {
    (j_v.transpose() * j_v + Matrix2::identity() * damping * damping).try_inverse()
}

/// `J_v† = (J_vᵀJ_v + λ²I)⁻¹ J_vᵀ`; `λ = 0` is the exact left inverse.
pub fn jv_pseudo_inverse(j_v: &JvMatrix, damping: f64) -> Option<Matrix2x3<f64>> {
    damped_gram_inverse(j_v, damping).map(|m| m * j_v.transpose())
}

/// `(J_vᵀ)† = J_v (J_vᵀJ_v + λ²I)⁻¹`.
pub fn jv_transpose_pseudo_inverse(j_v: &JvMatrix, damping: f64) -> Option<Matrix3x2<f64>> {
    damped_gram_inverse(j_v, damping).map(|m| j_v * m)
}

/// `∂(J_vᵀ)†/∂θ` and `∂(J_vᵀ)†/∂δ` by the product rule:
/// `d(J M⁻¹) = dJ M⁻¹ − J M⁻¹ (dJᵀJ + JᵀdJ) M⁻¹`.
pub fn transpose_pseudo_inverse_partials(
    params: &ArmParameters,
    psi: &Configuration,
    damping: f64,
) -> Option<[Matrix3x2<f64>; 2]> {
    let l = params.backbone_length;
    let j = jacobian_v_at(l, psi.theta(), psi.delta());
    let m_inv = damped_gram_inverse(&j, damping)?;
    let partials = jacobian_v_partials(l, psi.theta(), psi.delta());
    Some(partials.map(|dj| {
        let dm = dj.transpose() * j + j.transpose() * dj;
        dj * m_inv - j * m_inv * dm * m_inv
    }))
}

/// Central-difference counterpart of [`transpose_pseudo_inverse_partials`].
pub fn transpose_pseudo_inverse_partials_fd(
    params: &ArmParameters,
    psi: &Configuration,
    damping: f64,
    step: f64,
) -> Option<[Matrix3x2<f64>; 2]> {
    let l = params.backbone_length;
    let at = |t: f64, d: f64| jv_transpose_pseudo_inverse(&jacobian_v_at(l, t, d), damping);
    let (t, d) = (psi.theta(), psi.delta());
    let dt = (at(t + step, d)? - at(t - step, d)?) / (2.0 * step);
    let dd = (at(t, d + step)? - at(t, d - step)?) / (2.0 * step);
    Some([dt, dd])
}

/// How the pseudoinverse-derivative tensor is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PinvDerivative {
    #[default]
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TaskStiffnessOptions {
    pub coupling: TendonCoupling,
    /// `Some(λ)` enables the damped pseudoinverse and skips the rank guard.
    pub damping: Option<f64>,
    pub derivative: PinvDerivative,
}

/// Task-space stiffness `K_X` (N/m), or [`Error::Singular`] when `J_v` has lost rank.
pub fn task_stiffness(
    params: &ArmParameters,
    psi: &Configuration,
    tensions: &DVector<f64>,
    f_star: &nalgebra::Vector2<f64>,
    options: &TaskStiffnessOptions,
) -> Result<Matrix3<f64>> {
    let k_psi = configuration_stiffness(params, psi, tensions, options.coupling)?;
    let j_v = jacobian_v_at(params.backbone_length, psi.theta(), psi.delta());

    let damping = match options.damping {
        Some(lambda) => lambda,
        None => {
            let sigma_min = jv_sigma_min(&j_v);
            let threshold = SINGULAR_TOLERANCE * params.backbone_length;
            if sigma_min < threshold {
                return Err(Error::Singular {
                    sigma_min,
                    threshold,
                });
            }
            0.0
        }
    };
    let singular = || Error::Singular {
        sigma_min: jv_sigma_min(&j_v),
        threshold: SINGULAR_TOLERANCE * params.backbone_length,
    };

    let pinv = jv_pseudo_inverse(&j_v, damping).ok_or_else(singular)?;
    let pinv_t = jv_transpose_pseudo_inverse(&j_v, damping).ok_or_else(singular)?;
    let partials = match options.derivative {
        PinvDerivative::Analytic => transpose_pseudo_inverse_partials(params, psi, damping),
        PinvDerivative::FiniteDifference => {
            transpose_pseudo_inverse_partials_fd(params, psi, damping, 1e-6)
        }
    }
    .ok_or_else(singular)?;

    let tensor_term = Matrix3x2::from_columns(&[partials[0] * f_star, partials[1] * f_star]);
    Ok(tensor_term * pinv + pinv_t * k_psi * pinv)
}

/// `K_ψ`, `K_q` and (when defined) `K_X` at one point, with `F*` taken from the tensions.
pub fn stiffness_set(
    params: &ArmParameters,
    psi: &Configuration,
    tensions: &DVector<f64>,
    options: &TaskStiffnessOptions,
) -> Result<StiffnessSet> {
    let k_psi = configuration_stiffness(params, psi, tensions, options.coupling)?;
    let f_star = generalized_force(params, psi, tensions)?;
    let k_x = match task_stiffness(params, psi, tensions, &f_star, options) {
        Ok(k) => Some(k),
        Err(Error::Singular { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(StiffnessSet {
        k_psi,
        k_q: tendon_stiffness(params),
        k_x,
        evaluated_at: *psi,
        tensions_at_point: tensions.clone(),
    })
}
