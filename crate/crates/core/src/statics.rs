//! Elastic energy, the virtual-work equilibrium and tension allocation.
//!
//! Equilibrium is `∇E = J_qψᵀ τ + J_xψᵀ w_ext`, with `w_ext` a base-frame wrench
//! acting at the gripper origin. With four (or more) tendons and two
//! configuration coordinates the tensions are redundant; [`allocate_tensions`]
//! picks the minimum-norm set that keeps every tendon at or above a pretension.

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector2};

use crate::error::{Error, Result};
use crate::kinematics::{jacobian_q_at, jacobian_x_at};
use crate::params::ArmParameters;
use crate::types::{check_tensions, Configuration, Wrench};

/// Result of a tension allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    /// `∇E − J_qᵀτ − J_xᵀw_ext`, recomputed from the returned tensions.
    pub residual: Vector2<f64>,
    pub tensions: nalgebra::DVector<f64>,
    /// `F* = ∇E − J_qᵀτ`.
    pub generalized_force: Vector2<f64>,
}

impl EquilibriumReport {
    pub fn residual_norm(&self) -> f64 {
        self.residual.norm()
    }
}

/// Bending energy of the backbone, `θ² E_p I_p / (2L)`.
pub fn elastic_energy(params: &ArmParameters, psi: &Configuration) -> f64 {
    energy_at(params, psi.theta())
}

pub(crate) fn energy_at(params: &ArmParameters, theta: f64) -> f64 {
    theta * theta * params.bending_rigidity() / (2.0 * params.backbone_length)
}

pub fn energy_gradient(params: &ArmParameters, psi: &Configuration) -> Vector2<f64> {
    gradient_at(params, psi.theta())
}

pub(crate) fn gradient_at(params: &ArmParameters, theta: f64) -> Vector2<f64> {
    Vector2::new(theta * params.bending_rigidity() / params.backbone_length, 0.0)
}

/// `F* = ∇E − J_qᵀτ`, the configuration-space load the tendons leave unbalanced.
pub fn generalized_force(
    params: &ArmParameters,
    psi: &Configuration,
    tensions: &DVector<f64>,
) -> Result<Vector2<f64>> {
    check_tension_count(params, tensions)?;
    check_tensions(tensions)?;
    Ok(gradient_at(params, psi.theta())
        - jacobian_q_at(params, psi.theta(), psi.delta()).transpose() * tensions)
}

/// `∇E − J_qᵀτ − J_xᵀw_ext`; zero at equilibrium.
pub fn equilibrium_residual(
    params: &ArmParameters,
    psi: &Configuration,
    tensions: &DVector<f64>,
    w_ext: &Wrench,
) -> Result<Vector2<f64>> {
    let f_star = generalized_force(params, psi, tensions)?;
    let j_x = jacobian_x_at(params.backbone_length, psi.theta(), psi.delta());
    Ok(f_star - j_x.transpose() * w_ext.to_vector())
}

fn check_tension_count(params: &ArmParameters, tensions: &DVector<f64>) -> Result<()> {
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

/// Finds the tensions `τ ≥ pretension` of least 2-norm that hold `psi` under `w_ext`.
///
/// The minimum-norm solution of `J_qᵀτ = ∇E − J_xᵀw_ext` is orthogonal to the
/// null space of `J_qᵀ`, so `‖τ‖²` splits into the min-norm part plus the squared
/// length of the null-space shift. The shift is therefore the shortest vector `z`
/// with `N z ≥ pretension − τ_min`, found exactly by enumerating active sets.
pub fn allocate_tensions(
    params: &ArmParameters,
    psi: &Configuration,
    w_ext: &Wrench,
    pretension: f64,
) -> Result<EquilibriumReport> {
    if !pretension.is_finite() {
        return Err(Error::NonFinite("pretension"));
    }
    if pretension < 0.0 {
        return Err(Error::InvalidParameter {
            field: "pretension",
            reason: format!("must be non-negative, got {pretension}"),
        });
    }
    let (theta, delta) = (psi.theta(), psi.delta());
    let j_x = jacobian_x_at(params.backbone_length, theta, delta);
    let target = gradient_at(params, theta) - j_x.transpose() * w_ext.to_vector();

    let j_q = jacobian_q_at(params, theta, delta);
    let a = DMatrix::from_column_slice(2, j_q.nrows(), j_q.transpose().as_slice());
    let b = DVector::from_column_slice(target.as_slice());

    let scale = a.amax().max(f64::MIN_POSITIVE);
    let pinv = a
        .clone()
        .pseudo_inverse(1e-12 * scale)
        .expect("non-negative tolerance");
    let tau_min = &pinv * &b;
    let constraint_residual = (&a * &tau_min - &b).norm();
    if constraint_residual > 1e-12 * b.norm().max(1.0) {
        return Err(Error::Infeasible {
            residual: constraint_residual,
        });
    }

    let n = tau_min.len();
    let projector = DMatrix::identity(n, n) - &pinv * &a;
    let null_basis = null_space_basis(projector);

    let bound = DVector::from_element(n, pretension) - &tau_min;
    let shift = shortest_feasible_shift(&null_basis, &bound).ok_or(Error::Infeasible {
        residual: bound.max(),
    })?;

    let mut tensions = tau_min + &null_basis * shift;
    // active constraints sit at the bound up to rounding
    for t in tensions.iter_mut() {
        if *t < pretension {
            *t = pretension;
        }
    }

    let generalized_force = generalized_force(params, psi, &tensions)?;
    let residual = equilibrium_residual(params, psi, &tensions, w_ext)?;
    Ok(EquilibriumReport {
        residual,
        tensions,
        generalized_force,
    })
}

/// Orthonormal basis of the range of a symmetric projector.
fn null_space_basis(projector: DMatrix<f64>) -> DMatrix<f64> {
    let n = projector.nrows();
    let eig = SymmetricEigen::new(projector);
    let mut cols: Vec<(usize, DVector<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.5)
        .map(|(i, _)| (i, eig.eigenvectors.column(i).into_owned()))
        .collect();
    cols.sort_by_key(|(i, _)| *i);
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j].1[i])
}

/// Shortest `z` with `basis · z ≥ bound` (row-wise), or `None` if infeasible.
///
/// The optimum is the least-norm solution of its own active constraints, so
/// checking every active set of size up to `dim z` finds it.
fn shortest_feasible_shift(basis: &DMatrix<f64>, bound: &DVector<f64>) -> Option<DVector<f64>> {
    let (rows, dim) = basis.shape();
    let tol = 1e-12 * bound.amax().max(1.0);
    let feasible = |z: &DVector<f64>| (basis * z - bound).iter().all(|&s| s >= -tol);

    let zero = DVector::zeros(dim);
    if feasible(&zero) {
        return Some(zero);
    }

    let mut best: Option<DVector<f64>> = None;
    for size in 1..=dim.min(rows) {
        for subset in combinations(rows, size) {
            let a = DMatrix::from_fn(size, dim, |i, j| basis[(subset[i], j)]);
            let c = DVector::from_fn(size, |i, _| bound[subset[i]]);
            let Ok(pinv) = a.clone().pseudo_inverse(1e-12) else {
                continue;
            };
            let z = pinv * &c;
            if (&a * &z - &c).amax() > tol || !feasible(&z) {
                continue;
            }
            if best.as_ref().is_none_or(|b| z.norm() < b.norm()) {
                best = Some(z);
            }
        }
    }
    best
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn recurse(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            recurse(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    recurse(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use std::f64::consts::FRAC_PI_2;

    fn params() -> ArmParameters {
        ArmParameters::default()
    }

    fn cfg(theta: f64, delta: f64) -> Configuration {
        Configuration::new(theta, delta).unwrap()
    }

    #[test]
    fn energy_values() {
        let p = params();
        assert_eq!(elastic_energy(&p, &cfg(0.0, 0.3)), 0.0);
        // (π/2)² · 2.4543692606e-3 / 0.5
        let e = elastic_energy(&p, &cfg(FRAC_PI_2, 0.0));
        assert!((e - 1.2111e-2).abs() < 1e-5, "{e}");
        assert_eq!(
            elastic_energy(&p, &cfg(0.9, 0.1)),
            elastic_energy(&p, &cfg(0.9, -2.0))
        );
    }

    #[test]
    fn gradient_matches_difference() {
        let p = params();
        for theta in [0.0, 0.3, 1.7, 3.0] {
            let h = 1e-5;
            let fd = (energy_at(&p, theta + h) - energy_at(&p, theta - h)) / (2.0 * h);
            let g = gradient_at(&p, theta);
            assert_eq!(g[1], 0.0);
            assert!((fd - g[0]).abs() <= 1e-8 * g[0].abs().max(1e-12));
        }
    }

    #[test]
    fn residual_reduces_to_gradient() {
        let p = params();
        let psi = cfg(0.3, 0.0);
        let r = equilibrium_residual(&p, &psi, &DVector::zeros(4), &Wrench::zero()).unwrap();
        assert!((r - gradient_at(&p, 0.3)).norm() < 1e-18);
        let r0 = equilibrium_residual(&p, &cfg(0.0, 0.0), &DVector::zeros(4), &Wrench::zero())
            .unwrap();
        assert_eq!(r0, Vector2::zeros());
    }

    #[test]
    fn residual_rejects_negative_tension() {
        let p = params();
        let t = DVector::from_vec(vec![0.0, -1.0, 0.0, 0.0]);
        assert!(matches!(
            equilibrium_residual(&p, &cfg(0.2, 0.0), &t, &Wrench::zero()),
            Err(Error::NegativeTension { index: 1, .. })
        ));
    }

    #[test]
    fn straight_rest_needs_no_tension() {
        let p = params();
        let rep = allocate_tensions(&p, &cfg(0.0, 0.0), &Wrench::zero(), 0.0).unwrap();
        assert_eq!(rep.tensions.norm(), 0.0);
        assert_eq!(rep.residual_norm(), 0.0);
    }

    #[test]
    fn pure_bending_pulls_one_tendon() {
        let p = params();
        let rep = allocate_tensions(&p, &cfg(0.5, 0.0), &Wrench::zero(), 0.0).unwrap();
        let g = gradient_at(&p, 0.5)[0];
        let expect = DVector::from_vec(vec![g / p.pitch_radius, 0.0, 0.0, 0.0]);
        assert!((&rep.tensions - expect).amax() < 1e-12);
        assert!(rep.residual_norm() < 1e-9);
    }

    #[test]
    fn pretension_lifts_every_tendon() {
        let p = params();
        let rep = allocate_tensions(&p, &cfg(0.7, 0.4), &Wrench::zero(), 2.0).unwrap();
        assert!(rep.tensions.min() >= 2.0);
        assert!(rep.residual_norm() < 1e-9);
    }

    #[test]
    fn zero_scaled_wrench_is_pure_bending() {
        let p = params();
        let w = Wrench::from_force(Vector3::new(0.3, -0.2, 0.5));
        for (t, d) in [(0.2, 0.1), (1.4, -2.0), (0.0, 0.0)] {
            let a = allocate_tensions(&p, &cfg(t, d), &w.scaled(0.0), 0.0).unwrap();
            let b = allocate_tensions(&p, &cfg(t, d), &Wrench::zero(), 0.0).unwrap();
            assert_eq!(a.tensions, b.tensions);
        }
    }

    #[test]
    fn generalized_force_equals_projected_wrench() {
        let p = params();
        let psi = cfg(0.9, 1.1);
        let w = Wrench::new(Vector3::new(0.4, 0.1, -0.6), Vector3::new(0.01, -0.02, 0.03)).unwrap();
        let rep = allocate_tensions(&p, &psi, &w, 0.0).unwrap();
        let jx = jacobian_x_at(p.backbone_length, psi.theta(), psi.delta());
        assert!((rep.generalized_force - jx.transpose() * w.to_vector()).norm() < 1e-9);
    }

    #[test]
    fn negative_pretension_rejected() {
        let p = params();
        assert!(allocate_tensions(&p, &cfg(0.1, 0.0), &Wrench::zero(), -1.0).is_err());
    }

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(4, 1).len(), 4);
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(5, 3).len(), 10);
    }
}
