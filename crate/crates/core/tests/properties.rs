use std::f64::consts::PI;

use continuum_core::kinematics::{numerical_rank, stacked_skew_matrix};
use continuum_core::sim::finite_difference_oracle;
use continuum_core::so3::orthonormality_error;
use continuum_core::{
    allocate_tensions, configuration_to_joints, equilibrium_residual, forward_kinematics,
    jacobian_q_psi, jacobian_v_psi, jacobian_w_psi, jacobian_w_psi_vectorized, sample_backbone,
    ArmParameters, Configuration, Wrench,
};
use nalgebra::{DVector, Matrix3, Vector3};
use proptest::prelude::*;

fn params() -> ArmParameters {
    ArmParameters::default()
}

fn config() -> impl Strategy<Value = Configuration> {
    (0.05..PI - 0.05, -PI..PI).prop_map(|(t, d)| Configuration::new(t, d).unwrap())
}

fn ball(radius: f64) -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-1.0..1.0f64)
        .prop_filter("inside unit ball", |v| v.iter().map(|x| x * x).sum::<f64>() <= 1.0)
        .prop_map(move |v| Vector3::from(v) * radius)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rotation_is_orthonormal(psi in config()) {
        let pose = forward_kinematics(&params(), &psi);
        prop_assert!(orthonormality_error(&pose.rotation) < 1e-10);
        prop_assert!((pose.rotation.determinant() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn chord_length_identity(psi in config()) {
        let p = params();
        let l = p.backbone_length;
        let chord = forward_kinematics(&p, &psi).position.norm();
        let expected = 2.0 * l / psi.theta() * (psi.theta() / 2.0).sin();
        prop_assert!((chord - expected).abs() < 1e-10 * l);
    }

    #[test]
    fn antagonistic_tendons_cancel_exactly(psi in config()) {
        let q = configuration_to_joints(&params(), &psi).displacements;
        prop_assert_eq!(q[0] + q[2], 0.0);
        prop_assert_eq!(q[1] + q[3], 0.0);
    }

    #[test]
    fn position_is_delta_equivariant(psi in config(), turn in -PI..PI) {
        let p = params();
        let turned = Configuration::new(psi.theta(), psi.delta() + turn).unwrap();
        let rz = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), turn);
        let a = rz * forward_kinematics(&p, &psi).position;
        let b = forward_kinematics(&p, &turned).position;
        prop_assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn negative_theta_is_the_same_arm(t in 0.05..PI - 0.05, d in -PI..PI) {
        let p = params();
        let a = forward_kinematics(&p, &Configuration::new(t, d).unwrap());
        let b = forward_kinematics(&p, &Configuration::new(-t, d + PI).unwrap());
        prop_assert!((a.position - b.position).norm() < 1e-12);
        prop_assert!((a.rotation - b.rotation).amax() < 1e-12);
    }

    #[test]
    fn backbone_chords_are_equal(psi in config(), count in 3usize..20) {
        let pts = sample_backbone(&params(), &psi, count).unwrap();
        let chords: Vec<f64> = pts.windows(2).map(|w| (w[1].point - w[0].point).norm()).collect();
        for c in &chords {
            prop_assert!((c - chords[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobians_match_differences(psi in config()) {
        let p = params();
        let x = DVector::from_vec(vec![psi.theta(), psi.delta()]);
        let at = |v: &DVector<f64>| Configuration::new(v[0], v[1]);
        let fd_v = finite_difference_oracle(
            |v| at(v).map(|c| DVector::from_column_slice(forward_kinematics(&p, &c).position.as_slice())),
            &x,
            1e-6,
        )
        .unwrap();
        let fd_q = finite_difference_oracle(|v| at(v).map(|c| configuration_to_joints(&p, &c).displacements), &x, 1e-6)
            .unwrap();
        let j_v = jacobian_v_psi(&p, &psi);
        let j_q = jacobian_q_psi(&p, &psi);
        for (fd, an) in [(fd_v, j_v.as_slice().to_vec()), (fd_q, j_q.as_slice().to_vec())] {
            let an = DVector::from_vec(an);
            let fd = DVector::from_column_slice(fd.as_slice());
            prop_assert!((fd - &an).norm() < 1e-6 * an.norm());
        }
    }

    #[test]
    fn vectorized_angular_jacobian_agrees(psi in config()) {
        let p = params();
        let a = jacobian_w_psi_vectorized(&p, &psi);
        let b = jacobian_w_psi(&p, &psi);
        prop_assert!((a - b).amax() < 1e-10);
        let r = forward_kinematics(&p, &psi).rotation;
        let d = stacked_skew_matrix(&r);
        prop_assert!((d.transpose() * d - Matrix3::identity() * 2.0).amax() < 1e-12);
        prop_assert_eq!(numerical_rank(&d, 1e-12), 3);
    }

    #[test]
    fn statics_round_trip(psi in config(), f in ball(1.0), m in ball(0.05), pre in 0.0..2.0f64) {
        let p = params();
        let w = Wrench::new(f, m).unwrap();
        let report = allocate_tensions(&p, &psi, &w, pre).unwrap();
        prop_assert!(report.tensions.iter().all(|&t| t >= pre - 1e-12));
        let r = equilibrium_residual(&p, &psi, &report.tensions, &w).unwrap();
        prop_assert!(r.norm() < 1e-9);
    }

    #[test]
    fn wrapping_delta_changes_nothing(psi in config(), k in -3i32..3) {
        let c = Configuration::new(psi.theta(), psi.delta() + 2.0 * PI * k as f64).unwrap();
        prop_assert!((c.delta() - psi.delta()).abs() < 1e-12);
        prop_assert_eq!(c.theta(), psi.theta());
    }

    #[test]
    fn parameter_file_round_trips(l in 0.05..1.0f64, r in 0.002..0.05f64, e in 1e9..2e11f64) {
        let p = ArmParameters { backbone_length: l, pitch_radius: r, backbone_youngs_modulus: e, ..params() };
        let (back, _) = ArmParameters::from_toml_str(&p.to_toml_string()).unwrap();
        prop_assert_eq!(back, p);
    }
}
