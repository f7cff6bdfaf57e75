use continuum_core::kinematics::jacobian_v_psi;
use continuum_core::sim::{
    external_work, perching_offsets, run_perching_sweep, run_stiffness_sweep, solve_deflection,
    solve_perching_reaction, DeflectionModel, LoadDirection, LoadSchedule, PerchingOptions,
    SolverOptions, TendonLaw, TipLoad,
};
use continuum_core::stiffness::tendon_stiffness;
use continuum_core::{
    allocate_tensions, configuration_stiffness, equilibrium_residual, forward_kinematics,
    task_stiffness, ArmParameters, Configuration, TaskStiffnessOptions, TendonCoupling, Wrench,
};
use nalgebra::{Matrix3, Vector2, Vector3};

fn params() -> ArmParameters {
    ArmParameters::default()
}

fn inward(theta: f64, delta: f64) -> Vector3<f64> {
    Vector3::new(delta.cos() * theta.cos(), delta.sin() * theta.cos(), -theta.sin())
}

/// Linear compliance `J_v K_ψ⁻¹ J_vᵀ` about the unloaded equilibrium.
fn compliance(p: &ArmParameters, psi: &Configuration, pretension: f64) -> Matrix3<f64> {
    let tau = allocate_tensions(p, psi, &Wrench::zero(), pretension).unwrap().tensions;
    let k = configuration_stiffness(p, psi, &tau, TendonCoupling::Slackening).unwrap();
    let j = jacobian_v_psi(p, psi);
    j * k.try_inverse().unwrap() * j.transpose()
}

#[test]
fn small_load_matches_linear_compliance() {
    let p = params();
    let psi = Configuration::from_degrees(30.0, 0.0).unwrap();
    // Preloaded so every tendon stays taut over the small excursion.
    let pretension = 1.0;
    let f = 0.05 * inward(psi.theta(), psi.delta());
    let rec = solve_deflection(&p, &psi, &f, pretension, &SolverOptions::default()).unwrap();
    let lin = compliance(&p, &psi, pretension) * f;
    let k = lin.iamax();
    let rel = (rec.tip_displacement[k] - lin[k]).abs() / lin[k].abs();
    assert!(rel < 0.05, "rel {rel}: {} vs {}", rec.tip_displacement, lin);
}

#[test]
fn task_stiffness_inverts_compliance_on_range() {
    let p = params();
    let psi = Configuration::from_degrees(30.0, 20.0).unwrap();
    let tau = allocate_tensions(&p, &psi, &Wrench::zero(), 1.0).unwrap().tensions;
    let k_x = task_stiffness(&p, &psi, &tau, &Vector2::zeros(), &TaskStiffnessOptions::default())
        .unwrap();
    let c = compliance(&p, &psi, 1.0);
    let j = jacobian_v_psi(&p, &psi);
    // On the range of J_v, K_X C acts as the identity.
    let e = k_x * c * j;
    assert!((e - j).amax() < 1e-8 * j.amax(), "{e} vs {j}");
}

#[test]
fn solved_states_satisfy_residual_independently() {
    let p = params();
    for (t, d, f) in [
        (10.0, 0.0, Vector3::new(0.2, 0.0, 0.0)),
        (45.0, 60.0, Vector3::new(-0.3, 0.4, 0.1)),
        (80.0, -120.0, Vector3::new(0.0, 0.0, -0.8)),
    ] {
        let psi = Configuration::from_degrees(t, d).unwrap();
        let rec = solve_deflection(&p, &psi, &f, 0.2, &SolverOptions::default()).unwrap();
        let law = TendonLaw::locked_at(&p, &psi, 0.2).unwrap();
        let q = rec.equilibrium_config;
        let tau = law.tensions(&p, q.theta(), q.delta());
        let r = equilibrium_residual(&p, &q, &tau, &Wrench::from_force(f)).unwrap();
        assert!(r.norm() < 1e-10, "{t} {d}: {}", r.norm());
        assert!(rec.residual_norm < 1e-10);
    }
}

#[test]
fn straight_arm_is_softest() {
    let p = params();
    let configs: Vec<_> = [0.0, 15.0, 30.0, 45.0, 60.0]
        .iter()
        .map(|&t| Configuration::from_degrees(t, 0.0).unwrap())
        .collect();
    let loads = LoadSchedule::default().cycle_loads();
    let pts = run_stiffness_sweep(&p, &configs, &loads, LoadDirection::Inward, 0.0, &SolverOptions::default());
    let peaks: Vec<f64> = pts
        .chunks(loads.len())
        .map(|c| {
            c.iter()
                .map(|pt| pt.outcome.as_ref().unwrap().tip_displacement.norm())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(peaks.windows(2).all(|w| w[1] < w[0]), "{peaks:?}");
}

#[test]
fn work_matches_stored_energy() {
    let p = params();
    let psi = Configuration::from_degrees(30.0, 0.0).unwrap();
    let model = DeflectionModel::new(&p, &psi, 0.0, SolverOptions::default()).unwrap();
    let dir = inward(psi.theta(), psi.delta());
    let records: Vec<_> = (0..=10)
        .map(|k| model.solve(&TipLoad::Fixed(dir * 0.05 * k as f64)).unwrap())
        .collect();
    let work = external_work(&records);
    let e0 = model.law.stored_energy(&p, &model.reference_config());
    let e1 = model.law.stored_energy(&p, &records[10].equilibrium_config);
    let rel = (work - (e1 - e0)).abs() / (e1 - e0);
    assert!(rel < 0.02, "work {work}, energy {}", e1 - e0);
}

#[test]
fn perching_sweep_rises_falls_and_retraces() {
    let p = params();
    let psi = Configuration::from_degrees(30.0, 0.0).unwrap();
    let offsets = perching_offsets(0.010, 10, &Vector3::x());
    let pts = run_perching_sweep(&p, &psi, &offsets, &PerchingOptions::default()).unwrap();
    let mags: Vec<f64> = pts
        .iter()
        .map(|pt| pt.outcome.as_ref().unwrap().reaction_force.norm())
        .collect();
    let n = mags.len();
    assert!(mags[..=n / 2].windows(2).all(|w| w[1] > w[0]), "{mags:?}");
    assert!(mags[n / 2..].windows(2).all(|w| w[1] < w[0]), "{mags:?}");
    for k in 0..n {
        let a = pts[k].outcome.as_ref().unwrap().reaction_force;
        let b = pts[n - 1 - k].outcome.as_ref().unwrap().reaction_force;
        assert_eq!(a, b);
    }
    assert!(mags[n - 1] < 1e-9);
}

#[test]
fn tiny_perching_offset_is_linear() {
    let p = params();
    let psi = Configuration::from_degrees(30.0, 0.0).unwrap();
    let opts = PerchingOptions {
        pretension: 1.0,
        ..Default::default()
    };
    let anchor = forward_kinematics(&p, &psi).position;
    let eps = Vector3::new(1e-4, 0.0, 0.0);
    let rec = solve_perching_reaction(&p, &psi, &anchor, &eps, &opts).unwrap();

    let tau = allocate_tensions(&p, &psi, &Wrench::zero(), 1.0).unwrap().tensions;
    let k_x = task_stiffness(&p, &psi, &tau, &Vector2::zeros(), &TaskStiffnessOptions::default())
        .unwrap();
    let j = jacobian_v_psi(&p, &psi);
    let projector = j * (j.transpose() * j).try_inverse().unwrap() * j.transpose();
    // The tip moves by −ε relative to the base; the carrier feels the opposite of
    // the force needed to hold that displacement.
    let tip_force = k_x * (projector * -eps);
    let rel = (rec.reaction_force + tip_force).norm() / tip_force.norm();
    assert!(rel < 0.05, "rel {rel}: {} vs {}", rec.reaction_force, -tip_force);
}

#[test]
fn locked_tendons_match_tendon_stiffness() {
    let p = params();
    let psi = Configuration::from_degrees(20.0, 35.0).unwrap();
    let law = TendonLaw::locked_at(&p, &psi, 0.5).unwrap();
    assert_eq!(law.rate, tendon_stiffness(&p)[(0, 0)]);
    let tau = law.tensions(&p, psi.theta(), psi.delta());
    let expected = allocate_tensions(&p, &psi, &Wrench::zero(), 0.5).unwrap().tensions;
    assert!((tau - expected).amax() < 1e-12);
}

#[test]
fn task_stiffness_matches_solver_differences() {
    let p = params();
    let psi = Configuration::from_degrees(30.0, 0.0).unwrap();
    let pretension = 1.0;
    let model = DeflectionModel::new(&p, &psi, pretension, SolverOptions::default()).unwrap();
    let h = 0.02;
    let mut compliance = Matrix3::zeros();
    for j in 0..3 {
        let f = Vector3::ith(j, h);
        let plus = model.solve(&TipLoad::Fixed(f)).unwrap().tip_displacement;
        let minus = model.solve(&TipLoad::Fixed(-f)).unwrap().tip_displacement;
        compliance.set_column(j, &((plus - minus) / (2.0 * h)));
    }
    let fd_stiffness = compliance.pseudo_inverse(1e-6 * compliance.amax()).unwrap();

    let tau = allocate_tensions(&p, &psi, &Wrench::zero(), pretension).unwrap().tensions;
    let k_x = task_stiffness(&p, &psi, &tau, &Vector2::zeros(), &TaskStiffnessOptions::default()).unwrap();
    let scale = k_x.amax();
    for (a, b) in k_x.iter().zip(fd_stiffness.iter()) {
        if a.abs() > 0.1 * scale {
            assert!((a - b).abs() < 0.05 * a.abs(), "{k_x} vs {fd_stiffness}");
        }
    }
}
