use std::io::Write;

use continuum_core::kinematics::numerical_rank;
use continuum_core::sim::finite_difference_oracle;
use continuum_core::so3::vee;
use continuum_core::stiffness::{tendon_stiffness, DEFAULT_DAMPING};
use continuum_core::types::DEFAULT_THETA_MAX;
use continuum_core::{
    allocate_tensions, configuration_stiffness, configuration_to_joints, forward_kinematics,
    generalized_force, jacobian_w_psi_vectorized, task_stiffness, ArmParameters,
    Configuration, Error, TaskStiffnessOptions, Wrench,
};
use nalgebra::{DMatrix, DVector, Dim, Matrix, RawStorage, Vector2};
use serde_json::{json, Value};

use crate::{Failure, JacobianArgs, PointArgs, StiffnessArgs};

/// Sorts a model error into the exit-status classes.
pub fn classify(e: Error) -> Failure {
    let msg = e.to_string();
    match e {
        Error::Singular { .. } => Failure::Singular(msg),
        Error::Infeasible { .. }
        | Error::NonConvergence { .. }
        | Error::ForceCapExceeded { .. }
        | Error::Unreachable { .. }
        | Error::SweepPoint { .. } => Failure::Solver(msg),
        Error::MissingField(_) | Error::NonPositive { .. } | Error::Parse(_) => Failure::Params(msg),
        _ => Failure::Usage(msg),
    }
}

pub fn configuration(theta_deg: f64, delta_deg: f64) -> Result<Configuration, Failure> {
    let psi = Configuration::from_degrees(theta_deg, delta_deg).map_err(classify)?;
    psi.check_limit(DEFAULT_THETA_MAX).map_err(classify)?;
    Ok(psi)
}

fn rows<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> Value {
    json!((0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn write_matrix<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(
    out: &mut impl Write,
    name: &str,
    m: &Matrix<f64, R, C, S>,
) -> std::io::Result<()> {
    writeln!(out, "{name} {}x{}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.11e}", m[(i, j)])).collect();
        writeln!(out, "  {}", row.join(" "))?;
    }
    Ok(())
}

fn write_json(out: &mut impl Write, doc: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(doc).map_err(|e| Failure::Io(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

pub fn pose(params: &ArmParameters, args: &PointArgs, out: &mut impl Write) -> Result<(), Failure> {
    let psi = configuration(args.theta_deg, args.delta_deg)?;
    let pose = forward_kinematics(params, &psi);
    if args.json {
        return write_json(
            out,
            &json!({
                "theta_rad": psi.theta(),
                "delta_rad": psi.delta(),
                "position": pose.position.as_slice(),
                "rotation": rows(&pose.rotation),
            }),
        );
    }
    let p: Vec<String> = pose.position.iter().map(|v| format!("{v:.11e}")).collect();
    let r: Vec<String> = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|ij| format!("{:.11e}", pose.rotation[ij]))
        .collect();
    writeln!(out, "position {}", p.join(" "))?;
    writeln!(out, "rotation {}", r.join(" "))?;
    Ok(())
}

struct CheckReport {
    vectorized_vs_closed_form: f64,
    fd_j_q: f64,
    fd_j_v: f64,
    fd_j_w: f64,
}

fn max_rel(fd: &DMatrix<f64>, analytic: &[f64]) -> f64 {
    let scale = analytic.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    fd.iter()
        .zip(analytic)
        .fold(0.0f64, |a, (f, v)| a.max((f - v).abs()))
        / scale
}

fn check(params: &ArmParameters, psi: &Configuration) -> Result<CheckReport, Failure> {
    let set = continuum_core::jacobians(params, psi);
    let vectorized = jacobian_w_psi_vectorized(params, psi);
    let x = DVector::from_vec(vec![psi.theta(), psi.delta()]);
    let h = 1e-6;
    let at = |v: &DVector<f64>| Configuration::new(v[0], v[1]);

    let fd_q = finite_difference_oracle(|v| at(v).map(|c| configuration_to_joints(params, &c).displacements), &x, h);
    let fd_v = finite_difference_oracle(
        |v| at(v).map(|c| DVector::from_column_slice(forward_kinematics(params, &c).position.as_slice())),
        &x,
        h,
    );
    let r = forward_kinematics(params, psi).rotation;
    let fd_w = (0..2)
        .map(|j| {
            let mut plus = x.clone();
            plus[j] += h;
            let mut minus = x.clone();
            minus[j] -= h;
            let rp = forward_kinematics(params, &at(&plus)?).rotation;
            let rm = forward_kinematics(params, &at(&minus)?).rotation;
            Ok(vee(&((rp - rm) / (2.0 * h) * r.transpose())))
        })
        .collect::<Result<Vec<_>, Error>>()
        .map(|cols| DMatrix::from_fn(3, 2, |i, j| cols[j][i]));

    Ok(CheckReport {
        vectorized_vs_closed_form: (vectorized - set.j_w_psi).amax(),
        fd_j_q: max_rel(&fd_q.map_err(classify)?, set.j_q_psi.as_slice()),
        fd_j_v: max_rel(&fd_v.map_err(classify)?, set.j_v_psi.as_slice()),
        fd_j_w: max_rel(&fd_w.map_err(classify)?, set.j_w_psi.as_slice()),
    })
}

/// Relative singular-value cutoff for the reported rank of `J_x`.
const RANK_TOLERANCE: f64 = 1e-10;

pub fn jacobians(params: &ArmParameters, args: &JacobianArgs, out: &mut impl Write) -> Result<(), Failure> {
    let psi = configuration(args.point.theta_deg, args.point.delta_deg)?;
    let set = continuum_core::jacobians(params, &psi);
    let j_x = set.j_x_psi();
    let rank = numerical_rank(&j_x, RANK_TOLERANCE);
    if rank < 2 {
        log::warn!("J_x has rank {rank} < 2 at theta = {} rad: singular configuration", psi.theta());
    }
    let report = if args.check { Some(check(params, &psi)?) } else { None };

    if args.point.json {
        let mut doc = json!({
            "theta_rad": psi.theta(),
            "delta_rad": psi.delta(),
            "j_q": rows(&set.j_q_psi),
            "j_v": rows(&set.j_v_psi),
            "j_w": rows(&set.j_w_psi),
            "j_x": rows(&j_x),
            "j_x_rank": rank,
        });
        if let Some(r) = &report {
            doc["check"] = json!({
                "appendix_vs_analytic_max_abs": r.vectorized_vs_closed_form,
                "fd_j_q_max_rel": r.fd_j_q,
                "fd_j_v_max_rel": r.fd_j_v,
                "fd_j_w_max_rel": r.fd_j_w,
            });
        }
        return write_json(out, &doc);
    }

    write_matrix(out, "j_q", &set.j_q_psi)?;
    write_matrix(out, "j_v", &set.j_v_psi)?;
    write_matrix(out, "j_w", &set.j_w_psi)?;
    write_matrix(out, "j_x", &j_x)?;
    writeln!(out, "j_x_rank {rank}")?;
    if let Some(r) = report {
        writeln!(out, "appendix_vs_analytic_max_abs {:.3e}", r.vectorized_vs_closed_form)?;
        writeln!(out, "fd_j_q_max_rel {:.3e}", r.fd_j_q)?;
        writeln!(out, "fd_j_v_max_rel {:.3e}", r.fd_j_v)?;
        writeln!(out, "fd_j_w_max_rel {:.3e}", r.fd_j_w)?;
    }
    Ok(())
}

pub fn stiffness(params: &ArmParameters, args: &StiffnessArgs, out: &mut impl Write) -> Result<(), Failure> {
    let psi = configuration(args.point.theta_deg, args.point.delta_deg)?;
    let tensions = match &args.tensions {
        Some(t) => {
            if t.len() != params.tendon_count {
                return Err(Failure::Usage(format!(
                    "expected {} tensions, got {}",
                    params.tendon_count,
                    t.len()
                )));
            }
            DVector::from_column_slice(t)
        }
        None => {
            allocate_tensions(params, &psi, &Wrench::zero(), args.pretension)
                .map_err(classify)?
                .tensions
        }
    };
    let coupling = args.coupling.into();
    let k_psi = configuration_stiffness(params, &psi, &tensions, coupling).map_err(classify)?;
    let k_q = tendon_stiffness(params);
    let f_star = if args.zero_f_star {
        Vector2::zeros()
    } else {
        generalized_force(params, &psi, &tensions).map_err(classify)?
    };
    let opts = TaskStiffnessOptions {
        coupling,
        damping: args.damped.then_some(DEFAULT_DAMPING),
        ..Default::default()
    };
    let k_x = task_stiffness(params, &psi, &tensions, &f_star, &opts);

    if args.point.json {
        let mut doc = json!({
            "theta_rad": psi.theta(),
            "delta_rad": psi.delta(),
            "tensions": tensions.as_slice(),
            "f_star": f_star.as_slice(),
            "k_psi": rows(&k_psi),
            "k_q": rows(&k_q),
        });
        if let Ok(k) = &k_x {
            doc["k_x"] = rows(k);
        }
        write_json(out, &doc)?;
    } else {
        write_matrix(out, "tensions", &tensions.transpose())?;
        write_matrix(out, "k_psi", &k_psi)?;
        write_matrix(out, "k_q", &k_q)?;
        if let Ok(k) = &k_x {
            write_matrix(out, "k_x", k)?;
        }
    }
    k_x.map(|_| ()).map_err(classify)
}
