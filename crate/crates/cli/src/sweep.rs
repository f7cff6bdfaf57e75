use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use continuum_core::sim::{
    perching_offsets, run_perching_sweep, run_stiffness_sweep, LoadSchedule, PerchingOptions,
    SolverOptions, STANDARD_GRAVITY,
};
use continuum_core::ArmParameters;
use nalgebra::Vector3;

use crate::commands::{classify, configuration};
use crate::{AxisArg, Experiment, Failure, SweepArgs};

pub const STIFFNESS_HEADER: &str =
    "config_theta_deg,config_delta_deg,cycle,load_N,disp_x_m,disp_y_m,disp_z_m,iterations,status";
pub const PERCHING_HEADER: &str = "offset_m,fx_N,fy_N,fz_N,mx_Nm,my_Nm,mz_Nm,status";

/// CSV-safe status text.
fn status(e: &continuum_core::Error) -> String {
    e.to_string().replace([',', '\n', '"'], " ")
}

pub fn run(params: &ArmParameters, args: &SweepArgs) -> Result<(), Failure> {
    let (text, failures) = match args.experiment {
        Experiment::Stiffness => stiffness_csv(params, args)?,
        Experiment::Perching => perching_csv(params, args)?,
    };
    write_atomically(&args.out, &text)?;
    if failures > 0 {
        return Err(Failure::Solver(format!(
            "{failures} sweep point(s) failed; see the status column of {}",
            args.out.display()
        )));
    }
    Ok(())
}

fn solver_options(args: &SweepArgs) -> SolverOptions {
    SolverOptions {
        tolerance: args.tolerance,
        max_iterations: args.max_iterations,
        backtrack: args.backtrack,
        force_cap: args.force_cap,
    }
}

fn stiffness_csv(params: &ArmParameters, args: &SweepArgs) -> Result<(String, usize), Failure> {
    let schedule = LoadSchedule {
        increment: args.increment_g * 1e-3 * STANDARD_GRAVITY,
        steps: args.increments,
        cycles: args.cycles,
    };
    let configs = args
        .configs
        .iter()
        .map(|&t| configuration(t, args.delta_deg))
        .collect::<Result<Vec<_>, _>>()?;
    let points = schedule.loads();
    let loads: Vec<f64> = points.iter().map(|&(_, l)| l).collect();
    let results = run_stiffness_sweep(
        params,
        &configs,
        &loads,
        args.direction.into(),
        args.pretension,
        &solver_options(args),
    );

    let mut text = format!("{STIFFNESS_HEADER}\n");
    let mut failures = 0;
    let cycles = points.iter().cycle();
    for (pt, &(cycle, _)) in results.iter().zip(cycles) {
        let theta = pt.config.theta().to_degrees();
        let delta = pt.config.delta().to_degrees();
        match &pt.outcome {
            Ok(rec) => {
                let d = rec.tip_displacement;
                writeln!(
                    text,
                    "{theta:e},{delta:e},{cycle},{:e},{:e},{:e},{:e},{},ok",
                    pt.load, d.x, d.y, d.z, rec.solver_iterations
                )
            }
            Err(e) => {
                failures += 1;
                writeln!(text, "{theta:e},{delta:e},{cycle},{:e},NaN,NaN,NaN,0,{}", pt.load, status(e))
            }
        }
        .expect("writing to a String cannot fail");
    }
    Ok((text, failures))
}

fn perching_csv(params: &ArmParameters, args: &SweepArgs) -> Result<(String, usize), Failure> {
    let psi = configuration(args.theta_deg, args.delta_deg)?;
    let axis = match args.axis {
        AxisArg::X => Vector3::x(),
        AxisArg::Y => Vector3::y(),
        AxisArg::Z => Vector3::z(),
    };
    let offsets = perching_offsets(args.travel_mm * 1e-3, args.travel_steps, &axis);
    let opts = PerchingOptions {
        pretension: args.pretension,
        max_iterations: args.max_iterations,
        ..Default::default()
    };
    let results = run_perching_sweep(params, &psi, &offsets, &opts).map_err(classify)?;

    let mut text = format!("{PERCHING_HEADER}\n");
    let mut failures = 0;
    for pt in &results {
        let offset = pt.base_offset.dot(&axis);
        match &pt.outcome {
            Ok(rec) => {
                let (f, m) = (rec.reaction_force, rec.reaction_moment);
                writeln!(
                    text,
                    "{offset:e},{:e},{:e},{:e},{:e},{:e},{:e},ok",
                    f.x, f.y, f.z, m.x, m.y, m.z
                )
            }
            Err(e) => {
                failures += 1;
                writeln!(text, "{offset:e},NaN,NaN,NaN,NaN,NaN,NaN,{}", status(e))
            }
        }
        .expect("writing to a String cannot fail");
    }
    Ok((text, failures))
}

/// Writes `text` next to `path` and renames it into place.
fn write_atomically(path: &Path, text: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Failure::Io(e.error.to_string()))?;
    Ok(())
}
