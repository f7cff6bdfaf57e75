//! `continuum`: single-point queries and bench sweeps for the continuum arm model.

mod commands;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use continuum_core::sim::{LoadDirection, SolverOptions};
use continuum_core::{ArmParameters, TendonCoupling};

#[derive(Parser, Debug)]
#[command(name = "continuum", version, about = "Continuum arm kinematics, stiffness and bench sweeps")]
struct Cli {
    /// Parameter file (TOML). Falls back to the built-in defaults.
    #[arg(long, global = true, env = "CONTINUUM_PARAMS")]
    params: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// End-disk pose.
    Pose(PointArgs),
    /// Joint, linear, angular and stacked task Jacobians.
    Jacobians(JacobianArgs),
    /// Configuration, tendon and task stiffness.
    Stiffness(StiffnessArgs),
    /// Bench sweep written to CSV.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone, Copy)]
pub struct PointArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub theta_deg: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub delta_deg: f64,
    /// Emit a JSON document instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct JacobianArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Cross-check against the vectorized construction and finite differences.
    #[arg(long)]
    pub check: bool,
}

#[derive(Args, Debug)]
pub struct StiffnessArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Tendon tensions in N, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "equilibrium", required_unless_present = "equilibrium")]
    pub tensions: Option<Vec<f64>>,
    /// Use the minimum-norm unloaded equilibrium tensions.
    #[arg(long)]
    pub equilibrium: bool,
    /// Lower bound on equilibrium tensions (N).
    #[arg(long, default_value_t = 0.0)]
    pub pretension: f64,
    /// Use the damped pseudoinverse instead of refusing singular points.
    #[arg(long)]
    pub damped: bool,
    /// Evaluate K_X with F* = 0 instead of the value implied by the tensions.
    #[arg(long)]
    pub zero_f_star: bool,
    #[arg(long, value_enum, default_value_t = CouplingArg::Slackening)]
    pub coupling: CouplingArg,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingArg {
    Slackening,
    Tightening,
}

impl From<CouplingArg> for TendonCoupling {
    fn from(c: CouplingArg) -> Self {
        match c {
            CouplingArg::Slackening => TendonCoupling::Slackening,
            CouplingArg::Tightening => TendonCoupling::Tightening,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Stiffness,
    Perching,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionArg {
    Inward,
    Outward,
}

impl From<DirectionArg> for LoadDirection {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Inward => LoadDirection::Inward,
            DirectionArg::Outward => LoadDirection::Outward,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisArg {
    X,
    Y,
    Z,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub experiment: Experiment,
    #[arg(long)]
    pub out: PathBuf,

    /// Load increment in grams (stiffness).
    #[arg(long, default_value_t = 20.0)]
    pub increment_g: f64,
    /// Increments per loading branch (stiffness).
    #[arg(long, default_value_t = 5)]
    pub increments: usize,
    #[arg(long, default_value_t = 5)]
    pub cycles: usize,
    /// Commanded bending angles in degrees (stiffness).
    #[arg(long, value_delimiter = ',', default_value = "0,15,30,45,60")]
    pub configs: Vec<f64>,
    #[arg(long, value_enum, default_value_t = DirectionArg::Inward)]
    pub direction: DirectionArg,

    /// Commanded bending angle in degrees (perching).
    #[arg(long, default_value_t = 30.0)]
    pub theta_deg: f64,
    /// Bending-plane angle in degrees (both experiments).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub delta_deg: f64,
    /// Base travel in millimetres (perching).
    #[arg(long, default_value_t = 10.0)]
    pub travel_mm: f64,
    /// Offsets per travel branch (perching).
    #[arg(long, default_value_t = 10)]
    pub travel_steps: usize,
    #[arg(long, value_enum, default_value_t = AxisArg::X)]
    pub axis: AxisArg,

    /// Motor preload: minimum tendon tension (N).
    #[arg(long, default_value_t = 0.0)]
    pub pretension: f64,
    #[arg(long, default_value_t = SolverOptions::default().tolerance)]
    pub tolerance: f64,
    #[arg(long, default_value_t = SolverOptions::default().max_iterations)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = SolverOptions::default().backtrack)]
    pub backtrack: f64,
    #[arg(long, default_value_t = SolverOptions::default().force_cap)]
    pub force_cap: f64,
}

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Params(String),
    Singular(String),
    Solver(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Params(_) => 3,
            Failure::Singular(_) => 4,
            Failure::Solver(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m)
            | Failure::Params(m)
            | Failure::Singular(m)
            | Failure::Solver(m)
            | Failure::Io(m) => m,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn load_params(path: Option<&PathBuf>) -> Result<ArmParameters, Failure> {
    let (params, warnings) = match path {
        Some(p) => ArmParameters::from_file(p)
            .map_err(|e| Failure::Params(format!("{}: {e}", p.display())))?,
        None => (ArmParameters::default(), Vec::new()),
    };
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(params)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let params = load_params(cli.params.as_ref())?;
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Pose(args) => commands::pose(&params, &args, &mut out),
        Command::Jacobians(args) => commands::jacobians(&params, &args, &mut out),
        Command::Stiffness(args) => commands::stiffness(&params, &args, &mut out),
        Command::Sweep(args) => sweep::run(&params, &args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
