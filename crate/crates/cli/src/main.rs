//! `fbtumor`: command-line front end for the free-boundary tumor solver.

mod params;
mod sweep;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fbtumor_core::io::{
    sidecar_path, write_physical_csv, write_profile_csv, write_trajectory_csv, ProfileSidecar,
    StationaryOutput, ThresholdsOutput, TrajectorySidecar,
};
use fbtumor_core::model::SamplingGrid;
use fbtumor_core::{validate_params, Error, EvolveOptions, Model, GRID_POINTS};
use serde::Serialize;

use params::ParamArgs;
use sweep::SweepArgs;

#[derive(Parser, Debug)]
#[command(name = "fbtumor", version, about = "Free-boundary tumor growth solver")]
struct Cli {
    #[command(flatten)]
    params: ParamArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the modelling assumptions and report each one.
    Validate,
    /// Nutrient profile for a given radius.
    Profile(ProfileArgs),
    /// Radius at which a necrotic core first appears.
    CriticalRadius,
    /// Dormant radius and its classification.
    Stationary,
    /// Nutrient thresholds separating the dormant regimes.
    Thresholds,
    /// Integrate the radius up to a fixed time.
    Evolve(EvolveArgs),
    /// Long-time behaviour of the radius.
    Fate(FateArgs),
    /// Run one command across a parameter grid.
    Sweep(SweepArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[arg(long = "R")]
    radius: f64,
    /// Inner radius fraction of the living shell.
    #[arg(long, default_value_t = 0.0, conflicts_with = "physical")]
    eta: f64,
    /// Assemble the physical profile `r,sigma` including the necrotic core.
    #[arg(long)]
    physical: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct EvolveTolerances {
    /// Local error bound of the radius integrator, relative to the radius.
    #[arg(long, default_value_t = EvolveOptions::default().tol)]
    evolve_tol: f64,
    #[arg(long, default_value_t = EvolveOptions::default().max_steps)]
    max_steps: usize,
    #[arg(long, default_value_t = EvolveOptions::default().convergence_eps)]
    convergence_eps: f64,
}

impl EvolveTolerances {
    pub fn options(&self) -> EvolveOptions {
        EvolveOptions {
            tol: self.evolve_tol,
            max_steps: self.max_steps,
            convergence_eps: self.convergence_eps,
        }
    }
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[arg(long = "R0")]
    r0: f64,
    #[arg(long = "t-end")]
    t_end: f64,
    #[command(flatten)]
    tolerances: EvolveTolerances,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct FateArgs {
    #[arg(long = "R0")]
    r0: f64,
    #[command(flatten)]
    tolerances: EvolveTolerances,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with the process exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Convergence(_) | Error::InternalConsistency(_) | Error::StepLimit { .. } => 3,
            Error::InvalidParams(_) => 4,
            Error::Domain(_) | Error::Json(_) => 2,
            Error::Io(_) => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fbtumor: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let params = cli.params.resolve()?;
    if let Command::Validate = cli.command {
        let report = validate_params(&params, &SamplingGrid::for_params(&params));
        #[derive(Serialize)]
        struct Out<'a> {
            valid: bool,
            #[serde(flatten)]
            report: &'a fbtumor_core::ValidationReport,
        }
        print_json(&Out {
            valid: report.is_valid(),
            report: &report,
        })?;
        if !report.is_valid() {
            return Err(Failure {
                code: 4,
                message: report.summary(),
            });
        }
        return Ok(());
    }
    let model = Model::new(params, cli.params.tol)?;

    match cli.command {
        Command::Validate => unreachable!(),
        Command::Profile(args) => profile(&model, &args),
        Command::CriticalRadius => {
            #[derive(Serialize)]
            struct Out {
                #[serde(rename = "R_c")]
                critical_radius: f64,
            }
            print_json(&Out {
                critical_radius: model.critical_radius()?,
            })
        }
        Command::Stationary => print_json(&StationaryOutput::new(&model.dormant()?)),
        Command::Thresholds => print_json(&thresholds(&model)?),
        Command::Evolve(args) => evolve(&model, &args),
        Command::Fate(args) => {
            let out = FateOutput::run(&model, args.r0, &args.tolerances.options())?;
            match &args.out {
                Some(path) => write_json_file(path, &out),
                None => print_json(&out),
            }
        }
        Command::Sweep(args) => sweep::run(&model, &args),
    }
}

pub fn thresholds(model: &Model) -> Result<ThresholdsOutput, Failure> {
    let sigma_star = model.sigma_star()?;
    Ok(ThresholdsOutput {
        sigma_tilde: model.sigma_tilde(),
        sigma_star,
        critical_radius_at_sigma_star: model.with_sigma_bar(sigma_star)?.critical_radius()?,
    })
}

#[derive(Serialize, Debug)]
pub struct FateOutput {
    pub verdict: String,
    #[serde(rename = "R_s")]
    pub stationary_radius: Option<f64>,
    #[serde(rename = "R_final")]
    pub final_radius: f64,
    #[serde(rename = "T_transition")]
    pub transition_time: Option<f64>,
    pub direction: Option<String>,
    pub t_end: f64,
}

impl FateOutput {
    pub fn run(model: &Model, r0: f64, opts: &EvolveOptions) -> Result<Self, Failure> {
        let fate = model.fate(r0, opts)?;
        Ok(Self {
            verdict: fate.verdict.as_str().to_string(),
            stationary_radius: fate.trajectory.stationary_radius,
            final_radius: fate.trajectory.last().radius,
            transition_time: fate.transition.map(|t| t.time),
            direction: fate.transition.map(|t| t.direction.as_str().to_string()),
            t_end: fate.trajectory.t_end,
        })
    }
}

fn profile(model: &Model, args: &ProfileArgs) -> Outcome {
    let format = args.output.format.unwrap_or(Format::Csv);
    if args.physical {
        let state = model.assemble_state(args.radius)?;
        return match format {
            Format::Csv => {
                with_output(&args.output.out, |w| Ok(write_physical_csv(w, &state, GRID_POINTS)?))?;
                if let Some(path) = &args.output.out {
                    write_json_file(&sidecar_path(path), &ProfileSidecar::new(&state.profile))?;
                }
                Ok(())
            }
            Format::Json => emit_json(&args.output.out, &state),
        };
    }
    let prof = model.solve_profile(args.eta, args.radius)?;
    match format {
        Format::Csv => {
            with_output(&args.output.out, |w| Ok(write_profile_csv(w, &prof)?))?;
            if let Some(path) = &args.output.out {
                write_json_file(&sidecar_path(path), &ProfileSidecar::new(&prof))?;
            }
            Ok(())
        }
        Format::Json => emit_json(&args.output.out, &prof),
    }
}

fn evolve(model: &Model, args: &EvolveArgs) -> Outcome {
    let opts = args.tolerances.options();
    let traj = match model.evolve(args.r0, args.t_end, &opts) {
        Ok(t) => t,
        Err(Error::StepLimit {
            max_steps,
            t,
            partial,
        }) => {
            // keep what was computed before reporting the failure
            if let Some(path) = &args.output.out {
                write_trajectory_files(path, &partial)?;
            }
            return Err(Failure {
                code: 3,
                message: format!("step limit of {max_steps} reached at t = {t}"),
            });
        }
        Err(e) => return Err(e.into()),
    };
    match (args.output.format.unwrap_or(Format::Csv), &args.output.out) {
        (Format::Csv, Some(path)) => write_trajectory_files(path, &traj),
        (Format::Csv, None) => with_output(&None, |w| Ok(write_trajectory_csv(w, &traj)?)),
        (Format::Json, out) => emit_json(out, &traj),
    }
}

fn write_trajectory_files(path: &Path, traj: &fbtumor_core::Trajectory) -> Outcome {
    with_output(&Some(path.to_path_buf()), |w| Ok(write_trajectory_csv(w, traj)?))?;
    write_json_file(&sidecar_path(path), &TrajectorySidecar::new(traj))
}

pub fn with_output(
    out: &Option<PathBuf>,
    body: impl FnOnce(&mut dyn Write) -> Result<(), Failure>,
) -> Outcome {
    match out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| Failure::config(format!("cannot create {}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            body(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Outcome {
    match out {
        Some(path) => write_json_file(path, value),
        None => print_json(value),
    }
}

fn print_json<T: Serialize>(value: &T) -> Outcome {
    with_output(&None, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(Error::from)?;
        writeln!(w)?;
        Ok(())
    })
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Outcome {
    with_output(&Some(path.to_path_buf()), |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(Error::from)?;
        writeln!(w)?;
        Ok(())
    })
}
