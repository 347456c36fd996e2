//! Parameter sweeps: one command evaluated on a uniform grid of one knob,
//! grid points in parallel, rows in grid order.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use fbtumor_core::io::{fmt_num, StationaryOutput};
use fbtumor_core::Model;
use rayon::prelude::*;

use crate::{thresholds, with_output, EvolveTolerances, Failure, FateOutput};

pub const THREADS_ENV: &str = "FBTUMOR_THREADS";

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    #[value(name = "sigma_bar")]
    SigmaBar,
    #[value(name = "beta")]
    Beta,
    #[value(name = "nu")]
    Nu,
    #[value(name = "R0")]
    R0,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::SigmaBar => "sigma_bar",
            Axis::Beta => "beta",
            Axis::Nu => "nu",
            Axis::R0 => "R0",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepCommand {
    Stationary,
    CriticalRadius,
    Thresholds,
    Fate,
}

impl SweepCommand {
    fn columns(self) -> &'static str {
        match self {
            SweepCommand::Stationary => "exists,R_s,classification",
            SweepCommand::CriticalRadius => "R_c",
            SweepCommand::Thresholds => "sigma_tilde,sigma_star,R_c_at_sigma_star",
            SweepCommand::Fate => "verdict,R_final,T_transition,direction",
        }
    }
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    axis: Axis,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long)]
    count: usize,
    #[arg(long, value_enum)]
    command: SweepCommand,
    /// Initial radius for `fate` when the axis is not `R0`.
    #[arg(long = "R0")]
    r0: Option<f64>,
    #[command(flatten)]
    tolerances: EvolveTolerances,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SweepArgs {
    fn grid(&self) -> Result<Vec<f64>, Failure> {
        if self.count == 0 {
            return Err(Failure::config("--count must be at least 1"));
        }
        let ordered = if self.count == 1 {
            self.to >= self.from
        } else {
            self.to > self.from
        };
        if !(self.from > 0.0 && self.to.is_finite() && ordered) {
            return Err(Failure::config(format!(
                "sweep range must be positive and ordered, got [{}, {}]",
                self.from, self.to
            )));
        }
        if self.axis == Axis::R0 && self.command != SweepCommand::Fate {
            return Err(Failure::config("the R0 axis only applies to --command fate"));
        }
        if self.command == SweepCommand::Fate && self.axis != Axis::R0 && self.r0.is_none() {
            return Err(Failure::config("--command fate needs --R0 unless sweeping R0"));
        }
        let n = self.count;
        Ok((0..n)
            .map(|k| {
                if k + 1 == n && n > 1 {
                    self.to
                } else if n == 1 {
                    self.from
                } else {
                    self.from + (self.to - self.from) * k as f64 / (n - 1) as f64
                }
            })
            .collect())
    }
}

fn thread_count() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn row(base: &Model, args: &SweepArgs, x: f64) -> Result<String, Failure> {
    let model = match args.axis {
        Axis::SigmaBar => base.with_sigma_bar(x)?,
        Axis::Beta | Axis::Nu => {
            let mut p = base.params().clone();
            if args.axis == Axis::Beta {
                p.beta = x;
            } else {
                p.nu = x;
            }
            Model::new(p, base.tol())?
        }
        Axis::R0 => base.clone(),
    };
    let fields = match args.command {
        SweepCommand::Stationary => {
            let s = StationaryOutput::new(&model.dormant()?);
            format!("{},{},{}", s.exists, opt(s.stationary_radius), s.classification)
        }
        SweepCommand::CriticalRadius => fmt_num(model.critical_radius()?),
        SweepCommand::Thresholds => {
            let t = thresholds(&model)?;
            format!(
                "{},{},{}",
                fmt_num(t.sigma_tilde),
                fmt_num(t.sigma_star),
                fmt_num(t.critical_radius_at_sigma_star)
            )
        }
        SweepCommand::Fate => {
            let r0 = if args.axis == Axis::R0 { x } else { args.r0.unwrap_or(x) };
            let f = FateOutput::run(&model, r0, &args.tolerances.options())?;
            format!(
                "{},{},{},{}",
                f.verdict,
                fmt_num(f.final_radius),
                opt(f.transition_time),
                f.direction.unwrap_or_default()
            )
        }
    };
    Ok(format!("{},{fields}", fmt_num(x)))
}

pub fn run(model: &Model, args: &SweepArgs) -> Result<(), Failure> {
    let grid = args.grid()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Failure::config(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<Result<String, Failure>> =
        pool.install(|| grid.par_iter().map(|&x| row(model, args, x)).collect());
    let rows: Vec<String> = rows.into_iter().collect::<Result<_, _>>()?;
    with_output(&args.out, |w: &mut dyn Write| {
        writeln!(w, "{},{}", args.axis.name(), args.command.columns())?;
        for r in &rows {
            writeln!(w, "{r}")?;
        }
        Ok(())
    })
}
