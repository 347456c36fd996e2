//! CSV and JSON output for profiles, trajectories and summaries.
//!
//! Floats in CSV are written with 17 significant digits in scientific
//! notation so identical runs give byte-identical files.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::evolution::Trajectory;
use crate::free_boundary::TumorState;
use crate::profile::NutrientProfile;
use crate::stationary::Dormant;

/// Fixed 17-significant-digit formatting.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON sidecar path next to a CSV output: same stem, `.json` extension.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

pub fn write_profile_csv(mut w: impl Write, profile: &NutrientProfile) -> Result<()> {
    writeln!(w, "s,u,u_prime")?;
    for i in 0..profile.s.len() {
        writeln!(
            w,
            "{},{},{}",
            fmt_num(profile.s[i]),
            fmt_num(profile.u[i]),
            fmt_num(profile.u_prime[i])
        )?;
    }
    Ok(())
}

pub fn write_physical_csv(mut w: impl Write, state: &TumorState, points: usize) -> Result<()> {
    writeln!(w, "r,sigma")?;
    for (r, sigma) in state.physical_profile(points) {
        writeln!(w, "{},{}", fmt_num(r), fmt_num(sigma))?;
    }
    Ok(())
}

pub fn write_trajectory_csv(mut w: impl Write, traj: &Trajectory) -> Result<()> {
    writeln!(w, "t,R,phase")?;
    for s in &traj.samples {
        writeln!(w, "{},{},{}", fmt_num(s.t), fmt_num(s.radius), s.phase.as_str())?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSidecar {
    pub eta: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub robin_residual: f64,
    pub tol: f64,
}

impl ProfileSidecar {
    pub fn new(profile: &NutrientProfile) -> Self {
        Self {
            eta: profile.eta,
            radius: profile.radius,
            robin_residual: profile.robin_residual,
            tol: profile.tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    #[serde(rename = "T")]
    pub time: f64,
    pub direction: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySidecar {
    pub verdict: String,
    #[serde(rename = "R_s")]
    pub stationary_radius: Option<f64>,
    pub transitions: Vec<TransitionRecord>,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub t_end: f64,
}

impl TrajectorySidecar {
    pub fn new(traj: &Trajectory) -> Self {
        Self {
            verdict: traj.verdict.as_str().to_string(),
            stationary_radius: traj.stationary_radius,
            transitions: traj
                .transitions
                .iter()
                .map(|t| TransitionRecord {
                    time: t.time,
                    direction: t.direction.as_str().to_string(),
                })
                .collect(),
            r0: traj.r0,
            t_end: traj.t_end,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdsOutput {
    pub sigma_tilde: f64,
    pub sigma_star: f64,
    #[serde(rename = "R_c_at_sigma_star")]
    pub critical_radius_at_sigma_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryOutput {
    pub exists: bool,
    #[serde(rename = "R_s")]
    pub stationary_radius: Option<f64>,
    pub eta: Option<f64>,
    pub rho: Option<f64>,
    pub classification: String,
}

impl StationaryOutput {
    pub fn new(d: &Dormant) -> Self {
        Self {
            exists: d.radius.is_some(),
            stationary_radius: d.radius,
            eta: d.state.as_ref().map(|s| s.eta),
            rho: d.state.as_ref().map(|s| s.rho),
            classification: d.classification.as_str().to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Model, ModelParams};

    #[test]
    fn numbers_have_seventeen_digits() {
        assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_num(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt_num(-2.5), "-2.5000000000000000e0");
    }

    #[test]
    fn profile_csv_rows_match_header() {
        let m = Model::with_default_tol(ModelParams::linear(1.0, 1.0, 0.6, 1.0, 1.0, 1.0, 0.5))
            .unwrap();
        let p = m.solve_profile_on(0.0, 1.0, 11).unwrap();
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 12);
        assert!(lines.iter().all(|l| l.split(',').count() == 3));

        let json = serde_json::to_string(&ProfileSidecar::new(&p)).unwrap();
        let back: ProfileSidecar = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ProfileSidecar::new(&p));
        assert!(json.contains("\"R\""));
    }

    #[test]
    fn sidecar_path_swaps_extension() {
        assert_eq!(sidecar_path(Path::new("out/traj.csv")), PathBuf::from("out/traj.json"));
    }
}
