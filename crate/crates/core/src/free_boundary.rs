//! Critical radius, necrotic core and the assembled physical profile.
//!
//! For a given radius the tumor is nonnecrotic exactly when `R <= R_c`,
//! where `R_c` is the radius at which the nonnecrotic center value drops to
//! `sigma_D`. Above `R_c` the necrotic fraction `eta(R)` is the unique root
//! of `F(eta, R) = U(eta, eta, R) - sigma_D`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::profile::{NutrientProfile, GRID_POINTS};
use crate::roots::{bracket_by_doubling, find_root, RootOptions};

/// Upper end of the necrotic-fraction search interval.
pub const ETA_MAX: f64 = 1.0 - 1e-6;

const MAX_DOUBLINGS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Nonnecrotic,
    Necrotic,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Nonnecrotic => "nonnecrotic",
            Phase::Necrotic => "necrotic",
        }
    }
}

/// Stationary nutrient field for one tumor radius.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TumorState {
    pub radius: f64,
    pub phase: Phase,
    /// Necrotic fraction `rho / R`; zero when nonnecrotic.
    pub eta: f64,
    /// Necrotic core radius.
    pub rho: f64,
    pub sigma_d: f64,
    /// Profile on the living shell, in the rescaled variable `s = r / R`.
    pub profile: NutrientProfile,
}

impl TumorState {
    /// Physical concentration at `r` in `[0, R]`: `sigma_D` in the core,
    /// the shell profile outside it.
    pub fn sigma_at(&self, r: f64) -> f64 {
        if self.phase == Phase::Necrotic && r <= self.rho {
            self.sigma_d
        } else {
            self.profile.interpolate(r / self.radius)
        }
    }

    /// `sigma(r)` on `points` uniform radii over `[0, R]`.
    pub fn physical_profile(&self, points: usize) -> Vec<(f64, f64)> {
        let n = points.max(2);
        (0..n)
            .map(|i| {
                let r = if i == n - 1 {
                    self.radius
                } else {
                    self.radius * i as f64 / (n - 1) as f64
                };
                (r, self.sigma_at(r))
            })
            .collect()
    }

    pub fn center_value(&self) -> f64 {
        self.sigma_at(0.0)
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius > 0.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius must be positive, got {radius}")))
    }
}

impl Model {
    /// Radius at which the nonnecrotic center value equals `sigma_D`.
    /// Computed once per model and memoized.
    pub fn critical_radius(&self) -> Result<f64> {
        if let Some(&r) = self.critical_radius_memo.get() {
            return Ok(r);
        }
        let r = self.radius_where_inner_value_hits_threshold(0.0, 1.0)?;
        Ok(*self.critical_radius_memo.get_or_init(|| r))
    }

    /// Root in `R` of `U(eta, eta, R) = sigma_D`, which is decreasing in `R`.
    fn radius_where_inner_value_hits_threshold(&self, eta: f64, start: f64) -> Result<f64> {
        let sigma_d = self.params().sigma_d;
        let residual = |r: f64| Ok(self.center_value(eta, r)? - sigma_d);
        let (lo, hi) = bracket_by_doubling(residual, start, -1.0, MAX_DOUBLINGS)?;
        if lo.0 == hi.0 {
            return Ok(lo.0);
        }
        let opts = RootOptions::new(self.tol(), 1e-14 * hi.0);
        Ok(find_root(residual, lo, hi, &opts)?.x)
    }

    /// Necrotic fraction `eta(R)` for `R >= R_c`.
    pub fn necrotic_fraction(&self, radius: f64) -> Result<f64> {
        check_radius(radius)?;
        let r_c = self.critical_radius()?;
        if radius < r_c {
            return Err(Error::Domain(format!(
                "R = {radius} is below the critical radius {r_c}: no necrotic core exists"
            )));
        }
        if radius == r_c {
            return Ok(0.0);
        }
        let sigma_d = self.params().sigma_d;
        let residual = |eta: f64| Ok(self.center_value(eta, radius)? - sigma_d);
        let f0 = residual(0.0)?;
        if f0 >= 0.0 {
            // R within solver noise of R_c
            return Ok(0.0);
        }
        let f_hi = residual(ETA_MAX)?;
        if !(f_hi > 0.0) {
            return Err(Error::Convergence(format!(
                "necrotic fraction at R = {radius} exceeds {ETA_MAX}"
            )));
        }
        let opts = RootOptions::new(self.tol(), 1e-15);
        Ok(find_root(residual, (0.0, f0), (ETA_MAX, f_hi), &opts)?.x)
    }

    /// Radius `R(eta)` whose necrotic fraction is `eta`; inverse of
    /// [`Model::necrotic_fraction`].
    pub fn radius_for_fraction(&self, eta: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::Domain(format!("eta must lie in [0, 1), got {eta}")));
        }
        let r_c = self.critical_radius()?;
        if eta == 0.0 {
            return Ok(r_c);
        }
        self.radius_where_inner_value_hits_threshold(eta, r_c)
    }

    /// Phase, necrotic core and nutrient profile of a tumor of radius `R`.
    /// `R = R_c` counts as nonnecrotic.
    pub fn assemble_state(&self, radius: f64) -> Result<TumorState> {
        self.assemble_state_on(radius, GRID_POINTS)
    }

    pub fn assemble_state_on(&self, radius: f64, points: usize) -> Result<TumorState> {
        check_radius(radius)?;
        let r_c = self.critical_radius()?;
        let (phase, eta) = if radius <= r_c {
            (Phase::Nonnecrotic, 0.0)
        } else {
            (Phase::Necrotic, self.necrotic_fraction(radius)?)
        };
        let profile = self.solve_profile_on(eta, radius, points)?;
        Ok(TumorState {
            radius,
            phase,
            eta,
            rho: eta * radius,
            sigma_d: self.params().sigma_d,
            profile,
        })
    }

    pub fn phase_of(&self, radius: f64) -> Result<Phase> {
        Ok(if radius <= self.critical_radius()? {
            Phase::Nonnecrotic
        } else {
            Phase::Necrotic
        })
    }
}
