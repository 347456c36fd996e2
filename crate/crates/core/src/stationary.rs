//! Growth functional, dormant (stationary) radius and nutrient thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_boundary::{Phase, TumorState};
use crate::model::{Model, FLAT_NECROTIC_BRANCH};
use crate::quadrature::simpson;
use crate::roots::{bracket_by_doubling, find_root, RootOptions};

const MAX_DOUBLINGS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    NoDormant,
    NonnecroticDormant,
    NecroticDormant,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::NoDormant => "NoDormant",
            Classification::NonnecroticDormant => "NonnecroticDormant",
            Classification::NecroticDormant => "NecroticDormant",
        }
    }
}

/// Dormant tumor for the model's `sigma_bar`, without the thresholds.
#[derive(Clone, Debug)]
pub struct Dormant {
    pub radius: Option<f64>,
    pub state: Option<TumorState>,
    pub classification: Classification,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StationaryResult {
    pub exists: bool,
    pub radius: Option<f64>,
    pub state: Option<TumorState>,
    pub sigma_tilde: f64,
    pub sigma_star: f64,
    pub critical_radius: f64,
    pub classification: Classification,
    /// Set when `|g(sigma_D) + nu|` is so small that `G` is nearly flat on
    /// the necrotic branch and the root tolerance dominates `R_s`.
    pub near_flat_necrotic_branch: bool,
}

impl Model {
    /// Normalized volume growth rate `G(R)` of the stationary state at `R`.
    pub fn growth_functional(&self, radius: f64) -> Result<f64> {
        let state = self.assemble_state(radius)?;
        Ok(self.growth_of_state(&state))
    }

    pub(crate) fn growth_of_state(&self, state: &TumorState) -> f64 {
        let p = self.params();
        let prof = &state.profile;
        let integrand: Vec<f64> = prof
            .s
            .iter()
            .zip(&prof.u)
            .map(|(&s, &u)| p.g.value(u) * s * s)
            .collect();
        let mut total = simpson(&integrand, prof.spacing());
        if state.phase == Phase::Necrotic {
            total -= p.nu * state.eta.powi(3) / 3.0;
        }
        total
    }

    /// Unique root of `G`, or `None` when `sigma_bar <= sigma_tilde`.
    pub fn stationary_radius(&self) -> Result<Option<f64>> {
        if self.params().sigma_bar <= self.sigma_tilde() {
            return Ok(None);
        }
        let r_c = self.critical_radius()?;
        let g_c = self.growth_functional(r_c)?;
        if g_c.abs() <= self.tol() {
            return Ok(Some(r_c));
        }
        let growth = |r: f64| self.growth_functional(r);
        let (lo, hi) = bracket_by_doubling(growth, r_c, -1.0, MAX_DOUBLINGS).map_err(|e| {
            Error::Convergence(format!("could not bracket the stationary radius: {e}"))
        })?;
        if lo.0 == hi.0 {
            return Ok(Some(lo.0));
        }
        let opts = RootOptions::new(self.tol(), 1e-14 * hi.0);
        Ok(Some(find_root(growth, lo, hi, &opts)?.x))
    }

    /// `G(R_c)` for the same model with `sigma_bar` replaced; its sign
    /// decides whether the dormant tumor is necrotic.
    pub fn growth_at_critical(&self, sigma_bar: f64) -> Result<f64> {
        let m = self.with_sigma_bar(sigma_bar)?;
        m.growth_functional(m.critical_radius()?)
    }

    /// Threshold `sigma_star > sigma_tilde` above which the dormant tumor
    /// has a necrotic core. Independent of the model's own `sigma_bar`.
    pub fn sigma_star(&self) -> Result<f64> {
        let start = self.sigma_tilde() * (1.0 + 1e-9);
        let growth = |sb: f64| self.growth_at_critical(sb);
        let (lo, hi) = bracket_by_doubling(growth, start, 1.0, MAX_DOUBLINGS)
            .map_err(|e| Error::Convergence(format!("could not bracket sigma_star: {e}")))?;
        if lo.0 == hi.0 {
            return Ok(lo.0);
        }
        if lo.0 < start {
            return Err(Error::Convergence(format!(
                "growth at the critical radius is already positive at sigma_bar = {start}"
            )));
        }
        let opts = RootOptions::new(self.tol(), 1e-14 * hi.0);
        Ok(find_root(growth, lo, hi, &opts)?.x)
    }

    /// Stationary radius, its state and the classification. A dormant tumor
    /// with `R_s <= R_c` is nonnecrotic.
    pub fn dormant(&self) -> Result<Dormant> {
        let Some(radius) = self.stationary_radius()? else {
            return Ok(Dormant {
                radius: None,
                state: None,
                classification: Classification::NoDormant,
            });
        };
        let state = self.assemble_state(radius)?;
        let classification = match state.phase {
            Phase::Nonnecrotic => Classification::NonnecroticDormant,
            Phase::Necrotic => Classification::NecroticDormant,
        };
        Ok(Dormant {
            radius: Some(radius),
            state: Some(state),
            classification,
        })
    }

    pub fn classify(&self) -> Result<StationaryResult> {
        let dormant = self.dormant()?;
        let p = self.params();
        Ok(StationaryResult {
            exists: dormant.radius.is_some(),
            radius: dormant.radius,
            state: dormant.state,
            sigma_tilde: self.sigma_tilde(),
            sigma_star: self.sigma_star()?,
            critical_radius: self.critical_radius()?,
            classification: dormant.classification,
            near_flat_necrotic_branch: (p.g.value(p.sigma_d) + p.nu).abs() < FLAT_NECROTIC_BRANCH,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelParams, DEFAULT_TOL};

    fn model(sigma_tilde: f64, sigma_bar: f64) -> Model {
        Model::new(
            ModelParams::linear(1.0, 1.0, sigma_tilde, sigma_bar, 1.0, 1.0, 0.5),
            DEFAULT_TOL,
        )
        .unwrap()
    }

    #[test]
    fn growth_limits_and_sign() {
        let m = model(0.6, 1.0);
        let small = m.growth_functional(1e-4).unwrap();
        assert!((small - 0.4 / 3.0).abs() < 1e-4, "{small}");
        let large = m.growth_functional(1e3).unwrap();
        assert!((large + 1.0 / 3.0).abs() < 1e-2, "{large}");

        let starved = model(1.0, 1.0);
        for r in [0.5, 1.0, 2.0] {
            assert!(starved.growth_functional(r).unwrap() < 0.0);
        }
    }

    #[test]
    fn growth_is_continuous_across_critical_radius() {
        let m = model(0.6, 1.0);
        let r_c = m.critical_radius().unwrap();
        let below = m.growth_functional(r_c * (1.0 - 1e-6)).unwrap();
        let at = m.growth_functional(r_c).unwrap();
        let above = m.growth_functional(r_c * (1.0 + 1e-6)).unwrap();
        assert!(below > at && at > above);
        assert!((below - above).abs() < 1e-5);
    }

    #[test]
    fn no_dormant_at_or_below_threshold() {
        assert_eq!(model(0.6, 0.6).stationary_radius().unwrap(), None);
        assert_eq!(model(0.6, 0.55).stationary_radius().unwrap(), None);
    }

    #[test]
    fn stationary_radius_is_a_root() {
        let m = model(0.6, 1.0);
        let r_s = m.stationary_radius().unwrap().unwrap();
        assert!(m.growth_functional(r_s).unwrap().abs() <= DEFAULT_TOL);
    }

    #[test]
    fn sigma_star_splits_classification() {
        let m = model(0.6, 1.0);
        let star = m.sigma_star().unwrap();
        assert!(star > 0.6);
        let below = model(0.6, star - 0.05).classify().unwrap();
        assert_eq!(below.classification, Classification::NonnecroticDormant);
        assert!(below.radius.unwrap() < below.critical_radius);
        let above = model(0.6, star + 0.05).classify().unwrap();
        assert_eq!(above.classification, Classification::NecroticDormant);
        assert!(above.state.unwrap().rho > 0.0);

        let at = model(0.6, star);
        let r_s = at.stationary_radius().unwrap().unwrap();
        let r_c = at.critical_radius().unwrap();
        assert!((r_s - r_c).abs() <= 1e-4 * r_c, "{r_s} vs {r_c}");
    }
}
