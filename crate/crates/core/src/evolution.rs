//! Quasi-static radius evolution `R' = R G(R)`.
//!
//! The scalar ODE is integrated in `x = ln R`, where it reads `x' = G(e^x)`,
//! so an absolute error bound on `x` is a relative one on `R` and vanishing
//! tumors never underflow. Crossings of the critical radius are located by
//! re-stepping the crossing step with a shortened step size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_boundary::{Phase, TumorState};
use crate::model::Model;
use crate::ode::{next_step, Dopri5, Tolerance};
use crate::profile::hermite;
use crate::roots::{find_root, RootOptions};

/// Radius ratio `R / R0` below which the tumor counts as vanished.
pub const VANISH_RATIO: f64 = 1e-8;

const INITIAL_HORIZON: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Local error bound relative to the radius.
    pub tol: f64,
    /// Cap on attempted steps, accepted and rejected together.
    pub max_steps: usize,
    pub convergence_eps: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_steps: 1_000_000,
            convergence_eps: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub radius: f64,
    pub phase: Phase,
    pub dr_dt: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    NecroticToNonnecrotic,
    NonnecroticToNecrotic,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::NecroticToNonnecrotic => "NecroticToNonnecrotic",
            Direction::NonnecroticToNecrotic => "NonnecroticToNecrotic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub time: f64,
    pub direction: Direction,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Vanishes,
    ConvergesTo(f64),
    MaxTimeReached,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Vanishes => "Vanishes",
            Verdict::ConvergesTo(_) => "ConvergesTo",
            Verdict::MaxTimeReached => "MaxTimeReached",
        }
    }

    pub fn is_terminal(self) -> bool {
        !matches!(self, Verdict::MaxTimeReached)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub transitions: Vec<Transition>,
    pub verdict: Verdict,
    pub r0: f64,
    pub t_end: f64,
    pub stationary_radius: Option<f64>,
    pub critical_radius: f64,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    /// `R(t)` by cubic Hermite interpolation between samples.
    pub fn radius_at(&self, t: f64) -> Result<f64> {
        let first = self.samples[0].t;
        let last = self.last().t;
        if !(t >= first && t <= last) {
            return Err(Error::Domain(format!(
                "t = {t} outside the sampled interval [{first}, {last}]"
            )));
        }
        let k = self.samples.partition_point(|s| s.t <= t);
        if k == 0 {
            return Ok(self.samples[0].radius);
        }
        let a = &self.samples[k - 1];
        if a.t == t || k == self.samples.len() {
            return Ok(a.radius);
        }
        let b = &self.samples[k];
        let h = b.t - a.t;
        Ok(hermite((t - a.t) / h, h, (a.radius, a.dr_dt), (b.radius, b.dr_dt)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fate {
    pub verdict: Verdict,
    pub transition: Option<Transition>,
    pub trajectory: Trajectory,
}

/// Values of `G` at visited radii. A query between two cached radii whose
/// values differ by at most `tol` is answered by linear interpolation,
/// which is then within `tol` of `G` because `G` is monotone.
#[derive(Debug, Default)]
pub struct GrowthCache {
    entries: Vec<(f64, f64)>,
    tol: f64,
    pub hits: usize,
    pub misses: usize,
}

impl GrowthCache {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn get(&mut self, model: &Model, radius: f64) -> Result<f64> {
        let k = self.entries.partition_point(|&(r, _)| r < radius);
        if let Some(&(r, g)) = self.entries.get(k) {
            if r == radius {
                self.hits += 1;
                return Ok(g);
            }
        }
        if k > 0 && k < self.entries.len() {
            let (ra, ga) = self.entries[k - 1];
            let (rb, gb) = self.entries[k];
            if (ga - gb).abs() <= self.tol {
                self.hits += 1;
                return Ok(ga + (gb - ga) * (radius - ra) / (rb - ra));
            }
        }
        self.misses += 1;
        let g = model.growth_functional(radius)?;
        self.entries.insert(k, (radius, g));
        Ok(g)
    }
}

fn side(radius: f64, r_c: f64) -> i8 {
    if radius > r_c {
        1
    } else if radius < r_c {
        -1
    } else {
        0
    }
}

impl Model {
    /// Integrates the radius from `R0` up to `t_end`, stopping early on
    /// convergence to the stationary radius or on vanishing.
    pub fn evolve(&self, r0: f64, t_end: f64, opts: &EvolveOptions) -> Result<Trajectory> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::Domain(format!("t_end must be positive, got {t_end}")));
        }
        self.integrate(r0, t_end, opts, false)
    }

    /// Long-time behaviour from `R0`: the horizon is doubled until the
    /// trajectory converges or vanishes, or the step cap is reached.
    pub fn fate(&self, r0: f64, opts: &EvolveOptions) -> Result<Fate> {
        let trajectory = self.integrate(r0, INITIAL_HORIZON, opts, true)?;
        Ok(Fate {
            verdict: trajectory.verdict,
            transition: trajectory.transitions.first().copied(),
            trajectory,
        })
    }

    /// Quasi-static state at time `t` of a computed trajectory.
    pub fn transient_profile(&self, traj: &Trajectory, t: f64) -> Result<TumorState> {
        self.assemble_state(traj.radius_at(t)?)
    }

    fn integrate(
        &self,
        r0: f64,
        t_end: f64,
        opts: &EvolveOptions,
        extend: bool,
    ) -> Result<Trajectory> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::Domain(format!("R0 must be positive, got {r0}")));
        }
        if !(opts.tol > 0.0 && opts.convergence_eps > 0.0) {
            return Err(Error::Domain("tolerances must be positive".into()));
        }
        let r_c = self.critical_radius()?;
        let r_s = self.stationary_radius()?;
        let x_c = r_c.ln();
        let x0 = r0.ln();
        let x_vanish = x0 + VANISH_RATIO.ln();
        let overshoot = (1.0 + 0.5 * opts.convergence_eps).ln();
        let converged = |r: f64| r_s.is_some_and(|s| (r - s).abs() <= opts.convergence_eps * s);

        let mut cache = GrowthCache::new(opts.tol);
        let rhs = move |_t: f64, x: &[f64; 1]| Ok([cache.get(self, x[0].exp())?]);
        let g0 = self.growth_functional(r0)?;
        let h0 = (0.01 * t_end).min(0.1 / g0.abs().max(1e-12));
        let mut ode = Dopri5::new(rhs, 0.0, [x0], h0, Tolerance::uniform(opts.tol, 0.0))?;
        let dir = if converged(r0) { 0.0 } else { g0.signum() };
        let x_s = r_s.map(f64::ln);

        let mut traj = Trajectory {
            samples: vec![Sample {
                t: 0.0,
                radius: r0,
                phase: self.phase_of(r0)?,
                dr_dt: r0 * ode.dy[0],
            }],
            transitions: Vec::new(),
            verdict: Verdict::MaxTimeReached,
            r0,
            t_end,
            stationary_radius: r_s,
            critical_radius: r_c,
        };
        if converged(r0) {
            traj.verdict = Verdict::ConvergesTo(r_s.unwrap_or(r0));
            return Ok(traj);
        }
        let mut last_side = side(r0, r_c);
        let mut attempts = 0usize;

        loop {
            let remaining = traj.t_end - ode.t;
            if remaining <= 0.0 {
                if extend {
                    traj.t_end *= 2.0;
                    continue;
                }
                return Ok(traj);
            }
            if attempts >= opts.max_steps {
                if extend {
                    return Ok(traj);
                }
                let t = ode.t;
                return Err(Error::StepLimit {
                    max_steps: opts.max_steps,
                    t,
                    partial: Box::new(traj),
                });
            }
            attempts += 1;

            let mut h = ode.h.min(remaining);
            let lands = remaining - h <= 1e-12 * traj.t_end;
            if lands {
                h = remaining;
            }
            let trial = ode.attempt(h)?;
            let x_old = ode.y[0];
            let x_new = trial.y[0];
            let reverses = dir * (x_new - x_old) < 0.0;
            let overshoots = x_s.is_some_and(|xs| dir * (x_new - xs) > overshoot);
            if !trial.passes() || reverses || overshoots {
                ode.rejected += 1;
                ode.h = if trial.passes() {
                    0.5 * h
                } else {
                    next_step(h, trial.err)
                };
                if ode.h <= 1e-15 * ode.t.max(1e-300) {
                    return Err(Error::Convergence(format!(
                        "step size underflow at t = {}",
                        ode.t
                    )));
                }
                continue;
            }

            let new_side = side(x_new.exp(), r_c);
            if last_side != 0 && new_side != 0 && new_side != last_side {
                let t_a = ode.t;
                let phi = |hh: f64| Ok(ode.attempt(hh)?.y[0] - x_c);
                let root = find_root(
                    phi,
                    (0.0, x_old - x_c),
                    (h, x_new - x_c),
                    &RootOptions::new(1e-2 * opts.tol, opts.tol * (t_a + h)),
                )?;
                let event = ode.attempt(root.x)?;
                ode.accept(&event);
                attempts += 1;
                traj.samples.push(Sample {
                    t: ode.t,
                    radius: r_c,
                    phase: Phase::Nonnecrotic,
                    dr_dt: r_c * ode.dy[0],
                });
                traj.transitions.push(Transition {
                    time: ode.t,
                    direction: if last_side > 0 {
                        Direction::NecroticToNonnecrotic
                    } else {
                        Direction::NonnecroticToNecrotic
                    },
                });
                last_side = 0;
                continue;
            }

            ode.accept(&trial);
            if lands {
                ode.t = traj.t_end;
            }
            let proposal = next_step(h, trial.err);
            if !lands || proposal > ode.h {
                ode.h = proposal;
            }
            if new_side != 0 {
                last_side = new_side;
            }
            let radius = x_new.exp();
            traj.samples.push(Sample {
                t: ode.t,
                radius,
                phase: self.phase_of(radius)?,
                dr_dt: radius * ode.dy[0],
            });
            if converged(radius) {
                traj.verdict = Verdict::ConvergesTo(r_s.unwrap_or(radius));
                return Ok(traj);
            }
            if x_new <= x_vanish {
                traj.verdict = Verdict::Vanishes;
                return Ok(traj);
            }
        }
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
    fn cache_interpolates_only_flat_gaps() {
        let m = model(0.6, 1.0);
        let mut c = GrowthCache::new(1e-8);
        let a = c.get(&m, 1.0).unwrap();
        let b = c.get(&m, 1.0 + 1e-9).unwrap();
        assert_eq!(c.misses, 2);
        let mid = c.get(&m, 1.0 + 5e-10).unwrap();
        assert_eq!(c.hits, 1);
        assert!(mid <= a && mid >= b);
        c.get(&m, 3.0).unwrap();
        c.get(&m, 2.0).unwrap();
        assert_eq!(c.misses, 4);
        assert_eq!(c.get(&m, 2.0).unwrap(), m.growth_functional(2.0).unwrap());
    }

    #[test]
    fn starved_tumor_vanishes_inside_envelope() {
        let m = model(1.0, 0.8);
        let f = m.fate(1.0, &EvolveOptions::default()).unwrap();
        assert_eq!(f.verdict, Verdict::Vanishes);
        assert!(f.transition.is_none());
        let slack = (10.0 * 1e-8f64).exp();
        for s in &f.trajectory.samples {
            let upper = (-0.2 * s.t / 3.0).exp();
            let lower = (-s.t / 3.0).exp();
            assert!(s.radius <= upper * slack && s.radius >= lower / slack, "{s:?}");
        }
        assert!(f.trajectory.samples.windows(2).all(|w| w[1].radius < w[0].radius));
    }

    #[test]
    fn equilibrium_stays_put() {
        let m = model(0.6, 1.0);
        let r_s = m.stationary_radius().unwrap().unwrap();
        let traj = m.evolve(r_s, 5.0, &EvolveOptions::default()).unwrap();
        assert_eq!(traj.verdict, Verdict::ConvergesTo(r_s));
        assert!(traj.samples.iter().all(|s| (s.radius - r_s).abs() <= 10.0 * 1e-8));
    }

    #[test]
    fn shrinking_necrotic_tumor_crosses_once() {
        // sigma_star is about 0.945 here
        let m = model(0.6, 0.8);
        let r_c = m.critical_radius().unwrap();
        let f = m.fate(2.0 * r_c, &EvolveOptions::default()).unwrap();
        assert!(matches!(f.verdict, Verdict::ConvergesTo(_)));
        let tr = f.transition.unwrap();
        assert_eq!(tr.direction, Direction::NecroticToNonnecrotic);
        assert_eq!(f.trajectory.transitions.len(), 1);
        let at = m.transient_profile(&f.trajectory, tr.time).unwrap();
        assert_eq!(at.eta, 0.0);
        assert!((at.center_value() - 0.5).abs() < 1e-6);
        let t0 = m.transient_profile(&f.trajectory, 0.0).unwrap();
        assert_eq!(t0.radius, 2.0 * r_c);
        assert!(m.transient_profile(&f.trajectory, -1.0).is_err());
    }

    #[test]
    fn step_limit_returns_partial_trajectory() {
        let m = model(0.6, 1.0);
        let opts = EvolveOptions {
            max_steps: 3,
            ..EvolveOptions::default()
        };
        match m.evolve(0.5, 100.0, &opts) {
            Err(Error::StepLimit { partial, .. }) => {
                assert!(!partial.samples.is_empty());
                assert_eq!(partial.verdict, Verdict::MaxTimeReached);
            }
            other => panic!("expected step limit, got {other:?}"),
        }
    }
}
