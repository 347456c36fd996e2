//! Stationary nutrient profile on the rescaled shell `[eta, 1]`.
//!
//! Solves `u'' + (2/s) u' = R^2 f(u)` with `u'(eta) = 0` and the Robin
//! condition `u'(1) + beta R (u(1) - sigma_bar) = 0` by shooting on the
//! inner value `a = u(eta)`.
//!
//! The initial value problem is integrated for `w = ln u` and `p = u'/u`:
//!
//! ```text
//! w' = p,    p' = R^2 f(u)/u - p^2 - 2p/s
//! ```
//!
//! Since `f(u)/u <= M`, this system stays bounded even when the inner value
//! is far below the smallest positive `f64` (large radii with linear
//! consumption give `a ~ exp(-R)`). The match residual is monotone in `a`,
//! which the root finder exploits and the solver re-checks on every sample.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Model, ModelParams, RateFunction};
use crate::ode::{Advance, Dopri5, Tolerance};
use crate::roots::{find_root, RootOptions, Secant};

/// Default number of output points on `[eta, 1]`.
pub const GRID_POINTS: usize = 1025;

const MAX_STEPS: usize = 200_000;

/// Solved profile `u(s) = U(s, eta, R)` on a uniform grid over `[eta, 1]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NutrientProfile {
    pub eta: f64,
    pub radius: f64,
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    /// `du/ds` at each grid point.
    pub u_prime: Vec<f64>,
    /// `u'(1) + beta R (u(1) - sigma_bar)`.
    pub robin_residual: f64,
    pub tol: f64,
}

impl NutrientProfile {
    /// `u(eta)`.
    pub fn center_value(&self) -> f64 {
        self.u[0]
    }

    pub fn spacing(&self) -> f64 {
        (1.0 - self.eta) / (self.s.len() - 1) as f64
    }

    /// Cubic Hermite interpolation of `u` at `s` in `[eta, 1]`.
    pub fn interpolate(&self, s: f64) -> f64 {
        let n = self.s.len();
        let h = self.spacing();
        let pos = ((s - self.eta) / h).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        let t = pos - i as f64;
        hermite(
            t,
            h,
            (self.u[i], self.u_prime[i]),
            (self.u[i + 1], self.u_prime[i + 1]),
        )
    }

    /// Lists every violated profile invariant. Empty for a healthy solve.
    ///
    /// `robin_slack` multiplies the tolerance allowed on the Robin residual.
    pub fn invariant_violations(&self, params: &ModelParams, robin_slack: f64) -> Vec<String> {
        let mut out = Vec::new();
        let r2 = self.radius * self.radius;
        let sb = params.sigma_bar;
        let h = self.spacing();
        for (i, (&s, (&u, &du))) in self
            .s
            .iter()
            .zip(self.u.iter().zip(&self.u_prime))
            .enumerate()
        {
            if !(u > 0.0 && u < sb) {
                out.push(format!("u({s}) = {u} outside (0, {sb})"));
            }
            if i == 0 {
                if du != 0.0 {
                    out.push(format!("u'(eta) = {du} is not zero"));
                }
                continue;
            }
            if !(du > 0.0) {
                out.push(format!("u'({s}) = {du} is not positive"));
            }
            let cap = s * r2 * params.f.value(u) / 3.0;
            if du > cap * (1.0 + 1e-7) + 1e-12 {
                out.push(format!("u'({s}) = {du} exceeds s R^2 f(u)/3 = {cap}"));
            }
            if u < self.u[i - 1] {
                out.push(format!("u decreases at s = {s}"));
            }
            if i + 1 < self.s.len() {
                let second = (self.u_prime[i + 1] - self.u_prime[i - 1]) / (2.0 * h);
                if second < du / s - 10.0 * h {
                    out.push(format!(
                        "u''({s}) = {second} below u'/s = {} beyond slack",
                        du / s
                    ));
                }
            }
        }
        if !(self.robin_residual.abs() <= robin_slack * self.tol) {
            out.push(format!(
                "Robin residual {} exceeds {} x tol",
                self.robin_residual, robin_slack
            ));
        }
        out
    }
}

pub(crate) fn hermite(t: f64, h: f64, (y0, d0): (f64, f64), (y1, d1): (f64, f64)) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Shooting problem for one `(eta, R)`.
struct Shooter<'a> {
    f: &'a RateFunction,
    eta: f64,
    radius: f64,
    r2: f64,
    beta: f64,
    sigma_bar: f64,
    ln_sigma_bar: f64,
    tol: f64,
}

#[derive(Clone, Copy, Debug)]
struct CenterSolve {
    ln_a: f64,
}

impl<'a> Shooter<'a> {
    fn new(params: &'a ModelParams, eta: f64, radius: f64, tol: f64) -> Self {
        Self {
            f: &params.f,
            eta,
            radius,
            r2: radius * radius,
            beta: params.beta,
            sigma_bar: params.sigma_bar,
            ln_sigma_bar: params.sigma_bar.ln(),
            tol,
        }
    }

    fn rhs(&self, s: f64, y: &[f64; 2]) -> [f64; 2] {
        let u = y[0].exp();
        let k = self.r2 * self.f.ratio(u);
        [y[1], k - y[1] * y[1] - 2.0 * y[1] / s]
    }

    /// Initial point of the integration and a first step size. At the
    /// center the equation is singular and the solution is started from
    /// its Taylor expansion `u ~ a + u''(0) s^2 / 2`, `u''(0) = R^2 f(a) / 3`.
    fn start(&self, ln_a: f64) -> (f64, [f64; 2], f64) {
        let k = self.r2 * self.f.ratio(ln_a.exp());
        let scale = k.sqrt().max(1.0);
        if self.eta == 0.0 {
            let h0 = 1e-5 / scale;
            let y = [ln_a + k * h0 * h0 / 6.0, k * h0 / 3.0];
            (h0, y, h0)
        } else {
            // regular point: exact data, u''(eta) = R^2 f(a) enters via the ODE
            let h = (0.01 * (1.0 - self.eta)).min(0.1 * self.eta).min(0.1 / scale);
            (self.eta, [ln_a, 0.0], h)
        }
    }

    fn tolerance(&self) -> Tolerance<2> {
        let t = 0.1 * self.tol;
        Tolerance {
            atol: [t, t],
            rtol: [0.0, t],
        }
    }

    /// Normalized match residual `u(1) - sigma_bar + u'(1) / (beta R)`,
    /// or `+inf` once `u` exceeds `sigma_bar` before `s = 1` (then the
    /// residual is certainly positive).
    fn residual(&self, ln_a: f64) -> Result<f64> {
        let (s0, y0, h0) = self.start(ln_a);
        let mut stepper =
            Dopri5::new(|s, y: &[f64; 2]| Ok(self.rhs(s, y)), s0, y0, h0, self.tolerance())?;
        let cut = self.ln_sigma_bar + 1e-9;
        let outcome = stepper.advance_to(1.0, MAX_STEPS, |_, y| y[0] > cut)?;
        if outcome == Advance::Stopped && stepper.t < 1.0 {
            return Ok(f64::INFINITY);
        }
        let u1 = stepper.y[0].exp();
        Ok(u1 - self.sigma_bar + u1 * stepper.y[1] / (self.beta * self.radius))
    }

    fn solve_center(&self) -> Result<CenterSolve> {
        let beta_r = self.beta * self.radius;
        let mut samples: Vec<(f64, f64)> = Vec::with_capacity(64);
        let mut eval = |x: f64| -> Result<f64> {
            let r = self.residual(x)?;
            samples.push((x, r));
            Ok(r)
        };

        let hi = self.ln_sigma_bar;
        let f_hi = eval(hi)?;
        if !(f_hi > 0.0) {
            return Err(Error::InternalConsistency(format!(
                "shooting residual at a = sigma_bar is {f_hi}, expected positive \
                 (eta = {}, R = {})",
                self.eta, self.radius
            )));
        }
        let growth = self.radius * self.f.bound().max(0.0).sqrt();
        let mut span = 2.0 * growth + 10.0;
        let (mut lo, mut f_lo) = (hi - span, eval(hi - span)?);
        let mut widen = 0;
        while f_lo >= 0.0 {
            widen += 1;
            if widen > 12 {
                return Err(Error::InternalConsistency(format!(
                    "shooting residual does not change sign on (0, sigma_bar] \
                     (eta = {}, R = {})",
                    self.eta, self.radius
                )));
            }
            span *= 2.0;
            lo = hi - span;
            f_lo = eval(lo)?;
        }

        let opts = RootOptions {
            ftol: self.tol * beta_r.recip().min(1.0),
            xtol: 1e-14 + 4.0 * f64::EPSILON * lo.abs().max(hi.abs()),
            max_iter: 400,
            secant: Secant::Exponential,
        };
        let root = find_root(&mut eval, (lo, f_lo), (hi, f_hi), &opts)?;
        if root.width_limited && !(root.fx.abs() <= 1e3 * self.tol) {
            return Err(Error::Convergence(format!(
                "shooting bracket collapsed with residual {} (eta = {}, R = {})",
                root.fx, self.eta, self.radius
            )));
        }
        self.check_monotone(&mut samples)?;
        Ok(CenterSolve { ln_a: root.x })
    }

    fn check_monotone(&self, samples: &mut [(f64, f64)]) -> Result<()> {
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in samples.windows(2) {
            let ((x0, r0), (x1, r1)) = (w[0], w[1]);
            let slack = 1e3 * self.tol + 1e-9 * r0.abs();
            if r1 < r0 - slack {
                return Err(Error::InternalConsistency(format!(
                    "shooting residual decreases between ln a = {x0} ({r0}) and {x1} ({r1}); \
                     the consumption rate is not increasing"
                )));
            }
        }
        Ok(())
    }

    fn profile(&self, center: CenterSolve, points: usize) -> Result<NutrientProfile> {
        let n = points;
        let h = (1.0 - self.eta) / (n - 1) as f64;
        let mut s = Vec::with_capacity(n);
        let mut u = Vec::with_capacity(n);
        let mut u_prime = Vec::with_capacity(n);
        s.push(self.eta);
        u.push(center.ln_a.exp());
        u_prime.push(0.0);

        let (s0, y0, h0) = self.start(center.ln_a);
        let mut stepper =
            Dopri5::new(|s, y: &[f64; 2]| Ok(self.rhs(s, y)), s0, y0, h0, self.tolerance())?;
        for i in 1..n {
            let si = if i == n - 1 {
                1.0
            } else {
                self.eta + i as f64 * h
            };
            stepper.advance_to(si, MAX_STEPS, |_, _| false)?;
            let ui = stepper.y[0].exp();
            s.push(si);
            u.push(ui);
            u_prime.push(ui * stepper.y[1]);
        }
        let robin_residual =
            u_prime[n - 1] + self.beta * self.radius * (u[n - 1] - self.sigma_bar);
        Ok(NutrientProfile {
            eta: self.eta,
            radius: self.radius,
            s,
            u,
            u_prime,
            robin_residual,
            tol: self.tol,
        })
    }
}

fn check_shell(eta: f64, radius: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::Domain(format!("eta must lie in [0, 1), got {eta}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    Ok(())
}

impl Model {
    /// Solves the rescaled profile on the default 1025-point grid.
    pub fn solve_profile(&self, eta: f64, radius: f64) -> Result<NutrientProfile> {
        self.solve_profile_on(eta, radius, GRID_POINTS)
    }

    /// Solves the rescaled profile on `points` uniform points (odd, >= 3).
    pub fn solve_profile_on(&self, eta: f64, radius: f64, points: usize) -> Result<NutrientProfile> {
        check_shell(eta, radius)?;
        if points < 3 || points % 2 == 0 {
            return Err(Error::Domain(format!(
                "profile grid needs an odd number of points >= 3, got {points}"
            )));
        }
        let shooter = Shooter::new(self.params(), eta, radius, self.tol());
        let center = shooter.solve_center()?;
        shooter.profile(center, points)
    }

    /// Inner value `U(eta, eta, R)` of the profile.
    pub fn center_value(&self, eta: f64, radius: f64) -> Result<f64> {
        check_shell(eta, radius)?;
        let shooter = Shooter::new(self.params(), eta, radius, self.tol());
        Ok(shooter.solve_center()?.ln_a.exp())
    }
}

/// Closed-form profile for `f(u) = u`:
///
/// ```text
/// U(s) = (C / s) [eta R cosh((s - eta) R) + sinh((s - eta) R)]
/// C    = beta sigma_bar / [(eta R - 1/R + beta) sinh((1 - eta) R)
///                          + (1 - eta + beta eta R) cosh((1 - eta) R)]
/// ```
///
/// Evaluated in exponentially scaled form so that large radii do not
/// overflow, with the cancelling `-sinh(d)/R + (1 - eta) cosh(d)` pair in the
/// denominator rewritten as `(1 - eta)(cosh d - sinh(d)/d)`.
pub fn closed_form_linear(s: f64, eta: f64, radius: f64, beta: f64, sigma_bar: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eta) || !(s >= eta && s <= 1.0) {
        return Err(Error::Domain(format!(
            "closed form needs 0 <= eta <= s <= 1 with eta < 1, got eta = {eta}, s = {s}"
        )));
    }
    if !(radius > 0.0 && beta > 0.0 && sigma_bar > 0.0)
        || !(radius.is_finite() && beta.is_finite() && sigma_bar.is_finite())
    {
        return Err(Error::Domain(format!(
            "closed form needs positive finite R, beta, sigma_bar, got {radius}, {beta}, {sigma_bar}"
        )));
    }
    let d = (1.0 - eta) * radius;
    let x = (s - eta) * radius;
    let e2d = (-2.0 * d).exp();
    let sh = 0.5 * (1.0 - e2d);
    let ch = 0.5 * (1.0 + e2d);
    let q = if d < 0.5 {
        cosh_minus_sinhc(d) * (-d).exp()
    } else {
        ch - sh / d
    };
    let er = eta * radius;
    let denom = (er + beta) * sh + beta * er * ch + (1.0 - eta) * q;

    if s == 0.0 {
        // eta = 0: sinh(sR)/s -> R
        return Ok(beta * sigma_bar * radius * (-d).exp() / denom);
    }
    let cosh_x = 0.5 * ((x - d).exp() + (-x - d).exp());
    let sinh_x = if x < 20.0 {
        x.sinh() * (-d).exp()
    } else {
        0.5 * ((x - d).exp() - (-x - d).exp())
    };
    Ok(beta * sigma_bar * (er * cosh_x + sinh_x) / (s * denom))
}

/// `cosh d - sinh(d)/d` by its Taylor series, accurate for `d < 0.5`.
fn cosh_minus_sinhc(d: f64) -> f64 {
    // sum over k >= 1 of 2k d^(2k) / (2k + 1)!
    let d2 = d * d;
    let mut term = d2; // d^(2k)
    let mut fact = 6.0; // (2k + 1)!
    let mut sum = 0.0;
    for k in 1..=8 {
        sum += 2.0 * k as f64 * term / fact;
        term *= d2;
        fact *= (2 * k + 2) as f64 * (2 * k + 3) as f64;
    }
    sum
}
