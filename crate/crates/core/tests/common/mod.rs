//! Independent reference computations for the linear model `f(u) = lambda u`
//! with `lambda = 1` and `g(u) = mu (u - sigma_tilde)`.
//!
//! Everything here uses the textbook closed form evaluated directly, plain
//! bisection and Gauss-Legendre quadrature, sharing no code with the solver.
#![allow(dead_code)]

use fbtumor_core::{Model, ModelParams};

#[derive(Clone, Copy, Debug)]
pub struct Linear {
    pub mu: f64,
    pub sigma_tilde: f64,
    pub sigma_bar: f64,
    pub beta: f64,
    pub nu: f64,
    pub sigma_d: f64,
}

impl Linear {
    pub const REFERENCE: Linear = Linear {
        mu: 1.0,
        sigma_tilde: 0.6,
        sigma_bar: 1.0,
        beta: 1.0,
        nu: 1.0,
        sigma_d: 0.5,
    };

    pub fn with_sigma_bar(self, sigma_bar: f64) -> Self {
        Self { sigma_bar, ..self }
    }

    pub fn params(&self) -> ModelParams {
        ModelParams::linear(
            1.0,
            self.mu,
            self.sigma_tilde,
            self.sigma_bar,
            self.beta,
            self.nu,
            self.sigma_d,
        )
    }

    pub fn model(&self) -> Model {
        Model::with_default_tol(self.params()).unwrap()
    }

    /// Closed-form nutrient `U(s, eta, R)`; valid for `R` up to a few hundred.
    pub fn u(&self, s: f64, eta: f64, r: f64) -> f64 {
        let d = (1.0 - eta) * r;
        let c = self.beta * self.sigma_bar
            / ((eta * r - 1.0 / r + self.beta) * d.sinh()
                + (1.0 - eta + self.beta * eta * r) * d.cosh());
        if s < 1e-12 {
            // only reachable with eta = 0
            return c * r;
        }
        let x = (s - eta) * r;
        c / s * (eta * r * x.cosh() + x.sinh())
    }

    pub fn center(&self, eta: f64, r: f64) -> f64 {
        self.u(eta, eta, r)
    }

    pub fn critical_radius(&self) -> f64 {
        let mut hi = 1.0;
        while self.center(0.0, hi) > self.sigma_d {
            hi *= 2.0;
        }
        let mut lo = hi;
        while self.center(0.0, lo) <= self.sigma_d {
            lo *= 0.5;
        }
        bisect(|r| self.center(0.0, r) - self.sigma_d, lo, hi)
    }

    pub fn eta(&self, r: f64) -> f64 {
        let r_c = self.critical_radius();
        if r <= r_c {
            return 0.0;
        }
        bisect(|e| self.center(e, r) - self.sigma_d, 0.0, 1.0 - 1e-9)
    }

    pub fn g(&self, u: f64) -> f64 {
        self.mu * (u - self.sigma_tilde)
    }

    pub fn growth(&self, r: f64) -> f64 {
        let eta = self.eta(r);
        let integral = gauss_legendre(|s| self.g(self.u(s, eta, r)) * s * s, eta, 1.0, 200);
        integral - self.nu * eta.powi(3) / 3.0
    }

    /// `G(R_c)` as a function of `sigma_bar`.
    pub fn growth_at_critical(&self) -> f64 {
        self.growth(self.critical_radius())
    }
}

pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    assert!(f_lo * f(hi) <= 0.0, "no sign change on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Composite 5-point Gauss-Legendre rule with `panels` equal panels.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        for (x, w) in X.iter().zip(W) {
            total += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * total
}

/// Sign change of a decreasing-or-increasing `f` on `[lo, hi]`, found by
/// a coarse scan of `coarse` points followed by a uniform scan with step
/// `resolution` inside the coarse bracket. Returns the fine bracket midpoint.
pub fn scan_root(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    coarse: usize,
    geometric: bool,
    resolution: f64,
) -> Option<f64> {
    let at = |k: usize| {
        let t = k as f64 / (coarse - 1) as f64;
        if geometric {
            lo * (hi / lo).powf(t)
        } else {
            lo + (hi - lo) * t
        }
    };
    let mut prev = (at(0), f(at(0)));
    for k in 1..coarse {
        let x = at(k);
        let fx = f(x);
        if (fx > 0.0) != (prev.1 > 0.0) {
            let (a, b) = (prev.0, x);
            let n = ((b - a) / resolution).ceil() as usize;
            let step = (b - a) / n as f64;
            let mut p = (a, prev.1);
            for j in 1..=n {
                let y = a + j as f64 * step;
                let fy = f(y);
                if (fy > 0.0) != (p.1 > 0.0) {
                    return Some(0.5 * (p.0 + y));
                }
                p = (y, fy);
            }
            return Some(0.5 * (a + b));
        }
        prev = (x, fx);
    }
    None
}

/// Transition time from `r0` to `r_c` under `R' = R G(R)`, as the integral
/// of `1 / G(e^x)` over `x` between `ln r0` and `ln r_c`.
pub fn crossing_time(case: &Linear, r0: f64, r_c: f64) -> f64 {
    gauss_legendre(|x| 1.0 / case.growth(x.exp()), r0.ln(), r_c.ln(), 64)
}
