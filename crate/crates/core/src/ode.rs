//! Adaptive Dormand-Prince 5(4) integrator with first-same-as-last stages.
//!
//! The stepper exposes single trial steps (`attempt`/`accept`) so callers
//! can add their own acceptance rules, plus `advance_to` for plain
//! integration that lands exactly on a target abscissa.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

// fifth-order weights, also the last stage row
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// embedded fourth-order weights
const BS1: f64 = 5179.0 / 57600.0;
const BS3: f64 = 7571.0 / 16695.0;
const BS4: f64 = 393.0 / 640.0;
const BS5: f64 = -92097.0 / 339200.0;
const BS6: f64 = 187.0 / 2100.0;
const BS7: f64 = 1.0 / 40.0;

const E1: f64 = B1 - BS1;
const E3: f64 = B3 - BS3;
const E4: f64 = B4 - BS4;
const E5: f64 = B5 - BS5;
const E6: f64 = B6 - BS6;
const E7: f64 = -BS7;

const SAFETY: f64 = 0.9;
const MAX_GROWTH: f64 = 5.0;
const MAX_SHRINK: f64 = 0.2;

/// Per-component error weights: component `i` is accepted when
/// `|err_i| <= atol_i + rtol_i * max(|y_i|, |y_new_i|)`.
#[derive(Clone, Copy, Debug)]
pub struct Tolerance<const N: usize> {
    pub atol: [f64; N],
    pub rtol: [f64; N],
}

impl<const N: usize> Tolerance<N> {
    pub fn uniform(atol: f64, rtol: f64) -> Self {
        Self {
            atol: [atol; N],
            rtol: [rtol; N],
        }
    }
}

/// Outcome of one trial step.
#[derive(Clone, Copy, Debug)]
pub struct Trial<const N: usize> {
    pub h: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
    /// Weighted max-norm of the local error estimate; `<= 1` passes.
    pub err: f64,
}

impl<const N: usize> Trial<N> {
    pub fn passes(&self) -> bool {
        self.err <= 1.0
    }
}

/// Step-size update from a normalized error.
pub fn next_step(h: f64, err: f64) -> f64 {
    let factor = if err == 0.0 {
        MAX_GROWTH
    } else if !err.is_finite() {
        MAX_SHRINK
    } else {
        (SAFETY * err.powf(-0.2)).clamp(MAX_SHRINK, MAX_GROWTH)
    };
    h * factor
}

pub struct Dopri5<F, const N: usize> {
    rhs: F,
    tol: Tolerance<N>,
    pub t: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
    /// Step size proposed for the next attempt.
    pub h: f64,
    pub accepted: usize,
    pub rejected: usize,
}

impl<F, const N: usize> Dopri5<F, N>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    pub fn new(mut rhs: F, t0: f64, y0: [f64; N], h0: f64, tol: Tolerance<N>) -> Result<Self> {
        let dy = rhs(t0, &y0)?;
        Ok(Self {
            rhs,
            tol,
            t: t0,
            y: y0,
            dy,
            h: h0,
            accepted: 0,
            rejected: 0,
        })
    }

    /// One trial step of size `h` from the current state. State is unchanged.
    pub fn attempt(&mut self, h: f64) -> Result<Trial<N>> {
        let (t, y, k1) = (self.t, self.y, self.dy);
        let stage = |coef: &[(f64, &[f64; N])]| {
            let mut out = y;
            for (i, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (c, k) in coef {
                    acc += c * k[i];
                }
                *o += h * acc;
            }
            out
        };
        let k2 = (self.rhs)(t + C2 * h, &stage(&[(A21, &k1)]))?;
        let k3 = (self.rhs)(t + C3 * h, &stage(&[(A31, &k1), (A32, &k2)]))?;
        let k4 = (self.rhs)(t + C4 * h, &stage(&[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = (self.rhs)(
            t + C5 * h,
            &stage(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = (self.rhs)(
            t + h,
            &stage(&[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        )?;
        let y_new = stage(&[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = (self.rhs)(t + h, &y_new)?;

        let mut err: f64 = 0.0;
        for i in 0..N {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = self.tol.atol[i] + self.tol.rtol[i] * y[i].abs().max(y_new[i].abs());
            let ratio = e.abs() / scale;
            if !ratio.is_finite() || !y_new[i].is_finite() {
                err = f64::INFINITY;
            } else {
                err = err.max(ratio);
            }
        }
        Ok(Trial {
            h,
            y: y_new,
            dy: k7,
            err,
        })
    }

    pub fn accept(&mut self, trial: &Trial<N>) {
        self.t += trial.h;
        self.y = trial.y;
        self.dy = trial.dy;
        self.accepted += 1;
    }

    /// Integrates until `t_target`, landing on it exactly. `stop` is consulted
    /// after every accepted step and ends the integration early when it
    /// returns true.
    pub fn advance_to(
        &mut self,
        t_target: f64,
        max_steps: usize,
        mut stop: impl FnMut(f64, &[f64; N]) -> bool,
    ) -> Result<Advance> {
        let dir = (t_target - self.t).signum();
        loop {
            let remaining = t_target - self.t;
            if remaining * dir <= 0.0 {
                return Ok(Advance::Reached);
            }
            if self.accepted + self.rejected >= max_steps {
                return Err(Error::Convergence(format!(
                    "integrator exceeded {max_steps} steps at t = {}",
                    self.t
                )));
            }
            let mut h = self.h.abs().min(remaining.abs()) * dir;
            let last = (remaining - h).abs() <= 1e-12 * remaining.abs().max(self.t.abs());
            if last {
                h = remaining;
            }
            let trial = self.attempt(h)?;
            if trial.passes() {
                self.accept(&trial);
                if last {
                    self.t = t_target;
                }
                // keep the proposal from the unclipped step when clipping
                let proposal = next_step(h, trial.err);
                if !last || proposal.abs() > self.h.abs() {
                    self.h = proposal;
                }
                if stop(self.t, &self.y) {
                    return Ok(Advance::Stopped);
                }
            } else {
                self.rejected += 1;
                self.h = next_step(h, trial.err);
                if self.h.abs() <= 1e-15 * self.t.abs().max(1e-300) {
                    return Err(Error::Convergence(format!(
                        "step size underflow at t = {}",
                        self.t
                    )));
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Advance {
    Reached,
    Stopped,
}
