//! Bracketed root finding for monotone scalar functions.
//!
//! Bisection accelerated by Illinois false-position steps. Every iterate
//! stays strictly inside the current sign-change bracket, and a plain
//! bisection step is forced whenever three iterations fail to halve it, so
//! convergence is never slower than bisection by more than a constant factor.

use crate::error::{Error, Result};

/// Coordinates in which the false-position line is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Secant {
    /// Interpolate linearly in `x`.
    Linear,
    /// `x` is a logarithm; interpolate linearly in `exp(x)`.
    Exponential,
    /// Always bisect.
    Bisection,
}

#[derive(Clone, Copy, Debug)]
pub struct RootOptions {
    /// Stop as soon as `|f(x)| <= ftol`.
    pub ftol: f64,
    /// Stop once the bracket is narrower than this.
    pub xtol: f64,
    pub max_iter: usize,
    pub secant: Secant,
}

impl RootOptions {
    pub fn new(ftol: f64, xtol: f64) -> Self {
        Self {
            ftol,
            xtol,
            max_iter: 500,
            secant: Secant::Linear,
        }
    }

    pub fn secant(mut self, secant: Secant) -> Self {
        self.secant = secant;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
    /// True when the bracket width, not the residual, ended the search.
    pub width_limited: bool,
    /// Final bracket.
    pub bracket: (f64, f64),
}

/// Finds a sign change of `f` inside `[a, b]` given `fa = f(a)` and
/// `fb = f(b)` of opposite signs. Infinite values are allowed and only
/// their sign is used.
pub fn find_root(
    mut f: impl FnMut(f64) -> Result<f64>,
    (a, fa): (f64, f64),
    (b, fb): (f64, f64),
    opts: &RootOptions,
) -> Result<Root> {
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::Convergence("NaN at bracket end".into()));
    }
    if fa == 0.0 || fa.abs() <= opts.ftol {
        return Ok(done(a, fa, 0, false, (a, b)));
    }
    if fb == 0.0 || fb.abs() <= opts.ftol {
        return Ok(done(b, fb, 0, false, (a, b)));
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Convergence(format!(
            "no sign change on [{a}, {b}]: f = {fa}, {fb}"
        )));
    }

    // s, t: bracket ends; (gs, gt): possibly halved values used for the line
    let (mut s, mut fs, mut gs) = (a, fa, fa);
    let (mut t, mut ft, mut gt) = (b, fb, fb);
    let mut side = 0i8;
    let mut width_history = [(t - s).abs(); 4];

    for iter in 1..=opts.max_iter {
        let width = (t - s).abs();
        if width <= opts.xtol {
            let (x, fx) = if fs.abs() <= ft.abs() { (s, fs) } else { (t, ft) };
            return Ok(done(x, fx, iter - 1, true, (s, t)));
        }
        let lo = s.min(t);
        let hi = s.max(t);
        let mid = 0.5 * (s + t);
        let force_bisect = iter > 3 && width > 0.5 * width_history[(iter + 1) % 4];
        width_history[iter % 4] = width;

        let mut x = if force_bisect || !gs.is_finite() || !gt.is_finite() {
            mid
        } else {
            match opts.secant {
                Secant::Bisection => mid,
                Secant::Linear => (s * gt - t * gs) / (gt - gs),
                Secant::Exponential => {
                    let es = (s - hi).exp();
                    let et = (t - hi).exp();
                    let e = (es * gt - et * gs) / (gt - gs);
                    hi + e.ln()
                }
            }
        };
        if !(x > lo && x < hi) {
            x = mid;
            if !(x > lo && x < hi) {
                let (x, fx) = if fs.abs() <= ft.abs() { (s, fs) } else { (t, ft) };
                return Ok(done(x, fx, iter - 1, true, (s, t)));
            }
        }

        let fx = f(x)?;
        if fx.is_nan() {
            return Err(Error::Convergence(format!("NaN residual at x = {x}")));
        }
        if fx == 0.0 || fx.abs() <= opts.ftol {
            return Ok(done(x, fx, iter, false, (s, t)));
        }
        if fx.signum() == ft.signum() {
            t = x;
            ft = fx;
            gt = fx;
            if side == -1 {
                gs *= 0.5;
            }
            side = -1;
        } else {
            s = x;
            fs = fx;
            gs = fx;
            if side == 1 {
                gt *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::Convergence(format!(
        "root finder exceeded {} iterations on [{}, {}]",
        opts.max_iter,
        s.min(t),
        s.max(t)
    )))
}

fn done(x: f64, fx: f64, iterations: usize, width_limited: bool, bracket: (f64, f64)) -> Root {
    Root {
        x,
        fx,
        iterations,
        width_limited,
        bracket: (bracket.0.min(bracket.1), bracket.0.max(bracket.1)),
    }
}

/// Expands a bracket for a monotone function by doubling (or halving)
/// `x` from `start` until the sign of `f` differs from the sign at `start`.
/// `sign_at_large` is the sign `f` takes for large `x`; `x` must be
/// positive. Returns two `(x, f(x))` pairs with opposite signs.
pub fn bracket_by_doubling(
    mut f: impl FnMut(f64) -> Result<f64>,
    start: f64,
    sign_at_large: f64,
    max_doublings: usize,
) -> Result<((f64, f64), (f64, f64))> {
    let f0 = f(start)?;
    if f0 == 0.0 {
        return Ok(((start, f0), (start, f0)));
    }
    // move toward larger x while the sign at start is not the large-x sign
    let toward_large = f0.signum() != sign_at_large;
    let factor = if toward_large { 2.0 } else { 0.5 };
    let (mut x_prev, mut f_prev) = (start, f0);
    for _ in 0..max_doublings {
        let x = x_prev * factor;
        let fx = f(x)?;
        if fx.signum() != f0.signum() || fx == 0.0 {
            return Ok(if x < x_prev {
                ((x, fx), (x_prev, f_prev))
            } else {
                ((x_prev, f_prev), (x, fx))
            });
        }
        x_prev = x;
        f_prev = fx;
    }
    Err(Error::Convergence(format!(
        "no sign change found within {max_doublings} doublings from {start}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_secant_solves_cubic() {
        let f = |x: f64| Ok(x * x * x - 2.0);
        let r = find_root(f, (0.0, -2.0), (2.0, 6.0), &RootOptions::new(1e-14, 1e-15)).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-13);
        assert!(r.iterations < 20, "{}", r.iterations);
    }

    #[test]
    fn bisection_matches_illinois() {
        let f = |x: f64| Ok(x.exp() - 3.0);
        let opts = RootOptions::new(0.0, 1e-12);
        let a = find_root(f, (0.0, -2.0), (2.0, 2f64.exp() - 3.0), &opts).unwrap();
        let b = find_root(
            f,
            (0.0, -2.0),
            (2.0, 2f64.exp() - 3.0),
            &opts.secant(Secant::Bisection),
        )
        .unwrap();
        assert!((a.x - 3f64.ln()).abs() < 1e-11);
        assert!((b.x - 3f64.ln()).abs() < 1e-11);
        assert!(a.iterations < b.iterations);
    }

    #[test]
    fn exponential_secant_is_exact_for_affine_in_exp() {
        // affine in exp(x), root far below the f64 range of exp(x)
        let target = -650.0;
        let f = |x: f64| Ok((x - target).exp() - 1.0);
        let r = find_root(
            f,
            (-700.0, (-50.0f64).exp() - 1.0),
            (0.0, f64::INFINITY),
            &RootOptions::new(1e-13, 1e-12).secant(Secant::Exponential),
        )
        .unwrap();
        assert!((r.x - target).abs() < 1e-12);
    }

    #[test]
    fn infinite_ends_fall_back_to_bisection() {
        let f = |x: f64| Ok(if x > 1.0 { f64::INFINITY } else { x - 0.3 });
        let r = find_root(f, (0.0, -0.3), (10.0, f64::INFINITY), &RootOptions::new(1e-12, 1e-14))
            .unwrap();
        assert!((r.x - 0.3).abs() < 1e-12);
    }

    #[test]
    fn same_sign_is_an_error() {
        let f = |x: f64| Ok(x);
        assert!(find_root(f, (1.0, 1.0), (2.0, 2.0), &RootOptions::new(1e-12, 1e-12)).is_err());
    }

    #[test]
    fn doubling_brackets_both_directions() {
        // decreasing, root at 37
        let f = |x: f64| Ok(37.0 - x);
        let ((a, fa), (b, fb)) = bracket_by_doubling(f, 1.0, -1.0, 60).unwrap();
        assert!(a < 37.0 && b > 37.0 && fa > 0.0 && fb < 0.0);
        // root at 1e-3
        let f = |x: f64| Ok(1e-3 - x);
        let ((a, _), (b, _)) = bracket_by_doubling(f, 1.0, -1.0, 60).unwrap();
        assert!(a < 1e-3 && b > 1e-3);
        assert!(bracket_by_doubling(|_| Ok(1.0), 1.0, -1.0, 10).is_err());
    }
}
