//! Rate functions, model parameters and the checks of the standing
//! assumptions every solver relies on.
//!
//! The consumption rate `f` must vanish at zero and have a positive, bounded
//! derivative. The proliferation rate `g` must be nondecreasing with a
//! declared root `sigma_tilde`. The necrosis threshold `sigma_D` must lie
//! below both `sigma_tilde` and the exterior concentration `sigma_bar`, and
//! `g(sigma_D) + nu >= 0`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute concentration tolerance shared by the nested solvers.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Below this `|g(sigma_D) + nu|` the necrotic branch of the growth
/// functional is nearly flat and dormant radii lose accuracy.
pub const FLAT_NECROTIC_BRANCH: f64 = 1e-6;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateRole {
    Consumption,
    Proliferation,
}

/// A user-supplied rate function.
#[derive(Clone)]
pub struct CustomRate {
    role: RateRole,
    value: ScalarFn,
    derivative: Option<ScalarFn>,
    bound: f64,
    root: Option<f64>,
}

impl fmt::Debug for CustomRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomRate")
            .field("role", &self.role)
            .field("has_derivative", &self.derivative.is_some())
            .field("bound", &self.bound)
            .field("root", &self.root)
            .finish()
    }
}

/// Nutrient consumption rate `f` or cell proliferation rate `g`.
///
/// Catalog kinds evaluate closed forms. `Custom` wraps a callable and falls
/// back to a central difference when no derivative is given.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum RateFunction {
    /// `f(s) = lambda * s`
    #[serde(rename = "linear")]
    ConsumptionLinear { lambda: f64 },
    /// `f(s) = vmax * s / (k + s)`
    #[serde(rename = "michaelis_menten")]
    ConsumptionMichaelisMenten { vmax: f64, k: f64 },
    /// `g(s) = mu * (s - sigma_tilde)`
    #[serde(rename = "proliferation_linear")]
    ProliferationLinear { mu: f64, sigma_tilde: f64 },
    #[serde(skip)]
    Custom(CustomRate),
}

impl RateFunction {
    pub fn linear(lambda: f64) -> Self {
        Self::ConsumptionLinear { lambda }
    }

    pub fn michaelis_menten(vmax: f64, k: f64) -> Self {
        Self::ConsumptionMichaelisMenten { vmax, k }
    }

    pub fn proliferation_linear(mu: f64, sigma_tilde: f64) -> Self {
        Self::ProliferationLinear { mu, sigma_tilde }
    }

    /// Custom consumption rate with a declared derivative bound `bound`.
    pub fn custom_consumption(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: Option<ScalarFn>,
        bound: f64,
    ) -> Self {
        Self::Custom(CustomRate {
            role: RateRole::Consumption,
            value: Arc::new(value),
            derivative,
            bound,
            root: None,
        })
    }

    /// Custom proliferation rate with declared derivative bound and root.
    pub fn custom_proliferation(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: Option<ScalarFn>,
        bound: f64,
        root: f64,
    ) -> Self {
        Self::Custom(CustomRate {
            role: RateRole::Proliferation,
            value: Arc::new(value),
            derivative,
            bound,
            root: Some(root),
        })
    }

    pub fn role(&self) -> RateRole {
        match self {
            Self::ConsumptionLinear { .. } | Self::ConsumptionMichaelisMenten { .. } => {
                RateRole::Consumption
            }
            Self::ProliferationLinear { .. } => RateRole::Proliferation,
            Self::Custom(c) => c.role,
        }
    }

    pub fn is_custom(&self) -> bool {
        matches!(self, Self::Custom(_))
    }

    /// Upper bound `M` on the derivative over `[0, inf)`.
    pub fn bound(&self) -> f64 {
        match *self {
            Self::ConsumptionLinear { lambda } => lambda,
            Self::ConsumptionMichaelisMenten { vmax, k } => vmax / k,
            Self::ProliferationLinear { mu, .. } => mu,
            Self::Custom(ref c) => c.bound,
        }
    }

    /// Declared root `sigma_tilde` of a proliferation rate.
    pub fn root(&self) -> Option<f64> {
        match *self {
            Self::ProliferationLinear { sigma_tilde, .. } => Some(sigma_tilde),
            Self::Custom(ref c) => c.root,
            _ => None,
        }
    }

    /// Checked evaluation.
    pub fn eval(&self, s: f64) -> Result<f64> {
        check_concentration(s)?;
        Ok(self.value(s))
    }

    /// Checked derivative.
    pub fn eval_deriv(&self, s: f64) -> Result<f64> {
        check_concentration(s)?;
        Ok(self.derivative(s))
    }

    /// Unchecked evaluation, `s >= 0` is the caller's responsibility.
    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        match *self {
            Self::ConsumptionLinear { lambda } => lambda * s,
            Self::ConsumptionMichaelisMenten { vmax, k } => vmax * s / (k + s),
            Self::ProliferationLinear { mu, sigma_tilde } => mu * (s - sigma_tilde),
            Self::Custom(ref c) => (c.value)(s),
        }
    }

    #[inline]
    pub fn derivative(&self, s: f64) -> f64 {
        match *self {
            Self::ConsumptionLinear { lambda } => lambda,
            Self::ConsumptionMichaelisMenten { vmax, k } => vmax * k / ((k + s) * (k + s)),
            Self::ProliferationLinear { mu, .. } => mu,
            Self::Custom(ref c) => match c.derivative {
                Some(ref d) => d(s),
                None => {
                    let h = (1e-6 * s).max(1e-6);
                    if s >= h {
                        ((c.value)(s + h) - (c.value)(s - h)) / (2.0 * h)
                    } else {
                        // one-sided at the left end of the domain
                        ((c.value)(s + h) - (c.value)(s)) / h
                    }
                }
            },
        }
    }

    /// `f(u) / u`, continued by `f'(0)` at `u = 0`.
    #[inline]
    pub fn ratio(&self, u: f64) -> f64 {
        match *self {
            Self::ConsumptionLinear { lambda } => lambda,
            Self::ConsumptionMichaelisMenten { vmax, k } => vmax / (k + u),
            _ => {
                if u < 1e-280 {
                    self.derivative(0.0)
                } else {
                    self.value(u) / u
                }
            }
        }
    }
}

fn check_concentration(s: f64) -> Result<()> {
    if s >= 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "rate functions are defined on [0, inf), got s = {s}"
        )))
    }
}

/// Full parameter set of the model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelParams {
    /// Nutrient consumption rate.
    pub f: RateFunction,
    /// Proliferation rate.
    pub g: RateFunction,
    /// Exterior nutrient concentration.
    pub sigma_bar: f64,
    /// Vascular transfer coefficient in the Robin condition.
    pub beta: f64,
    /// Dissolution rate of necrotic cells.
    pub nu: f64,
    /// Concentration below which cells die.
    #[serde(rename = "sigma_D")]
    pub sigma_d: f64,
}

impl ModelParams {
    /// Linear consumption `f(u) = lambda u` and linear proliferation
    /// `g(u) = mu (u - sigma_tilde)`.
    pub fn linear(
        lambda: f64,
        mu: f64,
        sigma_tilde: f64,
        sigma_bar: f64,
        beta: f64,
        nu: f64,
        sigma_d: f64,
    ) -> Self {
        Self {
            f: RateFunction::linear(lambda),
            g: RateFunction::proliferation_linear(mu, sigma_tilde),
            sigma_bar,
            beta,
            nu,
            sigma_d,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The proliferation root, or NaN when `g` declares none.
    pub fn sigma_tilde(&self) -> f64 {
        self.g.root().unwrap_or(f64::NAN)
    }
}

/// Concentration samples used to check `Custom` rate functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub sigma_max: f64,
    pub points: usize,
}

impl SamplingGrid {
    pub const MIN_POINTS: usize = 1000;

    pub fn for_params(p: &ModelParams) -> Self {
        let mut sigma_max = 2.0 * p.sigma_bar;
        if let Some(root) = p.g.root() {
            sigma_max = sigma_max.max(2.0 * root);
        }
        if !(sigma_max.is_finite() && sigma_max > 0.0) {
            sigma_max = 1.0;
        }
        Self {
            sigma_max,
            points: 1001,
        }
    }

    fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.points;
        (0..n).map(move |i| self.sigma_max * i as f64 / (n - 1) as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assumption {
    /// `sigma_bar`, `beta`, `nu`, `sigma_D` positive and finite.
    Positivity,
    /// `f(0) = 0`, `0 < f' <= M`.
    Consumption,
    /// `g' >= 0`, `g(sigma_tilde) = 0` with `sigma_tilde > 0`.
    Proliferation,
    /// `sigma_D < min(sigma_tilde, sigma_bar)` and `g(sigma_D) + nu >= 0`.
    NecrosisThreshold,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMethod {
    Analytic,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub assumption: Assumption,
    pub passed: bool,
    pub method: CheckMethod,
    pub detail: String,
    /// First concentration sample at which the check failed.
    pub first_violation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
    pub warnings: Vec<String>,
    pub grid: SamplingGrid,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, assumption: Assumption) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.assumption == assumption)
    }

    pub fn summary(&self) -> String {
        let failed: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{:?}: {}", c.assumption, c.detail))
            .collect();
        if failed.is_empty() {
            "all assumptions hold".to_string()
        } else {
            failed.join("; ")
        }
    }
}

struct CheckBuilder {
    assumption: Assumption,
    method: CheckMethod,
    failures: Vec<String>,
    first_violation: Option<f64>,
}

impl CheckBuilder {
    fn new(assumption: Assumption, method: CheckMethod) -> Self {
        Self {
            assumption,
            method,
            failures: Vec::new(),
            first_violation: None,
        }
    }

    fn require(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(msg());
        }
    }

    fn violation_at(&mut self, s: f64, msg: String) {
        if self.first_violation.is_none() {
            self.first_violation = Some(s);
            self.failures.push(msg);
        }
    }

    fn finish(self) -> AssumptionCheck {
        let passed = self.failures.is_empty();
        AssumptionCheck {
            assumption: self.assumption,
            passed,
            method: self.method,
            detail: if passed {
                "ok".to_string()
            } else {
                self.failures.join("; ")
            },
            first_violation: self.first_violation,
        }
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Checks every standing assumption. Always produces a report; invalid
/// grids are widened to the minimum admissible one and noted as a warning.
pub fn validate_params(p: &ModelParams, grid: &SamplingGrid) -> ValidationReport {
    let mut warnings = Vec::new();
    let mut grid = *grid;
    let min_max = 2.0 * p.sigma_bar;
    if grid.points < SamplingGrid::MIN_POINTS || !(grid.sigma_max >= min_max) {
        let widened = SamplingGrid {
            sigma_max: if grid.sigma_max >= min_max && grid.sigma_max.is_finite() {
                grid.sigma_max
            } else {
                SamplingGrid::for_params(p).sigma_max
            },
            points: grid.points.max(SamplingGrid::MIN_POINTS),
        };
        warnings.push(format!(
            "sampling grid [0, {}] with {} points widened to [0, {}] with {} points",
            grid.sigma_max, grid.points, widened.sigma_max, widened.points
        ));
        grid = widened;
    }

    let mut checks = Vec::with_capacity(4);

    let mut pos = CheckBuilder::new(Assumption::Positivity, CheckMethod::Analytic);
    for (name, x) in [
        ("sigma_bar", p.sigma_bar),
        ("beta", p.beta),
        ("nu", p.nu),
        ("sigma_D", p.sigma_d),
    ] {
        pos.require(positive(x), || format!("{name} = {x} must be positive and finite"));
    }
    checks.push(pos.finish());

    checks.push(check_consumption(&p.f, &grid));
    checks.push(check_proliferation(&p.g, &grid, &mut warnings));

    let mut a3 = CheckBuilder::new(Assumption::NecrosisThreshold, CheckMethod::Analytic);
    match p.g.root() {
        Some(sigma_tilde) => {
            let lim = sigma_tilde.min(p.sigma_bar);
            a3.require(p.sigma_d < lim, || {
                if p.sigma_d >= sigma_tilde {
                    format!("sigma_D = {} >= sigma_tilde = {sigma_tilde}", p.sigma_d)
                } else {
                    format!("sigma_D = {} >= sigma_bar = {}", p.sigma_d, p.sigma_bar)
                }
            });
            let margin = p.g.value(p.sigma_d.max(0.0)) + p.nu;
            a3.require(margin >= 0.0, || {
                format!("g(sigma_D) + nu = {margin} < 0")
            });
            if margin >= 0.0 && margin.abs() < FLAT_NECROTIC_BRANCH {
                warnings.push(format!(
                    "g(sigma_D) + nu = {margin:e} is nearly zero; the necrotic branch of G is almost flat"
                ));
            }
        }
        None => a3.require(false, || "g declares no root sigma_tilde".to_string()),
    }
    checks.push(a3.finish());

    ValidationReport {
        checks,
        warnings,
        grid,
    }
}

fn check_consumption(f: &RateFunction, grid: &SamplingGrid) -> AssumptionCheck {
    let method = if f.is_custom() {
        CheckMethod::Sampled
    } else {
        CheckMethod::Analytic
    };
    let mut c = CheckBuilder::new(Assumption::Consumption, method);
    c.require(f.role() == RateRole::Consumption, || {
        "f must be a consumption rate".to_string()
    });
    match *f {
        RateFunction::ConsumptionLinear { lambda } => {
            c.require(positive(lambda), || format!("lambda = {lambda} must be positive"));
        }
        RateFunction::ConsumptionMichaelisMenten { vmax, k } => {
            c.require(positive(vmax), || format!("vmax = {vmax} must be positive"));
            c.require(positive(k), || format!("k = {k} must be positive"));
        }
        RateFunction::Custom(_) => {
            let m = f.bound();
            c.require(positive(m), || format!("declared bound M = {m} must be positive"));
            let f0 = f.value(0.0);
            c.require(f0.abs() <= 1e-14 * (1.0 + m), || format!("f(0) = {f0} is not zero"));
            for s in grid.samples() {
                let d = f.derivative(s);
                if !(d > 0.0) {
                    c.violation_at(s, format!("f'({s}) = {d} is not positive"));
                } else if d > m * (1.0 + 1e-9) {
                    c.violation_at(s, format!("f'({s}) = {d} exceeds declared M = {m}"));
                }
            }
        }
        RateFunction::ProliferationLinear { .. } => {}
    }
    c.finish()
}

fn check_proliferation(
    g: &RateFunction,
    grid: &SamplingGrid,
    warnings: &mut Vec<String>,
) -> AssumptionCheck {
    let method = if g.is_custom() {
        CheckMethod::Sampled
    } else {
        CheckMethod::Analytic
    };
    let mut c = CheckBuilder::new(Assumption::Proliferation, method);
    c.require(g.role() == RateRole::Proliferation, || {
        "g must be a proliferation rate".to_string()
    });
    match *g {
        RateFunction::ProliferationLinear { mu, sigma_tilde } => {
            c.require(positive(mu), || format!("mu = {mu} must be positive"));
            c.require(positive(sigma_tilde), || {
                format!("sigma_tilde = {sigma_tilde} must be positive")
            });
        }
        RateFunction::Custom(_) => {
            let m = g.bound();
            c.require(positive(m), || format!("declared bound M = {m} must be positive"));
            match g.root() {
                Some(root) if positive(root) => {
                    let at_root = g.value(root);
                    c.require(at_root.abs() <= 1e-9 * (1.0 + m * root), || {
                        format!("g(sigma_tilde) = {at_root} is not zero")
                    });
                }
                other => c.require(false, || {
                    format!("declared root {other:?} must be positive")
                }),
            }
            let plateau_limit = 0.01 * grid.sigma_max;
            let mut plateau_start: Option<f64> = None;
            let mut reported = false;
            for s in grid.samples() {
                let d = g.derivative(s);
                if !(d >= 0.0) {
                    c.violation_at(s, format!("g'({s}) = {d} is negative"));
                } else if d > m * (1.0 + 1e-9) {
                    c.violation_at(s, format!("g'({s}) = {d} exceeds declared M = {m}"));
                }
                if d == 0.0 {
                    let start = *plateau_start.get_or_insert(s);
                    if !reported && s - start > plateau_limit {
                        warnings.push(format!(
                            "g' vanishes on sampled interval starting at {start} (longer than 1% of [0, {}])",
                            grid.sigma_max
                        ));
                        reported = true;
                    }
                } else {
                    plateau_start = None;
                }
            }
        }
        _ => {}
    }
    c.finish()
}

/// Validated model with a solver tolerance.
///
/// Holds a read-only memo of the critical radius, filled on first use.
#[derive(Debug)]
pub struct Model {
    params: ModelParams,
    tol: f64,
    pub(crate) critical_radius_memo: OnceLock<f64>,
}

impl Clone for Model {
    fn clone(&self) -> Self {
        Self {
            params: self.params.clone(),
            tol: self.tol,
            critical_radius_memo: self.critical_radius_memo.clone(),
        }
    }
}

impl Model {
    /// Validates `params` on the default grid and refuses them if any
    /// assumption fails.
    pub fn new(params: ModelParams, tol: f64) -> Result<Self> {
        if !positive(tol) {
            return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
        }
        let report = validate_params(&params, &SamplingGrid::for_params(&params));
        if !report.is_valid() {
            return Err(Error::InvalidParams(report.summary()));
        }
        Ok(Self {
            params,
            tol,
            critical_radius_memo: OnceLock::new(),
        })
    }

    pub fn with_default_tol(params: ModelParams) -> Result<Self> {
        Self::new(params, DEFAULT_TOL)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn sigma_tilde(&self) -> f64 {
        self.params.sigma_tilde()
    }

    /// Same model with a different exterior concentration.
    pub fn with_sigma_bar(&self, sigma_bar: f64) -> Result<Self> {
        let mut params = self.params.clone();
        params.sigma_bar = sigma_bar;
        Self::new(params, self.tol)
    }

    /// Same parameters with a different solver tolerance.
    pub fn with_tol(&self, tol: f64) -> Result<Self> {
        Self::new(self.params.clone(), tol)
    }
}
