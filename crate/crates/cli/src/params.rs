//! Parameter ingestion: a JSON config file, overridden field by field by
//! command-line flags.

use std::path::PathBuf;

use clap::Args;
use fbtumor_core::{ModelParams, RateFunction, DEFAULT_TOL};

use crate::Failure;

#[derive(Args, Debug, Clone)]
pub struct ParamArgs {
    /// JSON parameter file; flags below override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub sigma_bar: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub nu: Option<f64>,
    #[arg(long = "sigma-d", global = true)]
    pub sigma_d: Option<f64>,
    /// Linear consumption rate; replaces the configured consumption law.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Slope of the linear proliferation law.
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Root of the linear proliferation law.
    #[arg(long, global = true)]
    pub sigma_tilde: Option<f64>,
    /// Solver tolerance on nutrient residuals.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

impl ParamArgs {
    pub fn resolve(&self) -> Result<ModelParams, Failure> {
        let base = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Failure::config(format!("cannot read config {}: {e}", path.display()))
                })?;
                Some(ModelParams::from_json(&text).map_err(|e| {
                    Failure::config(format!("malformed config {}: {e}", path.display()))
                })?)
            }
            None => None,
        };
        let mut p = match base {
            Some(p) => p,
            None => self.from_flags_only()?,
        };
        if let Some(x) = self.sigma_bar {
            p.sigma_bar = x;
        }
        if let Some(x) = self.beta {
            p.beta = x;
        }
        if let Some(x) = self.nu {
            p.nu = x;
        }
        if let Some(x) = self.sigma_d {
            p.sigma_d = x;
        }
        if let Some(lambda) = self.lambda {
            p.f = RateFunction::linear(lambda);
        }
        if self.mu.is_some() || self.sigma_tilde.is_some() {
            let (mu, sigma_tilde) = match p.g {
                RateFunction::ProliferationLinear { mu, sigma_tilde } => (
                    self.mu.unwrap_or(mu),
                    self.sigma_tilde.unwrap_or(sigma_tilde),
                ),
                _ => match (self.mu, self.sigma_tilde) {
                    (Some(mu), Some(st)) => (mu, st),
                    _ => {
                        return Err(Failure::config(
                            "--mu and --sigma-tilde must both be given to replace a non-linear proliferation law",
                        ))
                    }
                },
            };
            p.g = RateFunction::proliferation_linear(mu, sigma_tilde);
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Failure::config(format!("--tol must be positive, got {}", self.tol)));
        }
        Ok(p)
    }

    fn from_flags_only(&self) -> Result<ModelParams, Failure> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Failure::config(format!("no --config given and --{name} is missing")))
        };
        Ok(ModelParams::linear(
            need(self.lambda, "lambda")?,
            need(self.mu, "mu")?,
            need(self.sigma_tilde, "sigma-tilde")?,
            need(self.sigma_bar, "sigma-bar")?,
            need(self.beta, "beta")?,
            need(self.nu, "nu")?,
            need(self.sigma_d, "sigma-d")?,
        ))
    }
}
