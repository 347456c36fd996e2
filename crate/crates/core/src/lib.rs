//! Solvers for a spherically symmetric free-boundary tumor model with
//! angiogenesis.
//!
//! The nutrient concentration inside a tumor of radius `R` solves
//! `(1/r^2)(r^2 sigma')' = f(sigma) H(sigma - sigma_D)` with a Robin
//! condition `sigma' + beta (sigma - sigma_bar) = 0` at `r = R`. Where the
//! concentration would fall to `sigma_D` a necrotic core of radius `rho`
//! forms. The radius evolves quasi-statically by `R' = R G(R)`.
//!
//! Entry point is [`Model`], a validated parameter set with a solver
//! tolerance:
//!
//! ```
//! use fbtumor_core::{Model, ModelParams};
//!
//! let params = ModelParams::linear(1.0, 1.0, 0.6, 1.0, 1.0, 1.0, 0.5);
//! let model = Model::with_default_tol(params).unwrap();
//! let r_c = model.critical_radius().unwrap();
//! assert!((r_c - 1.465328823631947).abs() < 1e-6);
//! ```

pub mod error;
pub mod evolution;
pub mod free_boundary;
pub mod io;
pub mod model;
pub mod ode;
pub mod profile;
pub mod quadrature;
pub mod roots;
pub mod stationary;

pub use error::{Error, Result};
pub use evolution::{
    Direction, EvolveOptions, Fate, Sample, Trajectory, Transition, Verdict,
};
pub use free_boundary::{Phase, TumorState};
pub use model::{
    validate_params, Assumption, Model, ModelParams, RateFunction, SamplingGrid,
    ValidationReport, DEFAULT_TOL,
};
pub use profile::{closed_form_linear, NutrientProfile, GRID_POINTS};
pub use stationary::{Classification, StationaryResult};
