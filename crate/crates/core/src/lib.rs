//! The amnesia-reinforced elephant random walk on `Z^d`.
//!
//! * [`sequences`] holds the deterministic sequences `μ_n`, `a_n`, `w_n`, `δ_n`
//!   and the regime-dependent asymptotic constants.
//! * [`walk`] simulates single paths exactly together with the martingales
//!   `M_n = a_n Y_n` and `N_n`, and has enumeration oracles for the
//!   conditional step law.
//! * [`theory`] evaluates the closed-form limit constants.
//! * [`montecarlo`] runs ensembles deterministically in parallel and turns
//!   them into estimates with standard errors.
//!
//! ```
//! use marw::{ModelParams, Regime};
//!
//! let params = ModelParams::new(2, 0.5, 1.0).unwrap();
//! assert_eq!(params.regime(), Regime::Diffusive);
//! let c = marw::theory::qsl_constant_diffusive(&params).unwrap();
//! assert!((c - 2.4).abs() < 1e-12);
//! ```

pub mod error;
pub mod gamma;
pub mod montecarlo;
pub mod params;
pub mod rng;
pub mod sequences;
pub mod theory;
pub mod walk;

pub use error::{Error, Result};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use params::{classify_regime, ModelParams, Rational, Regime, RegimeInfo};
pub use rng::RngStream;
pub use sequences::SequenceCache;
