//! Staircase noise mechanisms for epsilon-differential privacy.
//!
//! The crate provides the continuous and discrete staircase mechanisms,
//! closed-form and numeric expected costs, the optimal staircase parameter,
//! privacy audits and the abstract selection mechanism built on the same
//! staircase profile.
//!
//! ```
//! use staircase::costs::CostFunction;
//! use staircase::mechanisms::Staircase;
//! use staircase::optimizer::gamma_opt;
//! use staircase::rng::SeedStreams;
//! use staircase::PrivacyParams;
//!
//! let params = PrivacyParams::new(1.0, 1.0)?;
//! let opt = gamma_opt(&params, &CostFunction::Abs)?;
//! let mech = Staircase::new(params, opt.gamma().unwrap())?;
//! let noise: Vec<f64> = SeedStreams::new(42).draw(1000, |rng| mech.sample(rng).value);
//! assert_eq!(noise.len(), 1000);
//! # Ok::<(), staircase::Error>(())
//! ```

pub mod abstract_mech;
pub mod audit;
pub mod costs;
pub mod error;
mod format;
pub mod mechanisms;
pub mod optimizer;
pub mod params;
pub mod rng;

pub use error::{Error, Result};
pub use format::format_g12;
pub use params::PrivacyParams;
