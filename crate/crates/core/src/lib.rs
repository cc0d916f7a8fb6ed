//! Nearest-neighbour (contact) distance distributions for Matérn hard-core
//! type-II point processes.
//!
//! The analytic side turns a conditional thinning probability `η(r)` into a
//! contact-distance CDF `F(R) = 1 - exp(-∫ 2πrλ_p η(r) dr)`. The Monte-Carlo
//! side samples parent Poisson patterns on a torus, applies Matérn type-II
//! thinning and measures nearest-neighbour distances, so both can be compared.
//!
//! ```
//! use matern_contact::analytic::{contact_cdf, Case, EtaFunction, ProcessParams};
//!
//! let params = ProcessParams::new(1.0, 0.0).unwrap();
//! let eta = EtaFunction::new(Case::PppToPpp, params);
//! let curve = contact_cdf(&eta, &[0.0, 1.0], 1e-9).unwrap();
//! assert!((curve.values[1] - (1.0 - (-std::f64::consts::PI).exp())).abs() < 1e-9);
//! ```

pub mod analytic;
pub mod error;
pub mod estimate;
pub mod geometry;
pub mod grid;
pub mod quadrature;
pub mod simulate;

pub use error::{Error, Result};
