//! Exact comparison of finite statistical experiments.
//!
//! An experiment is a row-stochastic `N × M` matrix of rationals. This crate
//! decides four nested orders on experiments (column space, conic span,
//! zonotope, Blackwell) and returns certificates that can be re-checked by
//! exact substitution. It also solves the principal's cost-minimization
//! problem in a finite moral-hazard model, so that order dominance can be
//! compared against contracting costs directly.
//!
//! Every decision path uses arbitrary-precision rationals; nothing here
//! touches floating point except SVG coordinate printing.

pub mod error;
pub mod exactnum;
pub mod experiments;
pub mod io;
pub mod lp;
pub mod moralhazard;
pub mod oracle;
pub mod orders;
pub mod plot;
pub mod random;
pub mod sweep;

pub use error::{Error, Result};
pub use exactnum::{parse_rational, render_rational, RatMatrix, RatVector, Rational};
pub use experiments::{Experiment, PosteriorDistribution, Prior};
pub use orders::{Certificate, Order, OrderVerdict};
