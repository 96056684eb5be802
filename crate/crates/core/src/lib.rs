//! Exact enumeration, regenerative sampling and diffusion Monte Carlo for
//! random paths conditioned to have bounded local time.

pub mod bessel;
pub mod diffusion;
pub mod dyadic;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod regen;
pub mod stats;

pub use dyadic::{DyadicProb, ProbInterval};
pub use error::{Error, Result};
pub use lattice::{EventParams, ExcursionClass, LatticePath, LocalTimeProfile};
