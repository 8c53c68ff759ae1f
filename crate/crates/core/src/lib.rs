//! Scalar beam-propagation mode solving for photonic crystal fibers.
//!
//! The crate builds hexagonal air-hole cross-sections ([`geometry`]),
//! propagates scalar envelopes with a split Crank-Nicolson scheme ([`bpm`]),
//! extracts guided modes by imaginary-distance iteration or the correlation
//! method ([`modes`]) and evaluates V-parameter single-mode criteria
//! ([`vparam`]). File formats and the command line live in [`io`] and [`cli`].

pub mod bpm;
pub mod cli;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod modes;
pub mod tridiag;
pub mod vparam;

pub use error::{BpmError, FieldError, GeometryError, SolveError, VParamError};
