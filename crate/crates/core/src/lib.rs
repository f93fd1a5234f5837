//! Polyhedral, rank and overlap decompositions of ReLU networks, and
//! persistent homology of the quotient spaces they induce.

pub mod cli;
pub mod datasets;
pub mod error;
pub mod experiments;
pub mod homology;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod network;
pub mod overlap;
pub mod polyhedra;
pub mod rankdecomp;
pub mod train;

pub use error::{Error, Result};
