//! Optimal unambiguous discrimination of two density matrices by reduction
//! to the equal-rank standard form.

pub mod error;
pub mod generate;
pub mod io;
pub mod linalg;
pub mod multistate;
pub mod oracle;
pub mod problem;
pub mod puresolver;
pub mod reduction;
pub mod sample;
pub mod solve;
pub mod subspace;

pub use error::{Error, Result};
