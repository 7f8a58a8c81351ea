//! Maximal solutions of `u_t = Δ log u` in the plane and their Type II
//! extinction: an implicit solver in cylindrical coordinates, the inner
//! (cigar) and outer (cusp) rescalings, and executable forms of the
//! estimates that govern the collapse.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod checks;
pub mod diagnostics;
pub mod error;
pub mod exact;
pub mod field;
pub mod grid;
pub mod rescale;
pub mod solver;
pub mod textio;

pub use error::{FlowError, Result};
pub use field::{FlowState, LogField};
pub use grid::{CylGrid, GridSpec};
