//! Exact arithmetic for real abelian fields: class groups and unit groups,
//! cyclotomic and Stark units, chi-parts of class groups and unit groups,
//! Selmer-line index comparisons, and Kolyvagin derivative classes built
//! from the cyclotomic Euler system.
//!
//! Every identity the crate reports is either checked exactly (integers,
//! rationals, field elements, residues mod p^m) or numerically with an
//! explicit residual and working precision.

pub mod error;
pub mod numeric;
pub mod par;
pub mod exact_algebra;
pub mod cyclotomic_fields;
pub mod lfunctions;
pub mod class_unit;
pub mod stark;
pub mod selmer_line;
pub mod kolyvagin;
pub mod cli;

pub use error::{Error, Result};
