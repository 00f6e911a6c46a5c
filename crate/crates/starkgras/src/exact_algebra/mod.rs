//! Exact integer, rational and modular arithmetic: number-theory helpers,
//! dense integer matrices with Smith/Hermite normal forms, finite abelian
//! groups with their characters, Galois-ring coefficients and group rings.

pub mod arith;
pub mod coeff;
pub mod group_ring;
pub mod groups;
pub mod matrix;
pub mod modp;
pub mod snf;

pub use coeff::{Coeff, CoeffRing};
pub use group_ring::{chi_component, idempotent, idempotent_in, GroupRingElement};
pub use groups::{all_characters, Character, FiniteAbelianGroup, RootOfUnity};
pub use matrix::IntMatrix;
pub use snf::{hnf_rows, lattice_index, left_kernel, smith_normal_form, LatticeIndex, Snf};

use rug::Integer;

/// Coefficient of v_1 ∧ ... ∧ v_r in the basis wedge of a free module of
/// rank r: the determinant of the coordinate matrix.
pub fn wedge_coefficient(vectors: &[Vec<Integer>]) -> Integer {
    IntMatrix::from_rows(vectors).det()
}

/// Same, modulo p^m.
pub fn wedge_coefficient_mod(vectors: &[Vec<u64>], p: u64, m: u32) -> u64 {
    modp::det_mod_pm(&vectors.to_vec(), p, m)
}
