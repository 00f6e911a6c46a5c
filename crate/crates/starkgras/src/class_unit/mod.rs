//! Class groups with Galois action, unit groups via cyclotomic units and
//! p-saturation, and the chi-isotypic unit lattice.

pub mod chi;
pub mod classgroup;
pub mod ideals;
pub mod units;

pub use chi::FieldCharacter;
pub use classgroup::{chi_part_order, class_group, ClassGroupData, ClassGroupOptions};
pub use ideals::{primes_above, PrimeIdeal};
pub use units::{p_saturate, unit_chi_lattice, unit_group, Coordinatizer, UnitChiLattice, UnitGroup};
