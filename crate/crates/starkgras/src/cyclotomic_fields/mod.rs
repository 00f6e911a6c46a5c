//! Real abelian fields, exact element arithmetic, cyclotomic units and the
//! Euler-system level fields.

pub mod characters;
pub mod cyclo;
pub mod euler;
pub mod field;

pub use characters::DirichletCharacter;
pub use euler::{level_field, verify_distribution_relation, CycloProduct, ProductContext};
pub use cyclo::{cyclotomic_unit, power_basis_norm_relation, CycloElement};
pub use field::{field_from_characters, AbelianField, EmbeddingTable, FieldElement, ModEmbedding};
