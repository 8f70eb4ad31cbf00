//! Reference Raviart-Thomas elements, quadrature, the Piola map and global
//! numbering of the mixed velocity/pressure space.

pub mod dofmap;
pub mod piola;
pub mod poly;
pub mod quadrature;
pub mod reference;
pub mod space;

pub use dofmap::DofMap;
pub use piola::piola_push;
pub use quadrature::{facet_quadrature, quadrature, QuadratureRule, Rule1d};
pub use reference::{reference_element, ReferenceElement, MAX_ORDER};
pub use space::{BasisValues, FeFunction, Field, MixedSpace};
