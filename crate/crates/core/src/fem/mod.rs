//! Lagrange finite elements on triangles: reference bases, quadrature,
//! degree-of-freedom maps and nodal interpolation.

pub mod calculus;
mod dofmap;
mod element;
mod field;
mod quadrature;

pub use dofmap::{Constraint, DofMap, SpaceKind};
pub use element::{AffineMap, ElementKind, ReferenceElement, Tabulation};
pub use field::{interpolate_scalar, interpolate_vector, FieldVec};
pub use quadrature::QuadratureRule;

/// Quadrature degree used by every assembly kernel. Trilinear P2 terms are
/// degree-5 integrands on affine elements.
pub const ASSEMBLY_QUADRATURE_DEGREE: usize = 6;
