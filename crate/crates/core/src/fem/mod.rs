//! Mesh, element spaces, assembly of the semi-discrete system and
//! constraint handling.

pub mod assembly;
pub mod basis;
pub mod constraints;
pub mod layout;
pub mod mesh;
pub mod quadrature;

pub use assembly::{assemble, assemble_forms, assemble_with_bc, SemiDiscreteSystem};
pub use basis::Basis;
pub use constraints::{apply_mechanical_bc, constrained_dofs, ground_indices, reduce_electrostatic};
pub use layout::{basis_for, unknowns, DofKind, DofLayout, Field, FieldDofs, FieldGroup, FieldState};
pub use mesh::{build_mesh, Mesh};
pub use quadrature::Rule;
