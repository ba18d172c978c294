//! Finite-element models of piezoelectric beams and beam-patch actuators
//! with fully dynamic magnetic effects.
//!
//! A [`ModelSpec`] picks one of four variants (single beam or three-layer
//! patch, Euler-Bernoulli or Mindlin-Timoshenko kinematics) and a regime
//! (charges as dynamic unknowns, or eliminated electrostatically). The energy
//! forms in [`energy`] are assembled into `M ẍ + K x = B V(t)` by [`fem`], and
//! [`solvers`] / [`scenarios`] integrate and analyse the result.

pub mod energy;
pub mod error;
pub mod fem;
pub mod model;
pub mod presets;
pub mod scenarios;
pub mod solvers;
pub mod sparse;

pub use energy::{
    energy_breakdown, kinetic_energy, recover_pointwise, stored_energy, work_rate,
    EnergyBreakdown, EnergyForms, PointwiseFields,
};
pub use error::{Error, Result};
pub use fem::{
    apply_mechanical_bc, assemble, build_mesh, reduce_electrostatic, DofLayout, Field,
    FieldGroup, FieldState, Mesh, SemiDiscreteSystem,
};
pub use model::{
    derive_coefficients, validate_spec, BeamGeometry, DerivedCoefficients, MaterialParams,
    MechanicalBc, ModelSpec, PatchGeometry, Regime, SpecViolation, ValidatedModelSpec, Variant,
    Voltage, VoltageSignal,
};
pub use sparse::CsrMatrix;
