//! Benchmark fixtures shared by the criterion benches.

use piezobeam_core::scenarios::{build_system, RunSettings};
use piezobeam_core::{presets, Regime, SemiDiscreteSystem, Variant};

/// Preset model with its boundary condition applied.
pub fn system(variant: Variant, regime: Regime, n_elements: usize) -> SemiDiscreteSystem {
    let spec = presets::spec(variant, regime);
    build_system(&spec, &RunSettings::new(n_elements, 1.0, 1.0)).expect("preset systems assemble")
}
