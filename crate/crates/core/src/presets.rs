//! Normalized parameter sets for examples, tests and benchmarks.
//!
//! Values are dimensionless (unit density, unit modulus, unit permeability),
//! which keeps mechanical and electromagnetic wave speeds of the same order.

use crate::fem::mesh::{build_mesh, Mesh};
use crate::model::{
    BeamGeometry, MaterialParams, MechanicalBc, ModelSpec, PatchGeometry, Regime,
    ValidatedModelSpec, Variant, Voltage, VoltageSignal,
};

pub fn piezo_material() -> MaterialParams {
    MaterialParams {
        rho: 1.0,
        c11: 1.0,
        c55: 0.5,
        gamma31: 0.5,
        gamma15: 0.3,
        eps1: 1.0,
        eps3: 1.0,
        mu: 1.0,
    }
}

pub fn core_material() -> MaterialParams {
    MaterialParams::elastic(1.0, 2.0, 0.8)
}

pub fn single_geometry() -> BeamGeometry {
    BeamGeometry::single(1.0, 0.1)
}

pub fn patch_geometry() -> BeamGeometry {
    BeamGeometry::with_patch(
        1.0,
        PatchGeometry {
            core_half_thickness: 0.05,
            patch_thickness: 0.02,
            start: 0.3,
            end: 0.7,
        },
    )
}

pub fn sinusoid(amplitude: f64, frequency: f64) -> VoltageSignal {
    VoltageSignal::Sinusoid {
        amplitude,
        frequency,
    }
}

/// Unvalidated free-free specification of `variant` driven by unit sinusoids.
pub fn model_spec(variant: Variant, regime: Regime) -> ModelSpec {
    if variant.is_patch() {
        ModelSpec {
            variant,
            regime,
            beam_material: core_material(),
            patch_material: Some(piezo_material()),
            geometry: patch_geometry(),
            mechanical_bc: MechanicalBc::FreeFree,
            voltage: Voltage::Pair {
                top: sinusoid(1.0, 1.0),
                bottom: sinusoid(0.5, 1.5),
            },
        }
    } else {
        ModelSpec {
            variant,
            regime,
            beam_material: piezo_material(),
            patch_material: None,
            geometry: single_geometry(),
            mechanical_bc: MechanicalBc::FreeFree,
            voltage: Voltage::Single(sinusoid(1.0, 1.0)),
        }
    }
}

pub fn spec(variant: Variant, regime: Regime) -> ValidatedModelSpec {
    model_spec(variant, regime)
        .validate()
        .expect("preset specs are valid")
}

/// All eight variant × regime combinations.
pub fn all_specs() -> Vec<ValidatedModelSpec> {
    Variant::ALL
        .into_iter()
        .flat_map(|v| Regime::ALL.into_iter().map(move |r| spec(v, r)))
        .collect()
}

pub fn mesh_for(spec: &ValidatedModelSpec, n_elements: usize) -> Mesh {
    build_mesh(spec.geometry(), n_elements, spec.variant().is_patch())
        .expect("preset meshes are valid")
}
