//! Assembled operators against independent evaluations of the energies.

use std::sync::Arc;

use nalgebra::DVector;
use piezobeam_core::energy::stored_energy;
use piezobeam_core::fem::{assemble, DofLayout, FieldState};
use piezobeam_core::{presets, Regime, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn energy_at(spec: &piezobeam_core::ValidatedModelSpec, layout: &Arc<DofLayout>, x: &DVector<f64>) -> f64 {
    let n = x.len();
    let state = FieldState::new(layout.clone(), 0.0, x.clone(), DVector::zeros(n)).unwrap();
    stored_energy(spec, &state).unwrap()
}

#[test]
fn stiffness_is_the_finite_difference_hessian() {
    let step = 1e-5;
    for spec in presets::all_specs() {
        let system = assemble(&spec, presets::mesh_for(&spec, 4)).unwrap();
        let layout = system.layout.clone();
        let n = system.n();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = DVector::from_fn(n, |_, _| 1e-3 * rng.gen_range(-1.0..1.0));
        let k = system.stiffness.to_dense();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let mut e = [0.0; 4];
                for (slot, (si, sj)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
                    .into_iter()
                    .enumerate()
                {
                    let mut y = x.clone();
                    y[i] += si * step;
                    y[j] += sj * step;
                    e[slot] = energy_at(&spec, &layout, &y);
                }
                let fd = (e[0] - e[1] - e[2] + e[3]) / (4.0 * step * step);
                let scale = k[(i, j)].abs().max((k[(i, i)] * k[(j, j)]).abs().sqrt());
                if scale > 0.0 {
                    worst = worst.max((fd - k[(i, j)]).abs() / scale);
                } else {
                    assert!(fd.abs() < 1e-6);
                }
            }
        }
        assert!(worst < 1e-5, "{} {}: {worst}", spec.variant(), spec.regime());
    }
}

#[test]
fn stiffness_times_x_is_the_energy_gradient() {
    let step = 1e-5;
    let spec = presets::spec(Variant::PatchMT, Regime::FullMagnetic);
    let system = assemble(&spec, presets::mesh_for(&spec, 6)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = DVector::from_fn(system.n(), |_, _| rng.gen_range(-1.0..1.0));
    let kx = system.stiffness.mul_vec(&x);
    for i in 0..system.n() {
        let mut a = x.clone();
        let mut b = x.clone();
        a[i] += step;
        b[i] -= step;
        let g = (energy_at(&spec, &system.layout, &a) - energy_at(&spec, &system.layout, &b)) / (2.0 * step);
        assert!((g - kx[i]).abs() <= 1e-5 * kx.amax());
    }
}

#[test]
fn free_free_null_spaces() {
    use piezobeam_core::fem::Field;
    // Rigid translation and rotation of the bending field.
    let spec = presets::spec(Variant::SingleEB, Regime::ElectrostaticReduced);
    let system = assemble(&spec, presets::mesh_for(&spec, 6)).unwrap();
    let mut translate = DVector::zeros(system.n());
    let mut rotate = DVector::zeros(system.n());
    let mut stretch = DVector::zeros(system.n());
    for k in 0..system.n() {
        let d = system.layout.dof(system.active[k]);
        match (d.field, d.kind) {
            (Field::Deflection, piezobeam_core::fem::DofKind::Value) => {
                translate[k] = 1.0;
                rotate[k] = d.x;
            }
            (Field::Deflection, piezobeam_core::fem::DofKind::Slope) => rotate[k] = 1.0,
            (Field::Stretch, _) => stretch[k] = 1.0,
            _ => {}
        }
    }
    let scale = system.stiffness.norm_inf();
    for v in [translate, rotate, stretch] {
        assert!(system.stiffness.mul_vec(&v).amax() < 1e-12 * scale);
    }
}
