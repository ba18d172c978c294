use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fem::assembly::SemiDiscreteSystem;
use crate::fem::layout::{DofKind, DofLayout, Field};
use crate::model::{MechanicalBc, Regime};
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Layout dofs fixed by `bc`: `v(0), w(0), w'(0)` for Euler-Bernoulli and
/// `v(0), w(0), ψ(0)` for Mindlin-Timoshenko under clamped-free.
pub fn constrained_dofs(layout: &DofLayout, bc: MechanicalBc) -> Vec<usize> {
    if bc == MechanicalBc::FreeFree {
        return Vec::new();
    }
    let mut out = Vec::new();
    for fd in layout.fields() {
        match fd.field {
            Field::Stretch | Field::Rotation => out.extend(fd.value_dof(0)),
            Field::Deflection => {
                out.extend(fd.value_dof(0));
                out.extend(fd.slope_dof(0));
            }
            _ => {}
        }
    }
    debug_assert!(out
        .iter()
        .all(|&i| matches!(layout.dof(i).kind, DofKind::Value | DofKind::Slope)));
    out.sort_unstable();
    out
}

/// Eliminates the dofs fixed by `bc` by deleting their rows and columns.
pub fn apply_mechanical_bc(system: &SemiDiscreteSystem, bc: MechanicalBc) -> SemiDiscreteSystem {
    let fixed = constrained_dofs(&system.layout, bc);
    let mut out = remove_layout_dofs(system, &fixed);
    out.spec = system.spec.with_bc(bc);
    out
}

/// Deletes the rows and columns of the given layout dofs (if active).
pub fn remove_layout_dofs(system: &SemiDiscreteSystem, dofs: &[usize]) -> SemiDiscreteSystem {
    let keep: Vec<usize> = (0..system.n())
        .filter(|&k| !dofs.contains(&system.active[k]))
        .collect();
    restrict_system(system, &keep)
}

fn restrict_system(system: &SemiDiscreteSystem, keep: &[usize]) -> SemiDiscreteSystem {
    SemiDiscreteSystem {
        spec: system.spec.clone(),
        layout: system.layout.clone(),
        mass: system.mass.submatrix(keep, keep),
        stiffness: system.stiffness.submatrix(keep, keep),
        input: system.input.select_rows(keep),
        active: keep.iter().map(|&k| system.active[k]).collect(),
    }
}

/// Indices (in system numbering) of the first active dof of each charge
/// field. Pinning these removes the constant charge modes.
pub fn ground_indices(system: &SemiDiscreteSystem) -> Vec<usize> {
    let mut seen: Vec<Field> = Vec::new();
    let mut out = Vec::new();
    for k in 0..system.n() {
        let f = system.layout.dof(system.active[k]).field;
        if f.is_charge() && !seen.contains(&f) {
            seen.push(f);
            out.push(k);
        }
    }
    out
}

/// Statically eliminates the charge unknowns:
/// `K_red = K_mm − K_mq K_qq⁻¹ K_qm`, `B_red = B_m − K_mq K_qq⁻¹ B_q`, with
/// `M` restricted to the mechanical unknowns. One dof per charge field is
/// grounded first.
pub fn reduce_electrostatic(system: &SemiDiscreteSystem) -> Result<SemiDiscreteSystem> {
    if system.spec.regime() != Regime::FullMagnetic {
        return Err(Error::FieldShapeMismatch(
            "electrostatic reduction needs a system with charge unknowns".into(),
        ));
    }
    let mask = system.charge_mask();
    let grounded = ground_indices(system);
    let mech: Vec<usize> = (0..system.n()).filter(|&k| !mask[k]).collect();
    let charge: Vec<usize> = (0..system.n())
        .filter(|&k| mask[k] && !grounded.contains(&k))
        .collect();

    let k_qq = system.stiffness.submatrix(&charge, &charge).to_dense();
    let k_mq = system.stiffness.submatrix(&mech, &charge).to_dense();
    let k_mm = system.stiffness.submatrix(&mech, &mech).to_dense();
    let b_q = system.input.select_rows(&charge);
    let b_m = system.input.select_rows(&mech);

    let chol = k_qq.cholesky().ok_or(Error::SingularElectricBlock)?;
    let x = chol.solve(&k_mq.transpose());
    let y = chol.solve(&b_q);
    let k_red = k_mm - &k_mq * x;
    let b_red = b_m - &k_mq * y;

    let reduced_spec = system.spec.with_regime(Regime::ElectrostaticReduced)?;
    let layout = Arc::new(DofLayout::new(&reduced_spec, system.layout.mesh().clone())?);
    let n_mech = layout.n_mechanical();
    let active: Vec<usize> = mech.iter().map(|&k| system.active[k]).collect();
    debug_assert!(active.iter().all(|&i| i < n_mech));

    Ok(SemiDiscreteSystem {
        spec: reduced_spec,
        layout,
        mass: system.mass.submatrix(&mech, &mech),
        stiffness: symmetric_sparse(&k_red),
        input: b_red,
        active,
    })
}

/// Symmetrizes a dense Schur complement and drops round-off fill outside the
/// element connectivity.
fn symmetric_sparse(a: &DMatrix<f64>) -> CsrMatrix {
    let n = a.nrows();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = 64.0 * f64::EPSILON * scale;
    let mut t = TripletBuilder::new(n, n);
    for i in 0..n {
        for j in i..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            if v.abs() > cutoff {
                t.add(i, j, v);
                if i != j {
                    t.add(j, i, v);
                }
            }
        }
    }
    t.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assembly::assemble;
    use crate::model::{Variant, Voltage, VoltageSignal};
    use crate::presets;

    fn full(variant: Variant, n: usize) -> SemiDiscreteSystem {
        let spec = presets::spec(variant, Regime::FullMagnetic);
        assemble(&spec, presets::mesh_for(&spec, n)).unwrap()
    }

    fn direct(variant: Variant, n: usize) -> SemiDiscreteSystem {
        let spec = presets::spec(variant, Regime::ElectrostaticReduced);
        assemble(&spec, presets::mesh_for(&spec, n)).unwrap()
    }

    fn max_rel_diff(a: &CsrMatrix, b: &CsrMatrix) -> f64 {
        let d = a.combine(1.0, b, -1.0);
        d.max_abs() / a.max_abs().max(b.max_abs())
    }

    #[test]
    fn clamped_free_removes_root_dofs() {
        let s = full(Variant::PatchEB, 8);
        let c = apply_mechanical_bc(&s, MechanicalBc::ClampedFree);
        assert_eq!(c.n(), s.n() - 3);
        let removed: Vec<_> = s.active.iter().filter(|i| !c.active.contains(i)).collect();
        for &&i in &removed {
            let d = s.layout.dof(i);
            assert_eq!(d.x, 0.0);
            assert!(matches!(d.field, Field::Stretch | Field::Deflection));
        }
        let mt = apply_mechanical_bc(&full(Variant::SingleMT, 4), MechanicalBc::ClampedFree);
        let fields: Vec<Field> = full(Variant::SingleMT, 4)
            .active
            .iter()
            .filter(|i| !mt.active.contains(i))
            .map(|&i| mt.layout.dof(i).field)
            .collect();
        assert_eq!(fields, vec![Field::Stretch, Field::Deflection, Field::Rotation]);
    }

    #[test]
    fn free_free_is_unchanged() {
        let s = full(Variant::SingleEB, 4);
        let f = apply_mechanical_bc(&s, MechanicalBc::FreeFree);
        assert_eq!(f.stiffness, s.stiffness);
        assert_eq!(f.active, s.active);
    }

    #[test]
    fn schur_complement_matches_direct_reduced_model() {
        for v in Variant::ALL {
            let r = reduce_electrostatic(&full(v, 8)).unwrap();
            let d = direct(v, 8);
            assert_eq!(r.active, d.active);
            assert!(max_rel_diff(&r.stiffness, &d.stiffness) < 1e-12, "{v}");
            assert!(max_rel_diff(&r.mass, &d.mass) == 0.0, "{v}");
            let db = (&r.input - &d.input).abs().max();
            assert!(db < 1e-12 * d.input.abs().max().max(1.0), "{v}: {db}");
        }
    }

    #[test]
    fn reduced_stretch_coefficient_is_alpha11() {
        let s = reduce_electrostatic(&full(Variant::SingleEB, 4)).unwrap();
        let spec = presets::spec(Variant::SingleEB, Regime::FullMagnetic);
        let d = spec.beam_coefficients();
        let h = spec.geometry().thickness;
        let he = 0.25;
        // Diagonal of an interior P1 stiffness row: 2 h α11 / he.
        let i = s.layout.field(Field::Stretch).unwrap().value_dof(2).unwrap();
        let k = s.stiffness.get(i, i);
        assert!((k - 2.0 * h * d.alpha11 / he).abs() < 1e-12 * k);
    }

    #[test]
    fn no_coupling_means_no_reduced_input() {
        let mut m = presets::model_spec(Variant::SingleEB, Regime::FullMagnetic);
        m.beam_material = m.beam_material.with_gamma31(0.0);
        m.voltage = Voltage::Single(VoltageSignal::Constant { amplitude: 1.0 });
        let spec = m.validate().unwrap();
        let s = assemble(&spec, presets::mesh_for(&spec, 6)).unwrap();
        let r = reduce_electrostatic(&s).unwrap();
        assert_eq!(r.input.abs().max(), 0.0);
    }

    #[test]
    fn reducing_a_reduced_system_is_an_error() {
        assert!(reduce_electrostatic(&direct(Variant::SingleEB, 4)).is_err());
    }

    #[test]
    fn clamped_then_reduced_matches_direct_clamped() {
        for v in Variant::ALL {
            let r = reduce_electrostatic(&apply_mechanical_bc(&full(v, 8), MechanicalBc::ClampedFree))
                .unwrap();
            let d = apply_mechanical_bc(&direct(v, 8), MechanicalBc::ClampedFree);
            assert_eq!(r.active, d.active);
            assert!(max_rel_diff(&r.stiffness, &d.stiffness) < 1e-12);
        }
    }
}
