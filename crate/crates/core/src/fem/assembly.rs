use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::energy::{EnergyBreakdown, EnergyForms, EnergyTerm, LinearForm, QuadraticForm};
use crate::error::{Error, Result};
use crate::fem::layout::{DofLayout, Field, FieldGroup, FieldState};
use crate::fem::mesh::Mesh;
use crate::model::ValidatedModelSpec;
use crate::sparse::{CsrMatrix, TripletBuilder};

/// `M ẍ + K x = B V(t)` on the unknowns listed in `active`.
#[derive(Debug, Clone)]
pub struct SemiDiscreteSystem {
    pub spec: ValidatedModelSpec,
    pub layout: Arc<DofLayout>,
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    /// One column per voltage channel.
    pub input: DMatrix<f64>,
    /// Layout dof of each system unknown, ascending.
    pub active: Vec<usize>,
}

/// Assembles the unconstrained system: `M` and `K` are the Hessians of the
/// kinetic and stored energies and `B` is the gradient of the voltage work
/// per unit voltage. Boundary conditions are applied separately.
pub fn assemble(spec: &ValidatedModelSpec, mesh: Mesh) -> Result<SemiDiscreteSystem> {
    assemble_forms(spec, mesh, &EnergyForms::for_spec(spec))
}

/// As [`assemble`], with explicitly supplied energy forms.
pub fn assemble_forms(
    spec: &ValidatedModelSpec,
    mesh: Mesh,
    forms: &EnergyForms,
) -> Result<SemiDiscreteSystem> {
    let layout = Arc::new(DofLayout::new(spec, mesh)?);
    let n = layout.n_dofs();
    Ok(SemiDiscreteSystem {
        spec: spec.clone(),
        mass: hessian(&forms.kinetic, &layout),
        stiffness: hessian(&forms.stored, &layout),
        input: gradient(&forms.work, &layout),
        active: (0..n).collect(),
        layout,
    })
}

/// Builds the mesh for `n_elements`, assembles and applies the spec's
/// mechanical boundary condition.
pub fn assemble_with_bc(spec: &ValidatedModelSpec, n_elements: usize) -> Result<SemiDiscreteSystem> {
    let mesh = crate::fem::mesh::build_mesh(spec.geometry(), n_elements, spec.variant().is_patch())?;
    let system = assemble(spec, mesh)?;
    Ok(crate::fem::constraints::apply_mechanical_bc(
        &system,
        spec.mechanical_bc(),
    ))
}

fn hessian(form: &QuadraticForm, layout: &DofLayout) -> CsrMatrix {
    let n = layout.n_dofs();
    let mut t = TripletBuilder::new(n, n);
    for term in &form.terms {
        add_term(&mut t, term, layout);
    }
    t.build()
}

fn add_term(t: &mut TripletBuilder, term: &EnergyTerm, layout: &DofLayout) {
    let mesh = layout.mesh();
    let k = term.dim();
    for e in 0..mesh.n_elements() {
        if !term.applies_to(layout, e) {
            continue;
        }
        let he = mesh.element_length(e);
        let jac = 0.5 * he;
        // Local dofs touched by any component, in first-seen order.
        let mut dofs: Vec<usize> = Vec::new();
        let mut rows: Vec<Vec<(usize, f64, u8)>> = Vec::with_capacity(k);
        for comp in &term.components {
            let mut entries = Vec::new();
            for d in &comp.0 {
                let Some(fd) = layout.field(d.field) else {
                    continue;
                };
                let Some(local) = fd.element_dofs(e) else {
                    continue;
                };
                for g in local {
                    let pos = dofs.iter().position(|&x| x == g).unwrap_or_else(|| {
                        dofs.push(g);
                        dofs.len() - 1
                    });
                    entries.push((pos, d.scale, d.order));
                }
            }
            rows.push(entries);
        }
        let m = dofs.len();
        let mut ke = vec![0.0; m * m];
        let mut c = vec![vec![0.0; m]; k];
        for (&xi, &w) in term.rule.points().iter().zip(term.rule.weights()) {
            for (r, comp) in term.components.iter().enumerate() {
                c[r].iter_mut().for_each(|v| *v = 0.0);
                let mut at = 0;
                for d in &comp.0 {
                    let Some(fd) = layout.field(d.field) else {
                        continue;
                    };
                    if fd.element_dofs(e).is_none() {
                        continue;
                    }
                    let shapes = fd.basis.eval(xi, he);
                    for s in &shapes {
                        let (pos, scale, order) = rows[r][at];
                        c[r][pos] += scale * s[order as usize];
                        at += 1;
                    }
                }
            }
            let wj = w * jac;
            for a in 0..m {
                for b in a..m {
                    let mut v = 0.0;
                    for r in 0..k {
                        if c[r][a] == 0.0 {
                            continue;
                        }
                        for s in 0..k {
                            v += c[r][a] * term.q(r, s) * c[s][b];
                        }
                    }
                    ke[a * m + b] += v * wj;
                }
            }
        }
        for a in 0..m {
            for b in a..m {
                let v = ke[a * m + b];
                if v == 0.0 {
                    continue;
                }
                t.add(dofs[a], dofs[b], v);
                if a != b {
                    t.add(dofs[b], dofs[a], v);
                }
            }
        }
    }
}

fn gradient(form: &LinearForm, layout: &DofLayout) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(layout.n_dofs(), form.channels);
    for l in &form.loads {
        let fd = layout.field(l.field).expect("load on a model field");
        let (e, xi) = fd.locate(layout.mesh(), l.x).expect("load inside the field support");
        let local = fd.element_dofs(e).expect("load inside the field support");
        let shapes = fd.basis.eval(xi, layout.mesh().element_length(e));
        for (g, s) in local.into_iter().zip(&shapes) {
            let v = l.weight * s[l.order as usize];
            if v != 0.0 {
                b[(g, l.channel)] += v;
            }
        }
    }
    b
}

impl SemiDiscreteSystem {
    pub fn n(&self) -> usize {
        self.active.len()
    }

    pub fn channels(&self) -> usize {
        self.input.ncols()
    }

    /// `B V(t)`.
    pub fn load(&self, t: f64) -> DVector<f64> {
        let v = self.spec.voltage().eval(t);
        &self.input * DVector::from_vec(v)
    }

    /// Whether each system unknown is a charge dof.
    pub fn charge_mask(&self) -> Vec<bool> {
        self.active
            .iter()
            .map(|&i| self.layout.dof(i).field.is_charge())
            .collect()
    }

    /// System indices of the unknowns in `group`.
    pub fn group_indices(&self, group: FieldGroup) -> Vec<usize> {
        (0..self.n())
            .filter(|&k| self.layout.dof(self.active[k]).field.group() == group)
            .collect()
    }

    /// System indices of the unknowns of `field`, left to right.
    pub fn field_indices(&self, field: Field) -> Vec<usize> {
        (0..self.n())
            .filter(|&k| self.layout.dof(self.active[k]).field == field)
            .collect()
    }

    /// Scatters a system vector to the full layout, zero on eliminated dofs.
    pub fn expand(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut full = DVector::zeros(self.layout.n_dofs());
        for (k, &i) in self.active.iter().enumerate() {
            full[i] = x[k];
        }
        full
    }

    /// Gathers the active entries of a full-layout vector.
    pub fn restrict(&self, full: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.active.iter().map(|&i| full[i]))
    }

    pub fn field_state(&self, t: f64, x: &DVector<f64>, v: &DVector<f64>) -> Result<FieldState> {
        if x.len() != self.n() || v.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: x.len().max(v.len()),
            });
        }
        Ok(FieldState {
            layout: self.layout.clone(),
            time: t,
            displacement: self.expand(x),
            velocity: self.expand(v),
        })
    }

    /// Energies from the matrices: `½ vᵀMv` split into mechanical and
    /// magnetic parts, and `½ xᵀKx`.
    pub fn energies(&self, x: &DVector<f64>, v: &DVector<f64>) -> EnergyBreakdown {
        let mask = self.charge_mask();
        let (mut mech, mut mag) = (0.0, 0.0);
        for (i, j, m) in self.mass.triplets() {
            let e = 0.5 * v[i] * m * v[j];
            if mask[i] && mask[j] {
                mag += e;
            } else {
                mech += e;
            }
        }
        EnergyBreakdown::new(mech, 0.5 * self.stiffness.bilinear(x, x), mag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{kinetic_energy, stored_energy, EnergyForms};
    use crate::model::{MaterialParams, Regime, Variant};
    use crate::presets;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn system(spec: &ValidatedModelSpec, n: usize) -> SemiDiscreteSystem {
        assemble(spec, presets::mesh_for(spec, n)).unwrap()
    }

    fn random(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn matrices_are_exactly_symmetric() {
        for spec in presets::all_specs() {
            let s = system(&spec, 8);
            assert_eq!(s.mass.asymmetry(), 0.0, "{}", spec.variant());
            assert_eq!(s.stiffness.asymmetry(), 0.0, "{}", spec.variant());
        }
    }

    #[test]
    fn quadratic_forms_reproduce_energies() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for spec in presets::all_specs() {
            let s = system(&spec, 8);
            for _ in 0..20 {
                let x = random(s.n(), &mut rng);
                let v = random(s.n(), &mut rng);
                let fs = s.field_state(0.0, &x, &v).unwrap();
                let e = s.energies(&x, &v);
                let u = stored_energy(&spec, &fs).unwrap();
                let k = kinetic_energy(&spec, &fs).unwrap();
                assert!((e.stored - u).abs() <= 1e-12 * e.stored.max(1.0));
                assert!(
                    (e.kinetic_mech + e.magnetic - k).abs() <= 1e-12 * k.max(1.0)
                );
            }
        }
    }

    #[test]
    fn mass_is_block_diagonal_between_charge_and_mechanics() {
        for spec in presets::all_specs() {
            let s = system(&spec, 8);
            let mask = s.charge_mask();
            for (i, j, _) in s.mass.triplets() {
                assert_eq!(mask[i], mask[j]);
            }
        }
    }

    #[test]
    fn uncoupled_single_eb_stiffness_is_block_diagonal() {
        let mut m = spec_single(Variant::SingleEB);
        m.beam_material = m.beam_material.with_gamma31(0.0);
        let spec = m.validate().unwrap();
        let s = system(&spec, 6);
        for (i, j, v) in s.stiffness.triplets() {
            let fi = s.layout.dof(i).field;
            let fj = s.layout.dof(j).field;
            if fi != fj {
                assert_eq!(v, 0.0, "{fi}/{fj}");
            }
        }
    }

    fn spec_single(v: Variant) -> crate::model::ModelSpec {
        presets::model_spec(v, Regime::FullMagnetic)
    }

    // W = -V [q(L) - q(0)], so B = +1 at q(0) and -1 at q(L).
    #[test]
    fn single_input_touches_only_end_charges() {
        let spec = presets::spec(Variant::SingleEB, Regime::FullMagnetic);
        let s = system(&spec, 4);
        let q = s.layout.field(Field::Charge).unwrap();
        let first = q.value_dof(0).unwrap();
        let last = q.value_dof(4).unwrap();
        for i in 0..s.n() {
            let expect = if i == first {
                1.0
            } else if i == last {
                -1.0
            } else {
                0.0
            };
            assert_eq!(s.input[(i, 0)], expect);
        }
    }

    #[test]
    fn work_gradient_matches_linear_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for spec in presets::all_specs() {
            let s = system(&spec, 8);
            let forms = EnergyForms::for_spec(&spec);
            let x = random(s.n(), &mut rng);
            let w = forms.work.evaluate_channels(&s.layout, x.as_slice());
            let bx = s.input.transpose() * &x;
            for c in 0..s.channels() {
                assert!((w[c] - bx[c]).abs() < 1e-13);
            }
        }
    }

    // Golden two-element matrices for a unit E-B beam with unit coefficients:
    // linear stretch stiffness 1/he [[1,-1],[-1,1]] scaled by hα1 and the
    // consistent P1 mass he/6 [[2,1],[1,2]] scaled by ρh.
    #[test]
    fn two_element_stretch_blocks() {
        let mut m = spec_single(Variant::SingleEB);
        m.beam_material = MaterialParams::elastic(1.0, 1.0, 1.0);
        m.geometry = crate::model::BeamGeometry::single(1.0, 1.0);
        let spec = m.validate().unwrap();
        let s = system(&spec, 2);
        let v = s.layout.field(Field::Stretch).unwrap().range();
        let k = s.stiffness.submatrix(&v.clone().collect::<Vec<_>>(), &v.clone().collect::<Vec<_>>());
        let golden_k = DMatrix::from_row_slice(3, 3, &[2.0, -2.0, 0.0, -2.0, 4.0, -2.0, 0.0, -2.0, 2.0]);
        assert!((k.to_dense() - golden_k).abs().max() < 1e-14);
        let mm = s.mass.submatrix(&v.clone().collect::<Vec<_>>(), &v.collect::<Vec<_>>());
        let he = 0.5;
        let golden_m = DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 1.0, 0.0, 1.0, 4.0, 1.0, 0.0, 1.0, 2.0],
        ) * (he / 6.0);
        assert!((mm.to_dense() - golden_m).abs().max() < 1e-14);
    }

    // Hermite bending stiffness for one element of length l:
    // EI/l³ [[12, 6l, -12, 6l], [6l, 4l², -6l, 2l²], ...] with EI = hα1h²/12.
    #[test]
    fn hermite_bending_block_matches_textbook() {
        let mut m = spec_single(Variant::SingleEB);
        m.beam_material = MaterialParams::elastic(1.0, 12.0, 1.0);
        m.geometry = crate::model::BeamGeometry::single(2.0, 1.0);
        let spec = m.validate().unwrap();
        let s = system(&spec, 2);
        let w: Vec<usize> = s.layout.field(Field::Deflection).unwrap().range().collect();
        let k = s.stiffness.submatrix(&w[..4], &w[..4]).to_dense();
        let l: f64 = 1.0;
        // Only the first element touches dofs 0 and 1 fully.
        let golden = [12.0, 6.0 * l, 4.0 * l * l];
        assert!((k[(0, 0)] - golden[0]).abs() < 1e-12);
        assert!((k[(0, 1)] - golden[1]).abs() < 1e-12);
        assert!((k[(1, 1)] - golden[2]).abs() < 1e-12);
        assert!((k[(1, 3)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn flipped_coupling_changes_only_the_bottom_patch() {
        let spec = presets::spec(Variant::PatchEB, Regime::FullMagnetic);
        let mesh = presets::mesh_for(&spec, 8);
        let a = assemble(&spec, mesh.clone()).unwrap();
        let b = assemble_forms(&spec, mesh, &EnergyForms::with_flipped_bottom_coupling(&spec)).unwrap();
        let diff = a.stiffness.combine(1.0, &b.stiffness, -1.0);
        assert!(diff.max_abs() > 0.0);
        for (i, j, v) in diff.triplets() {
            if v != 0.0 {
                let touches_bottom = a.layout.dof(i).field == Field::ChargeBottom
                    || a.layout.dof(j).field == Field::ChargeBottom;
                assert!(touches_bottom);
            }
        }
    }
}
