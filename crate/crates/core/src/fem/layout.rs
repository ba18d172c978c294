use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::basis::Basis;
use crate::fem::mesh::Mesh;
use crate::model::{Regime, ValidatedModelSpec, Variant};

/// Unknown fields of the beam models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Field {
    /// Longitudinal centerline displacement `v`.
    Stretch,
    /// Transverse displacement `w`.
    Deflection,
    /// Cross-section rotation `ψ` (Mindlin-Timoshenko only).
    Rotation,
    /// Charge coordinate `q` of a single beam.
    Charge,
    /// Charge coordinate of the top patch.
    ChargeTop,
    /// Charge coordinate of the bottom patch.
    ChargeBottom,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Stretch => "v",
            Field::Deflection => "w",
            Field::Rotation => "psi",
            Field::Charge => "q",
            Field::ChargeTop => "qT",
            Field::ChargeBottom => "qB",
        }
    }

    pub fn group(self) -> FieldGroup {
        match self {
            Field::Stretch => FieldGroup::Stretching,
            Field::Deflection | Field::Rotation => FieldGroup::Bending,
            Field::Charge | Field::ChargeTop | Field::ChargeBottom => FieldGroup::Charge,
        }
    }

    pub fn is_charge(self) -> bool {
        self.group() == FieldGroup::Charge
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Coarse classification used for mode labelling and energy bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FieldGroup {
    Stretching,
    Bending,
    Charge,
}

impl FieldGroup {
    pub const ALL: [FieldGroup; 3] = [
        FieldGroup::Stretching,
        FieldGroup::Bending,
        FieldGroup::Charge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FieldGroup::Stretching => "stretching",
            FieldGroup::Bending => "bending",
            FieldGroup::Charge => "charge",
        }
    }
}

/// Unknowns of a variant, mechanical fields first.
pub fn unknowns(variant: Variant, regime: Regime) -> &'static [Field] {
    use Field::*;
    match (variant, regime) {
        (Variant::SingleEB, Regime::FullMagnetic) => &[Stretch, Deflection, Charge],
        (Variant::SingleMT, Regime::FullMagnetic) => &[Stretch, Deflection, Rotation, Charge],
        (Variant::PatchEB, Regime::FullMagnetic) => {
            &[Stretch, Deflection, ChargeTop, ChargeBottom]
        }
        (Variant::PatchMT, Regime::FullMagnetic) => {
            &[Stretch, Deflection, Rotation, ChargeTop, ChargeBottom]
        }
        (Variant::SingleEB | Variant::PatchEB, Regime::ElectrostaticReduced) => {
            &[Stretch, Deflection]
        }
        (Variant::SingleMT | Variant::PatchMT, Regime::ElectrostaticReduced) => {
            &[Stretch, Deflection, Rotation]
        }
    }
}

/// Finite-element space of a field.
///
/// Patch charges under Euler-Bernoulli kinematics are quadratic so that their
/// slope can match the patch stretch `v' ± h0 w''`, which is linear on each
/// element.
pub fn basis_for(variant: Variant, field: Field) -> Basis {
    match field {
        Field::Deflection if !variant.is_timoshenko() => Basis::Hermite,
        Field::ChargeTop | Field::ChargeBottom if variant == Variant::PatchEB => Basis::P2,
        _ => Basis::P1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DofKind {
    /// Nodal value.
    Value,
    /// Nodal slope (Hermite).
    Slope,
    /// Element-midpoint value (P2).
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DofInfo {
    pub field: Field,
    pub kind: DofKind,
    /// Coordinate the dof is attached to.
    pub x: f64,
    /// Mesh node, for `Value`/`Slope` dofs.
    pub node: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldDofs {
    pub field: Field,
    pub basis: Basis,
    /// Elements on which the field lives.
    pub elements: Range<usize>,
    /// First global dof index.
    pub offset: usize,
    pub len: usize,
}

impl FieldDofs {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len
    }

    /// Global dof indices of the local shape functions on element `e`.
    /// Element containing `x` within this field's support, as `(e, xi)`.
    /// A point on the left support edge resolves to the first support element.
    pub fn locate(&self, mesh: &Mesh, x: f64) -> Option<(usize, f64)> {
        let (e, xi) = mesh.locate(x)?;
        if self.elements.contains(&e) {
            return Some((e, xi));
        }
        if e + 1 == self.elements.start && x == mesh.nodes()[e + 1] {
            return Some((e + 1, -1.0));
        }
        None
    }

    pub fn element_dofs(&self, e: usize) -> Option<Vec<usize>> {
        if !self.elements.contains(&e) {
            return None;
        }
        let k = e - self.elements.start;
        let o = self.offset;
        Some(match self.basis {
            Basis::P1 => vec![o + k, o + k + 1],
            Basis::P2 => vec![o + 2 * k, o + 2 * k + 1, o + 2 * k + 2],
            Basis::Hermite => vec![o + 2 * k, o + 2 * k + 1, o + 2 * k + 2, o + 2 * k + 3],
        })
    }

    /// Dof holding the nodal value at mesh node `node`.
    pub fn value_dof(&self, node: usize) -> Option<usize> {
        if node < self.elements.start || node > self.elements.end {
            return None;
        }
        let k = node - self.elements.start;
        Some(match self.basis {
            Basis::P1 => self.offset + k,
            Basis::P2 | Basis::Hermite => self.offset + 2 * k,
        })
    }

    /// Dof holding the nodal slope (Hermite only).
    pub fn slope_dof(&self, node: usize) -> Option<usize> {
        match self.basis {
            Basis::Hermite => self.value_dof(node).map(|d| d + 1),
            _ => None,
        }
    }
}

/// Global numbering of all unknowns: fields in [`unknowns`] order, each field
/// numbered left to right.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DofLayout {
    variant: Variant,
    regime: Regime,
    mesh: Mesh,
    fields: Vec<FieldDofs>,
    dofs: Vec<DofInfo>,
}

impl DofLayout {
    pub fn new(spec: &ValidatedModelSpec, mesh: Mesh) -> Result<Self> {
        let variant = spec.variant();
        let l = spec.geometry().length;
        if (mesh.length() - l).abs() > 1e-12 * l || mesh.nodes()[0] != 0.0 {
            return Err(Error::MeshSpecMismatch(format!(
                "mesh spans [{}, {}], beam length is {l}",
                mesh.nodes()[0],
                mesh.nodes()[mesh.n_nodes() - 1]
            )));
        }
        if variant.is_patch() {
            let p = spec.geometry().patch.as_ref().expect("validated patch spec");
            match mesh.patch_nodes() {
                Some((a, b)) if mesh.nodes()[a] == p.start && mesh.nodes()[b] == p.end => {}
                _ => {
                    return Err(Error::MeshSpecMismatch(
                        "mesh is not aligned with the patch edges".into(),
                    ))
                }
            }
        }

        let mut fields = Vec::new();
        let mut dofs = Vec::new();
        for &field in unknowns(variant, spec.regime()) {
            let basis = basis_for(variant, field);
            let elements = match field {
                Field::ChargeTop | Field::ChargeBottom => mesh.patch_elements().expect("aligned"),
                _ => 0..mesh.n_elements(),
            };
            let offset = dofs.len();
            let nodes = elements.start..=elements.end;
            for n in nodes {
                let x = mesh.nodes()[n];
                dofs.push(DofInfo {
                    field,
                    kind: DofKind::Value,
                    x,
                    node: Some(n),
                });
                match basis {
                    Basis::Hermite => dofs.push(DofInfo {
                        field,
                        kind: DofKind::Slope,
                        x,
                        node: Some(n),
                    }),
                    Basis::P2 if n < elements.end => {
                        let (x0, x1) = mesh.element(n);
                        dofs.push(DofInfo {
                            field,
                            kind: DofKind::Midpoint,
                            x: 0.5 * (x0 + x1),
                            node: None,
                        })
                    }
                    _ => {}
                }
            }
            fields.push(FieldDofs {
                field,
                basis,
                elements,
                offset,
                len: dofs.len() - offset,
            });
        }
        Ok(Self {
            variant,
            regime: spec.regime(),
            mesh,
            fields,
            dofs,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn fields(&self) -> &[FieldDofs] {
        &self.fields
    }

    pub fn field(&self, field: Field) -> Option<&FieldDofs> {
        self.fields.iter().find(|f| f.field == field)
    }

    pub fn dof(&self, i: usize) -> &DofInfo {
        &self.dofs[i]
    }

    pub fn dofs(&self) -> &[DofInfo] {
        &self.dofs
    }

    /// Indices of all dofs belonging to `group`, ascending.
    pub fn group_dofs(&self, group: FieldGroup) -> Vec<usize> {
        (0..self.n_dofs())
            .filter(|&i| self.dofs[i].field.group() == group)
            .collect()
    }

    /// Number of leading mechanical dofs (charges are numbered last).
    pub fn n_mechanical(&self) -> usize {
        self.fields
            .iter()
            .filter(|f| !f.field.is_charge())
            .map(|f| f.len)
            .sum()
    }

    /// Evaluates `d^order f / dx^order` of `field` at `x` for coefficient
    /// vector `coeffs`. Fields restricted to the patch are zero outside it.
    pub fn evaluate(&self, coeffs: &[f64], field: Field, order: u8, x: f64) -> Option<f64> {
        let fd = self.field(field)?;
        self.mesh.locate(x)?;
        let Some((e, xi)) = fd.locate(&self.mesh, x) else {
            return Some(0.0);
        };
        let local = fd.element_dofs(e).expect("element inside the support");
        Some(self.eval_on(fd, &local, coeffs, e, xi, order))
    }

    fn eval_on(
        &self,
        fd: &FieldDofs,
        local: &[usize],
        coeffs: &[f64],
        e: usize,
        xi: f64,
        order: u8,
    ) -> f64 {
        let shapes = fd.basis.eval(xi, self.mesh.element_length(e));
        local
            .iter()
            .zip(&shapes)
            .map(|(&g, s)| coeffs[g] * s[order as usize])
            .sum()
    }
}

/// Dof coefficients and velocities of all fields at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub layout: Arc<DofLayout>,
    pub time: f64,
    pub displacement: DVector<f64>,
    pub velocity: DVector<f64>,
}

impl FieldState {
    pub fn zeros(layout: Arc<DofLayout>) -> Self {
        let n = layout.n_dofs();
        Self {
            layout,
            time: 0.0,
            displacement: DVector::zeros(n),
            velocity: DVector::zeros(n),
        }
    }

    pub fn new(
        layout: Arc<DofLayout>,
        time: f64,
        displacement: DVector<f64>,
        velocity: DVector<f64>,
    ) -> Result<Self> {
        let n = layout.n_dofs();
        for len in [displacement.len(), velocity.len()] {
            if len != n {
                return Err(Error::FieldShapeMismatch(format!(
                    "expected {n} coefficients, got {len}"
                )));
            }
        }
        Ok(Self {
            layout,
            time,
            displacement,
            velocity,
        })
    }

    /// Interpolates closed-form fields. `disp(field, x)` and `vel(field, x)`
    /// return `[value, slope]`; the slope is only used by Hermite dofs.
    pub fn interpolate(
        layout: Arc<DofLayout>,
        time: f64,
        disp: impl Fn(Field, f64) -> [f64; 2],
        vel: impl Fn(Field, f64) -> [f64; 2],
    ) -> Self {
        let pick = |f: &dyn Fn(Field, f64) -> [f64; 2], d: &DofInfo| match d.kind {
            DofKind::Value | DofKind::Midpoint => f(d.field, d.x)[0],
            DofKind::Slope => f(d.field, d.x)[1],
        };
        let displacement =
            DVector::from_iterator(layout.n_dofs(), layout.dofs().iter().map(|d| pick(&disp, d)));
        let velocity =
            DVector::from_iterator(layout.n_dofs(), layout.dofs().iter().map(|d| pick(&vel, d)));
        Self {
            layout,
            time,
            displacement,
            velocity,
        }
    }

    /// Checks that this state belongs to `spec`'s variant and regime.
    pub fn check_matches(&self, spec: &ValidatedModelSpec) -> Result<()> {
        if self.layout.variant() != spec.variant() || self.layout.regime() != spec.regime() {
            return Err(Error::FieldShapeMismatch(format!(
                "state is {}/{}, model is {}/{}",
                self.layout.variant(),
                self.layout.regime(),
                spec.variant(),
                spec.regime()
            )));
        }
        let n = self.layout.n_dofs();
        if self.displacement.len() != n || self.velocity.len() != n {
            return Err(Error::FieldShapeMismatch(format!(
                "expected {n} coefficients, got {} and {}",
                self.displacement.len(),
                self.velocity.len()
            )));
        }
        Ok(())
    }

    pub fn value(&self, field: Field, order: u8, x: f64) -> Option<f64> {
        self.layout
            .evaluate(self.displacement.as_slice(), field, order, x)
    }

    pub fn rate(&self, field: Field, order: u8, x: f64) -> Option<f64> {
        self.layout.evaluate(self.velocity.as_slice(), field, order, x)
    }
}
