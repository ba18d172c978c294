//! Energy functionals of the beam models.
//!
//! Each energy is a sum of [`EnergyTerm`]s with density `½ cᵀ Q c`, where `c`
//! collects linear combinations of field derivatives. The same terms are
//! evaluated directly on discrete fields here and differentiated into the
//! mass and stiffness matrices by [`crate::fem::assembly`]. The voltage work
//! is a [`LinearForm`] of point evaluations.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::layout::{DofLayout, Field, FieldState};
use crate::fem::quadrature::Rule;
use crate::model::{Regime, ValidatedModelSpec, Variant};

/// `scale · dᵏf/dxᵏ` for one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldDerivative {
    pub field: Field,
    pub order: u8,
    pub scale: f64,
}

/// A linear combination of field derivatives, e.g. the patch stretch
/// `v' + h0 w''`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component(pub Vec<FieldDerivative>);

impl Component {
    pub fn single(field: Field, order: u8) -> Self {
        Component(vec![FieldDerivative {
            field,
            order,
            scale: 1.0,
        }])
    }

    pub fn sum(a: (Field, u8, f64), b: (Field, u8, f64)) -> Self {
        Component(vec![
            FieldDerivative {
                field: a.0,
                order: a.1,
                scale: a.2,
            },
            FieldDerivative {
                field: b.0,
                order: b.1,
                scale: b.2,
            },
        ])
    }

    pub fn fields(&self) -> impl Iterator<Item = Field> + '_ {
        self.0.iter().map(|d| d.field)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    Everywhere,
    /// Only on elements covered by the patches.
    Patch,
}

/// One quadratic contribution `½ ∫_region cᵀ Q c dx`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyTerm {
    pub name: &'static str,
    pub components: Vec<Component>,
    /// Symmetric, row-major `components.len()²`.
    pub matrix: Vec<f64>,
    pub region: Region,
    #[serde(skip)]
    pub rule: Rule,
}

impl EnergyTerm {
    fn new(
        name: &'static str,
        components: Vec<Component>,
        matrix: Vec<f64>,
        region: Region,
        rule: Rule,
    ) -> Self {
        let k = components.len();
        debug_assert_eq!(matrix.len(), k * k);
        debug_assert!((0..k).all(|i| (0..k).all(|j| matrix[i * k + j] == matrix[j * k + i])));
        Self {
            name,
            components,
            matrix,
            region,
            rule,
        }
    }

    fn scalar(name: &'static str, c: Component, coef: f64, region: Region) -> Self {
        Self::new(name, vec![c], vec![coef], region, Rule::Full)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn q(&self, r: usize, s: usize) -> f64 {
        self.matrix[r * self.dim() + s]
    }

    /// Whether any component involves a charge field.
    pub fn is_electromagnetic(&self) -> bool {
        self.components
            .iter()
            .flat_map(|c| c.fields())
            .any(Field::is_charge)
    }

    pub fn applies_to(&self, layout: &DofLayout, e: usize) -> bool {
        match self.region {
            Region::Everywhere => true,
            Region::Patch => layout.mesh().in_patch(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct QuadraticForm {
    pub terms: Vec<EnergyTerm>,
}

impl QuadraticForm {
    /// Integrates the form on the discrete field with coefficients `coeffs`.
    pub fn evaluate(&self, layout: &DofLayout, coeffs: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| evaluate_term(t, layout, coeffs))
            .sum()
    }

    /// Integrates only terms selected by `keep`.
    pub fn evaluate_where(
        &self,
        layout: &DofLayout,
        coeffs: &[f64],
        keep: impl Fn(&EnergyTerm) -> bool,
    ) -> f64 {
        self.terms
            .iter()
            .filter(|t| keep(t))
            .map(|t| evaluate_term(t, layout, coeffs))
            .sum()
    }
}

fn evaluate_term(term: &EnergyTerm, layout: &DofLayout, coeffs: &[f64]) -> f64 {
    let mesh = layout.mesh();
    let k = term.dim();
    let mut c = vec![0.0; k];
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        if !term.applies_to(layout, e) {
            continue;
        }
        let he = mesh.element_length(e);
        let jac = 0.5 * he;
        for (&xi, &w) in term.rule.points().iter().zip(term.rule.weights()) {
            for (r, comp) in term.components.iter().enumerate() {
                c[r] = comp
                    .0
                    .iter()
                    .map(|d| d.scale * field_derivative(layout, coeffs, d.field, d.order, e, xi))
                    .sum();
            }
            let mut density = 0.0;
            for r in 0..k {
                for s in 0..k {
                    density += c[r] * term.q(r, s) * c[s];
                }
            }
            total += 0.5 * density * w * jac;
        }
    }
    total
}

fn field_derivative(
    layout: &DofLayout,
    coeffs: &[f64],
    field: Field,
    order: u8,
    e: usize,
    xi: f64,
) -> f64 {
    let Some(fd) = layout.field(field) else {
        return 0.0;
    };
    let Some(local) = fd.element_dofs(e) else {
        return 0.0;
    };
    let shapes = fd.basis.eval(xi, layout.mesh().element_length(e));
    local
        .iter()
        .zip(&shapes)
        .map(|(&g, s)| coeffs[g] * s[order as usize])
        .sum()
}

/// `weight · dᵏf/dxᵏ(x)` multiplied by voltage channel `channel`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointLoad {
    pub channel: usize,
    pub field: Field,
    pub order: u8,
    pub x: f64,
    pub weight: f64,
}

/// Voltage work `W = Σ_c V_c Σ weight · dᵏf(x)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct LinearForm {
    pub channels: usize,
    pub loads: Vec<PointLoad>,
}

impl LinearForm {
    /// Work per unit voltage on each channel.
    pub fn evaluate_channels(&self, layout: &DofLayout, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.channels];
        for l in &self.loads {
            let value = layout
                .evaluate(coeffs, l.field, l.order, l.x)
                .expect("load points lie on the beam");
            out[l.channel] += l.weight * value;
        }
        out
    }

    pub fn evaluate(&self, layout: &DofLayout, coeffs: &[f64], voltages: &[f64]) -> f64 {
        self.evaluate_channels(layout, coeffs)
            .iter()
            .zip(voltages)
            .map(|(a, v)| a * v)
            .sum()
    }
}

/// All energies of one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyForms {
    /// Potential plus electric energy.
    pub stored: QuadraticForm,
    /// Mechanical kinetic plus magnetic energy.
    pub kinetic: QuadraticForm,
    pub work: LinearForm,
}

impl EnergyForms {
    pub fn for_spec(spec: &ValidatedModelSpec) -> Self {
        build_forms(spec, false)
    }

    /// Forms with the sign of the bottom patch's stretch/charge coupling
    /// reversed. Exists only as a negative control for the selectivity checks.
    #[doc(hidden)]
    pub fn with_flipped_bottom_coupling(spec: &ValidatedModelSpec) -> Self {
        build_forms(spec, true)
    }
}

fn build_forms(spec: &ValidatedModelSpec, flip_bottom: bool) -> EnergyForms {
    use Field::*;
    let variant = spec.variant();
    let reduced = spec.regime() == Regime::ElectrostaticReduced;
    let beam = spec.beam_coefficients();
    let bm = spec.beam_material();
    let timo = variant.is_timoshenko();
    // Bending curvature and rotary velocity: w'' / w' for E-B, ψ' / ψ for M-T.
    let (curv_field, curv_order) = if timo { (Rotation, 1) } else { (Deflection, 2) };
    let (rot_field, rot_order) = if timo { (Rotation, 0) } else { (Deflection, 1) };

    let mut stored = Vec::new();
    let mut kinetic = Vec::new();
    let mut loads = Vec::new();
    let every = Region::Everywhere;

    if !variant.is_patch() {
        let h = spec.geometry().thickness;
        let l = spec.geometry().length;
        let g = beam.coupling();
        if reduced {
            stored.push(EnergyTerm::scalar(
                "stretch",
                Component::single(Stretch, 1),
                h * beam.alpha11,
                every,
            ));
        } else {
            stored.push(EnergyTerm::new(
                "stretch-charge",
                vec![Component::single(Stretch, 1), Component::single(Charge, 1)],
                vec![h * beam.alpha1, -h * g, -h * g, h * beam.beta3],
                every,
                Rule::Full,
            ));
        }
        stored.push(EnergyTerm::scalar(
            "bending",
            Component::single(curv_field, curv_order),
            h * beam.alpha1 * h * h / 12.0,
            every,
        ));
        if timo {
            stored.push(EnergyTerm::new(
                "shear",
                vec![Component::sum((Deflection, 1, 1.0), (Rotation, 0, 1.0))],
                vec![h * beam.alpha3],
                every,
                Rule::Reduced,
            ));
        }

        kinetic.push(EnergyTerm::scalar(
            "axial inertia",
            Component::single(Stretch, 0),
            bm.rho * h,
            every,
        ));
        kinetic.push(EnergyTerm::scalar(
            "rotary inertia",
            Component::single(rot_field, rot_order),
            bm.rho * h.powi(3) / 12.0,
            every,
        ));
        kinetic.push(EnergyTerm::scalar(
            "transverse inertia",
            Component::single(Deflection, 0),
            bm.rho * h,
            every,
        ));
        if !reduced {
            kinetic.push(EnergyTerm::scalar(
                "magnetic",
                Component::single(Charge, 0),
                bm.mu * h,
                every,
            ));
        }

        // W = -V [q(L) - q(0)], or -γ3 V [v(L) - v(0)] once charge is eliminated.
        let (field, scale) = if reduced {
            (Stretch, beam.gamma3)
        } else {
            (Charge, 1.0)
        };
        loads.push(PointLoad {
            channel: 0,
            field,
            order: 0,
            x: l,
            weight: -scale,
        });
        loads.push(PointLoad {
            channel: 0,
            field,
            order: 0,
            x: 0.0,
            weight: scale,
        });
        return EnergyForms {
            stored: QuadraticForm { terms: stored },
            kinetic: QuadraticForm { terms: kinetic },
            work: LinearForm { channels: 1, loads },
        };
    }

    let p = spec.geometry().patch.expect("validated patch geometry");
    let pc = spec.patch_coefficients().expect("validated patch material");
    let pm = spec.patch_material().expect("validated patch material");
    let (h0, h1) = (p.core_half_thickness, p.patch_thickness);

    // Elastic core, thickness 2 h0.
    stored.push(EnergyTerm::scalar(
        "core stretch",
        Component::single(Stretch, 1),
        2.0 * h0 * beam.alpha1,
        every,
    ));
    stored.push(EnergyTerm::scalar(
        "core bending",
        Component::single(curv_field, curv_order),
        2.0 * h0.powi(3) * beam.alpha1 / 3.0,
        every,
    ));
    if timo {
        stored.push(EnergyTerm::new(
            "core shear",
            vec![Component::sum((Deflection, 1, 1.0), (Rotation, 0, 1.0))],
            vec![2.0 * h0 * beam.alpha3],
            every,
            Rule::Reduced,
        ));
    }
    kinetic.push(EnergyTerm::scalar(
        "core axial inertia",
        Component::single(Stretch, 0),
        2.0 * bm.rho * h0,
        every,
    ));
    kinetic.push(EnergyTerm::scalar(
        "core rotary inertia",
        Component::single(rot_field, rot_order),
        2.0 * bm.rho * h0.powi(3) / 3.0,
        every,
    ));
    kinetic.push(EnergyTerm::scalar(
        "core transverse inertia",
        Component::single(Deflection, 0),
        2.0 * bm.rho * h0,
        every,
    ));

    // Patches stretch only, the top along v + h0·rot and the bottom along
    // v - h0·rot. Both are written as one term over (v', curv[, qT', qB']) so
    // the v'·curv cross terms cancel exactly rather than in floating point.
    let g_top = pc.coupling();
    let g_bot = if flip_bottom { -g_top } else { g_top };
    if reduced {
        stored.push(EnergyTerm::new(
            "patches",
            vec![
                Component::single(Stretch, 1),
                Component::single(curv_field, curv_order),
            ],
            vec![2.0 * h1 * pc.alpha11, 0.0, 0.0, 2.0 * h1 * pc.alpha11 * h0 * h0],
            Region::Patch,
            Rule::Full,
        ));
    } else {
        let (a1, b3) = (pc.alpha1, pc.beta3);
        #[rustfmt::skip]
        let q = vec![
            2.0 * a1,   0.0,                 -g_top,      -g_bot,
            0.0,        2.0 * a1 * h0 * h0,  -g_top * h0, g_bot * h0,
            -g_top,     -g_top * h0,         b3,          0.0,
            -g_bot,     g_bot * h0,          0.0,         b3,
        ];
        stored.push(EnergyTerm::new(
            "patches",
            vec![
                Component::single(Stretch, 1),
                Component::single(curv_field, curv_order),
                Component::single(ChargeTop, 1),
                Component::single(ChargeBottom, 1),
            ],
            q.into_iter().map(|c| h1 * c).collect(),
            Region::Patch,
            Rule::Full,
        ));
        for (name, charge) in [("top magnetic", ChargeTop), ("bottom magnetic", ChargeBottom)] {
            kinetic.push(EnergyTerm::scalar(
                name,
                Component::single(charge, 0),
                pm.mu * h1,
                Region::Patch,
            ));
        }
    }
    kinetic.push(EnergyTerm::new(
        "patch inertia",
        vec![
            Component::single(Stretch, 0),
            Component::single(rot_field, rot_order),
        ],
        vec![2.0 * pm.rho * h1, 0.0, 0.0, 2.0 * pm.rho * h1 * h0 * h0],
        Region::Patch,
        Rule::Full,
    ));

    for (sign, charge, channel) in [(1.0, ChargeTop, 0usize), (-1.0, ChargeBottom, 1usize)] {
        if reduced {
            // -γ3 V ∫_ω (v' ± h0·curv) dx, written with endpoint values.
            let gamma = if flip_bottom && channel == 1 {
                -pc.gamma3
            } else {
                pc.gamma3
            };
            for (x, edge) in [(p.end, -1.0), (p.start, 1.0)] {
                loads.push(PointLoad {
                    channel,
                    field: Stretch,
                    order: 0,
                    x,
                    weight: edge * gamma,
                });
                loads.push(PointLoad {
                    channel,
                    field: rot_field,
                    order: rot_order,
                    x,
                    weight: edge * gamma * sign * h0,
                });
            }
        } else {
            loads.push(PointLoad {
                channel,
                field: charge,
                order: 0,
                x: p.end,
                weight: -1.0,
            });
            loads.push(PointLoad {
                channel,
                field: charge,
                order: 0,
                x: p.start,
                weight: 1.0,
            });
        }
    }

    EnergyForms {
        stored: QuadraticForm { terms: stored },
        kinetic: QuadraticForm { terms: kinetic },
        work: LinearForm { channels: 2, loads },
    }
}

/// Energies at one instant, per unit beam width.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyBreakdown {
    pub kinetic_mech: f64,
    pub stored: f64,
    pub magnetic: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(kinetic_mech: f64, stored: f64, magnetic: f64) -> Self {
        Self {
            kinetic_mech,
            stored,
            magnetic,
            total: kinetic_mech + stored + magnetic,
        }
    }
}

/// Potential plus electric energy of the discrete fields.
///
/// Every term is integrated with the rule the assembly uses; for
/// Mindlin-Timoshenko shear that is the one-point rule.
pub fn stored_energy(spec: &ValidatedModelSpec, fields: &FieldState) -> Result<f64> {
    fields.check_matches(spec)?;
    let forms = EnergyForms::for_spec(spec);
    Ok(forms
        .stored
        .evaluate(&fields.layout, fields.displacement.as_slice()))
}

/// Mechanical kinetic plus magnetic energy of the field velocities.
pub fn kinetic_energy(spec: &ValidatedModelSpec, fields: &FieldState) -> Result<f64> {
    let (mech, mag) = kinetic_parts(spec, fields)?;
    Ok(mech + mag)
}

/// `(mechanical kinetic, magnetic)` energy.
pub fn kinetic_parts(spec: &ValidatedModelSpec, fields: &FieldState) -> Result<(f64, f64)> {
    fields.check_matches(spec)?;
    let forms = EnergyForms::for_spec(spec);
    let v = fields.velocity.as_slice();
    let mech = forms
        .kinetic
        .evaluate_where(&fields.layout, v, |t| !t.is_electromagnetic());
    let mag = forms
        .kinetic
        .evaluate_where(&fields.layout, v, EnergyTerm::is_electromagnetic);
    Ok((mech, mag))
}

pub fn energy_breakdown(spec: &ValidatedModelSpec, fields: &FieldState) -> Result<EnergyBreakdown> {
    let (mech, mag) = kinetic_parts(spec, fields)?;
    Ok(EnergyBreakdown::new(mech, stored_energy(spec, fields)?, mag))
}

/// Rate of voltage work `dW/dt` along the field velocities at time `t`.
pub fn work_rate(spec: &ValidatedModelSpec, fields: &FieldState, t: f64) -> Result<f64> {
    fields.check_matches(spec)?;
    let forms = EnergyForms::for_spec(spec);
    let v = spec.voltage().eval(t);
    Ok(forms
        .work
        .evaluate(&fields.layout, fields.velocity.as_slice(), &v))
}

/// Strains, stresses and electromagnetic fields at a point of the cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PointwiseFields {
    pub s11: f64,
    pub s13: f64,
    pub t11: f64,
    pub t13: f64,
    pub e1: f64,
    pub e3: f64,
    pub d1: f64,
    pub d3: f64,
    pub b2: f64,
    pub u1: f64,
    pub u3: f64,
}

/// Evaluates displacements, strains and the constitutive relations at `(x, z)`.
///
/// For patch variants the elastic core occupies `|z| ≤ h0` and carries no
/// charge; the patches occupy `h0 < |z| ≤ h0 + h1` over `[a, b]` and stretch
/// with their centerlines.
pub fn recover_pointwise(
    spec: &ValidatedModelSpec,
    fields: &FieldState,
    x: f64,
    z: f64,
) -> Result<PointwiseFields> {
    fields.check_matches(spec)?;
    let out = Error::OutOfDomain { x, z };
    let g = spec.geometry();
    if !(0.0..=g.length).contains(&x) || !z.is_finite() {
        return Err(out);
    }
    let reduced = spec.regime() == Regime::ElectrostaticReduced;
    let timo = spec.variant().is_timoshenko();
    let val = |f: Field, k: u8| fields.value(f, k, x).unwrap_or(0.0);
    let rate = |f: Field| fields.rate(f, 0, x).unwrap_or(0.0);
    let voltages = spec.voltage().eval(fields.time);

    // Displacement and strains of the section point at height z.
    let section = |z: f64| -> (f64, f64, f64) {
        if timo {
            let u1 = val(Field::Stretch, 0) + z * val(Field::Rotation, 0);
            let s11 = val(Field::Stretch, 1) + z * val(Field::Rotation, 1);
            let s13 = 0.5 * (val(Field::Deflection, 1) + val(Field::Rotation, 0));
            (u1, s11, s13)
        } else {
            let u1 = val(Field::Stretch, 0) - z * val(Field::Deflection, 1);
            let s11 = val(Field::Stretch, 1) - z * val(Field::Deflection, 2);
            (u1, s11, 0.0)
        }
    };

    let constitutive = |d: &crate::model::DerivedCoefficients,
                        u1: f64,
                        s11: f64,
                        s13: f64,
                        d3: f64,
                        b2: f64| {
        let d1 = 0.0;
        PointwiseFields {
            s11,
            s13,
            t11: d.alpha1 * s11 - d.gamma3 * d.beta3 * d3,
            t13: d.alpha3 * s13 - d.gamma1 * d.beta1 * d1,
            e1: -d.gamma1 * d.beta1 * s13 + d.beta1 * d1,
            e3: -d.gamma3 * d.beta3 * s11 + d.beta3 * d3,
            d1,
            d3,
            b2,
            u1,
            u3: val(Field::Deflection, 0),
        }
    };

    match spec.variant() {
        Variant::SingleEB | Variant::SingleMT => {
            if z.abs() > 0.5 * g.thickness {
                return Err(out);
            }
            let d = spec.beam_coefficients();
            let (u1, s11, s13) = section(z);
            let (d3, b2) = if reduced {
                let v1 = val(Field::Stretch, 1);
                (d.gamma3 * v1 - voltages[0] / (g.thickness * d.beta3), 0.0)
            } else {
                (
                    val(Field::Charge, 1),
                    -spec.beam_material().mu * rate(Field::Charge),
                )
            };
            Ok(constitutive(d, u1, s11, s13, d3, b2))
        }
        Variant::PatchEB | Variant::PatchMT => {
            let p = g.patch.expect("validated patch geometry");
            let (h0, h1) = (p.core_half_thickness, p.patch_thickness);
            if z.abs() <= h0 {
                let (u1, s11, s13) = section(z);
                return Ok(constitutive(spec.beam_coefficients(), u1, s11, s13, 0.0, 0.0));
            }
            if z.abs() > h0 + h1 || x < p.start || x > p.end {
                return Err(out);
            }
            let (sign, charge, channel) = if z > 0.0 {
                (1.0, Field::ChargeTop, 0)
            } else {
                (-1.0, Field::ChargeBottom, 1)
            };
            let (rf, rk, cf, ck) = if timo {
                (Field::Rotation, 0, Field::Rotation, 1)
            } else {
                (Field::Deflection, 1, Field::Deflection, 2)
            };
            let u1 = val(Field::Stretch, 0) + sign * h0 * val(rf, rk);
            let s11 = val(Field::Stretch, 1) + sign * h0 * val(cf, ck);
            let d = spec.patch_coefficients().expect("validated patch material");
            let (d3, b2) = if reduced {
                (d.gamma3 * s11 - voltages[channel] / (h1 * d.beta3), 0.0)
            } else {
                let mu = spec.patch_material().expect("validated").mu;
                (val(charge, 1), -mu * rate(charge))
            };
            Ok(constitutive(d, u1, s11, 0.0, d3, b2))
        }
    }
}
