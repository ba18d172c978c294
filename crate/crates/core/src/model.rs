//! Material constants, geometry, voltage inputs and the model-variant
//! specification.
//!
//! Everything here is immutable once constructed. All quantities are per unit
//! beam width: the width only scales every energy uniformly.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::error::{Error, Result};

/// Raw constitutive constants of one piezoelectric (or purely elastic) layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaterialParams {
    /// Mass density (kg/m³).
    pub rho: f64,
    /// Elastic modulus (Pa).
    pub c11: f64,
    /// Shear modulus (Pa).
    pub c55: f64,
    /// Piezoelectric coefficient γ₃₁ (C/m²).
    pub gamma31: f64,
    /// Piezoelectric coefficient γ₁₅ (C/m²).
    pub gamma15: f64,
    /// Dielectric permittivity along the beam axis (F/m).
    pub eps1: f64,
    /// Dielectric permittivity through the thickness (F/m).
    pub eps3: f64,
    /// Magnetic permeability (H/m).
    pub mu: f64,
}

impl MaterialParams {
    /// Purely elastic material with unit dielectric constants and no coupling.
    pub fn elastic(rho: f64, c11: f64, c55: f64) -> Self {
        Self {
            rho,
            c11,
            c55,
            gamma31: 0.0,
            gamma15: 0.0,
            eps1: 1.0,
            eps3: 1.0,
            mu: 1.0,
        }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_gamma31(mut self, gamma31: f64) -> Self {
        self.gamma31 = gamma31;
        self
    }

    /// Coefficients entering the beam energies.
    pub fn derive(&self) -> Result<DerivedCoefficients> {
        derive_coefficients(self)
    }
}

/// Coefficients that appear in the beam energies after substituting the
/// constitutive law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedCoefficients {
    pub beta1: f64,
    pub beta3: f64,
    pub alpha11: f64,
    pub alpha33: f64,
    /// Stiffened axial modulus `α11 + γ31² β3`.
    pub alpha1: f64,
    /// Stiffened shear modulus `α33 + γ15² β1`.
    pub alpha3: f64,
    /// `γ31`, kept next to the coefficients it multiplies.
    pub gamma3: f64,
    /// `γ15`.
    pub gamma1: f64,
}

impl DerivedCoefficients {
    /// Stretching/charge coupling matrix `[[α1, −γ3β3], [−γ3β3, β3]]`.
    pub fn stretching_matrix(&self) -> [[f64; 2]; 2] {
        let c = -self.gamma3 * self.beta3;
        [[self.alpha1, c], [c, self.beta3]]
    }

    /// `γ3 β3`, the stretch/charge coupling coefficient.
    pub fn coupling(&self) -> f64 {
        self.gamma3 * self.beta3
    }
}

/// Computes the derived energy coefficients of a material.
pub fn derive_coefficients(m: &MaterialParams) -> Result<DerivedCoefficients> {
    for (name, value) in [
        ("rho", m.rho),
        ("c11", m.c11),
        ("c55", m.c55),
        ("eps1", m.eps1),
        ("eps3", m.eps3),
    ] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveParameter { name, value });
        }
    }
    for (name, value) in [("gamma31", m.gamma31), ("gamma15", m.gamma15)] {
        if !value.is_finite() {
            return Err(Error::NonPositiveParameter { name, value });
        }
    }
    let beta1 = 1.0 / m.eps1;
    let beta3 = 1.0 / m.eps3;
    let alpha11 = m.c11;
    let alpha33 = m.c55;
    Ok(DerivedCoefficients {
        beta1,
        beta3,
        alpha11,
        alpha33,
        alpha1: alpha11 + m.gamma31 * m.gamma31 * beta3,
        alpha3: alpha33 + m.gamma15 * m.gamma15 * beta1,
        gamma3: m.gamma31,
        gamma1: m.gamma15,
    })
}

/// Placement and thickness of the two bonded patches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchGeometry {
    /// Half-thickness `h0` of the elastic core (m).
    pub core_half_thickness: f64,
    /// Thickness `h1` of each patch (m).
    pub patch_thickness: f64,
    /// Left patch edge `a` (m).
    pub start: f64,
    /// Right patch edge `b` (m).
    pub end: f64,
}

impl PatchGeometry {
    pub fn contains(&self, x: f64) -> bool {
        x > self.start && x < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamGeometry {
    /// Beam length `L` (m).
    pub length: f64,
    /// Total thickness `h` of a single beam (m). Unused by patch variants.
    pub thickness: f64,
    pub patch: Option<PatchGeometry>,
}

impl BeamGeometry {
    pub fn single(length: f64, thickness: f64) -> Self {
        Self {
            length,
            thickness,
            patch: None,
        }
    }

    pub fn with_patch(length: f64, patch: PatchGeometry) -> Self {
        Self {
            length,
            thickness: 2.0 * patch.core_half_thickness,
            patch: Some(patch),
        }
    }
}

/// Piecewise-constant coefficient fields of the beam-patch system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientFields {
    patch: PatchGeometry,
    rho_beam: f64,
    rho_patch: f64,
    alpha1_beam: f64,
    alpha1_patch: f64,
}

impl CoefficientFields {
    pub fn new(spec: &ValidatedModelSpec) -> Option<Self> {
        let patch = spec.geometry().patch?;
        let pm = spec.patch_material()?;
        Some(Self {
            patch,
            rho_beam: spec.beam_material().rho,
            rho_patch: pm.rho,
            alpha1_beam: spec.beam_coefficients().alpha1,
            alpha1_patch: spec.patch_coefficients()?.alpha1,
        })
    }

    fn chi(&self, x: f64) -> f64 {
        if self.patch.contains(x) {
            1.0
        } else {
            0.0
        }
    }

    /// Axial inertia `ρ(x)`.
    pub fn rho(&self, x: f64) -> f64 {
        let p = &self.patch;
        p.patch_thickness * self.rho_patch * self.chi(x) + p.core_half_thickness * self.rho_beam
    }

    /// Axial stiffness `α(x)`.
    pub fn alpha(&self, x: f64) -> f64 {
        let p = &self.patch;
        p.patch_thickness * self.alpha1_patch * self.chi(x)
            + p.core_half_thickness * self.alpha1_beam
    }

    /// Rotary inertia `ρ̃(x)`.
    pub fn rho_tilde(&self, x: f64) -> f64 {
        let p = &self.patch;
        let h0 = p.core_half_thickness;
        p.patch_thickness * h0 * h0 * self.rho_patch * self.chi(x)
            + self.rho_beam * h0.powi(3) / 3.0
    }

    /// Bending stiffness `A(x)`.
    pub fn bending(&self, x: f64) -> f64 {
        let p = &self.patch;
        let h0 = p.core_half_thickness;
        p.patch_thickness * h0 * h0 * self.alpha1_patch * self.chi(x)
            + self.alpha1_beam * h0.powi(3) / 3.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Variant {
    SingleEB,
    SingleMT,
    PatchEB,
    PatchMT,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::SingleEB,
        Variant::SingleMT,
        Variant::PatchEB,
        Variant::PatchMT,
    ];

    pub fn is_patch(self) -> bool {
        matches!(self, Variant::PatchEB | Variant::PatchMT)
    }

    /// Mindlin-Timoshenko kinematics (independent rotation field).
    pub fn is_timoshenko(self) -> bool {
        matches!(self, Variant::SingleMT | Variant::PatchMT)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::SingleEB => "single-eb",
            Variant::SingleMT => "single-mt",
            Variant::PatchEB => "patch-eb",
            Variant::PatchMT => "patch-mt",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

/// Electromagnetic treatment of the charge field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Regime {
    /// Charge is a dynamic unknown with magnetic kinetic energy.
    FullMagnetic,
    /// Charge eliminated statically; purely mechanical equations remain.
    ElectrostaticReduced,
}

impl Regime {
    pub const ALL: [Regime; 2] = [Regime::FullMagnetic, Regime::ElectrostaticReduced];

    pub fn name(self) -> &'static str {
        match self {
            Regime::FullMagnetic => "full-magnetic",
            Regime::ElectrostaticReduced => "electrostatic",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Regime::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown regime `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MechanicalBc {
    FreeFree,
    /// Clamped at `x = 0`, free at `x = L`.
    ClampedFree,
}

impl MechanicalBc {
    pub fn name(self) -> &'static str {
        match self {
            MechanicalBc::FreeFree => "free-free",
            MechanicalBc::ClampedFree => "clamped-free",
        }
    }
}

impl fmt::Display for MechanicalBc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MechanicalBc {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free-free" => Ok(MechanicalBc::FreeFree),
            "clamped-free" => Ok(MechanicalBc::ClampedFree),
            other => Err(Error::UnknownBc(other.to_string())),
        }
    }
}

/// Applied voltage as a function of time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum VoltageSignal {
    Zero,
    Constant { amplitude: f64 },
    /// `amplitude` for `t >= step_time`, zero before.
    Step { amplitude: f64, step_time: f64 },
    /// `amplitude · sin(2π·frequency·t)`.
    Sinusoid { amplitude: f64, frequency: f64 },
}

impl VoltageSignal {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            VoltageSignal::Zero => 0.0,
            VoltageSignal::Constant { amplitude } => amplitude,
            VoltageSignal::Step {
                amplitude,
                step_time,
            } => {
                if t >= step_time {
                    amplitude
                } else {
                    0.0
                }
            }
            VoltageSignal::Sinusoid {
                amplitude,
                frequency,
            } => amplitude * (2.0 * std::f64::consts::PI * frequency * t).sin(),
        }
    }

    pub fn negated(&self) -> Self {
        match *self {
            VoltageSignal::Zero => VoltageSignal::Zero,
            VoltageSignal::Constant { amplitude } => VoltageSignal::Constant {
                amplitude: -amplitude,
            },
            VoltageSignal::Step {
                amplitude,
                step_time,
            } => VoltageSignal::Step {
                amplitude: -amplitude,
                step_time,
            },
            VoltageSignal::Sinusoid {
                amplitude,
                frequency,
            } => VoltageSignal::Sinusoid {
                amplitude: -amplitude,
                frequency,
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            VoltageSignal::Zero => true,
            VoltageSignal::Constant { amplitude }
            | VoltageSignal::Step { amplitude, .. }
            | VoltageSignal::Sinusoid { amplitude, .. } => amplitude == 0.0,
        }
    }

    fn is_finite(&self) -> bool {
        match *self {
            VoltageSignal::Zero => true,
            VoltageSignal::Constant { amplitude } => amplitude.is_finite(),
            VoltageSignal::Step {
                amplitude,
                step_time,
            } => amplitude.is_finite() && step_time.is_finite(),
            VoltageSignal::Sinusoid {
                amplitude,
                frequency,
            } => amplitude.is_finite() && frequency.is_finite(),
        }
    }
}

/// Voltage inputs: one channel for a single beam, `(top, bottom)` for patches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Voltage {
    Single(VoltageSignal),
    Pair {
        top: VoltageSignal,
        bottom: VoltageSignal,
    },
}

impl Voltage {
    pub fn zero_for(variant: Variant) -> Self {
        if variant.is_patch() {
            Voltage::Pair {
                top: VoltageSignal::Zero,
                bottom: VoltageSignal::Zero,
            }
        } else {
            Voltage::Single(VoltageSignal::Zero)
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            Voltage::Single(_) => 1,
            Voltage::Pair { .. } => 2,
        }
    }

    /// Channel values at time `t`, in input-map column order.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        match self {
            Voltage::Single(s) => vec![s.eval(t)],
            Voltage::Pair { top, bottom } => vec![top.eval(t), bottom.eval(t)],
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Voltage::Single(s) => s.is_zero(),
            Voltage::Pair { top, bottom } => top.is_zero() && bottom.is_zero(),
        }
    }
}

/// Everything needed to build one of the beam models.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub regime: Regime,
    pub beam_material: MaterialParams,
    pub patch_material: Option<MaterialParams>,
    pub geometry: BeamGeometry,
    pub mechanical_bc: MechanicalBc,
    pub voltage: Voltage,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecViolation {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("patch variant `{0}` needs a patch material")]
    MissingPatchMaterial(Variant),
    #[error("illegal regime: {0}")]
    IllegalRegime(String),
    #[error("{material} material: `{name}` must be positive, got {value}")]
    NonPositiveParameter {
        material: &'static str,
        name: &'static str,
        value: f64,
    },
}

/// A [`ModelSpec`] that passed validation, with derived coefficients cached.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedModelSpec {
    spec: ModelSpec,
    beam: DerivedCoefficients,
    patch: Option<DerivedCoefficients>,
}

impl ModelSpec {
    pub fn validate(self) -> Result<ValidatedModelSpec> {
        validate_spec(self)
    }
}

fn check_material(
    label: &'static str,
    m: &MaterialParams,
    regime: Regime,
    needs_mu: bool,
    out: &mut Vec<SpecViolation>,
) -> Option<DerivedCoefficients> {
    let derived = match derive_coefficients(m) {
        Ok(d) => Some(d),
        Err(Error::NonPositiveParameter { name, value }) => {
            out.push(SpecViolation::NonPositiveParameter {
                material: label,
                name,
                value,
            });
            None
        }
        Err(_) => None,
    };
    if needs_mu && regime == Regime::FullMagnetic && !(m.mu > 0.0 && m.mu.is_finite()) {
        out.push(SpecViolation::NonPositiveParameter {
            material: label,
            name: "mu",
            value: m.mu,
        });
    }
    derived
}

/// Checks a specification, collecting every violation found.
pub fn validate_spec(spec: ModelSpec) -> Result<ValidatedModelSpec> {
    let mut violations = Vec::new();
    let g = &spec.geometry;
    let positive = |x: f64| x > 0.0 && x.is_finite();

    if !positive(g.length) {
        violations.push(SpecViolation::InvalidGeometry(format!(
            "length must be positive, got {}",
            g.length
        )));
    }

    let beam = check_material(
        "beam",
        &spec.beam_material,
        spec.regime,
        !spec.variant.is_patch(),
        &mut violations,
    );
    let mut patch = None;

    if spec.variant.is_patch() {
        match &g.patch {
            None => violations.push(SpecViolation::InvalidGeometry(
                "patch variants need a patch interval and thicknesses".into(),
            )),
            Some(p) => {
                if !positive(p.core_half_thickness) {
                    violations.push(SpecViolation::InvalidGeometry(format!(
                        "core half-thickness must be positive, got {}",
                        p.core_half_thickness
                    )));
                }
                if !positive(p.patch_thickness) {
                    violations.push(SpecViolation::InvalidGeometry(format!(
                        "patch thickness must be positive, got {}",
                        p.patch_thickness
                    )));
                }
                if !(p.start > 0.0 && p.start < p.end && p.end < g.length) {
                    violations.push(SpecViolation::InvalidGeometry(format!(
                        "patch interval [{}, {}] must satisfy 0 < a < b < L = {}",
                        p.start, p.end, g.length
                    )));
                }
            }
        }
        match &spec.patch_material {
            None => violations.push(SpecViolation::MissingPatchMaterial(spec.variant)),
            Some(m) => patch = check_material("patch", m, spec.regime, true, &mut violations),
        }
        if let Voltage::Single(_) = spec.voltage {
            violations.push(SpecViolation::IllegalRegime(format!(
                "{} needs a (top, bottom) voltage pair",
                spec.variant
            )));
        }
    } else {
        if !positive(g.thickness) {
            violations.push(SpecViolation::InvalidGeometry(format!(
                "thickness must be positive, got {}",
                g.thickness
            )));
        }
        if let Voltage::Pair { .. } = spec.voltage {
            violations.push(SpecViolation::IllegalRegime(format!(
                "{} is driven by a single voltage signal",
                spec.variant
            )));
        }
    }

    let finite = match &spec.voltage {
        Voltage::Single(s) => s.is_finite(),
        Voltage::Pair { top, bottom } => top.is_finite() && bottom.is_finite(),
    };
    if !finite {
        violations.push(SpecViolation::IllegalRegime(
            "voltage parameters must be finite".into(),
        ));
    }

    match (violations.is_empty(), beam) {
        (true, Some(beam)) => Ok(ValidatedModelSpec { spec, beam, patch }),
        _ => Err(Error::InvalidSpec(violations)),
    }
}

impl ValidatedModelSpec {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn into_spec(self) -> ModelSpec {
        self.spec
    }

    pub fn variant(&self) -> Variant {
        self.spec.variant
    }

    pub fn regime(&self) -> Regime {
        self.spec.regime
    }

    pub fn geometry(&self) -> &BeamGeometry {
        &self.spec.geometry
    }

    pub fn mechanical_bc(&self) -> MechanicalBc {
        self.spec.mechanical_bc
    }

    pub fn voltage(&self) -> &Voltage {
        &self.spec.voltage
    }

    pub fn beam_material(&self) -> &MaterialParams {
        &self.spec.beam_material
    }

    pub fn patch_material(&self) -> Option<&MaterialParams> {
        self.spec.patch_material.as_ref()
    }

    pub fn beam_coefficients(&self) -> &DerivedCoefficients {
        &self.beam
    }

    pub fn patch_coefficients(&self) -> Option<&DerivedCoefficients> {
        self.patch.as_ref()
    }

    /// Same model with a different regime. Validation is repeated because the
    /// permeability requirement depends on the regime.
    pub fn with_regime(&self, regime: Regime) -> Result<ValidatedModelSpec> {
        let mut spec = self.spec.clone();
        spec.regime = regime;
        validate_spec(spec)
    }

    pub fn with_voltage(&self, voltage: Voltage) -> Result<ValidatedModelSpec> {
        let mut spec = self.spec.clone();
        spec.voltage = voltage;
        validate_spec(spec)
    }

    pub fn with_bc(&self, bc: MechanicalBc) -> ValidatedModelSpec {
        let mut out = self.clone();
        out.spec.mechanical_bc = bc;
        out
    }

    /// Replaces the permeability of whichever layer carries charge.
    pub fn with_mu(&self, mu: f64) -> Result<ValidatedModelSpec> {
        let mut spec = self.spec.clone();
        if spec.variant.is_patch() {
            if let Some(m) = spec.patch_material.as_mut() {
                m.mu = mu;
            }
        } else {
            spec.beam_material.mu = mu;
        }
        validate_spec(spec)
    }

    /// Permeability of the charge-carrying layer.
    pub fn charge_mu(&self) -> f64 {
        match (self.spec.variant.is_patch(), &self.spec.patch_material) {
            (true, Some(m)) => m.mu,
            _ => self.spec.beam_material.mu,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(c11: f64, gamma31: f64, eps3: f64) -> MaterialParams {
        MaterialParams {
            rho: 1.0,
            c11,
            c55: 1.0,
            gamma31,
            gamma15: 0.0,
            eps1: 1.0,
            eps3,
            mu: 1.0,
        }
    }

    #[test]
    fn zero_coupling_reduces_to_elastic_constants() {
        let d = derive_coefficients(&mat(1.0, 0.0, 2.0)).unwrap();
        assert_eq!(d.alpha1, 1.0);
        assert_eq!(d.beta3, 0.5);
        assert_eq!(d.alpha3, 1.0);
    }

    #[test]
    fn direct_substitution() {
        let d = derive_coefficients(&mat(2.0, 1.0, 0.5)).unwrap();
        assert_eq!(d.beta3, 2.0);
        assert_eq!(d.alpha1, 4.0);
        assert_eq!(d.alpha1 - d.gamma3 * d.gamma3 * d.beta3, d.alpha11);
        assert_eq!(d.alpha11, 2.0);
    }

    #[test]
    fn shear_stiffening_builds_on_c55() {
        let m = MaterialParams {
            c55: 3.0,
            gamma15: 2.0,
            eps1: 4.0,
            ..mat(7.0, 0.0, 1.0)
        };
        let d = derive_coefficients(&m).unwrap();
        assert_eq!(d.alpha3, 3.0 + 4.0 * 0.25);
    }

    #[test]
    fn rejects_non_positive_constants() {
        let mut m = mat(1.0, 0.0, 1.0);
        m.eps3 = 0.0;
        assert!(matches!(
            derive_coefficients(&m),
            Err(Error::NonPositiveParameter { name: "eps3", .. })
        ));
        m.eps3 = 1.0;
        m.rho = -1.0;
        assert!(matches!(
            derive_coefficients(&m),
            Err(Error::NonPositiveParameter { name: "rho", .. })
        ));
    }

    fn single(variant: Variant) -> ModelSpec {
        ModelSpec {
            variant,
            regime: Regime::FullMagnetic,
            beam_material: mat(1.0, 0.5, 1.0),
            patch_material: None,
            geometry: BeamGeometry::single(1.0, 0.1),
            mechanical_bc: MechanicalBc::FreeFree,
            voltage: Voltage::Single(VoltageSignal::Zero),
        }
    }

    fn patch(a: f64, b: f64) -> ModelSpec {
        ModelSpec {
            variant: Variant::PatchEB,
            regime: Regime::FullMagnetic,
            beam_material: MaterialParams::elastic(1.0, 1.0, 1.0),
            patch_material: Some(mat(1.0, 0.5, 1.0)),
            geometry: BeamGeometry::with_patch(
                1.0,
                PatchGeometry {
                    core_half_thickness: 0.05,
                    patch_thickness: 0.01,
                    start: a,
                    end: b,
                },
            ),
            mechanical_bc: MechanicalBc::ClampedFree,
            voltage: Voltage::zero_for(Variant::PatchEB),
        }
    }

    #[test]
    fn accepts_single_free_free() {
        assert!(single(Variant::SingleEB).validate().is_ok());
    }

    #[test]
    fn patch_edge_on_boundary_is_invalid_geometry() {
        let err = patch(0.0, 0.5).validate().unwrap_err();
        match err {
            Error::InvalidSpec(v) => {
                assert!(v.iter().any(|e| matches!(e, SpecViolation::InvalidGeometry(_))))
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(patch(0.2, 0.6).validate().is_ok());
    }

    #[test]
    fn single_beam_with_two_voltages_is_illegal() {
        let mut s = single(Variant::SingleEB);
        s.voltage = Voltage::Pair {
            top: VoltageSignal::Zero,
            bottom: VoltageSignal::Zero,
        };
        let Err(Error::InvalidSpec(v)) = s.validate() else {
            panic!("expected violations")
        };
        assert!(matches!(v[0], SpecViolation::IllegalRegime(_)));
    }

    #[test]
    fn missing_patch_material() {
        let mut s = patch(0.2, 0.6);
        s.patch_material = None;
        let Err(Error::InvalidSpec(v)) = s.validate() else {
            panic!("expected violations")
        };
        assert!(v
            .iter()
            .any(|e| matches!(e, SpecViolation::MissingPatchMaterial(Variant::PatchEB))));
    }

    #[test]
    fn mu_zero_only_in_reduced_regime() {
        let mut s = single(Variant::SingleMT);
        s.beam_material.mu = 0.0;
        assert!(s.clone().validate().is_err());
        s.regime = Regime::ElectrostaticReduced;
        assert!(s.validate().is_ok());
    }

    #[test]
    fn coefficient_fields_jump_at_patch_edges() {
        let v = patch(0.25, 0.75).validate().unwrap();
        let c = CoefficientFields::new(&v).unwrap();
        let pc = v.patch_coefficients().unwrap();
        let h0 = 0.05;
        let h1 = 0.01;
        assert_eq!(c.rho(0.1), h0 * 1.0);
        assert_eq!(c.rho(0.5), h1 * 1.0 + h0 * 1.0);
        assert_eq!(c.alpha(0.5), h1 * pc.alpha1 + h0 * 1.0);
        assert_eq!(c.rho_tilde(0.9), h0.powi(3) / 3.0);
        assert_eq!(c.bending(0.5), h1 * h0 * h0 * pc.alpha1 + h0.powi(3) / 3.0);
        for x in [0.1, 0.3, 0.5, 0.8] {
            assert!(c.rho(x) > 0.0 && c.alpha(x) > 0.0);
            assert!(c.rho_tilde(x) > 0.0 && c.bending(x) > 0.0);
        }
    }

    #[test]
    fn voltage_signals() {
        assert_eq!(VoltageSignal::Zero.eval(3.0), 0.0);
        let s = VoltageSignal::Step {
            amplitude: 2.0,
            step_time: 1.0,
        };
        assert_eq!(s.eval(0.5), 0.0);
        assert_eq!(s.eval(1.0), 2.0);
        let w = VoltageSignal::Sinusoid {
            amplitude: 1.0,
            frequency: 0.25,
        };
        assert!((w.eval(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(w.negated().eval(1.0), -w.eval(1.0));
    }

    #[test]
    fn bc_parsing() {
        assert_eq!(
            "clamped-free".parse::<MechanicalBc>().unwrap(),
            MechanicalBc::ClampedFree
        );
        assert!(matches!(
            "pinned".parse::<MechanicalBc>(),
            Err(Error::UnknownBc(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn stretching_matrix_is_positive_definite(
                rho in 0.1f64..10.0,
                c11 in 0.1f64..10.0,
                c55 in 0.1f64..10.0,
                g31 in -5.0f64..5.0,
                g15 in -5.0f64..5.0,
                eps1 in 0.1f64..10.0,
                eps3 in 0.1f64..10.0,
            ) {
                let m = MaterialParams { rho, c11, c55, gamma31: g31, gamma15: g15, eps1, eps3, mu: 1.0 };
                let d = derive_coefficients(&m).unwrap();
                prop_assert_eq!(d, derive_coefficients(&m).unwrap());
                prop_assert!(d.alpha1 >= d.alpha11 && d.alpha3 >= d.alpha33);
                let s = d.stretching_matrix();
                let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
                let expected = d.alpha11 * d.beta3;
                prop_assert!((det - expected).abs() <= 1e-12 * (d.alpha1 * d.beta3));
                prop_assert!(det > 0.0);
                prop_assert!(s[0][0] + s[1][1] > 0.0);
            }
        }
    }
}
