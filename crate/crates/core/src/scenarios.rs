//! Executable checks of the structural claims of the models: decoupling of
//! single-beam bending, voltage selectivity of symmetric patches, the
//! electrostatic limit, spatial convergence and stretching wave speeds.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::energy::EnergyForms;
use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_forms, SemiDiscreteSystem};
use crate::fem::constraints::{apply_mechanical_bc, ground_indices, remove_layout_dofs};
use crate::fem::layout::{Field, FieldGroup};
use crate::fem::mesh::build_mesh;
use crate::model::{
    MaterialParams, MechanicalBc, Regime, ValidatedModelSpec, Voltage, VoltageSignal,
};
use crate::solvers::{default_shift, eigenmodes, simulate, solve_spd, ModeSet, StepState, Trajectory};

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// Holds exactly by construction.
    Exact,
    /// Computed independently (closed form, root finding, reference run).
    Oracle,
    /// A qualitative statement of the model being confirmed numerically.
    Claim,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub unit: &'static str,
    /// Passes iff `value <= tolerance`.
    pub tolerance: f64,
    pub source: Source,
}

impl Metric {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64, source: Source) -> Self {
        Self {
            name: name.into(),
            value,
            unit: "1",
            tolerance,
            source,
        }
    }

    pub fn with_unit(mut self, unit: &'static str) -> Self {
        self.unit = unit;
        self
    }

    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub id: String,
    pub passed: bool,
    pub metrics: Vec<Metric>,
}

impl ScenarioReport {
    pub fn new(id: impl Into<String>, metrics: Vec<Metric>) -> Self {
        Self {
            id: id.into(),
            passed: metrics.iter().all(Metric::passed),
            metrics,
        }
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

/// Mesh and time-stepping parameters of a scenario run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub n_elements: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Negative control: assemble with the bottom patch coupling reversed.
    #[doc(hidden)]
    pub flip_bottom_coupling: bool,
}

impl RunSettings {
    pub fn new(n_elements: usize, dt: f64, t_end: f64) -> Self {
        Self {
            n_elements,
            dt,
            t_end,
            flip_bottom_coupling: false,
        }
    }
}

/// Assembles `spec` on `n` elements with its boundary condition applied.
pub fn build_system(spec: &ValidatedModelSpec, settings: &RunSettings) -> Result<SemiDiscreteSystem> {
    let mesh = build_mesh(spec.geometry(), settings.n_elements, spec.variant().is_patch())?;
    let forms = if settings.flip_bottom_coupling {
        EnergyForms::with_flipped_bottom_coupling(spec)
    } else {
        EnergyForms::for_spec(spec)
    };
    let system = assemble_forms(spec, mesh, &forms)?;
    Ok(apply_mechanical_bc(&system, spec.mechanical_bc()))
}

fn run_from_rest(system: &SemiDiscreteSystem, settings: &RunSettings) -> Result<Trajectory> {
    simulate(
        system,
        &StepState::zeros(system.n()),
        settings.dt,
        settings.t_end,
        system.spec.voltage(),
        1,
    )
}

fn max_abs_over(traj: &Trajectory, idx: &[usize]) -> f64 {
    traj.points
        .iter()
        .flat_map(|p| idx.iter().map(move |&i| p.x[i].abs()))
        .fold(0.0, f64::max)
}

/// Largest stored `|A_ij|` with `i` in `rows` and `j` outside it.
fn cross_block(a: &crate::sparse::CsrMatrix, rows: &[usize]) -> f64 {
    let mut inside = vec![false; a.nrows()];
    for &i in rows {
        inside[i] = true;
    }
    a.triplets()
        .filter(|&(i, j, _)| inside[i] != inside[j])
        .map(|(_, _, v)| v.abs())
        .fold(0.0, f64::max)
}

/// Single beam driven from rest: bending never receives forcing.
///
/// Algebraically, the bending rows of `B` and the bending/other blocks of
/// `K` and `M` are zero; dynamically, bending dofs stay exactly zero.
pub fn check_single_beam_decoupling(
    spec: &ValidatedModelSpec,
    settings: &RunSettings,
) -> Result<ScenarioReport> {
    if spec.variant().is_patch() {
        return Err(Error::InvalidStudy("decoupling applies to single beams".into()));
    }
    let system = build_system(spec, settings)?;
    let bend = system.group_indices(FieldGroup::Bending);
    let input_rows = bend
        .iter()
        .flat_map(|&i| system.input.row(i).iter().map(|v| v.abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    let coupling = cross_block(&system.stiffness, &bend).max(cross_block(&system.mass, &bend));
    let traj = run_from_rest(&system, settings)?;
    Ok(ScenarioReport::new(
        format!("decoupling/{}", spec.variant()),
        vec![
            Metric::new("bending input rows", input_rows, 0.0, Source::Exact),
            Metric::new("bending coupling entries", coupling, 0.0, Source::Exact),
            Metric::new("max bending dof", max_abs_over(&traj, &bend), 0.0, Source::Claim)
                .with_unit("m"),
        ],
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    /// `Vᵀ = Vᴮ`.
    Symmetric,
    /// `Vᵀ = −Vᴮ`.
    Antisymmetric,
}

impl Symmetry {
    pub fn name(self) -> &'static str {
        match self {
            Symmetry::Symmetric => "symmetric",
            Symmetry::Antisymmetric => "antisymmetric",
        }
    }

    fn sign(self) -> f64 {
        match self {
            Symmetry::Symmetric => 1.0,
            Symmetry::Antisymmetric => -1.0,
        }
    }
}

/// Top signal of a pair, or the single signal.
fn base_signal(voltage: &Voltage) -> VoltageSignal {
    match *voltage {
        Voltage::Single(s) => s,
        Voltage::Pair { top, .. } => top,
    }
}

pub const SELECTIVITY_TOLERANCE: f64 = 1e-12;

/// Patch beam driven from rest by `Vᵀ = ±Vᴮ` (the spec's top signal).
///
/// Symmetric voltages must leave bending at zero relative to stretching, and
/// antisymmetric voltages must leave stretching at zero relative to bending.
/// In the fully dynamic regime the two patch charges must also mirror.
pub fn check_patch_voltage_selectivity(
    spec: &ValidatedModelSpec,
    mode: Symmetry,
    settings: &RunSettings,
) -> Result<ScenarioReport> {
    if !spec.variant().is_patch() {
        return Err(Error::InvalidStudy("selectivity applies to patch beams".into()));
    }
    let top = base_signal(spec.voltage());
    let bottom = match mode {
        Symmetry::Symmetric => top,
        Symmetry::Antisymmetric => top.negated(),
    };
    let spec = spec.with_voltage(Voltage::Pair { top, bottom })?;
    let system = build_system(&spec, settings)?;
    let stretch = system.group_indices(FieldGroup::Stretching);
    let bend = system.group_indices(FieldGroup::Bending);
    let (quiet, active) = match mode {
        Symmetry::Symmetric => (&bend, &stretch),
        Symmetry::Antisymmetric => (&stretch, &bend),
    };

    // Effective load of the electrostatic model for the unit pattern.
    let reduced = build_system(&spec.with_regime(Regime::ElectrostaticReduced)?, settings)?;
    let pattern = DVector::from_vec(vec![1.0, mode.sign()]);
    let load = &reduced.input * pattern;
    let reduced_quiet = match mode {
        Symmetry::Symmetric => reduced.group_indices(FieldGroup::Bending),
        Symmetry::Antisymmetric => reduced.group_indices(FieldGroup::Stretching),
    };
    let load_leak = reduced_quiet.iter().map(|&i| load[i].abs()).fold(0.0, f64::max);

    let traj = run_from_rest(&system, settings)?;
    let scale = max_abs_over(&traj, active);
    let leak = max_abs_over(&traj, quiet);
    let ratio = if scale > 0.0 { leak / scale } else { leak };
    let quiet_name = match mode {
        Symmetry::Symmetric => "bending/stretching ratio",
        Symmetry::Antisymmetric => "stretching/bending ratio",
    };
    let mut metrics = vec![
        Metric::new("reduced load leak", load_leak, 0.0, Source::Exact),
        Metric::new(quiet_name, ratio, SELECTIVITY_TOLERANCE, Source::Claim),
    ];
    if spec.regime() == Regime::FullMagnetic {
        let qt = system.field_indices(Field::ChargeTop);
        let qb = system.field_indices(Field::ChargeBottom);
        let s = mode.sign();
        let (mut diff, mut size) = (0.0f64, 0.0f64);
        for p in &traj.points {
            for (&a, &b) in qt.iter().zip(&qb) {
                diff = diff.max((p.x[a] - s * p.x[b]).abs());
                size = size.max(p.x[a].abs()).max(p.x[b].abs());
            }
        }
        let mirror = if size > 0.0 { diff / size } else { diff };
        metrics.push(Metric::new(
            "charge mirror mismatch",
            mirror,
            SELECTIVITY_TOLERANCE,
            Source::Claim,
        ));
    }
    Ok(ScenarioReport::new(
        format!("selectivity/{}/{}", spec.variant(), mode.name()),
        metrics,
    ))
}

/// Electrostatic-limit sweep over the charge-layer permeability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitStudy {
    pub mu: Vec<f64>,
    /// Relative L2-in-time distance of the mechanical dofs.
    pub distance: Vec<f64>,
    /// Each distance is strictly smaller than the previous one.
    pub monotone: bool,
}

/// Compares the mechanical trajectories of the fully dynamic model with
/// permeability `μ` and the electrostatic model, both driven from rest.
pub fn run_electrostatic_limit(
    spec: &ValidatedModelSpec,
    mu_list: &[f64],
    settings: &RunSettings,
) -> Result<LimitStudy> {
    if mu_list.is_empty() {
        return Err(Error::InvalidStudy("empty permeability list".into()));
    }
    if let Some(&bad) = mu_list.iter().find(|&&m| !(m > 0.0)) {
        return Err(Error::NonPositiveParameter {
            name: "mu",
            value: bad,
        });
    }
    if mu_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidStudy(
            "permeabilities must be strictly decreasing".into(),
        ));
    }
    let reduced = build_system(&spec.with_regime(Regime::ElectrostaticReduced)?, settings)?;
    let reference = run_from_rest(&reduced, settings)?;

    let mut distance = Vec::with_capacity(mu_list.len());
    for &mu in mu_list {
        let full_spec = spec.with_regime(Regime::FullMagnetic)?.with_mu(mu)?;
        let full = build_system(&full_spec, settings)?;
        let mask = full.charge_mask();
        let mech: Vec<usize> = (0..full.n()).filter(|&k| !mask[k]).collect();
        debug_assert_eq!(mech.len(), reduced.n());
        let traj = run_from_rest(&full, settings)?;
        let (mut num, mut den) = (0.0, 0.0);
        for (p, r) in traj.points.iter().zip(&reference.points) {
            for (k, &i) in mech.iter().enumerate() {
                num += (p.x[i] - r.x[k]).powi(2);
                den += r.x[k].powi(2);
            }
        }
        distance.push(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() });
    }
    let monotone = distance.windows(2).all(|w| w[1] < w[0]);
    Ok(LimitStudy {
        mu: mu_list.to_vec(),
        distance,
        monotone,
    })
}

/// Relative gap between the static solutions of the two regimes under a
/// constant unit voltage, with a clamped root and grounded charges.
pub fn static_equilibrium_gap(spec: &ValidatedModelSpec, n_elements: usize) -> Result<f64> {
    let constant = VoltageSignal::Constant { amplitude: 1.0 };
    let voltage = if spec.variant().is_patch() {
        Voltage::Pair {
            top: constant,
            bottom: VoltageSignal::Constant { amplitude: 0.5 },
        }
    } else {
        Voltage::Single(constant)
    };
    let base = spec.with_voltage(voltage)?.with_bc(MechanicalBc::ClampedFree);
    let settings = RunSettings::new(n_elements, 1.0, 1.0);

    let full = build_system(&base.with_regime(Regime::FullMagnetic)?, &settings)?;
    let grounded: Vec<usize> = ground_indices(&full).iter().map(|&k| full.active[k]).collect();
    let full = remove_layout_dofs(&full, &grounded);
    let x_full = solve_spd(&full.stiffness, &full.load(0.0))?;

    let reduced = build_system(&base.with_regime(Regime::ElectrostaticReduced)?, &settings)?;
    let x_red = solve_spd(&reduced.stiffness, &reduced.load(0.0))?;

    let mask = full.charge_mask();
    let mech: Vec<f64> = (0..full.n()).filter(|&k| !mask[k]).map(|k| x_full[k]).collect();
    let scale = x_red.amax();
    let gap = mech
        .iter()
        .zip(x_red.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(if scale > 0.0 { gap / scale } else { gap })
}

/// Generalized eigenpairs of the `group` block of `system`.
pub fn block_modes(system: &SemiDiscreteSystem, group: FieldGroup, n_modes: usize) -> Result<ModeSet> {
    let idx = system.group_indices(group);
    let m = system.mass.submatrix(&idx, &idx);
    let k = system.stiffness.submatrix(&idx, &idx);
    eigenmodes(&m, &k, n_modes, default_shift(&m, &k))
}

/// Rotates the zero-frequency modes among themselves so that each one lies
/// in a single field group where possible (rigid translation, rigid rotation,
/// constant charge). Any orthogonal recombination of a degenerate cluster is
/// an equally valid eigenbasis; this picks the one diagonalizing the group
/// energy weights `Σ_g (g+1)·ZᵀM_gZ`.
pub fn align_zero_modes(system: &SemiDiscreteSystem, modes: &mut ModeSet) {
    let z = modes.zero_modes;
    if z < 2 {
        return;
    }
    let mphi: Vec<DVector<f64>> = modes.shapes[..z].iter().map(|p| system.mass.mul_vec(p)).collect();
    let mut w = DMatrix::zeros(z, z);
    for (gi, &g) in FieldGroup::ALL.iter().enumerate() {
        for i in system.group_indices(g) {
            for a in 0..z {
                for b in 0..z {
                    w[(a, b)] += (gi + 1) as f64 * modes.shapes[a][i] * mphi[b][i];
                }
            }
        }
    }
    let w = (&w + w.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(w);
    let mut order: Vec<usize> = (0..z).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let rotated: Vec<DVector<f64>> = order
        .iter()
        .map(|&c| {
            let mut v = DVector::zeros(system.n());
            for a in 0..z {
                v += &modes.shapes[a] * eig.eigenvectors[(a, c)];
            }
            // Sign convention: largest entry positive.
            let k = v.iamax();
            if v[k] < 0.0 {
                v = -v;
            }
            v
        })
        .collect();
    for (a, v) in rotated.into_iter().enumerate() {
        modes.lambda[a] = system.stiffness.bilinear(&v, &v);
        modes.residuals[a] = crate::solvers::relative_residual(&system.mass, &system.stiffness, modes.lambda[a], &v);
        modes.shapes[a] = v;
    }
}

/// Energy fraction of a mode shape carried by each field group,
/// `Σ_{i∈g} φ_i (Mφ)_i`. Fractions of an M-normalized shape sum to one.
pub fn mode_fractions(system: &SemiDiscreteSystem, phi: &DVector<f64>) -> Vec<(FieldGroup, f64)> {
    let mphi = system.mass.mul_vec(phi);
    let total = phi.dot(&mphi);
    FieldGroup::ALL
        .iter()
        .map(|&g| {
            let part: f64 = system.group_indices(g).iter().map(|&i| phi[i] * mphi[i]).sum();
            (g, if total != 0.0 { part / total } else { 0.0 })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Reference {
    /// Exact angular frequency.
    Analytic(f64),
    /// The finest mesh of the study serves as reference.
    FinestMesh,
}

/// Which frequency a convergence study tracks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeTarget {
    pub group: FieldGroup,
    /// Index among the nonzero frequencies, from 0.
    pub index: usize,
}

pub const MIN_CONVERGENCE_ORDER: f64 = 1.8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub element_counts: Vec<usize>,
    pub omega: Vec<f64>,
    pub errors: Vec<f64>,
    /// Observed orders between successive meshes.
    pub orders: Vec<f64>,
    pub min_order: f64,
    pub passed: bool,
}

impl ConvergenceStudy {
    pub fn report(&self, id: impl Into<String>) -> ScenarioReport {
        ScenarioReport::new(
            id,
            vec![Metric::new(
                "order deficit",
                MIN_CONVERGENCE_ORDER - self.min_order,
                0.0,
                Source::Oracle,
            )],
        )
    }
}

/// Tracks one block frequency over refined meshes and reports the observed
/// order `log(e_i / e_{i+1}) / log(N_{i+1} / N_i)`.
pub fn run_convergence_study(
    spec: &ValidatedModelSpec,
    element_counts: &[usize],
    target: ModeTarget,
    reference: Reference,
) -> Result<ConvergenceStudy> {
    if element_counts.len() < 3 {
        return Err(Error::InsufficientMeshes(element_counts.len()));
    }
    if element_counts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidStudy("element counts must be ascending".into()));
    }
    let mut omega = Vec::with_capacity(element_counts.len());
    for &n in element_counts {
        let system = build_system(spec, &RunSettings::new(n, 1.0, 1.0))?;
        // Ask for enough modes to cover the rigid ones plus the target.
        let modes = block_modes(&system, target.group, target.index + 4)?;
        let w = modes
            .nonzero()
            .nth(target.index)
            .map(|(w, _)| w)
            .ok_or_else(|| Error::InvalidStudy("too few nonzero modes".into()))?;
        omega.push(w);
    }
    let (exact, counts): (f64, &[usize]) = match reference {
        Reference::Analytic(w) => (w, element_counts),
        Reference::FinestMesh => (
            *omega.last().expect("at least three meshes"),
            &element_counts[..element_counts.len() - 1],
        ),
    };
    let errors: Vec<f64> = omega[..counts.len()]
        .iter()
        .map(|w| (w - exact).abs() / exact.abs())
        .collect();
    let orders: Vec<f64> = errors
        .windows(2)
        .zip(counts.windows(2))
        .map(|(e, n)| (e[0] / e[1]).ln() / (n[1] as f64 / n[0] as f64).ln())
        .collect();
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ConvergenceStudy {
        element_counts: element_counts.to_vec(),
        omega,
        errors,
        orders,
        min_order,
        passed: min_order >= MIN_CONVERGENCE_ORDER,
    })
}

/// Characteristic speeds `(fast, slow)` of the coupled stretch/charge system,
/// the square roots of the eigenvalues of
/// `diag(1/ρ, 1/μ)·[[α1, −γ3β3], [−γ3β3, β3]]`.
pub fn stretching_wave_speeds(material: &MaterialParams) -> Result<(f64, f64)> {
    let d = material.derive()?;
    if !(material.mu > 0.0) {
        return Err(Error::NonPositiveParameter {
            name: "mu",
            value: material.mu,
        });
    }
    // Similar symmetric matrix D^½ A D^½ with D = diag(1/ρ, 1/μ).
    let a = d.alpha1 / material.rho;
    let c = d.beta3 / material.mu;
    let b = -d.coupling() / (material.rho * material.mu).sqrt();
    let mean = 0.5 * (a + c);
    let radius = (0.25 * (a - c).powi(2) + b * b).sqrt();
    let fast = mean + radius;
    // det / fast avoids cancellation in mean - radius.
    let slow = (a * c - b * b) / fast;
    Ok((fast.sqrt(), slow.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeOfFlight {
    pub probe_x: f64,
    pub arrival: f64,
    pub expected: f64,
    pub relative_error: f64,
}

/// Time step `h / (√2 c)` for element length `h` and wave speed `c`. At this
/// Courant number the phase lag of the midpoint rule cancels the leading
/// phase lead of linear elements with consistent mass, so sharp fronts do not
/// outrun the physical speed.
pub fn dispersion_matched_dt(h: f64, c: f64) -> f64 {
    h / (std::f64::consts::SQRT_2 * c)
}

/// First time the probe's axial velocity exceeds this fraction of its maximum.
pub const ARRIVAL_THRESHOLD: f64 = 0.01;

/// Single beam at rest hit by a unit voltage step at `t = 0`; measures when
/// the stretching front from the nearer end reaches the node closest to
/// `probe_x` and compares with the fast characteristic speed.
pub fn measure_time_of_flight(
    spec: &ValidatedModelSpec,
    probe_x: f64,
    settings: &RunSettings,
) -> Result<TimeOfFlight> {
    if spec.variant().is_patch() || spec.regime() != Regime::FullMagnetic {
        return Err(Error::InvalidStudy(
            "time of flight needs a fully dynamic single beam".into(),
        ));
    }
    let step = VoltageSignal::Step {
        amplitude: 1.0,
        step_time: 0.0,
    };
    let spec = spec.with_voltage(Voltage::Single(step))?;
    let system = build_system(&spec, settings)?;
    let stretch = system.field_indices(Field::Stretch);
    let probe = *stretch
        .iter()
        .min_by(|&&a, &&b| {
            let da = (system.layout.dof(system.active[a]).x - probe_x).abs();
            let db = (system.layout.dof(system.active[b]).x - probe_x).abs();
            da.total_cmp(&db)
        })
        .ok_or_else(|| Error::InvalidStudy("no stretch dofs".into()))?;
    let x = system.layout.dof(system.active[probe]).x;
    let traj = run_from_rest(&system, settings)?;
    let peak = traj.points.iter().map(|p| p.v[probe].abs()).fold(0.0, f64::max);
    let arrival = traj
        .points
        .iter()
        .find(|p| p.v[probe].abs() >= ARRIVAL_THRESHOLD * peak && peak > 0.0)
        .map(|p| p.t)
        .ok_or_else(|| Error::InvalidStudy("no arrival detected at the probe".into()))?;
    let (fast, _) = stretching_wave_speeds(spec.beam_material())?;
    let distance = x.min(spec.geometry().length - x);
    let expected = distance / fast;
    Ok(TimeOfFlight {
        probe_x: x,
        arrival,
        expected,
        relative_error: (arrival - expected).abs() / expected,
    })
}
