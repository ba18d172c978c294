//! The four subcommands. Each returns its files in memory; nothing touches
//! the filesystem until [`ResultBundle::write_to`].

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use nalgebra::DVector;
use piezobeam_core::fem::{DofKind, Field, FieldGroup, SemiDiscreteSystem};
use piezobeam_core::scenarios::{
    align_zero_modes, build_system, check_patch_voltage_selectivity, check_single_beam_decoupling, mode_fractions,
    run_electrostatic_limit, RunSettings, ScenarioReport, Symmetry,
};
use piezobeam_core::solvers::{default_shift, eigenmodes, simulate, StepState};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{serialize_config, ConfigErrors, RunConfig};
use crate::output::{num, Table};
use crate::svg::{Plot, Series};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error("invalid model or study: {0}")]
    Model(piezobeam_core::Error),
    #[error("numerical failure: {0}")]
    Numerical(piezobeam_core::Error),
    #[error("{0}")]
    Io(#[from] io::Error),
}

impl From<piezobeam_core::Error> for CliError {
    fn from(e: piezobeam_core::Error) -> Self {
        use piezobeam_core::Error::*;
        match e {
            InvalidSpec(_) | TooFewElements { .. } | MeshSpecMismatch(_) | UnknownBc(_)
            | InvalidStudy(_) | NonPositiveParameter { .. } | InsufficientMeshes(_) => CliError::Model(e),
            _ => CliError::Numerical(e),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Model(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Output files of one command, keyed by file name.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultBundle {
    pub files: BTreeMap<String, Vec<u8>>,
    pub summary: Value,
    /// False when a scenario check failed.
    pub passed: bool,
}

impl ResultBundle {
    fn new(summary: Value, passed: bool) -> Self {
        let mut files = BTreeMap::new();
        files.insert("summary.json".to_string(), to_json(&summary));
        Self {
            files,
            summary,
            passed,
        }
    }

    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.insert(name.to_string(), bytes);
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(Vec::as_slice)
    }

    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

fn to_json(v: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("json values serialize");
    out.push(b'\n');
    out
}

fn settings(config: &RunConfig) -> RunSettings {
    let mut s = RunSettings::new(config.n_elements, config.dt, config.t_end);
    s.flip_bottom_coupling = config.flip_bottom_coupling;
    s
}

fn provenance(command: &str, config: &RunConfig, system: &SemiDiscreteSystem) -> Value {
    let hash = Sha256::digest(serialize_config(config).as_bytes());
    let mesh = system.layout.mesh();
    json!({
        "command": command,
        "config_sha256": hash.iter().map(|b| format!("{b:02x}")).collect::<String>(),
        "code_version": env!("CARGO_PKG_VERSION"),
        "variant": config.spec.variant().name(),
        "regime": config.spec.regime().name(),
        "mesh": {
            "elements": mesh.n_elements(),
            "nodes": mesh.n_nodes(),
            "dofs": system.n(),
            "min_element_length": mesh.min_element_length(),
        },
    })
}

/// Largest nodal value of `field` (slope dofs excluded).
fn field_max(system: &SemiDiscreteSystem, full: &DVector<f64>, field: Field) -> f64 {
    let Some(fd) = system.layout.field(field) else {
        return 0.0;
    };
    fd.range()
        .filter(|&i| system.layout.dof(i).kind != DofKind::Slope)
        .map(|i| full[i].abs())
        .fold(0.0, f64::max)
}

fn fields_of(system: &SemiDiscreteSystem) -> Vec<Field> {
    system.layout.fields().iter().map(|f| f.field).collect()
}

/// Runs the configured simulation from rest.
pub fn cmd_simulate(config: &RunConfig, svg: bool) -> CliResult<ResultBundle> {
    let system = build_system(&config.spec, &settings(config))?;
    let traj = simulate(
        &system,
        &StepState::zeros(system.n()),
        config.dt,
        config.t_end,
        config.spec.voltage(),
        config.stride,
    )?;
    let fields = fields_of(&system);

    let mut header = vec!["t".to_string()];
    for f in &fields {
        for p in &config.probes {
            header.push(format!("{f}@{p}"));
        }
        header.push(format!("max|{f}|"));
    }
    let energy_cols = ["E_kin", "E_stored", "E_mag", "E_total", "work_in", "balance_residual"];
    header.extend(energy_cols.iter().map(|s| s.to_string()));
    let mut trajectory = Table::new(header);
    let mut energy = Table::new(std::iter::once("t").chain(energy_cols));

    let e0 = traj.points.first().map_or(0.0, |p| p.energy.total);
    let mut probe_series: Vec<Series> = Vec::new();
    for f in fields.iter().filter(|f| !f.is_charge()) {
        for p in &config.probes {
            probe_series.push(Series::new(format!("{f}({p})"), Vec::new()));
        }
    }
    let mut energy_series: Vec<Series> = ["E_total", "work_in", "E_kin", "E_stored", "E_mag"]
        .iter()
        .map(|n| Series::new(*n, Vec::new()))
        .collect();
    let (mut worst, mut top) = (0.0f64, 0.0f64);
    for pt in &traj.points {
        let full = system.expand(&pt.x);
        let mut row = vec![pt.t];
        let mut k = 0;
        for &f in &fields {
            for &p in &config.probes {
                let val = system.layout.evaluate(full.as_slice(), f, 0, p).unwrap_or(0.0);
                row.push(val);
                if !f.is_charge() {
                    probe_series[k].points.push((pt.t, val));
                    k += 1;
                }
            }
            row.push(field_max(&system, &full, f));
        }
        let e = &pt.energy;
        let residual = e.total - e0 - pt.work;
        worst = worst.max(residual.abs());
        top = top.max(e.total.abs());
        let tail = [e.kinetic_mech, e.stored, e.magnetic, e.total, pt.work, residual];
        row.extend(tail);
        trajectory.push_numbers(row);
        energy.push_numbers(std::iter::once(pt.t).chain(tail));
        for (s, v) in energy_series.iter_mut().zip([e.total, pt.work, e.kinetic_mech, e.stored, e.magnetic]) {
            s.points.push((pt.t, v));
        }
    }

    let summary = json!({
        "provenance": provenance("simulate", config, &system),
        "dt": config.dt,
        "t_end": config.t_end,
        "rows": traj.len(),
        "max_abs_balance_residual": worst,
        "max_energy": top,
        "balance_within_tolerance": worst <= 1e-8 * top,
    });
    let mut bundle = ResultBundle::new(summary, true);
    bundle.add("trajectory.csv", trajectory.to_csv());
    bundle.add("energy.csv", energy.to_csv());
    if svg {
        let mut plot = Plot::new("Energy balance", "t (s)", "energy per unit width (J/m)");
        plot.series = energy_series;
        bundle.add("energy.svg", plot.render().into_bytes());
        let mut plot = Plot::new("Probe displacements", "t (s)", "value");
        plot.series = probe_series;
        bundle.add("probes.svg", plot.render().into_bytes());
    }
    Ok(bundle)
}

fn classify(fractions: &[(FieldGroup, f64)]) -> &'static str {
    let (g, _) = fractions
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("three groups");
    match g {
        FieldGroup::Stretching => "stretching-dominant",
        FieldGroup::Bending => "bending-dominant",
        FieldGroup::Charge => "charge-dominant",
    }
}

/// Lowest `n_modes` free-vibration modes of the configured system.
pub fn cmd_modes(config: &RunConfig, n_modes: usize, svg: bool) -> CliResult<ResultBundle> {
    let system = build_system(&config.spec, &settings(config))?;
    let mut modes = eigenmodes(
        &system.mass,
        &system.stiffness,
        n_modes,
        default_shift(&system.mass, &system.stiffness),
    )?;
    align_zero_modes(&system, &mut modes);
    let mut header = vec!["mode", "omega_rad_s", "frequency_hz", "class"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    header.extend(FieldGroup::ALL.iter().map(|g| format!("fraction_{}", g.name())));
    header.push("residual".into());
    let mut table = Table::new(header);
    let mut listing = Vec::new();
    for (i, phi) in modes.shapes.iter().enumerate() {
        let w = modes.omega[i];
        let fractions = mode_fractions(&system, phi);
        let class = classify(&fractions);
        let mut row = vec![i.to_string(), num(w), num(w / (2.0 * std::f64::consts::PI)), class.to_string()];
        row.extend(fractions.iter().map(|(_, f)| num(*f)));
        row.push(num(modes.residuals[i]));
        table.push(row);
        listing.push(json!({"mode": i, "omega_rad_s": w, "class": class}));
    }
    let summary = json!({
        "provenance": provenance("modes", config, &system),
        "modes": listing,
        "zero_modes": modes.zero_modes,
        "iterations": modes.iterations,
    });
    let mut bundle = ResultBundle::new(summary, true);
    bundle.add("modes.csv", table.to_csv());
    if svg {
        let nodes = system.layout.mesh().nodes().to_vec();
        let fields = fields_of(&system);
        for (i, phi) in modes.shapes.iter().enumerate() {
            let full = system.expand(phi);
            let mut plot = Plot::new(
                format!("Mode {i}, {:.6} rad/s", modes.omega[i]),
                "x (m)",
                "amplitude",
            );
            for &f in &fields {
                let pts = sample_points(&nodes)
                    .into_iter()
                    .map(|x| (x, system.layout.evaluate(full.as_slice(), f, 0, x).unwrap_or(0.0)))
                    .collect();
                plot.series.push(Series::new(f.name(), pts));
            }
            bundle.add(&format!("mode_{i:02}.svg"), plot.render().into_bytes());
        }
    }
    Ok(bundle)
}

/// Nodes plus three interior points per element.
fn sample_points(nodes: &[f64]) -> Vec<f64> {
    let mut xs = Vec::with_capacity(4 * nodes.len());
    for w in nodes.windows(2) {
        for k in 0..4 {
            xs.push(w[0] + (w[1] - w[0]) * k as f64 / 4.0);
        }
    }
    xs.extend(nodes.last());
    xs
}

/// The structural checks of the configured variant: decoupling for single
/// beams, symmetric and antisymmetric voltage selectivity for patches.
pub fn cmd_check(config: &RunConfig) -> CliResult<ResultBundle> {
    let s = settings(config);
    let spec = &config.spec;
    let reports: Vec<ScenarioReport> = if spec.variant().is_patch() {
        vec![
            check_patch_voltage_selectivity(spec, Symmetry::Symmetric, &s)?,
            check_patch_voltage_selectivity(spec, Symmetry::Antisymmetric, &s)?,
        ]
    } else {
        vec![check_single_beam_decoupling(spec, &s)?]
    };
    let passed = reports.iter().all(|r| r.passed);
    let system = build_system(spec, &s)?;
    let summary = json!({
        "provenance": provenance("check", config, &system),
        "passed": passed,
        "reports": serde_json::to_value(&reports).expect("reports serialize"),
    });
    let mut bundle = ResultBundle::new(summary.clone(), passed);
    bundle.add("report.json", to_json(&summary));
    Ok(bundle)
}

/// Electrostatic-limit sweep over `mu_list` (strictly decreasing).
pub fn cmd_limit(config: &RunConfig, mu_list: &[f64], svg: bool) -> CliResult<ResultBundle> {
    let s = settings(config);
    let study = run_electrostatic_limit(&config.spec, mu_list, &s)?;
    let system = build_system(&config.spec, &s)?;
    let mut table = Table::new(["mu", "distance"]);
    for (&mu, &d) in study.mu.iter().zip(&study.distance) {
        table.push_numbers([mu, d]);
    }
    let summary = json!({
        "provenance": provenance("limit", config, &system),
        "mu": study.mu,
        "distance": study.distance,
        "monotone": study.monotone,
    });
    let mut bundle = ResultBundle::new(summary, true);
    bundle.add("limit.csv", table.to_csv());
    if svg {
        let pts = study.mu.iter().copied().zip(study.distance.iter().copied()).collect();
        let plot = Plot::new("Distance to the electrostatic model", "mu (H/m)", "relative distance")
            .log_log()
            .with(Series::new("distance", pts));
        bundle.add("limit.svg", plot.render().into_bytes());
    }
    Ok(bundle)
}
