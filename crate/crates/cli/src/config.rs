//! Run configuration: a flat, sectioned `key = value` text format.
//!
//! ```text
//! # comments start with '#'
//! [model]
//! variant = patch-eb          # single-eb | single-mt | patch-eb | patch-mt
//! regime = full-magnetic      # full-magnetic | electrostatic
//! bc = free-free              # free-free | clamped-free
//!
//! [material.beam]             # rho c11 c55 required; gamma31 gamma15 default 0,
//! rho = 1                     # eps1 eps3 mu default 1
//! c11 = 2
//! c55 = 0.8
//!
//! [material.patch]            # patch variants only, same keys
//! ...
//!
//! [geometry]
//! length = 1
//! thickness = 0.1             # single beams
//! core_half_thickness = 0.05  # patch variants: h0, h1, a, b
//! patch_thickness = 0.02
//! patch_start = 0.3
//! patch_end = 0.7
//!
//! [voltage]                   # single beams; patches use [voltage.top] and [voltage.bottom]
//! signal = sinusoid           # zero | constant | step | sinusoid
//! amplitude = 1
//! frequency = 1               # sinusoid
//! step_time = 0               # step
//!
//! [solver]
//! elements = 32
//! t_end = 1
//! dt = 0.001                  # optional, see `default_dt`
//! stride = 1                  # optional
//!
//! [output]
//! probes = 0.25, 0.5, 1       # optional, default L/4, L/2, L
//! ```
//!
//! Every key is checked; unknown keys and sections are errors.

use std::collections::BTreeSet;
use std::fmt;

use piezobeam_core::fem::build_mesh;
use piezobeam_core::scenarios::stretching_wave_speeds;
use piezobeam_core::{
    BeamGeometry, MaterialParams, MechanicalBc, ModelSpec, PatchGeometry, Regime,
    ValidatedModelSpec, Variant, Voltage, VoltageSignal,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: ValidatedModelSpec,
    pub n_elements: usize,
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
    pub probes: Vec<f64>,
    /// Test hook: assemble with the bottom patch coupling reversed.
    pub flip_bottom_coupling: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigErrorKind {
    Parse(String),
    UnknownKey { section: String, key: String },
    UnitViolation(String),
}

/// One problem in a config file. `line` and `column` are 1-based; line 0
/// means the problem is not tied to a single line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub kind: ConfigErrorKind,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}, column {}: ", self.line, self.column)?;
        }
        match &self.kind {
            ConfigErrorKind::Parse(msg) => write!(f, "{msg}"),
            ConfigErrorKind::UnknownKey { section, key } => {
                write!(f, "unknown key `{key}` in [{section}]")
            }
            ConfigErrorKind::UnitViolation(msg) => write!(f, "{msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n"))]
pub struct ConfigErrors(pub Vec<ConfigError>);

const SECTIONS: [&str; 10] = [
    "model",
    "material.beam",
    "material.patch",
    "geometry",
    "voltage",
    "voltage.top",
    "voltage.bottom",
    "solver",
    "output",
    "debug",
];

#[derive(Debug)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    key_col: usize,
    value_col: usize,
}

#[derive(Debug)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

fn err(line: usize, column: usize, kind: ConfigErrorKind) -> ConfigError {
    ConfigError { line, column, kind }
}

fn tokenize(text: &str, errors: &mut Vec<ConfigError>) -> Vec<Section> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = body.len() - body.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                errors.push(err(line, indent + 1, ConfigErrorKind::Parse("unterminated section header".into())));
                continue;
            };
            let name = name.trim().to_string();
            if !SECTIONS.contains(&name.as_str()) {
                errors.push(err(line, indent + 1, ConfigErrorKind::Parse(format!("unknown section [{name}]"))));
            } else if let Some(prev) = sections.iter().find(|s| s.name == name) {
                errors.push(err(
                    line,
                    indent + 1,
                    ConfigErrorKind::Parse(format!("section [{name}] already opened on line {}", prev.line)),
                ));
            }
            sections.push(Section {
                name,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let Some(eq) = body.find('=') else {
            errors.push(err(line, indent + 1, ConfigErrorKind::Parse("expected `key = value`".into())));
            continue;
        };
        let key = body[..eq].trim().to_string();
        let after = &body[eq + 1..];
        let value = after.trim().to_string();
        let value_col = eq + 2 + (after.len() - after.trim_start().len());
        if key.is_empty() {
            errors.push(err(line, indent + 1, ConfigErrorKind::Parse("missing key before `=`".into())));
            continue;
        }
        let Some(section) = sections.last_mut() else {
            errors.push(err(line, indent + 1, ConfigErrorKind::Parse("key outside of any section".into())));
            continue;
        };
        if let Some(prev) = section.entries.iter().find(|e| e.key == key) {
            errors.push(err(
                line,
                indent + 1,
                ConfigErrorKind::Parse(format!("duplicate key `{key}` (first set on line {})", prev.line)),
            ));
            continue;
        }
        section.entries.push(Entry {
            key,
            value,
            line,
            key_col: indent + 1,
            value_col,
        });
    }
    sections
}

/// Consumes the keys of one section; whatever is left over is unknown.
struct Reader<'a> {
    section: Option<&'a Section>,
    name: &'static str,
    used: BTreeSet<usize>,
}

impl<'a> Reader<'a> {
    fn new(sections: &'a [Section], name: &'static str) -> Self {
        Self {
            section: sections.iter().find(|s| s.name == name),
            name,
            used: BTreeSet::new(),
        }
    }

    fn present(&self) -> bool {
        self.section.is_some()
    }

    fn header_line(&self) -> usize {
        self.section.map_or(0, |s| s.line)
    }

    fn take(&mut self, key: &str) -> Option<&'a Entry> {
        let s = self.section?;
        let (i, e) = s.entries.iter().enumerate().find(|(_, e)| e.key == key)?;
        self.used.insert(i);
        Some(e)
    }

    fn missing(&self, key: &str, errors: &mut Vec<ConfigError>) {
        errors.push(err(
            self.header_line(),
            1,
            ConfigErrorKind::Parse(format!("missing key `{key}` in [{}]", self.name)),
        ));
    }

    fn string(&mut self, key: &str, errors: &mut Vec<ConfigError>) -> Option<&'a Entry> {
        let e = self.take(key);
        if e.is_none() {
            self.missing(key, errors);
        }
        e
    }

    fn parsed<T: std::str::FromStr>(
        &mut self,
        key: &str,
        what: &str,
        errors: &mut Vec<ConfigError>,
    ) -> Option<Option<T>> {
        let e = self.take(key)?;
        match e.value.parse::<T>() {
            Ok(v) => Some(Some(v)),
            Err(_) => {
                errors.push(err(
                    e.line,
                    e.value_col,
                    ConfigErrorKind::Parse(format!("`{key}`: expected {what}, got `{}`", e.value)),
                ));
                Some(None)
            }
        }
    }

    /// A finite number, optionally required to be positive. `None` if absent
    /// or broken (broken values are reported).
    fn number(&mut self, key: &str, positive: bool, errors: &mut Vec<ConfigError>) -> Option<f64> {
        let line_col = self.section.and_then(|s| s.entries.iter().find(|e| e.key == key)).map(|e| (e.line, e.value_col));
        let v = self.parsed::<f64>(key, "a number", errors)??;
        let (line, col) = line_col.expect("entry exists");
        if !v.is_finite() {
            errors.push(err(line, col, ConfigErrorKind::Parse(format!("`{key}` must be finite"))));
            return None;
        }
        if positive && !(v > 0.0) {
            errors.push(err(
                line,
                col,
                ConfigErrorKind::UnitViolation(format!("`{key}` must be positive, got {v}")),
            ));
            return None;
        }
        Some(v)
    }

    fn required(&mut self, key: &str, positive: bool, errors: &mut Vec<ConfigError>) -> Option<f64> {
        if self.section.map_or(true, |s| s.entries.iter().all(|e| e.key != key)) {
            self.missing(key, errors);
            return None;
        }
        self.number(key, positive, errors)
    }

    fn finish(self, errors: &mut Vec<ConfigError>) {
        if let Some(s) = self.section {
            for (i, e) in s.entries.iter().enumerate() {
                if !self.used.contains(&i) {
                    errors.push(err(
                        e.line,
                        e.key_col,
                        ConfigErrorKind::UnknownKey {
                            section: s.name.clone(),
                            key: e.key.clone(),
                        },
                    ));
                }
            }
        }
    }
}

fn read_material(sections: &[Section], name: &'static str, errors: &mut Vec<ConfigError>) -> Option<MaterialParams> {
    let mut r = Reader::new(sections, name);
    if !r.present() {
        errors.push(err(0, 0, ConfigErrorKind::Parse(format!("missing section [{name}]"))));
        return None;
    }
    let rho = r.required("rho", true, errors);
    let c11 = r.required("c11", true, errors);
    let c55 = r.required("c55", true, errors);
    let gamma31 = r.number("gamma31", false, errors).unwrap_or(0.0);
    let gamma15 = r.number("gamma15", false, errors).unwrap_or(0.0);
    let eps1 = r.number("eps1", true, errors).unwrap_or(1.0);
    let eps3 = r.number("eps3", true, errors).unwrap_or(1.0);
    let mu = r.number("mu", true, errors).unwrap_or(1.0);
    r.finish(errors);
    Some(MaterialParams {
        rho: rho?,
        c11: c11?,
        c55: c55?,
        gamma31,
        gamma15,
        eps1,
        eps3,
        mu,
    })
}

fn read_signal(sections: &[Section], name: &'static str, errors: &mut Vec<ConfigError>) -> VoltageSignal {
    let mut r = Reader::new(sections, name);
    if !r.present() {
        return VoltageSignal::Zero;
    }
    let kind = r.string("signal", errors).map(|e| (e.value.clone(), e.line, e.value_col));
    let signal = match kind {
        None => VoltageSignal::Zero,
        Some((k, line, col)) => match k.as_str() {
            "zero" => VoltageSignal::Zero,
            "constant" => VoltageSignal::Constant {
                amplitude: r.required("amplitude", false, errors).unwrap_or(0.0),
            },
            "step" => VoltageSignal::Step {
                amplitude: r.required("amplitude", false, errors).unwrap_or(0.0),
                step_time: r.number("step_time", false, errors).unwrap_or(0.0),
            },
            "sinusoid" => VoltageSignal::Sinusoid {
                amplitude: r.required("amplitude", false, errors).unwrap_or(0.0),
                frequency: r.required("frequency", false, errors).unwrap_or(0.0),
            },
            other => {
                errors.push(err(
                    line,
                    col,
                    ConfigErrorKind::Parse(format!(
                        "unknown signal `{other}` (zero, constant, step, sinusoid)"
                    )),
                ));
                VoltageSignal::Zero
            }
        },
    };
    r.finish(errors);
    signal
}

/// Parses and validates a configuration, collecting every problem found.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let sections = tokenize(text, &mut errors);

    let mut model = Reader::new(&sections, "model");
    if !model.present() {
        errors.push(err(0, 0, ConfigErrorKind::Parse("missing section [model]".into())));
    }
    let enumerated = |r: &mut Reader, key: &str, errors: &mut Vec<ConfigError>| {
        r.string(key, errors).map(|e| (e.value.clone(), e.line, e.value_col))
    };
    let variant = enumerated(&mut model, "variant", &mut errors).and_then(|(v, line, col)| {
        v.parse::<Variant>()
            .map_err(|m| errors.push(err(line, col, ConfigErrorKind::Parse(m))))
            .ok()
    });
    let regime = enumerated(&mut model, "regime", &mut errors).and_then(|(v, line, col)| {
        v.parse::<Regime>()
            .map_err(|m| errors.push(err(line, col, ConfigErrorKind::Parse(m))))
            .ok()
    });
    let bc = match model.take("bc") {
        None => Some(MechanicalBc::FreeFree),
        Some(e) => e
            .value
            .parse::<MechanicalBc>()
            .map_err(|m| errors.push(err(e.line, e.value_col, ConfigErrorKind::Parse(m.to_string()))))
            .ok(),
    };
    model.finish(&mut errors);

    let Some(variant) = variant else {
        return Err(ConfigErrors(errors));
    };
    let patch = variant.is_patch();
    for s in &sections {
        let misplaced = match s.name.as_str() {
            "material.patch" | "voltage.top" | "voltage.bottom" => !patch,
            "voltage" => patch,
            _ => false,
        };
        if misplaced {
            errors.push(err(
                s.line,
                1,
                ConfigErrorKind::Parse(format!("section [{}] does not apply to {variant}", s.name)),
            ));
        }
    }

    let beam = read_material(&sections, "material.beam", &mut errors);
    let patch_material = if patch {
        read_material(&sections, "material.patch", &mut errors)
    } else {
        None
    };

    let mut g = Reader::new(&sections, "geometry");
    if !g.present() {
        errors.push(err(0, 0, ConfigErrorKind::Parse("missing section [geometry]".into())));
    }
    let length = g.required("length", true, &mut errors);
    let geometry = if patch {
        let h0 = g.required("core_half_thickness", true, &mut errors);
        let h1 = g.required("patch_thickness", true, &mut errors);
        let start_line = g.section.and_then(|s| s.entries.iter().find(|e| e.key == "patch_start")).map(|e| (e.line, e.value_col));
        let a = g.required("patch_start", false, &mut errors);
        let b = g.required("patch_end", false, &mut errors);
        if let (Some(l), Some(a), Some(b)) = (length, a, b) {
            if !(0.0 < a && a < b && b < l) {
                let (line, col) = start_line.unwrap_or((0, 0));
                errors.push(err(
                    line,
                    col,
                    ConfigErrorKind::UnitViolation(format!(
                        "patch interval [{a}, {b}] must satisfy 0 < a < b < L = {l}"
                    )),
                ));
            }
        }
        match (length, h0, h1, a, b) {
            (Some(l), Some(h0), Some(h1), Some(a), Some(b)) => Some(BeamGeometry::with_patch(
                l,
                PatchGeometry {
                    core_half_thickness: h0,
                    patch_thickness: h1,
                    start: a,
                    end: b,
                },
            )),
            _ => None,
        }
    } else {
        let h = g.required("thickness", true, &mut errors);
        match (length, h) {
            (Some(l), Some(h)) => Some(BeamGeometry::single(l, h)),
            _ => None,
        }
    };
    g.finish(&mut errors);

    let voltage = if patch {
        Voltage::Pair {
            top: read_signal(&sections, "voltage.top", &mut errors),
            bottom: read_signal(&sections, "voltage.bottom", &mut errors),
        }
    } else {
        Voltage::Single(read_signal(&sections, "voltage", &mut errors))
    };

    let mut s = Reader::new(&sections, "solver");
    if !s.present() {
        errors.push(err(0, 0, ConfigErrorKind::Parse("missing section [solver]".into())));
    }
    let elements_entry = s.section.and_then(|x| x.entries.iter().find(|e| e.key == "elements")).map(|e| (e.line, e.value_col));
    let n_elements = match s.parsed::<usize>("elements", "a positive integer", &mut errors) {
        None => {
            s.missing("elements", &mut errors);
            None
        }
        Some(Some(0)) => {
            let (line, col) = elements_entry.expect("entry exists");
            errors.push(err(line, col, ConfigErrorKind::UnitViolation("`elements` must be positive".into())));
            None
        }
        Some(n) => n,
    };
    let t_end = s.required("t_end", true, &mut errors);
    let dt = s.number("dt", true, &mut errors);
    let stride_entry = s.section.and_then(|x| x.entries.iter().find(|e| e.key == "stride")).map(|e| (e.line, e.value_col));
    let stride = match s.parsed::<usize>("stride", "a positive integer", &mut errors) {
        None => Some(1),
        Some(Some(0)) => {
            let (line, col) = stride_entry.expect("entry exists");
            errors.push(err(line, col, ConfigErrorKind::UnitViolation("`stride` must be positive".into())));
            None
        }
        Some(n) => n,
    };
    s.finish(&mut errors);

    let mut o = Reader::new(&sections, "output");
    let probes = match o.take("probes") {
        None => length.map(|l| vec![0.25 * l, 0.5 * l, l]),
        Some(e) => {
            let mut out = Vec::new();
            let mut ok = true;
            for item in e.value.split(',') {
                match item.trim().parse::<f64>() {
                    Ok(x) if length.map_or(true, |l| (0.0..=l).contains(&x)) => out.push(x),
                    Ok(x) => {
                        ok = false;
                        errors.push(err(
                            e.line,
                            e.value_col,
                            ConfigErrorKind::UnitViolation(format!("probe {x} lies outside the beam")),
                        ));
                    }
                    Err(_) => {
                        ok = false;
                        errors.push(err(
                            e.line,
                            e.value_col,
                            ConfigErrorKind::Parse(format!("bad probe position `{}`", item.trim())),
                        ));
                    }
                }
            }
            ok.then_some(out)
        }
    };
    o.finish(&mut errors);

    let mut d = Reader::new(&sections, "debug");
    let flip = match d.parsed::<bool>("flip_bottom_coupling", "true or false", &mut errors) {
        None => false,
        Some(v) => v.unwrap_or(false),
    };
    d.finish(&mut errors);

    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    let (Some(regime), Some(bc), Some(beam), Some(geometry), Some(n_elements), Some(t_end), Some(stride), Some(probes)) =
        (regime, bc, beam, geometry, n_elements, t_end, stride, probes)
    else {
        unreachable!("every missing value was reported");
    };
    let model_line = sections.iter().find(|s| s.name == "model").map_or(0, |s| s.line);
    let spec = ModelSpec {
        variant,
        regime,
        beam_material: beam,
        patch_material,
        geometry,
        mechanical_bc: bc,
        voltage,
    }
    .validate()
    .map_err(|e| ConfigErrors(vec![err(model_line, 1, ConfigErrorKind::UnitViolation(e.to_string()))]))?;
    let dt = match dt {
        Some(dt) => dt,
        None => default_dt(&spec, n_elements, t_end)
            .map_err(|m| ConfigErrors(vec![err(model_line, 1, ConfigErrorKind::UnitViolation(m))]))?,
    };
    Ok(RunConfig {
        spec,
        n_elements,
        dt,
        t_end,
        stride,
        probes,
        flip_bottom_coupling: flip,
    })
}

/// Fastest wave speed of the model: the coupled stretch/charge speed in the
/// fully dynamic regime, the mechanical stretching or shear speed otherwise.
pub fn max_wave_speed(spec: &ValidatedModelSpec) -> Result<f64, String> {
    let mut materials = vec![*spec.beam_material()];
    materials.extend(spec.patch_material().copied());
    let mut c: f64 = 0.0;
    for m in &materials {
        let d = m.derive().map_err(|e| e.to_string())?;
        let stretch = if spec.regime() == Regime::FullMagnetic && m.mu > 0.0 {
            stretching_wave_speeds(m).map_err(|e| e.to_string())?.0
        } else {
            (d.alpha1 / m.rho).sqrt()
        };
        c = c.max(stretch);
        if spec.variant().is_timoshenko() {
            c = c.max((d.alpha3 / m.rho).sqrt());
        }
    }
    Ok(c)
}

/// Default time step: half the transit time of the fastest wave across the
/// smallest element, and at most 1/20 of the fastest voltage period. The
/// step is then shortened so that it divides `t_end` evenly.
pub fn default_dt(spec: &ValidatedModelSpec, n_elements: usize, t_end: f64) -> Result<f64, String> {
    let mesh = build_mesh(spec.geometry(), n_elements, spec.variant().is_patch()).map_err(|e| e.to_string())?;
    let mut dt = 0.5 * mesh.min_element_length() / max_wave_speed(spec)?;
    let signals = match *spec.voltage() {
        Voltage::Single(s) => vec![s],
        Voltage::Pair { top, bottom } => vec![top, bottom],
    };
    for s in signals {
        if let VoltageSignal::Sinusoid { frequency, .. } = s {
            if frequency.abs() > 0.0 {
                dt = dt.min(1.0 / (20.0 * frequency.abs()));
            }
        }
    }
    let steps = (t_end / dt).ceil().max(1.0);
    Ok(t_end / steps)
}

fn write_material(out: &mut String, name: &str, m: &MaterialParams) {
    out.push_str(&format!("\n[{name}]\n"));
    for (k, v) in [
        ("rho", m.rho),
        ("c11", m.c11),
        ("c55", m.c55),
        ("gamma31", m.gamma31),
        ("gamma15", m.gamma15),
        ("eps1", m.eps1),
        ("eps3", m.eps3),
        ("mu", m.mu),
    ] {
        out.push_str(&format!("{k} = {v:?}\n"));
    }
}

fn write_signal(out: &mut String, name: &str, s: &VoltageSignal) {
    out.push_str(&format!("\n[{name}]\n"));
    match *s {
        VoltageSignal::Zero => out.push_str("signal = zero\n"),
        VoltageSignal::Constant { amplitude } => {
            out.push_str(&format!("signal = constant\namplitude = {amplitude:?}\n"))
        }
        VoltageSignal::Step {
            amplitude,
            step_time,
        } => out.push_str(&format!(
            "signal = step\namplitude = {amplitude:?}\nstep_time = {step_time:?}\n"
        )),
        VoltageSignal::Sinusoid {
            amplitude,
            frequency,
        } => out.push_str(&format!(
            "signal = sinusoid\namplitude = {amplitude:?}\nfrequency = {frequency:?}\n"
        )),
    }
}

/// Writes every setting explicitly, so that `parse_config` gives back the
/// same configuration. Floats use the shortest exact representation.
pub fn serialize_config(config: &RunConfig) -> String {
    let spec = config.spec.spec();
    let mut out = String::new();
    out.push_str(&format!(
        "[model]\nvariant = {}\nregime = {}\nbc = {}\n",
        spec.variant, spec.regime, spec.mechanical_bc
    ));
    write_material(&mut out, "material.beam", &spec.beam_material);
    if let Some(m) = &spec.patch_material {
        write_material(&mut out, "material.patch", m);
    }
    let g = &spec.geometry;
    out.push_str(&format!("\n[geometry]\nlength = {:?}\n", g.length));
    match &g.patch {
        Some(p) => out.push_str(&format!(
            "core_half_thickness = {:?}\npatch_thickness = {:?}\npatch_start = {:?}\npatch_end = {:?}\n",
            p.core_half_thickness, p.patch_thickness, p.start, p.end
        )),
        None => out.push_str(&format!("thickness = {:?}\n", g.thickness)),
    }
    match &spec.voltage {
        Voltage::Single(s) => write_signal(&mut out, "voltage", s),
        Voltage::Pair { top, bottom } => {
            write_signal(&mut out, "voltage.top", top);
            write_signal(&mut out, "voltage.bottom", bottom);
        }
    }
    out.push_str(&format!(
        "\n[solver]\nelements = {}\nt_end = {:?}\ndt = {:?}\nstride = {}\n",
        config.n_elements, config.t_end, config.dt, config.stride
    ));
    let probes: Vec<String> = config.probes.iter().map(|p| format!("{p:?}")).collect();
    out.push_str(&format!("\n[output]\nprobes = {}\n", probes.join(", ")));
    if config.flip_bottom_coupling {
        out.push_str("\n[debug]\nflip_bottom_coupling = true\n");
    }
    out
}
