use piezobeam_cli::output::Table;
use piezobeam_cli::{cmd_check, cmd_limit, cmd_modes, cmd_simulate, parse_config, serialize_config};

fn single(extra_material: &str, voltage: &str, solver: &str) -> String {
    format!(
        "[model]
variant = single-eb
regime = full-magnetic

[material.beam]
rho = 1
c11 = 1
c55 = 0.5
{extra_material}

[geometry]
length = 1
thickness = 0.1

{voltage}

[solver]
{solver}
"
    )
}

const PATCH: &str = "[model]
variant = patch-eb
regime = full-magnetic

[material.beam]
rho = 1
c11 = 2
c55 = 0.8

[material.patch]
rho = 1
c11 = 1
c55 = 0.5
gamma31 = 0.5

[geometry]
length = 1
core_half_thickness = 0.05
patch_thickness = 0.02
patch_start = 0.3
patch_end = 0.7

[voltage.top]
signal = sinusoid
amplitude = 1
frequency = 1

[voltage.bottom]
signal = sinusoid
amplitude = 1
frequency = 1

[solver]
elements = 16
t_end = 0.5
dt = 0.005
";

#[test]
fn zero_input_gives_a_zero_trajectory() {
    let c = parse_config(&single("gamma31 = 0.5", "", "elements = 8\nt_end = 0.2\ndt = 0.01")).unwrap();
    let b = cmd_simulate(&c, false).unwrap();
    let t = Table::from_csv(b.file("trajectory.csv").unwrap()).unwrap();
    assert_eq!(t.rows.len(), 21);
    for (i, h) in t.header.iter().enumerate().skip(1) {
        assert!(t.rows.iter().all(|r| r[i].parse::<f64>().unwrap() == 0.0), "{h}");
    }
    assert_eq!(t.header[0], "t");
    assert!(t.header.contains(&"v@0.5".to_string()) && t.header.contains(&"max|q|".to_string()));
    assert_eq!(
        &t.header[t.header.len() - 6..],
        ["E_kin", "E_stored", "E_mag", "E_total", "work_in", "balance_residual"]
    );
}

#[test]
fn driven_run_balances_and_reads_back_losslessly() {
    let c = parse_config(&single(
        "gamma31 = 0.5",
        "[voltage]\nsignal = sinusoid\namplitude = 1\nfrequency = 2",
        "elements = 16\nt_end = 1\nstride = 5",
    ))
    .unwrap();
    let b = cmd_simulate(&c, true).unwrap();
    assert_eq!(b.summary["balance_within_tolerance"], true);
    let bytes = b.file("energy.csv").unwrap();
    let t = Table::from_csv(bytes).unwrap();
    assert_eq!(t.to_csv(), bytes);
    let e = t.column("E_total").unwrap();
    let w = t.column("work_in").unwrap();
    let r = t.column("balance_residual").unwrap();
    let top = e.iter().fold(0.0f64, |a, &b| a.max(b));
    for i in 0..e.len() {
        assert_eq!(r[i], e[i] - e[0] - w[i]);
        assert!(r[i].abs() <= 1e-8 * top);
    }
    assert!(b.file("energy.svg").is_some() && b.file("probes.svg").is_some());
    let steps = (c.t_end / c.dt).round() as usize;
    assert_eq!(t.rows.len(), steps / 5 + 1);
}

#[test]
fn modes_list_rigid_modes_and_match_the_beam_oracle() {
    // Uncoupled slender beam.
    let mut text = single("", "", "elements = 64\nt_end = 1");
    text = text.replace("thickness = 0.1", "thickness = 0.0001");
    let c = parse_config(&text).unwrap();
    let b = cmd_modes(&c, 8, true).unwrap();
    let t = Table::from_csv(b.file("modes.csv").unwrap()).unwrap();
    let omega = t.column("omega_rad_s").unwrap();
    let zero = omega.iter().filter(|&&w| w == 0.0).count();
    // Rigid translation and rotation in bending, translation in stretch, constant charge.
    assert_eq!(zero, 4);
    let class = t.header.iter().position(|h| h == "class").unwrap();
    let first_bending = t
        .rows
        .iter()
        .zip(&omega)
        .find(|(r, &w)| w > 0.0 && r[class] == "bending-dominant")
        .map(|(_, &w)| w)
        .unwrap();
    let beta_l: f64 = 4.730040744862704;
    let exact = beta_l * beta_l * (1e-8f64 / 12.0).sqrt();
    assert!((first_bending - exact).abs() / exact < 1e-3);
    for row in &t.rows {
        let s: f64 = row[4..7].iter().map(|x| x.parse::<f64>().unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-10);
    }
    assert!(b.file("mode_00.svg").is_some() && b.file("mode_07.svg").is_some());
}

#[test]
fn checks_pass_and_the_negative_control_fails() {
    let c = parse_config(&single("gamma31 = 0.5", "[voltage]\nsignal = constant\namplitude = 1", "elements = 8\nt_end = 0.5\ndt = 0.01")).unwrap();
    let b = cmd_check(&c).unwrap();
    assert!(b.passed);
    assert_eq!(b.summary["reports"][0]["id"], "decoupling/single-eb");

    let c = parse_config(PATCH).unwrap();
    let b = cmd_check(&c).unwrap();
    assert!(b.passed, "{}", b.summary);
    assert_eq!(b.summary["reports"].as_array().unwrap().len(), 2);

    let broken = parse_config(&format!("{PATCH}\n[debug]\nflip_bottom_coupling = true\n")).unwrap();
    let b = cmd_check(&broken).unwrap();
    assert!(!b.passed);
    assert_eq!(b.summary["passed"], false);
}

#[test]
fn limit_sweeps() {
    let c = parse_config(PATCH).unwrap();
    let b = cmd_limit(&c, &[1e-2, 1e-4, 1e-6], true).unwrap();
    assert_eq!(b.summary["monotone"], true);
    let t = Table::from_csv(b.file("limit.csv").unwrap()).unwrap();
    let d = t.column("distance").unwrap();
    assert!(d[0] > d[1] && d[1] > d[2]);
    assert!(b.file("limit.svg").is_some());

    let one = cmd_limit(&c, &[1e-3], false).unwrap();
    assert_eq!(one.summary["monotone"], true);
    assert!(cmd_limit(&c, &[1e-6, 1e-2], false).is_err());

    let uncoupled = parse_config(&single("", "[voltage]\nsignal = constant\namplitude = 1", "elements = 8\nt_end = 0.5\ndt = 0.01")).unwrap();
    let b = cmd_limit(&uncoupled, &[1e-1, 1e-2, 1e-3], false).unwrap();
    let d = Table::from_csv(b.file("limit.csv").unwrap()).unwrap().column("distance").unwrap();
    assert!(d.iter().all(|&x| x == 0.0));
}

#[test]
fn provenance_tracks_the_config() {
    let c = parse_config(PATCH).unwrap();
    let a = cmd_simulate(&c, false).unwrap();
    let again = cmd_simulate(&parse_config(&serialize_config(&c)).unwrap(), false).unwrap();
    assert_eq!(a.files, again.files);
    let mut other = c.clone();
    other.t_end = 0.25;
    let b = cmd_simulate(&other, false).unwrap();
    assert_ne!(
        a.summary["provenance"]["config_sha256"],
        b.summary["provenance"]["config_sha256"]
    );
    assert_eq!(a.summary["provenance"]["mesh"]["elements"], 16);
}
