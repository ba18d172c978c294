use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_piezobeam");

const CONFIG: &str = "[model]
variant = single-mt
regime = electrostatic

[material.beam]
rho = 1
c11 = 1
c55 = 0.5
gamma31 = 0.5

[geometry]
length = 1
thickness = 0.1

[voltage]
signal = sinusoid
amplitude = 1
frequency = 1

[solver]
elements = 8
t_end = 0.2
";

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn subcommands_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.ini");
    std::fs::write(&cfg, CONFIG).unwrap();
    let out = dir.path().join("out");
    let (o, c) = (out.to_str().unwrap(), cfg.to_str().unwrap());

    assert_eq!(run(&["simulate", c, "--out", o, "--svg"]).0, 0);
    for f in ["trajectory.csv", "energy.csv", "summary.json", "energy.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(run(&["modes", c, "--n", "4", "--out", o]).0, 0);
    assert!(out.join("modes.csv").exists());
    assert_eq!(run(&["check", c, "--out", o]).0, 0);
    assert!(out.join("report.json").exists());
    let limit = dir.path().join("limit.ini");
    std::fs::write(&limit, CONFIG.replace("electrostatic", "full-magnetic")).unwrap();
    let (code, stdout, _) = run(&["limit", limit.to_str().unwrap(), "--mu", "1e-2,1e-3", "--out", o]);
    assert_eq!(code, 0);
    assert!(stdout.contains("limit.csv"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("out");
    let o = o.to_str().unwrap();

    let bad = dir.path().join("bad.ini");
    std::fs::write(&bad, CONFIG.replace("t_end = 0.2", "t_end = 0.2\ndampling = 1")).unwrap();
    let (code, _, err) = run(&["simulate", bad.to_str().unwrap(), "--out", o]);
    assert_eq!(code, 2);
    assert!(err.contains("line 23") && err.contains("dampling"), "{err}");

    let (code, _, _) = run(&["simulate", "/nonexistent/run.ini", "--out", o]);
    assert_eq!(code, 2);

    let flipped = dir.path().join("flip.ini");
    let patch = "[model]
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
signal = constant
amplitude = 1
[voltage.bottom]
signal = constant
amplitude = 1
[solver]
elements = 8
t_end = 0.2
dt = 0.01
[debug]
flip_bottom_coupling = true
";
    std::fs::write(&flipped, patch).unwrap();
    assert_eq!(run(&["check", flipped.to_str().unwrap(), "--out", o]).0, 4);

    // Too few elements for a patch mesh.
    let coarse = dir.path().join("coarse.ini");
    std::fs::write(&coarse, patch.replace("elements = 8", "elements = 2")).unwrap();
    assert_eq!(run(&["simulate", coarse.to_str().unwrap(), "--out", o]).0, 2);
}
