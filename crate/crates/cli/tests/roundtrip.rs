use piezobeam_cli::{parse_config, serialize_config};
use proptest::prelude::*;

fn signal() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("signal = zero".to_string()),
        (-10.0f64..10.0).prop_map(|a| format!("signal = constant\namplitude = {a:?}")),
        (-10.0f64..10.0, 0.0f64..1.0).prop_map(|(a, t)| format!("signal = step\namplitude = {a:?}\nstep_time = {t:?}")),
        (-10.0f64..10.0, 0.0f64..50.0).prop_map(|(a, f)| format!("signal = sinusoid\namplitude = {a:?}\nfrequency = {f:?}")),
    ]
}

fn material() -> impl Strategy<Value = String> {
    (0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0, -1.0f64..1.0, 0.1f64..3.0, 1e-6f64..10.0).prop_map(
        |(rho, c11, c55, g, eps, mu)| {
            format!("rho = {rho:?}\nc11 = {c11:?}\nc55 = {c55:?}\ngamma31 = {g:?}\neps3 = {eps:?}\nmu = {mu:?}")
        },
    )
}

fn config() -> impl Strategy<Value = String> {
    let variant = prop::sample::select(vec!["single-eb", "single-mt", "patch-eb", "patch-mt"]);
    let regime = prop::sample::select(vec!["full-magnetic", "electrostatic"]);
    let bc = prop::sample::select(vec!["free-free", "clamped-free"]);
    (
        variant,
        regime,
        bc,
        material(),
        material(),
        signal(),
        signal(),
        (0.5f64..5.0, 0.05f64..0.45, 0.55f64..0.95),
        (4usize..40, 0.1f64..2.0, prop::option::of(1e-4f64..1e-2), 1usize..10),
        any::<bool>(),
    )
        .prop_map(|(v, r, bc, beam, patch, top, bottom, (l, a, b), (n, t_end, dt, stride), flip)| {
            let mut s = format!("[model]\nvariant = {v}\nregime = {r}\nbc = {bc}\n[material.beam]\n{beam}\n");
            if v.starts_with("patch") {
                s += &format!(
                    "[material.patch]\n{patch}\n[geometry]\nlength = {l:?}\ncore_half_thickness = 0.05\npatch_thickness = 0.01\npatch_start = {:?}\npatch_end = {:?}\n[voltage.top]\n{top}\n[voltage.bottom]\n{bottom}\n",
                    a * l,
                    b * l
                );
            } else {
                s += &format!("[geometry]\nlength = {l:?}\nthickness = 0.1\n[voltage]\n{top}\n");
            }
            s += &format!("[solver]\nelements = {n}\nt_end = {t_end:?}\nstride = {stride}\n");
            if let Some(dt) = dt {
                s += &format!("dt = {dt:?}\n");
            }
            if flip {
                s += "[debug]\nflip_bottom_coupling = true\n";
            }
            s
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parse_serialize_round_trip(text in config()) {
        let c = parse_config(&text).unwrap();
        let out = serialize_config(&c);
        let back = parse_config(&out).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(serialize_config(&back), out);
    }
}
