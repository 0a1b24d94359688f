use proptest::prelude::*;

use vpcontrol::dispersion::{synthesize_guess, DispersionSettings};
use vpcontrol::io::{self, StateHeader};
use vpcontrol::landscape::{Axis, CellStatus, LandscapeResult};
use vpcontrol::{DistributionState, Error, ObjectiveKind, PhaseSpaceGrid, Problem};

#[test]
fn state_dump_round_trips_bitwise() {
    let grid = PhaseSpaceGrid::new(12, 10, 3.5, 2.0).unwrap();
    let state = DistributionState::from_fn(&grid, |x, v| (x * 1.3).sin() * (-v * v).exp() + 1e-300);
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("s.f64");
    io::write_state(&path, &state, &grid).unwrap();
    let (g2, s2) = io::read_state(&path).unwrap();
    assert_eq!(g2, grid);
    assert_eq!(s2, state);
}

#[test]
fn truncated_state_dump_reports_offset() {
    let grid = PhaseSpaceGrid::new(8, 8, 1.0, 1.0).unwrap();
    let state = DistributionState::zeros(&grid);
    let mut bytes = io::encode_state(&state, &grid).unwrap();
    let full = bytes.len();
    bytes.truncate(full - 5);
    match io::decode_state(&bytes) {
        Err(Error::Format { offset, .. }) => assert!(offset > 0 && offset <= full),
        other => panic!("expected a format error, got {other:?}"),
    }
    assert!(matches!(io::decode_state(b"garbage"), Err(Error::Format { .. })));
}

#[test]
fn state_header_serializes_documented_keys() {
    let h = StateHeader {
        mx: 4,
        mv: 6,
        lx: 1.0,
        lv: 2.0,
        t: 0.5,
        dtype: "f64le".into(),
        layout: "x-major".into(),
    };
    let v = serde_json::to_value(&h).unwrap();
    for key in ["Mx", "Mv", "Lx", "Lv", "T", "dtype", "layout"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn energy_csv_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("e.csv");
    let e = [1e-7, 1.2345678901234567e-5, 0.1 + 0.2, f64::MIN_POSITIVE];
    io::write_energy_csv(&path, &e, 0.1).unwrap();
    let (header, rows) = io::read_numeric_csv(&path).unwrap();
    assert_eq!(header, ["t", "energy"]);
    for (n, r) in rows.iter().enumerate() {
        assert_eq!(r[0], n as f64 * 0.1);
        assert_eq!(r[1], e[n]);
    }
}

#[test]
fn landscape_csv_round_trips_with_failed_cells() {
    let axes = vec![
        Axis::new(2, -0.003, 0.001, 3).unwrap(),
        Axis::new(3, -0.003, 0.001, 4).unwrap(),
    ];
    let values: Vec<f64> = (0..12).map(|i| if i == 5 { f64::MAX } else { i as f64 * 0.25 }).collect();
    let status = (0..12)
        .map(|i| if i == 5 { CellStatus::Failed } else { CellStatus::Ok })
        .collect();
    let r = LandscapeResult {
        objective: ObjectiveKind::Eet,
        axes,
        values: values.clone(),
        status,
    };
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("l.csv");
    io::write_landscape_csv(&path, &r).unwrap();
    let t = io::read_landscape_csv(&path).unwrap();
    assert_eq!(t.values, values);
    assert_eq!(t.status[5], CellStatus::Failed);
    for c in 0..12 {
        assert_eq!(t.coords[c], r.coords(c));
    }
}

#[test]
fn growth_fit_recovers_exponential() {
    let dt = 0.1;
    let e: Vec<f64> = (0..=300).map(|n| 1e-9 * (0.47 * n as f64 * dt).exp()).collect();
    let slope = io::fit_growth_rate(&e, dt, (10.0, 25.0)).unwrap();
    assert!((slope - 0.47).abs() < 1e-10);
    assert!(io::fit_growth_rate(&e, dt, (40.0, 50.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    // The source term is linear in the perturbation amplitude, and so is the
    // synthesized field.
    #[test]
    fn guess_is_linear_in_epsilon(scale in 0.1f64..10.0) {
        let p = Problem::TwoStream;
        let grid = p.grid_with(32, 32).unwrap();
        let settings = DispersionSettings::default();
        let eq = p.equilibrium();
        let base = synthesize_guess(&eq, &p.perturbation(1e-3), &grid, &[1], &settings).unwrap();
        let scaled = synthesize_guess(&eq, &p.perturbation(1e-3 * scale), &grid, &[1], &settings).unwrap();
        prop_assert!((scaled.roots[0].s0 - base.roots[0].s0).norm() < 1e-12);
        for (x, y) in scaled.field.pack().iter().zip(base.field.pack()) {
            prop_assert!((x - scale * y).abs() <= 1e-9 * y.abs().max(1e-12), "{} vs {}", x, scale * y);
        }
    }
}
