use ehmac_wasm::{optimize_at, schedule_of, simulate_once};

#[test]
fn optimizer_curve_spans_the_factor_range() {
    let o = optimize_at(7.0, 1.0, 4.0, 4.0).unwrap();
    assert_eq!(o.curve.len(), 101);
    assert_eq!(o.curve[0].0, 1.0);
    assert!((o.curve[100].0 - 11.0).abs() < 1e-12);
    let closed = 7.0 * (16.0 - (1.0 + std::f64::consts::E)) / 9.0;
    assert!((o.f_star - closed).abs() < 1e-9);
    // The numerical optimum is no worse than any sampled point.
    assert!(o.curve.iter().all(|&(_, w)| w >= o.waste_exact - 1e-9));
    assert!(o.regret >= 1.0 && o.regret < 1.003);
}

#[test]
fn optimizer_rejects_bad_input() {
    assert!(optimize_at(-1.0, 1.0, 4.0, 4.0).is_err());
    assert!(optimize_at(f64::NAN, 1.0, 4.0, 4.0).is_err());
    assert!(optimize_at(3.0, 0.0, 4.0, 4.0).is_err());
}

#[test]
fn schedule_cycles_are_contiguous() {
    let cycles = schedule_of(42, 5.0, 8).unwrap();
    assert_eq!(cycles.len(), 8);
    assert_eq!(cycles[0].start, 0.0);
    for w in cycles.windows(2) {
        assert_eq!(w[0].end, w[1].start);
    }
    for c in &cycles {
        assert!((500.0..=1500.0).contains(&(c.end - c.start)));
        assert!((c.threshold - 0.6).abs() < 1e-12);
        assert!(c.subs.iter().all(|&t| t > c.start && t < c.end));
    }
    // Unit factor sends primaries only.
    assert!(schedule_of(42, 1.0, 8).unwrap().iter().all(|c| c.subs.is_empty()));
    assert!(schedule_of(42, 12.0, 2).is_err());
    assert_eq!(schedule_of(1, 2.0, 500).unwrap().len(), 50);
}

#[test]
fn simulate_matches_the_core_run() {
    let a = simulate_once("pw-mac", 12.0, 0.05, 60.0, 9).unwrap();
    let b = simulate_once("pw-mac", 12.0, 0.05, 60.0, 9).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    assert!(a.duty_cycle > 0.0 && a.duty_cycle < 1.0);
    assert!(a.delivered <= a.generated);
    assert!(simulate_once("x-mac", 12.0, 0.05, 60.0, 9).is_err());
    assert!(simulate_once("eh-mac", 12.0, -0.05, 60.0, 9).is_err());
}
