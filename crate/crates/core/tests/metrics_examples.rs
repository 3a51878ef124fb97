use std::f64::consts::PI;

use powerdamp::detector::ExtremumKind;
use powerdamp::metrics::{
    communication_effort, envelope_at, envelope_from_events, per_period_ratios, report, settling_time,
};
use powerdamp::scenarios::{rig_resonance, scenario_fifth_order_sim, scenario_second_order};
use powerdamp::simkernel::{run, SimTrace};

fn second_order(a: f64, on: bool) -> SimTrace {
    run(&scenario_second_order(a, 100.0, 2.0, on).unwrap()).unwrap()
}

#[test]
fn decaying_envelope_ratio() {
    let tr = second_order(2.0, false);
    let env = envelope_from_events(&tr);
    assert!(env.windows(2).all(|w| w[1].1 < w[0].1));
    let expect = (-PI * 2.0 / 10.0f64).exp();
    for kind in [ExtremumKind::Maximum, ExtremumKind::Minimum] {
        for r in per_period_ratios(&tr, kind) {
            assert!((r - expect).abs() <= 0.05 * expect, "{r} vs {expect}");
        }
    }
}

#[test]
fn undamped_envelope_is_flat() {
    let tr = second_order(0.0, false);
    let env = envelope_from_events(&tr);
    assert!(env.len() > 20);
    for (_, a) in &env {
        assert!((a - 2.0).abs() <= 0.01 * 2.0, "{a}");
    }
}

#[test]
fn no_events_no_envelope() {
    let mut cfg = scenario_second_order(2.0, 100.0, 2.0, false).unwrap();
    cfg.initial_state = vec![0.0, 0.0];
    let tr = run(&cfg).unwrap();
    assert!(envelope_from_events(&tr).is_empty());
    let r = report(&tr, 10.0, Some(0.1));
    assert_eq!(r.settling_time_s, None);
    assert_eq!(r.updates_per_period, None);
    assert_eq!(r.reduction_factor, None);
}

#[test]
fn settling_examples() {
    let decaying = envelope_from_events(&second_order(2.0, false));
    let t = settling_time(&decaying, 0.1).unwrap();
    let first_below = decaying.iter().find(|p| p.1 <= 0.1).unwrap().0;
    assert_eq!(t, first_below);
    let growing = envelope_from_events(&second_order(-1.0, false));
    assert_eq!(settling_time(&growing, 0.1), None);
    assert!(envelope_at(&growing, 5.0).unwrap() > 2.0);
}

#[test]
fn continuous_baseline() {
    let tr = second_order(2.0, true);
    let r = communication_effort(&tr, 10.0, 1000.0);
    assert!((r.comm_effort_continuous - 628.3).abs() < 0.05);
    assert!((r.comm_effort_continuous - 2.0 * PI * 1000.0 / 10.0).abs() < 1e-9);
}

#[test]
fn second_order_locked_on_updates_twice_per_period() {
    for a in [2.0, -1.0] {
        let tr = second_order(a, true);
        let r = communication_effort(&tr, 10.0, 1000.0);
        let upp = r.updates_per_period.unwrap();
        assert!((upp - 2.0).abs() <= 0.2, "a={a}: {upp}");
        let reduction = r.reduction_factor.unwrap();
        assert_eq!(reduction, r.comm_effort_continuous / r.comm_effort_event.unwrap());
        // Debounce bound: at most 2 Omega_max / omega updates per period.
        assert!(upp <= 2.0 * 30.0 / 10.0);
    }
}

#[test]
fn rig_reduction_near_pi_fs_over_omega() {
    let mut cfg = scenario_fifth_order_sim(2.0, 4.0).unwrap();
    cfg.sim.duration = 12.0;
    let tr = run(&cfg).unwrap();
    let omega = rig_resonance();
    let r = communication_effort(&tr, omega, cfg.sim.fs);
    let upp = r.updates_per_period.unwrap();
    assert!((upp - 2.0).abs() <= 0.2, "{upp}");
    let expect = PI * cfg.sim.fs / omega;
    let reduction = r.reduction_factor.unwrap();
    assert!((reduction - expect).abs() <= 0.1 * expect, "{reduction} vs {expect}");
    assert!(reduction > 100.0);
    assert!(upp <= 2.0 * cfg.detector.omega_max / omega);
}
