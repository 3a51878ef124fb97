use std::f64::consts::PI;

use powerdamp::scenarios::{
    rig_equilibrium, rig_plant, scenario_fifth_order_sim, scenario_second_order, second_order_plant,
};
use powerdamp::simkernel::{apply_limiter, rk4_step, run, NoiseSource, Rk4, StateLimiter};

#[test]
fn harmonic_half_period() {
    let h = 1e-3;
    let steps = (PI / 10.0 / h).round() as usize;
    let mut x = vec![2.0, 0.0];
    for k in 0..steps {
        x = rk4_step(|_, x, dx| {
            dx[0] = x[1];
            dx[1] = -100.0 * x[0];
        }, &x, k as f64 * h, h)
        .unwrap();
    }
    // steps * h is pi/10 up to rounding; compare against the closed form there.
    let t = steps as f64 * h;
    assert!((x[0] - 2.0 * (10.0 * t).cos()).abs() < 1e-4);
    assert!((x[0] + 2.0).abs() < 1e-4);
}

#[test]
fn non_finite_state_is_an_error() {
    assert!(rk4_step(|_, _, dx| dx[0] = f64::INFINITY, &[0.0], 0.0, 0.1).is_err());
}

fn integrate_rig(h: f64, secs: f64) -> Vec<f64> {
    let plant = rig_plant().compiled().unwrap();
    let eq = rig_equilibrium(0.0105).unwrap();
    let v = eq.input * 1.05;
    let mut x = eq.state.clone();
    x[0] += 0.01;
    let mut rk = Rk4::new(x.len());
    let steps = (secs / h).round() as usize;
    for k in 0..steps {
        rk.step(|_, xs, dx| plant.derivative(xs, v, dx), &mut x, k as f64 * h, h).unwrap();
    }
    x
}

#[test]
fn rig_step_halving_converges() {
    let coarse = integrate_rig(1.0 / 5000.0, 1.0);
    let fine = integrate_rig(1.0 / 50_000.0, 1.0);
    let norm = fine.iter().map(|v| v * v).sum::<f64>().sqrt();
    let diff = coarse.iter().zip(&fine).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(diff <= 1e-6 * norm, "relative difference {:e}", diff / norm);
}

#[test]
fn undriven_damped_energy_never_grows() {
    let (a, b) = (0.5, 100.0);
    let model = second_order_plant(a, b).unwrap();
    let energy = |x: &[f64]| 0.5 * x[1] * x[1] + 0.5 * b * x[0] * x[0];
    let mut x = vec![2.0, -3.0];
    let mut rk = Rk4::new(2);
    let h = 1e-3;
    let mut e_prev = energy(&x);
    for k in 0..20_000 {
        rk.step(|_, xs, dx| model.derivative(xs, 0.0, dx), &mut x, k as f64 * h, h).unwrap();
        let e = energy(&x);
        assert!(e <= e_prev * (1.0 + 1e-6), "step {k}: {e} > {e_prev}");
        e_prev = e;
    }
}

#[test]
fn noise_examples() {
    let mut quiet = NoiseSource::new(1, 0.0, 100.0, 1000.0);
    assert!((0..1000).all(|_| quiet.sample() == 0.0));

    let sigma = 0.3;
    let n = 1_000_000;
    let mut src = NoiseSource::new(42, sigma, 100.0, 1000.0);
    let mean = (0..n).map(|_| src.sample()).sum::<f64>() / n as f64;
    assert!(mean.abs() <= 5.0 * sigma / (n as f64).sqrt(), "mean {mean}");

    let mut a = NoiseSource::new(9, sigma, 100.0, 1000.0);
    let mut b = NoiseSource::new(9, sigma, 100.0, 1000.0);
    assert!((0..10_000).all(|_| a.sample().to_bits() == b.sample().to_bits()));
    let mut c = NoiseSource::new(10, sigma, 100.0, 1000.0);
    assert!((0..100).any(|_| a.sample() != c.sample()));
}

#[test]
fn limiter_examples() {
    let lim = StateLimiter {
        state_index: 1,
        lower: 0.0,
        upper: 0.021,
        velocity_index: Some(0),
    };
    let mut x = vec![0.3, 0.01, 5.0];
    assert!(!apply_limiter(&mut x, &lim));
    assert_eq!(x, vec![0.3, 0.01, 5.0]);
    let mut x = vec![-0.4, -0.003, 5.0];
    assert!(apply_limiter(&mut x, &lim));
    assert_eq!(x, vec![0.0, 0.0, 5.0]);
    let mut x = vec![0.4, 0.03, 5.0];
    assert!(apply_limiter(&mut x, &lim));
    assert_eq!(x, vec![0.0, 0.021, 5.0]);
}

#[test]
fn zero_state_without_input_stays_at_offset() {
    let mut cfg = scenario_second_order(2.0, 100.0, 1.0, false).unwrap();
    cfg.initial_state = vec![0.0, 0.0];
    let trace = run(&cfg).unwrap();
    assert!(trace.y.iter().all(|&y| y == 0.0));
    assert!(trace.u_hat.iter().all(|&u| u == 0.0));
    assert!(trace.events.is_empty());
}

#[test]
fn trace_shape_and_grid() {
    for (fs, duration) in [(1000.0, 1.0), (1000.0, 1.0005), (250.0, 0.3)] {
        let mut cfg = scenario_second_order(2.0, 100.0, 2.0, true).unwrap();
        cfg.sim.fs = fs;
        cfg.detector.fs = fs;
        cfg.sim.duration = duration;
        let tr = run(&cfg).unwrap();
        let expect = (duration * fs - 1e-9).ceil() as usize + 1;
        assert_eq!(tr.len(), expect);
        for col in [&tr.y, &tr.y_noisy, &tr.u, &tr.u_hat, &tr.v] {
            assert_eq!(col.len(), expect);
        }
        for (i, w) in tr.t.windows(2).enumerate() {
            assert!(w[1] > w[0]);
            assert!((w[1] - (i + 1) as f64 / fs).abs() < 1e-12);
        }
    }
}

#[test]
fn held_output_switches_only_at_events() {
    let cfg = scenario_second_order(-1.0, 100.0, 2.0, true).unwrap();
    let tr = run(&cfg).unwrap();
    let mut switches = 0;
    for i in 1..tr.len() {
        if tr.u_hat[i] != tr.u_hat[i - 1] {
            switches += 1;
            let t = tr.t[i];
            assert!(
                tr.events.iter().any(|e| (e.t_star - t).abs() < 1e-9),
                "switch at {t} without an event"
            );
        }
    }
    assert!(switches > 10 && switches <= tr.events.len());
}

#[test]
fn scheduled_switches_land_on_the_grid() {
    let mut cfg = scenario_fifth_order_sim(2.0, 1.0).unwrap();
    cfg.sim.duration = 4.0;
    let tr = run(&cfg).unwrap();
    let fs = cfg.sim.fs;
    let changes: Vec<f64> = (1..tr.len()).filter(|&i| tr.u_hat[i] != tr.u_hat[i - 1]).map(|i| tr.t[i]).collect();
    assert!(!changes.is_empty());
    for t in changes {
        assert!(t >= 1.0);
        assert!((t * fs - (t * fs).round()).abs() < 1e-6);
    }
}

#[test]
fn identical_seed_identical_trace() {
    let mut cfg = scenario_fifth_order_sim(2.0, 1.0).unwrap();
    cfg.sim.duration = 3.0;
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a, b);
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    a.write_csv(&mut ca).unwrap();
    b.write_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
    cfg.sim.seed += 1;
    let c = run(&cfg).unwrap();
    assert_ne!(a.y_noisy, c.y_noisy);
}

#[test]
fn csv_headers_and_round_trip() {
    let tr = run(&scenario_second_order(2.0, 100.0, 2.0, true).unwrap()).unwrap();
    let mut buf = Vec::new();
    tr.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,y,y_noisy,u,u_hat,v"));
    for (i, line) in lines.enumerate().step_by(97) {
        let y: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(y.to_bits(), tr.y[i].to_bits());
    }
    let mut buf = Vec::new();
    tr.write_events_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    // y(0) = c is a maximum, so the first detected turning point is a minimum.
    assert!(text.starts_with("i,kind,t_star,amp,omega\n1,min,"), "{}", &text[..60]);
}
