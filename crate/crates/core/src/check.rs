//! Fast self-test behind `powerdamp check`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::compensator::{energy_balance_residual, higher_order_transform, optimal_gain};
use crate::detector::{detect_all, DetectorConfig, ExtremumEvent, ExtremumKind, PsiSource, Trigger};
use crate::lti::Unity;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &'static str, residual: f64, tolerance: f64) -> Self {
        Self {
            name,
            residual,
            tolerance,
            passed: residual.is_finite() && residual <= tolerance,
        }
    }
}

const SAMPLES: [(f64, f64); 5] = [(1.0, 10.0), (0.01, 16.3), (2.5, 1.0), (1e-4, 100.0), (30.0, 0.2)];

/// Runs every check with the gain scaled by `1 + gain_perturbation`.
pub fn run_checks(gain_perturbation: f64) -> Vec<CheckResult> {
    let k = optimal_gain() * (1.0 + gain_perturbation);
    vec![
        gain_constant(k),
        energy_balance(k),
        detector_frequency(),
        detector_amplitude(),
        unity_delay(),
    ]
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}

/// Gain recovered from the energy balance (residual is `r0 + c U^2`) against `k`.
fn gain_constant(k: f64) -> CheckResult {
    let (amp, omega) = (1.0, 10.0);
    let r0 = energy_balance_residual(amp, omega, 0.0);
    let r1 = energy_balance_residual(amp, omega, 1.0);
    let u_star = (-r0 / (r1 - r0)).sqrt();
    let k_balance = u_star / (amp * omega * omega);
    CheckResult::new("gain_constant", (k - k_balance).abs() / k_balance, 1e-9)
}

fn energy_balance(k: f64) -> CheckResult {
    let worst = SAMPLES
        .iter()
        .map(|&(amp, omega)| {
            let r = energy_balance_residual(amp, omega, k * omega * omega * amp);
            r.abs() / (PI * amp * amp * omega)
        })
        .fold(0.0, f64::max);
    CheckResult::new("energy_balance", worst, 1e-9)
}

fn sinusoid_events() -> Vec<ExtremumEvent> {
    let cfg = DetectorConfig {
        window_n: 30,
        fs: 1000.0,
        omega_max: 30.0,
        psi: PsiSource::Constant { value: 0.0 },
        trigger: Trigger::default(),
    };
    let y: Vec<f64> = (0..5000).map(|n| (10.0 * n as f64 / 1000.0).sin()).collect();
    detect_all(&cfg, &y).unwrap_or_default()
}

fn detector_frequency() -> CheckResult {
    let events = sinusoid_events();
    let worst = if events.len() < 4 {
        f64::INFINITY
    } else {
        events[3..].iter().map(|e| (e.omega_est - 10.0).abs() / 10.0).fold(0.0, f64::max)
    };
    CheckResult::new("detector_frequency", worst, 0.02)
}

fn detector_amplitude() -> CheckResult {
    let events = sinusoid_events();
    let worst = if events.is_empty() {
        f64::INFINITY
    } else {
        events.iter().map(|e| (e.amp_signed.abs() - 1.0).abs()).fold(0.0, f64::max)
    };
    CheckResult::new("detector_amplitude", worst, 0.01)
}

fn unity_delay() -> CheckResult {
    let omega = 10.0;
    let event = ExtremumEvent {
        index: 0,
        kind: ExtremumKind::Maximum,
        t_star: 1.0,
        amp_signed: 1.0,
        omega_est: omega,
    };
    let residual = match higher_order_transform(1.0, &event, 2.0, &Unity) {
        Ok(s) => ((s.apply_at - 1.0) - 2.0 * PI / omega).abs() + (s.value - 2.0).abs(),
        Err(_) => f64::INFINITY,
    };
    CheckResult::new("unity_delay", residual, 1e-12)
}
