//! Reference controllers that hold the output offset near `r1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OuterLoopError {
    #[error("gains must be finite and non-negative (kp = {kp}, ki = {ki})")]
    BadGains { kp: f64, ki: f64 },
    #[error("output limits must satisfy lower < upper, got [{0}, {1}]")]
    BadLimits(f64, f64),
    #[error("non-finite reference or feedforward")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AntiWindup {
    /// Conditional integration: skip the update while it would deepen saturation.
    Freeze,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PIConfig {
    pub kp: f64,
    pub ki: f64,
    /// Output reference.
    pub r1: f64,
    /// Constant feedforward (gravity compensation).
    pub r2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_limits: Option<[f64; 2]>,
    pub anti_windup: AntiWindup,
}

impl PIConfig {
    pub fn proportional(kp: f64, r1: f64, r2: f64) -> Self {
        Self {
            kp,
            ki: 0.0,
            r1,
            r2,
            v_limits: None,
            anti_windup: AntiWindup::None,
        }
    }

    pub fn validate(&self) -> Result<(), OuterLoopError> {
        if !(self.kp >= 0.0 && self.ki >= 0.0 && self.kp.is_finite() && self.ki.is_finite()) {
            return Err(OuterLoopError::BadGains {
                kp: self.kp,
                ki: self.ki,
            });
        }
        if !(self.r1.is_finite() && self.r2.is_finite()) {
            return Err(OuterLoopError::NonFinite);
        }
        if let Some([lo, hi]) = self.v_limits {
            if !(lo < hi) {
                return Err(OuterLoopError::BadLimits(lo, hi));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PIState {
    /// Accumulated `(r1 - y) dt`.
    pub integral: f64,
}

/// `kp (r1 - y) + r2`, no limits and no state.
pub fn p_step(cfg: &PIConfig, y: f64) -> f64 {
    cfg.kp * (cfg.r1 - y) + cfg.r2
}

pub fn pi_step(cfg: &PIConfig, state: &mut PIState, y: f64, dt: f64) -> f64 {
    pi_step_with_feedforward(cfg, state, y, dt, 0.0)
}

/// PI step with an extra term added before saturation (the compensator output).
///
/// Forward-Euler integration; with [`AntiWindup::Freeze`] the integral update is
/// skipped whenever the resulting output would saturate in the direction of the error.
pub fn pi_step_with_feedforward(cfg: &PIConfig, state: &mut PIState, y: f64, dt: f64, feedforward: f64) -> f64 {
    let error = cfg.r1 - y;
    let candidate = state.integral + error * dt;
    let output = |integral: f64| cfg.kp * error + cfg.ki * integral + cfg.r2 + feedforward;
    let raw = output(candidate);
    let Some([lo, hi]) = cfg.v_limits else {
        state.integral = candidate;
        return raw;
    };
    let deepens = (raw > hi && error > 0.0) || (raw < lo && error < 0.0);
    if !(cfg.anti_windup == AntiWindup::Freeze && deepens) {
        state.integral = candidate;
    }
    output(state.integral).clamp(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rig(limits: Option<[f64; 2]>) -> PIConfig {
        PIConfig {
            kp: 150.0,
            ki: 170.0,
            r1: 0.0,
            r2: 4.0,
            v_limits: limits,
            anti_windup: AntiWindup::Freeze,
        }
    }

    #[test]
    fn proportional_examples() {
        let mut c = PIConfig::proportional(70.0, 0.3, 5.0);
        assert_eq!(p_step(&c, 0.3), 5.0);
        c.r1 = 0.01;
        assert!((p_step(&c, 0.0) - 5.7).abs() < 1e-12);
        c.kp = 0.0;
        assert_eq!(p_step(&c, 123.0), 5.0);
    }

    #[test]
    fn steady_state_returns_feedforward() {
        let c = rig(None);
        let mut s = PIState::default();
        for _ in 0..100 {
            assert_eq!(pi_step(&c, &mut s, 0.0, 2e-4), 4.0);
        }
    }

    #[test]
    fn constant_error_ramps_linearly() {
        let c = rig(None);
        let mut s = PIState::default();
        let (e, dt) = (0.002, 2e-4);
        let mut v = 0.0;
        let steps = 5000;
        for _ in 0..steps {
            v = pi_step(&c, &mut s, -e, dt);
        }
        let t = steps as f64 * dt;
        assert!((v - (150.0 * e + 170.0 * e * t + 4.0)).abs() < 1e-9);
    }

    #[test]
    fn saturation_freezes_integral() {
        let c = rig(Some([0.0, 10.0]));
        let mut s = PIState::default();
        for _ in 0..1000 {
            assert_eq!(pi_step(&c, &mut s, -1.0, 2e-4), 10.0);
        }
        assert_eq!(s.integral, 0.0);
        let mut plain = c.clone();
        plain.anti_windup = AntiWindup::None;
        let mut s = PIState::default();
        pi_step(&plain, &mut s, -1.0, 2e-4);
        assert!(s.integral > 0.0);
    }

    #[test]
    fn limits_validated() {
        assert!(rig(Some([10.0, 0.0])).validate().is_err());
        let mut c = rig(None);
        c.kp = -1.0;
        assert!(c.validate().is_err());
    }

    proptest! {
        #[test]
        fn superposition_without_limits(
            e1 in proptest::collection::vec(-1.0f64..1.0, 1..50),
            e2 in proptest::collection::vec(-1.0f64..1.0, 1..50),
        ) {
            let len = e1.len().min(e2.len());
            let c = PIConfig { r2: 0.0, ..rig(None) };
            let run = |ys: &[f64]| {
                let mut s = PIState::default();
                ys.iter().map(|&y| pi_step(&c, &mut s, y, 1e-3)).collect::<Vec<_>>()
            };
            let sum: Vec<f64> = (0..len).map(|i| e1[i] + e2[i]).collect();
            let (a, b, ab) = (run(&e1[..len]), run(&e2[..len]), run(&sum));
            for i in 0..len {
                prop_assert!((a[i] + b[i] - ab[i]).abs() < 1e-9);
            }
        }

        #[test]
        fn frozen_integral_never_grows_into_saturation(ys in proptest::collection::vec(-0.2f64..0.2, 1..200)) {
            let c = rig(Some([0.0, 10.0]));
            let mut s = PIState::default();
            for y in ys {
                let before = s.integral;
                let v = pi_step(&c, &mut s, y, 1e-3);
                let error = c.r1 - y;
                if (v >= 10.0 && error > 0.0) || (v <= 0.0 && error < 0.0) {
                    prop_assert!(s.integral.abs() <= before.abs() + 1e-15);
                }
            }
        }
    }
}
