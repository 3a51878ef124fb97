//! Power-based discrete compensator.
//!
//! At every detected extremum the control value is re-assigned to
//! `u = K * omega^2 * A_signed` and held until the next extremum. Balancing the
//! period energy of the oscillation against that of a constant input gives the
//! gain `K = sqrt(3) / (2 pi)`.
//!
//! For plants with forward dynamics `G(s)` in front of the oscillating double
//! integrator, the value is rescaled by `L / |G(j omega)|` and applied after the delay
//! `T = (2 pi + arg G(j 2 omega)) / omega`.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::ExtremumEvent;
use crate::lti::{phase_principal, FrequencyResponse, LtiError, TransferFunction};

const NOTCH_TOLERANCE: f64 = 1e-9;
const SIMPSON_PANELS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompensatorError {
    #[error("gain must be positive and finite, got {0}")]
    BadGain(f64),
    #[error("switch-on time must be finite and non-negative, got {0}")]
    BadSwitchOn(f64),
    #[error("impulse weighting must satisfy 1 <= L < 3, got {0}")]
    WeightOutOfRange(f64),
    #[error("frequency estimate must be positive, got {0}")]
    BadFrequency(f64),
    #[error("|G(jw)| = {magnitude:e} at omega = {omega}: plant notch, cannot compensate at this frequency")]
    Notch { omega: f64, magnitude: f64 },
    #[error("higher-order mode needs a resolved forward gain")]
    MissingForwardGain,
    #[error(transparent)]
    Lti(#[from] LtiError),
}

/// `sqrt(3) / (2 pi)`, the period-balanced gain.
pub fn optimal_gain() -> f64 {
    3f64.sqrt() / (2.0 * PI)
}

/// `u = k * omega_est^2 * amp_signed`.
pub fn base_law(event: &ExtremumEvent, k: f64) -> f64 {
    k * event.omega_est * event.omega_est * event.amp_signed
}

/// Mean of the instantaneous oscillation power `y''~ * y~` over a period: `-A^2 omega^2 / 2`.
pub fn mean_oscillation_power(amp: f64, omega: f64) -> f64 {
    -0.5 * amp * amp * omega * omega
}

/// Period energy of the oscillation plus that of a constant input `u_const`,
/// integrated over `[0, 2 pi / omega]` with composite Simpson.
pub fn energy_balance_residual(amp: f64, omega: f64, u_const: f64) -> f64 {
    energy_balance_residual_with_phase(amp, omega, u_const, 0.0)
}

pub fn energy_balance_residual_with_phase(amp: f64, omega: f64, u_const: f64, phase: f64) -> f64 {
    let period = 2.0 * PI / omega;
    let oscillation = simpson(
        |t| {
            let s = (omega * t + phase).sin();
            -amp * amp * omega * omega * s * s
        },
        0.0,
        period,
        SIMPSON_PANELS,
    );
    let control = 0.5 * simpson(|t| u_const * u_const * t * t, 0.0, period, SIMPSON_PANELS);
    oscillation + control
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels + panels % 2;
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Whether a half-period rectangular pulse loses impulse content through the plant.
///
/// `step_response` is the unit-DC-normalized step response of the forward path.
/// Compares `U pi/omega` against `U * integral of step_response over [0, pi/omega]`
/// (trapezoid rule) and returns true when the raw pulse strictly carries more.
pub fn pulse_energy_inequality_check(step_response: impl Fn(f64) -> f64, u_const: f64, omega: f64) -> bool {
    let half = PI / omega;
    let u = u_const.abs();
    let panels = 10_000;
    let h = half / panels as f64;
    let mut filtered = 0.5 * (step_response(0.0) + step_response(half));
    for i in 1..panels {
        filtered += step_response(i as f64 * h);
    }
    let filtered = u * filtered * h;
    let raw = u * half;
    raw - filtered > 1e-9 * raw.max(f64::MIN_POSITIVE)
}

/// A delayed control value waiting to be applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledSwitch {
    pub apply_at: f64,
    pub value: f64,
}

/// Scale by `l_weight / |G(j omega)|` and delay by `(2 pi + arg G(j 2 omega)) / omega`.
pub fn higher_order_transform(
    u_value: f64,
    event: &ExtremumEvent,
    l_weight: f64,
    forward_gain: &dyn FrequencyResponse,
) -> Result<ScheduledSwitch, CompensatorError> {
    let omega = event.omega_est;
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(CompensatorError::BadFrequency(omega));
    }
    let g = forward_gain.response(omega)?;
    let magnitude = g.norm();
    if magnitude < NOTCH_TOLERANCE {
        return Err(CompensatorError::Notch { omega, magnitude });
    }
    let lag = phase_principal(forward_gain.response(2.0 * omega)?)?;
    let delay = (2.0 * PI + lag) / omega;
    Ok(ScheduledSwitch {
        apply_at: event.t_star + delay,
        value: l_weight * u_value / magnitude,
    })
}

/// Forward path `G` used by the higher-order mode, as written in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForwardGainSpec {
    Unity,
    TransferFunction { tf: TransferFunction },
    /// `(jw)^2` times the scenario plant's full input-to-output response.
    ImpliedFromPlant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompensatorMode {
    /// Control value drives the double integrator directly.
    SecondOrder,
    HigherOrder {
        l_weight: f64,
        forward_gain: ForwardGainSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompensatorConfig {
    pub enabled: bool,
    pub k_gain: f64,
    /// Events before this time are ignored and the output stays 0.
    pub enabled_from: f64,
    pub mode: CompensatorMode,
}

impl Default for CompensatorConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            k_gain: optimal_gain(),
            enabled_from: 0.0,
            mode: CompensatorMode::SecondOrder,
        }
    }
}

impl CompensatorConfig {
    pub fn validate(&self) -> Result<(), CompensatorError> {
        if !(self.k_gain > 0.0 && self.k_gain.is_finite()) {
            return Err(CompensatorError::BadGain(self.k_gain));
        }
        if !(self.enabled_from >= 0.0 && self.enabled_from.is_finite()) {
            return Err(CompensatorError::BadSwitchOn(self.enabled_from));
        }
        if let CompensatorMode::HigherOrder { l_weight, .. } = self.mode {
            if !(l_weight >= 1.0 && l_weight < 3.0) {
                return Err(CompensatorError::WeightOutOfRange(l_weight));
            }
        }
        Ok(())
    }
}

pub type SharedResponse = Box<dyn FrequencyResponse + Send + Sync>;

/// Event-driven compensator state: the held value `u` and the applied output.
pub struct Compensator {
    config: CompensatorConfig,
    forward_gain: Option<SharedResponse>,
    u_held: f64,
    output: f64,
    schedule: VecDeque<ScheduledSwitch>,
    last_event: Option<ExtremumEvent>,
    rejected: u64,
}

impl fmt::Debug for Compensator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Compensator")
            .field("config", &self.config)
            .field("u_held", &self.u_held)
            .field("output", &self.output)
            .field("schedule", &self.schedule)
            .field("last_event", &self.last_event)
            .finish()
    }
}

impl Compensator {
    /// `forward_gain` is required in higher-order mode and ignored otherwise.
    pub fn new(config: CompensatorConfig, forward_gain: Option<SharedResponse>) -> Result<Self, CompensatorError> {
        config.validate()?;
        if matches!(config.mode, CompensatorMode::HigherOrder { .. }) && forward_gain.is_none() {
            return Err(CompensatorError::MissingForwardGain);
        }
        Ok(Self {
            config,
            forward_gain,
            u_held: 0.0,
            output: 0.0,
            schedule: VecDeque::new(),
            last_event: None,
            rejected: 0,
        })
    }

    pub fn config(&self) -> &CompensatorConfig {
        &self.config
    }

    /// Current base-law value `u(t)`.
    pub fn u(&self) -> f64 {
        self.u_held
    }

    /// Value currently applied to the plant: `u` in second-order mode, the delayed
    /// and rescaled value in higher-order mode.
    pub fn output(&self) -> f64 {
        self.output
    }

    pub fn pending(&self) -> impl Iterator<Item = &ScheduledSwitch> {
        self.schedule.iter()
    }

    pub fn last_event(&self) -> Option<&ExtremumEvent> {
        self.last_event.as_ref()
    }

    /// Events whose update was refused (notch at the estimated frequency).
    pub fn rejected_updates(&self) -> u64 {
        self.rejected
    }

    /// Reacts to a detected extremum.
    pub fn on_event(&mut self, event: &ExtremumEvent) -> Result<(), CompensatorError> {
        if !self.config.enabled || event.t_star < self.config.enabled_from {
            return Ok(());
        }
        let u = base_law(event, self.config.k_gain);
        match &self.config.mode {
            CompensatorMode::SecondOrder => {
                self.u_held = u;
                self.output = u;
                self.last_event = Some(*event);
            }
            CompensatorMode::HigherOrder { l_weight, .. } => {
                let forward = self
                    .forward_gain
                    .as_deref()
                    .ok_or(CompensatorError::MissingForwardGain)?;
                let switch = match higher_order_transform(u, event, *l_weight, forward) {
                    Ok(s) => s,
                    Err(e) => {
                        self.rejected += 1;
                        return Err(e);
                    }
                };
                self.u_held = u;
                self.last_event = Some(*event);
                while self.schedule.back().is_some_and(|p| p.apply_at >= switch.apply_at) {
                    self.schedule.pop_back();
                }
                self.schedule.push_back(switch);
            }
        }
        Ok(())
    }

    /// Applies every scheduled switch due at `t` (within `tolerance`, normally half a
    /// sample). Returns true when the applied output changed.
    pub fn advance_to(&mut self, t: f64, tolerance: f64) -> bool {
        let before = self.output;
        while let Some(next) = self.schedule.front() {
            if next.apply_at > t + tolerance {
                break;
            }
            self.output = next.value;
            self.schedule.pop_front();
        }
        self.output != before
    }
}
