//! Deterministic hybrid simulation.
//!
//! The plant is integrated with fixed-step RK4 while every discrete quantity
//! (measurement, outer loop, detector, compensator, disturbances) is sampled at
//! `fs` and held constant over the sample interval.

use std::f64::consts::PI;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compensator::Compensator;
use crate::detector::{Detector, ExtremumEvent};
use crate::outerloop::{pi_step_with_feedforward, PIState};
use crate::scenarios::{DisturbanceTarget, OuterLoopConfig, ScenarioConfig, ScenarioError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Measurement / controller rate, Hz.
    pub fs: f64,
    /// Integration steps per sample.
    pub substeps: usize,
    pub duration: f64,
    pub seed: u64,
    /// Standard deviation of the white noise before band limiting.
    pub noise_sigma: f64,
    /// Low-pass corner of the measurement noise, Hz. Defaults to `fs / 10`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_cutoff: Option<f64>,
    /// Stop the run once `|y - y(0)|` exceeds this bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_deviation: Option<f64>,
}

impl SimConfig {
    pub fn new(fs: f64, duration: f64) -> Self {
        Self {
            fs,
            substeps: 1,
            duration,
            seed: 0,
            noise_sigma: 0.0,
            noise_cutoff: None,
            max_deviation: None,
        }
    }

    pub fn sample_count(&self) -> usize {
        (self.duration * self.fs - 1e-9).ceil() as usize + 1
    }

    pub fn effective_cutoff(&self) -> f64 {
        self.noise_cutoff.unwrap_or(self.fs / 10.0)
    }
}

/// Reusable scratch space for classical RK4.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    /// Advances `x` by `h` in place. `deriv(t, x, dx)` must treat inputs as held.
    pub fn step<F>(&mut self, mut deriv: F, x: &mut [f64], t: f64, h: f64) -> Result<(), SimError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = x.len();
        deriv(t, x, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        deriv(t + 0.5 * h, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        deriv(t + 0.5 * h, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        deriv(t + h, &self.tmp, &mut self.k4);
        for i in 0..n {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        if x.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(SimError::NonFinite { t: t + h })
        }
    }
}

/// One classical RK4 step from `x` at `t`.
pub fn rk4_step<F>(deriv: F, x: &[f64], t: f64, h: f64) -> Result<Vec<f64>, SimError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut out = x.to_vec();
    Rk4::new(x.len()).step(deriv, &mut out, t, h)?;
    Ok(out)
}

/// Seeded Gaussian white noise through a first-order low-pass.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: ChaCha8Rng,
    sigma: f64,
    alpha: f64,
    state: f64,
}

impl NoiseSource {
    pub fn new(seed: u64, sigma: f64, cutoff_hz: f64, fs: f64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            sigma,
            alpha: 1.0 - (-2.0 * PI * cutoff_hz / fs).exp(),
            state: 0.0,
        }
    }

    pub fn sample(&mut self) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        let white: f64 = StandardNormal.sample(&mut self.rng);
        self.state += self.alpha * (self.sigma * white - self.state);
        self.state
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateLimiter {
    pub state_index: usize,
    pub lower: f64,
    pub upper: f64,
    /// Velocity zeroed on contact (perfectly inelastic stop).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity_index: Option<usize>,
}

/// Clamps the limited state; returns true when a clamp happened.
pub fn apply_limiter(x: &mut [f64], lim: &StateLimiter) -> bool {
    let v = x[lim.state_index];
    let clamped = v.clamp(lim.lower, lim.upper);
    if clamped == v {
        return false;
    }
    x[lim.state_index] = clamped;
    if let Some(vi) = lim.velocity_index {
        x[vi] = 0.0;
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationReason {
    NonFinite,
    DeviationBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub t: f64,
    pub reason: TruncationReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub scenario: String,
    pub seed: u64,
    pub fs: f64,
    pub duration: f64,
    pub compensator_enabled_from: Option<f64>,
    pub omega_max: f64,
    #[serde(default)]
    pub overrides: Vec<(String, String)>,
    pub truncated: Option<Truncation>,
    pub rejected_updates: u64,
}

/// Time-indexed record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub y_noisy: Vec<f64>,
    pub u: Vec<f64>,
    pub u_hat: Vec<f64>,
    pub v: Vec<f64>,
    pub events: Vec<ExtremumEvent>,
    pub metadata: TraceMetadata,
}

impl SimTrace {
    fn with_capacity(n: usize, metadata: TraceMetadata) -> Self {
        Self {
            t: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            y_noisy: Vec::with_capacity(n),
            u: Vec::with_capacity(n),
            u_hat: Vec::with_capacity(n),
            v: Vec::with_capacity(n),
            events: Vec::new(),
            metadata,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn is_truncated(&self) -> bool {
        self.metadata.truncated.is_some()
    }

    /// 0 for a complete run, 2 for a run stopped by divergence.
    pub fn exit_code(&self) -> i32 {
        if self.is_truncated() {
            2
        } else {
            0
        }
    }

    /// `t,y,y_noisy,u,u_hat,v` with shortest round-trip float formatting.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "y", "y_noisy", "u", "u_hat", "v"])?;
        for i in 0..self.len() {
            w.write_record(
                [self.t[i], self.y[i], self.y_noisy[i], self.u[i], self.u_hat[i], self.v[i]].map(fmt_float),
            )?;
        }
        w.flush()?;
        Ok(())
    }

    /// `i,kind,t_star,amp,omega`
    pub fn write_events_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "kind", "t_star", "amp", "omega"])?;
        for e in &self.events {
            w.write_record([
                e.index.to_string(),
                e.kind.as_str().to_string(),
                fmt_float(e.t_star),
                fmt_float(e.amp_signed),
                fmt_float(e.omega_est),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn fmt_float(v: f64) -> String {
    format!("{v:?}")
}

/// Runs a scenario to completion (or divergence).
pub fn run(scenario: &ScenarioConfig) -> Result<SimTrace, ScenarioError> {
    scenario.validate()?;
    let plant = scenario.plant.compiled()?;
    let sim = &scenario.sim;
    let fs = sim.fs;
    let dt = 1.0 / fs;
    let h = dt / sim.substeps as f64;
    let samples = sim.sample_count();

    let mut compensator = Compensator::new(scenario.compensator.clone(), scenario.forward_gain()?)?;
    let mut noise = NoiseSource::new(sim.seed, sim.noise_sigma, sim.effective_cutoff(), fs);
    let mut pi_state = PIState::default();
    let mut rk4 = Rk4::new(plant.states());
    let mut x = scenario.initial_state.clone();

    let metadata = TraceMetadata {
        scenario: scenario.name.clone(),
        seed: sim.seed,
        fs,
        duration: sim.duration,
        compensator_enabled_from: scenario.compensator.enabled.then_some(scenario.compensator.enabled_from),
        omega_max: scenario.detector.omega_max,
        overrides: Vec::new(),
        truncated: None,
        rejected_updates: 0,
    };
    let mut trace = SimTrace::with_capacity(samples, metadata);

    let y_start = plant.output(&x, 0);
    let mut detector: Option<Detector> = None;
    let mut dx_disturbance = vec![0.0; plant.states()];

    for n in 0..samples {
        let t = n as f64 * dt;
        if !x.iter().all(|v| v.is_finite()) {
            trace.metadata.truncated = Some(Truncation {
                t,
                reason: TruncationReason::NonFinite,
            });
            break;
        }
        let y = plant.output(&x, 0);
        let y_noisy = y + noise.sample();

        match detector.as_mut() {
            None => detector = Some(Detector::new(scenario.detector.clone(), y_noisy)?),
            Some(det) => {
                if let Some(event) = det.step(y_noisy, n as u64) {
                    // A notch at the estimated frequency only skips this update.
                    let _ = compensator.on_event(&event);
                    trace.events.push(event);
                }
            }
        }
        compensator.advance_to(t, 0.5 * dt);
        let correction = compensator.output();

        let mut v = match &scenario.outer {
            OuterLoopConfig::None => correction,
            OuterLoopConfig::Pi(cfg) => pi_step_with_feedforward(cfg, &mut pi_state, y_noisy, dt, correction),
            OuterLoopConfig::Hold { v, cutoff } => {
                let held = if cutoff.is_some_and(|c| t >= c) { 0.0 } else { *v };
                held + correction
            }
        };
        dx_disturbance.iter_mut().for_each(|d| *d = 0.0);
        for d in &scenario.disturbances {
            if t + 1e-9 * dt >= d.at && t < d.at + d.width - 1e-9 * dt {
                match d.target {
                    DisturbanceTarget::State { index } => dx_disturbance[index] += d.magnitude,
                    DisturbanceTarget::Input => v += d.magnitude,
                }
            }
        }

        trace.t.push(t);
        trace.y.push(y);
        trace.y_noisy.push(y_noisy);
        trace.u.push(compensator.u());
        trace.u_hat.push(correction);
        trace.v.push(v);

        if let Some(bound) = sim.max_deviation {
            if (y - y_start).abs() > bound {
                trace.metadata.truncated = Some(Truncation {
                    t,
                    reason: TruncationReason::DeviationBound,
                });
                break;
            }
        }
        if n + 1 == samples {
            break;
        }

        let deriv = |_t: f64, xs: &[f64], dx: &mut [f64]| {
            plant.derivative(xs, v, dx);
            for (d, extra) in dx.iter_mut().zip(&dx_disturbance) {
                *d += extra;
            }
        };
        for k in 0..sim.substeps {
            if rk4.step(deriv, &mut x, t + k as f64 * h, h).is_err() {
                break;
            }
            for lim in &scenario.limiters {
                apply_limiter(&mut x, lim);
            }
        }
    }
    trace.metadata.rejected_updates = compensator.rejected_updates();
    Ok(trace)
}

/// Step response of input 0 to output 0 sampled every `dt` up to `t_end` (RK4, zero state).
pub fn step_response(model: &crate::lti::StateSpaceModel, dt: f64, t_end: f64) -> Result<Vec<f64>, SimError> {
    let steps = (t_end / dt).ceil() as usize;
    let mut x = vec![0.0; model.states()];
    let mut rk4 = Rk4::new(model.states());
    let mut out = Vec::with_capacity(steps + 1);
    out.push(model.output(&x, 0));
    for k in 0..steps {
        rk4.step(
            |_, xs, dx| {
                model.derivative(xs, 1.0, dx);
                for (d, a) in dx.iter_mut().zip(model.d_affine()) {
                    *d -= a;
                }
            },
            &mut x,
            k as f64 * dt,
            dt,
        )?;
        out.push(model.output(&x, 0));
    }
    Ok(out)
}

/// Piecewise-linear interpolation of uniformly sampled values.
pub fn interpolate(samples: &[f64], dt: f64, t: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let pos = (t / dt).max(0.0);
    let i = pos.floor() as usize;
    if i + 1 >= samples.len() {
        return *samples.last().unwrap();
    }
    let frac = pos - i as f64;
    samples[i] + frac * (samples[i + 1] - samples[i])
}
