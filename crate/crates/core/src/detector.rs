//! Online extrema detection on the sampled (noisy) output.
//!
//! A running maximum over the last `N + 1` samples smooths the signal; the sign of
//! its first difference flips after every extremum. Each accepted flip is an
//! [`ExtremumEvent`] carrying the amplitude and a half-period frequency estimate.
//! Flips closer together than `pi / omega_max` are rejected, which is what keeps
//! measurement noise from producing events.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectorError {
    #[error("window_n must be at least 1")]
    EmptyWindow,
    #[error("sampling frequency must be positive and finite, got {0}")]
    BadSamplingRate(f64),
    #[error("omega_max must be positive and finite, got {0}")]
    BadOmegaMax(f64),
    #[error("fs = {fs} Hz cannot resolve omega_max = {omega_max} rad/s (need fs > omega_max / pi)")]
    Unresolvable { fs: f64, omega_max: f64 },
}

/// Where the non-oscillatory offset of the output comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiSource {
    /// Known constant offset.
    Constant { value: f64 },
    /// Midpoint of the most recent maximum and minimum; `initial` until both exist.
    ExtremaMidpoint { initial: f64 },
}

impl PsiSource {
    fn initial(&self) -> f64 {
        match *self {
            PsiSource::Constant { value } => value,
            PsiSource::ExtremaMidpoint { initial } => initial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// Smoothing window: running extrema span `window_n + 1` samples.
    pub window_n: usize,
    /// Sampling frequency in Hz.
    pub fs: f64,
    /// Known upper bound on the oscillation frequency, rad/s.
    pub omega_max: f64,
    pub psi: PsiSource,
    #[serde(default)]
    pub trigger: Trigger,
}

/// Which running extremum signals a turning point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    /// Sign changes of the running max alone. Maxima are seen `N` samples late,
    /// minima only about `N/2`, so successive half-period gaps alternate.
    MaxWindow,
    /// Maxima from the running max falling, minima from the running min rising;
    /// both lag by `N` samples.
    #[default]
    Symmetric,
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), DetectorError> {
        if self.window_n == 0 {
            return Err(DetectorError::EmptyWindow);
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(DetectorError::BadSamplingRate(self.fs));
        }
        if !(self.omega_max > 0.0 && self.omega_max.is_finite()) {
            return Err(DetectorError::BadOmegaMax(self.omega_max));
        }
        if self.fs <= self.omega_max / PI {
            return Err(DetectorError::Unresolvable {
                fs: self.fs,
                omega_max: self.omega_max,
            });
        }
        Ok(())
    }

    /// Shortest admissible time between two events.
    pub fn min_event_gap(&self) -> f64 {
        PI / self.omega_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

impl ExtremumKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExtremumKind::Maximum => "max",
            ExtremumKind::Minimum => "min",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremumEvent {
    pub index: u64,
    pub kind: ExtremumKind,
    /// Detection time, s.
    pub t_star: f64,
    /// Amplitude relative to the offset, carrying the sign of `y(t*) - psi`.
    pub amp_signed: f64,
    /// Half-period frequency estimate, rad/s.
    pub omega_est: f64,
}

/// Running maximum and minimum over the last `window_n + 1` samples (monotonic deques).
#[derive(Debug, Clone)]
pub struct RunningExtrema {
    span: u64,
    next: u64,
    max_q: VecDeque<(u64, f64)>,
    min_q: VecDeque<(u64, f64)>,
}

impl RunningExtrema {
    /// Window pre-filled with `y0`.
    pub fn new(window_n: usize, y0: f64) -> Self {
        let mut max_q = VecDeque::with_capacity(window_n + 1);
        let mut min_q = VecDeque::with_capacity(window_n + 1);
        max_q.push_back((0, y0));
        min_q.push_back((0, y0));
        Self {
            span: window_n as u64 + 1,
            next: 1,
            max_q,
            min_q,
        }
    }

    /// Pushes the next sample and returns `(max, min)` of the window ending at it.
    pub fn push(&mut self, y: f64) -> (f64, f64) {
        let n = self.next;
        self.next += 1;
        while self.max_q.back().is_some_and(|&(_, v)| v <= y) {
            self.max_q.pop_back();
        }
        self.max_q.push_back((n, y));
        while self.min_q.back().is_some_and(|&(_, v)| v >= y) {
            self.min_q.pop_back();
        }
        self.min_q.push_back((n, y));
        // The pre-filled entry at index 0 stands for samples -N..=0.
        let oldest = (n + 1).saturating_sub(self.span);
        while self.max_q.front().is_some_and(|&(i, _)| i < oldest) {
            self.max_q.pop_front();
        }
        while self.min_q.front().is_some_and(|&(i, _)| i < oldest) {
            self.min_q.pop_front();
        }
        self.current()
    }

    pub fn current(&self) -> (f64, f64) {
        (self.max_q[0].1, self.min_q[0].1)
    }
}

/// Streaming extrema detector.
#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    window: RunningExtrema,
    prev_max: f64,
    prev_min: f64,
    last_sign: i8,
    t_star_prev: f64,
    index: u64,
    amp_est: f64,
    omega_est: f64,
    psi: f64,
    last_max: Option<f64>,
    last_min: Option<f64>,
}

impl Detector {
    /// Initializes from the first sample `y0` (sample index 0).
    pub fn new(config: DetectorConfig, y0: f64) -> Result<Self, DetectorError> {
        config.validate()?;
        let psi = config.psi.initial();
        Ok(Self {
            window: RunningExtrema::new(config.window_n, y0),
            prev_max: y0,
            prev_min: y0,
            last_sign: 0,
            t_star_prev: 0.0,
            index: 0,
            amp_est: y0 - psi,
            omega_est: 0.5 * config.omega_max,
            psi,
            last_max: None,
            last_min: None,
            config,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn amp_est(&self) -> f64 {
        self.amp_est
    }

    pub fn omega_est(&self) -> f64 {
        self.omega_est
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn events_emitted(&self) -> u64 {
        self.index
    }

    /// Feeds sample `n` (n >= 1, consecutive) and reports an extremum if one was detected.
    ///
    /// A maximum is reported when the running max starts to fall; a minimum when the
    /// trigger window (see [`Trigger`]) starts to rise.
    pub fn step(&mut self, y_n: f64, n: u64) -> Option<ExtremumEvent> {
        let t_n = n as f64 / self.config.fs;
        let (max_n, min_n) = self.window.push(y_n);
        let s_max = sign(max_n - self.prev_max);
        let s_min = sign(min_n - self.prev_min);
        self.prev_max = max_n;
        self.prev_min = min_n;

        // Minima come from the running max or the running min.
        let s_rise = match self.config.trigger {
            Trigger::MaxWindow => s_max,
            Trigger::Symmetric => s_min,
        };
        if self.last_sign == 0 {
            // Initial trend, not an extremum: +1 while rising, -1 while falling.
            self.last_sign = match self.config.trigger {
                Trigger::MaxWindow => s_max,
                Trigger::Symmetric => match (s_max, s_min) {
                    (1, _) | (_, 1) => 1,
                    (-1, _) | (_, -1) => -1,
                    _ => 0,
                },
            };
            return None;
        }
        // last_sign +1: waiting for a maximum; -1: waiting for a minimum.
        let kind = if self.last_sign > 0 && s_max < 0 {
            ExtremumKind::Maximum
        } else if self.last_sign < 0 && s_rise > 0 {
            ExtremumKind::Minimum
        } else {
            return None;
        };
        let gap = t_n - self.t_star_prev;
        if gap <= self.config.min_event_gap() {
            return None;
        }

        let extreme = match kind {
            ExtremumKind::Maximum => {
                self.last_max = Some(max_n);
                max_n
            }
            ExtremumKind::Minimum => {
                self.last_min = Some(min_n);
                min_n
            }
        };
        self.psi = match self.config.psi {
            PsiSource::Constant { value } => value,
            PsiSource::ExtremaMidpoint { initial } => match (self.last_max, self.last_min) {
                (Some(hi), Some(lo)) => 0.5 * (hi + lo),
                _ => initial,
            },
        };
        let omega = (PI / gap).min(self.config.omega_max);

        self.last_sign = -self.last_sign;
        self.t_star_prev = t_n;
        self.index += 1;
        self.amp_est = extreme - self.psi;
        self.omega_est = omega;
        Some(ExtremumEvent {
            index: self.index,
            kind,
            t_star: t_n,
            amp_signed: self.amp_est,
            omega_est: omega,
        })
    }
}

fn sign(d: f64) -> i8 {
    if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    }
}

/// Runs a detector over a whole sample sequence (`samples[0]` initializes it).
pub fn detect_all(config: &DetectorConfig, samples: &[f64]) -> Result<Vec<ExtremumEvent>, DetectorError> {
    let Some(&y0) = samples.first() else {
        config.validate()?;
        return Ok(Vec::new());
    };
    let mut det = Detector::new(config.clone(), y0)?;
    Ok(samples
        .iter()
        .enumerate()
        .skip(1)
        .filter_map(|(n, &y)| det.step(y, n as u64))
        .collect())
}
