//! Post-hoc trace analysis: envelopes, settling and update counting.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::detector::ExtremumKind;
use crate::simkernel::SimTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `(t_star, |amp|)` per detected extremum.
    pub envelope: Vec<(f64, f64)>,
    pub settling_time_s: Option<f64>,
    pub updates_total: u64,
    pub periods_observed: u64,
    pub updates_per_period: Option<f64>,
    /// Updates per period of a controller writing every sample: `2 pi fs / omega`.
    pub comm_effort_continuous: f64,
    pub comm_effort_event: Option<f64>,
    pub reduction_factor: Option<f64>,
}

pub fn envelope_from_events(trace: &SimTrace) -> Vec<(f64, f64)> {
    trace.events.iter().map(|e| (e.t_star, e.amp_signed.abs())).collect()
}

/// Envelope points of one extremum kind only.
pub fn envelope_of_kind(trace: &SimTrace, kind: ExtremumKind) -> Vec<(f64, f64)> {
    trace
        .events
        .iter()
        .filter(|e| e.kind == kind)
        .map(|e| (e.t_star, e.amp_signed.abs()))
        .collect()
}

/// First envelope time after which every amplitude stays at or below `threshold`.
///
/// `None` if the last point is still above the threshold or the envelope is empty.
pub fn settling_time(envelope: &[(f64, f64)], threshold: f64) -> Option<f64> {
    let last_above = envelope.iter().rposition(|&(_, a)| a > threshold);
    match last_above {
        None => envelope.first().map(|&(t, _)| t),
        Some(i) => envelope.get(i + 1).map(|&(t, _)| t),
    }
}

/// Interpolated envelope value at `t` (clamped to the end points).
pub fn envelope_at(envelope: &[(f64, f64)], t: f64) -> Option<f64> {
    let first = envelope.first()?;
    if t <= first.0 {
        return Some(first.1);
    }
    for w in envelope.windows(2) {
        let ((t0, a0), (t1, a1)) = (w[0], w[1]);
        if t <= t1 {
            return Some(a0 + (a1 - a0) * (t - t0) / (t1 - t0));
        }
    }
    envelope.last().map(|p| p.1)
}

/// Ratios between successive same-kind extrema, i.e. one per period.
pub fn per_period_ratios(trace: &SimTrace, kind: ExtremumKind) -> Vec<f64> {
    envelope_of_kind(trace, kind)
        .windows(2)
        .map(|w| w[1].1 / w[0].1)
        .collect()
}

/// Counts held-output switches and observed periods from the compensator start on.
///
/// `omega` only sets the continuous baseline `2 pi fs / omega`; periods come from
/// the detected events (two extrema per period).
pub fn communication_effort(trace: &SimTrace, omega: f64, fs: f64) -> MetricsReport {
    let from = trace.metadata.compensator_enabled_from.unwrap_or(f64::INFINITY);
    let updates_total = trace
        .u_hat
        .windows(2)
        .zip(&trace.t[1..])
        .filter(|(w, &t)| t >= from && w[1] != w[0])
        .count() as u64;
    let events = trace.events.iter().filter(|e| e.t_star >= from).count() as u64;
    let periods_observed = events / 2;
    let comm_effort_continuous = 2.0 * PI * fs / omega;
    let updates_per_period = (periods_observed > 0).then(|| updates_total as f64 / periods_observed as f64);
    let reduction_factor = updates_per_period
        .filter(|&u| u > 0.0)
        .map(|u| comm_effort_continuous / u);
    MetricsReport {
        envelope: envelope_from_events(trace),
        settling_time_s: None,
        updates_total,
        periods_observed,
        updates_per_period,
        comm_effort_continuous,
        comm_effort_event: updates_per_period,
        reduction_factor,
    }
}

/// Full report; settling is measured against `threshold` when given.
pub fn report(trace: &SimTrace, omega: f64, threshold: Option<f64>) -> MetricsReport {
    let mut r = communication_effort(trace, omega, trace.metadata.fs);
    r.settling_time_s = threshold.and_then(|th| settling_time(&r.envelope, th));
    r
}
