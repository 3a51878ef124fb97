//! Event-triggered, power-based compensation of oscillatory outputs.
//!
//! The crate is organized bottom-up:
//!
//! - [`lti`]: transfer functions, state-space models, frequency responses.
//! - [`detector`]: online extrema detection producing amplitude/frequency estimates.
//! - [`compensator`]: the discrete control law and its higher-order transform.
//! - [`outerloop`]: P/PI reference controllers.
//! - [`simkernel`]: deterministic hybrid simulation and trace export.
//! - [`scenarios`]: the canonical experiment wirings and the scenario file format.
//! - [`metrics`]: envelopes, settling and communication-effort accounting.
//! - [`check`]: fast self-verification used by the CLI.

pub mod check;
pub mod compensator;
pub mod constants;
pub mod detector;
pub mod lti;
pub mod metrics;
pub mod outerloop;
pub mod scenarios;
pub mod simkernel;
