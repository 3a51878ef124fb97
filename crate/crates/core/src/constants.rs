//! Literal constants of the two-mass rig and the reference experiments.
//!
//! Scenario builders read from here; tests compare scenario defaults against these
//! literals so a typo in one place cannot drift silently.

/// State order: actuator velocity, actuator position `z`, load velocity, load position `y`.
pub const RIG_A: [[f64; 4]; 4] = [
    [-333.35, -333.33, 0.015, 333.33],
    [1.0, 0.0, 0.0, 0.0],
    [0.012, 266.66, -0.012, -266.66],
    [0.0, 0.0, 1.0, 0.0],
];
pub const RIG_B: [f64; 4] = [1.667, 0.0, 0.0, 0.0];
pub const RIG_C: [f64; 4] = [0.0, 0.0, 0.0, 1.0];
/// Gravity acting on actuator and load.
pub const RIG_D: [f64; 4] = [-9.806, 0.0, -9.806, 0.0];

pub const ACTUATOR_INDEX_VELOCITY: usize = 0;
pub const ACTUATOR_INDEX_POSITION: usize = 1;
pub const LOAD_INDEX_VELOCITY: usize = 2;
pub const LOAD_INDEX_POSITION: usize = 3;

/// Voltage-to-force lag `3.2811 / (0.0012 s + 1)`.
pub const ACTUATOR_GAIN: f64 = 3.2811;
pub const ACTUATOR_TAU: f64 = 0.0012;

pub const RIG_FS: f64 = 5000.0;
pub const RIG_V_RANGE: [f64; 2] = [0.0, 10.0];
pub const RIG_Z_RANGE: [f64; 2] = [0.0, 0.021];

/// Proportional loop of the simulated fifth-order case.
pub const SIM_KP: f64 = 70.0;
/// PI loop of the emulated rig.
pub const RIG_KP: f64 = 150.0;
pub const RIG_KI: f64 = 170.0;

pub const COMPENSATOR_SWITCH_ON: f64 = 4.0;
pub const SIM_L_WEIGHTS: [f64; 2] = [1.0, 2.0];
pub const L_WEIGHT_BOUNDS: (f64, f64) = (1.0, 3.0);
pub const ACTUATOR_DISTURBANCE_AT: f64 = 17.0;
pub const LOAD_DISTURBANCE_AT: f64 = 30.0;
pub const FREE_FALL_CUTOFF: f64 = 20.0;

/// Second-order example `y'' + a y' + b y = u`, `y(0) = c`.
pub const SECOND_ORDER_B: f64 = 100.0;
pub const SECOND_ORDER_C: f64 = 2.0;
pub const SECOND_ORDER_A: [f64; 2] = [2.0, -1.0];

/// Extrema-detection demonstration setup.
pub const DETECTOR_DEMO_FS: f64 = 1000.0;
pub const DETECTOR_DEMO_N: usize = 30;
