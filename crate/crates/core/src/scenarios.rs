//! Scenario wiring and the scenario file format.
//!
//! A [`ScenarioConfig`] is plain data: plant, outer loop, detector, compensator,
//! simulation settings, disturbances, limiters and the initial state. It
//! serializes to TOML, unknown keys are rejected, and dotted-path overrides
//! (`sim.duration=5`, `compensator.enabled=false`) edit it in place.
//!
//! The four built-in scenarios also take a few builder parameters (`a`, `l_weight`,
//! ...) that reshape the whole configuration rather than a single field.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compensator::{
    optimal_gain, CompensatorConfig, CompensatorError, CompensatorMode, ForwardGainSpec, SharedResponse,
};
use crate::constants as k;
use crate::detector::{DetectorConfig, DetectorError, PsiSource, Trigger};
use crate::lti::{
    solve_real, FrequencyResponse, ImpliedForwardGain, LtiError, StateSpaceModel, TransferFunction,
};
use crate::outerloop::{AntiWindup, OuterLoopError, PIConfig};
use crate::simkernel::{SimConfig, StateLimiter};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("unknown configuration path '{0}'")]
    UnknownPath(String),
    #[error("bad value for '{path}': {reason}")]
    BadValue { path: String, reason: String },
    #[error("scenario file: {0}")]
    Parse(String),
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Compensator(#[from] CompensatorError),
    #[error(transparent)]
    OuterLoop(#[from] OuterLoopError),
}

/// Plant model: an optional input lag in front of a state-space model.
///
/// The simulated state vector is the model's states followed by the lag's states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub model: StateSpaceModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_lag: Option<TransferFunction>,
}

impl PlantConfig {
    pub fn compiled(&self) -> Result<StateSpaceModel, LtiError> {
        match &self.input_lag {
            None => Ok(self.model.clone()),
            Some(lag) => Ok(StateSpaceModel::cascade(&lag.realize()?, &self.model)),
        }
    }

    pub fn response(&self) -> PlantResponse {
        PlantResponse {
            lag: self.input_lag.clone(),
            model: self.model.clone(),
        }
    }
}

/// Input-to-output frequency response of a [`PlantConfig`].
#[derive(Debug, Clone)]
pub struct PlantResponse {
    lag: Option<TransferFunction>,
    model: StateSpaceModel,
}

impl FrequencyResponse for PlantResponse {
    fn response(&self, omega: f64) -> Result<num_complex::Complex64, LtiError> {
        let path = self.model.freq_response_path(0, 0, omega)?;
        match &self.lag {
            Some(lag) => Ok(lag.response(omega)? * path),
            None => Ok(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OuterLoopConfig {
    /// Plant input is the compensator output alone.
    None,
    Pi(PIConfig),
    /// Constant input `v`, dropped to 0 from `cutoff` on.
    Hold {
        v: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceTarget {
    /// Added to the derivative of one state.
    State { index: usize },
    /// Added to the plant input after saturation.
    Input,
}

/// Rectangular pulse `magnitude` on `[at, at + width)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disturbance {
    pub at: f64,
    pub target: DisturbanceTarget,
    pub magnitude: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub plant: PlantConfig,
    pub outer: OuterLoopConfig,
    pub detector: DetectorConfig,
    pub compensator: CompensatorConfig,
    pub sim: SimConfig,
    #[serde(default)]
    pub disturbances: Vec<Disturbance>,
    #[serde(default)]
    pub limiters: Vec<StateLimiter>,
    pub initial_state: Vec<f64>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let plant = self.plant.compiled()?;
        let n = plant.states();
        let sim = &self.sim;
        if !(sim.fs > 0.0 && sim.fs.is_finite()) {
            return Err(ScenarioError::Invalid(format!("sim.fs must be positive, got {}", sim.fs)));
        }
        if !(sim.duration > 0.0 && sim.duration.is_finite()) {
            return Err(ScenarioError::Invalid(format!(
                "sim.duration must be positive, got {}",
                sim.duration
            )));
        }
        if sim.substeps == 0 {
            return Err(ScenarioError::Invalid("sim.substeps must be at least 1".into()));
        }
        if !(sim.noise_sigma >= 0.0 && sim.noise_sigma.is_finite()) {
            return Err(ScenarioError::Invalid("sim.noise_sigma must be >= 0".into()));
        }
        if sim.noise_cutoff.is_some_and(|c| !(c > 0.0)) {
            return Err(ScenarioError::Invalid("sim.noise_cutoff must be positive".into()));
        }
        if sim.max_deviation.is_some_and(|c| !(c > 0.0)) {
            return Err(ScenarioError::Invalid("sim.max_deviation must be positive".into()));
        }
        self.detector.validate()?;
        if self.detector.fs != sim.fs {
            return Err(ScenarioError::Invalid(format!(
                "detector.fs ({}) must equal sim.fs ({})",
                self.detector.fs, sim.fs
            )));
        }
        self.compensator.validate()?;
        if let OuterLoopConfig::Pi(pi) = &self.outer {
            pi.validate()?;
        }
        if self.initial_state.len() != n {
            return Err(ScenarioError::Invalid(format!(
                "initial_state has {} entries, plant has {n} states",
                self.initial_state.len()
            )));
        }
        for (i, d) in self.disturbances.iter().enumerate() {
            if let DisturbanceTarget::State { index } = d.target {
                if index >= n {
                    return Err(ScenarioError::Invalid(format!(
                        "disturbances[{i}] targets state {index} of {n}"
                    )));
                }
            }
            if !(d.width > 0.0) || !(0.0..=sim.duration).contains(&d.at) {
                return Err(ScenarioError::Invalid(format!(
                    "disturbances[{i}] must start within the run and have positive width"
                )));
            }
        }
        for (i, lim) in self.limiters.iter().enumerate() {
            let bad_index = lim.state_index >= n || lim.velocity_index.is_some_and(|v| v >= n);
            if bad_index || !(lim.lower < lim.upper) {
                return Err(ScenarioError::Invalid(format!(
                    "limiters[{i}] needs valid indices and lower < upper"
                )));
            }
        }
        self.forward_gain()?;
        Ok(())
    }

    /// Resolves the compensator's forward path `G`, if the mode needs one.
    pub fn forward_gain(&self) -> Result<Option<SharedResponse>, ScenarioError> {
        let CompensatorMode::HigherOrder { forward_gain, .. } = &self.compensator.mode else {
            return Ok(None);
        };
        let g: SharedResponse = match forward_gain {
            ForwardGainSpec::Unity => Box::new(crate::lti::Unity),
            ForwardGainSpec::TransferFunction { tf } => Box::new(tf.clone()),
            ForwardGainSpec::ImpliedFromPlant => Box::new(ImpliedForwardGain(self.plant.response())),
        };
        Ok(Some(g))
    }

    pub fn to_toml(&self) -> Result<String, ScenarioError> {
        toml::to_string(self).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets the field at a dotted path (`sim.duration`, `plant.model.a.0.1`).
    ///
    /// `raw` is parsed as a TOML value; bare words fall back to strings. Paths that
    /// do not exist in the schema are rejected.
    pub fn apply_override(&mut self, path: &str, raw: &str) -> Result<(), ScenarioError> {
        let mut root = toml::Value::try_from(&*self).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        let value = parse_value(raw);
        let segments: Vec<&str> = path.split('.').collect();
        if segments.iter().any(|s| s.is_empty()) {
            return Err(ScenarioError::UnknownPath(path.to_string()));
        }
        let inserted = set_path(&mut root, &segments, value).map_err(|()| ScenarioError::UnknownPath(path.into()))?;
        let updated: Self = root.try_into().map_err(|e: toml::de::Error| {
            if inserted || e.message().contains("unknown field") {
                ScenarioError::UnknownPath(path.to_string())
            } else {
                ScenarioError::BadValue {
                    path: path.to_string(),
                    reason: e.message().to_string(),
                }
            }
        })?;
        updated.validate().map_err(|e| ScenarioError::BadValue {
            path: path.to_string(),
            reason: e.to_string(),
        })?;
        *self = updated;
        Ok(())
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Returns Ok(true) when the last segment was newly inserted into a table.
fn set_path(node: &mut toml::Value, path: &[&str], value: toml::Value) -> Result<bool, ()> {
    let (head, rest) = path.split_first().ok_or(())?;
    let child = match node {
        toml::Value::Table(t) => {
            if rest.is_empty() {
                return match t.get_mut(*head) {
                    Some(slot) => {
                        *slot = coerce(slot, value);
                        Ok(false)
                    }
                    None => {
                        t.insert(head.to_string(), value);
                        Ok(true)
                    }
                };
            }
            t.get_mut(*head).ok_or(())?
        }
        toml::Value::Array(items) => {
            let idx: usize = head.parse().map_err(|_| ())?;
            let slot = items.get_mut(idx).ok_or(())?;
            if rest.is_empty() {
                *slot = coerce(slot, value);
                return Ok(false);
            }
            slot
        }
        _ => return Err(()),
    };
    set_path(child, rest, value)
}

fn coerce(existing: &toml::Value, value: toml::Value) -> toml::Value {
    match (existing, value) {
        (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
        (_, v) => v,
    }
}

/// Two-state plant `y'' + a y' + b y = u`.
pub fn second_order_plant(a: f64, b: f64) -> Result<StateSpaceModel, LtiError> {
    StateSpaceModel::new(
        vec![vec![0.0, 1.0], vec![-b, -a]],
        vec![vec![0.0], vec![1.0]],
        vec![vec![1.0, 0.0]],
        vec![0.0, 0.0],
    )
}

pub fn scenario_second_order(a: f64, b: f64, c: f64, compensator_on: bool) -> Result<ScenarioConfig, ScenarioError> {
    if !(b > 0.0) {
        return Err(ScenarioError::Invalid(format!("b must be positive, got {b}")));
    }
    let fs = k::DETECTOR_DEMO_FS;
    let cfg = ScenarioConfig {
        name: "second-order".into(),
        description: format!("y'' + {a} y' + {b} y = u, y(0) = {c}"),
        plant: PlantConfig {
            model: second_order_plant(a, b)?,
            input_lag: None,
        },
        outer: OuterLoopConfig::None,
        detector: DetectorConfig {
            window_n: k::DETECTOR_DEMO_N,
            fs,
            omega_max: 3.0 * b.sqrt(),
            psi: PsiSource::Constant { value: 0.0 },
            trigger: Trigger::default(),
        },
        compensator: CompensatorConfig {
            enabled: compensator_on,
            k_gain: optimal_gain(),
            enabled_from: 0.0,
            mode: CompensatorMode::SecondOrder,
        },
        sim: SimConfig::new(fs, 10.0),
        disturbances: Vec::new(),
        limiters: Vec::new(),
        initial_state: vec![c, 0.0],
    };
    cfg.validate()?;
    Ok(cfg)
}

/// The two-mass rig: actuator velocity, actuator position, load velocity, load position.
pub fn rig_model() -> StateSpaceModel {
    StateSpaceModel::new(
        k::RIG_A.iter().map(|r| r.to_vec()).collect(),
        k::RIG_B.iter().map(|&b| vec![b]).collect(),
        vec![k::RIG_C.to_vec()],
        k::RIG_D.to_vec(),
    )
    .expect("rig matrices are consistent")
}

pub fn actuator_lag() -> TransferFunction {
    TransferFunction::first_order_lag(k::ACTUATOR_GAIN, k::ACTUATOR_TAU).expect("valid lag")
}

pub fn rig_plant() -> PlantConfig {
    PlantConfig {
        model: rig_model(),
        input_lag: Some(actuator_lag()),
    }
}

/// Resonance of the rig: imaginary part of the least-damped eigenvalue pair of `A`.
pub fn rig_resonance() -> f64 {
    rig_model().dominant_oscillatory_mode().expect("rig has an oscillatory mode").im
}

/// Static equilibrium of the rig with the actuator held at `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigEquilibrium {
    /// Full simulated state (rig states, then the lag state).
    pub state: Vec<f64>,
    /// Load position, used as the reference `r1`.
    pub output: f64,
    /// Input voltage that holds the equilibrium (gravity feedforward `r2`).
    pub input: f64,
}

pub fn rig_equilibrium(actuator_position: f64) -> Result<RigEquilibrium, ScenarioError> {
    let model = rig_model();
    let n = model.states();
    // Unknowns: rig state (n) and actuator force rho; A x + B rho = -d, x[z] = z0.
    let mut m = vec![vec![0.0; n + 1]; n + 1];
    let mut rhs = vec![0.0; n + 1];
    for i in 0..n {
        m[i][..n].copy_from_slice(&model.a()[i]);
        m[i][n] = model.b()[i][0];
        rhs[i] = -model.d_affine()[i];
    }
    m[n][k::ACTUATOR_INDEX_POSITION] = 1.0;
    rhs[n] = actuator_position;
    let sol = solve_real(&m, &rhs)?;
    let rho = sol[n];
    let input = rho / k::ACTUATOR_GAIN;
    let lag_state = actuator_lag().realize()?;
    // The realized lag satisfies x' = -x/tau + v at rest: x = tau * v.
    let lag_rest = solve_real(
        &lag_state.a().to_vec(),
        &lag_state.b().iter().map(|r| -r[0] * input).collect::<Vec<_>>(),
    )?;
    let mut state = sol[..n].to_vec();
    state.extend(lag_rest);
    Ok(RigEquilibrium {
        output: model.output(&sol[..n], 0),
        state,
        input,
    })
}

const RIG_WINDOW_N: usize = 150;
const RIG_NOISE_SIGMA: f64 = 2e-6;

fn rig_detector(r1: f64) -> DetectorConfig {
    DetectorConfig {
        window_n: RIG_WINDOW_N,
        fs: k::RIG_FS,
        omega_max: 3.0 * rig_resonance(),
        psi: PsiSource::ExtremaMidpoint { initial: r1 },
        trigger: Trigger::default(),
    }
}

fn rig_compensator(l_weight: f64, on_at: f64) -> CompensatorConfig {
    CompensatorConfig {
        enabled: true,
        k_gain: optimal_gain(),
        enabled_from: on_at,
        mode: CompensatorMode::HigherOrder {
            l_weight,
            forward_gain: ForwardGainSpec::ImpliedFromPlant,
        },
    }
}

fn mid_stroke() -> f64 {
    0.5 * (k::RIG_Z_RANGE[0] + k::RIG_Z_RANGE[1])
}

pub fn scenario_fifth_order_sim(l_weight: f64, comp_on_at: f64) -> Result<ScenarioConfig, ScenarioError> {
    let eq = rig_equilibrium(mid_stroke())?;
    let mut initial_state = eq.state.clone();
    initial_state[k::LOAD_INDEX_POSITION] += 1e-3;
    let mut sim = SimConfig::new(k::RIG_FS, 25.0);
    sim.noise_sigma = RIG_NOISE_SIGMA;
    let cfg = ScenarioConfig {
        name: "fifth-order-sim".into(),
        description: format!("two-mass rig under proportional control, compensator (L = {l_weight}) from t = {comp_on_at} s"),
        plant: rig_plant(),
        outer: OuterLoopConfig::Pi(PIConfig::proportional(k::SIM_KP, eq.output, eq.input)),
        detector: rig_detector(eq.output),
        compensator: rig_compensator(l_weight, comp_on_at),
        sim,
        disturbances: Vec::new(),
        limiters: Vec::new(),
        initial_state,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub const DISTURBANCE_WIDTH: f64 = 0.02;
const ACTUATOR_KICK: f64 = 5.0;
const LOAD_KICK: f64 = 0.8;

pub fn scenario_fifth_order_pi(disturb: bool) -> Result<ScenarioConfig, ScenarioError> {
    let eq = rig_equilibrium(mid_stroke())?;
    let mut initial_state = eq.state.clone();
    initial_state[k::LOAD_INDEX_POSITION] += 1e-4;
    let mut sim = SimConfig::new(k::RIG_FS, 40.0);
    sim.noise_sigma = RIG_NOISE_SIGMA;
    sim.max_deviation = Some(0.02);
    let disturbances = if disturb {
        vec![
            Disturbance {
                at: k::ACTUATOR_DISTURBANCE_AT,
                target: DisturbanceTarget::State {
                    index: k::ACTUATOR_INDEX_VELOCITY,
                },
                magnitude: ACTUATOR_KICK,
                width: DISTURBANCE_WIDTH,
            },
            Disturbance {
                at: k::LOAD_DISTURBANCE_AT,
                target: DisturbanceTarget::State {
                    index: k::LOAD_INDEX_VELOCITY,
                },
                magnitude: LOAD_KICK,
                width: DISTURBANCE_WIDTH,
            },
        ]
    } else {
        Vec::new()
    };
    let cfg = ScenarioConfig {
        name: "fifth-order-pi".into(),
        description: "emulated rig: saturated PI loop, compensator from t = 4 s, optional impulse disturbances".into(),
        plant: rig_plant(),
        outer: OuterLoopConfig::Pi(PIConfig {
            kp: k::RIG_KP,
            ki: k::RIG_KI,
            r1: eq.output,
            r2: eq.input,
            v_limits: Some(k::RIG_V_RANGE),
            anti_windup: AntiWindup::Freeze,
        }),
        // The PI loop only holds with the running-max rule; the symmetric trigger
        // shifts the minima by N/2 samples and the loop diverges near 9 s.
        detector: DetectorConfig {
            trigger: Trigger::MaxWindow,
            ..rig_detector(eq.output)
        },
        compensator: rig_compensator(2.0, k::COMPENSATOR_SWITCH_ON),
        sim,
        disturbances,
        limiters: Vec::new(),
        initial_state,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn actuator_limiter() -> StateLimiter {
    StateLimiter {
        state_index: k::ACTUATOR_INDEX_POSITION,
        lower: k::RIG_Z_RANGE[0],
        upper: k::RIG_Z_RANGE[1],
        velocity_index: Some(k::ACTUATOR_INDEX_VELOCITY),
    }
}

pub fn scenario_free_fall() -> Result<ScenarioConfig, ScenarioError> {
    let eq = rig_equilibrium(mid_stroke())?;
    let mut compensator = rig_compensator(2.0, 0.0);
    compensator.enabled = false;
    let cfg = ScenarioConfig {
        name: "free-fall".into(),
        description: "gravity-compensating input cut at t = 20 s; actuator drops onto its lower stop".into(),
        plant: rig_plant(),
        outer: OuterLoopConfig::Hold {
            v: eq.input,
            cutoff: Some(k::FREE_FALL_CUTOFF),
        },
        detector: rig_detector(eq.output),
        compensator,
        sim: SimConfig::new(k::RIG_FS, 30.0),
        disturbances: Vec::new(),
        limiters: vec![actuator_limiter()],
        initial_state: eq.state,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Built-in scenarios in listing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    SecondOrder,
    FifthOrderSim,
    FifthOrderPi,
    FreeFall,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [
        Builtin::SecondOrder,
        Builtin::FifthOrderSim,
        Builtin::FifthOrderPi,
        Builtin::FreeFall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::SecondOrder => "second-order",
            Builtin::FifthOrderSim => "fifth-order-sim",
            Builtin::FifthOrderPi => "fifth-order-pi",
            Builtin::FreeFall => "free-fall",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Builtin::SecondOrder => "damped/undamped second-order oscillator with the base compensator",
            Builtin::FifthOrderSim => "two-mass rig, P loop, higher-order compensator switched on at 4 s",
            Builtin::FifthOrderPi => "two-mass rig, saturated PI loop, impulse disturbances at 17 s and 30 s",
            Builtin::FreeFall => "input cut at 20 s, actuator hits its lower stop and excites the spring mode",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ScenarioError> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == name)
            .ok_or_else(|| ScenarioError::UnknownScenario(name.to_string()))
    }

    /// Builder parameters and their defaults.
    pub fn params(self) -> toml::Table {
        let mut t = toml::Table::new();
        match self {
            Builtin::SecondOrder => {
                t.insert("a".into(), k::SECOND_ORDER_A[0].into());
                t.insert("b".into(), k::SECOND_ORDER_B.into());
                t.insert("c".into(), k::SECOND_ORDER_C.into());
            }
            Builtin::FifthOrderSim => {
                t.insert("l_weight".into(), k::SIM_L_WEIGHTS[1].into());
                t.insert("comp_on_at".into(), k::COMPENSATOR_SWITCH_ON.into());
            }
            Builtin::FifthOrderPi => {
                t.insert("disturb".into(), true.into());
            }
            Builtin::FreeFall => {}
        }
        t
    }

    /// Builds with the given parameter values; missing ones take defaults.
    pub fn build(self, overrides: &toml::Table) -> Result<ScenarioConfig, ScenarioError> {
        let mut params = self.params();
        for (key, value) in overrides {
            let Some(slot) = params.get_mut(key) else {
                return Err(ScenarioError::UnknownPath(key.clone()));
            };
            *slot = coerce(slot, value.clone());
        }
        let num = |key: &str| -> Result<f64, ScenarioError> {
            match &params[key] {
                toml::Value::Float(f) => Ok(*f),
                toml::Value::Integer(i) => Ok(*i as f64),
                other => Err(ScenarioError::BadValue {
                    path: key.to_string(),
                    reason: format!("expected a number, got {other}"),
                }),
            }
        };
        match self {
            Builtin::SecondOrder => scenario_second_order(num("a")?, num("b")?, num("c")?, true),
            Builtin::FifthOrderSim => scenario_fifth_order_sim(num("l_weight")?, num("comp_on_at")?),
            Builtin::FifthOrderPi => match &params["disturb"] {
                toml::Value::Boolean(b) => scenario_fifth_order_pi(*b),
                other => Err(ScenarioError::BadValue {
                    path: "disturb".into(),
                    reason: format!("expected true/false, got {other}"),
                }),
            },
            Builtin::FreeFall => scenario_free_fall(),
        }
    }
}

/// Resolves a built-in scenario with `key=value` overrides.
///
/// Keys naming a builder parameter reshape the scenario; every other key is a
/// dotted path into the resulting [`ScenarioConfig`], applied in order.
pub fn resolve(name: &str, overrides: &[(String, String)]) -> Result<ScenarioConfig, ScenarioError> {
    let builtin = Builtin::from_name(name)?;
    let params = builtin.params();
    let mut builder_args = toml::Table::new();
    let mut paths = Vec::new();
    for (key, raw) in overrides {
        if params.contains_key(key) {
            builder_args.insert(key.clone(), parse_value(raw));
        } else {
            paths.push((key, raw));
        }
    }
    let mut cfg = builtin.build(&builder_args)?;
    for (key, raw) in paths {
        cfg.apply_override(key, raw)?;
    }
    Ok(cfg)
}

/// Frequency at which the scenario oscillates, for accounting purposes.
pub fn nominal_frequency(cfg: &ScenarioConfig) -> Option<f64> {
    cfg.plant.model.dominant_oscillatory_mode().map(|l| l.im).or_else(|| {
        let omega = cfg.detector.omega_max / 3.0;
        (omega > 0.0).then_some(omega)
    })
}

/// Helper for tests and docs: the natural frequency `sqrt(b)` of the second-order plant.
pub fn second_order_natural_frequency(b: f64) -> f64 {
    b.sqrt()
}

/// Period of a sinusoid at `omega`.
pub fn period(omega: f64) -> f64 {
    2.0 * PI / omega
}
