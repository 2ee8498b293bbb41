//! Built-in experiment definitions and scenario overrides.
//!
//! Each scenario bundles an SDC plant, reference generator, safety
//! constraints, barrier states with their declared SDC vectors, weights and
//! a default simulation configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::controller::NominalLaw;
use crate::model::{
    build_augmented, pointwise_diagnostics, validate_barrier_sdc, validate_gamma, AugmentOverrideHook, BarrierState,
    Design, MatFn, PairMatFn, ReferenceModel, SafetyConstraint, SdcPlant, SdcVecFn, Weights,
};
use crate::riccati::PBH_TOL;
use crate::sim::{ControllerKind, SimConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("invalid override {key}: {reason}")]
    InvalidOverride { key: String, reason: String },
    #[error("gamma {gamma} does not exceed the reference spectral abscissa")]
    GammaRejected { gamma: f64 },
}

fn invalid(key: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::InvalidOverride {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Names and one-line descriptions of the built-in scenarios.
pub const CATALOGUE: [(&str, &str); 6] = [
    (
        "cs1_nonconflicted",
        "mechanical system tracking a Van der Pol reference inside |x1|,|x2| < 3 (single barrier)",
    ),
    (
        "cs1_conflicted_single",
        "mechanical system whose reference leaves |x1|,|x2| < 3 (single barrier)",
    ),
    (
        "cs1_conflicted_multi",
        "conflicted mechanical system with one barrier state per constraint",
    ),
    (
        "cs1_three_constraints",
        "mechanical system with box limits and an excluded disc of radius 0.5",
    ),
    (
        "robots",
        "two single-integrator robots on circular paths avoiding an obstacle and each other",
    ),
    (
        "cable_sim",
        "cable-suspended planar robot reaching a target around a circular keep-out region",
    ),
];

pub fn catalogue() -> Vec<&'static str> {
    CATALOGUE.iter().map(|(name, _)| *name).collect()
}

/// Reference values for acceptance comparisons.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpectedMetrics {
    pub settling_time: Option<f64>,
    pub j_e: Option<f64>,
    pub j: Option<f64>,
}

/// Axis-aligned box used to draw random states for self-checks.
#[derive(Debug, Clone)]
pub struct StateBox {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    pub input_lower: DVector<f64>,
    pub input_upper: DVector<f64>,
}

#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub design: Design,
    pub constraints: Vec<SafetyConstraint>,
    pub config: SimConfig,
    pub nominal: Option<NominalLaw>,
    pub cbf_kappa: Vec<f64>,
    pub settle_threshold: f64,
    /// `Q(x, v)` of the stage cost `eᵀQe + uᵀu`, when the scenario reports `J`.
    pub cost_weight: Option<PairMatFn>,
    pub expected: Vec<(ControllerKind, ExpectedMetrics)>,
    pub sample_box: StateBox,
    /// Barrier weight coefficients in effect, one per barrier.
    pub q_z: Vec<f64>,
    /// Barrier names whose declared SDC vectors are known not to match the
    /// barrier definition.
    pub known_sdc_mismatch: Vec<String>,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("design", &self.design)
            .field("constraints", &self.constraints)
            .field("config", &self.config)
            .field("has_nominal", &self.nominal.is_some())
            .field("cbf_kappa", &self.cbf_kappa)
            .field("settle_threshold", &self.settle_threshold)
            .field("expected", &self.expected)
            .field("q_z", &self.q_z)
            .finish_non_exhaustive()
    }
}

impl Scenario {
    pub fn supports(&self, kind: ControllerKind) -> bool {
        kind != ControllerKind::CbfQp || self.nominal.is_some()
    }

    pub fn expected_for(&self, kind: ControllerKind) -> Option<&ExpectedMetrics> {
        self.expected.iter().find(|(k, _)| *k == kind).map(|(_, e)| e)
    }

    pub fn is_safe(&self, x: &DVector<f64>) -> bool {
        self.constraints.iter().all(|c| c.value(x) > 0.0)
    }
}

/// Scenario overrides; unset fields keep the scenario defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub gamma: Option<f64>,
    /// One value for every barrier, or one per barrier.
    pub q_z: Option<Vec<f64>>,
    pub duration: Option<f64>,
    pub control_rate: Option<f64>,
    pub dt_integrator: Option<f64>,
    pub x0: Option<Vec<f64>>,
    pub v0: Option<Vec<f64>>,
}

pub const OVERRIDE_KEYS: [&str; 7] = ["gamma", "q_z", "duration", "control_rate", "dt_integrator", "x0", "v0"];

impl Overrides {
    /// Parses `key = value` lines. Blank lines and `#` comments are skipped;
    /// vectors are written `[a, b, c]`.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut out = Overrides::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(line, format!("line {} is not `key = value`", lineno + 1)))?;
            out.set(key.trim(), value.trim())?;
        }
        Ok(out)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ScenarioError> {
        match key {
            "gamma" => self.gamma = Some(parse_scalar(key, value)?),
            "q_z" | "qz" => self.q_z = Some(parse_vector(key, value)?),
            "duration" => self.duration = Some(parse_scalar(key, value)?),
            "control_rate" | "rate" => self.control_rate = Some(parse_scalar(key, value)?),
            "dt_integrator" | "dt" => self.dt_integrator = Some(parse_scalar(key, value)?),
            "x0" => self.x0 = Some(parse_vector(key, value)?),
            "v0" => self.v0 = Some(parse_vector(key, value)?),
            _ => return Err(invalid(key, format!("unknown key; expected one of {OVERRIDE_KEYS:?}"))),
        }
        Ok(())
    }

    /// Fields of `other` that are set replace those of `self`.
    pub fn merge(mut self, other: &Overrides) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f.clone(); } )* };
        }
        take!(gamma, q_z, duration, control_rate, dt_integrator, x0, v0);
        self
    }

    /// Key-value view, as echoed in run summaries.
    pub fn to_map(&self) -> BTreeMap<&'static str, String> {
        let mut map = BTreeMap::new();
        let vec = |v: &[f64]| format!("[{}]", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "));
        if let Some(g) = self.gamma {
            map.insert("gamma", g.to_string());
        }
        if let Some(q) = &self.q_z {
            map.insert("q_z", vec(q));
        }
        if let Some(d) = self.duration {
            map.insert("duration", d.to_string());
        }
        if let Some(r) = self.control_rate {
            map.insert("control_rate", r.to_string());
        }
        if let Some(dt) = self.dt_integrator {
            map.insert("dt_integrator", dt.to_string());
        }
        if let Some(x) = &self.x0 {
            map.insert("x0", vec(x));
        }
        if let Some(v) = &self.v0 {
            map.insert("v0", vec(v));
        }
        map
    }
}

fn parse_scalar(key: &str, value: &str) -> Result<f64, ScenarioError> {
    let parsed: f64 = value
        .trim()
        .parse()
        .map_err(|_| invalid(key, format!("{value:?} is not a number")))?;
    if !parsed.is_finite() {
        return Err(invalid(key, "value must be finite"));
    }
    Ok(parsed)
}

fn parse_vector(key: &str, value: &str) -> Result<Vec<f64>, ScenarioError> {
    let trimmed = value.trim();
    let inner = match (trimmed.strip_prefix('['), trimmed.strip_suffix(']')) {
        (Some(_), Some(_)) => &trimmed[1..trimmed.len() - 1],
        (None, None) => trimmed,
        _ => return Err(invalid(key, format!("unbalanced brackets in {value:?}"))),
    };
    inner
        .split(',')
        .map(|item| parse_scalar(key, item))
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(invalid(key, "empty vector"))
            } else {
                Ok(v)
            }
        })
}

/// Default barrier weight coefficients, one per barrier state. For the cable
/// robot the coefficient `c` enters as `c/(1 + z)`.
pub fn default_q_z(name: &str) -> Option<&'static [f64]> {
    Some(match name {
        "cs1_nonconflicted" => &[1.0],
        "cs1_conflicted_single" => &[1e2],
        "cs1_conflicted_multi" => &[10.0, 10.0],
        "cs1_three_constraints" => &[100.0],
        "robots" => &[1e-3, 1e-3, 1e-3],
        "cable_sim" => &[1e-2],
        _ => return None,
    })
}

/// Builds a named scenario and applies `overrides`.
pub fn load_scenario(name: &str, overrides: &Overrides) -> Result<Scenario, ScenarioError> {
    let defaults = default_q_z(name).ok_or_else(|| ScenarioError::UnknownScenario(name.to_string()))?;
    let q = qz_coefficients(overrides.q_z.as_deref(), defaults)?;
    let mut scenario = match name {
        "cs1_nonconflicted" => cs1_nonconflicted(&q)?,
        "cs1_conflicted_single" => cs1_conflicted_single(&q)?,
        "cs1_conflicted_multi" => cs1_conflicted_multi(&q)?,
        "cs1_three_constraints" => cs1_three_constraints(&q)?,
        "robots" => robots(&q)?,
        _ => cable_sim(&q)?,
    };
    scenario.q_z = q;
    apply_overrides(&mut scenario, overrides)?;
    Ok(scenario)
}

fn apply_overrides(scenario: &mut Scenario, o: &Overrides) -> Result<(), ScenarioError> {
    if let Some(gamma) = o.gamma {
        if !(gamma > 0.0) {
            return Err(invalid("gamma", "must be positive"));
        }
        scenario.design.gamma = gamma;
    }
    if !validate_gamma(&scenario.design.reference, scenario.design.gamma) {
        return Err(ScenarioError::GammaRejected {
            gamma: scenario.design.gamma,
        });
    }
    let cfg = &mut scenario.config;
    if let Some(d) = o.duration {
        if !(d > 0.0) {
            return Err(invalid("duration", "must be positive"));
        }
        cfg.duration = d;
    }
    if let Some(r) = o.control_rate {
        if !(r > 0.0) {
            return Err(invalid("control_rate", "must be positive"));
        }
        cfg.control_rate = r;
    }
    if let Some(dt) = o.dt_integrator {
        if !(dt > 0.0) {
            return Err(invalid("dt_integrator", "must be positive"));
        }
        cfg.dt_integrator = dt;
    }
    if o.control_rate.is_some() || o.dt_integrator.is_some() {
        cfg.substeps().map_err(|e| invalid("control_rate", e.to_string()))?;
    }
    if let Some(x0) = &o.x0 {
        if x0.len() != scenario.design.plant.n {
            return Err(invalid("x0", format!("expected {} entries", scenario.design.plant.n)));
        }
        scenario.config.x0 = DVector::from_column_slice(x0);
    }
    if let Some(v0) = &o.v0 {
        if v0.len() != scenario.design.reference.n_d {
            return Err(invalid(
                "v0",
                format!("expected {} entries", scenario.design.reference.n_d),
            ));
        }
        scenario.config.v0 = DVector::from_column_slice(v0);
    }
    if !scenario.is_safe(&scenario.config.x0) {
        return Err(invalid("x0", "initial state violates a safety constraint"));
    }
    Ok(())
}

/// Barrier weight coefficients: defaults, or the override broadcast/matched
/// to the barrier count.
fn qz_coefficients(overrides: Option<&[f64]>, defaults: &[f64]) -> Result<Vec<f64>, ScenarioError> {
    let Some(values) = overrides else {
        return Ok(defaults.to_vec());
    };
    if values.iter().any(|&q| !(q > 0.0)) {
        return Err(invalid("q_z", "barrier weights must be positive"));
    }
    match values.len() {
        1 => Ok(vec![values[0]; defaults.len()]),
        k if k == defaults.len() => Ok(values.to_vec()),
        k => Err(invalid(
            "q_z",
            format!("got {k} values for {} barrier(s)", defaults.len()),
        )),
    }
}

fn dv(data: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(data)
}

fn const_mat(m: DMatrix<f64>) -> MatFn {
    Arc::new(move |_: &DVector<f64>| m.clone())
}

fn constant_weight(q: f64) -> crate::model::WeightFn {
    Arc::new(move |_: &DVector<f64>, _: f64| q)
}

// ---------------------------------------------------------------------------
// Case study 1: mechanical system

/// `tanh(x)/x`, with its series near zero.
pub fn tanh_over_x(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 3.0
    } else {
        x.tanh() / x
    }
}

fn friction_gain(x: f64) -> f64 {
    0.8 + 0.2 * (-100.0 * x.abs()).exp()
}

pub fn mechanical_plant() -> SdcPlant {
    let a_of: MatFn = Arc::new(|x: &DVector<f64>| {
        let a33 = -friction_gain(x[2]) * tanh_over_x(x[2]) - 1.0;
        let a44 = -friction_gain(x[3]) * tanh_over_x(x[3]) - 1.0;
        DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                -1.0, 0.0, a33, 0.0, //
                0.0, -1.0, 0.0, a44,
            ],
        )
    });
    let mut g = DMatrix::zeros(4, 2);
    g[(2, 0)] = 1.0;
    g[(3, 1)] = 1.0;
    let mut h = DMatrix::zeros(2, 4);
    h[(0, 0)] = 1.0;
    h[(1, 1)] = 1.0;
    SdcPlant {
        n: 4,
        m: 2,
        l: 2,
        a_of,
        g_of: const_mat(g),
        h_of: const_mat(h),
        bias_of: None,
        f_of: Some(Arc::new(|x: &DVector<f64>| {
            dv(&[
                x[2],
                x[3],
                -friction_gain(x[2]) * x[2].tanh() - x[2] - x[0],
                -friction_gain(x[3]) * x[3].tanh() - x[3] - x[1],
            ])
        })),
        state_labels: vec!["x1".into(), "x2".into(), "x3".into(), "x4".into()],
    }
}

/// Van der Pol reference `v̇1 = v2`, `v̇2 = −v1 + (1 − v1²)v2`.
pub fn van_der_pol_reference() -> ReferenceModel {
    // v1 stays in (−2.02, 2.32) from v0 = [2, 2]; A_d depends on v1 only
    let mut samples: Vec<DVector<f64>> = (0..=434).map(|k| dv(&[-2.02 + 0.01 * k as f64, 0.0])).collect();
    samples.push(dv(&[0.0, 0.0]));
    ReferenceModel {
        n_d: 2,
        a_d_of: Arc::new(|v: &DVector<f64>| DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 1.0 - v[0] * v[0]])),
        h_d_of: const_mat(DMatrix::identity(2, 2)),
        v0: dv(&[2.0, 2.0]),
        abscissa_samples: samples,
    }
}

fn conflict_reference() -> ReferenceModel {
    let a_d = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 1.0, 0.0, 0.0, //
            -1.0, -1.0, 0.0, 1.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, -1.0, 0.0,
        ],
    );
    let mut h_d = DMatrix::zeros(2, 4);
    h_d[(0, 0)] = 1.0;
    h_d[(1, 1)] = 1.0;
    let v0 = dv(&[2.0, 2.0, -2.0, 3.0]);
    ReferenceModel {
        n_d: 4,
        a_d_of: const_mat(a_d),
        h_d_of: const_mat(h_d),
        v0: v0.clone(),
        abscissa_samples: vec![v0],
    }
}

/// `Q = scale / (‖e‖² + eps) · I_l` with `e = H x − H_d v`.
fn error_scaled_weights(
    plant: &SdcPlant,
    reference: &ReferenceModel,
    scale: f64,
    eps: f64,
    r: DMatrix<f64>,
) -> Weights {
    let h = plant.h_of.clone();
    let h_d = reference.h_d_of.clone();
    let l = plant.l;
    Weights {
        q_of: Arc::new(move |x: &DVector<f64>, v: &DVector<f64>| {
            let e = h(x) * x - h_d(v) * v;
            DMatrix::identity(l, l) * (scale / (e.norm_squared() + eps))
        }),
        r_of: const_mat(r),
    }
}

/// `9 − x_i² > 0`.
fn box_limit(i: usize) -> SafetyConstraint {
    SafetyConstraint::new(
        format!("x{}_limit", i + 1),
        Arc::new(move |x: &DVector<f64>| 9.0 - x[i] * x[i]),
        Some(Arc::new(move |x: &DVector<f64>| {
            let mut g = DVector::zeros(x.len());
            g[i] = -2.0 * x[i];
            g
        })),
    )
}

/// `x1² + x2² − 0.25 > 0`.
fn inner_disc() -> SafetyConstraint {
    SafetyConstraint::new(
        "disc",
        Arc::new(|x: &DVector<f64>| x[0] * x[0] + x[1] * x[1] - 0.25),
        Some(Arc::new(|x: &DVector<f64>| {
            let mut g = DVector::zeros(x.len());
            g[0] = 2.0 * x[0];
            g[1] = 2.0 * x[1];
            g
        })),
    )
}

fn position_norm_sq(x: &DVector<f64>) -> f64 {
    x[0] * x[0] + x[1] * x[1]
}

/// Single barrier `z = (x1² + x2²)/(s1 s2)` with
/// `α = [2z x3/s1, 2z x4/s2, 2x1/s, 2x2/s]`.
fn cs1_single_barrier(q_z: f64) -> BarrierState {
    let alpha: SdcVecFn = Arc::new(|x: &DVector<f64>, _: &DVector<f64>, z: f64| {
        let s1 = 9.0 - x[0] * x[0];
        let s2 = 9.0 - x[1] * x[1];
        let s = s1 * s2;
        dv(&[2.0 * z * x[2] / s1, 2.0 * z * x[3] / s2, 2.0 * x[0] / s, 2.0 * x[1] / s])
    });
    BarrierState {
        name: "z".into(),
        constraints: vec![box_limit(0), box_limit(1)],
        p_of: Arc::new(|x, _| position_norm_sq(x)),
        q_of: Arc::new(|s| s),
        alpha_of: alpha,
        alpha_d_of: None,
        beta_of: None,
        q_z_of: constant_weight(q_z),
    }
}

fn cs1_box_constraints() -> Vec<SafetyConstraint> {
    vec![box_limit(0), box_limit(1)]
}

fn cs1_sample_box() -> StateBox {
    StateBox {
        lower: dv(&[-2.9, -2.9, -5.0, -5.0]),
        upper: dv(&[2.9, 2.9, 5.0, 5.0]),
        input_lower: dv(&[-5.0, -5.0]),
        input_upper: dv(&[5.0, 5.0]),
    }
}

fn default_config(duration: f64, x0: DVector<f64>, v0: DVector<f64>) -> SimConfig {
    SimConfig {
        dt_integrator: 1e-3,
        control_rate: 100.0,
        duration,
        x0,
        v0,
    }
}

fn cs1_base(
    name: &str,
    reference: ReferenceModel,
    barriers: Vec<BarrierState>,
    constraints: Vec<SafetyConstraint>,
    gamma: f64,
    x0: DVector<f64>,
) -> Scenario {
    let plant = mechanical_plant();
    let weights = error_scaled_weights(&plant, &reference, 1e3, 1e-3, DMatrix::identity(2, 2));
    let v0 = reference.v0.clone();
    Scenario {
        name: name.into(),
        description: describe(name),
        design: Design {
            plant,
            reference,
            barriers,
            weights,
            gamma,
            augment_override: None,
        },
        constraints,
        config: default_config(10.0, x0, v0),
        nominal: None,
        cbf_kappa: Vec::new(),
        settle_threshold: 0.1,
        cost_weight: None,
        expected: Vec::new(),
        sample_box: cs1_sample_box(),
        known_sdc_mismatch: Vec::new(),
        q_z: Vec::new(),
    }
}

fn describe(name: &str) -> String {
    CATALOGUE
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, d)| d.to_string())
        .unwrap_or_default()
}

fn cs1_nonconflicted(q: &[f64]) -> Result<Scenario, ScenarioError> {
    let mut s = cs1_base(
        "cs1_nonconflicted",
        van_der_pol_reference(),
        vec![cs1_single_barrier(q[0])],
        cs1_box_constraints(),
        0.6,
        dv(&[2.5, -2.5, 5.0, 2.0]),
    );
    s.expected = vec![
        (
            ControllerKind::Ssdre,
            ExpectedMetrics {
                settling_time: Some(0.69),
                j_e: Some(1.34),
                j: None,
            },
        ),
        (
            ControllerKind::Sdre,
            ExpectedMetrics {
                settling_time: Some(0.8),
                j_e: Some(1.48),
                j: None,
            },
        ),
    ];
    Ok(s)
}

fn cs1_conflicted_single(q: &[f64]) -> Result<Scenario, ScenarioError> {
    Ok(cs1_base(
        "cs1_conflicted_single",
        conflict_reference(),
        vec![cs1_single_barrier(q[0])],
        cs1_box_constraints(),
        0.01,
        dv(&[1.0, 1.0, -6.0, -5.0]),
    ))
}

fn cs1_conflicted_multi(q: &[f64]) -> Result<Scenario, ScenarioError> {
    // z_i = (x1² + x2²)/s_i
    let alpha1: SdcVecFn = Arc::new(|x: &DVector<f64>, _: &DVector<f64>, z: f64| {
        let s1 = 9.0 - x[0] * x[0];
        dv(&[0.0, 0.0, 2.0 * x[0] * (1.0 + z) / s1, 2.0 * x[1] / s1])
    });
    let alpha2: SdcVecFn = Arc::new(|x: &DVector<f64>, _: &DVector<f64>, z: f64| {
        let s2 = 9.0 - x[1] * x[1];
        dv(&[0.0, 0.0, 2.0 * x[0] / s2, 2.0 * x[1] * (1.0 + z) / s2])
    });
    let barrier = |name: &str, idx: usize, alpha: SdcVecFn, q: f64| BarrierState {
        name: name.into(),
        constraints: vec![box_limit(idx)],
        p_of: Arc::new(|x, _| position_norm_sq(x)),
        q_of: Arc::new(|s| s),
        alpha_of: alpha,
        alpha_d_of: None,
        beta_of: None,
        q_z_of: constant_weight(q),
    };
    Ok(cs1_base(
        "cs1_conflicted_multi",
        conflict_reference(),
        vec![barrier("z1", 0, alpha1, q[0]), barrier("z2", 1, alpha2, q[1])],
        cs1_box_constraints(),
        0.01,
        dv(&[1.0, 1.0, -6.0, -5.0]),
    ))
}

fn cs1_three_constraints(q: &[f64]) -> Result<Scenario, ScenarioError> {
    // declared α carries 10z factors that do not follow from z's definition
    let alpha: SdcVecFn = Arc::new(|x: &DVector<f64>, _: &DVector<f64>, z: f64| {
        let s1 = 9.0 - x[0] * x[0];
        let s2 = 9.0 - x[1] * x[1];
        let s3 = x[0] * x[0] + x[1] * x[1] - 0.25;
        let s = s1 * s2 * s3;
        dv(&[
            10.0 * z * x[2] / s,
            10.0 * z * x[3] / s,
            10.0 * z * x[0] * (1.0 / s1 - 1.0 / s3),
            10.0 * z * x[1] * (1.0 / s2 - 1.0 / s3),
        ])
    });
    let barrier = BarrierState {
        name: "z".into(),
        constraints: vec![box_limit(0), box_limit(1), inner_disc()],
        p_of: Arc::new(|x, _| 5.0 * position_norm_sq(x)),
        q_of: Arc::new(|s| s),
        alpha_of: alpha,
        alpha_d_of: None,
        beta_of: None,
        q_z_of: constant_weight(q[0]),
    };
    let mut s = cs1_base(
        "cs1_three_constraints",
        van_der_pol_reference(),
        vec![barrier],
        vec![box_limit(0), box_limit(1), inner_disc()],
        0.6,
        dv(&[2.5, -2.5, 5.0, 2.0]),
    );
    s.known_sdc_mismatch = vec!["z".into()];
    s.expected = vec![(
        ControllerKind::Ssdre,
        ExpectedMetrics {
            settling_time: Some(1.03),
            j_e: None,
            j: None,
        },
    )];
    Ok(s)
}

/// Second initial state of the three-constraint study.
pub const CS1_THREE_SECOND_X0: [f64; 4] = [-1.0, 1.0, 5.0, -5.0];
pub const CS1_THREE_SECOND_SETTLING: f64 = 1.14;

// ---------------------------------------------------------------------------
// Case study 2: two mobile robots

pub const OBSTACLE_CENTER: (f64, f64) = (2.0, 2.0);
pub const OBSTACLE_RADIUS: f64 = 1.5;
pub const MIN_SEPARATION: f64 = 0.1;

/// Radius-2 circular references, robot 1 at 1 rad/s and robot 2 at 0.5 rad/s.
pub fn robots_reference() -> ReferenceModel {
    let a_d = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 1.0, 0.0, 0.0, //
            -1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.5, //
            0.0, 0.0, -0.5, 0.0,
        ],
    );
    let v0 = dv(&[0.0, 2.0, 0.0, 2.0]);
    ReferenceModel {
        n_d: 4,
        a_d_of: const_mat(a_d),
        h_d_of: const_mat(DMatrix::identity(4, 4)),
        v0: v0.clone(),
        abscissa_samples: vec![v0],
    }
}

fn obstacle_constraint(robot: usize) -> SafetyConstraint {
    let (i, j) = (2 * robot, 2 * robot + 1);
    let (cx, cy) = OBSTACLE_CENTER;
    SafetyConstraint::new(
        format!("obstacle_r{}", robot + 1),
        Arc::new(move |x: &DVector<f64>| (x[i] - cx).powi(2) + (x[j] - cy).powi(2) - OBSTACLE_RADIUS.powi(2)),
        Some(Arc::new(move |x: &DVector<f64>| {
            let mut g = DVector::zeros(x.len());
            g[i] = 2.0 * (x[i] - cx);
            g[j] = 2.0 * (x[j] - cy);
            g
        })),
    )
}

fn separation_constraint() -> SafetyConstraint {
    SafetyConstraint::new(
        "separation",
        Arc::new(|x: &DVector<f64>| (x[0] - x[2]).powi(2) + (x[1] - x[3]).powi(2) - MIN_SEPARATION.powi(2)),
        Some(Arc::new(|x: &DVector<f64>| {
            let (dx, dy) = (x[0] - x[2], x[1] - x[3]);
            dv(&[2.0 * dx, 2.0 * dy, -2.0 * dx, -2.0 * dy])
        })),
    )
}

fn robots(q: &[f64]) -> Result<Scenario, ScenarioError> {
    let plant = SdcPlant {
        n: 4,
        m: 4,
        l: 4,
        a_of: const_mat(DMatrix::zeros(4, 4)),
        g_of: const_mat(DMatrix::identity(4, 4)),
        h_of: const_mat(DMatrix::identity(4, 4)),
        bias_of: None,
        f_of: Some(Arc::new(|_: &DVector<f64>| DVector::zeros(4))),
        state_labels: vec!["x11".into(), "x12".into(), "x21".into(), "x22".into()],
    };
    let reference = robots_reference();
    let zero_alpha: SdcVecFn = Arc::new(|_: &DVector<f64>, _: &DVector<f64>, _| DVector::zeros(4));

    // z_j = ‖x_j‖²/s_j, β_{j,i} = 2(x_{j,i} − z_j(x_{j,i} − 2))/s_j
    let obstacle_barrier = |robot: usize, q: f64| {
        let c = obstacle_constraint(robot);
        let s_of = c.s_of.clone();
        let (i, j) = (2 * robot, 2 * robot + 1);
        BarrierState {
            name: format!("z{}", robot + 1),
            constraints: vec![c],
            p_of: Arc::new(move |x, _| x[i] * x[i] + x[j] * x[j]),
            q_of: Arc::new(|s| s),
            alpha_of: zero_alpha.clone(),
            alpha_d_of: None,
            beta_of: Some(Arc::new(move |x: &DVector<f64>, _: &DVector<f64>, z: f64| {
                let s = s_of(x);
                let mut beta = DVector::zeros(4);
                beta[i] = 2.0 * (x[i] - z * (x[i] - OBSTACLE_CENTER.0)) / s;
                beta[j] = 2.0 * (x[j] - z * (x[j] - OBSTACLE_CENTER.1)) / s;
                beta
            })),
            q_z_of: constant_weight(q),
        }
    };
    // β_{3,i} = 2(x_{1,i} − z3(x_{1,i} − x_{2,i}))/s3 and its mirror for robot 2;
    // these are the exact input coefficients of z3 = (‖x1‖² + ‖x2‖²)/s3
    let separation = separation_constraint();
    let sep_s = separation.s_of.clone();
    let separation_barrier = BarrierState {
        name: "z3".into(),
        constraints: vec![separation],
        p_of: Arc::new(|x, _| x.norm_squared()),
        q_of: Arc::new(|s| s),
        alpha_of: zero_alpha.clone(),
        alpha_d_of: None,
        beta_of: Some(Arc::new(move |x: &DVector<f64>, _: &DVector<f64>, z: f64| {
            let s = sep_s(x);
            dv(&[
                2.0 * (x[0] - z * (x[0] - x[2])) / s,
                2.0 * (x[1] - z * (x[1] - x[3])) / s,
                2.0 * (x[2] - z * (x[2] - x[0])) / s,
                2.0 * (x[3] - z * (x[3] - x[1])) / s,
            ])
        })),
        q_z_of: constant_weight(q[2]),
    };

    let robot_q: PairMatFn = Arc::new(|x: &DVector<f64>, v: &DVector<f64>| {
        let e1 = (x[0] - v[0]).powi(2) + (x[1] - v[1]).powi(2);
        let e2 = (x[2] - v[2]).powi(2) + (x[3] - v[3]).powi(2);
        let w1 = 20.0 / (e1 + 0.01);
        let w2 = 10.0 / (e2 + 0.01);
        DMatrix::from_diagonal(&dv(&[w1, w1, w2, w2]))
    });
    let weights = Weights {
        q_of: robot_q.clone(),
        r_of: const_mat(DMatrix::identity(4, 4)),
    };
    let nominal = NominalLaw(Arc::new(|x: &DVector<f64>, v: &DVector<f64>, t: f64| {
        // feedforward is the reference velocity, robot 2 at half the rate of robot 1
        let half = 0.5 * t;
        let feedforward = dv(&[2.0 * t.cos(), -2.0 * t.sin(), half.cos(), -half.sin()]);
        -(x - v) + feedforward
    }));
    let x0 = dv(&[3.0, 4.0, 4.0, 3.0]);
    let v0 = reference.v0.clone();
    Ok(Scenario {
        name: "robots".into(),
        description: describe("robots"),
        design: Design {
            plant,
            reference,
            barriers: vec![obstacle_barrier(0, q[0]), obstacle_barrier(1, q[1]), separation_barrier],
            weights,
            gamma: 0.1,
            augment_override: None,
        },
        constraints: vec![obstacle_constraint(0), obstacle_constraint(1), separation_constraint()],
        config: default_config(8.0 * PI, x0, v0),
        nominal: Some(nominal),
        cbf_kappa: vec![2.0, 2.0, 2.0],
        settle_threshold: 0.1,
        cost_weight: Some(robot_q),
        expected: vec![
            (
                ControllerKind::Ssdre,
                ExpectedMetrics {
                    j: Some(334.47),
                    ..Default::default()
                },
            ),
            (
                ControllerKind::CbfQp,
                ExpectedMetrics {
                    j: Some(510.81),
                    ..Default::default()
                },
            ),
        ],
        sample_box: StateBox {
            lower: dv(&[-3.0, -3.0, -3.0, -3.0]),
            upper: dv(&[5.0, 5.0, 5.0, 5.0]),
            input_lower: dv(&[-3.0, -3.0, -3.0, -3.0]),
            input_upper: dv(&[3.0, 3.0, 3.0, 3.0]),
        },
        known_sdc_mismatch: Vec::new(),
        q_z: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Cable-suspended planar robot

pub const CABLE_MASS: f64 = 0.2;
pub const CABLE_HEIGHT: f64 = 0.4;
pub const CABLE_HALF_WIDTH: f64 = 0.9;
pub const GRAVITY: f64 = 9.81;
pub const CABLE_TARGET: [f64; 2] = [-0.35, 0.05];
pub const KEEP_OUT_CENTER: (f64, f64) = (-0.2, 0.0);
pub const KEEP_OUT_RADIUS: f64 = 0.1;

/// Cable lengths `(l1, l2)` at end-effector position `(q1, q2)`.
pub fn cable_lengths(q1: f64, q2: f64) -> (f64, f64) {
    let l1 = ((CABLE_HALF_WIDTH - q1).powi(2) + (CABLE_HEIGHT - q2).powi(2)).sqrt();
    let l2 = ((CABLE_HALF_WIDTH + q1).powi(2) + (CABLE_HEIGHT - q2).powi(2)).sqrt();
    (l1, l2)
}

/// Tension-to-acceleration map; `x = [q1, q̇1, q2, q̇2]`, `u = [T1, T2]`.
pub fn cable_input_matrix(x: &DVector<f64>) -> DMatrix<f64> {
    let (q1, q2) = (x[0], x[2]);
    let (l1, l2) = cable_lengths(q1, q2);
    let mut g = DMatrix::zeros(4, 2);
    g[(1, 0)] = (CABLE_HALF_WIDTH - q1) / (CABLE_MASS * l1);
    g[(1, 1)] = -(CABLE_HALF_WIDTH + q1) / (CABLE_MASS * l2);
    g[(3, 0)] = (CABLE_HEIGHT - q2) / (CABLE_MASS * l1);
    g[(3, 1)] = (CABLE_HEIGHT - q2) / (CABLE_MASS * l2);
    g
}

fn cable_sim(q: &[f64]) -> Result<Scenario, ScenarioError> {
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, 0.0, 0.0,
        ],
    );
    let mut h = DMatrix::zeros(2, 4);
    h[(0, 0)] = 1.0;
    h[(1, 2)] = 1.0;
    let gravity = dv(&[0.0, 0.0, 0.0, -GRAVITY]);
    let plant = SdcPlant {
        n: 4,
        m: 2,
        l: 2,
        a_of: const_mat(a),
        g_of: Arc::new(cable_input_matrix),
        h_of: const_mat(h),
        bias_of: Some({
            let g = gravity.clone();
            Arc::new(move |_: &DVector<f64>| g.clone())
        }),
        f_of: Some(Arc::new(|x: &DVector<f64>| dv(&[x[1], 0.0, x[3], -GRAVITY]))),
        state_labels: vec!["q1".into(), "q1_dot".into(), "q2".into(), "q2_dot".into()],
    };
    let v0 = dv(&CABLE_TARGET);
    let reference = ReferenceModel {
        n_d: 2,
        a_d_of: const_mat(DMatrix::zeros(2, 2)),
        h_d_of: const_mat(DMatrix::identity(2, 2)),
        v0: v0.clone(),
        abscissa_samples: vec![v0.clone()],
    };
    let (cx, cy) = KEEP_OUT_CENTER;
    let keep_out = SafetyConstraint::new(
        "keep_out",
        Arc::new(move |x: &DVector<f64>| (x[0] - cx).powi(2) + (x[2] - cy).powi(2) - KEEP_OUT_RADIUS.powi(2)),
        Some(Arc::new(move |x: &DVector<f64>| {
            dv(&[2.0 * (x[0] - cx), 0.0, 2.0 * (x[2] - cy), 0.0])
        })),
    );
    let s_of = keep_out.s_of.clone();
    // tracking-error barrier z = (e1² + e3²)/s
    let barrier = BarrierState {
        name: "z".into(),
        constraints: vec![keep_out.clone()],
        p_of: Arc::new(|x, v| (x[0] - v[0]).powi(2) + (x[2] - v[1]).powi(2)),
        q_of: Arc::new(|s| s),
        alpha_of: Arc::new(move |x: &DVector<f64>, v: &DVector<f64>, z: f64| {
            let s = s_of(x);
            let (e1, e3) = (x[0] - v[0], x[2] - v[1]);
            dv(&[
                0.0,
                (2.0 * e1 - 2.0 * z * (x[0] - cx)) / s,
                0.0,
                (2.0 * e3 - 2.0 * z * (x[2] - cy)) / s,
            ])
        }),
        alpha_d_of: None,
        beta_of: None,
        q_z_of: {
            let c = q[0];
            Arc::new(move |_: &DVector<f64>, z: f64| c / (1.0 + z))
        },
    };
    // gravity enters through the reference columns of the q̈2 row
    let gravity_columns: crate::model::AugmentOverride = Arc::new(|aug, _x, v, _z| {
        let norm_sq = v[0] * v[0] + v[1] * v[1];
        if norm_sq > 0.0 {
            aug.a_z[(3, 4)] = -GRAVITY * v[0] / norm_sq;
            aug.a_z[(3, 5)] = -GRAVITY * v[1] / norm_sq;
        }
    });
    let weights = error_scaled_weights(&plant, &reference, 1.0, 1e-3, DMatrix::identity(2, 2) * 100.0);
    Ok(Scenario {
        name: "cable_sim".into(),
        description: describe("cable_sim"),
        design: Design {
            plant,
            reference,
            barriers: vec![barrier],
            weights,
            gamma: 0.01,
            augment_override: Some(AugmentOverrideHook(gravity_columns)),
        },
        constraints: vec![keep_out],
        config: default_config(10.0, dv(&[-0.02, 0.0, 0.0, 0.0]), v0),
        nominal: None,
        cbf_kappa: Vec::new(),
        settle_threshold: 0.01,
        cost_weight: None,
        expected: Vec::new(),
        sample_box: StateBox {
            lower: dv(&[-0.6, -0.5, -0.3, -0.5]),
            upper: dv(&[0.3, 0.5, 0.3, 0.5]),
            input_lower: dv(&[0.0, 0.0]),
            input_upper: dv(&[3.0, 3.0]),
        },
        known_sdc_mismatch: Vec::new(),
        q_z: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Self-check

/// Relative finite-difference residual above which a barrier is flagged.
pub const SDC_RESIDUAL_TOL: f64 = 1e-5;
pub const SELF_CHECK_POINTS: usize = 50;
const SELF_CHECK_SEED: u64 = 0x5eed;
const SELF_CHECK_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct BarrierCheck {
    pub barrier: String,
    pub max_relative_residual: f64,
    pub points: usize,
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct SelfCheckReport {
    pub scenario: String,
    pub gamma_ok: bool,
    pub stabilizable: Option<bool>,
    pub detectable: Option<bool>,
    pub diagnostics_error: Option<String>,
    pub plant_sdc_residual: Option<f64>,
    pub barriers: Vec<BarrierCheck>,
}

impl SelfCheckReport {
    pub fn flags(&self) -> Vec<String> {
        let mut flags = Vec::new();
        if !self.gamma_ok {
            flags.push("gamma does not exceed the reference spectral abscissa".to_string());
        }
        if self.stabilizable == Some(false) {
            flags.push("augmented pair (A_z, G_z) not stabilizable at x0".to_string());
        }
        if self.detectable == Some(false) {
            flags.push("augmented pair (A_z, Q_z^1/2) not detectable at x0".to_string());
        }
        if let Some(err) = &self.diagnostics_error {
            flags.push(format!("pointwise diagnostics failed: {err}"));
        }
        if self.plant_sdc_residual.is_some_and(|r| r > 1e-8) {
            flags.push("plant SDC factorization does not reproduce the drift".to_string());
        }
        for b in &self.barriers {
            if b.flagged {
                flags.push(format!(
                    "barrier {} SDC residual {:.3e} exceeds {:.0e}",
                    b.barrier, b.max_relative_residual, SDC_RESIDUAL_TOL
                ));
            }
        }
        flags
    }

    pub fn is_clean(&self) -> bool {
        self.flags().is_empty()
    }
}

impl fmt::Display for SelfCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let yes_no = |b: Option<bool>| match b {
            Some(true) => "yes",
            Some(false) => "NO",
            None => "n/a",
        };
        writeln!(f, "scenario: {}", self.scenario)?;
        writeln!(f, "  gamma bound: {}", if self.gamma_ok { "ok" } else { "VIOLATED" })?;
        writeln!(f, "  stabilizable at x0: {}", yes_no(self.stabilizable))?;
        writeln!(f, "  detectable at x0: {}", yes_no(self.detectable))?;
        if let Some(r) = self.plant_sdc_residual {
            writeln!(f, "  plant SDC residual: {r:.3e}")?;
        }
        for b in &self.barriers {
            writeln!(
                f,
                "  barrier {}: max relative SDC residual {:.3e} over {} points{}",
                b.barrier,
                b.max_relative_residual,
                b.points,
                if b.flagged { "  [FLAGGED]" } else { "" }
            )?;
        }
        let flags = self.flags();
        if flags.is_empty() {
            write!(f, "  result: clean")
        } else {
            write!(f, "  result: {} flag(s)", flags.len())
        }
    }
}

/// Draws a safe state with every constraint at least `margin` from its
/// boundary, and an input, from the scenario's sampling box.
pub fn sample_safe_point(scenario: &Scenario, rng: &mut impl Rng, margin: f64) -> (DVector<f64>, DVector<f64>) {
    let b = &scenario.sample_box;
    loop {
        let x = DVector::from_fn(b.lower.len(), |i, _| rng.random_range(b.lower[i]..b.upper[i]));
        if scenario.constraints.iter().all(|c| c.value(&x) > margin) {
            let u = DVector::from_fn(b.input_lower.len(), |i, _| {
                rng.random_range(b.input_lower[i]..=b.input_upper[i])
            });
            return (x, u);
        }
    }
}

/// Runs the γ bound, PBH diagnostics at `x0` and finite-difference barrier
/// SDC checks at random safe points.
pub fn self_check(scenario: &Scenario) -> SelfCheckReport {
    let design = &scenario.design;
    let gamma_ok = validate_gamma(&design.reference, design.gamma);
    let x0 = &scenario.config.x0;
    let v0 = &scenario.config.v0;

    let (stabilizable, detectable, diagnostics_error) = match design
        .barrier_values(x0, v0)
        .and_then(|z| build_augmented(design, x0, v0, &z))
        .map_err(|e| e.to_string())
        .and_then(|aug| pointwise_diagnostics(&aug, PBH_TOL).map_err(|e| e.to_string()))
    {
        Ok(report) => (Some(report.stabilizable), Some(report.detectable), None),
        Err(err) => (None, None, Some(err)),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(SELF_CHECK_SEED);
    let mut worst = vec![0.0f64; design.barriers.len()];
    let mut plant_residual: Option<f64> = None;
    for _ in 0..SELF_CHECK_POINTS {
        let (x, u) = sample_safe_point(scenario, &mut rng, 0.05);
        if let Some(r) = design.plant.sdc_residual(&x) {
            plant_residual = Some(plant_residual.map_or(r, |p: f64| p.max(r)));
        }
        for (i, barrier) in design.barriers.iter().enumerate() {
            let rel = validate_barrier_sdc(
                barrier,
                &design.plant,
                &design.reference,
                &x,
                v0,
                &u,
                SELF_CHECK_FD_STEP,
            )
            .map(|r| r.relative())
            .unwrap_or(f64::INFINITY);
            worst[i] = worst[i].max(rel);
        }
    }
    let barriers = design
        .barriers
        .iter()
        .zip(worst)
        .map(|(b, max_relative_residual)| BarrierCheck {
            barrier: b.name.clone(),
            max_relative_residual,
            points: SELF_CHECK_POINTS,
            flagged: !(max_relative_residual <= SDC_RESIDUAL_TOL),
        })
        .collect();

    SelfCheckReport {
        scenario: scenario.name.clone(),
        gamma_ok,
        stabilizable,
        detectable,
        diagnostics_error,
        plant_sdc_residual: plant_residual,
        barriers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_is_fixed() {
        let names = catalogue();
        assert_eq!(names.len(), 6);
        assert!(names.contains(&"robots"));
        assert!(names.contains(&"cable_sim"));
    }

    #[test]
    fn unknown_scenario() {
        assert_eq!(
            load_scenario("nosuch", &Overrides::default()).unwrap_err(),
            ScenarioError::UnknownScenario("nosuch".into())
        );
    }

    #[test]
    fn gamma_override_checked() {
        let s = load_scenario("cs1_nonconflicted", &Overrides::default()).unwrap();
        assert_eq!(s.design.gamma, 0.6);
        let o = Overrides {
            gamma: Some(0.4),
            ..Default::default()
        };
        assert_eq!(
            load_scenario("cs1_nonconflicted", &o).unwrap_err(),
            ScenarioError::GammaRejected { gamma: 0.4 }
        );
    }

    #[test]
    fn parse_override_text() {
        let o = Overrides::parse("# comment\ngamma = 0.7\nq_z = [10, 100]\nx0 = [1, 1, -6, -5]\n\nduration=2").unwrap();
        assert_eq!(o.gamma, Some(0.7));
        assert_eq!(o.q_z, Some(vec![10.0, 100.0]));
        assert_eq!(o.x0, Some(vec![1.0, 1.0, -6.0, -5.0]));
        assert_eq!(o.duration, Some(2.0));
        assert!(Overrides::parse("bogus = 1").is_err());
        assert!(Overrides::parse("gamma = abc").is_err());
        assert!(Overrides::parse("x0 = [1, 2").is_err());
        assert!(Overrides::parse("gamma 0.5").is_err());
    }

    #[test]
    fn override_validation() {
        let bad_qz = Overrides {
            q_z: Some(vec![1.0, 2.0, 3.0]),
            ..Default::default()
        };
        assert!(matches!(
            load_scenario("cs1_conflicted_multi", &bad_qz),
            Err(ScenarioError::InvalidOverride { .. })
        ));
        let unsafe_x0 = Overrides {
            x0: Some(vec![3.5, 0.0, 0.0, 0.0]),
            ..Default::default()
        };
        assert!(load_scenario("cs1_nonconflicted", &unsafe_x0).is_err());
        let bad_rate = Overrides {
            control_rate: Some(300.0),
            ..Default::default()
        };
        assert!(load_scenario("robots", &bad_rate).is_err());
        let ok = Overrides {
            q_z: Some(vec![100.0, 10.0]),
            duration: Some(1.0),
            ..Default::default()
        };
        let s = load_scenario("cs1_conflicted_multi", &ok).unwrap();
        assert_eq!(s.config.duration, 1.0);
    }

    #[test]
    fn tanh_series_is_continuous() {
        let x = 1e-6;
        assert!((tanh_over_x(x * 0.999) - tanh_over_x(x * 1.001)).abs() < 1e-12);
        assert_eq!(tanh_over_x(0.0), 1.0);
    }

    #[test]
    fn cable_lengths_symmetric_at_center() {
        for q2 in [-0.3, 0.0, 0.2] {
            let (l1, l2) = cable_lengths(0.0, q2);
            assert!((l1 - l2).abs() < 1e-15);
        }
    }

    #[test]
    fn initial_states_are_safe() {
        for name in catalogue() {
            let s = load_scenario(name, &Overrides::default()).unwrap();
            assert!(s.is_safe(&s.config.x0), "{name}");
        }
        let second = Overrides {
            x0: Some(CS1_THREE_SECOND_X0.to_vec()),
            ..Default::default()
        };
        assert!(load_scenario("cs1_three_constraints", &second).is_ok());
    }
}
