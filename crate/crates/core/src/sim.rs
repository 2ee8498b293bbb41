//! Deterministic closed-loop simulation with a zero-order-hold controller,
//! trajectory logging and metrics.

use std::fmt;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::controller::{cbf_qp_control, sdre_tracking_control, ssdre_control, ControlError};
use crate::model::ModelError;
use crate::scenarios::Scenario;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("non-finite state produced by the integrator")]
    NonFiniteState,
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("scenario {scenario} does not support the {kind} controller")]
    UnsupportedController { scenario: String, kind: ControllerKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerKind {
    Ssdre,
    Sdre,
    CbfQp,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [ControllerKind::Ssdre, ControllerKind::Sdre, ControllerKind::CbfQp];

    pub fn as_str(self) -> &'static str {
        match self {
            ControllerKind::Ssdre => "ssdre",
            ControllerKind::Sdre => "sdre",
            ControllerKind::CbfQp => "cbfqp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt_integrator: f64,
    pub control_rate: f64,
    pub duration: f64,
    pub x0: DVector<f64>,
    pub v0: DVector<f64>,
}

impl SimConfig {
    /// Integrator steps per control interval.
    pub fn substeps(&self) -> Result<usize, SimError> {
        if !(self.dt_integrator > 0.0) || !(self.control_rate > 0.0) {
            return Err(SimError::InvalidConfig(
                "dt_integrator and control_rate must be positive".into(),
            ));
        }
        let ratio = 1.0 / (self.dt_integrator * self.control_rate);
        let k = ratio.round();
        if k < 1.0 || (ratio - k).abs() > 1e-9 * k {
            return Err(SimError::InvalidConfig(format!(
                "control period 1/{} is not an integer multiple of dt {}",
                self.control_rate, self.dt_integrator
            )));
        }
        Ok(k as usize)
    }

    /// Number of integrator steps covering `duration`.
    pub fn steps(&self) -> Result<usize, SimError> {
        if !(self.duration > 0.0) {
            return Err(SimError::InvalidConfig("duration must be positive".into()));
        }
        Ok(((self.duration / self.dt_integrator).round() as usize).max(1))
    }
}

/// One classical Runge–Kutta step with the input held across all stages.
pub fn rk4_step<F>(flow: F, x: &DVector<f64>, u: &DVector<f64>, dt: f64) -> Result<DVector<f64>, SimError>
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>,
{
    let finite = |k: &DVector<f64>| k.iter().all(|v| v.is_finite());
    let k1 = flow(x, u);
    if !finite(&k1) {
        return Err(SimError::NonFiniteState);
    }
    let k2 = flow(&(x + &k1 * (0.5 * dt)), u);
    if !finite(&k2) {
        return Err(SimError::NonFiniteState);
    }
    let k3 = flow(&(x + &k2 * (0.5 * dt)), u);
    if !finite(&k3) {
        return Err(SimError::NonFiniteState);
    }
    let k4 = flow(&(x + &k3 * dt), u);
    if !finite(&k4) {
        return Err(SimError::NonFiniteState);
    }
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    if !finite(&next) {
        return Err(SimError::NonFiniteState);
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Breached,
    SolverFailed,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Breached => "breached",
            RunStatus::SolverFailed => "solver_failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryLog {
    pub scenario: String,
    pub controller: ControllerKind,
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub refs: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    /// `NaN` where a barrier is undefined (its constraint is violated).
    pub barrier_values: Vec<DVector<f64>>,
    pub constraint_values: Vec<DVector<f64>>,
    pub errors: Vec<DVector<f64>>,
    pub error_norms: Vec<f64>,
    pub barrier_names: Vec<String>,
    pub constraint_names: Vec<String>,
    pub status: RunStatus,
    /// Diagnostic for a halted run, naming the failing time and cause.
    pub failure: Option<String>,
    pub wall_time: f64,
}

impl TrajectoryLog {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Runs `scenario` in closed loop under `kind`. Controller failures end the
/// run early and are reported through `status`.
pub fn simulate(scenario: &Scenario, kind: ControllerKind, config: &SimConfig) -> Result<TrajectoryLog, SimError> {
    let design = &scenario.design;
    let plant = &design.plant;
    let reference = &design.reference;
    let substeps = config.substeps()?;
    let steps = config.steps()?;
    if config.x0.len() != plant.n || config.v0.len() != reference.n_d {
        return Err(SimError::InvalidConfig(format!(
            "initial state dimensions ({}, {}) do not match plant ({}, {})",
            config.x0.len(),
            config.v0.len(),
            plant.n,
            reference.n_d
        )));
    }
    if kind == ControllerKind::CbfQp && scenario.nominal.is_none() {
        return Err(SimError::UnsupportedController {
            scenario: scenario.name.clone(),
            kind,
        });
    }

    let started = Instant::now();
    let mut log = TrajectoryLog {
        scenario: scenario.name.clone(),
        controller: kind,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        refs: Vec::with_capacity(steps + 1),
        inputs: Vec::with_capacity(steps + 1),
        barrier_values: Vec::with_capacity(steps + 1),
        constraint_values: Vec::with_capacity(steps + 1),
        errors: Vec::with_capacity(steps + 1),
        error_norms: Vec::with_capacity(steps + 1),
        barrier_names: design.barriers.iter().map(|b| b.name.clone()).collect(),
        constraint_names: scenario.constraints.iter().map(|c| c.name.clone()).collect(),
        status: RunStatus::Completed,
        failure: None,
        wall_time: 0.0,
    };

    let n = plant.n;
    let mut w = DVector::zeros(n + reference.n_d);
    w.rows_mut(0, n).copy_from(&config.x0);
    w.rows_mut(n, reference.n_d).copy_from(&config.v0);
    let mut u = DVector::zeros(plant.m);
    let flow = |w: &DVector<f64>, u: &DVector<f64>| {
        let x = w.rows(0, n).into_owned();
        let v = w.rows(n, reference.n_d).into_owned();
        let mut dw = DVector::zeros(w.len());
        dw.rows_mut(0, n).copy_from(&plant.flow(&x, u));
        dw.rows_mut(n, reference.n_d).copy_from(&reference.flow(&v));
        dw
    };

    let mut halted: Option<(RunStatus, String)> = None;
    for k in 0..=steps {
        let t = k as f64 * config.dt_integrator;
        let x = w.rows(0, n).into_owned();
        let v = w.rows(n, reference.n_d).into_owned();
        if k % substeps == 0 {
            let computed = match kind {
                ControllerKind::Ssdre => ssdre_control(design, &x, &v).map(|o| o.u),
                ControllerKind::Sdre => sdre_tracking_control(design, &x, &v).map(|o| o.u),
                ControllerKind::CbfQp => cbf_qp_control(
                    scenario.nominal.as_ref().expect("checked above"),
                    &scenario.constraints,
                    &scenario.cbf_kappa,
                    plant,
                    &x,
                    &v,
                    t,
                ),
            };
            match computed {
                Ok(next) => u = next,
                Err(err) => {
                    let status = match err {
                        ControlError::Model(ModelError::UnsafeEvaluation { .. }) => RunStatus::Breached,
                        _ => RunStatus::SolverFailed,
                    };
                    halted = Some((
                        status,
                        format!(
                            "{kind} controller failed at t = {t:.3} s, x = {:?}: {err}",
                            x.as_slice()
                        ),
                    ));
                }
            }
        }
        record(&mut log, scenario, t, &x, &v, &u);
        if halted.is_some() || k == steps {
            break;
        }
        match rk4_step(flow, &w, &u, config.dt_integrator) {
            Ok(next) => w = next,
            Err(err) => {
                halted = Some((
                    RunStatus::SolverFailed,
                    format!("integration failed after t = {t:.3} s: {err}"),
                ));
                break;
            }
        }
    }

    log.status = match &halted {
        Some((status, _)) => *status,
        None if log
            .constraint_values
            .iter()
            .any(|s| s.iter().any(|&value| !(value > 0.0))) =>
        {
            RunStatus::Breached
        }
        None => RunStatus::Completed,
    };
    log.failure = halted.map(|(_, msg)| msg);
    log.wall_time = started.elapsed().as_secs_f64();
    Ok(log)
}

fn record(log: &mut TrajectoryLog, scenario: &Scenario, t: f64, x: &DVector<f64>, v: &DVector<f64>, u: &DVector<f64>) {
    let design = &scenario.design;
    let e = design.tracking_error(x, v);
    log.times.push(t);
    log.states.push(x.clone());
    log.refs.push(v.clone());
    log.inputs.push(u.clone());
    log.barrier_values.push(DVector::from_iterator(
        design.barriers.len(),
        design.barriers.iter().map(|b| b.value(x, v).unwrap_or(f64::NAN)),
    ));
    log.constraint_values.push(DVector::from_iterator(
        scenario.constraints.len(),
        scenario.constraints.iter().map(|c| c.value(x)),
    ));
    log.error_norms.push(e.norm());
    log.errors.push(e);
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub settling_time: Option<f64>,
    pub j_e: f64,
    pub j: Option<f64>,
    pub min_s: Vec<f64>,
    pub safety_ok: bool,
    pub wall_time: f64,
}

/// Stage-cost weight `Q(x, v)` for `J = ∫ eᵀQe + uᵀu dt`.
pub type CostWeight<'a> = &'a dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64>;

/// Trapezoidal integrals over the logged grid up to `horizon`, and the
/// enter-and-stay settling time for `‖e‖ < settle_threshold`.
pub fn compute_metrics(
    log: &TrajectoryLog,
    settle_threshold: f64,
    horizon: f64,
    cost: Option<CostWeight<'_>>,
) -> Metrics {
    let end = log
        .times
        .iter()
        .rposition(|&t| t <= horizon + 1e-9)
        .map_or(0, |i| i + 1);
    let times = &log.times[..end];
    let j_e = trapezoid(times, &log.error_norms[..end]);
    let j = cost.map(|q| {
        let stage: Vec<f64> = (0..end)
            .map(|i| {
                let e = &log.errors[i];
                let u = &log.inputs[i];
                (e.transpose() * q(&log.states[i], &log.refs[i]) * e)[(0, 0)] + u.dot(u)
            })
            .collect();
        trapezoid(times, &stage)
    });

    let settling_time = match log.error_norms[..end].iter().rposition(|&e| !(e < settle_threshold)) {
        None => times.first().copied(),
        Some(last) if last + 1 < end => Some(times[last + 1]),
        Some(_) => None,
    };

    let min_s: Vec<f64> = (0..log.constraint_names.len())
        .map(|c| log.constraint_values.iter().map(|s| s[c]).fold(f64::INFINITY, f64::min))
        .collect();
    let safety_ok = min_s.iter().all(|&s| s > 0.0);
    Metrics {
        settling_time,
        j_e,
        j,
        min_s,
        safety_ok,
        wall_time: log.wall_time,
    }
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSafety {
    pub name: String,
    pub min_s: f64,
    pub argmin_t: f64,
    pub breached: bool,
    pub first_breach_t: Option<f64>,
}

pub fn safety_report(log: &TrajectoryLog) -> Vec<ConstraintSafety> {
    log.constraint_names
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let mut min_s = f64::INFINITY;
            let mut argmin_t = f64::NAN;
            let mut first_breach_t = None;
            for (t, s) in log.times.iter().zip(&log.constraint_values) {
                if s[c] < min_s {
                    min_s = s[c];
                    argmin_t = *t;
                }
                if first_breach_t.is_none() && !(s[c] > 0.0) {
                    first_breach_t = Some(*t);
                }
            }
            ConstraintSafety {
                name: name.clone(),
                min_s,
                argmin_t,
                breached: first_breach_t.is_some(),
                first_breach_t,
            }
        })
        .collect()
}
