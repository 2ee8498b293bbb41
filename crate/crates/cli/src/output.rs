//! CSV trajectory and JSON summary writers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use ssdre::scenarios::Scenario;
use ssdre::sim::{Metrics, TrajectoryLog};

/// Column names: time, plant states, reference states, barrier states,
/// inputs, safety functions and the tracking-error norm.
pub fn csv_header(log: &TrajectoryLog) -> String {
    let mut cols = vec!["t".to_string()];
    let first = |v: &[ssdre::DVector<f64>]| v.first().map_or(0, |x| x.len());
    cols.extend((1..=first(&log.states)).map(|i| format!("x{i}")));
    cols.extend((1..=first(&log.refs)).map(|i| format!("v{i}")));
    cols.extend((1..=log.barrier_names.len()).map(|i| format!("z{i}")));
    cols.extend((1..=first(&log.inputs)).map(|i| format!("u{i}")));
    cols.extend(log.constraint_names.iter().map(|n| format!("s_{n}")));
    cols.push("err_norm".into());
    cols.join(",")
}

fn push_num(line: &mut String, value: f64) {
    // 12 significant digits in scientific notation
    let _ = write!(line, ",{value:.11e}");
}

pub fn render_csv(log: &TrajectoryLog) -> String {
    let mut out = csv_header(log);
    out.push('\n');
    for k in 0..log.len() {
        let mut line = format!("{:.11e}", log.times[k]);
        for column in [
            &log.states[k],
            &log.refs[k],
            &log.barrier_values[k],
            &log.inputs[k],
            &log.constraint_values[k],
        ] {
            for &value in column.iter() {
                push_num(&mut line, value);
            }
        }
        push_num(&mut line, log.error_norms[k]);
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub dt_integrator: f64,
    pub control_rate: f64,
    pub duration: f64,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub gamma: f64,
    pub q_z: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub controller: String,
    pub status: String,
    pub settling_time: Option<f64>,
    #[serde(rename = "J_e")]
    pub j_e: f64,
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    pub min_s: BTreeMap<String, f64>,
    pub safety_ok: bool,
    pub wall_time: f64,
    pub config: ConfigEcho,
}

impl RunSummary {
    pub fn new(scenario: &Scenario, log: &TrajectoryLog, metrics: &Metrics) -> Self {
        let cfg = &scenario.config;
        RunSummary {
            scenario: log.scenario.clone(),
            controller: log.controller.as_str().to_string(),
            status: log.status.as_str().to_string(),
            settling_time: metrics.settling_time,
            j_e: metrics.j_e,
            j: metrics.j,
            min_s: log
                .constraint_names
                .iter()
                .cloned()
                .zip(metrics.min_s.iter().copied())
                .collect(),
            safety_ok: metrics.safety_ok,
            wall_time: metrics.wall_time,
            config: ConfigEcho {
                dt_integrator: cfg.dt_integrator,
                control_rate: cfg.control_rate,
                duration: cfg.duration,
                x0: cfg.x0.iter().copied().collect(),
                v0: cfg.v0.iter().copied().collect(),
                gamma: scenario.design.gamma,
                q_z: scenario.q_z.clone(),
            },
        }
    }

    /// One-line human summary.
    pub fn line(&self) -> String {
        let settling = self.settling_time.map_or("none".to_string(), |t| format!("{t:.3}s"));
        let j = self.j.map_or(String::new(), |j| format!(" J={j:.2}"));
        let min_s = self
            .min_s
            .iter()
            .map(|(k, v)| format!("{k}={v:.4}"))
            .collect::<Vec<_>>()
            .join(" ");
        format!(
            "{} {}: {} settling={} J_e={:.4}{} min_s[{}] safe={} wall={:.2}s",
            self.scenario,
            self.controller,
            self.status,
            settling,
            self.j_e,
            j,
            min_s,
            if self.safety_ok { "yes" } else { "no" },
            self.wall_time
        )
    }
}
