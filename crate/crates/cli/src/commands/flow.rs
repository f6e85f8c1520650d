//! `fsphere flow`: evolve a loop, write trace.jsonl, final_loop.json,
//! summary.json.

use super::write_json;
use crate::spec::{parse_config, LoopSpec};
use finsler_sphere::config::MetricConfig;
use finsler_sphere::curveflow::{self, FlowOutcome, FlowParams};
use finsler_sphere::error::Result;
use finsler_sphere::geodesic;
use finsler_sphere::io;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowConfig {
    metric: MetricConfig,
    #[serde(rename = "loop")]
    loop_spec: LoopSpec,
    /// Slowdown scale; defaults to 0.25 × injectivity radius estimate.
    rho0: Option<f64>,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(default = "default_t_max")]
    t_max: f64,
    ell_floor: Option<f64>,
    #[serde(default = "default_dt_scale")]
    dt_scale: f64,
    #[serde(default = "default_cadence")]
    check_cadence: usize,
}

fn default_epsilon() -> f64 {
    1e-3
}
fn default_t_max() -> f64 {
    50.0
}
fn default_dt_scale() -> f64 {
    1.0
}
fn default_cadence() -> usize {
    16
}

#[derive(Debug, Serialize)]
struct FlowSummary {
    converged: bool,
    ell: f64,
    epsilon: f64,
    steps: usize,
    outcome: String,
    final_length: f64,
    rho0: f64,
}

pub fn run(text: &str, out: &Path, seed: u64) -> Result<i32> {
    let cfg: FlowConfig = parse_config(text)?;
    let metric = cfg.metric.build()?;
    let lp = cfg.loop_spec.build(seed, out)?;
    let rho0 = cfg
        .rho0
        .unwrap_or_else(|| 0.25 * geodesic::injectivity_radius_estimate(&metric));
    let params = FlowParams {
        rho0,
        epsilon: cfg.epsilon,
        t_max: cfg.t_max,
        ell_floor: cfg.ell_floor.unwrap_or(rho0),
        dt_scale: cfg.dt_scale,
        check_cadence: cfg.check_cadence,
        ..FlowParams::default()
    };
    let ev = curveflow::evolve(&metric, &lp, &params)?;
    io::write_trace(&out.join("trace.jsonl"), &ev.trace)?;
    io::write_loop(&out.join("final_loop.json"), &ev.final_loop)?;
    let (converged, ell) = match ev.outcome {
        FlowOutcome::Entered { ell, .. } => (true, ell),
        _ => (false, ev.final_loop.f_length(&metric)),
    };
    let summary = FlowSummary {
        converged,
        ell,
        epsilon: cfg.epsilon,
        steps: ev.steps,
        outcome: format!("{:?}", ev.outcome),
        final_length: ev.final_loop.f_length(&metric),
        rho0,
    };
    write_json(out, "summary.json", &summary)?;
    Ok(match ev.outcome {
        FlowOutcome::TimedOut => 4,
        _ => 0,
    })
}
