//! Explicit time stepping of the slowed-down curve-shortening semi-flow.

use super::velocity::{dual_path_deviation, velocity_fast};
use super::Loop;
use crate::error::{Error, Result};
use crate::metric::FinslerMetric;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowParams {
    /// Slowdown scale ρ₀; χ vanishes below ρ₀ and equals 1 above 2ρ₀.
    pub rho0: f64,
    /// Neighborhood size ε for the convergence target.
    pub epsilon: f64,
    pub t_max: f64,
    /// Lengths below this stop the run (defaults to ρ₀).
    pub ell_floor: f64,
    /// CFL safety factor multiplying h²/max A. The 4th-order five-point
    /// second-difference stencil is Euler-stable only up to 0.375·h²/A.
    pub cfl: f64,
    /// Extra time-step scale for convergence studies.
    pub dt_scale: f64,
    /// Run the dual-path velocity cross-check every this many steps.
    pub check_cadence: usize,
    pub max_steps: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            rho0: 0.5,
            epsilon: 1e-3,
            t_max: 50.0,
            ell_floor: 0.5,
            cfl: 0.3,
            dt_scale: 1.0,
            check_cadence: 16,
            max_steps: 200_000,
        }
    }
}

impl FlowParams {
    pub fn with_rho0(rho0: f64) -> Self {
        Self { rho0, ell_floor: rho0, ..Self::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowEvent {
    pub t: f64,
    pub kind: String,
    pub detail: String,
}

/// Per-step record of the evolution.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    pub lengths: Vec<f64>,
    pub max_abs_v: Vec<f64>,
    /// Per-step dissipation increments χ(L)·∫V²‖γ̇‖du·dt.
    pub dissipation: Vec<f64>,
    pub chi: Vec<f64>,
    pub events: Vec<FlowEvent>,
}

impl FlowTrace {
    pub fn dissipation_total(&self) -> f64 {
        self.dissipation.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FlowOutcome {
    /// Entered U(ℓ, ε): length within ε² of the tracked level and max|V| < ε.
    Entered { ell: f64, epsilon: f64 },
    BelowFloor,
    TimedOut,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub final_loop: Loop,
    pub trace: FlowTrace,
    pub outcome: FlowOutcome,
    pub steps: usize,
}

/// Cubic smoothstep cutoff with support [ρ₀, ∞), equal to 1 on [2ρ₀, ∞).
pub fn chi_cutoff(ell: f64, rho0: f64) -> f64 {
    if ell <= rho0 {
        0.0
    } else if ell >= 2.0 * rho0 {
        1.0
    } else {
        let s = (ell - rho0) / rho0;
        s * s * (3.0 - 2.0 * s)
    }
}

/// One explicit step of the slowed flow: x ← normalize(x + dt·χ(L)·V·N),
/// followed by redistribution to uniform arclength. Embeddedness loss rolls
/// the step back and halves dt, up to 8 times.
pub fn step(metric: &FinslerMetric, lp: &Loop, dt: f64, rho0: f64) -> Result<Loop> {
    let data = velocity_fast(metric, lp)?;
    let ell = lp.f_length(metric);
    let chi = chi_cutoff(ell, rho0);
    step_with(lp, &data.v, chi, dt).map(|(l, _)| l)
}

fn step_with(lp: &Loop, v: &[f64], chi: f64, dt: f64) -> Result<(Loop, f64)> {
    if chi == 0.0 {
        return Ok((lp.clone(), dt));
    }
    let mut dt_eff = dt;
    for _ in 0..=8 {
        let pts: Vec<_> = (0..lp.len())
            .map(|i| lp.samples()[i] + lp.normal(i) * (dt_eff * chi * v[i]))
            .collect();
        let moved = Loop::new(pts)?.redistributed()?;
        if moved.is_embedded() {
            return Ok((moved, dt_eff));
        }
        dt_eff *= 0.5;
    }
    Err(Error::EmbeddednessLost { t: f64::NAN })
}

/// Runs the semi-flow until it enters U(ℓ, ε) for the tracked length level,
/// falls below the length floor, or exhausts the time budget.
pub fn evolve(metric: &FinslerMetric, initial: &Loop, params: &FlowParams) -> Result<Evolution> {
    let mut lp = initial.redistributed()?;
    if !lp.is_embedded() {
        return Err(Error::InvalidParameter("initial loop is not embedded".into()));
    }
    let mut trace = FlowTrace::default();
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut tracked_ell: Option<f64> = None;
    let eps = params.epsilon;

    let mut data = velocity_fast(metric, &lp)?;
    let mut ell = lp.f_length(metric);

    loop {
        let chi = chi_cutoff(ell, params.rho0);
        trace.times.push(t);
        trace.lengths.push(ell);
        trace.max_abs_v.push(data.max_abs_v);
        trace.chi.push(chi);

        // Stop rules.
        if let Some(l0) = tracked_ell {
            if data.max_abs_v < eps && (ell - l0).abs() < eps * eps {
                trace.events.push(FlowEvent {
                    t,
                    kind: "entered".into(),
                    detail: format!("U({ell:.9}, {eps:.1e})"),
                });
                return Ok(Evolution {
                    final_loop: lp,
                    trace,
                    outcome: FlowOutcome::Entered { ell, epsilon: eps },
                    steps,
                });
            }
        }
        if ell < params.ell_floor {
            return Ok(Evolution {
                final_loop: lp,
                trace,
                outcome: FlowOutcome::BelowFloor,
                steps,
            });
        }
        if t >= params.t_max || steps >= params.max_steps {
            return Ok(Evolution {
                final_loop: lp,
                trace,
                outcome: FlowOutcome::TimedOut,
                steps,
            });
        }

        // Level tracking: arm at 10ε, slide while |V| ≥ ε.
        if tracked_ell.is_none() && data.max_abs_v < 10.0 * eps {
            tracked_ell = Some(ell);
            trace.events.push(FlowEvent {
                t,
                kind: "tracking".into(),
                detail: format!("level {ell:.9}"),
            });
        } else if tracked_ell.is_some() && data.max_abs_v >= eps {
            tracked_ell = Some(ell);
        }

        // CFL time step.
        let n = lp.len() as f64;
        let h = lp.g_length() / n * lp.spacing_ratio().0.max(0.2);
        let dt_cfl = params.cfl * h * h / data.a_max.max(1e-12);
        let dt = (params.dt_scale * dt_cfl).min(params.t_max - t);

        let (next, dt_eff) = match step_with(&lp, &data.v, chi, dt) {
            Ok(ok) => ok,
            Err(Error::EmbeddednessLost { .. }) => return Err(Error::EmbeddednessLost { t }),
            Err(e) => return Err(e),
        };
        if dt_eff < dt {
            trace.events.push(FlowEvent {
                t,
                kind: "dt_halved".into(),
                detail: format!("dt {dt:.3e} → {dt_eff:.3e}"),
            });
        }
        // Dissipation increment for the step just taken (left endpoint rule).
        let du = 1.0 / lp.len() as f64;
        let diss: f64 = (0..lp.len())
            .map(|i| data.v[i] * data.v[i] * lp.speed(i) * du)
            .sum::<f64>()
            * chi
            * dt_eff;
        trace.dissipation.push(diss);

        // Periodic dual-path cross-check, with the tolerance scaled by the
        // velocity magnitude (V carries a curvature scale on small loops).
        // A derivative-stack bug shows up as an O(1) relative disagreement;
        // discretization stays below ~2e-4 relative even on collapsing
        // members, so the hard trip sits at 1e-3 and the check is skipped
        // once the loop is inside the slowdown band.
        if params.check_cadence > 0 && steps % params.check_cadence == 0 && ell > 2.0 * params.rho0
        {
            let dev = dual_path_deviation(metric, &lp)?;
            let scale = data.max_abs_v.max(1.0);
            if dev > 1e-3 * scale {
                return Err(Error::VelocityInconsistency { max_dev: dev, at: steps });
            }
            if dev > 1e-5 * scale {
                trace.events.push(FlowEvent {
                    t,
                    kind: "velocity_check".into(),
                    detail: format!("path deviation {dev:.3e}"),
                });
            }
        }

        let warn = lp.embed_report().proximity_warnings.len();
        if warn > 0 && steps % 50 == 0 {
            trace.events.push(FlowEvent {
                t,
                kind: "proximity".into(),
                detail: format!("{warn} close segment pairs"),
            });
        }

        lp = next;
        t += dt_eff;
        steps += 1;
        data = velocity_fast(metric, &lp)?;
        ell = lp.f_length(metric);
    }
}

/// Residual of the length-dissipation identity over a trace from a run with
/// χ ≡ 1 throughout.
pub fn dissipation_check(trace: &FlowTrace) -> Result<f64> {
    if trace.lengths.len() < 2 {
        return Err(Error::InvalidParameter("trace too short".into()));
    }
    if trace.chi.iter().any(|&c| c < 1.0 - 1e-12) {
        return Err(Error::InvalidParameter(
            "dissipation identity requires χ ≡ 1 along the run".into(),
        ));
    }
    let delta = trace.lengths[0] - *trace.lengths.last().unwrap();
    let total = trace.dissipation_total();
    if delta.abs() < 1e-10 && total.abs() < 1e-10 {
        return Ok(0.0);
    }
    Ok((delta - total).abs() / delta.abs())
}
