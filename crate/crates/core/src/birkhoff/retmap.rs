//! First return maps of the geodesic flow to the annulus section.

use super::AnnulusChart;
use crate::error::{Error, Result};
use crate::geodesic::propagate::Propagator;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReturnRecord {
    pub start: (f64, f64),
    pub hit: (f64, f64),
    pub flight_time: f64,
    pub crossing_count: u8,
}

#[derive(Debug, Clone)]
pub enum ReturnOutcome {
    Hit(ReturnRecord),
    /// The ray did not return within the flight-time cap (Birkhoff map
    /// undefined at this point up to T_cap).
    NoReturn { t_cap: f64 },
}

/// The Birkhoff map ψ = ψ₁∘ψ₀: two transversal crossings of γ.
pub fn return_map(chart: &AnnulusChart, t: f64, s: f64, t_cap: f64) -> Result<ReturnOutcome> {
    return_map_n(chart, t, s, t_cap, 2)
}

/// Shoots the geodesic from ν(t, s) and records the n-th transversal
/// crossing of γ, with the flight time localized by bisection.
pub fn return_map_n(
    chart: &AnnulusChart,
    t: f64,
    s: f64,
    t_cap: f64,
    n_crossings: u8,
) -> Result<ReturnOutcome> {
    if s.abs() >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "return map needs |s| < 1, got {s}"
        )));
    }
    let state = chart.nu(t, s)?;
    let mut prop = Propagator::new(chart.metric, &state, 1e-11)?;
    // Crossing detection needs the side sign sampled densely near γ.
    prop.set_max_step(0.02 * chart.period());

    let mut crossings = 0u8;
    let (mut prev_side, _, mut prev_dist) = chart.side_value(&prop.ambient().0);
    let mut prev_t = 0.0;
    // Leaving the section: the start sits on γ (side ≈ 0); arm once clear.
    let mut armed = prev_dist > 0.02;

    while prop.t < t_cap {
        let cp = prop.checkpoint();
        prop.step_once(t_cap)?;
        let (x, _) = prop.ambient();
        let (side, _, dist) = chart.side_value(&x);
        let near = dist < 0.25;
        if !armed {
            if dist > 0.02 {
                armed = true;
            }
        } else if near && prev_dist < 0.25 && prev_side * side < 0.0 && prev_side != 0.0 {
            // Bracketed transversal crossing: bisect the flight time.
            let t_now = prop.t;
            let (t_hit, x_hit, v_hit) = bisect_crossing(chart, &mut prop, &cp, prev_t, t_now)?;
            crossings += 1;
            if crossings == n_crossings {
                let (foot_t, foot_d) = chart.foot(&x_hit);
                if foot_d > 1e-8 {
                    return Err(Error::Chart(format!(
                        "crossing point off the base curve by {foot_d:.3e}"
                    )));
                }
                let s_hit = chart.s_of(foot_t, &v_hit)?;
                if s_hit.abs() > 1.0 - 1e-6 {
                    return Err(Error::GrazingEvent { s_hit });
                }
                return Ok(ReturnOutcome::Hit(ReturnRecord {
                    start: (t.rem_euclid(chart.period()), s),
                    hit: (foot_t, s_hit),
                    flight_time: t_hit,
                    crossing_count: n_crossings,
                }));
            }
            // Continue past this crossing; disarm until clear of γ again.
            armed = false;
        }
        prev_side = side;
        prev_dist = dist;
        prev_t = prop.t;
    }
    Ok(ReturnOutcome::NoReturn { t_cap })
}

/// Bisection of a bracketed side-sign change, re-advancing from the step
/// checkpoint; returns (flight time, hit point, hit velocity).
fn bisect_crossing(
    chart: &AnnulusChart,
    prop: &mut Propagator,
    cp: &crate::geodesic::propagate::PropagatorCheckpoint,
    t_a: f64,
    t_b: f64,
) -> Result<(f64, crate::sphere::Vec3, crate::sphere::Vec3)> {
    let resume = prop.checkpoint();
    let side_at = |prop: &mut Propagator, tt: f64| -> Result<f64> {
        prop.restore(cp);
        prop.advance_to(tt)?;
        Ok(chart.side_value(&prop.ambient().0).0)
    };
    let (mut ta, mut tb) = (t_a, t_b);
    let mut fa = side_at(prop, ta)?;
    while tb - ta > 1e-10 {
        let tm = 0.5 * (ta + tb);
        let fm = side_at(prop, tm)?;
        if fa * fm <= 0.0 {
            tb = tm;
        } else {
            ta = tm;
            fa = fm;
        }
    }
    let t_hit = 0.5 * (ta + tb);
    prop.restore(cp);
    prop.advance_to(t_hit)?;
    let (x, v) = prop.ambient();
    prop.restore(&resume);
    Ok((t_hit, x, v))
}
