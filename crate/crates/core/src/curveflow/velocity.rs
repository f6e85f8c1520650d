//! The normal velocity V of the length anti-gradient, computed two ways.
//!
//! Path A evaluates the Euler–Lagrange covector (d/du F_v − F_x) chartwise
//! along the curve and pairs it with the positive normal. Path B assembles
//! the quasilinear form V = A(x,τ)κ + B(x,τ) with A = F_vv[Jτ,Jτ] and the κ
//! computed extrinsically. The two must agree; path B is returned.

use super::Loop;
use crate::error::{Error, Result};
use crate::metric::FinslerMetric;
use crate::sphere::{rot90, Chart, SpherePoint, Vec2};

/// Path-B velocity with the diffusion coefficients (fast inner-loop form).
pub(crate) struct VelocityData {
    pub v: Vec<f64>,
    pub a_max: f64,
    pub max_abs_v: f64,
}

pub(crate) fn velocity_fast(metric: &FinslerMetric, lp: &Loop) -> Result<VelocityData> {
    let n = lp.len();
    let mut v = Vec::with_capacity(n);
    let mut a_max = 0.0f64;
    let mut max_abs_v = 0.0f64;
    for i in 0..n {
        let (vi, ai) = velocity_b_at(metric, lp, i)?;
        a_max = a_max.max(ai);
        max_abs_v = max_abs_v.max(vi.abs());
        v.push(vi);
    }
    Ok(VelocityData { v, a_max, max_abs_v })
}

/// V and A at one sample via the A·κ + B decomposition.
fn velocity_b_at(metric: &FinslerMetric, lp: &Loop, i: usize) -> Result<(f64, f64)> {
    let x = SpherePoint::new(lp.samples()[i])?;
    let chart = Chart::new(x);
    let q = chart.map(&x.coords());
    let tau_amb = lp.tangent(i) / lp.speed(i);
    let tau = chart.pull_vector(&q, &tau_amb);
    let fs = metric.chart_f_stack(&chart, &q, &tau)?;
    let jtau = rot90(&tau);
    let a = (fs.f_ww * jtau).dot(&jtau);
    // B = −A·g(Γ[τ,τ], Jτ) + F_xv[τ, Jτ] − F_x·Jτ. The Christoffel term
    // vanishes at the chart center but is kept for off-center evaluation.
    let gamma = chart.christoffel(&q, &tau);
    let lam2 = chart.conformal_factor(&q).powi(2);
    let christoffel_term = lam2 * gamma.dot(&jtau);
    let mixed = (fs.f_qw * jtau).dot(&tau);
    let base = fs.f_q.dot(&jtau);
    let b = -a * christoffel_term + mixed - base;
    Ok((a * lp.curvature(i) + b, a))
}

/// Path-A velocity at one sample: chartwise EL covector paired with the
/// normal, divided by the g-speed.
fn velocity_a_at(metric: &FinslerMetric, lp: &Loop, i: usize) -> Result<f64> {
    let n = lp.len() as isize;
    let h = 1.0 / n as f64;
    let x = SpherePoint::new(lp.samples()[i as usize])?;
    let chart = Chart::new(x);
    // Chart positions of the 9-sample stencil around i.
    let q_at = |j: isize| -> Vec2 {
        let idx = (i as isize + j).rem_euclid(n) as usize;
        chart.map(&lp.samples()[idx])
    };
    let qdot_at = |j: isize| -> Vec2 {
        (q_at(j - 2) - 8.0 * q_at(j - 1) + 8.0 * q_at(j + 1) - q_at(j + 2)) / (12.0 * h)
    };
    let f_w_at = |j: isize| -> Result<Vec2> {
        let (_, _, f_w) = crate::metric::chart_f1(metric, &chart, &q_at(j), &qdot_at(j))?;
        Ok(f_w)
    };
    let d_fv = (f_w_at(-2)? - 8.0 * f_w_at(-1)? + 8.0 * f_w_at(1)? - f_w_at(2)?) / (12.0 * h);
    let q0 = q_at(0);
    let w0 = qdot_at(0);
    let (_, f_q, _) = crate::metric::chart_f1(metric, &chart, &q0, &w0)?;
    let el = d_fv - f_q;
    let lam = chart.conformal_factor(&q0);
    let g_speed = lam * w0.norm();
    let n_chart = rot90(&w0) / g_speed;
    Ok(el.dot(&n_chart) / g_speed)
}

/// Maximum deviation between the two velocity routes, with no threshold
/// applied (the flow driver scales the tolerance by the velocity magnitude).
pub(crate) fn dual_path_deviation(metric: &FinslerMetric, lp: &Loop) -> Result<f64> {
    let data = velocity_fast(metric, lp)?;
    let mut max_dev = 0.0f64;
    for i in 0..lp.len() {
        let va = velocity_a_at(metric, lp, i)?;
        max_dev = max_dev.max((va - data.v[i]).abs());
    }
    Ok(max_dev)
}

/// Computes V two ways and reconciles; returns the path-B values together
/// with the maximum deviation between the paths.
pub fn normal_velocity_checked(metric: &FinslerMetric, lp: &Loop) -> Result<(Vec<f64>, f64)> {
    if !lp.is_embedded() {
        return Err(Error::InvalidParameter(
            "normal velocity requires an embedded loop".into(),
        ));
    }
    let data = velocity_fast(metric, lp)?;
    let mut max_dev = 0.0f64;
    let mut worst = 0usize;
    for i in 0..lp.len() {
        let va = velocity_a_at(metric, lp, i)?;
        let dev = (va - data.v[i]).abs();
        if dev > max_dev {
            max_dev = dev;
            worst = i;
        }
    }
    if max_dev > 1e-4 {
        return Err(Error::VelocityInconsistency { max_dev, at: worst });
    }
    Ok((data.v, max_dev))
}

/// The normal velocity field V_γ. Cross-checked against the independent
/// Euler–Lagrange route; disagreement beyond 1e-4 is an error.
pub fn normal_velocity(metric: &FinslerMetric, lp: &Loop) -> Result<Vec<f64>> {
    normal_velocity_checked(metric, lp).map(|(v, _)| v)
}
