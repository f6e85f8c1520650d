//! Heuristic lower bound for the injectivity radius.

use super::{flow_sampled, GeodesicState};
use crate::metric::{fibonacci_point, FinslerMetric};
use crate::sphere::SpherePoint;

/// Conservative injectivity radius estimate: 0.9 × min over a grid of unit
/// states of the first conjugate time and half the shortest geodesic loop
/// detected by a coarse search. Heuristic, not certified; falls back to
/// π/2 × (min F over the round unit bundle) when the searches fail.
pub fn injectivity_radius_estimate(metric: &FinslerMetric) -> f64 {
    *metric.injectivity_cache().get_or_init(|| estimate(metric))
}

fn estimate(metric: &FinslerMetric) -> f64 {
    // Scale reference: F over round-unit vectors.
    let mut f_min = f64::INFINITY;
    let mut f_max: f64 = 0.0;
    for i in 0..32 {
        let x = fibonacci_point(i, 32);
        let base = SpherePoint::new(x).unwrap();
        for k in 0..8 {
            let chart = crate::sphere::Chart::new(base);
            let q = chart.map(&x);
            let phi = std::f64::consts::PI * (k as f64) / 8.0;
            let w = crate::sphere::Vec2::new(phi.cos(), phi.sin()) / chart.conformal_factor(&q);
            let f = metric.eval_raw(&x, &chart.push_vector(&q, &w));
            f_min = f_min.min(f);
            f_max = f_max.max(f);
        }
    }
    let fallback = std::f64::consts::FRAC_PI_2 * f_min;
    let horizon = 2.5 * std::f64::consts::PI * f_max;

    let mut bound = f64::INFINITY;
    let mut any = false;
    for i in 0..12 {
        let x = SpherePoint::new(fibonacci_point(i, 12)).unwrap();
        for k in 0..6 {
            let chart = crate::sphere::Chart::new(x);
            let q = chart.map(&x.coords());
            let phi = std::f64::consts::PI * (k as f64) / 6.0;
            let w = crate::sphere::Vec2::new(phi.cos(), phi.sin());
            let dir = chart.push_vector(&q, &w);
            let Ok(state) = GeodesicState::unit(metric, x, dir) else { continue };
            // First conjugate time.
            if let Ok(Some(t1)) = crate::jacobi::first_conjugate_time(metric, &state, horizon) {
                bound = bound.min(t1);
                any = true;
            }
            // Shortest detected geodesic loop through x.
            if let Some(loop_len) = shortest_loop(metric, &state, horizon) {
                bound = bound.min(0.5 * loop_len);
                any = true;
            }
        }
    }
    if !any || !bound.is_finite() {
        return fallback;
    }
    0.9 * bound
}

/// Coarse first-return-to-basepoint search along one geodesic.
fn shortest_loop(metric: &FinslerMetric, state: &GeodesicState, horizon: f64) -> Option<f64> {
    let arc = flow_sampled(metric, state, horizon, 1e-9, Some(512)).ok()?;
    let x0 = state.point;
    let mut best: Option<f64> = None;
    let mut prev_d = 0.0;
    let mut decreasing = false;
    for s in arc.samples.iter() {
        let d = s.state.point.angle_to(&x0);
        if s.t > 0.3 {
            if d < prev_d {
                decreasing = true;
            } else if decreasing {
                // Local minimum passed at the previous sample.
                if prev_d < 0.05 {
                    best = Some(match best {
                        Some(b) if b < s.t => b,
                        _ => s.t,
                    });
                    break;
                }
                decreasing = false;
            }
        }
        prev_d = d;
    }
    best
}
