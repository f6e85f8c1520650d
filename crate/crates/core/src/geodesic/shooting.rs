//! Exponential map, Finsler distance by Newton shooting, and
//! closed-geodesic refinement by multiple shooting.

use super::{flow_endpoint, flow_sampled, GeodesicArc, GeodesicState};
use crate::error::{Error, Result};
use crate::metric::FinslerMetric;
use crate::sphere::{Chart, Mat2, SpherePoint, TangentVector, Vec2, Vec3};

const FLOW_TOL: f64 = 1e-11;

/// Endpoint of the geodesic from x with initial velocity v, flowed for
/// F-time F(x, v). The zero vector maps to x itself.
pub fn exp_map(metric: &FinslerMetric, x: &SpherePoint, v: &TangentVector) -> Result<SpherePoint> {
    let r = metric.eval(x, &v.vec());
    if r < 1e-14 {
        return Ok(*x);
    }
    let state = GeodesicState::new(*x, v.scale(1.0 / r));
    Ok(flow_endpoint(metric, &state, r, FLOW_TOL)?.point)
}

/// Round-metric logarithm: the tangent vector at x pointing toward y with
/// length equal to the angular distance. Zero for coincident points; an
/// arbitrary direction for antipodal ones.
pub fn log_map(x: &SpherePoint, y: &SpherePoint) -> TangentVector {
    let theta = x.angle_to(y);
    let dir = TangentVector::new(*x, y.coords());
    if dir.norm() < 1e-12 {
        // Coincident or antipodal.
        let fallback = TangentVector::new(*x, orthogonal_to(&x.coords()));
        return fallback.scale(theta / fallback.norm().max(1e-300));
    }
    dir.scale(theta / dir.norm())
}

fn orthogonal_to(x: &Vec3) -> Vec3 {
    let seed = if x.x.abs() <= x.y.abs() && x.x.abs() <= x.z.abs() {
        Vec3::x()
    } else if x.y.abs() <= x.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    (seed - x * seed.dot(x)).normalize()
}

/// Result of a successful connecting-geodesic solve.
#[derive(Debug, Clone)]
pub struct Connection {
    /// Initial velocity (F-length equals the distance).
    pub initial: TangentVector,
    /// F-unit velocity at arrival.
    pub arrival: TangentVector,
    pub length: f64,
}

/// Newton shooting for the connecting geodesic, seeded with the round
/// logarithm. Residuals are measured in the tangent plane at y.
fn shoot_connection(
    metric: &FinslerMetric,
    x: &SpherePoint,
    y: &SpherePoint,
    seed: &TangentVector,
) -> Result<Connection> {
    let chart_y = Chart::new(*y);
    let qy = chart_y.map(&y.coords());
    // Unknown: chart components of the initial velocity in a tangent basis at x.
    let ex = orthogonal_to(&x.coords());
    let ey = x.coords().cross(&ex);
    let mut u = Vec2::new(seed.vec().dot(&ex), seed.vec().dot(&ey));

    let endpoint_full = |u: &Vec2| -> Result<(Vec2, GeodesicState, f64)> {
        let v = TangentVector::new(*x, ex * u.x + ey * u.y);
        let r = metric.eval(x, &v.vec());
        if r < 1e-14 {
            // Degenerate shot: residual is just the offset to y.
            let res = chart_y.map(&x.coords()) - qy;
            let state = GeodesicState::new(*x, v);
            return Ok((res, state, 0.0));
        }
        let state = GeodesicState::new(*x, v.scale(1.0 / r));
        let end = flow_endpoint(metric, &state, r, FLOW_TOL)?;
        if end.point.coords().dot(&chart_y.pole()) < -0.5 {
            // Shot landed near the antipode of y; treat as non-convergent.
            return Err(Error::NoConnection { iterations: 0, residual: f64::INFINITY });
        }
        Ok((chart_y.map(&end.point.coords()) - qy, end, r))
    };

    let mut last_res = f64::INFINITY;
    for it in 0..50 {
        let (res, end, r) = endpoint_full(&u)?;
        let rn = res.norm();
        last_res = rn;
        if rn < 1e-11 {
            let v = TangentVector::new(*x, ex * u.x + ey * u.y);
            return Ok(Connection { initial: v, arrival: end.velocity, length: r });
        }
        // Finite-difference Jacobian of the endpoint chart residual.
        let h = 1e-6 * u.norm().max(1e-3);
        let mut jac = Mat2::zeros();
        for k in 0..2 {
            let mut up = u;
            let mut um = u;
            up[k] += h;
            um[k] -= h;
            let (rp, _, _) = endpoint_full(&up)?;
            let (rm, _, _) = endpoint_full(&um)?;
            let col = (rp - rm) / (2.0 * h);
            jac[(0, k)] = col.x;
            jac[(1, k)] = col.y;
        }
        let det = jac.determinant();
        if det.abs() < 1e-16 {
            return Err(Error::NoConnection { iterations: it, residual: rn });
        }
        let delta = Vec2::new(
            (jac[(1, 1)] * res.x - jac[(0, 1)] * res.y) / det,
            (jac[(0, 0)] * res.y - jac[(1, 0)] * res.x) / det,
        );
        // Damp very large Newton corrections.
        let step = if delta.norm() > 1.0 { delta / delta.norm() } else { delta };
        u -= step;
    }
    Err(Error::NoConnection { iterations: 50, residual: last_res })
}

/// Connecting geodesic with the round-logarithm seed and a fan fallback for
/// near-antipodal configurations.
pub fn connect(metric: &FinslerMetric, x: &SpherePoint, y: &SpherePoint) -> Result<Connection> {
    let theta = x.angle_to(y);
    let primary = log_map(x, y);
    let mut candidates: Vec<Connection> = Vec::new();
    let mut last_err = None;
    match shoot_connection(metric, x, y, &primary) {
        Ok(c) => candidates.push(c),
        Err(e) => last_err = Some(e),
    }
    if candidates.is_empty() || theta > std::f64::consts::PI - 0.3 {
        // Fan of seeds around the circle of directions.
        let ex = orthogonal_to(&x.coords());
        let ey = x.coords().cross(&ex);
        let r0 = if theta > 1e-6 { theta } else { 1.0 };
        for k in 0..8 {
            let phi = 2.0 * std::f64::consts::PI * (k as f64) / 8.0;
            let seed = TangentVector::new(*x, (ex * phi.cos() + ey * phi.sin()) * r0);
            if let Ok(c) = shoot_connection(metric, x, y, &seed) {
                candidates.push(c);
            }
        }
    }
    candidates
        .into_iter()
        .min_by(|a, b| a.length.partial_cmp(&b.length).unwrap())
        .ok_or_else(|| {
            last_err.unwrap_or(Error::NoConnection { iterations: 0, residual: f64::NAN })
        })
}

/// Finsler distance d(x, y) for points within the working injectivity range
/// (minimizing geodesic found by shooting).
pub fn distance(metric: &FinslerMetric, x: &SpherePoint, y: &SpherePoint) -> Result<f64> {
    if x.angle_to(y) < 1e-14 {
        return Ok(0.0);
    }
    Ok(connect(metric, x, y)?.length)
}

/// Multiple-shooting refinement of a near-geodesic loop into a closed
/// geodesic. The seed must satisfy max |V_γ| < 0.1.
pub fn refine_closed_geodesic(
    metric: &FinslerMetric,
    seed: &crate::curveflow::Loop,
    tol: f64,
) -> Result<GeodesicArc> {
    let v = crate::curveflow::normal_velocity(metric, seed)?;
    let max_v = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if max_v >= 0.1 {
        return Err(Error::InvalidParameter(format!(
            "refinement seed too far from a geodesic (max |V| = {max_v:.3})"
        )));
    }
    let total = seed.f_length(metric);
    let k = 8usize;
    let n = seed.len();

    // Nodes at equal F-arclength along the seed; unknowns are two chart
    // offsets and one velocity angle per node, plus the period.
    let mut node_pts: Vec<SpherePoint> = Vec::with_capacity(k);
    let mut node_dirs: Vec<Vec3> = Vec::with_capacity(k);
    {
        let lengths = seed.f_arclengths(metric);
        for j in 0..k {
            let target = total * (j as f64) / (k as f64);
            let mut i = 0;
            while i + 1 < n && lengths[i + 1] < target {
                i += 1;
            }
            let pt = SpherePoint::new(seed.samples()[i]).unwrap();
            node_pts.push(pt);
            node_dirs.push(seed.tangent(i));
        }
    }
    let charts: Vec<Chart> = node_pts.iter().map(|p| Chart::new(*p)).collect();
    let frames: Vec<(Vec3, Vec3)> = node_pts
        .iter()
        .zip(&node_dirs)
        .map(|(p, d)| {
            let e1 = (d - p.coords() * d.dot(&p.coords())).normalize();
            let e2 = p.coords().cross(&e1);
            (e1, e2)
        })
        .collect();

    // Unknown vector: [dq₁, dq₂, φ]ₖ …, T.
    let dim = 3 * k + 1;
    let mut z = vec![0.0; dim];
    z[dim - 1] = total;

    let node_state = |z: &[f64], j: usize| -> Result<GeodesicState> {
        let q0 = charts[j].map(&node_pts[j].coords());
        let q = q0 + Vec2::new(z[3 * j], z[3 * j + 1]);
        let x = SpherePoint::new(charts[j].unmap(&q))?;
        let (e1, e2) = frames[j];
        // Keep the frame meaningful after the point moved: re-project.
        let d1 = TangentVector::new(x, e1);
        let d2 = TangentVector::new(x, e2);
        let phi = z[3 * j + 2];
        let dir = d1.vec() * phi.cos() + d2.vec() * phi.sin();
        GeodesicState::unit(metric, x, dir)
    };

    let residual = |z: &[f64]| -> Result<Vec<f64>> {
        let t_total = z[dim - 1];
        if t_total <= 0.0 {
            return Err(Error::RefinementFailed { residuals: vec![f64::NAN] });
        }
        let mut res = vec![0.0; dim];
        for j in 0..k {
            let from = node_state(z, j)?;
            let to = node_state(z, (j + 1) % k)?;
            let end = flow_endpoint(metric, &from, t_total / k as f64, FLOW_TOL)?;
            let jn = (j + 1) % k;
            let dq = charts[jn].map(&end.point.coords()) - charts[jn].map(&to.point.coords());
            res[3 * j] = dq.x;
            res[3 * j + 1] = dq.y;
            // Velocity mismatch as signed angle in the target tangent plane.
            let ve = TangentVector::new(to.point, end.velocity.vec());
            let cross = to.velocity.vec().cross(&ve.vec()).dot(&to.point.coords());
            let dot = to.velocity.vec().dot(&ve.vec());
            res[3 * j + 2] = cross.atan2(dot);
        }
        // Phase condition: first node stays on its transversal line.
        res[dim - 1] = {
            let s0 = node_state(z, 0)?;
            let (e1, _) = frames[0];
            (s0.point.coords() - node_pts[0].coords()).dot(&e1)
        };
        Ok(res)
    };

    let mut history = Vec::new();
    for _ in 0..40 {
        let r = residual(&z)?;
        let rn = r.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        history.push(rn);
        if rn < tol {
            // Build the final closed arc from node 0.
            let state0 = node_state(&z, 0)?;
            let t_total = z[dim - 1];
            let arc = flow_sampled(metric, &state0, t_total, FLOW_TOL, Some(1024))?;
            return Ok(arc);
        }
        if history.len() > 6 && rn > history[history.len() - 4] * 0.9 {
            return Err(Error::RefinementFailed { residuals: history });
        }
        // Dense FD Jacobian.
        let mut jac = nalgebra::DMatrix::<f64>::zeros(dim, dim);
        for c in 0..dim {
            let h = if c == dim - 1 { 1e-7 * total } else { 1e-7 };
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[c] += h;
            zm[c] -= h;
            let rp = residual(&zp)?;
            let rm = residual(&zm)?;
            for row in 0..dim {
                jac[(row, c)] = (rp[row] - rm[row]) / (2.0 * h);
            }
        }
        let rhs = nalgebra::DVector::from_column_slice(&r);
        let lu = jac.lu();
        let Some(delta) = lu.solve(&rhs) else {
            return Err(Error::RefinementFailed { residuals: history });
        };
        for i in 0..dim {
            z[i] -= delta[i];
        }
    }
    Err(Error::RefinementFailed { residuals: history })
}
