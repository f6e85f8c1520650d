//! Geodesic flow of the Finsler metric: integration, exponential map,
//! distance by shooting, and closed-geodesic refinement.

mod estimate;
pub(crate) mod propagate;
mod shooting;

pub use estimate::injectivity_radius_estimate;
pub use shooting::{connect, distance, exp_map, log_map, refine_closed_geodesic, Connection};

use crate::error::{Error, Result};
use crate::metric::FinslerMetric;
use crate::sphere::{SpherePoint, TangentVector, Vec3};
use propagate::Propagator;
use serde::{Deserialize, Serialize};

/// A point of the unit tangent bundle SM = F⁻¹(1) (F-unit unless stated).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GeodesicState {
    pub point: SpherePoint,
    pub velocity: TangentVector,
}

impl GeodesicState {
    pub fn new(point: SpherePoint, velocity: TangentVector) -> Self {
        Self { point, velocity }
    }

    /// Builds the F-unit state at `point` in the given ambient direction.
    pub fn unit(metric: &FinslerMetric, point: SpherePoint, direction: Vec3) -> Result<Self> {
        let v = TangentVector::new(point, direction);
        let f = metric.eval(&point, &v.vec());
        if f < 1e-14 {
            return Err(Error::ZeroSection);
        }
        Ok(Self { point, velocity: v.scale(1.0 / f) })
    }

    pub fn f_norm(&self, metric: &FinslerMetric) -> f64 {
        metric.eval(&self.point, &self.velocity.vec())
    }

    /// The state with reversed velocity (same F-norm by reversibility).
    pub fn reversed(&self) -> Self {
        Self { point: self.point, velocity: self.velocity.reversed() }
    }

    /// Phase-space mismatch: product metric of round point distance and
    /// velocity angle.
    pub fn mismatch(&self, other: &GeodesicState) -> f64 {
        let dp = self.point.angle_to(&other.point);
        // Compare velocity directions after transporting by straight
        // projection; for nearby points this is accurate to O(dp²).
        let va = TangentVector::new(self.point, other.velocity.vec());
        let dv = self.velocity.angle_between(&va);
        (dp * dp + dv * dv).sqrt()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ArcSample {
    pub t: f64,
    pub state: GeodesicState,
}

/// A geodesic segment: initial state, F-arclength duration, and uniformly
/// spaced samples of the trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeodesicArc {
    pub initial: GeodesicState,
    pub duration: f64,
    pub samples: Vec<ArcSample>,
    /// max |F − 1| observed along the integration.
    pub speed_drift: f64,
}

impl GeodesicArc {
    pub fn endpoint(&self) -> &GeodesicState {
        &self.samples.last().expect("arc has samples").state
    }

    /// Endpoint-vs-start mismatch in state space.
    pub fn closure_mismatch(&self) -> f64 {
        self.initial.mismatch(self.endpoint())
    }

    /// Interpolated state at time t ∈ [0, duration] (cubic Hermite on
    /// positions with exact derivatives, cubic on velocities).
    pub fn state_at(&self, t: f64) -> GeodesicState {
        let n = self.samples.len();
        assert!(n >= 2, "arc needs at least two samples");
        let h = self.duration / (n as f64 - 1.0);
        let t = t.clamp(0.0, self.duration);
        let mut i = ((t / h).floor() as usize).min(n - 2);
        if t >= self.samples[n - 1].t {
            i = n - 2;
        }
        let s = ((t - self.samples[i].t) / h).clamp(0.0, 1.0);
        let (x0, v0) = sample_xv(&self.samples[i]);
        let (x1, v1) = sample_xv(&self.samples[i + 1]);
        // Hermite basis; dx/dt = v exactly along the flow.
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let x = h00 * x0 + h10 * h * v0 + h01 * x1 + h11 * h * v1;
        // Velocity by cubic through the four neighboring velocity samples.
        let v = interp_velocity(&self.samples, i, s);
        let point = SpherePoint::new(x).expect("interpolated point");
        GeodesicState::new(point, TangentVector::new(point, v))
    }

    /// Resamples positions into a closed loop with n samples.
    pub fn to_loop(&self, n: usize) -> Result<crate::curveflow::Loop> {
        let mut pts = Vec::with_capacity(n);
        for j in 0..n {
            let t = self.duration * (j as f64) / (n as f64);
            pts.push(self.state_at(t).point.coords());
        }
        crate::curveflow::Loop::new(pts)
    }
}

fn sample_xv(s: &ArcSample) -> (Vec3, Vec3) {
    (s.state.point.coords(), s.state.velocity.vec())
}

fn interp_velocity(samples: &[ArcSample], i: usize, s: f64) -> Vec3 {
    let n = samples.len();
    let grab = |j: isize| -> Vec3 {
        let j = j.clamp(0, n as isize - 1) as usize;
        samples[j].state.velocity.vec()
    };
    let (vm1, v0, v1, v2) = (
        grab(i as isize - 1),
        grab(i as isize),
        grab(i as isize + 1),
        grab(i as isize + 2),
    );
    // Catmull-Rom.
    0.5 * ((2.0 * v0)
        + (-vm1 + v1) * s
        + (2.0 * vm1 - 5.0 * v0 + 4.0 * v1 - v2) * s * s
        + (-vm1 + 3.0 * v0 - 3.0 * v1 + v2) * s * s * s)
}

/// Integrates the geodesic flow for F-time `t_end` with local tolerance `tol`,
/// sampling the trajectory uniformly.
pub fn flow(
    metric: &FinslerMetric,
    state: &GeodesicState,
    t_end: f64,
    tol: f64,
) -> Result<GeodesicArc> {
    flow_sampled(metric, state, t_end, tol, None)
}

/// As `flow`, with an explicit sample count.
pub fn flow_sampled(
    metric: &FinslerMetric,
    state: &GeodesicState,
    t_end: f64,
    tol: f64,
    n_samples: Option<usize>,
) -> Result<GeodesicArc> {
    if t_end <= 0.0 {
        return Err(Error::InvalidParameter("flow time must be positive".into()));
    }
    check_unit(metric, state)?;
    let n = n_samples.unwrap_or_else(|| ((t_end / 0.05).ceil() as usize).clamp(64, 4096));
    let mut prop = Propagator::new(metric, state, tol)?;
    let mut samples = Vec::with_capacity(n + 1);
    samples.push(ArcSample { t: 0.0, state: *state });
    for j in 1..=n {
        let t_j = t_end * (j as f64) / (n as f64);
        prop.advance_to(t_j)?;
        samples.push(ArcSample { t: t_j, state: prop.state() });
    }
    Ok(GeodesicArc {
        initial: *state,
        duration: t_end,
        samples,
        speed_drift: prop.speed_drift(),
    })
}

/// Endpoint of the flow without sampling overhead.
pub fn flow_endpoint(
    metric: &FinslerMetric,
    state: &GeodesicState,
    t_end: f64,
    tol: f64,
) -> Result<GeodesicState> {
    if t_end == 0.0 {
        return Ok(*state);
    }
    check_unit(metric, state)?;
    let mut prop = Propagator::new(metric, state, tol)?;
    prop.advance_to(t_end)?;
    Ok(prop.state())
}

fn check_unit(metric: &FinslerMetric, state: &GeodesicState) -> Result<()> {
    let f = state.f_norm(metric);
    if (f - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "flow requires an F-unit state (F = {f})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
