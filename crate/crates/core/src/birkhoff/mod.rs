//! Surface-of-section machinery over a simple closed geodesic: annulus
//! coordinates, first return maps, boundary extension by conjugate times,
//! twist detection, and periodic-point search.
//!
//! The annulus coordinate of a unit vector v crossing γ at γ(t) is
//! s = G_v(γ(t), v)·γ̇(t); in these coordinates the section form pulls back
//! to s dt, so return maps are area-preserving and exact.

mod retmap;
mod twist;

pub use retmap::{return_map, return_map_n, ReturnOutcome, ReturnRecord};
pub use twist::{
    boundary_extension, lift_table_cached, periodic_points, twist_check, BoundaryExtension,
    LiftTable, PeriodicPoint, PeriodicPoints, TwistReport,
};

use crate::error::{Error, Result};
use crate::geodesic::{GeodesicArc, GeodesicState};
use crate::jacobi;
use crate::metric::FinslerMetric;
use crate::sphere::{Chart, SpherePoint, TangentVector, Vec3};
use std::sync::OnceLock;

/// Which side of γ (relative to the round normal Jγ̇) is called B₀, i.e.
/// where the s ∈ (−1, 1) directions point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
}

/// Annulus coordinates (t, s) over a simple closed unit-speed geodesic.
pub struct AnnulusChart<'m> {
    pub metric: &'m FinslerMetric,
    base: GeodesicArc,
    period: f64,
    side: Side,
    /// Dense samples of γ and γ̇ at uniform arclength.
    pos: Vec<Vec3>,
    vel: Vec<Vec3>,
    pub(crate) extension: OnceLock<BoundaryExtension>,
    pub(crate) lift_table: OnceLock<twist::LiftTable>,
}

const DENSE: usize = 1024;

impl<'m> AnnulusChart<'m> {
    /// Builds the chart over a simple closed geodesic (checked).
    pub fn new(metric: &'m FinslerMetric, gamma: &GeodesicArc) -> Result<Self> {
        Self::with_side(metric, gamma, Side::Positive)
    }

    pub fn with_side(
        metric: &'m FinslerMetric,
        gamma: &GeodesicArc,
        side: Side,
    ) -> Result<Self> {
        if gamma.closure_mismatch() > 1e-6 {
            return Err(Error::Chart(format!(
                "base curve is not closed (mismatch {:.3e})",
                gamma.closure_mismatch()
            )));
        }
        if gamma.speed_drift > 1e-6 {
            return Err(Error::Chart("base curve is not unit speed".into()));
        }
        let as_loop = gamma.to_loop(256)?;
        if !as_loop.is_embedded() {
            return Err(Error::Chart("base geodesic is not simple".into()));
        }
        let mut pos = Vec::with_capacity(DENSE + 1);
        let mut vel = Vec::with_capacity(DENSE + 1);
        for j in 0..=DENSE {
            let t = gamma.duration * j as f64 / DENSE as f64;
            let st = gamma.state_at(t);
            pos.push(st.point.coords());
            vel.push(st.velocity.vec());
        }
        let chart = Self {
            metric,
            base: gamma.clone(),
            period: gamma.duration,
            side,
            pos,
            vel,
            extension: OnceLock::new(),
            lift_table: OnceLock::new(),
        };
        chart.verify_monotone()?;
        Ok(chart)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn base(&self) -> &GeodesicArc {
        &self.base
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// γ(t) and γ̇(t) by Hermite interpolation of the dense table. The point
    /// is re-projected to the sphere and the velocity re-normalized to
    /// F-unit, so s_of(γ̇(t)) = 1 holds to machine precision.
    pub fn gamma(&self, t: f64) -> (Vec3, Vec3) {
        let t = t.rem_euclid(self.period);
        let h = self.period / DENSE as f64;
        let j = ((t / h).floor() as usize).min(DENSE - 1);
        let s = (t - j as f64 * h) / h;
        let (x0, v0) = (self.pos[j], self.vel[j]);
        let (x1, v1) = (self.pos[j + 1], self.vel[j + 1]);
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let x = (h00 * x0 + h10 * h * v0 + h01 * x1 + h11 * h * v1).normalize();
        // Velocity by a cubic through the neighbors.
        let jm = if j == 0 { DENSE - 1 } else { j - 1 };
        let jp = (j + 2).min(DENSE);
        let v = 0.5
            * ((2.0 * v0)
                + (-self.vel[jm] + v1) * s
                + (2.0 * self.vel[jm] - 5.0 * v0 + 4.0 * v1 - self.vel[jp]) * s2
                + (-self.vel[jm] + 3.0 * v0 - 3.0 * v1 + self.vel[jp]) * s3);
        let v = v - x * v.dot(&x);
        let f = self.metric.eval_raw(&x, &v);
        (x, v / f)
    }

    /// Inward round normal: the unit g-normal pointing into B₀.
    pub fn normal(&self, t: f64) -> Vec3 {
        let (x, v) = self.gamma(t);
        let n = x.cross(&v) / x.cross(&v).norm();
        match self.side {
            Side::Positive => n,
            Side::Negative => -n,
        }
    }

    /// The annulus coordinate s of an F-unit vector at γ(t):
    /// s = G_v(γ(t), v)·γ̇(t).
    pub fn s_of(&self, t: f64, v: &Vec3) -> Result<f64> {
        let (x, gdot) = self.gamma(t);
        let base = SpherePoint::new(x)?;
        let chart = Chart::new(base);
        let q = chart.map(&x);
        let w = chart.pull_vector(&q, v);
        let (_, _, g_w) = self.metric.chart_g1(&chart, &q, &w)?;
        let gd = chart.pull_vector(&q, &gdot);
        Ok(g_w.dot(&gd))
    }

    /// The unique F-unit vector ν(t, s) at γ(t) pointing into B₀ (or tangent
    /// at s = ±1) with annulus coordinate s.
    pub fn nu(&self, t: f64, s: f64) -> Result<GeodesicState> {
        if !(-1.0..=1.0).contains(&s) {
            return Err(Error::InvalidParameter(format!("|s| ≤ 1 required, got {s}")));
        }
        let (x, gdot) = self.gamma(t);
        let base = SpherePoint::new(x)?;
        let tau = TangentVector::new(base, gdot);
        let tau_hat = tau.vec() / tau.norm();
        let n_hat = self.normal(t);
        let dir = |phi: f64| tau_hat * phi.cos() + n_hat * phi.sin();
        let s_at = |phi: f64| -> Result<f64> {
            let d = dir(phi);
            let f = self.metric.eval(&base, &d);
            self.s_of(t, &(d / f))
        };
        // s(φ) decreases monotonically from 1 at φ=0 to −1 at φ=π.
        let (mut lo, mut hi) = (0.0, std::f64::consts::PI);
        let mut s_lo = 1.0;
        let mut s_hi = -1.0;
        for _ in 0..90 {
            let mid = 0.5 * (lo + hi);
            let sm = s_at(mid)?;
            if (hi - lo) < 1e-14 {
                break;
            }
            if sm >= s {
                lo = mid;
                s_lo = sm;
            } else {
                hi = mid;
                s_hi = sm;
            }
        }
        let _ = (s_lo, s_hi);
        let phi = 0.5 * (lo + hi);
        let d = dir(phi);
        let f = self.metric.eval(&base, &d);
        Ok(GeodesicState::new(base, TangentVector::new(base, d / f)))
    }

    /// Chart monotonicity sanity: s(φ) strictly decreasing along the fiber.
    fn verify_monotone(&self) -> Result<()> {
        for &t in &[0.0, 0.31 * self.period, 0.77 * self.period] {
            let (x, gdot) = self.gamma(t);
            let base = SpherePoint::new(x)?;
            let tau = TangentVector::new(base, gdot);
            let tau_hat = tau.vec() / tau.norm();
            let n_hat = self.normal(t);
            let mut prev = f64::INFINITY;
            for k in 0..=64 {
                let phi = std::f64::consts::PI * k as f64 / 64.0;
                let d = tau_hat * phi.cos() + n_hat * phi.sin();
                let f = self.metric.eval(&base, &d);
                let s = self.s_of(t, &(d / f))?;
                if s > prev + 1e-9 {
                    return Err(Error::Chart(format!(
                        "fiber coordinate not monotone at t = {t:.6} (s jumped {prev} → {s})"
                    )));
                }
                prev = s;
            }
            if (self.s_of(t, &(gdot / self.metric.eval(&base, &gdot)))? - 1.0).abs() > 1e-10 {
                return Err(Error::Chart("s(γ̇) ≠ 1".into()));
            }
        }
        Ok(())
    }

    /// Nearest-point arclength parameter and distance of x to γ.
    pub fn foot(&self, x: &Vec3) -> (f64, f64) {
        let mut best = (0usize, f64::INFINITY);
        for (j, p) in self.pos.iter().enumerate().take(DENSE) {
            let d = (x - p).norm_squared();
            if d < best.1 {
                best = (j, d);
            }
        }
        let h = self.period / DENSE as f64;
        let mut t = best.0 as f64 * h;
        // Newton on ⟨x − γ(t), γ̇(t)⟩ = 0.
        for _ in 0..8 {
            let (p, v) = self.gamma(t);
            let r = x - p;
            let f = r.dot(&v);
            // γ̈ is O(1); drop it and use the dominant -|v|² term.
            let df = -v.norm_squared();
            let step = f / df;
            t -= step;
            if step.abs() < 1e-13 {
                break;
            }
        }
        let (p, _) = self.gamma(t);
        (t.rem_euclid(self.period), (x - p).norm())
    }

    /// Signed side function: g-inner product of (x − foot) with the inward
    /// normal at the foot.
    pub fn side_value(&self, x: &Vec3) -> (f64, f64, f64) {
        let (t, d) = self.foot(x);
        let n = self.normal(t);
        let (p, _) = self.gamma(t);
        let sgn = (x - p).dot(&n);
        (sgn, t, d)
    }

    /// Conjugate-time tables along the base geodesic (cached).
    pub fn conjugate_tables(&self) -> Result<&BoundaryExtension> {
        if let Some(ext) = self.extension.get() {
            return Ok(ext);
        }
        let ext = twist::compute_extension(self)?;
        let _ = self.extension.set(ext);
        Ok(self.extension.get().unwrap())
    }

    pub(crate) fn jacobi_t2(&self, t: f64) -> Result<Option<(f64, f64)>> {
        let state = {
            let (x, v) = self.gamma(t);
            let base = SpherePoint::new(x)?;
            GeodesicState::unit(self.metric, base, v)?
        };
        let horizon = 3.0 * self.period;
        let arc_stub = &self.base;
        let _ = arc_stub;
        let sol = jacobi::first_two_zeros(self.metric, &state, horizon)?;
        Ok(sol)
    }
}
