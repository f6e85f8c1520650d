//! Points, tangent vectors, and stereographic charts on the unit 2-sphere.

use crate::error::{Error, Result};
use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// A point on the unit sphere, stored as a unit vector in ambient 3-space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    coords: Vec3,
}

impl SpherePoint {
    /// Normalizes the given ambient vector onto the sphere.
    pub fn new(coords: Vec3) -> Result<Self> {
        let n = coords.norm();
        if n < 1e-14 {
            return Err(Error::InvalidParameter(
                "cannot normalize the zero vector onto the sphere".into(),
            ));
        }
        // Idempotent: re-reading serialized points keeps them bit-exact.
        if (n - 1.0).abs() <= 1e-12 {
            return Ok(Self { coords });
        }
        Ok(Self { coords: coords / n })
    }

    /// Builds a point from components, normalizing.
    pub fn from_xyz(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(Vec3::new(x, y, z))
    }

    pub fn coords(&self) -> Vec3 {
        self.coords
    }

    pub fn antipode(&self) -> SpherePoint {
        SpherePoint { coords: -self.coords }
    }

    /// Round-metric (angular) distance to another point.
    pub fn angle_to(&self, other: &SpherePoint) -> f64 {
        let d = self.coords.dot(&other.coords).clamp(-1.0, 1.0);
        d.acos()
    }
}

/// A tangent vector to the sphere: an ambient vector orthogonal to its base point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: SpherePoint,
    vec: Vec3,
}

impl TangentVector {
    /// Projects `vec` onto the tangent plane at `base`.
    pub fn new(base: SpherePoint, vec: Vec3) -> Self {
        let x = base.coords();
        let v = vec - x * vec.dot(&x);
        Self { base, vec: v }
    }

    pub fn vec(&self) -> Vec3 {
        self.vec
    }

    /// Rotation by +π/2 in the round metric: Jv = base × vec.
    pub fn rotate90(&self) -> TangentVector {
        TangentVector {
            base: self.base,
            vec: self.base.coords().cross(&self.vec),
        }
    }

    pub fn norm(&self) -> f64 {
        self.vec.norm()
    }

    pub fn scale(&self, s: f64) -> TangentVector {
        TangentVector { base: self.base, vec: self.vec * s }
    }

    pub fn reversed(&self) -> TangentVector {
        self.scale(-1.0)
    }

    /// Angle between two tangent vectors at the same base point.
    pub fn angle_between(&self, other: &TangentVector) -> f64 {
        let a = self.vec.norm();
        let b = other.vec.norm();
        if a < 1e-15 || b < 1e-15 {
            return 0.0;
        }
        (self.vec.dot(&other.vec) / (a * b)).clamp(-1.0, 1.0).acos()
    }
}

/// Threshold on x·pole below which a chart should be swapped for one
/// centered at the current point.
pub const CHART_SWITCH_THRESHOLD: f64 = 0.6;

/// Stereographic chart centered at `pole`, projecting from the antipode.
///
/// The frame (e1, e2, pole) is right-handed (e1 × e2 = pole), which makes the
/// chart orientation-preserving: the round-metric rotation J becomes the
/// Euclidean +90° rotation in chart coordinates, and the pulled-back round
/// metric is conformal with factor λ(q) = 2 / (1 + |q|²).
#[derive(Debug, Clone)]
pub struct Chart {
    pole: Vec3,
    e1: Vec3,
    e2: Vec3,
}

impl Chart {
    pub fn new(pole: SpherePoint) -> Self {
        let p = pole.coords();
        // Deterministic frame: seed with the ambient axis least aligned with p.
        let seed = if p.x.abs() <= p.y.abs() && p.x.abs() <= p.z.abs() {
            Vec3::x()
        } else if p.y.abs() <= p.z.abs() {
            Vec3::y()
        } else {
            Vec3::z()
        };
        let e1 = (seed - p * seed.dot(&p)).normalize();
        let e2 = p.cross(&e1);
        Self { pole: p, e1, e2 }
    }

    pub fn pole(&self) -> Vec3 {
        self.pole
    }

    /// True if the chart is numerically trustworthy at `x`.
    pub fn covers(&self, x: &Vec3) -> bool {
        x.dot(&self.pole) > CHART_SWITCH_THRESHOLD
    }

    /// Stereographic projection of a sphere point. Defined away from the antipode.
    pub fn map(&self, x: &Vec3) -> Vec2 {
        let a = x.dot(&self.e1);
        let b = x.dot(&self.e2);
        let c = x.dot(&self.pole);
        let denom = 1.0 + c;
        Vec2::new(a / denom, b / denom)
    }

    /// Inverse of `map`.
    pub fn unmap(&self, q: &Vec2) -> Vec3 {
        let rho2 = q.norm_squared();
        let d = 1.0 + rho2;
        (2.0 * (q.x * self.e1 + q.y * self.e2) + (1.0 - rho2) * self.pole) / d
    }

    /// Columns of the differential ∂x/∂q at `q`.
    pub fn d_unmap(&self, q: &Vec2) -> [Vec3; 2] {
        let d = 1.0 + q.norm_squared();
        let u = q.x * self.e1 + q.y * self.e2 + self.pole;
        [
            (2.0 / d) * self.e1 - (4.0 * q.x / (d * d)) * u,
            (2.0 / d) * self.e2 - (4.0 * q.y / (d * d)) * u,
        ]
    }

    /// Second derivatives ∂²x/∂q_k∂q_l, returned as [kk=00, kl=01, ll=11].
    pub fn d2_unmap(&self, q: &Vec2) -> [Vec3; 3] {
        let d = 1.0 + q.norm_squared();
        let d2 = d * d;
        let d3 = d2 * d;
        let u = q.x * self.e1 + q.y * self.e2 + self.pole;
        let e = [self.e1, self.e2];
        let qv = [q.x, q.y];
        let mut out = [Vec3::zeros(); 3];
        let idx = [(0usize, 0usize), (0, 1), (1, 1)];
        for (slot, &(k, l)) in idx.iter().enumerate() {
            let delta = if k == l { 1.0 } else { 0.0 };
            out[slot] = -(4.0 * qv[l] / d2) * e[k] - (4.0 * qv[k] / d2) * e[l]
                - (4.0 * delta / d2 - 16.0 * qv[k] * qv[l] / d3) * u;
        }
        out
    }

    /// Third derivatives ∂³x/∂q_k∂q_l∂q_m, returned by the number of q₂
    /// indices: [000, 001, 011, 111].
    pub fn d3_unmap(&self, q: &Vec2) -> [Vec3; 4] {
        let d = 1.0 + q.norm_squared();
        let d2 = d * d;
        let d3 = d2 * d;
        let d4 = d3 * d;
        let u = q.x * self.e1 + q.y * self.e2 + self.pole;
        let e = [self.e1, self.e2];
        let qv = [q.x, q.y];
        let idx = [(0usize, 0usize, 0usize), (0, 0, 1), (0, 1, 1), (1, 1, 1)];
        let mut out = [Vec3::zeros(); 4];
        for (slot, &(k, l, m)) in idx.iter().enumerate() {
            let dm = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
            out[slot] = -(4.0 / d2)
                * (dm(l, m) * e[k] + dm(k, m) * e[l] + dm(k, l) * e[m])
                + (16.0 / d3)
                    * (qv[m] * qv[l] * e[k] + qv[m] * qv[k] * e[l] + qv[k] * qv[l] * e[m])
                + (16.0 / d3) * (dm(k, l) * qv[m] + dm(k, m) * qv[l] + dm(l, m) * qv[k]) * u
                - (96.0 / d4) * qv[k] * qv[l] * qv[m] * u;
        }
        out
    }

    /// Pushforward of a chart vector: Dx(q) · w.
    pub fn push_vector(&self, q: &Vec2, w: &Vec2) -> Vec3 {
        let cols = self.d_unmap(q);
        cols[0] * w.x + cols[1] * w.y
    }

    /// Pullback of an ambient tangent vector at x(q). Uses conformality:
    /// DxᵀDx = λ² I, so w = Dxᵀ v / λ².
    pub fn pull_vector(&self, q: &Vec2, v: &Vec3) -> Vec2 {
        let cols = self.d_unmap(q);
        let lam2 = self.conformal_factor(q).powi(2);
        Vec2::new(cols[0].dot(v) / lam2, cols[1].dot(v) / lam2)
    }

    /// Conformal factor λ(q) of the pulled-back round metric: ‖Dx w‖ = λ‖w‖.
    pub fn conformal_factor(&self, q: &Vec2) -> f64 {
        2.0 / (1.0 + q.norm_squared())
    }

    /// Round-metric Christoffel contraction Γ_q[w, w] in chart coordinates.
    ///
    /// For the conformal metric λ²δ with φ = log λ:
    /// Γ^k_ij = δ_ik ∂_j φ + δ_jk ∂_i φ − δ_ij ∂_k φ, and ∂_k φ = −2 q_k / (1+ρ²).
    pub fn christoffel(&self, q: &Vec2, w: &Vec2) -> Vec2 {
        let d = 1.0 + q.norm_squared();
        let phi = Vec2::new(-2.0 * q.x / d, -2.0 * q.y / d);
        let wphi = w.dot(&phi);
        let w2 = w.norm_squared();
        Vec2::new(
            2.0 * w.x * wphi - w2 * phi.x,
            2.0 * w.y * wphi - w2 * phi.y,
        )
    }
}

/// Euclidean +90° rotation of a chart vector; represents J in any of our charts.
pub fn rot90(w: &Vec2) -> Vec2 {
    Vec2::new(-w.y, w.x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sphere_point(x: f64, y: f64, z: f64) -> SpherePoint {
        SpherePoint::from_xyz(x, y, z).unwrap()
    }

    #[test]
    fn frame_is_right_handed() {
        for p in [
            sphere_point(0.0, 0.0, 1.0),
            sphere_point(1.0, 0.0, 0.0),
            sphere_point(-0.3, 0.8, 0.5),
        ] {
            let chart = Chart::new(p);
            let cross = chart.e1.cross(&chart.e2);
            assert_relative_eq!(cross, chart.pole, epsilon = 1e-14);
        }
    }

    #[test]
    fn map_unmap_roundtrip_near_pole() {
        let chart = Chart::new(sphere_point(0.1, -0.4, 0.9));
        for x in [
            sphere_point(0.1, -0.4, 0.9),
            sphere_point(0.0, 0.0, 1.0),
            sphere_point(0.3, -0.1, 0.8),
        ] {
            let q = chart.map(&x.coords());
            let back = chart.unmap(&q);
            assert!((back - x.coords()).norm() < 1e-12);
        }
    }

    #[test]
    fn d_unmap_matches_finite_differences() {
        let chart = Chart::new(sphere_point(0.2, 0.3, 0.93));
        let q = Vec2::new(0.31, -0.17);
        let h = 1e-6;
        let cols = chart.d_unmap(&q);
        for k in 0..2 {
            let mut qp = q;
            let mut qm = q;
            qp[k] += h;
            qm[k] -= h;
            let fd = (chart.unmap(&qp) - chart.unmap(&qm)) / (2.0 * h);
            assert!((fd - cols[k]).norm() < 1e-9);
        }
    }

    #[test]
    fn d2_unmap_matches_finite_differences() {
        let chart = Chart::new(sphere_point(0.0, 0.0, 1.0));
        let q = Vec2::new(-0.21, 0.4);
        let h = 1e-5;
        let d2 = chart.d2_unmap(&q);
        let pairs = [(0usize, 0usize, 0usize), (0, 1, 1), (1, 1, 2)];
        for (k, l, slot) in pairs {
            let mut qpp = q;
            let mut qpm = q;
            let mut qmp = q;
            let mut qmm = q;
            qpp[k] += h;
            qpp[l] += h;
            qpm[k] += h;
            qpm[l] -= h;
            qmp[k] -= h;
            qmp[l] += h;
            qmm[k] -= h;
            qmm[l] -= h;
            let fd = (chart.unmap(&qpp) - chart.unmap(&qpm) - chart.unmap(&qmp)
                + chart.unmap(&qmm))
                / (4.0 * h * h);
            assert!((fd - d2[slot]).norm() < 1e-5, "slot {slot}");
        }
    }

    #[test]
    fn d3_unmap_matches_finite_differences() {
        let chart = Chart::new(sphere_point(0.1, -0.2, 0.97));
        let q = Vec2::new(0.23, -0.11);
        let h = 1e-4;
        let d3 = chart.d3_unmap(&q);
        // Differentiate the analytic d2 once.
        let cases = [(0usize, 0usize, 0usize), (0, 0, 1), (0, 1, 1), (1, 1, 1)];
        for (slot, &(k, l, m)) in cases.iter().enumerate() {
            // d2 slot for (k, l): count of index 1s.
            let d2_slot = k + l;
            let mut qp = q;
            let mut qm = q;
            qp[m] += h;
            qm[m] -= h;
            let fd = (chart.d2_unmap(&qp)[d2_slot] - chart.d2_unmap(&qm)[d2_slot]) / (2.0 * h);
            assert!((fd - d3[slot]).norm() < 1e-6, "slot {slot}: {:?}", (fd - d3[slot]).norm());
        }
    }

    #[test]
    fn pushforward_is_conformal() {
        let chart = Chart::new(sphere_point(0.5, 0.5, 0.7));
        let q = Vec2::new(0.4, 0.2);
        let lam = chart.conformal_factor(&q);
        for w in [Vec2::new(1.0, 0.0), Vec2::new(-0.3, 1.2)] {
            let v = chart.push_vector(&q, &w);
            assert_relative_eq!(v.norm(), lam * w.norm(), epsilon = 1e-12);
            let back = chart.pull_vector(&q, &v);
            assert!((back - w).norm() < 1e-12);
        }
    }

    #[test]
    fn rot90_matches_cross_product() {
        // J in chart coordinates must agree with base × vec upstairs.
        let chart = Chart::new(sphere_point(-0.2, 0.1, 0.97));
        let q = Vec2::new(0.12, -0.33);
        let x = chart.unmap(&q);
        let w = Vec2::new(0.7, 0.4);
        let v = chart.push_vector(&q, &w);
        let jv = x.cross(&v);
        let jw = chart.push_vector(&q, &rot90(&w));
        assert!((jv - jw).norm() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_chart_roundtrip(
            px in -1.0f64..1.0, py in -1.0f64..1.0, pz in 0.2f64..1.0,
            xx in -1.0f64..1.0, xy in -1.0f64..1.0, xz in -1.0f64..1.0,
        ) {
            let pole = SpherePoint::from_xyz(px, py, pz).unwrap();
            let x = match SpherePoint::from_xyz(xx, xy, xz) {
                Ok(p) => p,
                Err(_) => return Ok(()),
            };
            // Invariant is only claimed on the x·pole > 0.2 cap.
            if x.coords().dot(&pole.coords()) > 0.2 {
                let chart = Chart::new(pole);
                let back = chart.unmap(&chart.map(&x.coords()));
                prop_assert!((back - x.coords()).norm() < 1e-10);
            }
        }

        #[test]
        fn prop_tangent_projection(
            bx in -1.0f64..1.0, by in -1.0f64..1.0, bz in -1.0f64..1.0,
            vx in -2.0f64..2.0, vy in -2.0f64..2.0, vz in -2.0f64..2.0,
        ) {
            let base = match SpherePoint::from_xyz(bx, by, bz) {
                Ok(p) => p,
                Err(_) => return Ok(()),
            };
            let tv = TangentVector::new(base, Vec3::new(vx, vy, vz));
            prop_assert!(tv.vec().dot(&base.coords()).abs() < 1e-10);
        }
    }
}
