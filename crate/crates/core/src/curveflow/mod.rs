//! Discrete curve-shortening semi-flow on embedded loops.
//!
//! A loop is N points on the sphere, uniformly spaced in round arclength
//! after redistribution, with derivatives taken by 4th-order central
//! differences on the periodic parameter grid. The flow moves each sample by
//! the normal velocity V (the L² length anti-gradient density), scaled by the
//! slowdown cutoff χ(L), then resamples to uniform arclength — legal because
//! the continuous flow is equivariant under reparametrization.

mod embed;
mod evolve;
mod velocity;

pub use embed::{check_embedded, embed_report, embed_report_brute, EmbedReport};
pub use evolve::{
    chi_cutoff, dissipation_check, evolve, step, Evolution, FlowEvent, FlowOutcome, FlowParams,
    FlowTrace,
};
pub use velocity::{normal_velocity, normal_velocity_checked};

use crate::error::{Error, Result};
use crate::metric::FinslerMetric;
use crate::sphere::Vec3;
use std::sync::OnceLock;

/// Minimum sample count for a discretized loop.
pub const MIN_SAMPLES: usize = 32;

/// A closed discretized curve on the sphere with cached round-metric geometry.
///
/// Stencil-based quantities (tangents, normals, curvature) come from
/// 4th-order central differences; the length quadratures use the spectral
/// derivative of the trigonometric interpolant, which is also what
/// redistribution resamples.
#[derive(Debug, Clone)]
pub struct Loop {
    samples: Vec<Vec3>,
    tangents: Vec<Vec3>,
    speeds: Vec<f64>,
    normals: Vec<Vec3>,
    curvatures: Vec<f64>,
    interp: TrigCurve,
    g_length: f64,
    embedded: OnceLock<EmbedReport>,
}

impl Loop {
    /// Builds a loop from sample points (normalized onto the sphere).
    pub fn new(samples: Vec<Vec3>) -> Result<Self> {
        let n = samples.len();
        if n < MIN_SAMPLES {
            return Err(Error::InvalidParameter(format!(
                "loops need at least {MIN_SAMPLES} samples, got {n}"
            )));
        }
        let mut pts = samples;
        for p in &mut pts {
            let norm = p.norm();
            if norm < 1e-14 {
                return Err(Error::InvalidParameter("zero sample in loop".into()));
            }
            // Keep normalization idempotent so file round-trips are
            // bit-exact.
            if (norm - 1.0).abs() > 1e-12 {
                *p /= norm;
            }
        }
        let h = 1.0 / n as f64;
        let at = |i: isize| -> Vec3 { pts[(i.rem_euclid(n as isize)) as usize] };
        let mut tangents = Vec::with_capacity(n);
        let mut speeds = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        let mut curvatures = Vec::with_capacity(n);
        for i in 0..n as isize {
            let d1 = (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h);
            let d2 = (-at(i - 2) + 16.0 * at(i - 1) - 30.0 * at(i) + 16.0 * at(i + 1)
                - at(i + 2))
                / (12.0 * h * h);
            let speed = d1.norm();
            if speed < 1e-10 {
                return Err(Error::InvalidParameter(format!(
                    "degenerate speed at sample {i}"
                )));
            }
            let x = at(i);
            let jt = x.cross(&d1);
            tangents.push(d1);
            speeds.push(speed);
            normals.push(jt / speed);
            curvatures.push(d2.dot(&jt) / speed.powi(3));
        }
        let interp = TrigCurve::fit(&pts);
        let g_length = (0..n)
            .map(|i| interp.eval_derivative(i as f64 * h).norm())
            .sum::<f64>()
            * h;
        Ok(Self {
            samples: pts,
            tangents,
            speeds,
            normals,
            curvatures,
            interp,
            g_length,
            embedded: OnceLock::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn samples(&self) -> &[Vec3] {
        &self.samples
    }

    /// dγ/du at sample i (u = i/N).
    pub fn tangent(&self, i: usize) -> Vec3 {
        self.tangents[i]
    }

    pub fn speed(&self, i: usize) -> f64 {
        self.speeds[i]
    }

    /// Positive round normal N = Jγ̇/‖γ̇‖.
    pub fn normal(&self, i: usize) -> Vec3 {
        self.normals[i]
    }

    /// Round geodesic curvature at sample i.
    pub fn curvature(&self, i: usize) -> f64 {
        self.curvatures[i]
    }

    /// Round-metric length.
    pub fn g_length(&self) -> f64 {
        self.g_length
    }

    /// Finsler length by the periodic trapezoid rule on F(γ, γ̇), with the
    /// spectral tangent of the interpolant.
    pub fn f_length(&self, metric: &FinslerMetric) -> f64 {
        let n = self.samples.len();
        let h = 1.0 / n as f64;
        (0..n)
            .map(|i| {
                metric.eval_raw(&self.samples[i], &self.interp.eval_derivative(i as f64 * h))
            })
            .sum::<f64>()
            * h
    }

    /// Cumulative Finsler arclength at each sample (starts at 0).
    pub fn f_arclengths(&self, metric: &FinslerMetric) -> Vec<f64> {
        let n = self.samples.len();
        let h = 1.0 / n as f64;
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(acc);
            let v = self.interp.eval_derivative(i as f64 * h);
            acc += metric.eval_raw(&self.samples[i], &v) * h;
        }
        out
    }

    /// Min and max consecutive g-distance relative to the mean spacing.
    pub fn spacing_ratio(&self) -> (f64, f64) {
        let n = self.samples.len();
        let mean = self.g_length / n as f64;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n {
            let d = (self.samples[(i + 1) % n] - self.samples[i]).norm();
            lo = lo.min(d / mean);
            hi = hi.max(d / mean);
        }
        (lo, hi)
    }

    pub fn embed_report(&self) -> &EmbedReport {
        self.embedded.get_or_init(|| embed::embed_report(&self.samples))
    }

    pub fn is_embedded(&self) -> bool {
        self.embed_report().embedded
    }

    /// Resamples to uniform round arclength through the trigonometric
    /// interpolant of the current samples, then re-projects to the sphere.
    pub fn redistributed(&self) -> Result<Loop> {
        let n = self.samples.len();
        let interp = &self.interp;
        // Arclength table on a 4× refined grid: Simpson increments and node
        // speeds, then monotone cubic Hermite inversion. Anything lower-order
        // here visibly breaks the rotation equivariance of the flow.
        let fine = 4 * n;
        let du = 1.0 / fine as f64;
        let mut speed = vec![0.0; fine + 1];
        for (j, sp) in speed.iter_mut().enumerate() {
            *sp = interp.eval_derivative(j as f64 * du).norm();
        }
        let mut s = vec![0.0; fine + 1];
        for j in 0..fine {
            let mid = interp.eval_derivative((j as f64 + 0.5) * du).norm();
            s[j + 1] = s[j] + du / 6.0 * (speed[j] + 4.0 * mid + speed[j + 1]);
        }
        let total = s[fine];
        // Resample phase from the mean arclength drift of the current
        // samples; anchoring at sample 0 instead would break рotation
        // equivariance at O(dt · nonuniformity) per step.
        let phase = {
            let mut acc = 0.0;
            for i in 0..n {
                acc += s[4 * i] / total * n as f64 - i as f64;
            }
            acc / n as f64
        };
        let mut new_samples = Vec::with_capacity(n);
        let mut j = 0usize;
        for m in 0..n {
            let mut target = total * (m as f64 + phase) / n as f64;
            let mut u_wrap = 0.0;
            if target < 0.0 {
                target += total;
                u_wrap = -1.0;
            } else if target >= total {
                target -= total;
                u_wrap = 1.0;
            }
            if target < s[j] {
                j = 0;
            }
            while j + 1 < fine && s[j + 1] < target {
                j += 1;
            }
            // Hermite model of s on [u_j, u_{j+1}] with exact slopes.
            let (s0, s1) = (s[j], s[j + 1]);
            let (d0, d1) = (speed[j] * du, speed[j + 1] * du);
            let mut t = if s1 > s0 { (target - s0) / (s1 - s0) } else { 0.0 };
            for _ in 0..3 {
                let t2 = t * t;
                let t3 = t2 * t;
                let h = s0 * (2.0 * t3 - 3.0 * t2 + 1.0)
                    + d0 * (t3 - 2.0 * t2 + t)
                    + s1 * (-2.0 * t3 + 3.0 * t2)
                    + d1 * (t3 - t2);
                let dh = s0 * (6.0 * t2 - 6.0 * t)
                    + d0 * (3.0 * t2 - 4.0 * t + 1.0)
                    + s1 * (-6.0 * t2 + 6.0 * t)
                    + d1 * (3.0 * t2 - 2.0 * t);
                if dh.abs() < 1e-300 {
                    break;
                }
                t -= (h - target) / dh;
                t = t.clamp(0.0, 1.0);
            }
            let u = (j as f64 + t) * du + u_wrap;
            new_samples.push(interp.eval(u));
        }
        Loop::new(new_samples)
    }

    /// Cyclic rotation of the parameter (an exactly representable circle
    /// diffeomorphism of the sampling).
    pub fn rotate_params(&self, shift: usize) -> Loop {
        let n = self.samples.len();
        let mut pts = Vec::with_capacity(n);
        for i in 0..n {
            pts.push(self.samples[(i + shift) % n]);
        }
        Loop::new(pts).expect("rotation preserves validity")
    }

    /// Orientation reversal.
    pub fn reversed(&self) -> Loop {
        let mut pts = self.samples.clone();
        pts.reverse();
        Loop::new(pts).expect("reversal preserves validity")
    }

    /// Round circle: intersection of the sphere with the plane orthogonal to
    /// `axis` at offset λ ∈ (−1, 1).
    pub fn circle(axis: &Vec3, offset: f64, n: usize) -> Result<Loop> {
        if offset.abs() >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "circle offset must satisfy |λ| < 1, got {offset}"
            )));
        }
        let a = axis.normalize();
        let seed = if a.x.abs() <= a.y.abs() && a.x.abs() <= a.z.abs() {
            Vec3::x()
        } else if a.y.abs() <= a.z.abs() {
            Vec3::y()
        } else {
            Vec3::z()
        };
        let u1 = (seed - a * seed.dot(&a)).normalize();
        let u2 = a.cross(&u1);
        let r = (1.0 - offset * offset).sqrt();
        let mut pts = Vec::with_capacity(n);
        for i in 0..n {
            let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            pts.push(a * offset + (u1 * th.cos() + u2 * th.sin()) * r);
        }
        Loop::new(pts)
    }

    /// Circle displaced along its normal by a smooth random field with the
    /// given maximum amplitude, built from Fourier modes in `modes`
    /// (zero-mean by construction when 0 is excluded).
    pub fn perturbed_circle(
        axis: &Vec3,
        offset: f64,
        n: usize,
        amplitude: f64,
        modes: std::ops::RangeInclusive<usize>,
        rng: &mut impl rand::Rng,
    ) -> Result<Loop> {
        let base = Loop::circle(axis, offset, n)?;
        let mut coeffs = Vec::new();
        for k in modes {
            coeffs.push((k, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        let field = |u: f64| -> f64 {
            coeffs
                .iter()
                .map(|(k, a, b)| {
                    let th = 2.0 * std::f64::consts::PI * (*k as f64) * u;
                    a * th.cos() + b * th.sin()
                })
                .sum()
        };
        let max_f = (0..n)
            .map(|i| field(i as f64 / n as f64).abs())
            .fold(0.0f64, f64::max)
            .max(1e-12);
        let scale = amplitude / max_f;
        let mut pts = Vec::with_capacity(n);
        for i in 0..n {
            let u = i as f64 / n as f64;
            let x = base.samples[i] + base.normals[i] * (scale * field(u));
            pts.push(x);
        }
        Loop::new(pts)
    }
}

/// Real trigonometric interpolant through N periodic samples of a curve.
#[derive(Debug, Clone)]
pub(crate) struct TrigCurve {
    /// Per coordinate: a_k, b_k for k = 0..=n/2.
    cos_c: [Vec<f64>; 3],
    sin_c: [Vec<f64>; 3],
    n: usize,
}

impl TrigCurve {
    pub fn fit(samples: &[Vec3]) -> Self {
        let n = samples.len();
        let kmax = n / 2;
        let mut cos_c: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; kmax + 1]);
        let mut sin_c: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; kmax + 1]);
        let tau = 2.0 * std::f64::consts::PI;
        // Accumulate per sample with a rotation recurrence over k; the naive
        // per-(k, i) sin_cos dominates the whole flow step otherwise.
        for (i, p) in samples.iter().enumerate() {
            let th = tau * (i as f64) / (n as f64);
            let (s1, c1) = th.sin_cos();
            let (mut ck, mut sk) = (1.0f64, 0.0f64);
            for k in 0..=kmax {
                for d in 0..3 {
                    cos_c[d][k] += p[d] * ck;
                    sin_c[d][k] += p[d] * sk;
                }
                let c_next = ck * c1 - sk * s1;
                sk = sk * c1 + ck * s1;
                ck = c_next;
            }
        }
        for k in 0..=kmax {
            let norm = if k == 0 || (n % 2 == 0 && k == kmax) {
                1.0 / n as f64
            } else {
                2.0 / n as f64
            };
            for d in 0..3 {
                cos_c[d][k] *= norm;
                sin_c[d][k] *= norm;
            }
        }
        Self { cos_c, sin_c, n }
    }

    pub fn eval(&self, u: f64) -> Vec3 {
        let tau = 2.0 * std::f64::consts::PI;
        let kmax = self.n / 2;
        let (s1, c1) = (tau * u).sin_cos();
        let (mut ck, mut sk) = (1.0f64, 0.0f64);
        let mut out = Vec3::zeros();
        for k in 0..=kmax {
            for d in 0..3 {
                out[d] += self.cos_c[d][k] * ck + self.sin_c[d][k] * sk;
            }
            let c_next = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = c_next;
        }
        out
    }

    pub fn eval_derivative(&self, u: f64) -> Vec3 {
        let tau = 2.0 * std::f64::consts::PI;
        let kmax = self.n / 2;
        let (s1, c1) = (tau * u).sin_cos();
        let (mut ck, mut sk) = (c1, s1);
        let mut out = Vec3::zeros();
        for k in 1..=kmax {
            let w = tau * k as f64;
            for d in 0..3 {
                out[d] += w * (self.sin_c[d][k] * ck - self.cos_c[d][k] * sk);
            }
            let c_next = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = c_next;
        }
        out
    }
}
