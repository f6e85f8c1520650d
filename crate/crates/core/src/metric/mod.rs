//! Reversible Finsler metrics on the sphere and their derivative stacks.
//!
//! A metric is specified by an ambient formula F(x, v) that is smooth in both
//! arguments (x on the sphere, v an arbitrary ambient vector; only values at
//! tangent v matter). All derivative work happens in stereographic chart
//! coordinates through the energy function G(q, w) = F²/2 of the pullback:
//! first derivatives come from analytic chain rules where the family provides
//! them, second derivatives from central differences of the first ones.

mod families;
mod stack;

pub use families::Bump;
pub use stack::{chart_f1, ChartStack, FStack};

use crate::error::{Error, Result};
use crate::sphere::{rot90, Chart, SpherePoint, Vec2, Vec3};
use families::MetricImpl;
use std::sync::{Arc, OnceLock};

/// Evaluator bundle for a reversible Finsler metric on S².
#[derive(Clone)]
pub struct FinslerMetric {
    pub(crate) inner: Arc<MetricImpl>,
    name: String,
    has_analytic_derivatives: bool,
    /// Lower bound on A(x,v) = F_vv[Jv,Jv] over the sampled unit bundle,
    /// filled by `convexity_floor`.
    convexity: Arc<OnceLock<f64>>,
    injectivity: Arc<OnceLock<f64>>,
}

impl std::fmt::Debug for FinslerMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FinslerMetric({})", self.name)
    }
}

impl FinslerMetric {
    fn from_impl(inner: MetricImpl, name: String) -> Self {
        let has_analytic_derivatives = inner.has_analytic_derivatives();
        Self {
            inner: Arc::new(inner),
            name,
            has_analytic_derivatives,
            convexity: Arc::new(OnceLock::new()),
            injectivity: Arc::new(OnceLock::new()),
        }
    }

    /// The round metric: F(x, v) = ‖v‖.
    pub fn round() -> Self {
        Self::from_impl(MetricImpl::round(), "round".into())
    }

    /// Pullback of the Euclidean metric under x ↦ (a x₁, b x₂, c x₃).
    pub fn ellipsoid(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && a <= b && b <= c) {
            return Err(Error::InvalidParameter(format!(
                "ellipsoid axes must satisfy 0 < a ≤ b ≤ c, got ({a}, {b}, {c})"
            )));
        }
        Ok(Self::from_impl(
            MetricImpl::ellipsoid(a, b, c),
            format!("ellipsoid({a},{b},{c})"),
        ))
    }

    /// Conformal perturbation F(x, v) = (1 + ε·bump(x))‖v‖.
    pub fn perturbed_riemannian(epsilon: f64, bump: Bump) -> Result<Self> {
        if epsilon.abs() >= 0.3 {
            return Err(Error::InvalidParameter(format!(
                "perturbation strength must satisfy |ε| < 0.3, got {epsilon}"
            )));
        }
        let name = format!("perturbed({epsilon},{})", bump.name());
        Ok(Self::from_impl(MetricImpl::perturbed(epsilon, bump), name))
    }

    /// Non-Riemannian quartic metric F(x, v) = (‖v‖⁴ + ε q(x, v))^{1/4} with
    /// q(x, v) = −(v·a(x))⁴ and a(x) = (x₂, x₃, x₁). Construction verifies
    /// strong convexity on a dense grid of the unit bundle.
    pub fn quartic(epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!(
                "quartic strength must satisfy 0 ≤ ε < 1, got {epsilon}"
            )));
        }
        let metric = Self::from_impl(MetricImpl::quartic(epsilon), format!("quartic({epsilon})"));
        let (a_min, worst) = metric.convexity_scan(10_000);
        if a_min <= 0.0 {
            let (x, v) = worst;
            return Err(Error::ConvexityViolation {
                x: [x.x, x.y, x.z],
                v: [v.x, v.y, v.z],
                a: a_min,
            });
        }
        let _ = metric.convexity.set(a_min);
        Ok(metric)
    }

    /// Wraps a bare evaluator; all derivatives come from finite differences
    /// in chart coordinates (first order with step 1e-5·scale, second order
    /// with nested step 1e-4·scale, scale = max(‖v‖, 1e-3)).
    pub fn from_eval<F>(name: &str, f: F) -> Self
    where
        F: Fn(&Vec3, &Vec3) -> f64 + Send + Sync + 'static,
    {
        Self::from_impl(MetricImpl::custom(Arc::new(f)), name.into())
    }

    /// Same metric with analytic derivatives stripped, for FD consistency tests.
    pub fn fd_only(&self) -> Self {
        let inner = self.inner.clone();
        let name = format!("{}(fd)", self.name);
        Self::from_impl(
            MetricImpl::custom(Arc::new(move |x: &Vec3, v: &Vec3| inner.eval(x, v))),
            name,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.has_analytic_derivatives
    }

    /// F(x, v) for ambient v.
    pub fn eval(&self, x: &SpherePoint, v: &Vec3) -> f64 {
        self.inner.eval(&x.coords(), v)
    }

    pub fn eval_raw(&self, x: &Vec3, v: &Vec3) -> f64 {
        self.inner.eval(x, v)
    }

    /// G = F²/2 in chart coordinates.
    pub fn chart_g(&self, chart: &Chart, q: &Vec2, w: &Vec2) -> f64 {
        stack::chart_g(self, chart, q, w)
    }

    /// (G, G_q, G_w) in chart coordinates.
    pub fn chart_g1(&self, chart: &Chart, q: &Vec2, w: &Vec2) -> Result<(f64, Vec2, Vec2)> {
        stack::chart_g1(self, chart, q, w)
    }

    /// Full second-order stack of G in chart coordinates. `with_base_hessian`
    /// additionally fills G_qq (needed by the Jacobi equation).
    pub fn chart_stack(
        &self,
        chart: &Chart,
        q: &Vec2,
        w: &Vec2,
        with_base_hessian: bool,
    ) -> Result<ChartStack> {
        stack::chart_stack(self, chart, q, w, with_base_hessian)
    }

    /// Second-order stack of F itself (derived from the G stack).
    pub fn chart_f_stack(&self, chart: &Chart, q: &Vec2, w: &Vec2) -> Result<FStack> {
        stack::chart_f_stack(self, chart, q, w)
    }

    /// Ambient representation of the fiber derivative F_v(x, v) restricted to
    /// the tangent plane (the covector is returned through the round pairing).
    pub fn fiber_gradient(&self, x: &SpherePoint, v: &Vec3) -> Result<Vec3> {
        let chart = Chart::new(*x);
        let q = chart.map(&x.coords());
        let w = chart.pull_vector(&q, v);
        let (_, _, g_w) = self.chart_g1(&chart, &q, &w)?;
        let f = self.eval(x, v);
        if f < 1e-14 {
            return Err(Error::ZeroSection);
        }
        // F_w = G_w / F as a chart covector; raise with g⁻¹ = λ⁻²δ and push.
        let lam2 = chart.conformal_factor(&q).powi(2);
        let f_sharp = Vec2::new(g_w.x / (f * lam2), g_w.y / (f * lam2));
        Ok(chart.push_vector(&q, &f_sharp))
    }

    /// A(x, v) = F_vv(x, v)[Jv, Jv], the diffusion coefficient of the flow.
    pub fn convexity_a(&self, x: &SpherePoint, v: &Vec3) -> Result<f64> {
        let chart = Chart::new(*x);
        let q = chart.map(&x.coords());
        let w = chart.pull_vector(&q, v);
        let fs = self.chart_f_stack(&chart, &q, &w)?;
        let jw = rot90(&w);
        Ok((fs.f_ww * jw).dot(&jw))
    }

    /// Scans A(x, v) over a grid of the (round) unit bundle, returning the
    /// minimum and its argmin.
    pub fn convexity_scan(&self, samples: usize) -> (f64, (Vec3, Vec3)) {
        let n_base = ((samples as f64) / 16.0).ceil() as usize;
        let mut a_min = f64::INFINITY;
        let mut worst = (Vec3::z(), Vec3::x());
        for i in 0..n_base {
            let x = fibonacci_point(i, n_base);
            let base = SpherePoint::new(x).unwrap();
            let chart = Chart::new(base);
            let q = chart.map(&x);
            for k in 0..16 {
                let phi = std::f64::consts::PI * (k as f64) / 16.0;
                let w = Vec2::new(phi.cos(), phi.sin()) / chart.conformal_factor(&q);
                let fs = match self.chart_f_stack(&chart, &q, &w) {
                    Ok(s) => s,
                    Err(_) => continue,
                };
                let jw = rot90(&w);
                let a = (fs.f_ww * jw).dot(&jw);
                if a < a_min {
                    a_min = a;
                    worst = (x, chart.push_vector(&q, &w));
                }
            }
        }
        (a_min, worst)
    }

    /// Cached lower convexity bound a₀ over the sampled unit bundle.
    pub fn convexity_floor(&self) -> f64 {
        *self.convexity.get_or_init(|| self.convexity_scan(10_000).0)
    }

    pub(crate) fn injectivity_cache(&self) -> &OnceLock<f64> {
        &self.injectivity
    }
}

/// Deterministic quasi-uniform point set on the sphere.
pub fn fibonacci_point(i: usize, n: usize) -> Vec3 {
    let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let z = 1.0 - 2.0 * (i as f64 + 0.5) / (n as f64);
    let r = (1.0 - z * z).max(0.0).sqrt();
    let theta = 2.0 * std::f64::consts::PI * (i as f64) / golden;
    Vec3::new(r * theta.cos(), r * theta.sin(), z)
}

#[cfg(test)]
mod tests;
