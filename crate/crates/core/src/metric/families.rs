//! Built-in metric families and their ambient evaluators.

use crate::sphere::{Mat2, Vec2, Vec3};
use nalgebra::Matrix3;
use std::sync::Arc;

pub(crate) type EvalFn = Arc<dyn Fn(&Vec3, &Vec3) -> f64 + Send + Sync>;
pub(crate) type ScalarField = Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>;

/// Scalar field on the sphere used by the perturbed family.
#[derive(Clone)]
pub enum Bump {
    /// bump(x) = x₃².
    ZSquared,
    /// bump(x) = x₁·x₂·x₃ (breaks all the coordinate-plane symmetries).
    Octant,
    Custom { name: String, f: ScalarField },
}

impl Bump {
    pub fn name(&self) -> &str {
        match self {
            Bump::ZSquared => "z2",
            Bump::Octant => "xyz",
            Bump::Custom { name, .. } => name,
        }
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        match self {
            Bump::ZSquared => x.z * x.z,
            Bump::Octant => x.x * x.y * x.z,
            Bump::Custom { f, .. } => f(x),
        }
    }

    pub fn by_name(name: &str) -> Option<Bump> {
        match name {
            "z2" => Some(Bump::ZSquared),
            "xyz" => Some(Bump::Octant),
            _ => None,
        }
    }
}

/// Riemannian families: F(x, v) = √(vᵀ S(x) v).
pub(crate) enum RiemannForm {
    Round,
    /// S = diag(a², b², c²), the pullback of Euclidean under x ↦ (ax₁, bx₂, cx₃).
    Ellipsoid { sq: Vec3 },
    /// S = (1 + ε·bump(x))² I.
    Perturbed { epsilon: f64, bump: Bump },
}

impl RiemannForm {
    /// The ambient form when it does not depend on the base point.
    pub fn constant_s(&self) -> Option<Matrix3<f64>> {
        match self {
            RiemannForm::Round => Some(Matrix3::identity()),
            RiemannForm::Ellipsoid { sq } => Some(Matrix3::from_diagonal(sq)),
            RiemannForm::Perturbed { .. } => None,
        }
    }

    pub fn s_matrix(&self, x: &Vec3) -> Matrix3<f64> {
        match self {
            RiemannForm::Round => Matrix3::identity(),
            RiemannForm::Ellipsoid { sq } => Matrix3::from_diagonal(sq),
            RiemannForm::Perturbed { epsilon, bump } => {
                let c = 1.0 + epsilon * bump.eval(x);
                Matrix3::identity() * (c * c)
            }
        }
    }

    pub fn eval(&self, x: &Vec3, v: &Vec3) -> f64 {
        match self {
            RiemannForm::Round => v.norm(),
            RiemannForm::Ellipsoid { sq } => {
                (sq.x * v.x * v.x + sq.y * v.y * v.y + sq.z * v.z * v.z).sqrt()
            }
            RiemannForm::Perturbed { epsilon, bump } => (1.0 + epsilon * bump.eval(x)) * v.norm(),
        }
    }
}

pub(crate) enum MetricImpl {
    Riemann(RiemannForm),
    /// F⁴ = ‖v‖⁴ − ε (v·a(x))⁴ with a(x) = (x₂, x₃, x₁).
    Quartic { epsilon: f64 },
    Custom(EvalFn),
}

impl MetricImpl {
    pub fn round() -> Self {
        MetricImpl::Riemann(RiemannForm::Round)
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64) -> Self {
        MetricImpl::Riemann(RiemannForm::Ellipsoid { sq: Vec3::new(a * a, b * b, c * c) })
    }

    pub fn perturbed(epsilon: f64, bump: Bump) -> Self {
        MetricImpl::Riemann(RiemannForm::Perturbed { epsilon, bump })
    }

    pub fn quartic(epsilon: f64) -> Self {
        MetricImpl::Quartic { epsilon }
    }

    pub fn custom(f: EvalFn) -> Self {
        MetricImpl::Custom(f)
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        !matches!(self, MetricImpl::Custom(_))
    }

    pub fn eval(&self, x: &Vec3, v: &Vec3) -> f64 {
        match self {
            MetricImpl::Riemann(r) => r.eval(x, v),
            MetricImpl::Quartic { epsilon } => {
                let a = quartic_axis(x);
                let p = v.norm_squared().powi(2) - epsilon * (v.dot(&a)).powi(4);
                p.max(0.0).sqrt().sqrt()
            }
            MetricImpl::Custom(f) => f(x, v),
        }
    }

    /// Ambient partial gradients (G_x, G_v) of G = F²/2, when analytic.
    pub fn ambient_g_gradients(&self, x: &Vec3, v: &Vec3) -> Option<(Vec3, Vec3)> {
        match self {
            MetricImpl::Riemann(_) => None, // handled by the M(q) fast path
            MetricImpl::Quartic { epsilon } => {
                let a = quartic_axis(x);
                let va = v.dot(&a);
                let p = v.norm_squared().powi(2) - epsilon * va.powi(4);
                if p <= 0.0 {
                    return None;
                }
                let sqrt_p = p.sqrt();
                // P_v = 4‖v‖²v − 4ε(v·a)³a,  P_x via v·∂a/∂x_k = (v₃, v₁, v₂).
                let p_v = 4.0 * v.norm_squared() * v - 4.0 * epsilon * va.powi(3) * a;
                let p_x = -4.0 * epsilon * va.powi(3) * Vec3::new(v.z, v.x, v.y);
                Some((p_x / (4.0 * sqrt_p), p_v / (4.0 * sqrt_p)))
            }
            MetricImpl::Custom(_) => None,
        }
    }

    /// Pulled-back quadratic form M(q) = Dx(q)ᵀ S(x(q)) Dx(q), Riemannian only.
    pub fn pullback_form(&self, chart: &crate::sphere::Chart, q: &Vec2) -> Option<Mat2> {
        let MetricImpl::Riemann(r) = self else { return None };
        let x = chart.unmap(q);
        let s = r.s_matrix(&x);
        let cols = chart.d_unmap(q);
        let s0 = s * cols[0];
        let s1 = s * cols[1];
        Some(Mat2::new(
            cols[0].dot(&s0),
            cols[0].dot(&s1),
            cols[1].dot(&s0),
            cols[1].dot(&s1),
        ))
    }

    /// Exact q-derivatives of the pullback form for constant-S families:
    /// M, [∂₀M, ∂₁M], and the three distinct second derivatives [00, 01, 11].
    pub fn pullback_form_derivatives(
        &self,
        chart: &crate::sphere::Chart,
        q: &Vec2,
        second: bool,
    ) -> Option<(Mat2, [Mat2; 2], Option<[Mat2; 3]>)> {
        let MetricImpl::Riemann(r) = self else { return None };
        let s = r.constant_s()?;
        let b = chart.d_unmap(q);
        let d2 = chart.d2_unmap(q);
        // ∂_k of column i is d2 at slot (k + i).
        let dcol = |k: usize, i: usize| d2[k + i];
        let sb = [s * b[0], s * b[1]];
        let m = Mat2::new(
            b[0].dot(&sb[0]),
            b[0].dot(&sb[1]),
            b[1].dot(&sb[0]),
            b[1].dot(&sb[1]),
        );
        let mut dm = [Mat2::zeros(); 2];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    dm[k][(i, j)] = dcol(k, i).dot(&sb[j]) + b[i].dot(&(s * dcol(k, j)));
                }
            }
        }
        let d2m = if second {
            let d3 = chart.d3_unmap(q);
            // ∂_l∂_k of column i is d3 at slot (l + k + i).
            let ddcol = |l: usize, k: usize, i: usize| d3[l + k + i];
            let mut out = [Mat2::zeros(); 3];
            for (slot, (k, l)) in [(0usize, 0usize), (0, 1), (1, 1)].iter().enumerate() {
                for i in 0..2 {
                    for j in 0..2 {
                        out[slot][(i, j)] = ddcol(*l, *k, i).dot(&sb[j])
                            + dcol(*k, i).dot(&(s * dcol(*l, j)))
                            + dcol(*l, i).dot(&(s * dcol(*k, j)))
                            + b[i].dot(&(s * ddcol(*l, *k, j)));
                    }
                }
            }
            Some(out)
        } else {
            None
        };
        Some((m, dm, d2m))
    }
}

fn quartic_axis(x: &Vec3) -> Vec3 {
    Vec3::new(x.y, x.z, x.x)
}
