//! Phase-space propagation in stereographic charts, with optional transport
//! of linearized (Jacobi) solutions.
//!
//! State layout: [q₁, q₂, w₁, w₂, (ζ₁, ζ₂, π₁, π₂)ₖ …]. The orbit follows the
//! Euler–Lagrange equation of G = F²/2, q̈ = G_ww⁻¹(G_q − G_qwᵀ q̇), which keeps
//! G (hence F) constant. Each linearized pair follows
//!   ζ̇ = G_ww⁻¹(π − G_qwᵀ ζ),   π̇ = G_qq ζ + G_qw ζ̇.
//! At a chart switch, ζ pushes forward with the transition differential and
//! π transforms as a linearized covector, including the term with the
//! derivative of the transition applied to the base momentum.

use crate::error::{Error, Result};
use crate::metric::FinslerMetric;
use crate::ode::Stepper;
use crate::sphere::{Chart, Mat2, SpherePoint, Vec2, Vec3, CHART_SWITCH_THRESHOLD};

use super::GeodesicState;

pub(crate) struct Propagator<'m> {
    metric: &'m FinslerMetric,
    pub chart: Chart,
    pub t: f64,
    y: Vec<f64>,
    n_vars: usize,
    stepper: Stepper,
    speed_drift: f64,
    f_ref: f64,
}

fn solve2(m: &Mat2, rhs: &Vec2) -> Result<Vec2> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    if det <= 1e-14 || m[(0, 0)] <= 0.0 {
        return Err(Error::ConvexityViolation {
            x: [f64::NAN; 3],
            v: [f64::NAN; 3],
            a: det,
        });
    }
    Ok(Vec2::new(
        (m[(1, 1)] * rhs.x - m[(0, 1)] * rhs.y) / det,
        (m[(0, 0)] * rhs.y - m[(1, 0)] * rhs.x) / det,
    ))
}

fn inv_transpose(m: &Mat2) -> Mat2 {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    Mat2::new(m[(1, 1)], -m[(1, 0)], -m[(0, 1)], m[(0, 0)]) / det
}

impl<'m> Propagator<'m> {
    pub fn new(metric: &'m FinslerMetric, state: &GeodesicState, tol: f64) -> Result<Self> {
        let chart = Chart::new(state.point);
        let q = chart.map(&state.point.coords());
        let w = chart.pull_vector(&q, &state.velocity.vec());
        let f_ref = state.f_norm(metric);
        Ok(Self {
            metric,
            chart,
            t: 0.0,
            y: vec![q.x, q.y, w.x, w.y],
            n_vars: 0,
            stepper: Stepper::new(4, tol, tol * 1e-2, 0.2),
            speed_drift: 0.0,
            f_ref,
        })
    }

    /// Appends a linearized solution with chart initial data (ζ, ζ̇).
    pub fn push_variation(&mut self, zeta: Vec2, zeta_dot: Vec2) -> Result<()> {
        let (q, w) = (self.q(), self.w());
        let st = self.metric.chart_stack(&self.chart, &q, &w, false)?;
        let pi = st.g_ww * zeta_dot + st.g_qw.transpose() * zeta;
        self.y.extend_from_slice(&[zeta.x, zeta.y, pi.x, pi.y]);
        self.n_vars += 1;
        let tol = self.stepper.rtol;
        let max_step = self.stepper.max_step;
        self.stepper = Stepper::new(self.y.len(), tol, tol * 1e-2, max_step);
        Ok(())
    }

    pub fn q(&self) -> Vec2 {
        Vec2::new(self.y[0], self.y[1])
    }

    pub fn w(&self) -> Vec2 {
        Vec2::new(self.y[2], self.y[3])
    }

    pub fn variation(&self, k: usize) -> (Vec2, Vec2) {
        let o = 4 + 4 * k;
        (
            Vec2::new(self.y[o], self.y[o + 1]),
            Vec2::new(self.y[o + 2], self.y[o + 3]),
        )
    }

    /// Chart velocity ζ̇ of variation k at the current point.
    pub fn variation_zeta_dot(&self, k: usize) -> Result<Vec2> {
        let (zeta, pi) = self.variation(k);
        let st = self
            .metric
            .chart_stack(&self.chart, &self.q(), &self.w(), false)?;
        solve2(&st.g_ww, &(pi - st.g_qw.transpose() * zeta))
    }

    pub fn ambient(&self) -> (Vec3, Vec3) {
        let q = self.q();
        (self.chart.unmap(&q), self.chart.push_vector(&q, &self.w()))
    }

    pub fn state(&self) -> GeodesicState {
        let (x, v) = self.ambient();
        let point = SpherePoint::new(x).expect("propagated point");
        GeodesicState::new(point, crate::sphere::TangentVector::new(point, v))
    }

    pub fn speed_drift(&self) -> f64 {
        self.speed_drift
    }

    pub fn set_max_step(&mut self, h: f64) {
        self.stepper.max_step = h;
    }

    fn rhs(
        metric: &FinslerMetric,
        chart: &Chart,
        n_vars: usize,
        _t: f64,
        y: &[f64],
        dy: &mut [f64],
    ) -> Result<()> {
        let q = Vec2::new(y[0], y[1]);
        let w = Vec2::new(y[2], y[3]);
        let st = metric.chart_stack(chart, &q, &w, n_vars > 0)?;
        let accel = solve2(&st.g_ww, &(st.g_q - st.g_qw.transpose() * w)).map_err(|_| {
            let x = chart.unmap(&q);
            let v = chart.push_vector(&q, &w);
            Error::ConvexityViolation {
                x: [x.x, x.y, x.z],
                v: [v.x, v.y, v.z],
                a: st.g_ww.determinant(),
            }
        })?;
        dy[0] = w.x;
        dy[1] = w.y;
        dy[2] = accel.x;
        dy[3] = accel.y;
        if n_vars > 0 {
            let g_qq = st.g_qq.expect("base hessian requested");
            for k in 0..n_vars {
                let o = 4 + 4 * k;
                let zeta = Vec2::new(y[o], y[o + 1]);
                let pi = Vec2::new(y[o + 2], y[o + 3]);
                let zeta_dot = solve2(&st.g_ww, &(pi - st.g_qw.transpose() * zeta))?;
                let pi_dot = g_qq * zeta + st.g_qw * zeta_dot;
                dy[o] = zeta_dot.x;
                dy[o + 1] = zeta_dot.y;
                dy[o + 2] = pi_dot.x;
                dy[o + 3] = pi_dot.y;
            }
        }
        Ok(())
    }

    /// One accepted integrator step, not past `t_limit`; re-charts afterwards
    /// if the base point left the comfort zone of the current chart.
    pub fn step_once(&mut self, t_limit: f64) -> Result<()> {
        let metric = self.metric;
        let chart = self.chart.clone();
        let n_vars = self.n_vars;
        let mut f =
            |t: f64, y: &[f64], dy: &mut [f64]| Propagator::rhs(metric, &chart, n_vars, t, y, dy);
        self.stepper.step(&mut f, &mut self.t, &mut self.y, t_limit)?;
        self.track_drift();
        let q = self.q();
        let x = self.chart.unmap(&q);
        if x.dot(&self.chart.pole()) <= CHART_SWITCH_THRESHOLD {
            let new = Chart::new(SpherePoint::new(x)?);
            self.change_chart(&new)?;
        }
        Ok(())
    }

    pub fn advance_to(&mut self, t_target: f64) -> Result<()> {
        if t_target < self.t {
            return Err(Error::InvalidParameter(
                "propagator cannot integrate backwards".into(),
            ));
        }
        while self.t < t_target - 1e-13 * t_target.abs().max(1.0) {
            self.step_once(t_target)?;
        }
        self.t = t_target;
        Ok(())
    }

    fn track_drift(&mut self) {
        let (x, v) = self.ambient();
        let f = self.metric.eval_raw(&x, &v);
        let drift = (f - self.f_ref).abs();
        if drift > self.speed_drift {
            self.speed_drift = drift;
        }
    }

    /// Re-expresses the state and all variations in `target` chart.
    pub fn change_chart(&mut self, target: &Chart) -> Result<()> {
        let old = self.chart.clone();
        let q = self.q();
        let x = old.unmap(&q);
        if x.dot(&target.pole()) < 0.2 {
            return Err(Error::Chart(
                "target chart does not cover the current point".into(),
            ));
        }
        let q_new = target.map(&x);
        let v = old.push_vector(&q, &self.w());
        let w_new = target.pull_vector(&q_new, &v);

        if self.n_vars > 0 {
            let dpsi_at = |qq: &Vec2| -> Mat2 {
                let xx = old.unmap(qq);
                let qn = target.map(&xx);
                let mut d = Mat2::zeros();
                for k in 0..2 {
                    let mut e = Vec2::zeros();
                    e[k] = 1.0;
                    let col = target.pull_vector(&qn, &old.push_vector(qq, &e));
                    d[(0, k)] = col.x;
                    d[(1, k)] = col.y;
                }
                d
            };
            let dpsi = dpsi_at(&q);
            let a_mat = inv_transpose(&dpsi);
            let st = self.metric.chart_stack(&old, &q, &self.w(), false)?;
            let p = st.g_w;
            for k in 0..self.n_vars {
                let o = 4 + 4 * k;
                let zeta = Vec2::new(self.y[o], self.y[o + 1]);
                let pi = Vec2::new(self.y[o + 2], self.y[o + 3]);
                let zeta_new = dpsi * zeta;
                let mut pi_new = a_mat * pi;
                let zn = zeta.norm();
                if zn > 1e-14 {
                    // d/ds A(q + sζ)|₀ applied to the base momentum.
                    let h = 1e-6 / zn.max(1e-6);
                    let a_p = inv_transpose(&dpsi_at(&(q + h * zeta)));
                    let a_m = inv_transpose(&dpsi_at(&(q - h * zeta)));
                    let da = (a_p - a_m) / (2.0 * h);
                    pi_new += da * p;
                }
                self.y[o] = zeta_new.x;
                self.y[o + 1] = zeta_new.y;
                self.y[o + 2] = pi_new.x;
                self.y[o + 3] = pi_new.y;
            }
        }

        self.y[0] = q_new.x;
        self.y[1] = q_new.y;
        self.y[2] = w_new.x;
        self.y[3] = w_new.y;
        self.chart = target.clone();
        Ok(())
    }

    /// Snapshot for bisection restarts.
    pub fn checkpoint(&self) -> PropagatorCheckpoint {
        PropagatorCheckpoint {
            chart: self.chart.clone(),
            t: self.t,
            y: self.y.clone(),
            speed_drift: self.speed_drift,
        }
    }

    pub fn restore(&mut self, cp: &PropagatorCheckpoint) {
        self.chart = cp.chart.clone();
        self.t = cp.t;
        self.y = cp.y.clone();
        self.speed_drift = cp.speed_drift;
        self.stepper.reset_dt();
    }
}

#[derive(Clone)]
pub(crate) struct PropagatorCheckpoint {
    chart: Chart,
    t: f64,
    y: Vec<f64>,
    speed_drift: f64,
}

impl PropagatorCheckpoint {
    pub fn t_value(&self) -> f64 {
        self.t
    }
}
