//! Chart-coordinate derivative stacks of G = F²/2.
//!
//! Derivative supply is tiered: Riemannian families evaluate the pulled-back
//! quadratic form exactly and only difference it in q; the quartic family has
//! analytic ambient first derivatives pushed through the chart chain rule,
//! with second derivatives from single-level central differences; bare
//! evaluators fall back to nested central differences (first order with step
//! 1e-5·scale, second order 1e-4·scale, scale = max(‖w‖, 1e-3)).

use super::FinslerMetric;
use crate::error::{Error, Result};
use crate::sphere::{Chart, Mat2, Vec2};

const H1: f64 = 1e-5;
const H2: f64 = 1e-4;
/// Step for differencing analytically computed first derivatives.
const H_ANALYTIC: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct ChartStack {
    pub g: f64,
    pub g_q: Vec2,
    pub g_w: Vec2,
    pub g_ww: Mat2,
    /// g_qw[(k, i)] = ∂²G/∂q_k∂w_i.
    pub g_qw: Mat2,
    pub g_qq: Option<Mat2>,
}

#[derive(Debug, Clone)]
pub struct FStack {
    pub f: f64,
    pub f_q: Vec2,
    pub f_w: Vec2,
    pub f_ww: Mat2,
    /// f_qw[(k, i)] = ∂²F/∂q_k∂w_i.
    pub f_qw: Mat2,
}

fn w_scale(w: &Vec2) -> f64 {
    w.norm().max(1e-3)
}

fn check_w(w: &Vec2) -> Result<()> {
    if w.norm() < 1e-12 {
        return Err(Error::ZeroSection);
    }
    Ok(())
}

pub(super) fn chart_g(metric: &FinslerMetric, chart: &Chart, q: &Vec2, w: &Vec2) -> f64 {
    if let Some(m) = metric.inner.pullback_form(chart, q) {
        return 0.5 * (m * w).dot(w);
    }
    let x = chart.unmap(q);
    let v = chart.push_vector(q, w);
    let f = metric.inner.eval(&x, &v);
    0.5 * f * f
}

/// Analytic chart first derivatives via the ambient chain rule, if available.
fn analytic_g1(metric: &FinslerMetric, chart: &Chart, q: &Vec2, w: &Vec2) -> Option<(f64, Vec2, Vec2)> {
    let x = chart.unmap(q);
    let cols = chart.d_unmap(q);
    let v = cols[0] * w.x + cols[1] * w.y;
    let (g_x, g_v) = metric.inner.ambient_g_gradients(&x, &v)?;
    let f = metric.inner.eval(&x, &v);
    let g = 0.5 * f * f;
    let g_w = Vec2::new(g_v.dot(&cols[0]), g_v.dot(&cols[1]));
    let d2 = chart.d2_unmap(q);
    // ∂_k x contracted with G_x, plus G_v·(∂_k Dx)w.
    let dxk0 = d2[0] * w.x + d2[1] * w.y;
    let dxk1 = d2[1] * w.x + d2[2] * w.y;
    let g_q = Vec2::new(g_x.dot(&cols[0]) + g_v.dot(&dxk0), g_x.dot(&cols[1]) + g_v.dot(&dxk1));
    Some((g, g_q, g_w))
}

pub(super) fn chart_g1(
    metric: &FinslerMetric,
    chart: &Chart,
    q: &Vec2,
    w: &Vec2,
) -> Result<(f64, Vec2, Vec2)> {
    check_w(w)?;
    if let Some(m) = metric.inner.pullback_form(chart, q) {
        let g = 0.5 * (m * w).dot(w);
        let g_w = m * w;
        let mut g_q = Vec2::zeros();
        for k in 0..2 {
            let dm = d_form(metric, chart, q, k);
            g_q[k] = 0.5 * (dm * w).dot(w);
        }
        return Ok((g, g_q, g_w));
    }
    if let Some(res) = analytic_g1(metric, chart, q, w) {
        return Ok(res);
    }
    // Nested-FD fallback.
    let g = chart_g(metric, chart, q, w);
    let hw = H1 * w_scale(w);
    let hq = H1;
    let mut g_q = Vec2::zeros();
    let mut g_w = Vec2::zeros();
    for k in 0..2 {
        let (mut qp, mut qm) = (*q, *q);
        qp[k] += hq;
        qm[k] -= hq;
        g_q[k] = (chart_g(metric, chart, &qp, w) - chart_g(metric, chart, &qm, w)) / (2.0 * hq);
        let (mut wp, mut wm) = (*w, *w);
        wp[k] += hw;
        wm[k] -= hw;
        g_w[k] = (chart_g(metric, chart, q, &wp) - chart_g(metric, chart, q, &wm)) / (2.0 * hw);
    }
    Ok((g, g_q, g_w))
}

/// ∂M/∂q_k of the Riemannian pullback form by central differences.
fn d_form(metric: &FinslerMetric, chart: &Chart, q: &Vec2, k: usize) -> Mat2 {
    let (mut qp, mut qm) = (*q, *q);
    qp[k] += H1;
    qm[k] -= H1;
    let mp = metric.inner.pullback_form(chart, &qp).expect("riemannian");
    let mm = metric.inner.pullback_form(chart, &qm).expect("riemannian");
    (mp - mm) / (2.0 * H1)
}

pub(super) fn chart_stack(
    metric: &FinslerMetric,
    chart: &Chart,
    q: &Vec2,
    w: &Vec2,
    with_base_hessian: bool,
) -> Result<ChartStack> {
    check_w(w)?;
    if metric.inner.pullback_form(chart, q).is_some() {
        return riemann_stack(metric, chart, q, w, with_base_hessian);
    }
    if analytic_g1(metric, chart, q, w).is_some() {
        return analytic_stack(metric, chart, q, w, with_base_hessian);
    }
    nested_fd_stack(metric, chart, q, w, with_base_hessian)
}

fn riemann_stack(
    metric: &FinslerMetric,
    chart: &Chart,
    q: &Vec2,
    w: &Vec2,
    with_base_hessian: bool,
) -> Result<ChartStack> {
    // Constant-S families (round, ellipsoid) have fully analytic pullback
    // derivatives; the FD route below leaves ~1e-9 of coefficient noise that
    // accumulates secularly in long Jacobi integrations.
    if let Some((m, dm, d2m)) =
        metric
            .inner
            .pullback_form_derivatives(chart, q, with_base_hessian)
    {
        let g = 0.5 * (m * w).dot(w);
        let g_w = m * w;
        let mut g_q = Vec2::zeros();
        let mut g_qw = Mat2::zeros();
        for k in 0..2 {
            g_q[k] = 0.5 * (dm[k] * w).dot(w);
            let row = dm[k] * w;
            g_qw[(k, 0)] = row.x;
            g_qw[(k, 1)] = row.y;
        }
        let g_qq = d2m.map(|dd| {
            let mut h = Mat2::zeros();
            h[(0, 0)] = 0.5 * (dd[0] * w).dot(w);
            let cross = 0.5 * (dd[1] * w).dot(w);
            h[(0, 1)] = cross;
            h[(1, 0)] = cross;
            h[(1, 1)] = 0.5 * (dd[2] * w).dot(w);
            h
        });
        return Ok(ChartStack { g, g_q, g_w, g_ww: m, g_qw, g_qq });
    }

    let m = metric.inner.pullback_form(chart, q).expect("riemannian");
    let g = 0.5 * (m * w).dot(w);
    let g_w = m * w;
    let g_ww = m;
    let mut g_q = Vec2::zeros();
    let mut g_qw = Mat2::zeros();
    for k in 0..2 {
        let dm = d_form(metric, chart, q, k);
        g_q[k] = 0.5 * (dm * w).dot(w);
        let row = dm * w;
        g_qw[(k, 0)] = row.x;
        g_qw[(k, 1)] = row.y;
    }
    let g_qq = if with_base_hessian {
        // Richardson-extrapolated second differences of the quadratic form;
        // the plain second difference at 1e-4 leaves ~5e-8 of noise in the
        // Jacobi coefficients, visible in conjugate-point locations.
        let form = |qq: &Vec2| metric.inner.pullback_form(chart, qq).expect("riemannian");
        let quad = |mm: &Mat2| 0.5 * (mm * w).dot(w);
        let mut h = Mat2::zeros();
        let m0 = m;
        let hh = 2e-3;
        for k in 0..2 {
            let diag = |step: f64| {
                let (mut qp, mut qm) = (*q, *q);
                qp[k] += step;
                qm[k] -= step;
                (quad(&form(&qp)) + quad(&form(&qm)) - 2.0 * quad(&m0)) / (step * step)
            };
            h[(k, k)] = (4.0 * diag(hh) - diag(2.0 * hh)) / 3.0;
        }
        let cross = |step: f64| {
            let (mut qpp, mut qpm, mut qmp, mut qmm) = (*q, *q, *q, *q);
            qpp.x += step;
            qpp.y += step;
            qpm.x += step;
            qpm.y -= step;
            qmp.x -= step;
            qmp.y += step;
            qmm.x -= step;
            qmm.y -= step;
            (quad(&form(&qpp)) - quad(&form(&qpm)) - quad(&form(&qmp)) + quad(&form(&qmm)))
                / (4.0 * step * step)
        };
        let v = (4.0 * cross(hh) - cross(2.0 * hh)) / 3.0;
        h[(0, 1)] = v;
        h[(1, 0)] = v;
        Some(h)
    } else {
        None
    };
    Ok(ChartStack { g, g_q, g_w, g_ww, g_qw, g_qq })
}

fn analytic_stack(
    metric: &FinslerMetric,
    chart: &Chart,
    q: &Vec2,
    w: &Vec2,
    with_base_hessian: bool,
) -> Result<ChartStack> {
    let (g, g_q, g_w) =
        analytic_g1(metric, chart, q, w).ok_or(Error::ZeroSection)?;
    let hw = H_ANALYTIC * w_scale(w);
    let hq = H_ANALYTIC;
    let first = |qq: &Vec2, ww: &Vec2| -> Result<(Vec2, Vec2)> {
        analytic_g1(metric, chart, qq, ww)
            .map(|(_, gq, gw)| (gq, gw))
            .ok_or(Error::ZeroSection)
    };
    let mut g_ww = Mat2::zeros();
    let mut g_qw = Mat2::zeros();
    let mut g_qq = Mat2::zeros();
    for k in 0..2 {
        let (mut wp, mut wm) = (*w, *w);
        wp[k] += hw;
        wm[k] -= hw;
        let (_, gw_p) = first(q, &wp)?;
        let (_, gw_m) = first(q, &wm)?;
        for i in 0..2 {
            g_ww[(i, k)] = (gw_p[i] - gw_m[i]) / (2.0 * hw);
        }
        let (mut qp, mut qm) = (*q, *q);
        qp[k] += hq;
        qm[k] -= hq;
        let (gq_p, gw_qp) = first(&qp, w)?;
        let (gq_m, gw_qm) = first(&qm, w)?;
        for i in 0..2 {
            g_qw[(k, i)] = (gw_qp[i] - gw_qm[i]) / (2.0 * hq);
            g_qq[(k, i)] = (gq_p[i] - gq_m[i]) / (2.0 * hq);
        }
    }
    symmetrize(&mut g_ww);
    symmetrize(&mut g_qq);
    Ok(ChartStack {
        g,
        g_q,
        g_w,
        g_ww,
        g_qw,
        g_qq: with_base_hessian.then_some(g_qq),
    })
}

fn nested_fd_stack(
    metric: &FinslerMetric,
    chart: &Chart,
    q: &Vec2,
    w: &Vec2,
    with_base_hessian: bool,
) -> Result<ChartStack> {
    let (g, g_q, g_w) = chart_g1(metric, chart, q, w)?;
    let hw = H2 * w_scale(w);
    let hq = H2;
    let eval = |qq: &Vec2, ww: &Vec2| chart_g(metric, chart, qq, ww);
    let mut g_ww = Mat2::zeros();
    let mut g_qw = Mat2::zeros();
    let mut g_qq = Mat2::zeros();
    let g0 = g;
    for k in 0..2 {
        for i in 0..2 {
            if k == i {
                let (mut wp, mut wm) = (*w, *w);
                wp[k] += hw;
                wm[k] -= hw;
                g_ww[(k, k)] = (eval(q, &wp) + eval(q, &wm) - 2.0 * g0) / (hw * hw);
                let (mut qp, mut qm) = (*q, *q);
                qp[k] += hq;
                qm[k] -= hq;
                g_qq[(k, k)] = (eval(&qp, w) + eval(&qm, w) - 2.0 * g0) / (hq * hq);
            } else {
                g_ww[(k, i)] = cross_diff(
                    |dk, di| {
                        let mut ww = *w;
                        ww[k] += dk;
                        ww[i] += di;
                        eval(q, &ww)
                    },
                    hw,
                    hw,
                );
                g_qq[(k, i)] = cross_diff(
                    |dk, di| {
                        let mut qq = *q;
                        qq[k] += dk;
                        qq[i] += di;
                        eval(&qq, w)
                    },
                    hq,
                    hq,
                );
            }
            g_qw[(k, i)] = cross_diff(
                |dk, di| {
                    let mut qq = *q;
                    let mut ww = *w;
                    qq[k] += dk;
                    ww[i] += di;
                    eval(&qq, &ww)
                },
                hq,
                hw,
            );
        }
    }
    symmetrize(&mut g_ww);
    symmetrize(&mut g_qq);
    Ok(ChartStack {
        g,
        g_q,
        g_w,
        g_ww,
        g_qw,
        g_qq: with_base_hessian.then_some(g_qq),
    })
}

fn cross_diff(f: impl Fn(f64, f64) -> f64, ha: f64, hb: f64) -> f64 {
    (f(ha, hb) - f(ha, -hb) - f(-ha, hb) + f(-ha, -hb)) / (4.0 * ha * hb)
}

fn symmetrize(m: &mut Mat2) {
    let v = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    m[(0, 1)] = v;
    m[(1, 0)] = v;
}

pub(super) fn chart_f_stack(
    metric: &FinslerMetric,
    chart: &Chart,
    q: &Vec2,
    w: &Vec2,
) -> Result<FStack> {
    let st = chart_stack(metric, chart, q, w, false)?;
    let f = (2.0 * st.g).max(0.0).sqrt();
    if f < 1e-14 {
        return Err(Error::ZeroSection);
    }
    let f_q = st.g_q / f;
    let f_w = st.g_w / f;
    let f_ww = (st.g_ww - f_w * f_w.transpose()) / f;
    let f_qw = (st.g_qw - f_q * f_w.transpose()) / f;
    Ok(FStack { f, f_q, f_w, f_ww, f_qw })
}

/// (F, F_q, F_w) from the first-order G data.
pub fn chart_f1(metric: &FinslerMetric, chart: &Chart, q: &Vec2, w: &Vec2) -> Result<(f64, Vec2, Vec2)> {
    let (g, g_q, g_w) = chart_g1(metric, chart, q, w)?;
    let f = (2.0 * g).max(0.0).sqrt();
    if f < 1e-14 {
        return Err(Error::ZeroSection);
    }
    Ok((f, g_q / f, g_w / f))
}
