//! Jacobi fields, conjugate points, and the Morse index/nullity stack.
//!
//! A Jacobi field whose lift lies in the contact plane ξ keeps its base
//! projection inside ker G_v along the orbit, so it reduces to a scalar
//! f(t) against a continuously chosen unit section μ(t) of ker G_v. Zeros of
//! f are conjugate points; counting them over (0, m·period) gives the based
//! Morse index, and the 2×2 monodromy of the linearized flow restricted to ξ
//! gives the nullity and Floquet data of the free index.

use crate::error::{Error, Result};
use crate::geodesic::propagate::Propagator;
use crate::geodesic::{GeodesicArc, GeodesicState};
use crate::metric::FinslerMetric;
use crate::sphere::{rot90, Chart, Vec2};
use nalgebra::{Complex, Matrix2, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

type C64 = Complex<f64>;

const FLOW_TOL: f64 = 1e-12;
/// Simple-zero slope floor: |f'| must exceed this at every recorded zero.
const SLOPE_FLOOR: f64 = 1e-6;
/// Zero-location bisection tolerance (in flow time).
const ZERO_TOL: f64 = 1e-10;

/// Scalar reduction of a Jacobi field along an arc.
#[derive(Debug, Clone)]
pub struct JacobiSolution {
    /// F-time offsets from the base point, paired with f values.
    pub f_samples: Vec<(f64, f64)>,
    /// Offsets of the zeros of f (sorted, simple zeros only).
    pub zeros: Vec<f64>,
    pub fdot_at_zeros: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ConjugateTimes {
    /// Positive offsets s with γ(t₀ + s) conjugate to γ(t₀).
    pub forward: Vec<f64>,
    /// Positive offsets s with γ(t₀ − s) conjugate to γ(t₀).
    pub backward: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Nullity {
    Known(u8),
    /// Eigenvalue within the ambiguous band [1e-6, 1e-4] of 1.
    Unknown,
}

impl std::fmt::Display for Nullity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Nullity::Known(n) => write!(f, "{n}"),
            Nullity::Unknown => write!(f, "unknown"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FreeIndex {
    Exact(u32),
    Range(u32, u32),
}

impl std::fmt::Display for FreeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FreeIndex::Exact(i) => write!(f, "{i}"),
            FreeIndex::Range(a, b) => write!(f, "[{a}..{b}]"),
        }
    }
}

/// Morse data of the m-th iterate of a closed geodesic.
#[derive(Debug, Clone)]
pub struct IndexReport {
    pub m: u32,
    pub ind_omega: u32,
    pub nul_omega: u32,
    pub nul: Nullity,
    pub ind: FreeIndex,
    pub floquet_eigs: [C64; 2],
}

/// Integrates the vertical-initial Jacobi field from arc time t₀ over the
/// remaining duration of the arc, recording f and its simple zeros.
pub fn jacobi_field(metric: &FinslerMetric, arc: &GeodesicArc, t0: f64) -> Result<JacobiSolution> {
    let state = base_state(metric, arc, t0)?;
    scalar_run(metric, &state, arc.duration, &[])
}

/// Sorted conjugate-point offsets after and before arc time t₀.
pub fn conjugate_times(
    metric: &FinslerMetric,
    arc: &GeodesicArc,
    t0: f64,
    horizon: f64,
) -> Result<ConjugateTimes> {
    if horizon > 10.0 * arc.duration {
        return Err(Error::InvalidParameter(
            "conjugate-point horizon exceeds 10 × arc length".into(),
        ));
    }
    let state = base_state(metric, arc, t0)?;
    let fwd = scalar_run(metric, &state, horizon, &[])?;
    let bwd = scalar_run(metric, &state.reversed(), horizon, &[])?;
    Ok(ConjugateTimes { forward: fwd.zeros, backward: bwd.zeros })
}

/// First conjugate time along the geodesic from `state`, if any within the
/// horizon.
pub fn first_conjugate_time(
    metric: &FinslerMetric,
    state: &GeodesicState,
    horizon: f64,
) -> Result<Option<f64>> {
    let run = scalar_run(metric, state, horizon, &[])?;
    Ok(run.zeros.first().copied())
}

/// First two conjugate times from `state`, if both exist within the horizon.
pub fn first_two_zeros(
    metric: &FinslerMetric,
    state: &GeodesicState,
    horizon: f64,
) -> Result<Option<(f64, f64)>> {
    let run = scalar_run(metric, state, horizon, &[])?;
    match (run.zeros.first(), run.zeros.get(1)) {
        (Some(&a), Some(&b)) => Ok(Some((a, b))),
        _ => Ok(None),
    }
}

/// Based Morse index and nullity of the m-th iterate, counting interior
/// Jacobi zeros from the base point γ(t).
pub fn index_omega(
    metric: &FinslerMetric,
    closed: &GeodesicArc,
    t: f64,
    m: u32,
) -> Result<(u32, u32)> {
    let period = closed.duration;
    let state = base_state(metric, closed, t)?;
    let horizon = period * m as f64;
    let run = scalar_run(metric, &state, horizon, &checkpoints(period, m))?;
    count_omega(&run, period, m)
}

/// Nullity and Floquet eigenvalues of the monodromy restricted to the
/// contact plane over one period.
pub fn floquet(
    metric: &FinslerMetric,
    closed: &GeodesicArc,
) -> Result<(Nullity, [C64; 2])> {
    let mono = monodromy(metric, closed)?;
    Ok(classify_monodromy(&mono))
}

/// Assembles the full index report of the m-th iterate and cross-validates
/// the index relations for all iterates up to m.
pub fn index_report(metric: &FinslerMetric, closed: &GeodesicArc, m: u32) -> Result<IndexReport> {
    let table = index_table(metric, closed, m)?;
    Ok(table.into_iter().last().expect("m ≥ 1"))
}

/// Index reports for iterates 1..=m_max from a single Jacobi integration and
/// a single monodromy computation, with all index relations checked.
pub fn index_table(
    metric: &FinslerMetric,
    closed: &GeodesicArc,
    m_max: u32,
) -> Result<Vec<IndexReport>> {
    if m_max == 0 {
        return Ok(Vec::new());
    }
    let period = closed.duration;
    let state = base_state(metric, closed, 0.0)?;
    let run = scalar_run(
        metric,
        &state,
        period * m_max as f64,
        &checkpoints(period, m_max),
    )?;
    let mono = monodromy(metric, closed)?;

    let mut reports = Vec::with_capacity(m_max as usize);
    let mut power = Matrix2::<f64>::identity();
    for m in 1..=m_max {
        power = mono * power;
        let (ind_omega, nul_omega) = count_omega(&run, period, m)?;
        let (nul, eigs) = classify_monodromy(&power);
        let ind = pin_free_index(ind_omega, nul_omega, nul)?;
        reports.push(IndexReport { m, ind_omega, nul_omega, nul, ind, floquet_eigs: eigs });
    }
    validate_relations(&reports)?;
    Ok(reports)
}

/// Strict interlacing of two sorted zero lists (Sturm separation).
pub fn zeros_interlace(a: &[f64], b: &[f64]) -> bool {
    // Between consecutive zeros of a there must be exactly one zero of b,
    // over the overlapping range.
    if a.len() < 2 {
        return true;
    }
    for w in a.windows(2) {
        let inside = b.iter().filter(|&&z| z > w[0] && z < w[1]).count();
        if inside != 1 {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// internals

fn base_state(metric: &FinslerMetric, arc: &GeodesicArc, t: f64) -> Result<GeodesicState> {
    let s = if t == 0.0 { arc.initial } else { arc.state_at(t) };
    GeodesicState::unit(metric, s.point, s.velocity.vec())
}

fn checkpoints(period: f64, m: u32) -> Vec<f64> {
    (1..=m).map(|k| period * k as f64).collect()
}

/// g-unit kernel section of G_v at the current propagator point, oriented so
/// that g(μ, Jτ) > 0 (automatic for k = rot90 of the momentum sharp).
fn kernel_section(metric: &FinslerMetric, chart: &Chart, q: &Vec2, w: &Vec2) -> Result<Vec2> {
    let (_, _, g_w) = metric.chart_g1(chart, q, w)?;
    let k = rot90(&Vec2::new(g_w.x, g_w.y));
    let lam = chart.conformal_factor(q);
    let n = k.norm();
    if n < 1e-14 {
        return Err(Error::ZeroSection);
    }
    Ok(k / (lam * n))
}

struct ScalarState<'m> {
    metric: &'m FinslerMetric,
    prop: Propagator<'m>,
}

impl<'m> ScalarState<'m> {
    fn f_value(&self) -> Result<f64> {
        let q = self.prop.q();
        let w = self.prop.w();
        let mu = kernel_section(self.metric, &self.prop.chart, &q, &w)?;
        let (zeta, _) = self.prop.variation(0);
        let lam = self.prop.chart.conformal_factor(&q);
        Ok(lam * lam * zeta.dot(&mu))
    }
}

/// Integrates the vertical-initial Jacobi field over [0, horizon] from
/// `state`, sampling f at accepted steps plus the requested checkpoints,
/// locating zeros by bisection.
fn scalar_run(
    metric: &FinslerMetric,
    state: &GeodesicState,
    horizon: f64,
    forced_times: &[f64],
) -> Result<JacobiSolution> {
    let mut prop = Propagator::new(metric, state, FLOW_TOL)?;
    let q = prop.q();
    let w = prop.w();
    let mu0 = kernel_section(metric, &prop.chart, &q, &w)?;
    prop.push_variation(Vec2::zeros(), mu0)?;
    prop.set_max_step(0.04 * horizon.min(10.0).max(0.5));

    let mut run = ScalarState { metric, prop };
    let mut samples = vec![(0.0, 0.0)];
    let mut zeros: Vec<f64> = Vec::new();
    let mut fdots: Vec<f64> = Vec::new();

    let mut forced = forced_times.to_vec();
    forced.retain(|&t| t > 0.0 && t <= horizon + 1e-12);
    forced.sort_by(|a, b| a.partial_cmp(b).unwrap());
    forced.push(horizon);
    forced.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut prev_t = 0.0;
    let mut prev_f = 0.0;
    for &target in &forced {
        while run.prop.t < target - 1e-13 * target.max(1.0) {
            let cp = run.prop.checkpoint();
            run.prop.step_once(target)?;
            let t_now = run.prop.t;
            let f_now = run.f_value()?;
            if sign_changed(prev_f, f_now) {
                let (z, slope) = locate_zero(&mut run, &cp, prev_t, t_now, prev_f, f_now)?;
                if slope.abs() <= SLOPE_FLOOR {
                    return Err(Error::DegenerateIndex { fdot: slope });
                }
                zeros.push(z);
                fdots.push(slope);
                // Restore the post-step state to continue the sweep.
            }
            samples.push((t_now, f_now));
            prev_t = t_now;
            prev_f = f_now;
        }
    }
    Ok(JacobiSolution { f_samples: samples, zeros, fdot_at_zeros: fdots })
}

fn sign_changed(f_prev: f64, f_now: f64) -> bool {
    // The initial f = 0 never counts as a crossing (strict sign product).
    f_prev * f_now < 0.0
}

/// Bisects the bracketed zero by re-advancing from the step-start checkpoint.
fn locate_zero(
    run: &mut ScalarState,
    cp: &crate::geodesic::propagate::PropagatorCheckpoint,
    t_a: f64,
    t_b: f64,
    f_a: f64,
    f_b: f64,
) -> Result<(f64, f64)> {
    let resume = run.prop.checkpoint();
    let (mut ta, mut tb, mut fa) = (t_a, t_b, f_a);
    let mut fb = f_b;
    let eval = |run: &mut ScalarState, t: f64| -> Result<f64> {
        run.prop.restore(cp);
        run.prop.advance_to(t)?;
        run.f_value()
    };
    while tb - ta > ZERO_TOL {
        let tm = 0.5 * (ta + tb);
        let fm = eval(run, tm)?;
        if fa * fm <= 0.0 {
            tb = tm;
            fb = fm;
        } else {
            ta = tm;
            fa = fm;
        }
    }
    let z = 0.5 * (ta + tb);
    // Slope by central difference around the located zero.
    let h = 1e-6;
    let slope = if z - h > cp_time(cp) {
        let fp = eval(run, z + h)?;
        let fm = eval(run, z - h)?;
        (fp - fm) / (2.0 * h)
    } else {
        (fb - fa) / (tb - ta).max(1e-300)
    };
    run.prop.restore(&resume);
    Ok((z, slope))
}

fn cp_time(cp: &crate::geodesic::propagate::PropagatorCheckpoint) -> f64 {
    cp.t_value()
}

fn count_omega(run: &JacobiSolution, period: f64, m: u32) -> Result<(u32, u32)> {
    let end = period * m as f64;
    let mut ind = 0u32;
    for (i, &z) in run.zeros.iter().enumerate() {
        if z >= end - 1e-8 {
            break;
        }
        // Zeros essentially at an interior period endpoint still count, but
        // an ambiguous slope there is escalated rather than guessed.
        let near_endpoint = (z / period - (z / period).round()).abs() * period < 1e-8;
        if near_endpoint && run.fdot_at_zeros[i].abs() <= SLOPE_FLOOR {
            return Err(Error::DegenerateIndex { fdot: run.fdot_at_zeros[i] });
        }
        ind += 1;
    }
    // nul_Ω from the endpoint value of f.
    let f_end = f_at(run, end);
    let nul = if f_end.abs() < 1e-8 { 1 } else { 0 };
    Ok((ind, nul))
}

/// f at a sampled time (the scalar run forces samples at period multiples).
fn f_at(run: &JacobiSolution, t: f64) -> f64 {
    run.f_samples
        .iter()
        .min_by(|a, b| {
            (a.0 - t).abs().partial_cmp(&(b.0 - t).abs()).unwrap()
        })
        .map(|s| s.1)
        .unwrap_or(f64::NAN)
}

/// Monodromy of the linearized flow over one period, in the (U, W) frame of
/// the contact plane at the starting point.
fn monodromy(metric: &FinslerMetric, closed: &GeodesicArc) -> Result<Matrix2<f64>> {
    let state = base_state(metric, closed, 0.0)?;
    let mut prop = Propagator::new(metric, &state, FLOW_TOL)?;
    let chart0 = prop.chart.clone();
    let q0 = prop.q();
    let w0 = prop.w();
    let st0 = metric.chart_stack(&chart0, &q0, &w0, false)?;
    let mu0 = kernel_section(metric, &chart0, &q0, &w0)?;
    // W-lift: ζ = μ, ζ̇ = −(G_q·μ) w keeps the lift tangent to SM.
    let c0 = -(st0.g_q.dot(&mu0)) * w0;
    prop.push_variation(Vec2::zeros(), mu0)?; // U
    prop.push_variation(mu0, c0)?; // W
    prop.advance_to(closed.duration)?;
    prop.change_chart(&chart0)?;

    // Decompose both images in the frame (U, W, X, L) at the endpoint state.
    let q1 = prop.q();
    let w1 = prop.w();
    let st1 = metric.chart_stack(&chart0, &q1, &w1, false)?;
    let mu1 = kernel_section(metric, &chart0, &q1, &w1)?;
    let c1 = -(st1.g_q.dot(&mu1)) * w1;
    let accel = {
        let rhs = st1.g_q - st1.g_qw.transpose() * w1;
        let det = st1.g_ww.determinant();
        Vec2::new(
            (st1.g_ww[(1, 1)] * rhs.x - st1.g_ww[(0, 1)] * rhs.y) / det,
            (st1.g_ww[(0, 0)] * rhs.y - st1.g_ww[(1, 0)] * rhs.x) / det,
        )
    };
    let col = |zeta: Vec2, zeta_dot: Vec2| Vector4::new(zeta.x, zeta.y, zeta_dot.x, zeta_dot.y);
    let frame = Matrix4::from_columns(&[
        col(Vec2::zeros(), mu1),  // U
        col(mu1, c1),             // W
        col(w1, accel),           // X
        col(Vec2::zeros(), w1),   // L
    ]);
    let lu = frame.lu();
    let mut mono = Matrix2::zeros();
    for k in 0..2 {
        let (zeta, _) = prop.variation(k);
        let zeta_dot = prop.variation_zeta_dot(k)?;
        let rhs = col(zeta, zeta_dot);
        let coeffs = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Chart("degenerate contact frame".into()))?;
        mono[(0, k)] = coeffs[0];
        mono[(1, k)] = coeffs[1];
    }
    let det = mono.determinant();
    if (det - 1.0).abs() > 1e-4 {
        return Err(Error::Symplecticity { det });
    }
    Ok(mono)
}

fn classify_monodromy(m: &Matrix2<f64>) -> (Nullity, [C64; 2]) {
    let tr = m.trace();
    let det = m.determinant();
    let disc = tr * tr - 4.0 * det;
    let eigs = if disc >= 0.0 {
        let s = disc.sqrt();
        [
            Complex::new(0.5 * (tr + s), 0.0),
            Complex::new(0.5 * (tr - s), 0.0),
        ]
    } else {
        let s = (-disc).sqrt();
        [
            Complex::new(0.5 * tr, 0.5 * s),
            Complex::new(0.5 * tr, -0.5 * s),
        ]
    };
    let dist_id = (m - Matrix2::identity()).abs().max();
    if dist_id < 1e-6 {
        return (Nullity::Known(2), eigs);
    }
    let min_dev = eigs
        .iter()
        .map(|l| (l - Complex::new(1.0, 0.0)).norm())
        .fold(f64::INFINITY, f64::min);
    if min_dev < 1e-6 {
        (Nullity::Known(1), eigs)
    } else if min_dev < 1e-4 {
        (Nullity::Unknown, eigs)
    } else {
        (Nullity::Known(0), eigs)
    }
}

/// Pins the free index inside [ind_Ω, ind_Ω + 1] using the nullity relations.
fn pin_free_index(ind_omega: u32, nul_omega: u32, nul: Nullity) -> Result<FreeIndex> {
    match nul {
        Nullity::Known(2) => {
            // Full degeneracy forces ind = ind_Ω and odd parity.
            if ind_omega % 2 == 0 {
                return Err(Error::RelationViolation(format!(
                    "nul = 2 requires odd ind, got ind_Ω = {ind_omega}"
                )));
            }
            Ok(FreeIndex::Exact(ind_omega))
        }
        Nullity::Known(n) => {
            let hi_budget = (ind_omega + nul_omega + 1).saturating_sub(n as u32);
            let hi = (ind_omega + 1).min(hi_budget.max(ind_omega));
            if hi == ind_omega {
                Ok(FreeIndex::Exact(ind_omega))
            } else {
                Ok(FreeIndex::Range(ind_omega, hi))
            }
        }
        Nullity::Unknown => Ok(FreeIndex::Range(ind_omega, ind_omega + 1)),
    }
}

fn validate_relations(reports: &[IndexReport]) -> Result<()> {
    let base = &reports[0];
    for r in reports {
        // (ii) nul_Ω ≤ dim M − 1 = 1.
        if r.nul_omega > 1 {
            return Err(Error::RelationViolation(format!(
                "nul_Ω({}) = {} > 1",
                r.m, r.nul_omega
            )));
        }
        // (i) nul ≤ 2 holds by construction of the 2×2 monodromy.
        // Iterate inequality ind_Ω(γ^m) ≥ m·ind_Ω(γ).
        if r.ind_omega < r.m * base.ind_omega {
            return Err(Error::RelationViolation(format!(
                "ind_Ω(γ^{}) = {} < m·ind_Ω(γ) = {}",
                r.m,
                r.ind_omega,
                r.m * base.ind_omega
            )));
        }
        if r.ind_omega + r.nul_omega < r.m * (base.ind_omega + base.nul_omega) {
            return Err(Error::RelationViolation(format!(
                "ind_Ω + nul_Ω fails the iterate inequality at m = {}",
                r.m
            )));
        }
        // (v) equality under nul_Ω(γ) = 1.
        if base.nul_omega == 1 {
            let expect = r.m * base.ind_omega + r.m - 1;
            if r.ind_omega != expect || r.nul_omega != 1 {
                return Err(Error::RelationViolation(format!(
                    "nul_Ω = 1 iteration law fails at m = {}: ind_Ω = {} (expected {}), nul_Ω = {}",
                    r.m, r.ind_omega, expect, r.nul_omega
                )));
            }
        }
        // (vi) under nul(γ) = 2.
        if base.nul == Nullity::Known(2) {
            if r.nul != Nullity::Known(2) {
                return Err(Error::RelationViolation(format!(
                    "nul(γ) = 2 but nul(γ^{}) = {}",
                    r.m, r.nul
                )));
            }
            if let FreeIndex::Exact(i) = r.ind {
                if i % 2 == 0 {
                    return Err(Error::RelationViolation(format!(
                        "nul = 2 requires odd ind(γ^{}), got {i}",
                        r.m
                    )));
                }
            }
        }
        // (iii)/(iv) are already encoded in the pinning of `ind`.
    }
    Ok(())
}

#[cfg(test)]
mod tests;
