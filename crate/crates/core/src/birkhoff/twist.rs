//! Boundary extension by conjugate times, twist detection, and
//! periodic-point search on the annulus.

use super::retmap::{return_map, ReturnOutcome};
use super::AnnulusChart;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default flight-time cap factor (× period) for return maps.
pub const T_CAP_FACTOR: f64 = 20.0;
/// Boundary standoff for the s-grid.
pub const S_STANDOFF: f64 = 1e-3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum BoundaryExtension {
    Extended {
        t_grid: Vec<f64>,
        /// Second forward conjugate parameter t₂(t) (absolute, unwrapped).
        t2: Vec<f64>,
        /// Second backward conjugate parameter t₋₂(t) (absolute, unwrapped).
        tm2: Vec<f64>,
    },
    /// No conjugate points within the horizon 3ℓ — the scenario where the
    /// Birkhoff boundary map is not defined by conjugate times.
    NoConjugatePoints,
}

/// Tabulates t ↦ t_{±2} from Jacobi conjugate times on a parameter grid,
/// enforcing monotonicity.
pub fn boundary_extension(chart: &AnnulusChart) -> Result<BoundaryExtension> {
    chart.conjugate_tables().cloned()
}

pub(super) fn compute_extension(chart: &AnnulusChart) -> Result<BoundaryExtension> {
    let n = 64;
    let period = chart.period();
    let mut t_grid = Vec::with_capacity(n);
    let mut t2 = Vec::with_capacity(n);
    let mut tm2 = Vec::with_capacity(n);
    let mut missing = 0usize;
    for i in 0..n {
        let t = period * i as f64 / n as f64;
        t_grid.push(t);
        match chart.jacobi_t2(t)? {
            Some((_, z2)) => t2.push(t + z2),
            None => {
                missing += 1;
                t2.push(f64::NAN);
            }
        }
        // Backward: conjugate times of the reversed ray.
        let state = {
            let (x, v) = chart.gamma(t);
            let base = crate::sphere::SpherePoint::new(x)?;
            crate::geodesic::GeodesicState::unit(chart.metric, base, -v)?
        };
        match crate::jacobi::first_two_zeros(chart.metric, &state, 3.0 * period)? {
            Some((_, z2)) => tm2.push(t - z2),
            None => {
                missing += 1;
                tm2.push(f64::NAN);
            }
        }
    }
    if missing == 2 * n {
        return Ok(BoundaryExtension::NoConjugatePoints);
    }
    if missing > 0 {
        return Err(Error::Extension(format!(
            "{missing} of {} grid rays lack conjugate points while others have them",
            2 * n
        )));
    }
    // Monotone nondecreasing, with periodic wrap consistency.
    for w in t2.windows(2) {
        if w[1] < w[0] - 1e-6 {
            return Err(Error::Extension(format!(
                "t₂ not monotone: {} then {}",
                w[0], w[1]
            )));
        }
    }
    if t2[0] + period < t2[n - 1] - 1e-6 {
        return Err(Error::Extension("t₂ winding exceeds one period".into()));
    }
    Ok(BoundaryExtension::Extended { t_grid, t2, tm2 })
}

impl BoundaryExtension {
    /// Interpolated t₂(t) − t, periodic in t.
    pub fn forward_offset(&self, t: f64, period: f64) -> Option<f64> {
        match self {
            BoundaryExtension::NoConjugatePoints => None,
            BoundaryExtension::Extended { t_grid, t2, .. } => {
                Some(interp_periodic(t_grid, t2, t, period) - t)
            }
        }
    }

    pub fn backward_offset(&self, t: f64, period: f64) -> Option<f64> {
        match self {
            BoundaryExtension::NoConjugatePoints => None,
            BoundaryExtension::Extended { t_grid, tm2, .. } => {
                Some(t - interp_periodic(t_grid, tm2, t, period))
            }
        }
    }
}

/// Linear interpolation of a table y(t) with y(t + P) = y(t) + winding·P.
fn interp_periodic(t_grid: &[f64], y: &[f64], t: f64, period: f64) -> f64 {
    let n = t_grid.len();
    let tt = t.rem_euclid(period);
    let wraps = ((t - tt) / period).round();
    let h = period / n as f64;
    let i = ((tt / h).floor() as usize).min(n - 1);
    let frac = (tt - t_grid[i]) / h;
    let (y0, y1) = if i + 1 < n {
        (y[i], y[i + 1])
    } else {
        (y[i], y[0] + period)
    };
    y0 + frac * (y1 - y0) + wraps * period
}

/// Continuous lift tabulation of the Birkhoff map.
#[derive(Debug, Clone)]
pub struct LiftTable {
    pub t_grid: Vec<f64>,
    /// s from +1−δ down to −1+δ.
    pub s_grid: Vec<f64>,
    /// Continuous displacement δt(t, s), seeded at δt(t, 1) = t₂ − t − period.
    pub delta_t: Vec<Vec<f64>>,
    pub s_hit: Vec<Vec<f64>>,
    pub flight: Vec<Vec<f64>>,
}

impl LiftTable {
    /// Bilinear reference displacement at (t, s); t periodic, s clamped.
    pub fn reference(&self, t: f64, s: f64, period: f64) -> f64 {
        let nt = self.t_grid.len();
        let tt = t.rem_euclid(period);
        let h = period / nt as f64;
        let i = ((tt / h).floor() as usize).min(nt - 1);
        let ft = (tt - self.t_grid[i]) / h;
        let ip = (i + 1) % nt;
        // s-grid is descending.
        let ns = self.s_grid.len();
        let mut j = 0;
        while j + 2 < ns && self.s_grid[j + 1] > s {
            j += 1;
        }
        let (s0, s1) = (self.s_grid[j], self.s_grid[j + 1]);
        let fs = ((s0 - s) / (s0 - s1)).clamp(0.0, 1.0);
        let v00 = self.delta_t[i][j];
        let v01 = self.delta_t[i][j + 1];
        let v10 = self.delta_t[ip][j];
        let v11 = self.delta_t[ip][j + 1];
        (1.0 - ft) * ((1.0 - fs) * v00 + fs * v01) + ft * ((1.0 - fs) * v10 + fs * v11)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwistReport {
    pub t_grid: Vec<f64>,
    /// min over t of (t + period − t₂(t)); positive means the top boundary
    /// rotates backwards.
    pub margin_top: f64,
    /// min over t of (period − (t − t₋₂(t))).
    pub margin_bottom: f64,
    pub is_twist: bool,
    /// max |δt(t, 1−δ) − (t₂ − t)| over the grid.
    pub boundary_dev_top: f64,
    pub boundary_dev_bottom: f64,
    /// Lift displacement at the extreme interior s rows.
    pub lift_top: Vec<f64>,
    pub lift_bottom: Vec<f64>,
}

/// Tabulates the lift by continuous s-tracking and reports the twist margins.
pub fn twist_check(chart: &AnnulusChart) -> Result<TwistReport> {
    let table = lift_table(chart, 64, 65)?;
    let ext = chart.conjugate_tables()?;
    let period = chart.period();
    let BoundaryExtension::Extended { .. } = ext else {
        return Err(Error::InvalidParameter(
            "twist check requires conjugate-point boundary data".into(),
        ));
    };
    let nt = table.t_grid.len();
    let ns = table.s_grid.len();
    let mut margin_top = f64::INFINITY;
    let mut margin_bottom = f64::INFINITY;
    let mut dev_top = 0.0f64;
    let mut dev_bottom = 0.0f64;
    let mut lift_top = Vec::with_capacity(nt);
    let mut lift_bottom = Vec::with_capacity(nt);
    for (i, &t) in table.t_grid.iter().enumerate() {
        let fwd = ext.forward_offset(t, period).unwrap();
        let bwd = ext.backward_offset(t, period).unwrap();
        // Lift convention: a(t, 1) = t₂ − period, a(t, −1) = t₋₂ + period, so
        // margin_top = t − a(t,1) and margin_bottom = a(t,−1) − t.
        margin_top = margin_top.min(period - fwd);
        margin_bottom = margin_bottom.min(period - bwd);
        dev_top = dev_top.max((table.delta_t[i][0] - (fwd - period)).abs());
        dev_bottom = dev_bottom.max((table.delta_t[i][ns - 1] - (period - bwd)).abs());
        lift_top.push(table.delta_t[i][0]);
        lift_bottom.push(table.delta_t[i][ns - 1]);
    }
    let report = TwistReport {
        t_grid: table.t_grid.clone(),
        margin_top,
        margin_bottom,
        is_twist: margin_top > 0.0 && margin_bottom > 0.0,
        boundary_dev_top: dev_top,
        boundary_dev_bottom: dev_bottom,
        lift_top,
        lift_bottom,
    };
    Ok(report)
}

/// Builds (and caches) the continuous lift tabulation.
pub fn lift_table_cached<'a>(chart: &'a AnnulusChart<'_>) -> Result<&'a LiftTable> {
    if let Some(t) = chart.lift_table.get() {
        return Ok(t);
    }
    let table = lift_table(chart, 64, 65)?;
    let _ = chart.lift_table.set(table);
    Ok(chart.lift_table.get().unwrap())
}

fn lift_table(chart: &AnnulusChart, nt: usize, ns: usize) -> Result<LiftTable> {
    if let Some(t) = chart.lift_table.get() {
        if t.t_grid.len() == nt {
            return Ok(t.clone());
        }
    }
    let period = chart.period();
    let ext = chart.conjugate_tables()?.clone();
    let t_cap = T_CAP_FACTOR * period;
    match try_lift_table(chart, &ext, nt, ns, period, t_cap) {
        Ok(t) => Ok(t),
        Err(Error::LiftError { .. }) => {
            // One retry on a refined s-grid.
            try_lift_table(chart, &ext, nt, 2 * ns - 1, period, t_cap)
        }
        Err(e) => Err(e),
    }
}

fn try_lift_table(
    chart: &AnnulusChart,
    ext: &BoundaryExtension,
    nt: usize,
    ns: usize,
    period: f64,
    t_cap: f64,
) -> Result<LiftTable> {
    let t_grid: Vec<f64> = (0..nt).map(|i| period * i as f64 / nt as f64).collect();
    let s_grid: Vec<f64> = (0..ns)
        .map(|j| {
            let u = j as f64 / (ns - 1) as f64;
            (1.0 - S_STANDOFF) * (1.0 - 2.0 * u)
        })
        .collect();
    let mut delta_t = vec![vec![0.0; ns]; nt];
    let mut s_hit = vec![vec![0.0; ns]; nt];
    let mut flight = vec![vec![0.0; ns]; nt];
    use rayon::prelude::*;
    let rows: Vec<Result<(Vec<f64>, Vec<f64>, Vec<f64>)>> = t_grid
        .par_iter()
        .map(|&t| {
            let mut row_dt = vec![0.0; ns];
            let mut row_s = vec![0.0; ns];
            let mut row_tau = vec![0.0; ns];
            // Seed the branch at the top boundary with the lift convention
            // a(t, 1) = t₂ − period, i.e. displacement t₂ − t − period.
            let mut reference = ext
                .forward_offset(t, period)
                .ok_or_else(|| Error::InvalidParameter("no boundary data".into()))?
                - period;
            for (j, &s) in s_grid.iter().enumerate() {
                let rec = match return_map(chart, t, s, t_cap)? {
                    ReturnOutcome::Hit(r) => r,
                    ReturnOutcome::NoReturn { .. } => {
                        return Err(Error::Extension(format!(
                            "Birkhoff map undefined at (t, s) = ({t:.4}, {s:.4}) up to {t_cap:.2}"
                        )))
                    }
                };
                let raw = (rec.hit.0 - t).rem_euclid(period);
                // Nearest branch to the running reference.
                let k = ((reference - raw) / period).round();
                let lifted = raw + k * period;
                let jump = (lifted - reference).abs();
                if j > 0 && jump > 0.5 * period {
                    return Err(Error::LiftError { jump });
                }
                row_dt[j] = lifted;
                row_s[j] = rec.hit.1;
                row_tau[j] = rec.flight_time;
                reference = lifted;
            }
            Ok((row_dt, row_s, row_tau))
        })
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        let (dt, sh, tau) = row?;
        delta_t[i] = dt;
        s_hit[i] = sh;
        flight[i] = tau;
    }
    Ok(LiftTable { t_grid, s_grid, delta_t, s_hit, flight })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicPoint {
    pub t: f64,
    pub s: f64,
    pub residual: f64,
    /// Total flight time of the p-fold orbit (its F-length).
    pub orbit_length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicPoints {
    pub p: u32,
    pub q: i32,
    pub points: Vec<PeriodicPoint>,
    /// Newton Jacobian singular across the seed grid with vanishing
    /// displacement: a continuum of fixed points (Zoll-degenerate case).
    pub continuum: bool,
}

/// Newton search for fixed points of the lifted ψᵖ composed with the
/// translation by −q periods, from grid seeds.
pub fn periodic_points(
    chart: &AnnulusChart,
    p: u32,
    q: i32,
    seeds: Option<Vec<(f64, f64)>>,
) -> Result<PeriodicPoints> {
    if p == 0 {
        return Err(Error::InvalidParameter("p must be positive".into()));
    }
    if gcd(p as u64, q.unsigned_abs() as u64) != 1 {
        return Err(Error::InvalidParameter(format!(
            "p and q must be coprime, got ({p}, {q})"
        )));
    }
    let period = chart.period();
    let table = lift_table_cached(chart)?;
    let t_cap = T_CAP_FACTOR * period;

    // Lifted p-fold displacement D(t, s) = (ψ̃ᵖ_t − t − q·period, ψᵖ_s − s).
    let lifted = |t: f64, s: f64| -> Result<(f64, f64, f64)> {
        let mut cur_t = t;
        let mut cur_s = s;
        let mut total = 0.0;
        let mut flight = 0.0;
        for _ in 0..p {
            let rec = match return_map(chart, cur_t, cur_s, t_cap)? {
                ReturnOutcome::Hit(r) => r,
                ReturnOutcome::NoReturn { .. } => {
                    return Err(Error::Extension(format!(
                        "Birkhoff map undefined at ({cur_t:.4}, {cur_s:.4})"
                    )))
                }
            };
            let raw = (rec.hit.0 - cur_t).rem_euclid(period);
            let reference = table.reference(cur_t, cur_s, period);
            let k = ((reference - raw) / period).round();
            total += raw + k * period;
            flight += rec.flight_time;
            cur_t = t + total;
            cur_s = rec.hit.1;
        }
        Ok((cur_t, cur_s, flight))
    };
    let displacement = |t: f64, s: f64| -> Result<(f64, f64, f64)> {
        let (lt, ls, flight) = lifted(t, s)?;
        Ok((lt - t - q as f64 * period, ls - s, flight))
    };

    let seeds = seeds.unwrap_or_else(|| {
        let mut v = Vec::new();
        for i in 0..12 {
            for j in 0..9 {
                let t = period * i as f64 / 12.0;
                let s = 0.85 * (1.0 - 2.0 * j as f64 / 8.0);
                v.push((t, s));
            }
        }
        v
    });

    // Continuum detection: displacement vanishing across the seed grid.
    let mut zero_seeds = 0usize;
    let mut first_err = None;
    let mut evals = Vec::with_capacity(seeds.len());
    for &(t, s) in &seeds {
        match displacement(t, s) {
            Ok((dt, ds, _)) => {
                if dt.abs() < 1e-8 && ds.abs() < 1e-8 {
                    zero_seeds += 1;
                }
                evals.push(Some((dt, ds)));
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
                evals.push(None);
            }
        }
    }
    if zero_seeds * 5 >= seeds.len() * 4 {
        return Ok(PeriodicPoints { p, q, points: Vec::new(), continuum: true });
    }

    let mut points: Vec<PeriodicPoint> = Vec::new();
    for (&(t0, s0), ev) in seeds.iter().zip(&evals) {
        if ev.is_none() {
            continue;
        }
        let mut t = t0;
        let mut s = s0;
        let mut converged = None;
        for _ in 0..30 {
            let Ok((dt, ds, flight)) = displacement(t, s) else { break };
            let norm = (dt * dt + ds * ds).sqrt();
            if norm < 1e-8 {
                converged = Some((t, s, norm, flight));
                break;
            }
            // FD Jacobian of the 2D displacement.
            let h = 1e-6;
            let Ok((dt_t, ds_t, _)) = displacement(t + h, s) else { break };
            let Ok((dt_s, ds_s, _)) = displacement(t, s + h) else { break };
            let j00 = (dt_t - dt) / h;
            let j10 = (ds_t - ds) / h;
            let j01 = (dt_s - dt) / h;
            let j11 = (ds_s - ds) / h;
            let det = j00 * j11 - j01 * j10;
            if det.abs() < 1e-12 {
                break;
            }
            let step_t = (j11 * dt - j01 * ds) / det;
            let step_s = (j00 * ds - j10 * dt) / det;
            t -= step_t.clamp(-0.3 * period, 0.3 * period);
            s -= step_s.clamp(-0.4, 0.4);
            if s.abs() > 1.0 - S_STANDOFF {
                break;
            }
        }
        if let Some((t, s, residual, flight)) = converged {
            let t = t.rem_euclid(period);
            let dup = points.iter().any(|pp| {
                let dt = (pp.t - t).abs().min(period - (pp.t - t).abs());
                dt < 1e-6 && (pp.s - s).abs() < 1e-6
            });
            if !dup {
                points.push(PeriodicPoint { t, s, residual, orbit_length: flight });
            }
        }
    }
    points.sort_by(|a, b| (a.t, a.s).partial_cmp(&(b.t, b.s)).unwrap());
    Ok(PeriodicPoints { p, q, points, continuum: false })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
