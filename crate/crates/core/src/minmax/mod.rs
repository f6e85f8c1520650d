//! Min-max search over families of round circles, and broken-geodesic
//! energy descent.
//!
//! The sweepout families are the 1-, 2-, and 3-parameter sub-families of the
//! canonical family of round circles (axis in RP², offset λ ∈ [−1, 1]); the
//! curve-shortening semi-flow drags every member down and the family maximum
//! of the length stabilizes at the min-max level, with the argmax member as
//! a near-critical witness. Witnesses are refined into closed geodesics by
//! multiple shooting and deduplicated geometrically.

use crate::curveflow::{self, FlowParams, Loop};
use crate::error::{Error, Result};
use crate::geodesic::{self, GeodesicArc};
use crate::jacobi::{self, IndexReport};
use crate::metric::FinslerMetric;
use crate::sphere::{SpherePoint, Vec3};
use rayon::prelude::*;

/// Parameters of one circle: plane orthogonal to `axis` at offset λ.
#[derive(Debug, Clone, Copy)]
pub struct CircleParam {
    pub axis: Vec3,
    pub offset: f64,
}

/// Discrete sweepout family of round circles.
#[derive(Debug, Clone)]
pub struct CircleFamily {
    pub dim: u8,
    members: Vec<CircleParam>,
}

/// Offset clamp: |λ| ≤ 1 − OFFSET_MARGIN keeps members embedded circles.
pub const OFFSET_MARGIN: f64 = 1e-3;

impl CircleFamily {
    /// Builds the canonical family of the given dimension. `resolution` is
    /// the number of offset samples; axis grids are derived from it. The
    /// grids are nested: dim-3 contains dim-2 contains dim-1.
    pub fn new(dim: u8, resolution: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!(
                "family dimension must be 1, 2, or 3, got {dim}"
            )));
        }
        let offsets: Vec<f64> = (0..resolution)
            .map(|i| {
                let t = i as f64 / (resolution - 1).max(1) as f64;
                (2.0 * t - 1.0) * (1.0 - OFFSET_MARGIN)
            })
            .collect();
        let mut axes: Vec<Vec3> = vec![Vec3::z()];
        if dim >= 2 {
            // Great circle of directions through e₃ and e₂. For axis-aligned
            // ellipsoids this ring contains the middle principal ellipse as a
            // member but not the longest one, so the 2-sweepout hangs at the
            // middle critical level instead of the top one.
            let n_axes = (resolution / 2).max(8);
            for j in 1..n_axes {
                let th = std::f64::consts::PI * j as f64 / n_axes as f64;
                axes.push(Vec3::new(0.0, th.sin(), th.cos()));
            }
        }
        if dim == 3 {
            // Hemisphere grid (RP² fundamental domain) beyond the y–z ring,
            // including the φ = 0 column so all three coordinate axes are
            // represented.
            let n_theta = (resolution / 8).max(4);
            let n_phi = (resolution / 4).max(8);
            for it in 1..=n_theta {
                let theta = std::f64::consts::FRAC_PI_2 * it as f64 / n_theta as f64;
                for ip in 0..n_phi {
                    let phi = std::f64::consts::PI * ip as f64 / n_phi as f64;
                    if (phi - std::f64::consts::FRAC_PI_2).abs() < 1e-12 {
                        continue; // already on the y–z ring
                    }
                    axes.push(Vec3::new(
                        theta.sin() * phi.cos(),
                        theta.sin() * phi.sin(),
                        theta.cos(),
                    ));
                }
            }
        }
        let mut members = Vec::with_capacity(axes.len() * offsets.len());
        for axis in &axes {
            for &offset in &offsets {
                members.push(CircleParam { axis: *axis, offset });
            }
        }
        Ok(Self { dim, members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn params(&self) -> &[CircleParam] {
        &self.members
    }

    pub fn member_loop(&self, idx: usize, n_samples: usize) -> Result<Loop> {
        let p = &self.members[idx];
        Loop::circle(&p.axis, p.offset, n_samples)
    }
}

/// Knobs of the min-max search.
#[derive(Debug, Clone)]
pub struct MinMaxParams {
    pub n_samples: usize,
    pub epoch_time: f64,
    pub max_epochs: usize,
    /// Members whose length falls below (1 − margin) × family max are frozen
    /// (length only decreases along the flow, so they cannot carry the max).
    pub prune_margin: f64,
    /// Relative family-max stabilization threshold per epoch.
    pub stall_tol: f64,
    pub flow: FlowParams,
    /// Stop when the argmax member's max|V| falls below this.
    pub witness_v: f64,
}

impl Default for MinMaxParams {
    fn default() -> Self {
        Self {
            n_samples: 64,
            epoch_time: 0.4,
            max_epochs: 80,
            prune_margin: 0.12,
            stall_tol: 1e-5,
            flow: FlowParams::default(),
            witness_v: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinMaxOutcome {
    /// Estimated min-max level (family max after stabilization).
    pub ell: f64,
    /// Near-critical witness loop achieving the family max.
    pub witness: Loop,
    /// max|V| of the witness snapshot.
    pub witness_v: f64,
    /// Family max after each epoch.
    pub history: Vec<f64>,
}

struct MemberState {
    lp: Loop,
    length: f64,
    max_v: f64,
    frozen: bool,
    best_snapshot: Option<(Loop, f64, f64)>,
}

/// Evolves every family member under a shared epoch schedule and returns the
/// stabilized family maximum with its witness.
pub fn minmax_value(
    metric: &FinslerMetric,
    family: &CircleFamily,
    params: &MinMaxParams,
) -> Result<MinMaxOutcome> {
    let mut states: Vec<MemberState> = (0..family.len())
        .map(|i| {
            let lp = family.member_loop(i, params.n_samples)?.redistributed()?;
            let length = lp.f_length(metric);
            Ok(MemberState {
                lp,
                length,
                max_v: f64::INFINITY,
                frozen: false,
                best_snapshot: None,
            })
        })
        .collect::<Result<_>>()?;

    let mut history = Vec::new();
    let mut last_max = f64::INFINITY;
    for _epoch in 0..params.max_epochs {
        let family_max = states
            .iter()
            .map(|s| s.length)
            .fold(f64::NEG_INFINITY, f64::max);
        let freeze_below = family_max * (1.0 - params.prune_margin);
        for s in states.iter_mut() {
            if !s.frozen && s.length < freeze_below {
                s.frozen = true;
            }
        }

        // Evolve the active members for one epoch, in parallel.
        let flow = FlowParams {
            t_max: params.epoch_time,
            epsilon: 0.0, // no neighborhood stopping inside an epoch
            ell_floor: params.flow.rho0 * 1.05,
            ..params.flow.clone()
        };
        let results: Vec<Option<Result<(Loop, f64, f64)>>> = states
            .par_iter()
            .map(|s| {
                if s.frozen {
                    return None;
                }
                Some(evolve_epoch(metric, &s.lp, &flow))
            })
            .collect();
        for (s, r) in states.iter_mut().zip(results) {
            match r {
                None => {}
                Some(Ok((lp, length, max_v))) => {
                    s.lp = lp;
                    s.length = length;
                    s.max_v = max_v;
                    if length < params.flow.rho0 * 1.10 {
                        s.frozen = true; // collapsed into the cutoff zone
                    }
                    if max_v < 0.1 {
                        let better = match &s.best_snapshot {
                            Some((_, _, v)) => max_v < *v,
                            None => true,
                        };
                        if better {
                            s.best_snapshot = Some((s.lp.clone(), length, max_v));
                        }
                    }
                }
                Some(Err(e)) => return Err(e),
            }
        }

        let family_max = states
            .iter()
            .map(|s| s.length)
            .fold(f64::NEG_INFINITY, f64::max);
        history.push(family_max);

        let argmax = states
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.length.partial_cmp(&b.1.length).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let stable = (last_max - family_max).abs() <= params.stall_tol * family_max;
        last_max = family_max;
        if stable && states[argmax].max_v < params.witness_v {
            let s = &states[argmax];
            return Ok(MinMaxOutcome {
                ell: family_max,
                witness: s.lp.clone(),
                witness_v: s.max_v,
                history,
            });
        }
    }

    // Budget exhausted: fall back to the best near-critical snapshot seen.
    let argbest = states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.best_snapshot.is_some())
        .max_by(|a, b| {
            let la = a.1.best_snapshot.as_ref().unwrap().1;
            let lb = b.1.best_snapshot.as_ref().unwrap().1;
            la.partial_cmp(&lb).unwrap()
        })
        .map(|(i, _)| i);
    if let Some(i) = argbest {
        let (lp, length, v) = states[i].best_snapshot.clone().unwrap();
        if v < 0.1 {
            return Ok(MinMaxOutcome { ell: length, witness: lp, witness_v: v, history });
        }
    }
    Err(Error::Timeout {
        t: params.epoch_time * params.max_epochs as f64,
        what: "family max did not stabilize within the epoch budget".into(),
    })
}

/// One epoch of plain time evolution (no neighborhood stopping).
fn evolve_epoch(metric: &FinslerMetric, lp: &Loop, flow: &FlowParams) -> Result<(Loop, f64, f64)> {
    let ev = curveflow::evolve(metric, lp, flow)?;
    let length = ev.final_loop.f_length(metric);
    let max_v = ev.trace.max_abs_v.last().copied().unwrap_or(f64::INFINITY);
    Ok((ev.final_loop, length, max_v))
}

// ---------------------------------------------------------------------------
// Broken geodesics

/// A point of the broken-geodesic space Λ_k: k vertices with consecutive
/// Finsler distances below the injectivity bound.
#[derive(Debug, Clone)]
pub struct BrokenLoop {
    pub vertices: Vec<SpherePoint>,
    energy: f64,
}

impl BrokenLoop {
    /// Validates membership in Λ_k and caches the energy
    /// E_k = k Σ d(x_i, x_{i+1})².
    pub fn new(metric: &FinslerMetric, vertices: Vec<SpherePoint>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidParameter("broken loops need k ≥ 3".into()));
        }
        let inj = geodesic::injectivity_radius_estimate(metric);
        let k = vertices.len();
        let mut energy = 0.0;
        for i in 0..k {
            let d = geodesic::distance(metric, &vertices[i], &vertices[(i + 1) % k])?;
            if d >= inj {
                return Err(Error::DomainExit { segment: i, length: d });
            }
            energy += d * d;
        }
        energy *= k as f64;
        Ok(Self { vertices, energy })
    }

    pub fn k(&self) -> usize {
        self.vertices.len()
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Suggested vertex count for a seed loop of the given length.
    pub fn suggested_k(metric: &FinslerMetric, seed_length: f64) -> usize {
        let inj = geodesic::injectivity_radius_estimate(metric);
        ((4.0 * seed_length / inj).ceil() as usize).max(3)
    }

    /// Downsamples a discrete loop to a broken loop with k vertices.
    pub fn from_loop(metric: &FinslerMetric, lp: &Loop, k: usize) -> Result<Self> {
        let n = lp.len();
        let verts = (0..k)
            .map(|j| SpherePoint::new(lp.samples()[(j * n) / k]))
            .collect::<Result<Vec<_>>>()?;
        BrokenLoop::new(metric, verts)
    }
}

/// Projected gradient descent on the vertex positions until the energy
/// gradient norm falls below `tol`. The limit is a closed geodesic or a
/// point curve.
pub fn descend_broken(
    metric: &FinslerMetric,
    seed: &BrokenLoop,
    tol: f64,
    max_iters: usize,
) -> Result<BrokenLoop> {
    let k = seed.k();
    let kf = k as f64;
    let inj = geodesic::injectivity_radius_estimate(metric);
    let mut verts = seed.vertices.clone();
    let mut energy = seed.energy();

    let grad_of = |verts: &[SpherePoint]| -> Result<(Vec<Vec3>, f64)> {
        // ∇_{x_i} E = 2k[−d_i F_v(x_i, u_i) + d_{i−1} F_v(x_i, ū_{i−1})],
        // the exact first variation of the edge distances through the
        // projected ambient fiber gradients of the connecting geodesics.
        let mut grads = vec![Vec3::zeros(); k];
        let mut norm_sq = 0.0;
        for i in 0..k {
            let next = (i + 1) % k;
            let conn = geodesic::connect(metric, &verts[i], &verts[next])?;
            if conn.length >= inj {
                return Err(Error::DomainExit { segment: i, length: conn.length });
            }
            let d = conn.length;
            if d > 1e-12 {
                let fv_dep = metric.fiber_gradient(&verts[i], &conn.initial.vec())?;
                let fv_arr = metric.fiber_gradient(&verts[next], &conn.arrival.vec())?;
                grads[i] -= 2.0 * kf * d * fv_dep;
                grads[next] += 2.0 * kf * d * fv_arr;
            }
        }
        for g in &grads {
            norm_sq += g.norm_squared();
        }
        Ok((grads, norm_sq.sqrt()))
    };

    let mut step = 0.5 / kf;
    for _ in 0..max_iters {
        let (grads, gnorm) = grad_of(&verts)?;
        if gnorm < tol {
            return BrokenLoop::new(metric, verts);
        }
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<SpherePoint> = verts
                .iter()
                .zip(&grads)
                .map(|(x, g)| SpherePoint::new(x.coords() - step * g))
                .collect::<Result<_>>()?;
            match BrokenLoop::new(metric, trial.clone()) {
                Ok(bl) if bl.energy() <= energy - 0.25 * step * gnorm * gnorm => {
                    verts = trial;
                    energy = bl.energy();
                    accepted = true;
                    step = (step * 1.5).min(2.0 / kf);
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !accepted {
            if gnorm < tol * 10.0 {
                return BrokenLoop::new(metric, verts);
            }
            return Err(Error::Timeout {
                t: 0.0,
                what: format!("broken descent stalled at |∇E| = {gnorm:.3e}"),
            });
        }
    }
    Err(Error::Timeout {
        t: 0.0,
        what: format!("broken descent did not reach |∇E| < {tol:.1e}"),
    })
}

// ---------------------------------------------------------------------------
// Three geodesics

#[derive(Debug, Clone)]
pub struct FoundGeodesic {
    pub arc: GeodesicArc,
    pub length: f64,
    pub from_dim: u8,
    pub simple: bool,
    pub index: IndexReport,
    pub witness: Loop,
}

#[derive(Debug)]
pub enum ThreeGeodesics {
    /// Three geometrically distinct simple closed geodesics, by length.
    Distinct(Box<[FoundGeodesic; 3]>),
    /// Fewer distinct limits (e.g. Zoll or surfaces of revolution).
    Degenerate { found: Vec<FoundGeodesic>, note: String },
}

impl ThreeGeodesics {
    pub fn all(&self) -> Vec<&FoundGeodesic> {
        match self {
            ThreeGeodesics::Distinct(arr) => arr.iter().collect(),
            ThreeGeodesics::Degenerate { found, .. } => found.iter().collect(),
        }
    }
}

/// Runs the three sweepouts, refines the witnesses, deduplicates, and
/// attaches index reports.
pub fn three_geodesics(
    metric: &FinslerMetric,
    params: &MinMaxParams,
    resolution: usize,
) -> Result<ThreeGeodesics> {
    let mut found: Vec<FoundGeodesic> = Vec::new();
    for dim in 1..=3u8 {
        let family = CircleFamily::new(dim, resolution)?;
        let outcome = minmax_value(metric, &family, params)?;
        let arc = geodesic::refine_closed_geodesic(metric, &outcome.witness, 1e-9)?;
        let length = arc.duration;
        let lp = arc.to_loop(params.n_samples.max(96))?;
        let simple = lp.is_embedded();
        let index = jacobi::index_report(metric, &arc, 1)?;
        found.push(FoundGeodesic {
            arc,
            length,
            from_dim: dim,
            simple,
            index,
            witness: outcome.witness,
        });
    }

    // Geometric dedup: lengths within 1e-4·ℓ and Hausdorff distance of the
    // sample sets below 1e-3 (reversal-invariant on point sets).
    let mut distinct: Vec<FoundGeodesic> = Vec::new();
    for g in found {
        let dup = distinct.iter().any(|h| {
            (g.length - h.length).abs() < 1e-4 * g.length.max(h.length)
                && hausdorff(&g.arc, &h.arc) < 1e-3
        });
        if !dup {
            distinct.push(g);
        }
    }
    distinct.sort_by(|a, b| a.length.partial_cmp(&b.length).unwrap());

    if distinct.len() == 3 {
        let mut it = distinct.into_iter();
        let a = it.next().unwrap();
        let b = it.next().unwrap();
        let c = it.next().unwrap();
        Ok(ThreeGeodesics::Distinct(Box::new([a, b, c])))
    } else {
        let note = format!(
            "{} geometrically distinct limit(s); coinciding min-max levels \
             indicate a Zoll-like or rotationally degenerate spectrum",
            distinct.len()
        );
        Ok(ThreeGeodesics::Degenerate { found: distinct, note })
    }
}

/// Symmetric Hausdorff distance between the sample sets of two arcs, in the
/// round metric.
pub fn hausdorff(a: &GeodesicArc, b: &GeodesicArc) -> f64 {
    let one_sided = |p: &GeodesicArc, q: &GeodesicArc| -> f64 {
        p.samples
            .iter()
            .map(|s| {
                q.samples
                    .iter()
                    .map(|t| s.state.point.angle_to(&t.state.point))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

#[cfg(test)]
mod tests;
