//! Invariant battery for a metric: pointwise metric identities, geodesic
//! flow invariants, and curve-flow equivariances, with machine-readable
//! results.

use crate::curveflow::{self, Loop};
use crate::error::Result;
use crate::geodesic::{self, GeodesicState};
use crate::metric::chart_f1;
use crate::sphere::{Chart, SpherePoint, TangentVector, Vec3};
use crate::FinslerMetric;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub max_err: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidateReport {
    pub metric: String,
    pub all_passed: bool,
    pub checks: Vec<Check>,
}

fn random_unit_tangent(rng: &mut ChaCha8Rng) -> (SpherePoint, Vec3) {
    loop {
        let x = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if x.norm() < 0.1 {
            continue;
        }
        let base = SpherePoint::new(x).unwrap();
        let raw = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let v = raw - base.coords() * raw.dot(&base.coords());
        if v.norm() > 0.1 {
            return (base, v.normalize());
        }
    }
}

/// Runs the invariant battery: metric identities on random unit tangents,
/// strong convexity on a grid, geodesic conservation and reversal laws, and
/// the curve-flow equivariances.
pub fn battery(
    metric: &FinslerMetric,
    samples: usize,
    grid: usize,
    seed: u64,
) -> Result<ValidateReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut push = |name: &str, max_err: f64, tol: f64| {
        checks.push(Check {
            name: name.into(),
            passed: max_err <= tol,
            max_err,
            tolerance: tol,
        });
    };

    // Pointwise metric invariants.
    let mut e_hom: f64 = 0.0;
    let mut e_rev: f64 = 0.0;
    let mut e_euler: f64 = 0.0;
    let mut e_scale: f64 = 0.0;
    for _ in 0..samples {
        let (x, v) = random_unit_tangent(&mut rng);
        let lambda = rng.gen_range(0.2..4.0);
        let f = metric.eval(&x, &v);
        e_hom = e_hom.max((metric.eval(&x, &(lambda * v)) - lambda * f).abs() / (lambda * f));
        e_rev = e_rev.max((metric.eval(&x, &(-v)) - f).abs());
        let chart = Chart::new(x);
        let q = chart.map(&x.coords());
        let w = chart.pull_vector(&q, &v);
        let (fc, _, f_w) = chart_f1(metric, &chart, &q, &w)?;
        e_euler = e_euler.max((f_w.dot(&w) - fc).abs() / fc.max(1.0));
        let (_, _, f_w2) = chart_f1(metric, &chart, &q, &(lambda * w))?;
        e_scale = e_scale.max((f_w2 - f_w).norm());
    }
    push("homogeneity", e_hom, 1e-9);
    push("reversibility", e_rev, 1e-12);
    push("euler_identity", e_euler, 1e-9);
    push("fiber_gradient_scale_invariance", e_scale, 1e-8);

    // Strong convexity on the unit-bundle grid.
    let (a_min, _) = metric.convexity_scan(grid);
    push("convexity_grid", if a_min > 0.0 { 0.0 } else { -a_min }, 0.0);

    // Geodesic invariants.
    let mut e_energy: f64 = 0.0;
    let mut e_reversal: f64 = 0.0;
    for _ in 0..5 {
        let (x, v) = random_unit_tangent(&mut rng);
        let state = GeodesicState::unit(metric, x, v)?;
        let arc = geodesic::flow(metric, &state, 2.5, 1e-11)?;
        e_energy = e_energy.max(arc.speed_drift);
        let fwd = arc.endpoint();
        let back = geodesic::flow_endpoint(metric, &fwd.reversed(), 2.5, 1e-11)?;
        e_reversal = e_reversal.max(back.mismatch(&state.reversed()));
    }
    push("energy_conservation", e_energy, 1e-6);
    push("flow_reversal_symmetry", e_reversal, 1e-6);

    let inj = geodesic::injectivity_radius_estimate(metric);
    let mut e_expdist: f64 = 0.0;
    for _ in 0..5 {
        let (x, v) = random_unit_tangent(&mut rng);
        let r = rng.gen_range(0.3..0.8) * inj;
        let tv = TangentVector::new(x, v);
        let f = metric.eval(&x, &tv.vec());
        let y = geodesic::exp_map(metric, &x, &tv.scale(r / f))?;
        let d = geodesic::distance(metric, &x, &y)?;
        e_expdist = e_expdist.max((d - r).abs());
    }
    push("exp_distance_consistency", e_expdist, 1e-6);

    // Curve-flow invariants on a resolved perturbed circle.
    let lp = Loop::perturbed_circle(&Vec3::z(), 0.1, 192, 0.02, 2..=4, &mut rng)?;
    let (v_field, dev) = curveflow::normal_velocity_checked(metric, &lp)?;
    push("velocity_dual_path", dev, 1e-5);

    let shift = 13;
    let uniform = lp.redistributed()?;
    let rotated = uniform.rotate_params(shift);
    let v_rot = curveflow::normal_velocity(metric, &rotated)?;
    let v_uni = curveflow::normal_velocity(metric, &uniform)?;
    let mut e_equiv: f64 = 0.0;
    for i in 0..uniform.len() {
        e_equiv = e_equiv.max((v_rot[i] - v_uni[(i + shift) % uniform.len()]).abs());
    }
    push("velocity_equivariance", e_equiv, 1e-6);

    let rev = lp.reversed();
    let v_rev = curveflow::normal_velocity(metric, &rev)?;
    let n = lp.len();
    let mut e_odd: f64 = 0.0;
    for i in 0..n {
        e_odd = e_odd.max((v_rev[i] + v_field[n - 1 - i]).abs());
    }
    push("velocity_oddness_under_reversal", e_odd, 1e-6);

    let all_passed = checks.iter().all(|c| c.passed);
    Ok(ValidateReport { metric: metric.name().to_string(), all_passed, checks })
}
