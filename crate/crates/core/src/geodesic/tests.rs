use super::*;
use crate::metric::FinslerMetric;
use crate::sphere::Vec3;
use approx::assert_relative_eq;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

fn pt(x: f64, y: f64, z: f64) -> SpherePoint {
    SpherePoint::from_xyz(x, y, z).unwrap()
}

fn unit_state(metric: &FinslerMetric, x: SpherePoint, dir: Vec3) -> GeodesicState {
    GeodesicState::unit(metric, x, dir).unwrap()
}

#[test]
fn round_great_circle_half_period() {
    let m = FinslerMetric::round();
    let state = unit_state(&m, pt(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0));
    let arc = flow(&m, &state, PI, 1e-11).unwrap();
    let end = arc.endpoint();
    assert!((end.point.coords() - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-8);
    assert!((end.velocity.vec() - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-8);
    assert!(arc.speed_drift < 1e-6, "speed drift {}", arc.speed_drift);
}

#[test]
fn round_great_circle_closes_after_full_period() {
    let m = FinslerMetric::round();
    let state = unit_state(&m, pt(0.3, -0.5, 0.81), Vec3::new(0.7, 0.7, 0.1));
    let arc = flow(&m, &state, 2.0 * PI, 1e-11).unwrap();
    assert!(arc.closure_mismatch() < 1e-8, "mismatch {}", arc.closure_mismatch());
}

#[test]
fn exp_map_examples() {
    let m = FinslerMetric::round();
    let x = pt(0.0, 0.0, 1.0);
    let v = crate::sphere::TangentVector::new(x, Vec3::new(1.0, 0.0, 0.0)).scale(PI / 2.0);
    let y = exp_map(&m, &x, &v).unwrap();
    assert!((y.coords() - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-8);

    let zero = crate::sphere::TangentVector::new(x, Vec3::zeros());
    assert_eq!(exp_map(&m, &x, &zero).unwrap().coords(), x.coords());

    let full = crate::sphere::TangentVector::new(x, Vec3::new(1.0, 0.0, 0.0)).scale(2.0 * PI);
    let back = exp_map(&m, &x, &full).unwrap();
    assert!((back.coords() - x.coords()).norm() < 1e-7);
}

#[test]
fn round_distance_quarter_circle() {
    let m = FinslerMetric::round();
    let d = distance(&m, &pt(1.0, 0.0, 0.0), &pt(0.0, 1.0, 0.0)).unwrap();
    assert_relative_eq!(d, PI / 2.0, epsilon = 1e-8);
}

#[test]
fn distance_is_symmetric_for_reversible_metrics() {
    let metrics = [
        FinslerMetric::ellipsoid(1.0, 1.1, 1.2).unwrap(),
        FinslerMetric::quartic(0.05).unwrap(),
    ];
    let mut rng = StdRng::seed_from_u64(5);
    for m in &metrics {
        for _ in 0..6 {
            let x = pt(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let dir = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let v = crate::sphere::TangentVector::new(x, dir);
            if v.norm() < 0.1 {
                continue;
            }
            let y = exp_map(m, &x, &v.scale(0.8 / v.norm())).unwrap();
            let dxy = distance(m, &x, &y).unwrap();
            let dyx = distance(m, &y, &x).unwrap();
            assert!((dxy - dyx).abs() < 1e-7, "{}: {dxy} vs {dyx}", m.name());
        }
    }
}

/// Flowing forward, reversing, and flowing back must return the reversed
/// start (reversibility of F).
#[test]
fn reversal_symmetry_of_the_flow() {
    let metrics = [
        FinslerMetric::round(),
        FinslerMetric::ellipsoid(1.0, 1.1, 1.2).unwrap(),
        FinslerMetric::quartic(0.05).unwrap(),
    ];
    let mut rng = StdRng::seed_from_u64(17);
    for m in &metrics {
        for _ in 0..4 {
            let x = pt(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let dir = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if crate::sphere::TangentVector::new(x, dir).norm() < 0.1 {
                continue;
            }
            let state = unit_state(m, x, dir);
            let t = 2.3;
            let fwd = flow_endpoint(m, &state, t, 1e-11).unwrap();
            let back = flow_endpoint(m, &fwd.reversed(), t, 1e-11).unwrap();
            let target = state.reversed();
            assert!(
                back.mismatch(&target) < 1e-6,
                "{}: reversal mismatch {}",
                m.name(),
                back.mismatch(&target)
            );
        }
    }
}

#[test]
fn exp_distance_consistency() {
    let m = FinslerMetric::ellipsoid(1.0, 1.1, 1.2).unwrap();
    let inj = injectivity_radius_estimate(&m);
    let mut rng = StdRng::seed_from_u64(41);
    for _ in 0..5 {
        let x = pt(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let dir = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let tv = crate::sphere::TangentVector::new(x, dir);
        if tv.norm() < 0.1 {
            continue;
        }
        let r = rng.gen_range(0.3..0.9) * inj;
        let f = m.eval(&x, &tv.vec());
        let v = tv.scale(r / f);
        let y = exp_map(&m, &x, &v).unwrap();
        let d = distance(&m, &x, &y).unwrap();
        assert!((d - r).abs() < 1e-6, "d = {d}, |v|_F = {r}");
    }
}

#[test]
fn injectivity_estimate_round() {
    let m = FinslerMetric::round();
    let est = injectivity_radius_estimate(&m);
    assert!(est >= 0.9 * 0.9 * PI && est <= PI, "estimate {est}");
}

#[test]
fn injectivity_estimate_scales_with_the_metric() {
    let one = injectivity_radius_estimate(&FinslerMetric::round());
    let two = injectivity_radius_estimate(&FinslerMetric::ellipsoid(2.0, 2.0, 2.0).unwrap());
    assert!((two / one - 2.0).abs() < 0.05 * 2.0, "ratio {}", two / one);
}

#[test]
fn injectivity_estimate_ellipsoid_bounds() {
    let m = FinslerMetric::ellipsoid(1.0, 1.1, 1.2).unwrap();
    let est = injectivity_radius_estimate(&m);
    assert!(est > 0.0 && est <= 1.2 * PI, "estimate {est}");
}

#[test]
fn refinement_rejects_far_seeds() {
    let m = FinslerMetric::round();
    // Latitude circle at colatitude π/4 has |V| = 1, far beyond the bound.
    let seed = crate::curveflow::Loop::circle(&Vec3::z(), (PI / 4.0).cos(), 64).unwrap();
    match refine_closed_geodesic(&m, &seed, 1e-9) {
        Err(crate::error::Error::InvalidParameter(_)) => {}
        other => panic!("expected precondition rejection, got {other:?}"),
    }
}

#[test]
fn refine_round_equator() {
    let m = FinslerMetric::round();
    let seed = crate::curveflow::Loop::circle(&Vec3::z(), 0.0, 64).unwrap();
    let arc = refine_closed_geodesic(&m, &seed, 1e-9).unwrap();
    assert!((arc.duration - 2.0 * PI).abs() < 1e-9, "length {}", arc.duration);
    assert!(arc.closure_mismatch() < 1e-7);
}
