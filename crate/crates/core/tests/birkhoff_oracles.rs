//! Section-map oracles on the ellipsoid: the transverse-ellipse fixed point,
//! area preservation, exactness, reversibility conjugacy, and twist/index
//! consistency.

mod common;

use finsler_sphere::birkhoff::{
    periodic_points, return_map, twist_check, AnnulusChart, ReturnOutcome,
};
use finsler_sphere::curveflow::Loop;
use finsler_sphere::geodesic::refine_closed_geodesic;
use finsler_sphere::metric::FinslerMetric;
use finsler_sphere::sphere::Vec3;

fn ellipsoid() -> FinslerMetric {
    FinslerMetric::ellipsoid(1.0, 1.1, 1.2).unwrap()
}

fn chart_over_axis(m: &FinslerMetric, axis: Vec3) -> AnnulusChart<'_> {
    let seed = Loop::circle(&axis, 0.0, 96).unwrap();
    let arc = refine_closed_geodesic(m, &seed, 1e-9).unwrap();
    AnnulusChart::new(m, &arc).unwrap()
}

/// Starting tangent to the x₁x₃-ellipse at its crossing with the x₁x₂
/// section returns to the same (t, s): a fixed point of ψ.
#[test]
fn transverse_ellipse_is_fixed_point() {
    let m = ellipsoid();
    let chart = chart_over_axis(&m, Vec3::z());
    // Crossing at x = (1,0,0): find its arclength parameter on the section.
    let (t0, d) = chart.foot(&Vec3::new(1.0, 0.0, 0.0));
    assert!(d < 1e-9);
    // Direction of the x₁x₃-ellipse at that point: ±e₃.
    let s0 = chart.s_of(t0, &unit_f(&m, &Vec3::new(1.0, 0.0, 0.0), &Vec3::z())).unwrap();
    match return_map(&chart, t0, s0, 20.0 * chart.period()).unwrap() {
        ReturnOutcome::Hit(rec) => {
            let period = chart.period();
            let dt = (rec.hit.0 - t0).rem_euclid(period);
            let dt = dt.min(period - dt);
            assert!(dt < 1e-6, "t displacement {dt}");
            assert!((rec.hit.1 - s0).abs() < 1e-6, "s: {s0} → {}", rec.hit.1);
        }
        other => panic!("expected a hit, got {other:?}"),
    }
}

fn unit_f(m: &FinslerMetric, x: &Vec3, dir: &Vec3) -> Vec3 {
    let p = finsler_sphere::sphere::SpherePoint::new(*x).unwrap();
    let tv = finsler_sphere::sphere::TangentVector::new(p, *dir);
    tv.vec() / m.eval(&p, &tv.vec())
}

/// Interior finite-difference Jacobian of ψ has determinant 1 (area
/// preservation in the s dt coordinates).
#[test]
fn area_preservation_spot_checks() {
    let m = ellipsoid();
    let chart = chart_over_axis(&m, Vec3::z());
    let t_cap = 20.0 * chart.period();
    let h = 1e-4;
    for &(t, s) in &[(0.7, 0.25), (2.9, -0.4), (5.0, 0.0)] {
        let psi = |tt: f64, ss: f64| -> (f64, f64) {
            match return_map(&chart, tt, ss, t_cap).unwrap() {
                ReturnOutcome::Hit(rec) => rec.hit,
                _ => panic!("no return"),
            }
        };
        let base = psi(t, s);
        let pt = psi(t + h, s);
        let ps = psi(t, s + h);
        let period = chart.period();
        let wrap = |a: f64, b: f64| {
            let d = (a - b).rem_euclid(period);
            if d > 0.5 * period {
                d - period
            } else {
                d
            }
        };
        let j00 = wrap(pt.0, base.0) / h;
        let j10 = (pt.1 - base.1) / h;
        let j01 = wrap(ps.0, base.0) / h;
        let j11 = (ps.1 - base.1) / h;
        let det = j00 * j11 - j01 * j10;
        assert!((det - 1.0).abs() < 1e-3, "det ψ' = {det} at ({t}, {s})");
    }
}

/// Reversibility conjugacy: with ρ(t,s) = (t,−s), ψ∘ρ∘ψ∘ρ = id.
#[test]
fn reversibility_conjugacy() {
    let m = ellipsoid();
    let chart = chart_over_axis(&m, Vec3::z());
    let t_cap = 20.0 * chart.period();
    let period = chart.period();
    for &(t, s) in &[(1.1, 0.35), (4.0, -0.55)] {
        let step = |tt: f64, ss: f64| -> (f64, f64) {
            match return_map(&chart, tt, ss, t_cap).unwrap() {
                ReturnOutcome::Hit(rec) => rec.hit,
                _ => panic!("no return"),
            }
        };
        let (t1, s1) = step(t, -s); // ψ(ρ(t,s))
        let (t2, s2) = step(t1, -s1); // ψ(ρ(ψρ(t,s)))
        let dt = (t2 - t).rem_euclid(period);
        let dt = dt.min(period - dt);
        assert!(dt < 1e-5, "conjugacy t defect {dt}");
        assert!((s2 - s).abs() < 1e-5, "conjugacy s defect {}", (s2 - s).abs());
    }
}

/// The four crossings of the two transverse principal ellipses are found as
/// fixed points from default seeds, and each closes under the flow.
#[test]
fn ellipsoid_fixed_points_from_default_seeds() {
    let m = ellipsoid();
    let chart = chart_over_axis(&m, Vec3::z());
    let out = periodic_points(&chart, 1, 0, None).unwrap();
    assert!(!out.continuum);
    assert!(
        out.points.len() >= 4,
        "expected ≥ 4 fixed points, found {}: {:?}",
        out.points.len(),
        out.points
    );
    for p in &out.points {
        assert!(p.residual < 1e-8);
    }
}

/// Twist margins agree in sign with the based-index criterion
/// ind_Ω(t·γ) ≥ 2 ⟺ t₂ − t < period, at every grid t.
#[test]
fn twist_sign_matches_index_criterion() {
    let m = ellipsoid();
    for axis in [Vec3::z(), Vec3::x()] {
        let chart = chart_over_axis(&m, axis);
        let report = twist_check(&chart).unwrap();
        let period = chart.period();
        let ext = finsler_sphere::birkhoff::boundary_extension(&chart).unwrap();
        for &t in &report.t_grid {
            let fwd = ext.forward_offset(t, period).unwrap();
            let margin = period - fwd; // positive ⟺ t₂ − t < period
            let arc = chart.base();
            let (ind_omega, _) =
                finsler_sphere::jacobi::index_omega(&m, arc, t, 1).unwrap();
            let predicted = ind_omega >= 2;
            assert_eq!(
                margin > 0.0,
                predicted,
                "axis {axis:?}, t = {t}: margin {margin}, ind_Ω = {ind_omega}"
            );
        }
    }
}
