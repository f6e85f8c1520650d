use super::*;
use crate::sphere::{Chart, SpherePoint, Vec2, Vec3};
use approx::assert_relative_eq;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn pt(x: f64, y: f64, z: f64) -> SpherePoint {
    SpherePoint::from_xyz(x, y, z).unwrap()
}

fn random_unit_tangent(rng: &mut StdRng) -> (SpherePoint, Vec3) {
    loop {
        let x = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if x.norm() < 0.1 {
            continue;
        }
        let base = SpherePoint::new(x).unwrap();
        let raw = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let v = raw - base.coords() * raw.dot(&base.coords());
        if v.norm() > 0.1 {
            return (base, v.normalize());
        }
    }
}

#[test]
fn round_examples() {
    let m = FinslerMetric::round();
    assert_relative_eq!(m.eval(&pt(1.0, 0.0, 0.0), &Vec3::new(0.0, 2.0, 0.0)), 2.0);
    assert_relative_eq!(m.eval(&pt(1.0, 0.0, 0.0), &Vec3::new(0.0, -2.0, 0.0)), 2.0);
    // F_vv[w, w] = 1 on the unit round bundle.
    let x = pt(0.0, 0.0, 1.0);
    let chart = Chart::new(x);
    let q = chart.map(&x.coords());
    let w = chart.pull_vector(&q, &Vec3::new(1.0, 0.0, 0.0));
    let fs = m.chart_f_stack(&chart, &q, &w).unwrap();
    let ww = chart.pull_vector(&q, &Vec3::new(0.0, 1.0, 0.0));
    assert_relative_eq!((fs.f_ww * ww).dot(&ww), 1.0, epsilon = 1e-8);
}

#[test]
fn ellipsoid_examples() {
    let m = FinslerMetric::ellipsoid(1.0, 1.1, 1.2).unwrap();
    assert_relative_eq!(
        m.eval(&pt(1.0, 0.0, 0.0), &Vec3::new(0.0, 1.0, 0.0)),
        1.1,
        epsilon = 1e-12
    );
    let s = 1.0 / 2.0_f64.sqrt();
    assert_relative_eq!(
        m.eval(&pt(1.0, 0.0, 0.0), &Vec3::new(0.0, s, s)),
        ((1.1f64.powi(2) + 1.2f64.powi(2)) / 2.0).sqrt(),
        epsilon = 1e-12
    );

    // (1,1,1) is the round metric.
    let id = FinslerMetric::ellipsoid(1.0, 1.0, 1.0).unwrap();
    let round = FinslerMetric::round();
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..20 {
        let (x, v) = random_unit_tangent(&mut rng);
        assert_relative_eq!(id.eval(&x, &v), round.eval(&x, &v), epsilon = 1e-12);
    }

    assert!(FinslerMetric::ellipsoid(1.2, 1.1, 1.0).is_err());
    assert!(FinslerMetric::ellipsoid(0.0, 1.0, 1.0).is_err());
}

#[test]
fn perturbed_examples() {
    let round = FinslerMetric::round();
    let zero = FinslerMetric::perturbed_riemannian(0.0, Bump::ZSquared).unwrap();
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..10 {
        let (x, v) = random_unit_tangent(&mut rng);
        assert_relative_eq!(zero.eval(&x, &v), round.eval(&x, &v), epsilon = 1e-14);
    }
    let m = FinslerMetric::perturbed_riemannian(0.1, Bump::ZSquared).unwrap();
    assert_relative_eq!(
        m.eval(&pt(0.0, 0.0, 1.0), &Vec3::new(1.0, 0.0, 0.0)),
        1.1,
        epsilon = 1e-12
    );
    for _ in 0..10 {
        let (x, v) = random_unit_tangent(&mut rng);
        assert_relative_eq!(m.eval(&x, &v), m.eval(&x, &(-v)), epsilon = 1e-12);
    }
    assert!(FinslerMetric::perturbed_riemannian(0.35, Bump::ZSquared).is_err());
}

#[test]
fn quartic_examples() {
    let round = FinslerMetric::round();
    let zero = FinslerMetric::quartic(0.0).unwrap();
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..10 {
        let (x, v) = random_unit_tangent(&mut rng);
        assert_relative_eq!(zero.eval(&x, &v), round.eval(&x, &v), epsilon = 1e-13);
    }
    let m = FinslerMetric::quartic(0.05).unwrap();
    for _ in 0..20 {
        let (x, v) = random_unit_tangent(&mut rng);
        assert_relative_eq!(m.eval(&x, &v), m.eval(&x, &(-v)), epsilon = 1e-12);
    }
    // Dense-grid convexity oracle: the floor must be strictly positive.
    assert!(m.convexity_floor() > 0.0);
    // The metric is genuinely non-Riemannian: A deviates from a constant.
    let (a_min, _) = m.convexity_scan(2000);
    assert!(a_min < 0.999, "expected anisotropic A, floor {a_min}");
}

#[test]
fn quartic_convexity_rejection() {
    // Large ε must be caught by the grid check before any flow sees it.
    let err = FinslerMetric::quartic(0.97);
    match err {
        Err(Error::ConvexityViolation { a, .. }) => assert!(a <= 0.0),
        other => panic!("expected ConvexityViolation, got {other:?}"),
    }
}

#[test]
fn fd_stack_matches_analytic_on_round() {
    let analytic = FinslerMetric::round();
    let fd = analytic.fd_only();
    assert!(!fd.has_analytic_derivatives());
    let mut rng = StdRng::seed_from_u64(23);
    for _ in 0..100 {
        let (x, v) = random_unit_tangent(&mut rng);
        let chart = Chart::new(x);
        let q = chart.map(&x.coords());
        let w = chart.pull_vector(&q, &v);
        let (f_a, _, fw_a) = stack::chart_f1(&analytic, &chart, &q, &w).unwrap();
        let (f_f, _, fw_f) = stack::chart_f1(&fd, &chart, &q, &w).unwrap();
        assert_relative_eq!(f_a, f_f, epsilon = 1e-12);
        assert!((fw_a - fw_f).norm() < 1e-7, "F_v deviation {:?}", (fw_a - fw_f).norm());
    }
}

#[test]
fn fd_euler_identity_and_symmetry() {
    let fd = FinslerMetric::quartic(0.05).unwrap().fd_only();
    let mut rng = StdRng::seed_from_u64(29);
    for _ in 0..25 {
        let (x, v) = random_unit_tangent(&mut rng);
        let chart = Chart::new(x);
        let q = chart.map(&x.coords());
        let w = chart.pull_vector(&q, &v);
        let (f, _, f_w) = stack::chart_f1(&fd, &chart, &q, &w).unwrap();
        assert_relative_eq!(f_w.dot(&w), f, epsilon = 1e-6);
        let fs = fd.chart_f_stack(&chart, &q, &w).unwrap();
        assert!((fs.f_ww[(0, 1)] - fs.f_ww[(1, 0)]).abs() < 1e-6);
    }
}

/// Homogeneity, reversibility, Euler identity, and F_v(x, λv)-invariance over
/// 1000 random unit tangent vectors per built-in metric.
#[test]
fn invariant_battery_all_families() {
    let metrics = [
        FinslerMetric::round(),
        FinslerMetric::ellipsoid(1.0, 1.1, 1.2).unwrap(),
        FinslerMetric::perturbed_riemannian(0.1, Bump::ZSquared).unwrap(),
        FinslerMetric::quartic(0.05).unwrap(),
    ];
    let mut rng = StdRng::seed_from_u64(71);
    for m in &metrics {
        for _ in 0..1000 {
            let (x, v) = random_unit_tangent(&mut rng);
            let lambda = rng.gen_range(0.2..4.0);
            let f = m.eval(&x, &v);
            // Positive 1-homogeneity (relative 1e-9).
            assert!(
                (m.eval(&x, &(lambda * v)) - lambda * f).abs() <= 1e-9 * lambda * f,
                "{}: homogeneity",
                m.name()
            );
            // Reversibility (1e-12).
            assert!((m.eval(&x, &(-v)) - f).abs() < 1e-12, "{}: reversibility", m.name());
            let chart = Chart::new(x);
            let q = chart.map(&x.coords());
            let w = chart.pull_vector(&q, &v);
            let (f_c, _, f_w) = stack::chart_f1(m, &chart, &q, &w).unwrap();
            // Euler identity F_v·v = F (relative 1e-9).
            assert!(
                (f_w.dot(&w) - f_c).abs() <= 1e-9 * f_c.max(1.0),
                "{}: euler",
                m.name()
            );
            // F_v(x, λv) = F_v(x, v) within 1e-8.
            let (_, _, f_w_scaled) = stack::chart_f1(m, &chart, &q, &(lambda * w)).unwrap();
            assert!(
                (f_w_scaled - f_w).norm() < 1e-8,
                "{}: F_v scale invariance ({:.2e})",
                m.name(),
                (f_w_scaled - f_w).norm()
            );
        }
        // Strong convexity floor on the 10⁴ grid.
        assert!(m.convexity_floor() > 0.0, "{}: convexity", m.name());
    }
}

/// The Euler–Lagrange covector must be chart-independent: evaluated in two
/// overlapping charts it agrees after the covector transition.
#[test]
fn chart_independence_of_el_covector() {
    let m = FinslerMetric::ellipsoid(1.0, 1.1, 1.2).unwrap();
    // A short curve u ↦ γ(u) with analytic derivative, kept away from both poles.
    let gamma = |u: f64| {
        Vec3::new(u.cos(), u.sin() * 0.8, u.sin() * 0.6)
    };
    let u0 = 0.4;
    let x0 = SpherePoint::new(gamma(u0)).unwrap();
    let chart_a = Chart::new(x0);
    let chart_b = Chart::new(SpherePoint::new(gamma(u0 + 0.35)).unwrap());
    let el = |chart: &Chart| -> Vec2 {
        // d/du F_v(γ, γ') − F_x(γ, γ') by 4th-order differencing of F_v along u.
        let h = 1e-3;
        let qdot = |u: f64| {
            let q = chart.map(&gamma(u).normalize());
            q
        };
        let vel = |u: f64| (qdot(u + h) - qdot(u - h)) / (2.0 * h)
            - ((qdot(u + 2.0 * h) - qdot(u - 2.0 * h)) / (4.0 * h)
                - (qdot(u + h) - qdot(u - h)) / (2.0 * h))
                / 3.0; // Richardson to 4th order
        let fv = |u: f64| {
            let q = chart.map(&gamma(u).normalize());
            let (_, _, f_w) = stack::chart_f1(&m, chart, &q, &vel(u)).unwrap();
            f_w
        };
        let d_fv = (fv(u0 - 2.0 * h) - 8.0 * fv(u0 - h) + 8.0 * fv(u0 + h) - fv(u0 + 2.0 * h))
            / (12.0 * h);
        let q = chart.map(&gamma(u0).normalize());
        let (_, f_q, _) = stack::chart_f1(&m, chart, &q, &vel(u0)).unwrap();
        d_fv - f_q
    };
    let cov_a = el(&chart_a);
    let cov_b = el(&chart_b);
    // Transition differential dψ: chart_a coords → chart_b coords at x0.
    let qa = chart_a.map(&x0.coords());
    let qb = chart_b.map(&x0.coords());
    let mut dpsi = crate::sphere::Mat2::zeros();
    for k in 0..2 {
        let mut e = Vec2::zeros();
        e[k] = 1.0;
        let v = chart_a.push_vector(&qa, &e);
        let wb = chart_b.pull_vector(&qb, &v);
        dpsi[(0, k)] = wb.x;
        dpsi[(1, k)] = wb.y;
    }
    // Covectors pull back: cov_a = dψᵀ cov_b.
    let pulled = dpsi.transpose() * cov_b;
    assert!(
        (cov_a - pulled).norm() < 1e-6,
        "EL covector chart dependence: {:?} vs {:?}",
        cov_a,
        pulled
    );
}

#[test]
fn convexity_positive_on_unit_bundle_grid() {
    // 10⁴-sample grid per metric, A > 0 everywhere (strong convexity).
    for m in [
        FinslerMetric::round(),
        FinslerMetric::ellipsoid(1.0, 1.1, 1.2).unwrap(),
        FinslerMetric::quartic(0.05).unwrap(),
    ] {
        let (a_min, _) = m.convexity_scan(10_000);
        assert!(a_min > 0.0, "{}: A_min = {a_min}", m.name());
    }
}
