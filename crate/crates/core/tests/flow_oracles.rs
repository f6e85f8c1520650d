//! Curve-flow oracle tests: convergence into the geodesic neighborhood on
//! the ellipsoid and the convergence order of the dissipation identity.

mod common;

use common::ellipse_perimeter;
use finsler_sphere::curveflow::{dissipation_check, evolve, FlowOutcome, FlowParams, Loop};
use finsler_sphere::metric::FinslerMetric;
use finsler_sphere::sphere::Vec3;
use rand::rngs::StdRng;
use rand::SeedableRng;

/// A seed near the x₁x₂-plane ellipse flows into U(P(1,1.1), 1e-3).
#[test]
fn ellipsoid_seed_converges_to_plane_ellipse() {
    let m = FinslerMetric::ellipsoid(1.0, 1.1, 1.2).unwrap();
    let mut rng = StdRng::seed_from_u64(11);
    let lp = Loop::perturbed_circle(&Vec3::z(), 0.0, 128, 0.01, 2..=5, &mut rng).unwrap();
    let params = FlowParams {
        rho0: 0.6,
        ell_floor: 0.6,
        epsilon: 1e-3,
        t_max: 30.0,
        ..FlowParams::default()
    };
    let ev = evolve(&m, &lp, &params).unwrap();
    let expected = ellipse_perimeter(1.0, 1.1);
    match ev.outcome {
        FlowOutcome::Entered { ell, .. } => {
            assert!(
                (ell - expected).abs() < 1e-3,
                "entered at {ell}, oracle {expected}"
            );
        }
        other => panic!("expected convergence, got {other:?}"),
    }
}

/// The dissipation residual decreases by at least 2× under halving dt and
/// doubling the sample count (the residual is O(dt) + O(h⁴)).
#[test]
fn dissipation_residual_convergence_order() {
    let m = FinslerMetric::round();
    let run = |n: usize, dt_scale: f64| -> f64 {
        let mut rng = StdRng::seed_from_u64(42);
        let lp = Loop::perturbed_circle(&Vec3::z(), 0.0, n, 0.015, 2..=4, &mut rng).unwrap();
        let params = FlowParams {
            rho0: 0.6,
            ell_floor: 0.6,
            epsilon: 0.0, // fixed-horizon run: no neighborhood stop
            t_max: 0.5,
            dt_scale,
            ..FlowParams::default()
        };
        let ev = evolve(&m, &lp, &params).unwrap();
        assert_eq!(ev.outcome, FlowOutcome::TimedOut);
        dissipation_check(&ev.trace).unwrap()
    };
    let coarse = run(96, 1.0);
    let fine = run(192, 0.5);
    assert!(coarse < 1e-2, "coarse residual {coarse}");
    assert!(
        fine * 2.0 <= coarse,
        "refinement did not halve the residual: {coarse} → {fine}"
    );
}
