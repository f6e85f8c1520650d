//! Ellipsoid geodesic facts checked against the quadrature oracle and
//! planar-symmetry arguments.

mod common;

use common::ellipse_perimeter;
use finsler_sphere::curveflow::Loop;
use finsler_sphere::geodesic::{distance, flow, refine_closed_geodesic, GeodesicState};
use finsler_sphere::metric::FinslerMetric;
use finsler_sphere::sphere::{SpherePoint, Vec3};

fn ellipsoid() -> FinslerMetric {
    FinslerMetric::ellipsoid(1.0, 1.1, 1.2).unwrap()
}

/// The x₁x₂-plane circle is a geodesic by reflection symmetry; the flow must
/// keep the orbit on that plane for a full period.
#[test]
fn planar_section_stays_planar() {
    let m = ellipsoid();
    let period = ellipse_perimeter(1.0, 1.1);
    let x = SpherePoint::from_xyz(1.0, 0.0, 0.0).unwrap();
    let state = GeodesicState::unit(&m, x, Vec3::new(0.0, 1.0, 0.0)).unwrap();
    let arc = flow(&m, &state, period, 1e-11).unwrap();
    for s in &arc.samples {
        assert!(
            s.state.point.coords().z.abs() < 1e-7,
            "left the plane: z = {}",
            s.state.point.coords().z
        );
    }
    // One period of the plane ellipse returns to the start.
    assert!(arc.closure_mismatch() < 1e-6, "mismatch {}", arc.closure_mismatch());
}

/// Refining the x₁x₂ seed gives the ellipse perimeter P(1, 1.1).
#[test]
fn refined_ellipse_length_matches_quadrature() {
    let m = ellipsoid();
    let seed = Loop::circle(&Vec3::z(), 0.0, 96).unwrap();
    let arc = refine_closed_geodesic(&m, &seed, 1e-9).unwrap();
    let expected = ellipse_perimeter(1.0, 1.1);
    assert!(
        (arc.duration - expected).abs() < 1e-8,
        "length {} vs oracle {}",
        arc.duration,
        expected
    );
}

/// Antipodal points on the x₁-axis connect through one of the two planar
/// half-ellipses; the distance is the smaller half-perimeter.
#[test]
fn antipodal_distance_two_candidate_minimum() {
    let m = ellipsoid();
    let x = SpherePoint::from_xyz(1.0, 0.0, 0.0).unwrap();
    let y = SpherePoint::from_xyz(-1.0, 0.0, 0.0).unwrap();
    let d = distance(&m, &x, &y).unwrap();
    let expected = 0.5 * ellipse_perimeter(1.0, 1.1).min(ellipse_perimeter(1.0, 1.2));
    assert!((d - expected).abs() < 1e-6, "d = {d}, oracle = {expected}");
}
