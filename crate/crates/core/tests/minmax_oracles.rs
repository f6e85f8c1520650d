//! Degenerate min-max spectra: the Zoll round sphere and a surface of
//! revolution, plus the broken-geodesic descent on the ellipsoid.

mod common;

use common::ellipse_perimeter;
use finsler_sphere::curveflow::FlowParams;
use finsler_sphere::metric::FinslerMetric;
use finsler_sphere::minmax::{descend_broken, three_geodesics, BrokenLoop, MinMaxParams, ThreeGeodesics};
use finsler_sphere::sphere::SpherePoint;
use std::f64::consts::PI;

fn params() -> MinMaxParams {
    MinMaxParams {
        flow: FlowParams::with_rho0(0.6),
        ..MinMaxParams::default()
    }
}

/// Round sphere: all three sweepout values coincide at 2π and the witnesses
/// coalesce — the Zoll report.
#[test]
fn round_spectrum_is_degenerate() {
    let m = FinslerMetric::round();
    let result = three_geodesics(&m, &params(), 17).unwrap();
    match result {
        ThreeGeodesics::Degenerate { found, .. } => {
            assert!(!found.is_empty());
            for g in &found {
                assert!((g.length - 2.0 * PI).abs() < 1e-3, "length {}", g.length);
            }
        }
        ThreeGeodesics::Distinct(_) => panic!("round sphere reported three distinct geodesics"),
    }
}

/// Spheroid (1, 1, 1.2): the equator realizes the lowest level and the
/// congruent meridians carry a coinciding pair of min-max values at
/// P(1, 1.2) — the every-point-on-a-geodesic scenario.
#[test]
fn revolution_spectrum_has_coinciding_pair() {
    let m = FinslerMetric::ellipsoid(1.0, 1.0, 1.2).unwrap();
    let result = three_geodesics(&m, &params(), 17).unwrap();
    let meridian = ellipse_perimeter(1.0, 1.2);
    let lengths: Vec<f64> = result.all().iter().map(|g| g.length).collect();
    // The distinct levels are 2π (equator) and P(1, 1.2) (meridians); a
    // coinciding pair must sit at the meridian level.
    assert!(
        lengths.iter().any(|l| (l - 2.0 * PI).abs() < 1e-4),
        "equator level missing from {lengths:?}"
    );
    let meridian_hits = lengths
        .iter()
        .filter(|l| (**l - meridian).abs() < 1e-3)
        .count();
    match &result {
        ThreeGeodesics::Distinct(found) => {
            // Distinct curves, but the top two levels coincide in length.
            assert!(meridian_hits >= 2, "lengths {lengths:?}");
            assert!((found[1].length - found[2].length).abs() < 1e-4);
        }
        ThreeGeodesics::Degenerate { .. } => {
            // Witnesses coalesced onto congruent meridians.
            assert!(meridian_hits >= 1, "lengths {lengths:?}");
        }
    }
}

/// Broken-geodesic descent lands on the x₁x₃-plane ellipse: E_k → P(1,1.2)².
#[test]
fn broken_descent_ellipsoid_plane() {
    let m = FinslerMetric::ellipsoid(1.0, 1.1, 1.2).unwrap();
    let k = 24;
    let verts: Vec<_> = (0..k)
        .map(|i| {
            let th = 2.0 * PI * i as f64 / k as f64;
            // Near the x₁x₃ plane, with a slight twist off it.
            SpherePoint::from_xyz(th.cos(), 0.03 * (2.0 * th).sin(), th.sin()).unwrap()
        })
        .collect();
    let seed = BrokenLoop::new(&m, verts).unwrap();
    let out = descend_broken(&m, &seed, 1e-7, 3000).unwrap();
    let expected = ellipse_perimeter(1.0, 1.2).powi(2);
    let rel = (out.energy() - expected).abs() / expected;
    assert!(rel < 5e-3, "E = {} vs {} (rel {rel:.2e})", out.energy(), expected);
}
