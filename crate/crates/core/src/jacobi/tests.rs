use super::*;
use crate::geodesic::{flow, GeodesicState};
use crate::metric::FinslerMetric;
use crate::sphere::{SpherePoint, Vec3};
use std::f64::consts::PI;

fn round_great_circle(duration: f64) -> (FinslerMetric, crate::geodesic::GeodesicArc) {
    let m = FinslerMetric::round();
    let x = SpherePoint::from_xyz(1.0, 0.0, 0.0).unwrap();
    let state = GeodesicState::unit(&m, x, Vec3::new(0.0, 1.0, 0.0)).unwrap();
    let arc = flow(&m, &state, duration, 1e-11).unwrap();
    (m, arc)
}

/// On the round sphere the scalar Jacobi equation is f'' + f = 0, so the
/// vertical solution is sin(s).
#[test]
fn round_jacobi_field_is_sine() {
    let (m, arc) = round_great_circle(7.0);
    let sol = jacobi_field(&m, &arc, 0.0).unwrap();
    assert_eq!(sol.zeros.len(), 2, "zeros: {:?}", sol.zeros);
    assert!((sol.zeros[0] - PI).abs() < 1e-8);
    assert!((sol.zeros[1] - 2.0 * PI).abs() < 1e-8);
    for (t, f) in &sol.f_samples {
        assert!((f - t.sin()).abs() < 1e-7, "f({t}) = {f}");
    }
    for (z, fd) in sol.zeros.iter().zip(&sol.fdot_at_zeros) {
        assert!((fd.abs() - 1.0).abs() < 1e-5, "|f'({z})| = {fd}");
    }
}

#[test]
fn round_conjugate_times() {
    let (m, arc) = round_great_circle(2.0 * PI);
    let ct = conjugate_times(&m, &arc, 0.0, 2.0 * PI + 0.3).unwrap();
    assert!(ct.forward.len() >= 2);
    assert!((ct.forward[0] - PI).abs() < 1e-8);
    assert!((ct.forward[1] - 2.0 * PI).abs() < 1e-8);
    // Backward mirrors forward by reversibility.
    assert!((ct.backward[0] - PI).abs() < 1e-7);
}

#[test]
fn horizon_precondition() {
    let (m, arc) = round_great_circle(1.0);
    assert!(conjugate_times(&m, &arc, 0.0, 11.0).is_err());
}

#[test]
fn round_index_omega() {
    let (m, arc) = round_great_circle(2.0 * PI);
    assert_eq!(index_omega(&m, &arc, 0.0, 1).unwrap(), (1, 1));
    assert_eq!(index_omega(&m, &arc, 0.0, 2).unwrap(), (3, 1));
}

#[test]
fn round_floquet_is_identity() {
    let (m, arc) = round_great_circle(2.0 * PI);
    let (nul, eigs) = floquet(&m, &arc).unwrap();
    assert_eq!(nul, Nullity::Known(2));
    for e in eigs {
        assert!((e - nalgebra::Complex::new(1.0, 0.0)).norm() < 1e-6, "eig {e}");
    }
}

/// Round iterates satisfy ind_Ω(γ^m) = 2m − 1 with nul = 2 pinning ind.
#[test]
fn round_index_table() {
    let (m, arc) = round_great_circle(2.0 * PI);
    let table = index_table(&m, &arc, 5).unwrap();
    for (i, report) in table.iter().enumerate() {
        let mm = (i + 1) as u32;
        assert_eq!(report.ind_omega, 2 * mm - 1);
        assert_eq!(report.nul_omega, 1);
        assert_eq!(report.nul, Nullity::Known(2));
        assert_eq!(report.ind, FreeIndex::Exact(2 * mm - 1));
    }
}

#[test]
fn first_conjugate_time_round() {
    let m = FinslerMetric::round();
    let x = SpherePoint::from_xyz(0.0, 0.0, 1.0).unwrap();
    let state = GeodesicState::unit(&m, x, Vec3::new(1.0, 1.0, 0.0)).unwrap();
    let t1 = first_conjugate_time(&m, &state, 5.0).unwrap().unwrap();
    assert!((t1 - PI).abs() < 1e-8, "t1 = {t1}");
}

#[test]
fn interlacing_helper() {
    assert!(zeros_interlace(&[1.0, 3.0, 5.0], &[2.0, 4.0]));
    assert!(!zeros_interlace(&[1.0, 3.0], &[1.5, 2.5]));
}
