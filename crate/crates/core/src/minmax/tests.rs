use super::*;
use crate::metric::FinslerMetric;
use approx::assert_relative_eq;
use std::f64::consts::PI;

#[test]
fn family_member_lengths_round() {
    let fam = CircleFamily::new(1, 17).unwrap();
    let m = FinslerMetric::round();
    for (i, p) in fam.params().iter().enumerate() {
        let lp = fam.member_loop(i, 64).unwrap();
        let expected = 2.0 * PI * (1.0 - p.offset * p.offset).sqrt();
        assert_relative_eq!(lp.f_length(&m), expected, epsilon = 1e-6);
        assert!(lp.is_embedded());
    }
}

#[test]
fn families_are_nested() {
    let f1 = CircleFamily::new(1, 9).unwrap();
    let f2 = CircleFamily::new(2, 9).unwrap();
    let f3 = CircleFamily::new(3, 9).unwrap();
    let contains = |big: &CircleFamily, small: &CircleFamily| {
        small.params().iter().all(|p| {
            big.params().iter().any(|q| {
                (q.axis - p.axis).norm() < 1e-12 && (q.offset - p.offset).abs() < 1e-12
            })
        })
    };
    assert!(contains(&f2, &f1));
    assert!(contains(&f3, &f2));
    assert!(f1.len() < f2.len() && f2.len() < f3.len());
}

#[test]
fn bad_dimension_rejected() {
    assert!(CircleFamily::new(0, 9).is_err());
    assert!(CircleFamily::new(4, 9).is_err());
}

/// On the round sphere every sweepout's min-max value is 2π (Zoll).
#[test]
fn round_minmax_dim1() {
    let m = FinslerMetric::round();
    let fam = CircleFamily::new(1, 17).unwrap();
    let params = MinMaxParams {
        flow: crate::curveflow::FlowParams::with_rho0(0.7),
        max_epochs: 30,
        ..MinMaxParams::default()
    };
    let out = minmax_value(&m, &fam, &params).unwrap();
    assert!((out.ell - 2.0 * PI).abs() < 1e-3, "ℓ = {}", out.ell);
}

/// Equator polygon descends to a great circle with E = (2π)².
#[test]
fn broken_descent_equator() {
    let m = FinslerMetric::round();
    let k = 16;
    let verts: Vec<_> = (0..k)
        .map(|i| {
            let th = 2.0 * PI * i as f64 / k as f64;
            // mild wobble off the equator
            crate::sphere::SpherePoint::from_xyz(th.cos(), th.sin(), 0.05 * (3.0 * th).sin())
                .unwrap()
        })
        .collect();
    let seed = BrokenLoop::new(&m, verts).unwrap();
    let out = descend_broken(&m, &seed, 1e-6, 500).unwrap();
    assert!(
        (out.energy() - 4.0 * PI * PI).abs() < 1e-4,
        "E = {} vs {}",
        out.energy(),
        4.0 * PI * PI
    );
}

/// A tiny polygon collapses toward a point curve: E → 0.
#[test]
fn broken_descent_collapse() {
    let m = FinslerMetric::round();
    let k = 8;
    let verts: Vec<_> = (0..k)
        .map(|i| {
            let th = 2.0 * PI * i as f64 / k as f64;
            crate::sphere::SpherePoint::from_xyz(
                0.01 * th.cos(),
                0.01 * th.sin(),
                1.0,
            )
            .unwrap()
        })
        .collect();
    let seed = BrokenLoop::new(&m, verts).unwrap();
    let e0 = seed.energy();
    let out = descend_broken(&m, &seed, 1e-6, 2000).unwrap();
    assert!(out.energy() < 1e-3 * e0, "E = {} from {}", out.energy(), e0);
}

#[test]
fn broken_loop_domain_checks() {
    let m = FinslerMetric::round();
    assert!(BrokenLoop::new(
        &m,
        vec![
            crate::sphere::SpherePoint::from_xyz(1.0, 0.0, 0.0).unwrap(),
            crate::sphere::SpherePoint::from_xyz(0.0, 1.0, 0.0).unwrap(),
        ]
    )
    .is_err());
    // Antipodal-ish vertices exceed the injectivity bound.
    let far = BrokenLoop::new(
        &m,
        vec![
            crate::sphere::SpherePoint::from_xyz(1.0, 0.0, 0.0).unwrap(),
            crate::sphere::SpherePoint::from_xyz(-1.0, 0.05, 0.0).unwrap(),
            crate::sphere::SpherePoint::from_xyz(0.0, 0.0, 1.0).unwrap(),
        ],
    );
    assert!(matches!(far, Err(Error::DomainExit { .. })));
}
