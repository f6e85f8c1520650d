//! Shared oracles for the integration and acceptance suites. These are
//! independent of the library's own numerical paths: plain adaptive
//! quadrature of explicit integrands.

#![allow(dead_code)]

/// Ellipse perimeter P(a, b) = ∫₀^{2π} √(a² sin²u + b² cos²u) du by
/// adaptive Simpson quadrature to 1e-12.
pub fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let f = |u: f64| (a * a * u.sin().powi(2) + b * b * u.cos().powi(2)).sqrt();
    adaptive_simpson(&f, 0.0, 2.0 * std::f64::consts::PI, 1e-12, 30)
}

/// Adaptive Simpson on [x0, x1].
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, x0: f64, x1: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (x0 + x1);
    let (fa, fm, fb) = (f(x0), f(m), f(x1));
    let whole = (x1 - x0) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, x0, x1, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    x0: f64,
    x1: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (x0 + x1);
    let lm = 0.5 * (x0 + m);
    let rm = 0.5 * (m + x1);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - x0) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (x1 - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() < 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, x0, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_rec(f, m, x1, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Second route for the perimeter (sanity of the oracle itself): Ramanujan's
/// second approximation, accurate far beyond 1e-9 at these eccentricities.
pub fn ellipse_perimeter_ramanujan(a: f64, b: f64) -> f64 {
    let h = ((a - b) / (a + b)).powi(2);
    std::f64::consts::PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()))
}

#[test]
fn oracle_self_checks() {
    // The two independent routes agree, and P(1,1) = 2π.
    assert!((ellipse_perimeter(1.0, 1.0) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    for (a, b) in [(1.0, 1.1), (1.0, 1.2), (1.1, 1.2)] {
        let q = ellipse_perimeter(a, b);
        let r = ellipse_perimeter_ramanujan(a, b);
        assert!((q - r).abs() < 1e-8, "P({a},{b}): {q} vs {r}");
    }
}
