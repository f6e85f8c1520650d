use finsler_sphere::metric::FinslerMetric;
use finsler_sphere::minmax::{descend_broken, BrokenLoop};
use finsler_sphere::sphere::SpherePoint;
use std::f64::consts::PI;

fn main() {
    let m = FinslerMetric::round();
    let k = 16;
    let verts: Vec<_> = (0..k)
        .map(|i| {
            let th = 2.0 * PI * i as f64 / k as f64;
            SpherePoint::from_xyz(th.cos(), th.sin(), 0.05 * (3.0 * th).sin()).unwrap()
        })
        .collect();
    let seed = BrokenLoop::new(&m, verts).unwrap();
    for tol in [1e-5, 1e-6, 1e-7, 1e-8] {
        match descend_broken(&m, &seed, tol, 500) {
            Ok(out) => println!("tol {tol:.0e}: E = {:.10} (target {:.10})", out.energy(), 4.0*PI*PI),
            Err(e) => println!("tol {tol:.0e}: ERR {e}"),
        }
    }
}
