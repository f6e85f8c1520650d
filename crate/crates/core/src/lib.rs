//! Numerical laboratory for reversible Finsler metrics on the 2-sphere.
//!
//! The crate provides, on top of a small family of built-in metrics:
//!
//! - geodesic flow integration, exponential map, Finsler distance, and
//!   closed-geodesic refinement by multiple shooting ([`geodesic`]);
//! - Jacobi fields, conjugate points, Morse indices and Floquet data along
//!   closed geodesics ([`jacobi`]);
//! - a discrete curve-shortening semi-flow on embedded loops with slowdown
//!   cutoff and dissipation accounting ([`curveflow`]);
//! - Lusternik–Schnirelmann style min-max over families of round circles,
//!   producing three simple closed geodesics on generic metrics ([`minmax`]);
//! - Birkhoff annulus coordinates over a simple closed geodesic, first
//!   return maps, twist detection, and periodic-point search ([`birkhoff`]).
//!
//! All computations live on the unit sphere embedded in 3-space; local work
//! happens in stereographic charts ([`sphere::Chart`]). The auxiliary
//! Riemannian metric used for normals, curvature, and the L² structure is
//! always the induced round metric.

pub mod birkhoff;
pub mod config;
pub mod curveflow;
pub mod error;
pub mod geodesic;
pub mod io;
pub mod jacobi;
pub mod metric;
pub mod minmax;
mod ode;
pub mod sphere;
pub mod validate;

pub use error::{Error, Result};
pub use metric::FinslerMetric;
pub use sphere::{Chart, SpherePoint, TangentVector};
