//! JSON config shapes shared by the subcommands.

use finsler_sphere::curveflow::Loop;
use finsler_sphere::error::{Error, Result};
use finsler_sphere::geodesic::{self, GeodesicArc};
use finsler_sphere::FinslerMetric;
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::path::Path;

pub fn parse_config<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

/// Initial loop selection: a built-in circle family member, a perturbed
/// circle, or a loop file from a previous run.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoopSpec {
    Circle {
        axis: [f64; 3],
        offset: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    PerturbedCircle {
        axis: [f64; 3],
        offset: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        amplitude: f64,
        /// Inclusive Fourier mode range of the normal displacement.
        modes: [usize; 2],
    },
    File {
        path: String,
    },
}

pub fn default_samples() -> usize {
    128
}

impl LoopSpec {
    pub fn build(&self, seed: u64, base_dir: &Path) -> Result<Loop> {
        match self {
            LoopSpec::Circle { axis, offset, samples } => {
                Loop::circle(&Vector3::new(axis[0], axis[1], axis[2]), *offset, *samples)
            }
            LoopSpec::PerturbedCircle { axis, offset, samples, amplitude, modes } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Loop::perturbed_circle(
                    &Vector3::new(axis[0], axis[1], axis[2]),
                    *offset,
                    *samples,
                    *amplitude,
                    modes[0]..=modes[1],
                    &mut rng,
                )
            }
            LoopSpec::File { path } => {
                let p = resolve(base_dir, path);
                if !p.exists() {
                    return Err(Error::Config(format!(
                        "loop file path does not exist: {}",
                        p.display()
                    )));
                }
                finsler_sphere::io::read_loop(&p)
            }
        }
    }
}

/// Closed geodesic source for the birkhoff/index commands.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeodesicSource {
    /// Arc JSONL written by a prior minmax run.
    ArcFile { path: String },
    /// Refine a circle seed into a closed geodesic on the spot.
    RefineCircle {
        axis: [f64; 3],
        offset: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
}

impl GeodesicSource {
    pub fn build(&self, metric: &FinslerMetric, base_dir: &Path) -> Result<GeodesicArc> {
        match self {
            GeodesicSource::ArcFile { path } => {
                let p = resolve(base_dir, path);
                if !p.exists() {
                    return Err(Error::Config(format!(
                        "geodesic file path does not exist: {}",
                        p.display()
                    )));
                }
                finsler_sphere::io::read_arc(&p, metric)
            }
            GeodesicSource::RefineCircle { axis, offset, samples } => {
                let seed =
                    Loop::circle(&Vector3::new(axis[0], axis[1], axis[2]), *offset, *samples)?;
                geodesic::refine_closed_geodesic(metric, &seed, 1e-9)
            }
        }
    }
}

fn resolve(base: &Path, path: &str) -> std::path::PathBuf {
    let p = std::path::PathBuf::from(path);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}
