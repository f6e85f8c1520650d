//! `fsphere validate`: invariant battery for a metric, machine-readable
//! report.

use super::write_json;
use crate::spec::parse_config;
use finsler_sphere::config::MetricConfig;
use finsler_sphere::error::{Error, Result};
use finsler_sphere::validate::{battery, Check, ValidateReport};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValidateConfig {
    metric: MetricConfig,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default = "default_grid")]
    grid: usize,
}

fn default_samples() -> usize {
    1000
}
fn default_grid() -> usize {
    10_000
}

pub fn run(text: &str, out: &Path, seed: u64) -> Result<i32> {
    let cfg: ValidateConfig = parse_config(text)?;
    let metric = match cfg.metric.build() {
        Ok(m) => m,
        Err(e @ Error::ConvexityViolation { .. }) => {
            // Surface the grid-oracle violation in the report.
            let report = ValidateReport {
                metric: format!("{} (rejected)", cfg.metric.family),
                all_passed: false,
                checks: vec![Check {
                    name: format!("convexity_grid ({e})"),
                    passed: false,
                    max_err: f64::NAN,
                    tolerance: 0.0,
                }],
            };
            write_json(out, "validate_report.json", &report)?;
            return Err(e);
        }
        Err(e) => return Err(e),
    };
    let report = battery(&metric, cfg.samples, cfg.grid, seed)?;
    write_json(out, "validate_report.json", &report)?;
    Ok(if report.all_passed { 0 } else { 3 })
}
