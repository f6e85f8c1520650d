//! `fsphere birkhoff`: annulus chart, map samples, twist report, boundary
//! tables, periodic points.

use super::write_json;
use crate::spec::{parse_config, GeodesicSource};
use finsler_sphere::birkhoff::{self, AnnulusChart};
use finsler_sphere::config::MetricConfig;
use finsler_sphere::error::Result;
use serde::Deserialize;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BirkhoffConfig {
    metric: MetricConfig,
    geodesic: GeodesicSource,
    /// (p, q) pairs for the periodic-point search.
    #[serde(default)]
    periodic: Vec<PQ>,
}

#[derive(Debug, Deserialize)]
struct PQ {
    p: u32,
    q: i32,
}

pub fn run(text: &str, out: &Path, _seed: u64) -> Result<i32> {
    let cfg: BirkhoffConfig = parse_config(text)?;
    let metric = cfg.metric.build()?;
    let gamma = cfg.geodesic.build(&metric, out)?;
    let chart = AnnulusChart::new(&metric, &gamma)?;

    // Boundary tables.
    let ext = birkhoff::boundary_extension(&chart)?;
    write_json(out, "boundary.json", &ext)?;

    // Twist report (also builds the lift/map tabulation).
    match birkhoff::twist_check(&chart) {
        Ok(report) => write_json(out, "twist_report.json", &report)?,
        Err(e) => {
            // No conjugate points: record the scenario instead of a report.
            write_json(
                out,
                "twist_report.json",
                &serde_json::json!({ "undefined": e.to_string() }),
            )?;
        }
    }

    // Map samples from the cached lift tabulation.
    let table = birkhoff::lift_table_cached(&chart)?;
    let mut csv =
        std::io::BufWriter::new(std::fs::File::create(out.join("map_samples.csv"))?);
    writeln!(csv, "t,s,t_prime,s_prime,tau")?;
    let period = chart.period();
    for (i, &t) in table.t_grid.iter().enumerate() {
        for (j, &s) in table.s_grid.iter().enumerate() {
            let t_prime = (t + table.delta_t[i][j]).rem_euclid(period);
            writeln!(
                csv,
                "{},{},{},{},{}",
                t, s, t_prime, table.s_hit[i][j], table.flight[i][j]
            )?;
        }
    }
    drop(csv);

    // Periodic points.
    let mut all = Vec::new();
    for pq in &cfg.periodic {
        let pts = birkhoff::periodic_points(&chart, pq.p, pq.q, None)?;
        all.push(pts);
    }
    write_json(out, "periodic_points.json", &all)?;
    Ok(0)
}
