//! `fsphere minmax`: three-sweepout search; writes spectrum.csv, witness
//! loops and arcs, summary.json.

use super::write_json;
use crate::spec::parse_config;
use finsler_sphere::config::MetricConfig;
use finsler_sphere::curveflow::FlowParams;
use finsler_sphere::error::Result;
use finsler_sphere::geodesic;
use finsler_sphere::io::{self, SpectrumRow, SPECTRUM_HEADER};
use finsler_sphere::minmax::{self, MinMaxParams, ThreeGeodesics};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MinmaxConfig {
    metric: MetricConfig,
    #[serde(default = "default_resolution")]
    resolution: usize,
    #[serde(default = "crate::spec::default_samples")]
    samples: usize,
    rho0: Option<f64>,
    #[serde(default = "default_epoch_time")]
    epoch_time: f64,
    #[serde(default = "default_max_epochs")]
    max_epochs: usize,
}

fn default_resolution() -> usize {
    33
}
fn default_epoch_time() -> f64 {
    0.4
}
fn default_max_epochs() -> usize {
    80
}

#[derive(Debug, Serialize)]
struct MinmaxSummary {
    distinct: bool,
    count: usize,
    lengths: Vec<f64>,
    dims: Vec<u8>,
    note: Option<String>,
}

pub fn run(text: &str, out: &Path, _seed: u64) -> Result<i32> {
    let cfg: MinmaxConfig = parse_config(text)?;
    let metric = cfg.metric.build()?;
    let rho0 = cfg
        .rho0
        .unwrap_or_else(|| 0.25 * geodesic::injectivity_radius_estimate(&metric));
    let params = MinMaxParams {
        n_samples: cfg.samples.max(64),
        epoch_time: cfg.epoch_time,
        max_epochs: cfg.max_epochs,
        flow: FlowParams::with_rho0(rho0),
        ..MinMaxParams::default()
    };
    let result = minmax::three_geodesics(&metric, &params, cfg.resolution)?;
    let found = result.all();

    let mut csv = std::io::BufWriter::new(std::fs::File::create(out.join("spectrum.csv"))?);
    writeln!(csv, "{SPECTRUM_HEADER}")?;
    let mut lengths = Vec::new();
    let mut dims = Vec::new();
    for (i, g) in found.iter().enumerate() {
        let witness_file = format!("witness_{}.json", i + 1);
        let arc_file = format!("witness_{}.arc.jsonl", i + 1);
        io::write_loop(&out.join(&witness_file), &g.witness)?;
        io::write_arc(&out.join(&arc_file), &g.arc)?;
        let row = SpectrumRow::new(g.length, &g.index, g.simple, witness_file);
        writeln!(csv, "{}", row.to_csv_line())?;
        lengths.push(g.length);
        dims.push(g.from_dim);
    }
    drop(csv);

    let summary = match &result {
        ThreeGeodesics::Distinct(_) => MinmaxSummary {
            distinct: true,
            count: 3,
            lengths,
            dims,
            note: None,
        },
        ThreeGeodesics::Degenerate { note, found } => MinmaxSummary {
            distinct: false,
            count: found.len(),
            lengths,
            dims,
            note: Some(note.clone()),
        },
    };
    write_json(out, "summary.json", &summary)?;
    Ok(0)
}
