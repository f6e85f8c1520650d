//! `fsphere index`: Morse index table for a closed geodesic and iterates.

use super::write_json;
use crate::spec::{parse_config, GeodesicSource};
use finsler_sphere::config::MetricConfig;
use finsler_sphere::error::Result;
use finsler_sphere::io::IndexReportJson;
use finsler_sphere::jacobi;
use serde::Deserialize;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexConfig {
    metric: MetricConfig,
    geodesic: GeodesicSource,
    #[serde(default = "default_m_max")]
    m_max: u32,
}

fn default_m_max() -> u32 {
    5
}

pub fn run(text: &str, out: &Path, _seed: u64) -> Result<i32> {
    let cfg: IndexConfig = parse_config(text)?;
    let metric = cfg.metric.build()?;
    let gamma = cfg.geodesic.build(&metric, out)?;
    let table = jacobi::index_table(&metric, &gamma, cfg.m_max)?;

    let mut csv = std::io::BufWriter::new(std::fs::File::create(out.join("index_table.csv"))?);
    writeln!(csv, "m,ind_omega,nul_omega,nul,ind,eig1_re,eig1_im,eig2_re,eig2_im")?;
    for r in &table {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.m,
            r.ind_omega,
            r.nul_omega,
            r.nul,
            r.ind,
            r.floquet_eigs[0].re,
            r.floquet_eigs[0].im,
            r.floquet_eigs[1].re,
            r.floquet_eigs[1].im
        )?;
    }
    drop(csv);

    let json: Vec<IndexReportJson> = table.iter().map(IndexReportJson::from_report).collect();
    write_json(out, "index_report.json", &json)?;
    Ok(0)
}
