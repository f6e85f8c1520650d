//! On-disk formats: loop JSON, arc JSONL, trace JSONL, spectrum CSV rows.
//!
//! Every exported file re-imports to an equal in-memory value (floats are
//! emitted with the shortest round-trip representation).

use crate::curveflow::{FlowTrace, Loop};
use crate::error::{Error, Result};
use crate::geodesic::{ArcSample, GeodesicArc, GeodesicState};
use crate::jacobi::{FreeIndex, IndexReport, Nullity};
use crate::sphere::{SpherePoint, TangentVector, Vec3};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LoopJson {
    pub samples: Vec<[f64; 3]>,
}

impl LoopJson {
    pub fn from_loop(lp: &Loop) -> Self {
        Self {
            samples: lp.samples().iter().map(|p| [p.x, p.y, p.z]).collect(),
        }
    }

    pub fn to_loop(&self) -> Result<Loop> {
        Loop::new(
            self.samples
                .iter()
                .map(|s| Vec3::new(s[0], s[1], s[2]))
                .collect(),
        )
    }
}

pub fn write_loop(path: &std::path::Path, lp: &Loop) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer(std::io::BufWriter::new(file), &LoopJson::from_loop(lp))?;
    Ok(())
}

pub fn read_loop(path: &std::path::Path) -> Result<Loop> {
    let file = std::fs::File::open(path)?;
    let json: LoopJson = serde_json::from_reader(std::io::BufReader::new(file))?;
    json.to_loop()
}

/// One arc sample per JSONL record: `{"t": …, "x": […], "v": […]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArcSampleJson {
    pub t: f64,
    pub x: [f64; 3],
    pub v: [f64; 3],
}

pub fn write_arc(path: &std::path::Path, arc: &GeodesicArc) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    for s in &arc.samples {
        let x = s.state.point.coords();
        let v = s.state.velocity.vec();
        let rec = ArcSampleJson { t: s.t, x: [x.x, x.y, x.z], v: [v.x, v.y, v.z] };
        serde_json::to_writer(&mut w, &rec)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Rebuilds an arc from a JSONL sample file; the speed drift is recomputed
/// against the provided metric.
pub fn read_arc(path: &std::path::Path, metric: &crate::FinslerMetric) -> Result<GeodesicArc> {
    let file = std::fs::File::open(path)?;
    let mut samples = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ArcSampleJson = serde_json::from_str(&line)?;
        let point = SpherePoint::from_xyz(rec.x[0], rec.x[1], rec.x[2])?;
        let velocity = TangentVector::new(point, Vec3::new(rec.v[0], rec.v[1], rec.v[2]));
        samples.push(ArcSample { t: rec.t, state: GeodesicState::new(point, velocity) });
    }
    if samples.len() < 2 {
        return Err(Error::Io("arc file has fewer than two samples".into()));
    }
    let initial = samples[0].state;
    let duration = samples.last().unwrap().t;
    let speed_drift = samples
        .iter()
        .map(|s| (s.state.f_norm(metric) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(GeodesicArc { initial, duration, samples, speed_drift })
}

/// One trace record per step: `{"t": …, "L": …, "maxV": …, "dissipation_cum": …}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRowJson {
    pub t: f64,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "maxV")]
    pub max_v: f64,
    pub dissipation_cum: f64,
}

pub fn write_trace(path: &std::path::Path, trace: &FlowTrace) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    let mut cum = 0.0;
    for i in 0..trace.times.len() {
        if i > 0 {
            cum += trace.dissipation.get(i - 1).copied().unwrap_or(0.0);
        }
        let rec = TraceRowJson {
            t: trace.times[i],
            length: trace.lengths[i],
            max_v: trace.max_abs_v[i],
            dissipation_cum: cum,
        };
        serde_json::to_writer(&mut w, &rec)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_trace_rows(path: &std::path::Path) -> Result<Vec<TraceRowJson>> {
    let file = std::fs::File::open(path)?;
    let mut rows = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            rows.push(serde_json::from_str(&line)?);
        }
    }
    Ok(rows)
}

/// Spectrum table row: one per found geodesic.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpectrumRow {
    pub length: f64,
    pub ind_omega: u32,
    pub nul_omega: u32,
    pub nul: String,
    pub ind: String,
    pub simple: bool,
    pub witness_file: String,
}

pub const SPECTRUM_HEADER: &str = "length,ind_omega,nul_omega,nul,ind,simple,witness_file";

impl SpectrumRow {
    pub fn new(length: f64, report: &IndexReport, simple: bool, witness_file: String) -> Self {
        Self {
            length,
            ind_omega: report.ind_omega,
            nul_omega: report.nul_omega,
            nul: report.nul.to_string(),
            ind: report.ind.to_string(),
            simple,
            witness_file,
        }
    }

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.length, self.ind_omega, self.nul_omega, self.nul, self.ind, self.simple,
            self.witness_file
        )
    }

    pub fn parse_csv_line(line: &str) -> Result<Self> {
        let parts: Vec<&str> = line.trim().split(',').collect();
        if parts.len() != 7 {
            return Err(Error::Io(format!("bad spectrum row: {line}")));
        }
        Ok(Self {
            length: parts[0].parse().map_err(|e| Error::Io(format!("length: {e}")))?,
            ind_omega: parts[1].parse().map_err(|e| Error::Io(format!("ind_omega: {e}")))?,
            nul_omega: parts[2].parse().map_err(|e| Error::Io(format!("nul_omega: {e}")))?,
            nul: parts[3].to_string(),
            ind: parts[4].to_string(),
            simple: parts[5].parse().map_err(|e| Error::Io(format!("simple: {e}")))?,
            witness_file: parts[6].to_string(),
        })
    }
}

/// Flat JSON shape of an index report (Floquet eigenvalues as [re, im]).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexReportJson {
    pub m: u32,
    pub ind_omega: u32,
    pub nul_omega: u32,
    pub nul: String,
    pub ind: String,
    pub floquet_eigs: [[f64; 2]; 2],
}

impl IndexReportJson {
    pub fn from_report(r: &IndexReport) -> Self {
        Self {
            m: r.m,
            ind_omega: r.ind_omega,
            nul_omega: r.nul_omega,
            nul: r.nul.to_string(),
            ind: r.ind.to_string(),
            floquet_eigs: [
                [r.floquet_eigs[0].re, r.floquet_eigs[0].im],
                [r.floquet_eigs[1].re, r.floquet_eigs[1].im],
            ],
        }
    }
}

/// Round-trip helpers for the string forms used in CSV/JSON.
pub fn parse_nullity(s: &str) -> Result<Nullity> {
    match s {
        "unknown" => Ok(Nullity::Unknown),
        n => n
            .parse::<u8>()
            .map(Nullity::Known)
            .map_err(|e| Error::Io(format!("nullity: {e}"))),
    }
}

pub fn parse_free_index(s: &str) -> Result<FreeIndex> {
    if let Some(stripped) = s.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
        let parts: Vec<&str> = stripped.split("..").collect();
        if parts.len() == 2 {
            let a = parts[0].trim().parse().map_err(|e| Error::Io(format!("ind: {e}")))?;
            let b = parts[1].trim().parse().map_err(|e| Error::Io(format!("ind: {e}")))?;
            return Ok(FreeIndex::Range(a, b));
        }
        return Err(Error::Io(format!("bad index range: {s}")));
    }
    s.parse()
        .map(FreeIndex::Exact)
        .map_err(|e| Error::Io(format!("ind: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::Vec3;

    #[test]
    fn loop_roundtrip_is_lossless() {
        let lp = Loop::circle(&Vec3::new(0.3, -0.5, 0.81), 0.21, 64).unwrap();
        let dir = std::env::temp_dir().join("fsphere_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("loop.json");
        write_loop(&path, &lp).unwrap();
        let back = read_loop(&path).unwrap();
        assert_eq!(lp.samples(), back.samples());
    }

    #[test]
    fn spectrum_row_roundtrip() {
        let row = SpectrumRow {
            length: 6.2831853071795862,
            ind_omega: 1,
            nul_omega: 1,
            nul: "2".into(),
            ind: "1".into(),
            simple: true,
            witness_file: "witness_1.json".into(),
        };
        let parsed = SpectrumRow::parse_csv_line(&row.to_csv_line()).unwrap();
        assert_eq!(row, parsed);
        assert_eq!(parse_nullity("2").unwrap(), Nullity::Known(2));
        assert_eq!(parse_nullity("unknown").unwrap(), Nullity::Unknown);
        assert_eq!(parse_free_index("3").unwrap(), FreeIndex::Exact(3));
        assert_eq!(parse_free_index("[1..2]").unwrap(), FreeIndex::Range(1, 2));
    }
}
