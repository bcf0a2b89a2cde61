//! File outputs: CSV tables, SVG heatmaps and the run manifest.
//!
//! Reals are printed with 17 significant digits so every `f64` reads back
//! exactly. Lines end in `\n`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use hoal_core::{GridBelief, Query, QueryGrid};

use crate::error::{HoalError, Result};
use crate::harness::LoopTrace;

/// `%.17g`: shortest of fixed or exponent notation, trailing zeros dropped.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Writes `bytes` to `path` and returns their SHA-256.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<String> {
    fs::write(path, bytes).map_err(|e| HoalError::io(path, e))?;
    Ok(sha256_hex(bytes))
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    // Writing to memory cannot fail.
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(HoalError::Setup(format!(
            "{what}: {got} values for {want} grid entries"
        )))
    }
}

pub fn eig_csv(map: &[f64], qg: &QueryGrid) -> Result<Vec<u8>> {
    check_len("eig map", map.len(), qg.len())?;
    Ok(csv_bytes(
        &["x1", "x2", "eig"],
        qg.candidates()
            .zip(map)
            .map(|(q, v)| vec![format_real(q.x1), format_real(q.x2), format_real(*v)]),
    ))
}

pub fn write_eig_csv(map: &[f64], qg: &QueryGrid, path: &Path) -> Result<String> {
    write_bytes(path, &eig_csv(map, qg)?)
}

pub fn belief_csv(b: &GridBelief) -> Vec<u8> {
    csv_bytes(
        &["theta", "mass"],
        b.grid()
            .points()
            .zip(b.mass())
            .map(|(t, m)| vec![format_real(t), format_real(*m)]),
    )
}

pub fn write_belief_csv(b: &GridBelief, path: &Path) -> Result<String> {
    write_bytes(path, &belief_csv(b))
}

pub fn queries_csv(queries: &[Query]) -> Vec<u8> {
    csv_bytes(
        &["x1", "x2"],
        queries
            .iter()
            .map(|q| vec![format_real(q.x1), format_real(q.x2)]),
    )
}

pub fn write_queries_csv(queries: &[Query], path: &Path) -> Result<String> {
    write_bytes(path, &queries_csv(queries))
}

pub fn trace_csv(trace: &LoopTrace) -> Vec<u8> {
    csv_bytes(
        &["round", "x1", "x2", "y", "entropy"],
        trace.steps.iter().map(|s| {
            vec![
                s.round.to_string(),
                format_real(s.query.x1),
                format_real(s.query.x2),
                s.answer.bit().to_string(),
                format_real(s.entropy),
            ]
        }),
    )
}

pub fn write_trace_csv(trace: &LoopTrace, path: &Path) -> Result<String> {
    write_bytes(path, &trace_csv(trace))
}

/// Utilities of a teaching policy, enumerated `2·candidate + y`.
pub fn teaching_csv(utilities: &[f64], qg: &QueryGrid) -> Result<Vec<u8>> {
    check_len("teaching utilities", utilities.len(), 2 * qg.len())?;
    Ok(csv_bytes(
        &["x1", "x2", "y", "utility"],
        utilities.iter().enumerate().map(|(i, u)| {
            let q = qg.candidate(i / 2);
            vec![
                format_real(q.x1),
                format_real(q.x2),
                (i % 2).to_string(),
                format_real(*u),
            ]
        }),
    ))
}

pub fn write_teaching_csv(utilities: &[f64], qg: &QueryGrid, path: &Path) -> Result<String> {
    write_bytes(path, &teaching_csv(utilities, qg)?)
}

fn read_table(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let parse_err = |message: String| HoalError::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(e.to_string()))?;
    let got = r.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    if got.iter().collect::<Vec<_>>() != header {
        return Err(parse_err(format!("expected header `{}`", header.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(format!("row {}: {e}", i + 2)))?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_queries_csv(path: &Path) -> Result<Vec<Query>> {
    read_table(path, &["x1", "x2"])?
        .into_iter()
        .map(|r| Ok(Query::new(r[0], r[1])?))
        .collect()
}

/// `(x1, x2, eig)` rows.
pub fn read_eig_csv(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    Ok(read_table(path, &["x1", "x2", "eig"])?
        .into_iter()
        .map(|r| (r[0], r[1], r[2]))
        .collect())
}

/// `(theta, mass)` rows.
pub fn read_belief_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    Ok(read_table(path, &["theta", "mass"])?
        .into_iter()
        .map(|r| (r[0], r[1]))
        .collect())
}

/// Color ramp stops (dark blue through teal and green to yellow); lightness
/// increases monotonically along the ramp.
const RAMP: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// Ramp color for `t` in `[0, 1]` as `#rrggbb`.
pub fn ramp_color(t: f64) -> String {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let pos = t * (RAMP.len() - 1) as f64;
    let i = (pos.floor() as usize).min(RAMP.len() - 2);
    let f = pos - i as f64;
    let c: Vec<u8> = (0..3)
        .map(|k| (RAMP[i][k] + f * (RAMP[i + 1][k] - RAMP[i][k])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

const CELL: f64 = 10.0;

/// One rect per candidate, x1 left to right and x2 bottom to top, colored
/// over `[min, max]` of the map. Markers are drawn as crosses.
pub fn heatmap_svg(map: &[f64], qg: &QueryGrid, markers: &[Query]) -> Result<Vec<u8>> {
    check_len("heatmap", map.len(), qg.len())?;
    let n = qg.n_per_axis();
    let side = n as f64 * CELL;
    let (lo, hi) = map
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    let span = hi - lo;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{side}\" height=\"{side}\" viewBox=\"0 0 {side} {side}\">"
    );
    for (idx, v) in map.iter().enumerate() {
        let (i, j) = (idx / n, idx % n);
        let t = if span > 0.0 { (v - lo) / span } else { 0.0 };
        let x = i as f64 * CELL;
        let y = (n - 1 - j) as f64 * CELL;
        let _ = writeln!(
            s,
            "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{}\"/>",
            ramp_color(t)
        );
    }
    let scale = (n - 1) as f64 / (qg.hi() - qg.lo());
    for q in markers {
        let cx = ((q.x1 - qg.lo()) * scale + 0.5) * CELL;
        let cy = side - ((q.x2 - qg.lo()) * scale + 0.5) * CELL;
        let r = 0.6 * CELL;
        let _ = writeln!(
            s,
            "<path d=\"M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}\" stroke=\"#ff2020\" stroke-width=\"2\"/>",
            cx - r,
            cy - r,
            cx + r,
            cy + r,
            cx - r,
            cy + r,
            cx + r,
            cy - r
        );
    }
    s.push_str("</svg>\n");
    Ok(s.into_bytes())
}

pub fn render_heatmap_svg(
    map: &[f64],
    qg: &QueryGrid,
    markers: &[Query],
    path: &Path,
) -> Result<String> {
    write_bytes(path, &heatmap_svg(map, qg, markers)?)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    /// File name to SHA-256 of its bytes.
    pub outputs: BTreeMap<String, String>,
    /// Seconds per step. The only field that varies between identical runs.
    pub timings: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &crate::config::ScenarioConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: cfg.seed,
            config: cfg.to_map(),
            outputs: BTreeMap::new(),
            timings: BTreeMap::new(),
        }
    }
}

pub fn write_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(manifest)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)?;
    Ok(())
}
