//! Artifact formats: CSV series, JSON documents, raw state dumps, and the
//! growth-rate fit used in run summaries.
//!
//! Floats are written with 17 significant digits so every file re-reads to
//! the same bits.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{DistributionState, PhaseSpaceGrid};
use crate::landscape::{CellStatus, LandscapeResult};
use crate::optimize::OptimizationHistory;

/// Float formatting used by every text writer.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Least-squares slope of `ln 𝓔` against `t = n·dt` over `t ∈ [t0, t1]`.
pub fn fit_growth_rate(energy: &[f64], dt: f64, window: (f64, f64)) -> Result<f64> {
    let eps = 1e-9 * dt;
    let pts: Vec<(f64, f64)> = energy
        .iter()
        .enumerate()
        .map(|(n, &e)| (n as f64 * dt, e))
        .filter(|&(t, _)| t >= window.0 - eps && t <= window.1 + eps)
        .collect();
    if pts.len() < 2 {
        return Err(Error::Domain(format!(
            "growth window [{}, {}] holds fewer than two samples",
            window.0, window.1
        )));
    }
    if let Some(&(t, e)) = pts.iter().find(|&&(_, e)| e.is_nan() || e <= 0.0) {
        return Err(Error::Domain(format!("non-positive energy {e} at t = {t} in the growth window")));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, e) in &pts {
        sxy += (t - mt) * (e.ln() - my);
        sxx += (t - mt) * (t - mt);
    }
    Ok(sxy / sxx)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn write_lines(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t, energy`.
pub fn write_energy_csv(path: &Path, energy: &[f64], dt: f64) -> Result<()> {
    write_lines(
        path,
        "t,energy",
        energy
            .iter()
            .enumerate()
            .map(|(n, &e)| format!("{},{}", fmt_f64(n as f64 * dt), fmt_f64(e))),
    )
}

/// Columns `t, x, E`; the field of step n was computed from the
/// half-advected state and is stamped `t = (n + ½) dt`.
pub fn write_field_history_csv(path: &Path, history: &[Vec<f64>], grid: &PhaseSpaceGrid, dt: f64) -> Result<()> {
    let rows = history.iter().enumerate().flat_map(move |(n, row)| {
        let t = (n as f64 + 0.5) * dt;
        row.iter()
            .enumerate()
            .map(move |(i, &e)| format!("{},{},{}", fmt_f64(t), fmt_f64(grid.x(i)), fmt_f64(e)))
    });
    write_lines(path, "t,x,E", rows)
}

/// Generic numeric CSV reader: header names and rows of floats.
pub fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let offset = rec.position().map_or(0, |p| p.byte() as usize);
        let row = rec
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| Error::Format {
                    offset,
                    reason: format!("'{f}': {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn csv_err(e: csv::Error) -> Error {
    let offset = e.position().map_or(0, |p| p.byte() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format {
            offset,
            reason: format!("{other:?}"),
        },
    }
}

// ---------------------------------------------------------------------------
// Optimization history

/// Columns `iter, objective, grad_norm, step, <param names…>`.
pub fn write_history_csv(path: &Path, history: &OptimizationHistory, param_names: &[String]) -> Result<()> {
    let header = ["iter", "objective", "grad_norm", "step"]
        .iter()
        .map(|s| s.to_string())
        .chain(param_names.iter().cloned())
        .collect::<Vec<_>>()
        .join(",");
    write_lines(
        path,
        &header,
        history.records.iter().map(|r| {
            let mut cols = vec![
                r.iter.to_string(),
                fmt_f64(r.objective),
                fmt_f64(r.grad_norm),
                fmt_f64(r.step),
            ];
            cols.extend(r.params.iter().map(|&p| fmt_f64(p)));
            cols.join(",")
        }),
    )
}

/// One row of a history CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub params: Vec<f64>,
}

pub fn read_history_csv(path: &Path) -> Result<Vec<HistoryRow>> {
    let (header, rows) = read_numeric_csv(path)?;
    if header.len() < 4 || header[..4] != ["iter", "objective", "grad_norm", "step"] {
        return Err(Error::Format {
            offset: 0,
            reason: format!("unexpected history header {header:?}"),
        });
    }
    Ok(rows
        .into_iter()
        .map(|r| HistoryRow {
            iter: r[0] as usize,
            objective: r[1],
            grad_norm: r[2],
            step: r[3],
            params: r[4..].to_vec(),
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Landscapes

/// 1D: `param, value, status`; 2D: `p1, p2, value, status`.
pub fn write_landscape_csv(path: &Path, result: &LandscapeResult) -> Result<()> {
    let header = if result.axes.len() == 1 {
        "param,value,status"
    } else {
        "p1,p2,value,status"
    };
    write_lines(
        path,
        header,
        (0..result.values.len()).map(|c| {
            let mut cols: Vec<String> = result.coords(c).into_iter().map(fmt_f64).collect();
            cols.push(fmt_f64(result.values[c]));
            cols.push(
                match result.status[c] {
                    CellStatus::Ok => "ok",
                    CellStatus::Failed => "failed",
                }
                .into(),
            );
            cols.join(",")
        }),
    )
}

/// Re-read landscape cells: coordinates, values and status per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeTable {
    pub coords: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub status: Vec<CellStatus>,
}

pub fn read_landscape_csv(path: &Path) -> Result<LandscapeTable> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let width = rdr.headers().map_err(csv_err)?.len();
    if width != 3 && width != 4 {
        return Err(Error::Format {
            offset: 0,
            reason: format!("landscape CSV needs 3 or 4 columns, found {width}"),
        });
    }
    let mut table = LandscapeTable {
        coords: Vec::new(),
        values: Vec::new(),
        status: Vec::new(),
    };
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let offset = rec.position().map_or(0, |p| p.byte() as usize);
        let num = |k: usize| -> Result<f64> {
            rec[k].parse::<f64>().map_err(|e| Error::Format {
                offset,
                reason: format!("'{}': {e}", &rec[k]),
            })
        };
        table.coords.push((0..width - 2).map(num).collect::<Result<_>>()?);
        table.values.push(num(width - 2)?);
        table.status.push(match &rec[width - 1] {
            "ok" => CellStatus::Ok,
            "failed" => CellStatus::Failed,
            other => {
                return Err(Error::Format {
                    offset,
                    reason: format!("unknown cell status '{other}'"),
                })
            }
        });
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// State dumps

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateHeader {
    #[serde(rename = "Mx")]
    pub mx: usize,
    #[serde(rename = "Mv")]
    pub mv: usize,
    #[serde(rename = "Lx")]
    pub lx: f64,
    #[serde(rename = "Lv")]
    pub lv: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub dtype: String,
    pub layout: String,
}

/// One JSON header line, then `Mx·Mv` little-endian f64 values, x-major.
pub fn encode_state(state: &DistributionState, grid: &PhaseSpaceGrid) -> Result<Vec<u8>> {
    if state.values.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: state.values.len(),
        });
    }
    let header = StateHeader {
        mx: grid.mx,
        mv: grid.mv,
        lx: grid.lx,
        lv: grid.lv,
        t: state.time,
        dtype: "f64le".into(),
        layout: "x-major".into(),
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    out.reserve(8 * state.values.len());
    for v in &state.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_state(bytes: &[u8]) -> Result<(PhaseSpaceGrid, DistributionState)> {
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or(Error::Format {
        offset: bytes.len(),
        reason: "missing header terminator".into(),
    })?;
    let header: StateHeader = serde_json::from_slice(&bytes[..nl]).map_err(|e| Error::Format {
        offset: e.column().saturating_sub(1),
        reason: format!("bad header: {e}"),
    })?;
    if header.dtype != "f64le" || header.layout != "x-major" {
        return Err(Error::Format {
            offset: 0,
            reason: format!("unsupported dtype/layout {}/{}", header.dtype, header.layout),
        });
    }
    let grid = PhaseSpaceGrid::new(header.mx, header.mv, header.lx, header.lv).map_err(|e| Error::Format {
        offset: 0,
        reason: e.to_string(),
    })?;
    let payload = &bytes[nl + 1..];
    let want = 8 * grid.len();
    if payload.len() != want {
        return Err(Error::Format {
            offset: nl + 1 + payload.len().min(want),
            reason: format!("payload holds {} bytes, header implies {want}", payload.len()),
        });
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((
        grid,
        DistributionState {
            values,
            time: header.t,
        },
    ))
}

pub fn write_state(path: &Path, state: &DistributionState, grid: &PhaseSpaceGrid) -> Result<()> {
    fs::write(path, encode_state(state, grid)?)?;
    Ok(())
}

pub fn read_state(path: &Path) -> Result<(PhaseSpaceGrid, DistributionState)> {
    decode_state(&fs::read(path)?)
}
