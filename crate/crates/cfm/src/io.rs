//! Output formats: error tables, fitted orders, stability table, field
//! snapshots and the tiling / solve diagnostics dumps.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use cfm_core::march::RegionDiagnostics;
use cfm_core::{Grid, ProblemId, Tiling};
use serde::Serialize;

use crate::harness::{Convergence, ErrorReport, HarnessError, Snapshot, StabilityRow};

#[derive(Serialize)]
struct ErrorRow {
    #[serde(rename = "N")]
    n: usize,
    dx: f64,
    dt: f64,
    #[serde(rename = "L2")]
    l2: f64,
    #[serde(rename = "Linf")]
    linf: f64,
}

/// `N,dx,dt,L2,Linf`, one row per report.
pub fn write_errors_csv(path: &Path, reports: &[ErrorReport]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in reports {
        w.serialize(ErrorRow { n: r.n, dx: r.dx, dt: r.dt, l2: r.l2, linf: r.linf })?;
    }
    w.flush()?;
    Ok(())
}

/// `{"L2": slope, "Linf": slope}`.
pub fn write_order_json(path: &Path, conv: &Convergence) -> Result<(), HarnessError> {
    let mut m = BTreeMap::new();
    m.insert("L2", conv.order_l2);
    m.insert("Linf", conv.order_linf);
    write_json(path, &m)
}

#[derive(Serialize)]
struct StabilityCsvRow {
    #[serde(rename = "N")]
    n: usize,
    gamma_t: f64,
    gamma_c: f64,
    gamma_cfm: f64,
}

pub fn write_stability_csv(path: &Path, rows: &[StabilityRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(StabilityCsvRow { n: r.n, gamma_t: r.gamma_t, gamma_c: r.gamma_c, gamma_cfm: r.gamma_cfm })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct SnapshotHeader<'a> {
    pub problem: &'a str,
    pub dim: usize,
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    pub dx: f64,
    pub step: usize,
    pub t: f64,
}

/// Field snapshot: a `# {json}` metadata line, then `x[,y],u,v` rows in node order.
pub fn write_snapshot(path: &Path, problem: ProblemId, grid: &Grid, snap: &Snapshot) -> Result<(), HarnessError> {
    let mut out = BufWriter::new(File::create(path)?);
    let header = SnapshotHeader {
        problem: problem.as_str(),
        dim: grid.dim(),
        n: grid.n(),
        lower: grid.lower()[0],
        upper: grid.upper()[0],
        dx: grid.dx(),
        step: snap.step,
        t: snap.t,
    };
    writeln!(out, "# {}", serde_json::to_string(&header)?)?;
    let mut w = csv::Writer::from_writer(out);
    if grid.dim() == 1 {
        w.write_record(["x", "u", "v"])?;
    } else {
        w.write_record(["x", "y", "u", "v"])?;
    }
    for k in 0..grid.node_count() {
        let p = grid.coords(k);
        if grid.dim() == 1 {
            w.serialize((p.x, snap.u[k], snap.v[k]))?;
        } else {
            w.serialize((p.x, p.y, snap.u[k], snap.v[k]))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot`]: header JSON and the `u` column.
pub fn read_snapshot(path: &Path) -> Result<(serde_json::Value, Vec<f64>), HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let header: serde_json::Value = serde_json::from_str(first.trim_start_matches("# "))?;
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let col = r.headers()?.iter().position(|h| h == "u").unwrap_or(1);
    let mut u = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        u.push(rec[col].parse().map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidData, "bad u value"))?);
    }
    Ok((header, u))
}

#[derive(Serialize)]
struct FrameDump {
    normal: [f64; 2],
    tangent: [f64; 2],
}

#[derive(Serialize)]
struct RegionDump {
    node: usize,
    p0: [f64; 2],
    frame: FrameDump,
    #[serde(rename = "L")]
    l: f64,
    vertices: Vec<[f64; 2]>,
}

/// `[{node, p0, frame, L, vertices}]`.
pub fn write_tiling_json(path: &Path, tiling: &Tiling) -> Result<(), HarnessError> {
    let dump: Vec<RegionDump> = tiling
        .regions
        .iter()
        .map(|r| RegionDump {
            node: r.node,
            p0: [r.p0.x, r.p0.y],
            frame: FrameDump { normal: [r.frame.normal.x, r.frame.normal.y], tangent: [r.frame.tangent.x, r.frame.tangent.y] },
            l: r.side(),
            vertices: r.footprint.vertices().iter().map(|v| [v.x, v.y]).collect(),
        })
        .collect();
    write_json(path, &dump)
}

#[derive(Serialize)]
struct DiagnosticsDump {
    node: usize,
    cond: f64,
    #[serde(rename = "J_p_min")]
    j_min: f64,
    w_norm: f64,
}

/// `[{node, cond, J_p_min, w_norm}]`.
pub fn write_diagnostics_json(path: &Path, diags: &[RegionDiagnostics]) -> Result<(), HarnessError> {
    let dump: Vec<DiagnosticsDump> = diags.iter().map(|d| DiagnosticsDump { node: d.node, cond: d.cond, j_min: d.j_min, w_norm: d.w_norm }).collect();
    write_json(path, &dump)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
