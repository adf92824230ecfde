//! Solution archives and field exports.
//!
//! An archive is a text file: a magic line `VRING-ARCHIVE 1`, one line of JSON
//! header, a CSV header `z,r,psi,Psi`, and one row per node (z fastest). Numbers
//! use the shortest round-trip decimal form, so archives round-trip bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::reconstruct;
use crate::grid::{AxiGrid, GridField};
use crate::profile::Profile;
use crate::variational::StreamSolution;

pub const MAGIC: &str = "VRING-ARCHIVE 1";
pub const CSV_HEADER: &str = "z,r,psi,Psi";

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed archive at line {line}: {message}")]
    Format { line: usize, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArchiveError + '_ {
    move |source| ArchiveError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn fmt_err(line: usize, message: impl Into<String>) -> ArchiveError {
    ArchiveError::Format {
        line,
        message: message.into(),
    }
}

/// Lattice description stored in the header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "Z")]
    pub z_extent: f64,
    #[serde(rename = "R")]
    pub r_extent: f64,
    pub nz: usize,
    pub nr: usize,
}

impl From<AxiGrid> for GridSpec {
    fn from(g: AxiGrid) -> Self {
        Self {
            z_extent: g.z_extent,
            r_extent: g.r_extent,
            nz: g.nz,
            nr: g.nr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub energy: Option<f64>,
    pub nehari_residual: Option<f64>,
    pub gradient_norm: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveHeader {
    /// `solver` or `explicit:<kind>`.
    pub source: String,
    pub profile: Profile,
    #[serde(rename = "W")]
    pub w: f64,
    pub gamma: f64,
    pub grid: GridSpec,
    pub diagnostics: Diagnostics,
}

impl ArchiveHeader {
    pub fn for_solution(sol: &StreamSolution, source: &str) -> Self {
        Self {
            source: source.into(),
            profile: sol.profile,
            w: sol.w,
            gamma: sol.gamma,
            grid: sol.grid().into(),
            diagnostics: Diagnostics {
                energy: sol.energy,
                nehari_residual: sol.nehari_residual,
                gradient_norm: sol.gradient_norm,
                iterations: sol.iterations,
                converged: sol.converged,
            },
        }
    }
}

fn num(out: &mut String, x: f64) {
    let mut b = ryu::Buffer::new();
    out.push_str(b.format(x));
}

/// Renders an archive.
pub fn to_archive_string(sol: &StreamSolution, source: &str) -> String {
    let header = ArchiveHeader::for_solution(sol, source);
    let g = sol.grid();
    let mut out = String::with_capacity(64 * g.len());
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&serde_json::to_string(&header).expect("header serializes"));
    out.push('\n');
    out.push_str(CSV_HEADER);
    out.push('\n');
    for j in 0..g.nr {
        for i in 0..g.nz {
            let k = g.idx(i, j);
            num(&mut out, g.z(i));
            out.push(',');
            num(&mut out, g.r(j));
            out.push(',');
            num(&mut out, sol.psi.values[k]);
            out.push(',');
            num(&mut out, sol.shifted.values[k]);
            out.push('\n');
        }
    }
    out
}

/// Parses an archive. Node coordinates must match the header lattice exactly.
pub fn from_archive_str(text: &str) -> Result<(ArchiveHeader, StreamSolution), ArchiveError> {
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(fmt_err(1, format!("expected `{MAGIC}`")));
    }
    let header: ArchiveHeader = serde_json::from_str(lines.next().ok_or_else(|| fmt_err(2, "missing header"))?)
        .map_err(|e| fmt_err(2, e.to_string()))?;
    let gs = header.grid;
    let g = AxiGrid::new(gs.z_extent, gs.r_extent, gs.nz, gs.nr).map_err(|e| fmt_err(2, e.to_string()))?;
    if lines.next() != Some(CSV_HEADER) {
        return Err(fmt_err(3, format!("expected `{CSV_HEADER}`")));
    }
    let mut psi = vec![0.0; g.len()];
    let mut shifted = vec![0.0; g.len()];
    let mut count = 0;
    for (n, line) in lines.enumerate() {
        let ln = n + 4;
        if line.is_empty() {
            continue;
        }
        if count >= g.len() {
            return Err(fmt_err(ln, "more rows than lattice nodes"));
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| fmt_err(ln, e.to_string()))?;
        if vals.len() != 4 {
            return Err(fmt_err(ln, format!("expected 4 columns, found {}", vals.len())));
        }
        let (i, j) = (count % g.nz, count / g.nz);
        if vals[0] != g.z(i) || vals[1] != g.r(j) {
            return Err(fmt_err(ln, format!("node ({}, {}) does not match the lattice", vals[0], vals[1])));
        }
        psi[count] = vals[2];
        shifted[count] = vals[3];
        count += 1;
    }
    if count != g.len() {
        return Err(fmt_err(count + 4, format!("expected {} rows, found {count}", g.len())));
    }
    let d = header.diagnostics;
    let sol = StreamSolution {
        psi: GridField { grid: g, values: psi },
        shifted: GridField {
            grid: g,
            values: shifted,
        },
        profile: header.profile,
        w: header.w,
        gamma: header.gamma,
        energy: d.energy,
        nehari_residual: d.nehari_residual,
        gradient_norm: d.gradient_norm,
        iterations: d.iterations,
        converged: d.converged,
    };
    Ok((header, sol))
}

pub fn write_archive(path: &Path, sol: &StreamSolution, source: &str) -> Result<(), ArchiveError> {
    fs::write(path, to_archive_string(sol, source)).map_err(io_err(path))
}

pub fn read_archive(path: &Path) -> Result<(ArchiveHeader, StreamSolution), ArchiveError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    from_archive_str(&text)
}

/// Node table with the reconstructed velocity and factor.
pub fn fields_csv(sol: &StreamSolution) -> String {
    let vf = reconstruct(sol);
    let g = sol.grid();
    let mut out = String::from("z,r,psi,Psi,u_r,u_theta,u_z,f\n");
    for j in 0..g.nr {
        for i in 0..g.nz {
            let k = g.idx(i, j);
            let row = [
                g.z(i),
                g.r(j),
                sol.psi.values[k],
                sol.shifted.values[k],
                vf.u_r.values[k],
                vf.u_theta.values[k],
                vf.u_z.values[k],
                vf.f.values[k],
            ];
            for (c, v) in row.iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                num(&mut out, *v);
            }
            out.push('\n');
        }
    }
    out
}

/// Legacy ASCII VTK structured points on the meridional plane (`x = z`, `y = r`).
pub fn fields_vtk(sol: &StreamSolution) -> String {
    let vf = reconstruct(sol);
    let g = sol.grid();
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0\nvring meridional fields\nASCII\nDATASET STRUCTURED_POINTS");
    let _ = writeln!(out, "DIMENSIONS {} {} 1", g.nz, g.nr);
    let _ = writeln!(out, "ORIGIN {} 0 0", -g.z_extent);
    let _ = writeln!(out, "SPACING {} {} 1", g.hz, g.hr);
    let _ = writeln!(out, "POINT_DATA {}", g.len());
    for (name, field) in [("psi", &sol.psi), ("Psi", &sol.shifted), ("u_theta", &vf.u_theta), ("f", &vf.f)] {
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in &field.values {
            num(&mut out, *v);
            out.push('\n');
        }
    }
    let _ = writeln!(out, "VECTORS meridional_velocity double");
    for k in 0..g.len() {
        num(&mut out, vf.u_z.values[k]);
        out.push(' ');
        num(&mut out, vf.u_r.values[k]);
        out.push_str(" 0\n");
    }
    out
}
