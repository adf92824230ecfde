//! Uniform `(z, r)` lattice on `[-Z, Z] × [0, R]`, the Stokes-stream operator
//! `L = ∂_z² + ∂_r² − r⁻¹∂_r`, the weighted energy product and the Dirichlet
//! solve `−Lψ = f`.
//!
//! The operator is discretised in conservative form, `L = ∂_z² + r ∂_r(r⁻¹ ∂_r)`,
//! with the `r⁻¹` coefficient of the radial flux taken at the half nodes.
//! The stencil is second order, exact on `r²`, `r⁴` and `z²`, and it is the
//! exact gradient of the edge-sum energy in [`weighted_inner`], so the
//! discrete functional, its derivative and the linear solve agree to
//! rounding.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `2π²`, the area of the unit 3-sphere; weight of the energy product.
pub const TWO_PI_SQ: f64 = 2.0 * PI * PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    Invalid(String),
    #[error("fields live on different grids")]
    Mismatch,
    #[error("dirichlet solve did not reach relative residual {tol:e} after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        tol: f64,
    },
}

/// Node lattice on `[-Z, Z] × [0, R]`. Nodes on `r = 0`, `r = R` and `|z| = Z`
/// carry Dirichlet data; every other node has all four neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxiGrid {
    pub z_extent: f64,
    pub r_extent: f64,
    pub nz: usize,
    pub nr: usize,
    pub hz: f64,
    pub hr: f64,
}

impl AxiGrid {
    pub fn new(z_extent: f64, r_extent: f64, nz: usize, nr: usize) -> Result<Self, GridError> {
        if !(z_extent > 0.0 && z_extent.is_finite()) || !(r_extent > 0.0 && r_extent.is_finite()) {
            return Err(GridError::Invalid(format!(
                "extents must be positive, got Z={z_extent}, R={r_extent}"
            )));
        }
        if nz < 3 || nr < 3 {
            return Err(GridError::Invalid(format!(
                "need at least 3 nodes per direction, got nz={nz}, nr={nr}"
            )));
        }
        Ok(Self {
            z_extent,
            r_extent,
            nz,
            nr,
            hz: 2.0 * z_extent / (nz - 1) as f64,
            hr: r_extent / (nr - 1) as f64,
        })
    }

    /// Grid with prescribed spacings; extents are rounded to whole cells.
    pub fn with_spacing(z_extent: f64, r_extent: f64, hz: f64, hr: f64) -> Result<Self, GridError> {
        let cz = (z_extent / hz).round() as usize;
        let cr = (r_extent / hr).round() as usize;
        if cz == 0 || cr < 2 {
            return Err(GridError::Invalid("spacing larger than extent".into()));
        }
        let mut g = Self::new(cz as f64 * hz, cr as f64 * hr, 2 * cz + 1, cr + 1)?;
        g.hz = hz;
        g.hr = hr;
        Ok(g)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nz * self.nr
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nz + i
    }

    #[inline]
    pub fn z(&self, i: usize) -> f64 {
        -self.z_extent + i as f64 * self.hz
    }

    #[inline]
    pub fn r(&self, j: usize) -> f64 {
        j as f64 * self.hr
    }

    /// Midpoint radius between rows `j` and `j + 1`.
    #[inline]
    pub fn r_half(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.hr
    }

    #[inline]
    pub fn is_dirichlet(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nz || j + 1 == self.nr
    }

    /// `true` on Dirichlet nodes, row-major in the same order as field values.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.len()];
        for j in 0..self.nr {
            for i in 0..self.nz {
                m[self.idx(i, j)] = self.is_dirichlet(i, j);
            }
        }
        m
    }

    pub fn cell_area(&self) -> f64 {
        self.hz * self.hr
    }

    /// Trapezoidal weight of node `(i, j)` (1, 1/2 on edges, 1/4 on corners), without `hz hr`.
    #[inline]
    pub fn trapezoid_weight(&self, i: usize, j: usize) -> f64 {
        let wz = if i == 0 || i + 1 == self.nz { 0.5 } else { 1.0 };
        let wr = if j == 0 || j + 1 == self.nr { 0.5 } else { 1.0 };
        wz * wr
    }

    /// Lattice index nearest to `z` (clamped).
    pub fn nearest_i(&self, z: f64) -> usize {
        (((z + self.z_extent) / self.hz).round().max(0.0) as usize).min(self.nz - 1)
    }

    pub fn nearest_j(&self, r: f64) -> usize {
        ((r / self.hr).round().max(0.0) as usize).min(self.nr - 1)
    }

    pub fn same_lattice(&self, other: &AxiGrid) -> bool {
        self.nz == other.nz
            && self.nr == other.nr
            && (self.hz - other.hz).abs() <= 1e-12 * self.hz
            && (self.hr - other.hr).abs() <= 1e-12 * self.hr
    }
}

/// Node values on an [`AxiGrid`], stored with `z` varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: AxiGrid,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: AxiGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: AxiGrid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::Invalid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Point samples `f(z, r)` at every node.
    pub fn sample<F: Fn(f64, f64) -> f64 + Sync>(grid: AxiGrid, f: F) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|k| f(grid.z(k % grid.nz), grid.r(k / grid.nz)))
            .collect();
        Self { grid, values }
    }

    /// `r`-weighted average of `f` over each node's dual cell, with `sub × sub`
    /// midpoint subsamples. Used to put discontinuous sources (indicator
    /// vorticities) on the lattice without node-aliasing of their support.
    pub fn cell_average<F: Fn(f64, f64) -> f64 + Sync>(grid: AxiGrid, sub: usize, f: F) -> Self {
        let sub = sub.max(1);
        let values = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k % grid.nz, k / grid.nz);
                let z0 = (grid.z(i) - 0.5 * grid.hz).max(-grid.z_extent);
                let z1 = (grid.z(i) + 0.5 * grid.hz).min(grid.z_extent);
                let r0 = (grid.r(j) - 0.5 * grid.hr).max(0.0);
                let r1 = (grid.r(j) + 0.5 * grid.hr).min(grid.r_extent);
                let mut num = 0.0;
                let mut den = 0.0;
                for a in 0..sub {
                    let z = z0 + (a as f64 + 0.5) / sub as f64 * (z1 - z0);
                    for b in 0..sub {
                        let r = r0 + (b as f64 + 0.5) / sub as f64 * (r1 - r0);
                        num += f(z, r) * r;
                        den += r;
                    }
                }
                if den > 0.0 {
                    num / den
                } else {
                    0.0
                }
            })
            .collect();
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Self {
        Self {
            grid: self.grid,
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &GridField, b: f64) -> Result<Self, GridError> {
        self.check(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    /// Pointwise product.
    pub fn combine_mul(&self, other: &GridField) -> GridField {
        GridField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sets every Dirichlet node to zero.
    pub fn zero_boundary(&mut self) {
        let g = self.grid;
        for j in 0..g.nr {
            for i in 0..g.nz {
                if g.is_dirichlet(i, j) {
                    self.values[g.idx(i, j)] = 0.0;
                }
            }
        }
    }

    pub fn check(&self, other: &GridField) -> Result<(), GridError> {
        if self.grid.same_lattice(&other.grid) {
            Ok(())
        } else {
            Err(GridError::Mismatch)
        }
    }

    /// Copies values onto another lattice with the same spacing, matching nodes
    /// by their `(z, r)` position and leaving unmatched nodes at zero.
    pub fn zero_extend(&self, target: AxiGrid) -> Self {
        let mut out = GridField::zeros(target);
        for j in 0..self.grid.nr.min(target.nr) {
            for i in 0..self.grid.nz {
                let z = self.grid.z(i);
                let ti = ((z + target.z_extent) / target.hz).round();
                if ti < 0.0 || ti as usize >= target.nz {
                    continue;
                }
                let ti = ti as usize;
                if (target.z(ti) - z).abs() > 1e-9 * target.hz.max(1.0) {
                    continue;
                }
                out.set(ti, j, self.at(i, j));
            }
        }
        out.zero_boundary();
        out
    }
}

/// Discrete `L = ∂_z² + r ∂_r(r⁻¹ ∂_r)` at interior nodes; zero on Dirichlet nodes.
///
/// Boundary values of `field` enter as data, so the stencil also applies to
/// fields with nonzero boundary traces.
pub fn apply_l(field: &GridField) -> GridField {
    let g = field.grid;
    let v = &field.values;
    let (nz, nr) = (g.nz, g.nr);
    let ihz2 = 1.0 / (g.hz * g.hz);
    let ihr2 = 1.0 / (g.hr * g.hr);
    let mut out = vec![0.0; g.len()];
    out.par_chunks_mut(nz)
        .enumerate()
        .filter(|(j, _)| *j > 0 && *j + 1 < nr)
        .for_each(|(j, row)| {
            let r = g.r(j);
            let wp = r / g.r_half(j);
            let wm = r / g.r_half(j - 1);
            for i in 1..nz - 1 {
                let c = v[j * nz + i];
                let dzz = (v[j * nz + i + 1] - 2.0 * c + v[j * nz + i - 1]) * ihz2;
                let drr = (wp * (v[(j + 1) * nz + i] - c) - wm * (c - v[(j - 1) * nz + i])) * ihr2;
                row[i] = dzz + drr;
            }
        });
    GridField {
        grid: g,
        values: out,
    }
}

/// `(a, b)_H = 2π² ∫ ∇a·∇b r⁻¹ dz dr` as an edge sum: forward differences on
/// every lattice edge, `r⁻¹` at the edge midpoint.
pub fn weighted_inner(a: &GridField, b: &GridField) -> Result<f64, GridError> {
    a.check(b)?;
    let g = a.grid;
    let (nz, nr) = (g.nz, g.nr);
    let (x, y) = (&a.values, &b.values);
    let zpart: f64 = (1..nr)
        .into_par_iter()
        .map(|j| {
            let w = 1.0 / g.r(j);
            let mut s = 0.0;
            for i in 0..nz - 1 {
                let k = j * nz + i;
                s += (x[k + 1] - x[k]) * (y[k + 1] - y[k]);
            }
            s * w
        })
        .sum::<f64>()
        / (g.hz * g.hz);
    let rpart: f64 = (0..nr - 1)
        .into_par_iter()
        .map(|j| {
            let w = 1.0 / g.r_half(j);
            let mut s = 0.0;
            for i in 0..nz {
                let k = j * nz + i;
                s += (x[k + nz] - x[k]) * (y[k + nz] - y[k]);
            }
            s * w
        })
        .sum::<f64>()
        / (g.hr * g.hr);
    Ok(TWO_PI_SQ * (zpart + rpart) * g.cell_area())
}

/// `‖a‖²_H`.
pub fn energy_norm_sq(a: &GridField) -> f64 {
    weighted_inner(a, a).expect("same grid")
}

/// `2π² Σ_interior (−L a) b r⁻¹ hz hr`; equals [`weighted_inner`] when `a`, `b`
/// vanish on Dirichlet nodes (discrete Green identity).
pub fn interior_pairing(a: &GridField, b: &GridField) -> Result<f64, GridError> {
    a.check(b)?;
    let la = apply_l(a);
    let g = a.grid;
    let mut s = 0.0;
    for j in 1..g.nr - 1 {
        let w = 1.0 / g.r(j);
        for i in 1..g.nz - 1 {
            let k = g.idx(i, j);
            s -= la.values[k] * b.values[k] * w;
        }
    }
    Ok(TWO_PI_SQ * s * g.cell_area())
}

/// Dirichlet solver for `−Lψ = f`, `ψ = 0` on all Dirichlet nodes.
///
/// The equation is divided by `r`, which makes the operator symmetric
/// positive definite; conjugate gradients run on that system with the
/// separable fast solver (sine transform in `z`, tridiagonal in `r`) as
/// preconditioner. On the rectangle the preconditioner is the exact inverse,
/// so the iteration terminates after one or two sweeps; the residual check is
/// what certifies the result.
pub struct DirichletSolver {
    grid: AxiGrid,
    fft: Arc<dyn Fft<f64>>,
    /// Eigenvalues of −δ_z² on the interior z-nodes.
    mu: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl std::fmt::Debug for DirichletSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirichletSolver")
            .field("grid", &self.grid)
            .field("tol", &self.tol)
            .field("max_iter", &self.max_iter)
            .finish()
    }
}

impl DirichletSolver {
    pub fn new(grid: AxiGrid) -> Self {
        let m = grid.nz - 2;
        let n = 2 * (m + 1);
        let fft = FftPlanner::new().plan_fft_forward(n);
        let mu = (1..=m)
            .map(|k| {
                let s = (k as f64 * PI / (2.0 * (m + 1) as f64)).sin();
                4.0 * s * s / (grid.hz * grid.hz)
            })
            .collect();
        Self {
            grid,
            fft,
            mu,
            tol: 1e-10,
            max_iter: 50,
        }
    }

    pub fn grid(&self) -> &AxiGrid {
        &self.grid
    }

    /// Symmetric operator `A x = −L x / r` on interior nodes.
    fn apply_a(&self, x: &[f64], out: &mut [f64]) {
        let g = self.grid;
        let (nz, nr) = (g.nz, g.nr);
        let ihz2 = 1.0 / (g.hz * g.hz);
        let ihr2 = 1.0 / (g.hr * g.hr);
        out.par_chunks_mut(nz).enumerate().for_each(|(j, row)| {
            if j == 0 || j + 1 == nr {
                row.iter_mut().for_each(|v| *v = 0.0);
                return;
            }
            let ir = 1.0 / g.r(j);
            let wp = 1.0 / g.r_half(j);
            let wm = 1.0 / g.r_half(j - 1);
            row[0] = 0.0;
            row[nz - 1] = 0.0;
            for i in 1..nz - 1 {
                let c = x[j * nz + i];
                let dzz = (x[j * nz + i + 1] - 2.0 * c + x[j * nz + i - 1]) * ihz2 * ir;
                let drr = (wp * (x[(j + 1) * nz + i] - c) - wm * (c - x[(j - 1) * nz + i])) * ihr2;
                row[i] = -(dzz + drr);
            }
        });
    }

    /// In-place sine transform (DST-I) of each interior z-line, scaled by `scale`.
    fn dst_rows(&self, data: &mut [f64], scale: f64) {
        let g = self.grid;
        let nz = g.nz;
        let m = nz - 2;
        let n = 2 * (m + 1);
        data.par_chunks_mut(nz)
            .enumerate()
            .filter(|(j, _)| *j > 0 && *j + 1 < g.nr)
            .for_each_init(
                || {
                    (
                        vec![Complex64::new(0.0, 0.0); n],
                        vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()],
                    )
                },
                |(buf, scratch), (_, row)| {
                    buf[0] = Complex64::new(0.0, 0.0);
                    buf[m + 1] = Complex64::new(0.0, 0.0);
                    for k in 1..=m {
                        buf[k] = Complex64::new(row[k], 0.0);
                        buf[n - k] = Complex64::new(-row[k], 0.0);
                    }
                    self.fft.process_with_scratch(buf, scratch);
                    for k in 1..=m {
                        row[k] = -0.5 * buf[k].im * scale;
                    }
                },
            );
    }

    /// Exact inverse of `A` by separation of variables.
    fn precondition(&self, rhs: &[f64], out: &mut [f64]) {
        let g = self.grid;
        let (nz, nr) = (g.nz, g.nr);
        let m = nz - 2;
        out.copy_from_slice(rhs);
        self.dst_rows(out, 1.0);
        let ihr2 = 1.0 / (g.hr * g.hr);
        let nint = nr - 2;
        // tridiagonal solve per sine mode, modes are independent columns
        let cols: Vec<Vec<f64>> = (1..=m)
            .into_par_iter()
            .map(|k| {
                let mu = self.mu[k - 1];
                let mut cp = vec![0.0; nint];
                let mut dp = vec![0.0; nint];
                for t in 0..nint {
                    let j = t + 1;
                    let wp = 1.0 / g.r_half(j) * ihr2;
                    let wm = 1.0 / g.r_half(j - 1) * ihr2;
                    let diag = mu / g.r(j) + wp + wm;
                    let lower = if t > 0 { -wm } else { 0.0 };
                    let upper = -wp;
                    let b = out[j * nz + k];
                    let denom = if t > 0 { diag - lower * cp[t - 1] } else { diag };
                    cp[t] = upper / denom;
                    dp[t] = if t > 0 { (b - lower * dp[t - 1]) / denom } else { b / denom };
                }
                for t in (0..nint.saturating_sub(1)).rev() {
                    dp[t] -= cp[t] * dp[t + 1];
                }
                dp
            })
            .collect();
        for (kk, col) in cols.iter().enumerate() {
            for (t, v) in col.iter().enumerate() {
                out[(t + 1) * nz + kk + 1] = *v;
            }
        }
        self.dst_rows(out, 2.0 / (m + 1) as f64);
        for j in 0..nr {
            out[j * nz] = 0.0;
            out[j * nz + nz - 1] = 0.0;
        }
        for i in 0..nz {
            out[i] = 0.0;
            out[(nr - 1) * nz + i] = 0.0;
        }
    }

    /// Solves `−Lψ = rhs` with homogeneous Dirichlet data.
    pub fn solve(&self, rhs: &GridField) -> Result<GridField, GridError> {
        let g = self.grid;
        if !g.same_lattice(&rhs.grid) {
            return Err(GridError::Mismatch);
        }
        let n = g.len();
        let mut b = vec![0.0; n];
        for j in 1..g.nr - 1 {
            let ir = 1.0 / g.r(j);
            for i in 1..g.nz - 1 {
                let k = g.idx(i, j);
                b[k] = rhs.values[k] * ir;
            }
        }
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut x = vec![0.0; n];
        if bnorm == 0.0 {
            return Ok(GridField { grid: g, values: x });
        }
        let mut r = b.clone();
        let mut z = vec![0.0; n];
        self.precondition(&r, &mut z);
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; n];
        let mut res = 1.0;
        for it in 0..self.max_iter {
            self.apply_a(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                return Err(GridError::NonConvergence {
                    iterations: it,
                    residual: res,
                    tol: self.tol,
                });
            }
            let alpha = rz / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            res = r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm;
            if res <= self.tol {
                return Ok(GridField { grid: g, values: x });
            }
            self.precondition(&r, &mut z);
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        Err(GridError::NonConvergence {
            iterations: self.max_iter,
            residual: res,
            tol: self.tol,
        })
    }
}

/// One-shot convenience wrapper around [`DirichletSolver`].
pub fn solve_dirichlet(rhs: &GridField) -> Result<GridField, GridError> {
    DirichletSolver::new(rhs.grid).solve(rhs)
}
