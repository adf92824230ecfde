//! The Nehari-manifold construction of the grand state of
//! `−Lψ = λ (ψ − (W/2) r² − γ)₊^{2q−1}` on a truncated half plane.
//!
//! Functional: `I[ψ] = ½‖ψ‖²_H − J[ψ]`,
//! `J[ψ] = (π²λ/q) ∫ (ψ − (W/2)r² − γ)₊^{2q} r⁻¹ dz dr`.
//! Critical points of `I` are exactly the discrete solutions, since
//! `(·,·)_H` is the energy product of the lattice operator.
//!
//! The speed `W` is kept as a parameter rather than normalised to 2; the two
//! formulations are related by `ψ = (W/2) ψ̃`, `γ = (W/2) γ̃`,
//! `λ̃ = λ (W/2)^{2q−2}`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explicit::HicksMoffattParams;
use crate::grid::{energy_norm_sq, weighted_inner, AxiGrid, DirichletSolver, GridError, GridField};
use crate::profile::Profile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VariationalError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("Nehari bracket failed: the nonlinearity stays inactive along the ray (field too small or misplaced)")]
    BracketFailure,
    #[error("iterate collapsed to zero (lambda too small for this grid?)")]
    Collapse,
    #[error("no convergence after {iterations} iterations (relative energy change {energy_change:e}, gradient {gradient:e})")]
    NonConvergence {
        iterations: usize,
        energy_change: f64,
        gradient: f64,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// `(λ, q, W, γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub lambda: f64,
    pub q: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub gamma: f64,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            q: 2.0,
            w: 2.0,
            gamma: 0.1,
        }
    }
}

impl ProblemParams {
    pub fn validate(&self) -> Result<(), VariationalError> {
        let bad = |m: &str| Err(VariationalError::InvalidParams(m.to_string()));
        if !(self.q > 1.0) || !self.q.is_finite() {
            return bad(&format!("q must satisfy 1 < q < inf, got {}", self.q));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return bad(&format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.w > 0.0) || !self.w.is_finite() {
            return bad(&format!("W must be positive, got {}", self.w));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return bad(&format!("gamma must be positive, got {}", self.gamma));
        }
        Ok(())
    }

    /// `(W/2) r² + γ`.
    #[inline]
    pub fn obstacle(&self, r: f64) -> f64 {
        0.5 * self.w * r * r + self.gamma
    }

    pub fn profile(&self) -> Profile {
        Profile::Power {
            lambda: self.lambda,
            q: self.q,
        }
    }

    /// `β = 1/(2q − 1)`.
    pub fn beta(&self) -> f64 {
        1.0 / (2.0 * self.q - 1.0)
    }
}

#[inline]
fn pospow(x: f64, e: f64, ei: Option<i32>) -> f64 {
    if x <= 0.0 {
        0.0
    } else if let Some(n) = ei {
        x.powi(n)
    } else {
        x.powf(e)
    }
}

fn int_exp(e: f64) -> Option<i32> {
    (e.fract() == 0.0 && e.abs() < 64.0).then_some(e as i32)
}

/// Node data for the nonlinear part: `(index, obstacle, 1/r)` on interior nodes.
struct Nonlinear {
    p: ProblemParams,
    weight: f64,
    nodes: Vec<(usize, f64, f64)>,
}

impl Nonlinear {
    fn new(grid: &AxiGrid, p: ProblemParams) -> Self {
        let mut nodes = Vec::with_capacity(grid.len());
        for j in 1..grid.nr - 1 {
            let r = grid.r(j);
            for i in 1..grid.nz - 1 {
                nodes.push((grid.idx(i, j), p.obstacle(r), 1.0 / r));
            }
        }
        Self {
            p,
            weight: 2.0 * PI * PI * grid.cell_area(),
            nodes,
        }
    }

    /// `J[ψ]`.
    fn j(&self, psi: &[f64]) -> f64 {
        let e = 2.0 * self.p.q;
        let ei = int_exp(e);
        let s: f64 = self
            .nodes
            .par_iter()
            .map(|&(k, ob, ir)| pospow(psi[k] - ob, e, ei) * ir)
            .sum();
        self.weight * self.p.lambda / (2.0 * self.p.q) * s
    }

    /// `J'[ψ]φ`.
    fn j_prime(&self, psi: &[f64], phi: &[f64]) -> f64 {
        let e = 2.0 * self.p.q - 1.0;
        let ei = int_exp(e);
        let s: f64 = self
            .nodes
            .par_iter()
            .map(|&(k, ob, ir)| pospow(psi[k] - ob, e, ei) * phi[k] * ir)
            .sum();
        self.weight * self.p.lambda * s
    }

    /// `J'[tψ]ψ / t` restricted to the nodes where `ψ > 0`.
    fn ray_derivative(&self, active: &[(f64, f64, f64)], t: f64) -> f64 {
        let e = 2.0 * self.p.q - 1.0;
        let ei = int_exp(e);
        let s: f64 = active
            .iter()
            .map(|&(v, ob, ir)| pospow(t * v - ob, e, ei) * v * ir)
            .sum();
        self.weight * self.p.lambda * s / t
    }

    /// Right-hand side `λ Ψ₊^{2q−1}`.
    fn source(&self, grid: AxiGrid, psi: &[f64]) -> GridField {
        let e = 2.0 * self.p.q - 1.0;
        let ei = int_exp(e);
        let mut out = GridField::zeros(grid);
        for &(k, ob, _) in &self.nodes {
            out.values[k] = self.p.lambda * pospow(psi[k] - ob, e, ei);
        }
        out
    }
}

/// `(I[ψ], J[ψ])`.
pub fn functional_i(psi: &GridField, p: &ProblemParams) -> (f64, f64) {
    let nl = Nonlinear::new(&psi.grid, *p);
    let j = nl.j(&psi.values);
    (0.5 * energy_norm_sq(psi) - j, j)
}

/// `I'[ψ]φ = (ψ, φ)_H − J'[ψ]φ`.
pub fn i_prime_pairing(psi: &GridField, phi: &GridField, p: &ProblemParams) -> Result<f64, VariationalError> {
    let h = weighted_inner(psi, phi)?;
    let nl = Nonlinear::new(&psi.grid, *p);
    Ok(h - nl.j_prime(&psi.values, &phi.values))
}

/// `I[tψ]` for each `t`, the energy along the ray through `ψ`.
pub fn ray_energies(psi: &GridField, p: &ProblemParams, ts: &[f64]) -> Vec<f64> {
    let n2 = energy_norm_sq(psi);
    let nl = Nonlinear::new(&psi.grid, *p);
    ts.iter()
        .map(|&t| {
            let scaled: Vec<f64> = psi.values.iter().map(|v| t * v).collect();
            0.5 * t * t * n2 - nl.j(&scaled)
        })
        .collect()
}

fn nehari_scale_with(nl: &Nonlinear, psi: &GridField, n2: f64) -> Result<f64, VariationalError> {
    if !(n2 > 0.0) {
        return Err(VariationalError::Collapse);
    }
    let active: Vec<(f64, f64, f64)> = nl
        .nodes
        .iter()
        .filter(|(k, ..)| psi.values[*k] > 0.0)
        .map(|&(k, ob, ir)| (psi.values[k], ob, ir))
        .collect();
    if active.is_empty() {
        return Err(VariationalError::BracketFailure);
    }
    // ġ(t)/t = ‖ψ‖² − J'[tψ]ψ/t is strictly decreasing once the nonlinearity is active
    let f = |t: f64| n2 - nl.ray_derivative(&active, t);
    let mut lo = 1.0;
    let mut hi = 1.0;
    if f(1.0) > 0.0 {
        let mut n = 0;
        while f(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            n += 1;
            if n > 200 {
                return Err(VariationalError::BracketFailure);
            }
        }
    } else {
        let mut n = 0;
        while f(lo) <= 0.0 {
            hi = lo;
            lo *= 0.5;
            n += 1;
            if n > 200 {
                return Err(VariationalError::Collapse);
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The unique `t > 0` with `I'[tψ](tψ) = 0`.
pub fn nehari_scale(psi: &GridField, p: &ProblemParams) -> Result<f64, VariationalError> {
    let nl = Nonlinear::new(&psi.grid, *p);
    nehari_scale_with(&nl, psi, energy_norm_sq(psi))
}

/// Decreasing rearrangement of one row about its centre: the largest value at
/// the centre, then alternately right and left. Preserves the multiset exactly
/// but is even only up to one position.
pub fn decreasing_rearrangement(row: &[f64]) -> Vec<f64> {
    let n = row.len();
    let mut v = row.to_vec();
    v.sort_by(|a, b| b.partial_cmp(a).expect("finite values"));
    let mut out = vec![0.0; n];
    let c = (n - 1) / 2;
    for (k, val) in v.into_iter().enumerate() {
        let off = k.div_ceil(2);
        let pos = if k % 2 == 1 { c + off } else { c - off };
        out[pos.min(n - 1)] = val;
    }
    out
}

fn symmetrize_row(row: &mut [f64]) {
    let n = row.len();
    let mut v = row.to_vec();
    // stable sort keeps the original z-order for ties
    v.sort_by(|a, b| b.partial_cmp(a).expect("finite values"));
    if n % 2 == 1 {
        let c = n / 2;
        row[c] = v[0];
        for k in 1..=c {
            let m = 0.5 * (v[2 * k - 1] + v[2 * k]);
            row[c + k] = m;
            row[c - k] = m;
        }
    } else {
        let c = n / 2;
        for k in 0..c {
            let m = 0.5 * (v[2 * k] + v[2 * k + 1]);
            row[c + k] = m;
            row[c - 1 - k] = m;
        }
    }
}

/// Discrete Steiner symmetrization in `z`, row by row.
///
/// Each row's values are sorted in decreasing order; the largest goes to the
/// centre and consecutive pairs are averaged onto the mirror positions `±k`.
/// The result is exactly even and nonincreasing in `|z|`; the row sum is
/// preserved, the maximum too when `nz` is odd, and the value multiset is preserved whenever the
/// input row is already even (in particular symmetric-decreasing rows are
/// fixed points). An exactly even output cannot keep an arbitrary multiset,
/// which is why pairs are averaged.
pub fn steiner_symmetrize(psi: &GridField) -> GridField {
    let mut out = psi.clone();
    let nz = psi.grid.nz;
    out.values.par_chunks_mut(nz).for_each(symmetrize_row);
    out
}

/// Grand state (or explicit field) on a lattice, with solver diagnostics.
#[derive(Debug, Clone)]
pub struct StreamSolution {
    /// `ψ = Ψ + (W/2) r² + γ`.
    pub psi: GridField,
    /// `Ψ`.
    pub shifted: GridField,
    pub profile: Profile,
    pub w: f64,
    pub gamma: f64,
    /// `I[ψ]` (solver output only).
    pub energy: Option<f64>,
    /// `|I'[ψ]ψ| / ‖ψ‖²_H` (solver output only).
    pub nehari_residual: Option<f64>,
    /// `‖ψ − T(ψ)‖_H / ‖ψ‖_H` with `T = (−L)⁻¹ λΨ₊^{2q−1}`, the relative H-gradient.
    pub gradient_norm: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Axis-aligned box of the core `{Ψ > 0}` in node indices and coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreBox {
    pub i_min: usize,
    pub i_max: usize,
    pub j_min: usize,
    pub j_max: usize,
    pub z_min: f64,
    pub z_max: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl StreamSolution {
    pub fn from_psi(psi: GridField, profile: Profile, w: f64, gamma: f64) -> Self {
        let g = psi.grid;
        let mut shifted = psi.clone();
        for j in 0..g.nr {
            let ob = 0.5 * w * g.r(j).powi(2) + gamma;
            for i in 0..g.nz {
                shifted.values[g.idx(i, j)] -= ob;
            }
        }
        Self {
            psi,
            shifted,
            profile,
            w,
            gamma,
            energy: None,
            nehari_residual: None,
            gradient_norm: None,
            iterations: 0,
            converged: true,
        }
    }

    /// Samples an explicit Hicks-Moffatt field (`γ = 0`).
    pub fn from_explicit(params: &HicksMoffattParams, grid: AxiGrid) -> Self {
        let shifted = crate::explicit::sample_psi(params, grid);
        let mut psi = shifted.clone();
        for j in 0..grid.nr {
            let add = 0.5 * params.w * grid.r(j).powi(2);
            for i in 0..grid.nz {
                psi.values[grid.idx(i, j)] += add;
            }
        }
        Self {
            psi,
            shifted,
            profile: Profile::HicksMoffatt(*params),
            w: params.w,
            gamma: 0.0,
            energy: None,
            nehari_residual: None,
            gradient_norm: None,
            iterations: 0,
            converged: true,
        }
    }

    pub fn grid(&self) -> AxiGrid {
        self.psi.grid
    }

    /// Problem parameters when the profile is the power law.
    pub fn problem(&self) -> Option<ProblemParams> {
        match self.profile {
            Profile::Power { lambda, q } => Some(ProblemParams {
                lambda,
                q,
                w: self.w,
                gamma: self.gamma,
            }),
            Profile::HicksMoffatt(_) => None,
        }
    }

    /// `ζ = (−LΨ)/r² = source(r, Ψ)/r²`, zero on the axis row.
    pub fn zeta(&self) -> GridField {
        let g = self.grid();
        let mut out = GridField::zeros(g);
        for j in 1..g.nr {
            let r = g.r(j);
            for i in 0..g.nz {
                let k = g.idx(i, j);
                out.values[k] = self.profile.source(r, self.shifted.values[k]) / (r * r);
            }
        }
        out
    }

    /// `l₀ = max Ψ₊`.
    pub fn l0(&self) -> f64 {
        self.shifted.max().max(0.0)
    }

    /// Node of the maximum of `Ψ`.
    pub fn argmax(&self) -> (usize, usize) {
        let g = self.grid();
        let mut best = (0, 0);
        let mut bv = f64::NEG_INFINITY;
        for j in 0..g.nr {
            for i in 0..g.nz {
                let v = self.shifted.at(i, j);
                if v > bv {
                    bv = v;
                    best = (i, j);
                }
            }
        }
        best
    }

    /// `Ψ > 0` per node.
    pub fn core_mask(&self) -> Vec<bool> {
        self.shifted.values.iter().map(|v| *v > 0.0).collect()
    }

    pub fn core_box(&self) -> Option<CoreBox> {
        let g = self.grid();
        let mut b: Option<CoreBox> = None;
        for j in 0..g.nr {
            for i in 0..g.nz {
                if self.shifted.at(i, j) <= 0.0 {
                    continue;
                }
                let e = b.get_or_insert(CoreBox {
                    i_min: i,
                    i_max: i,
                    j_min: j,
                    j_max: j,
                    z_min: 0.0,
                    z_max: 0.0,
                    r_min: 0.0,
                    r_max: 0.0,
                });
                e.i_min = e.i_min.min(i);
                e.i_max = e.i_max.max(i);
                e.j_min = e.j_min.min(j);
                e.j_max = e.j_max.max(j);
            }
        }
        b.map(|mut e| {
            e.z_min = g.z(e.i_min);
            e.z_max = g.z(e.i_max);
            e.r_min = g.r(e.j_min);
            e.r_max = g.r(e.j_max);
            e
        })
    }

    /// `k₀ = f(l₀)`.
    pub fn k0(&self) -> f64 {
        self.profile.factor(self.l0())
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Bound on `|I'[ψ]ψ| / ‖ψ‖²_H` at acceptance.
    pub tol_nehari: f64,
    /// Bound on the relative energy change of the last accepted step.
    pub tol_energy: f64,
    /// Bound on the relative H-gradient `‖ψ − T(ψ)‖_H / ‖ψ‖_H`.
    pub tol_gradient: f64,
    pub max_iter: usize,
    /// Seed disk centres `(z, r)`; empty means the single default seed
    /// `(0, √(2γ/W) + 1)`. The lowest-energy result is returned.
    pub seeds: Vec<(f64, f64)>,
    pub seed_radius: f64,
    /// Initial iterate (replaces the seed disks), e.g. a zero-extended
    /// solution from a smaller domain.
    pub warm_start: Option<GridField>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_nehari: 1e-6,
            tol_energy: 1e-8,
            tol_gradient: 1e-4,
            max_iter: 500,
            seeds: Vec::new(),
            seed_radius: 1.0,
            warm_start: None,
        }
    }
}

fn seed_field(grid: AxiGrid, center: (f64, f64), radius: f64, solver: &DirichletSolver) -> Result<GridField, VariationalError> {
    let mut rhs = GridField::sample(grid, |z, r| {
        if (z - center.0).powi(2) + (r - center.1).powi(2) < radius * radius {
            r * r
        } else {
            0.0
        }
    });
    rhs.zero_boundary();
    if rhs.max_abs() == 0.0 {
        return Err(VariationalError::InvalidParams(format!(
            "seed disk at {center:?} misses the grid"
        )));
    }
    Ok(solver.solve(&rhs)?)
}

fn iterate(
    p: &ProblemParams,
    start: GridField,
    solver: &DirichletSolver,
    opts: &SolverOptions,
) -> Result<StreamSolution, VariationalError> {
    let grid = start.grid;
    let nl = Nonlinear::new(&grid, *p);
    let mut psi = start;
    psi.zero_boundary();
    psi = psi.map(|v| v.max(0.0));
    let t = nehari_scale_with(&nl, &psi, energy_norm_sq(&psi))?;
    psi = psi.scaled(t);
    let mut n2 = energy_norm_sq(&psi);
    let mut energy = 0.5 * n2 - nl.j(&psi.values);
    let mut alpha: f64 = 1.0;
    let mut d_e = f64::INFINITY;
    let mut grad = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..=opts.max_iter {
        let tmap = solver.solve(&nl.source(grid, &psi.values))?;
        let diff = psi.combine(1.0, &tmap, -1.0)?;
        grad = (energy_norm_sq(&diff) / n2).sqrt();
        let nehari = (n2 - nl.j_prime(&psi.values, &psi.values)).abs() / n2;
        log::debug!("iter {it}: I={energy:.12e} dE={d_e:.3e} grad={grad:.3e} alpha={alpha:.3e}");
        if d_e <= opts.tol_energy && grad <= opts.tol_gradient && nehari <= opts.tol_nehari {
            converged = true;
            break;
        }
        if it == opts.max_iter {
            break;
        }
        iterations = it + 1;
        // damped H-gradient step ψ − a(ψ − T), symmetrized and projected on the Nehari manifold
        let mut a = alpha;
        let mut accepted = None;
        while a >= 1e-6 {
            let trial = psi.combine(1.0 - a, &tmap, a)?;
            let phi = steiner_symmetrize(&trial);
            let phi_n2 = energy_norm_sq(&phi);
            let t = nehari_scale_with(&nl, &phi, phi_n2)?;
            let cand = phi.scaled(t);
            let cand_n2 = t * t * phi_n2;
            let e = 0.5 * cand_n2 - nl.j(&cand.values);
            if e <= energy + 1e-13 * energy.abs() {
                accepted = Some((cand, cand_n2, e, a));
                break;
            }
            a *= 0.5;
        }
        let Some((cand, cand_n2, e, a_used)) = accepted else {
            // no descent direction at lattice precision
            if grad <= opts.tol_gradient {
                converged = true;
            }
            break;
        };
        d_e = (energy - e).abs() / energy.abs().max(f64::MIN_POSITIVE);
        alpha = (2.0 * a_used).min(1.0);
        psi = cand;
        n2 = cand_n2;
        energy = e;
        if n2 < 1e-300 {
            return Err(VariationalError::Collapse);
        }
    }
    let nehari = (n2 - nl.j_prime(&psi.values, &psi.values)).abs() / n2;
    let mut sol = StreamSolution::from_psi(psi, p.profile(), p.w, p.gamma);
    sol.energy = Some(energy);
    sol.nehari_residual = Some(nehari);
    sol.gradient_norm = Some(grad);
    sol.iterations = iterations;
    sol.converged = converged;
    Ok(sol)
}

/// Minimises `I` over the discrete Nehari manifold by symmetrized, damped
/// fixed-point iteration `ψ ← t(φ)φ`, `φ = S((1−a)ψ + a(−L)⁻¹(λΨ₊^{2q−1}))`,
/// where `S` is the Steiner symmetrization and `a ∈ (0, 1]` is halved until the
/// energy does not increase. With `a = 1` this is the plain inverse-operator
/// iteration; smaller `a` is a damped H-gradient step, since the H-gradient
/// of `I` at `ψ` is `ψ − (−L)⁻¹(λΨ₊^{2q−1})`.
pub fn solve_grand_state(
    p: &ProblemParams,
    grid: AxiGrid,
    opts: &SolverOptions,
) -> Result<StreamSolution, VariationalError> {
    p.validate()?;
    let solver = DirichletSolver::new(grid);
    let starts: Vec<GridField> = if let Some(ws) = &opts.warm_start {
        if !ws.grid.same_lattice(&grid) {
            return Err(GridError::Mismatch.into());
        }
        vec![ws.clone()]
    } else {
        let seeds = if opts.seeds.is_empty() {
            vec![(0.0, (2.0 * p.gamma / p.w).sqrt() + 1.0)]
        } else {
            opts.seeds.clone()
        };
        seeds
            .iter()
            .map(|&c| seed_field(grid, c, opts.seed_radius, &solver))
            .collect::<Result<_, _>>()?
    };
    let mut best: Option<StreamSolution> = None;
    let mut last_err = None;
    for s in starts {
        match iterate(p, s, &solver, opts) {
            Ok(sol) => {
                let better = best
                    .as_ref()
                    .is_none_or(|b| sol.energy.unwrap_or(f64::INFINITY) < b.energy.unwrap_or(f64::INFINITY));
                if better {
                    best = Some(sol);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let sol = match (best, last_err) {
        (Some(b), _) => b,
        (None, Some(e)) => return Err(e),
        (None, None) => return Err(VariationalError::Collapse),
    };
    if !sol.converged {
        return Err(VariationalError::NonConvergence {
            iterations: sol.iterations,
            energy_change: f64::NAN,
            gradient: sol.gradient_norm.unwrap_or(f64::NAN),
        });
    }
    Ok(sol)
}

/// Solves on `[−R, R] × [0, R]` for each radius at fixed spacings, warm
/// starting each domain from the zero extension of the previous solution.
/// Because the lattices are nested, the warm start has the previous energy
/// and the sweep's energies are nonincreasing.
pub fn continuation_sweep(
    p: &ProblemParams,
    radii: &[f64],
    hz: f64,
    hr: f64,
    opts: &SolverOptions,
) -> Result<Vec<StreamSolution>, VariationalError> {
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(VariationalError::InvalidParams("radii must be increasing".into()));
    }
    let mut out: Vec<StreamSolution> = Vec::with_capacity(radii.len());
    for &radius in radii {
        let grid = AxiGrid::with_spacing(radius, radius, hz, hr)?;
        let mut o = opts.clone();
        if let Some(prev) = out.last() {
            o.warm_start = Some(prev.psi.zero_extend(grid));
        }
        let sol = solve_grand_state(p, grid, &o)?;
        log::info!(
            "R={radius}: I={:.10e}, iterations={}, core={:?}",
            sol.energy.unwrap_or(f64::NAN),
            sol.iterations,
            sol.core_box()
        );
        out.push(sol);
    }
    Ok(out)
}
