//! Verification suites: energy identities, inequalities, core geometry,
//! Beltrami residuals and torus topology, collected into pass/fail reports.

use std::collections::VecDeque;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Tracer;
use crate::contour::marching_squares;
use crate::fields::{
    beltrami_residual, divergence_max, factor_level_sets, interior_k_values, perpendicularity_max,
    reconstruct, LevelSetShape, VelocityField,
};
use crate::greens::{impulse_circulation, pointwise_bound_check};
use crate::grid::{energy_norm_sq, AxiGrid, GridField, TWO_PI_SQ};
use crate::profile::Profile;
use crate::variational::{functional_i, i_prime_pairing, StreamSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identities,
    Bounds,
    Topology,
    Beltrami,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "identities" => Some(Self::Identities),
            "bounds" => Some(Self::Bounds),
            "topology" => Some(Self::Topology),
            "beltrami" => Some(Self::Beltrami),
            "all" => Some(Self::All),
            _ => None,
        }
    }

    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

/// Per-check tolerances in one place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative gap in `‖ψ‖²/2π² = ∫Ψ₊rζ + (W/2)‖r³ζ‖₁ + γ‖rζ‖₁`.
    pub energy_identity: f64,
    /// Relative gap in the two core energy identities.
    pub core_identities: f64,
    /// `|I'[ψ]ψ| / ‖ψ‖²` for solver output.
    pub nehari: f64,
    /// Lower bound on `‖ψ‖_H`.
    pub nontriviality_floor: f64,
    /// Beltrami residual bound `C h² ‖u‖_max (1 + ‖f‖_max)`: the constant `C`.
    pub beltrami_constant: f64,
    /// `|ω·u|` for swirl-free fields, relative to `‖u‖²_max`.
    pub perpendicularity: f64,
    /// `max |∇·(r u)|` relative to `‖u‖_max`.
    pub divergence: f64,
    /// Hamiltonian drift per orbit, relative to `l₀`.
    pub drift: f64,
    /// Absolute gap between `Θ` from the period integral and from the 3d trace.
    pub theta: f64,
    /// Number of `k` values for the level-set topology.
    pub topology_levels: usize,
    /// Number of levels for the `Θ` cross-check.
    pub theta_levels: usize,
    /// Exponent `δ` of the pointwise envelope `min{r, r^{δ−1}}`.
    pub pointwise_delta: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            energy_identity: 1e-2,
            core_identities: 2e-2,
            nehari: 1e-6,
            nontriviality_floor: 1e-3,
            beltrami_constant: 10.0,
            perpendicularity: 1e-12,
            divergence: 1e-10,
            drift: 1e-6,
            theta: 1e-6,
            topology_levels: 10,
            theta_levels: 5,
            pointwise_delta: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The property under test, in words.
    pub statement: String,
    pub computed: Option<f64>,
    /// Expected value or bound.
    pub expected: Option<f64>,
    pub tolerance: Option<f64>,
    pub status: Status,
    pub detail: String,
}

impl Check {
    fn new(name: &str, statement: &str) -> Self {
        Self {
            name: name.into(),
            statement: statement.into(),
            computed: None,
            expected: None,
            tolerance: None,
            status: Status::Skipped,
            detail: String::new(),
        }
    }

    fn skip(mut self, why: &str) -> Self {
        self.status = Status::Skipped;
        self.detail = why.into();
        self
    }

    fn judge(mut self, pass: bool, detail: String) -> Self {
        self.status = if pass { Status::Pass } else { Status::Fail };
        self.detail = detail;
        self
    }

    fn values(mut self, computed: f64, expected: Option<f64>, tolerance: Option<f64>) -> Self {
        self.computed = Some(computed);
        self.expected = expected;
        self.tolerance = tolerance;
        self
    }

    /// `|computed − expected| ≤ tol·|expected|`.
    fn relative(self, computed: f64, expected: f64, tol: f64) -> Self {
        let gap = (computed - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
        let pass = gap <= tol && computed.is_finite();
        self.values(computed, Some(expected), Some(tol))
            .judge(pass, format!("relative gap {gap:.3e}"))
    }

    /// `computed ≤ bound`.
    fn at_most(self, computed: f64, bound: f64) -> Self {
        let pass = computed <= bound && computed.is_finite();
        self.values(computed, Some(bound), None).judge(pass, format!("{computed:.3e} ≤ {bound:.3e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: Suite,
    pub tolerances: Tolerances,
    pub checks: Vec<Check>,
    pub summary: Summary,
}

impl VerificationReport {
    /// `true` when no applicable check failed.
    pub fn passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fmt_opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6e}"));
        writeln!(f, "{:<28} {:<8} {:>14} {:>14} {:>10}  detail", "check", "status", "computed", "expected", "tol")?;
        for c in &self.checks {
            let st = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skipped => "SKIP",
            };
            writeln!(
                f,
                "{:<28} {:<8} {:>14} {:>14} {:>10}  {}",
                c.name,
                st,
                fmt_opt(c.computed),
                fmt_opt(c.expected),
                c.tolerance.map_or("-".to_string(), |t| format!("{t:.1e}")),
                c.detail
            )?;
        }
        write!(
            f,
            "{} passed, {} failed, {} skipped",
            self.summary.passed, self.summary.failed, self.summary.skipped
        )
    }
}

/// Fraction of the lattice edge `a–b` on which the linear interpolant of `Ψ` is positive.
fn positive_fraction(a: f64, b: f64) -> f64 {
    match (a > 0.0, b > 0.0) {
        (true, true) => 1.0,
        (false, false) => 0.0,
        (true, false) => a / (a - b),
        (false, true) => b / (b - a),
    }
}

/// `2π² ∫_Ω ∇a·∇b r⁻¹ dz dr` as an edge sum, each edge weighted by the fraction of
/// it inside `Ω = {Ψ > 0}`.
pub fn core_inner(a: &GridField, b: &GridField, shifted: &GridField) -> f64 {
    let g = a.grid;
    let sum: f64 = (0..g.nr)
        .into_par_iter()
        .map(|j| {
            let mut s = 0.0;
            for i in 0..g.nz {
                if i + 1 < g.nz {
                    let w = positive_fraction(shifted.at(i, j), shifted.at(i + 1, j));
                    if w > 0.0 && j > 0 {
                        let da = (a.at(i + 1, j) - a.at(i, j)) / g.hz;
                        let db = (b.at(i + 1, j) - b.at(i, j)) / g.hz;
                        s += w * da * db / g.r(j) * g.hz * g.hr;
                    }
                }
                if j + 1 < g.nr {
                    let w = positive_fraction(shifted.at(i, j), shifted.at(i, j + 1));
                    if w > 0.0 {
                        let da = (a.at(i, j + 1) - a.at(i, j)) / g.hr;
                        let db = (b.at(i, j + 1) - b.at(i, j)) / g.hr;
                        s += w * da * db / g.r_half(j) * g.hz * g.hr;
                    }
                }
            }
            s
        })
        .sum();
    TWO_PI_SQ * sum
}

/// Terms of `‖ψ‖²/2π² = ∫Ψ₊ rζ + (W/2)‖r³ζ‖₁ + γ‖rζ‖₁` on interior nodes. For
/// the power profile `∫Ψ₊ rζ = λ^{−β} ‖r^{1+2β} ζ^{1+β}‖₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyIdentity {
    pub lhs: f64,
    pub nonlinear: f64,
    pub impulse_term: f64,
    pub circulation_term: f64,
}

impl EnergyIdentity {
    pub fn rhs(&self) -> f64 {
        self.nonlinear + self.impulse_term + self.circulation_term
    }
}

pub fn energy_identity(sol: &StreamSolution) -> EnergyIdentity {
    let g = sol.grid();
    let zeta = sol.zeta();
    let area = g.cell_area();
    let (mut nl, mut m3, mut m1) = (0.0, 0.0, 0.0);
    for j in 1..g.nr - 1 {
        let r = g.r(j);
        for i in 1..g.nz - 1 {
            let z = zeta.at(i, j);
            if z == 0.0 {
                continue;
            }
            nl += match sol.profile {
                Profile::Power { lambda, q } => {
                    let beta = 1.0 / (2.0 * q - 1.0);
                    lambda.powf(-beta) * r.powf(1.0 + 2.0 * beta) * z.abs().powf(1.0 + beta) * z.signum()
                }
                Profile::HicksMoffatt(_) => sol.shifted.at(i, j).max(0.0) * r * z,
            };
            m3 += r.powi(3) * z;
            m1 += r * z;
        }
    }
    EnergyIdentity {
        lhs: energy_norm_sq(&sol.psi) / TWO_PI_SQ,
        nonlinear: nl * area,
        impulse_term: 0.5 * sol.w * m3 * area,
        circulation_term: sol.gamma * m1 * area,
    }
}

/// The two core identities: `∫_Ω|∇Ψ|² = ∫_Ω source(r, Ψ) Ψ` and
/// `∫_Ω|∇Ψ|² = ∫_Ω|∇ψ|² − ∫_Ω|∇((W/2)r² + γ)|²`, measure `2π² r⁻¹ dz dr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreIdentities {
    pub grad_shifted: f64,
    pub source_pairing: f64,
    pub grad_difference: f64,
}

pub fn core_identities(sol: &StreamSolution) -> CoreIdentities {
    let g = sol.grid();
    let s = &sol.shifted;
    let obstacle = GridField::sample(g, |_, r| 0.5 * sol.w * r * r + sol.gamma);
    let mut pairing = 0.0;
    for j in 1..g.nr - 1 {
        let r = g.r(j);
        for i in 1..g.nz - 1 {
            let t = s.at(i, j);
            if t > 0.0 {
                pairing += sol.profile.source(r, t) * t / r;
            }
        }
    }
    CoreIdentities {
        grad_shifted: core_inner(s, s, s),
        source_pairing: TWO_PI_SQ * pairing * g.cell_area(),
        grad_difference: core_inner(&sol.psi, &sol.psi, s) - core_inner(&obstacle, &obstacle, s),
    }
}

/// Core geometry of `{Ψ > 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreGeometry {
    /// 4-connected components of the core.
    pub components: usize,
    /// 8-connected components of the complement not reaching the lattice edge.
    pub holes: usize,
    pub touches_axis: bool,
    pub touches_outer_boundary: bool,
}

fn label_components(g: &AxiGrid, member: &[bool], eight: bool) -> Vec<Option<usize>> {
    let mut label = vec![None; g.len()];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..g.len() {
        if !member[start] || label[start].is_some() {
            continue;
        }
        label[start] = Some(next);
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            let (i, j) = ((k % g.nz) as isize, (k / g.nz) as isize);
            for dj in -1..=1isize {
                for di in -1..=1isize {
                    if (di == 0 && dj == 0) || (!eight && di != 0 && dj != 0) {
                        continue;
                    }
                    let (ii, jj) = (i + di, j + dj);
                    if ii < 0 || jj < 0 || ii >= g.nz as isize || jj >= g.nr as isize {
                        continue;
                    }
                    let kk = g.idx(ii as usize, jj as usize);
                    if member[kk] && label[kk].is_none() {
                        label[kk] = Some(next);
                        queue.push_back(kk);
                    }
                }
            }
        }
        next += 1;
    }
    label
}

pub fn core_geometry(shifted: &GridField) -> CoreGeometry {
    let g = shifted.grid;
    let core: Vec<bool> = shifted.values.iter().map(|v| *v > 0.0).collect();
    let comp = label_components(&g, &core, false);
    let components = comp.iter().flatten().max().map_or(0, |m| m + 1);
    let outside: Vec<bool> = core.iter().map(|c| !c).collect();
    let lab = label_components(&g, &outside, true);
    let n_out = lab.iter().flatten().max().map_or(0, |m| m + 1);
    let mut reaches_edge = vec![false; n_out];
    let mut touches_axis = false;
    let mut touches_outer = false;
    for j in 0..g.nr {
        for i in 0..g.nz {
            let k = g.idx(i, j);
            let edge = i == 0 || j == 0 || i + 1 == g.nz || j + 1 == g.nr;
            if edge {
                if let Some(l) = lab[k] {
                    reaches_edge[l] = true;
                }
                if core[k] {
                    if j == 0 {
                        touches_axis = true;
                    } else {
                        touches_outer = true;
                    }
                }
            }
        }
    }
    CoreGeometry {
        components,
        holes: reaches_edge.iter().filter(|r| !**r).count(),
        touches_axis,
        touches_outer_boundary: touches_outer,
    }
}

/// Largest `ψ(z, r) − ψ(−z, r)` and largest increase `ψ(z + h, r) − ψ(z, r)` for `z ≥ 0`.
pub fn symmetry_monotonicity(psi: &GridField) -> (f64, f64) {
    let g = psi.grid;
    let mut asym: f64 = 0.0;
    let mut incr: f64 = 0.0;
    for j in 0..g.nr {
        for i in 0..g.nz {
            asym = asym.max((psi.at(i, j) - psi.at(g.nz - 1 - i, j)).abs());
            if g.z(i) >= -1e-12 * g.hz && i + 1 < g.nz {
                incr = incr.max(psi.at(i + 1, j) - psi.at(i, j));
            }
        }
    }
    (asym, incr)
}

/// Nesting of the stream-level contours `Ψ = l₀ m/(n+1)`: every level is one
/// simple closed curve, each strictly inside the previous.
pub fn stream_level_nesting(shifted: &GridField, n: usize) -> Result<(), String> {
    let l0 = shifted.max();
    if l0 <= 0.0 {
        return Err("no core".into());
    }
    let curves: Vec<_> = (1..=n)
        .into_par_iter()
        .map(|m| (m, marching_squares(shifted, l0 * m as f64 / (n + 1) as f64)))
        .collect();
    for (m, cs) in &curves {
        if cs.len() != 1 || !cs[0].closed || !cs[0].is_simple() {
            return Err(format!("level {m}/{}: {} curves", n + 1, cs.len()));
        }
    }
    for w in curves.windows(2) {
        if !w[0].1[0].strictly_contains(&w[1].1[0]) {
            return Err(format!("level {} not inside level {}", w[1].0, w[0].0));
        }
    }
    Ok(())
}

fn identity_checks(sol: &StreamSolution, tol: &Tolerances) -> Vec<Check> {
    let mut out = Vec::new();
    let norm_sq = energy_norm_sq(&sol.psi);
    let norm = norm_sq.sqrt();
    let floor = tol.nontriviality_floor;
    out.push(
        Check::new("nontriviality", "‖ψ‖_H stays above the nontriviality floor")
            .values(norm, Some(floor), None)
            .judge(
                norm >= floor,
                if norm >= floor {
                    format!("‖ψ‖_H = {norm:.3e} ≥ {floor:.1e}")
                } else {
                    format!("‖ψ‖_H = {norm:.3e} is below the floor {floor:.1e}: trivial field")
                },
            ),
    );

    let e = energy_identity(sol);
    out.push(
        Check::new(
            "energy_identity",
            "‖ψ‖²/2π² = ∫Ψ₊rζ + (W/2)‖r³ζ‖₁ + γ‖rζ‖₁",
        )
        .relative(e.lhs, e.rhs(), tol.energy_identity),
    );

    let c = core_identities(sol);
    out.push(
        Check::new("core_energy", "∫_Ω|∇Ψ|² equals ∫_Ω Ψ·source(r, Ψ) on the core")
            .relative(c.grad_shifted, c.source_pairing, tol.core_identities),
    );
    out.push(
        Check::new("core_split", "∫_Ω|∇Ψ|² equals ∫_Ω|∇ψ|² − ∫_Ω|∇((W/2)r²+γ)|²")
            .relative(c.grad_difference, c.grad_shifted, tol.core_identities),
    );

    match sol.problem() {
        Some(p) => {
            let (i, _) = functional_i(&sol.psi, &p);
            let ip = i_prime_pairing(&sol.psi, &sol.psi, &p).unwrap_or(f64::NAN);
            let lhs = i - ip / (2.0 * p.q);
            let bound = 0.5 * (1.0 - 1.0 / p.q) * norm_sq;
            let pass = lhs >= bound * (1.0 - 1e-12);
            out.push(
                Check::new("coercivity", "I[ψ] − I'[ψ]ψ/2q ≥ (1 − 1/q)‖ψ‖²/2")
                    .values(lhs, Some(bound), None)
                    .judge(pass, format!("I = {i:.6e}")),
            );
            let rel = ip.abs() / norm_sq.max(f64::MIN_POSITIVE);
            let nehari = Check::new("nehari", "|I'[ψ]ψ| / ‖ψ‖² on the Nehari manifold");
            out.push(if sol.energy.is_some() {
                nehari.at_most(rel, tol.nehari)
            } else {
                nehari.values(rel, None, None).skip("not a solver output")
            });
        }
        None => {
            out.push(Check::new("coercivity", "I[ψ] − I'[ψ]ψ/2q ≥ (1 − 1/q)‖ψ‖²/2").skip("power profile only"));
            out.push(Check::new("nehari", "|I'[ψ]ψ| / ‖ψ‖² on the Nehari manifold").skip("power profile only"));
        }
    }

    let (asym, incr) = symmetry_monotonicity(&sol.psi);
    let sym = Check::new("even_monotone", "ψ even in z and nonincreasing in z ≥ 0");
    out.push(if sol.energy.is_some() {
        sym.values(asym.max(incr), Some(0.0), Some(0.0)).judge(
            asym == 0.0 && incr <= 0.0,
            format!("asymmetry {asym:.3e}, largest increase {incr:.3e}"),
        )
    } else {
        sym.values(asym.max(incr), None, None).skip("not a solver output")
    });
    out
}

fn bound_checks(sol: &StreamSolution, tol: &Tolerances) -> Vec<Check> {
    let mut out = Vec::new();
    let (imp, circ) = impulse_circulation(&sol.zeta());
    let ic = Check::new("impulse_circulation", "π∫r³ζ and ∫rζ finite and positive");
    out.push(
        ic.values(imp, None, None)
            .judge(imp.is_finite() && circ.is_finite() && imp > 0.0 && circ > 0.0, format!("impulse {imp:.6e}, circulation {circ:.6e}")),
    );
    let pb = Check::new("pointwise_bound", "|ψ| ≤ C min{r, r^{δ−1}}(‖r³ζ‖₁ + ‖rζ‖₁ + ‖r^{1+2β}ζ^{1+β}‖₁^{1/(1+β)}) with finite C");
    out.push(match sol.problem() {
        Some(p) => {
            let b = pointwise_bound_check(sol, p.beta(), tol.pointwise_delta);
            pb.values(b.c_star, None, None).judge(
                b.c_star.is_finite() && b.c_star > 0.0,
                format!("C* = {:.4e} at ({:.3}, {:.3})", b.c_star, b.argmax.0, b.argmax.1),
            )
        }
        None => pb.skip("power profile only"),
    });
    out
}

fn topology_checks(sol: &StreamSolution, vf: &VelocityField, tol: &Tolerances) -> Vec<Check> {
    let mut out = Vec::new();
    let geo = core_geometry(&sol.shifted);
    out.push(
        Check::new("core_connected", "the core {Ψ > 0} is one 4-connected component")
            .values(geo.components as f64, Some(1.0), None)
            .judge(geo.components == 1, format!("{} components", geo.components)),
    );
    out.push(
        Check::new("core_simply_connected", "the core has no holes")
            .values(geo.holes as f64, Some(0.0), None)
            .judge(geo.holes == 0, format!("{} holes", geo.holes)),
    );
    let off = Check::new("core_off_axis", "the core closure avoids the axis and the outer boundary");
    out.push(match sol.profile {
        Profile::Power { .. } => off.judge(
            !geo.touches_axis && !geo.touches_outer_boundary,
            format!("axis {}, outer {}", geo.touches_axis, geo.touches_outer_boundary),
        ),
        Profile::HicksMoffatt(_) => off.skip("spherical core meets the axis by construction"),
    });

    let nest = Check::new("level_set_nesting", "factor level sets are simple closed nested curves shrinking to the maximiser");
    out.push(match sol.profile.level_of_factor(1.0) {
        Some(_) if sol.k0() > 0.0 => {
            let k0 = sol.k0();
            let mut ks = interior_k_values(k0, tol.topology_levels);
            ks.extend([-0.5 * k0, 1.5 * k0, k0]);
            let rep = factor_level_sets(vf, &ks);
            let shapes_ok = rep.entries.iter().all(|e| match &e.shape {
                LevelSetShape::Curves { count, closed, simple, .. } => *count == 1 && *closed && *simple && e.k > 0.0 && e.k < k0,
                LevelSetShape::Empty => e.k < 0.0 || e.k > k0,
                LevelSetShape::Point { .. } => e.k == k0,
                LevelSetShape::Complement { .. } => e.k == 0.0,
            });
            let pass = shapes_ok && rep.nested == Some(true) && rep.shrinking == Some(true);
            nest.values(k0, None, None).judge(
                pass,
                format!("k₀ = {k0:.6e}, shapes {shapes_ok}, nested {:?}, shrinking {:?}", rep.nested, rep.shrinking),
            )
        }
        _ => match stream_level_nesting(&sol.shifted, tol.topology_levels) {
            Ok(()) => nest.judge(true, "constant factor: stream levels Ψ = l nested".into()),
            Err(e) => nest.judge(false, e),
        },
    });

    let drift = Check::new("hamiltonian_drift", "max |Ψ(y(τ)) − l| per traced orbit ≤ tol·l₀");
    let theta = Check::new("theta_consistency", "Θ(l) from the period integral matches the 3d stream-line trace");
    match Tracer::new(sol) {
        Err(e) => {
            out.push(drift.judge(false, e.to_string()));
            out.push(theta.judge(false, e.to_string()));
        }
        Ok(tr) => {
            let l0 = tr.l0();
            let n = tol.theta_levels;
            let res: Vec<_> = (1..=n)
                .into_par_iter()
                .map(|m| {
                    let l = l0 * m as f64 / (n + 1) as f64;
                    let d = tr.theta_increment(l).map_err(|e| e.to_string())?;
                    let (t3, _) = tr.theta_from_3d(l, d.period).map_err(|e| e.to_string())?;
                    Ok::<_, String>((d.max_drift, (t3 - d.theta_increment).abs()))
                })
                .collect();
            match res.iter().find_map(|r| r.as_ref().err()) {
                Some(e) => {
                    out.push(drift.judge(false, e.clone()));
                    out.push(theta.judge(false, e.clone()));
                }
                None => {
                    let vals: Vec<(f64, f64)> = res.into_iter().map(|r| r.unwrap()).collect();
                    let dmax = vals.iter().map(|v| v.0).fold(0.0, f64::max);
                    let tmax = vals.iter().map(|v| v.1).fold(0.0, f64::max);
                    out.push(drift.at_most(dmax, tol.drift * l0));
                    out.push(theta.at_most(tmax, tol.theta));
                }
            }
        }
    }
    out
}

fn beltrami_checks(vf: &VelocityField, tol: &Tolerances) -> Vec<Check> {
    let mut out = Vec::new();
    let g = vf.u_r.grid;
    let u_max = vf.u_r.max_abs().max(vf.u_z.max_abs()).max(vf.u_theta.max_abs());
    let f_max = vf.f.max_abs();
    let h = g.hz.max(g.hr);
    let rep = beltrami_residual(vf);
    let bound = tol.beltrami_constant * h * h * u_max * (1.0 + f_max);
    let bel = Check::new("beltrami", "∇×u = f u inside the core, away from the free boundary");
    out.push(if vf.profile.is_beltrami() && !vf.profile.is_swirl_free() {
        bel.at_most(rep.interior.max, bound)
    } else {
        bel.skip("Bernoulli function is not constant (not a Beltrami profile)")
    });
    out.push(
        Check::new("exterior_irrotational", "∇×u = 0 outside the core, away from the free boundary")
            .at_most(rep.exterior.max, bound),
    );
    let perp = Check::new("perpendicularity", "ω·u = 0 for swirl-free flow");
    out.push(if vf.profile.is_swirl_free() {
        let all = vec![true; g.len()];
        perp.at_most(perpendicularity_max(vf, &all), tol.perpendicularity * u_max * u_max)
    } else {
        perp.skip("swirling flow")
    });
    out.push(
        Check::new("divergence", "∂_z(r u^z) + ∂_r(r uʳ) = 0").at_most(divergence_max(vf), tol.divergence * u_max.max(1.0)),
    );
    out
}

/// Runs the selected checks on a solution.
pub fn run_suite(sol: &StreamSolution, suite: Suite, tol: &Tolerances) -> VerificationReport {
    let needs_fields = suite.includes(Suite::Topology) || suite.includes(Suite::Beltrami);
    let vf = needs_fields.then(|| reconstruct(sol));
    let mut checks = Vec::new();
    if suite.includes(Suite::Identities) {
        checks.extend(identity_checks(sol, tol));
    }
    if suite.includes(Suite::Bounds) {
        checks.extend(bound_checks(sol, tol));
    }
    if suite.includes(Suite::Topology) {
        checks.extend(topology_checks(sol, vf.as_ref().unwrap(), tol));
    }
    if suite.includes(Suite::Beltrami) {
        checks.extend(beltrami_checks(vf.as_ref().unwrap(), tol));
    }
    let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
    let summary = Summary {
        passed: count(Status::Pass),
        failed: count(Status::Fail),
        skipped: count(Status::Skipped),
    };
    VerificationReport {
        suite,
        tolerances: *tol,
        checks,
        summary,
    }
}

/// Impulse `π∫r³ζ` and circulation `∫rζ` of a solution.
pub fn solution_impulse_circulation(sol: &StreamSolution) -> (f64, f64) {
    impulse_circulation(&sol.zeta())
}
