//! Velocity, vorticity and proportionality factor reconstructed from a stream
//! solution, the Beltrami residual `∇×u − f u`, and the level-set topology of
//! the factor.
//!
//! `u = ∇×(Ψ∇θ) + Γ∇θ`: `uʳ = −∂_zΨ/r`, `u^z = ∂_rΨ/r`, `uᶿ = Γ(Ψ)/r`.
//! Two vorticities are kept: the closed forms `ωʳ = Γ̇uʳ`,
//! `ωᶿ = Γ̇uᶿ − rΠ̇`, `ω^z = Γ̇u^z`, and the curl of the lattice velocity,
//! `(∇×u)_r = −∂_z uᶿ`, `(∇×u)_θ = ∂_z uʳ − ∂_r u^z`,
//! `(∇×u)_z = r⁻¹∂_r(r uᶿ)`, both by centred differences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{marching_squares, Polyline};
use crate::grid::{AxiGrid, GridField};
use crate::profile::Profile;
use crate::variational::StreamSolution;

#[derive(Debug, Clone)]
pub struct VelocityField {
    pub u_r: GridField,
    pub u_theta: GridField,
    pub u_z: GridField,
    /// Closed-form vorticity from the profile functions.
    pub omega_r: GridField,
    pub omega_theta: GridField,
    pub omega_z: GridField,
    /// Curl of the lattice velocity.
    pub curl_r: GridField,
    pub curl_theta: GridField,
    pub curl_z: GridField,
    /// `f = Γ̇(Ψ)`.
    pub f: GridField,
    /// `Γ(Ψ)`.
    pub gamma: GridField,
    pub profile: Profile,
    /// `Ψ`, kept for region masks.
    pub shifted: GridField,
}

/// Centred first derivative in `z`, one-sided second order at the ends.
fn d_z(f: &GridField) -> GridField {
    let g = f.grid;
    let mut out = GridField::zeros(g);
    let inv = 1.0 / g.hz;
    out.values.par_chunks_mut(g.nz).enumerate().for_each(|(j, row)| {
        let v = &f.values[j * g.nz..(j + 1) * g.nz];
        let n = g.nz;
        for i in 1..n - 1 {
            row[i] = 0.5 * (v[i + 1] - v[i - 1]) * inv;
        }
        row[0] = (-1.5 * v[0] + 2.0 * v[1] - 0.5 * v[2]) * inv;
        row[n - 1] = (1.5 * v[n - 1] - 2.0 * v[n - 2] + 0.5 * v[n - 3]) * inv;
    });
    out
}

/// Centred first derivative in `r`, one-sided second order at the ends.
fn d_r(f: &GridField) -> GridField {
    let g = f.grid;
    let mut out = GridField::zeros(g);
    let inv = 1.0 / g.hr;
    let nz = g.nz;
    let v = &f.values;
    out.values.par_chunks_mut(nz).enumerate().for_each(|(j, row)| {
        for (i, o) in row.iter_mut().enumerate() {
            let at = |jj: usize| v[jj * nz + i];
            *o = if j == 0 {
                (-1.5 * at(0) + 2.0 * at(1) - 0.5 * at(2)) * inv
            } else if j + 1 == g.nr {
                (1.5 * at(j) - 2.0 * at(j - 1) + 0.5 * at(j - 2)) * inv
            } else {
                0.5 * (at(j + 1) - at(j - 1)) * inv
            };
        }
    });
    out
}

/// Builds the velocity, both vorticities, `f` and `Γ` from `Ψ`.
pub fn reconstruct(sol: &StreamSolution) -> VelocityField {
    let g = sol.grid();
    let psi = &sol.shifted;
    let profile = sol.profile;
    let pz = d_z(psi);
    let pr = d_r(psi);
    let mut u_r = GridField::zeros(g);
    let mut u_z = GridField::zeros(g);
    let mut u_theta = GridField::zeros(g);
    let mut f = GridField::zeros(g);
    let mut gamma = GridField::zeros(g);
    for j in 0..g.nr {
        let r = g.r(j);
        for i in 0..g.nz {
            let k = g.idx(i, j);
            let t = psi.values[k];
            f.values[k] = profile.factor(t);
            gamma.values[k] = profile.swirl(t);
            if j == 0 {
                // limit of the centred ∂_rΨ/r for even Ψ = Ψ₀ + a r² + b r⁴, carrying the
                // same 4bh² truncation term as the off-axis nodes so r-differences stay smooth
                let d1 = psi.at(i, 1) - t;
                let d2 = psi.at(i, 2) - t;
                u_z.values[k] = (8.0 * d1 + d2) / (6.0 * g.hr * g.hr);
            } else {
                u_r.values[k] = -pz.values[k] / r;
                u_z.values[k] = pr.values[k] / r;
                u_theta.values[k] = gamma.values[k] / r;
            }
        }
    }
    let mut omega_r = GridField::zeros(g);
    let mut omega_theta = GridField::zeros(g);
    let mut omega_z = GridField::zeros(g);
    for j in 0..g.nr {
        let r = g.r(j);
        for i in 0..g.nz {
            let k = g.idx(i, j);
            let fk = f.values[k];
            omega_r.values[k] = fk * u_r.values[k];
            omega_z.values[k] = fk * u_z.values[k];
            omega_theta.values[k] = fk * u_theta.values[k] + r * profile.bernoulli_rate(psi.values[k]);
        }
    }
    let curl_r = d_z(&u_theta).scaled(-1.0);
    let curl_theta = d_z(&u_r).combine(1.0, &d_r(&u_z), -1.0).expect("same grid");
    let r_ut = GridField::sample(g, |_, r| r).combine_mul(&u_theta);
    let d = d_r(&r_ut);
    let mut curl_z = GridField::zeros(g);
    for j in 0..g.nr {
        let r = g.r(j);
        for i in 0..g.nz {
            let k = g.idx(i, j);
            curl_z.values[k] = if j == 0 {
                // (1/r)∂_r(r uᶿ) → 2∂_r uᶿ on the axis; uᶿ vanishes there
                2.0 * u_theta.at(i, 1) / g.hr
            } else {
                d.values[k] / r
            };
        }
    }
    VelocityField {
        u_r,
        u_theta,
        u_z,
        omega_r,
        omega_theta,
        omega_z,
        curl_r,
        curl_theta,
        curl_z,
        f,
        gamma,
        profile,
        shifted: psi.clone(),
    }
}

/// Nodes at least `margin` lattice steps away from the domain boundary
/// (the axis included) and from every sign change of `Ψ`.
pub fn clean_mask(vf: &VelocityField, margin: usize) -> (Vec<bool>, Vec<bool>) {
    let g = vf.shifted.grid;
    let mut inside = vec![false; g.len()];
    let mut outside = vec![false; g.len()];
    let m = margin as isize;
    for j in margin..g.nr.saturating_sub(margin) {
        for i in margin..g.nz.saturating_sub(margin) {
            let pos = vf.shifted.at(i, j) > 0.0;
            let mut uniform = true;
            'scan: for dj in -m..=m {
                for di in -m..=m {
                    let (ii, jj) = ((i as isize + di) as usize, (j as isize + dj) as usize);
                    if (vf.shifted.at(ii, jj) > 0.0) != pos {
                        uniform = false;
                        break 'scan;
                    }
                }
            }
            if uniform {
                let k = g.idx(i, j);
                if pos {
                    inside[k] = true;
                } else {
                    outside[k] = true;
                }
            }
        }
    }
    (inside, outside)
}

/// Norms of `∇×u − f u` on a node set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualNorms {
    pub max: f64,
    /// Root mean square over the node set.
    pub rms: f64,
    pub nodes: usize,
}

fn residual_norms(vf: &VelocityField, mask: &[bool]) -> ResidualNorms {
    let mut max: f64 = 0.0;
    let mut sum = 0.0;
    let mut n = 0;
    for k in (0..mask.len()).filter(|&k| mask[k]) {
        let f = vf.f.values[k];
        let a = vf.curl_r.values[k] - f * vf.u_r.values[k];
        let b = vf.curl_theta.values[k] - f * vf.u_theta.values[k];
        let c = vf.curl_z.values[k] - f * vf.u_z.values[k];
        let e2 = a * a + b * b + c * c;
        max = max.max(e2.sqrt());
        sum += e2;
        n += 1;
    }
    ResidualNorms {
        max,
        rms: if n > 0 { (sum / n as f64).sqrt() } else { 0.0 },
        nodes: n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeltramiReport {
    /// Core nodes two cells inside `∂Ω` (and away from the domain edges).
    pub interior: ResidualNorms,
    /// Exterior nodes two cells outside `∂Ω`, where `f = 0` and the check is `∇×u = 0`.
    pub exterior: ResidualNorms,
    pub h: f64,
}

/// `∇×u − f u` measured away from the free boundary, whose stencils straddle
/// the jump in derivatives of `Ψ₊`.
pub fn beltrami_residual(vf: &VelocityField) -> BeltramiReport {
    let (inside, outside) = clean_mask(vf, 2);
    let g = vf.u_r.grid;
    BeltramiReport {
        interior: residual_norms(vf, &inside),
        exterior: residual_norms(vf, &outside),
        h: g.hz.max(g.hr),
    }
}

/// `∇×u − f u` on an explicit node set.
pub fn beltrami_residual_on(vf: &VelocityField, mask: &[bool]) -> ResidualNorms {
    residual_norms(vf, mask)
}

/// Max over interior nodes of `|∂_z(r u^z) + ∂_r(r uʳ)|`.
pub fn divergence_max(vf: &VelocityField) -> f64 {
    let g = vf.u_r.grid;
    let rr = GridField::sample(g, |_, r| r);
    let a = d_z(&rr.combine_mul(&vf.u_z));
    let b = d_r(&rr.combine_mul(&vf.u_r));
    let mut m: f64 = 0.0;
    for j in 1..g.nr - 1 {
        for i in 1..g.nz - 1 {
            m = m.max((a.at(i, j) + b.at(i, j)).abs());
        }
    }
    m
}

/// Max over a mask of `|ω·u|` using the lattice curl.
pub fn perpendicularity_max(vf: &VelocityField, mask: &[bool]) -> f64 {
    (0..mask.len())
        .filter(|k| mask[*k])
        .map(|k| {
            (vf.curl_r.values[k] * vf.u_r.values[k]
                + vf.curl_theta.values[k] * vf.u_theta.values[k]
                + vf.curl_z.values[k] * vf.u_z.values[k])
                .abs()
        })
        .fold(0.0, f64::max)
}

/// Max over a mask of the gap between the lattice curl and the closed-form vorticity.
pub fn vorticity_gap_max(vf: &VelocityField, mask: &[bool]) -> f64 {
    (0..mask.len())
        .filter(|k| mask[*k])
        .map(|k| {
            let a = vf.curl_r.values[k] - vf.omega_r.values[k];
            let b = vf.curl_theta.values[k] - vf.omega_theta.values[k];
            let c = vf.curl_z.values[k] - vf.omega_z.values[k];
            (a * a + b * b + c * c).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Cross-section of `f⁻¹(k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevelSetShape {
    Empty,
    /// `k = 0`: the region `{Ψ ≤ 0}`, reported by node count.
    Complement { nodes: usize },
    /// `k = k₀`: the maximiser, refined by a quadratic fit.
    Point { z: f64, r: f64 },
    Curves {
        count: usize,
        closed: bool,
        simple: bool,
        /// Area enclosed by the largest curve.
        area: f64,
        /// Largest distance from a contour vertex to the maximiser.
        radius_about_max: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetEntry {
    pub k: f64,
    /// Stream level `l = (k/√(λq))^{1/(q−1)}` (absent when `f⁻¹(k)` is not a level of `Ψ`).
    pub level: Option<f64>,
    pub shape: LevelSetShape,
    #[serde(skip)]
    pub contours: Vec<Polyline>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub k0: f64,
    pub l0: f64,
    pub argmax: (f64, f64),
    pub entries: Vec<LevelSetEntry>,
    /// Curves for increasing `k ∈ (0, k₀)` are strictly nested (`None` with fewer than two).
    pub nested: Option<bool>,
    /// The distance from the curves to the maximiser decreases with `k`.
    pub shrinking: Option<bool>,
}

/// Maximiser of `Ψ` refined by a separable quadratic fit on the 3×3 neighbourhood.
pub fn refined_argmax(shifted: &GridField) -> (f64, f64) {
    let g = shifted.grid;
    let mut best = (0, 0);
    let mut bv = f64::NEG_INFINITY;
    for j in 0..g.nr {
        for i in 0..g.nz {
            if shifted.at(i, j) > bv {
                bv = shifted.at(i, j);
                best = (i, j);
            }
        }
    }
    let (i, j) = best;
    let mut z = g.z(i);
    let mut r = g.r(j);
    if i > 0 && i + 1 < g.nz {
        let (a, b, c) = (shifted.at(i - 1, j), shifted.at(i, j), shifted.at(i + 1, j));
        let den = a - 2.0 * b + c;
        if den < 0.0 {
            z += 0.5 * g.hz * (a - c) / den;
        }
    }
    if j > 0 && j + 1 < g.nr {
        let (a, b, c) = (shifted.at(i, j - 1), shifted.at(i, j), shifted.at(i, j + 1));
        let den = a - 2.0 * b + c;
        if den < 0.0 {
            r += 0.5 * g.hr * (a - c) / den;
        }
    }
    (z, r)
}

/// Extracts the cross-sections of `f⁻¹(k)` and checks their nesting.
pub fn factor_level_sets(vf: &VelocityField, k_values: &[f64]) -> TopologyReport {
    let l0 = vf.shifted.max().max(0.0);
    let k0 = vf.profile.factor(l0);
    let argmax = refined_argmax(&vf.shifted);
    let tol = 1e-12 * k0.max(1e-300);
    let entries: Vec<LevelSetEntry> = k_values
        .par_iter()
        .map(|&k| {
            let (level, shape, contours) = if k == 0.0 {
                let n = vf.shifted.values.iter().filter(|v| **v <= 0.0).count();
                (None, LevelSetShape::Complement { nodes: n }, Vec::new())
            } else if k < 0.0 || k > k0 + tol {
                (None, LevelSetShape::Empty, Vec::new())
            } else if (k - k0).abs() <= tol {
                (Some(l0), LevelSetShape::Point { z: argmax.0, r: argmax.1 }, Vec::new())
            } else {
                match vf.profile.level_of_factor(k) {
                    None => (None, LevelSetShape::Empty, Vec::new()),
                    Some(l) => {
                        let cs = marching_squares(&vf.shifted, l);
                        let shape = if cs.is_empty() {
                            LevelSetShape::Empty
                        } else {
                            let largest = cs
                                .iter()
                                .max_by(|a, b| a.area().partial_cmp(&b.area()).unwrap())
                                .unwrap();
                            LevelSetShape::Curves {
                                count: cs.len(),
                                closed: cs.iter().all(|c| c.closed),
                                simple: cs.iter().all(|c| c.is_simple()),
                                area: largest.area(),
                                radius_about_max: cs
                                    .iter()
                                    .map(|c| c.max_distance_to(argmax))
                                    .fold(0.0, f64::max),
                            }
                        };
                        (Some(l), shape, cs)
                    }
                }
            };
            LevelSetEntry {
                k,
                level,
                shape,
                contours,
            }
        })
        .collect();

    let mut curves: Vec<&LevelSetEntry> = entries
        .iter()
        .filter(|e| matches!(e.shape, LevelSetShape::Curves { .. }))
        .collect();
    curves.sort_by(|a, b| a.k.partial_cmp(&b.k).unwrap());
    let (nested, shrinking) = if curves.len() < 2 {
        (None, None)
    } else {
        let nested = curves.windows(2).all(|w| {
            w[0].contours.len() == 1
                && w[1].contours.len() == 1
                && w[0].contours[0].strictly_contains(&w[1].contours[0])
        });
        let radius = |e: &LevelSetEntry| match e.shape {
            LevelSetShape::Curves { radius_about_max, .. } => radius_about_max,
            _ => 0.0,
        };
        let shrinking = curves.windows(2).all(|w| radius(w[1]) < radius(w[0]));
        (Some(nested), Some(shrinking))
    };
    TopologyReport {
        k0,
        l0,
        argmax,
        entries,
        nested,
        shrinking,
    }
}

/// `k` values `k₀ (m / (n + 1))` for `m = 1..=n`, evenly spaced in `(0, k₀)`.
pub fn interior_k_values(k0: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|m| k0 * m as f64 / (n + 1) as f64).collect()
}

/// Lattice used by the reconstructions (convenience for callers holding only fields).
pub fn grid_of(vf: &VelocityField) -> AxiGrid {
    vf.u_r.grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explicit::HicksMoffattParams;

    fn chandra(n: usize) -> VelocityField {
        let p = HicksMoffattParams::chandrasekhar(1.0, 1.0).unwrap();
        let ext = 1.5 * p.a;
        let g = AxiGrid::new(ext, ext, 2 * n + 1, n + 1).unwrap();
        reconstruct(&StreamSolution::from_explicit(&p, g))
    }

    fn ball_mask(vf: &VelocityField, a: f64, band: f64) -> Vec<bool> {
        let g = grid_of(vf);
        let mut m = vec![false; g.len()];
        for j in 1..g.nr - 1 {
            for i in 1..g.nz - 1 {
                let s = (g.z(i).powi(2) + g.r(j).powi(2)).sqrt();
                m[g.idx(i, j)] = s < a - band;
            }
        }
        m
    }

    #[test]
    fn chandrasekhar_is_beltrami_to_second_order() {
        let a = HicksMoffattParams::chandrasekhar(1.0, 1.0).unwrap().a;
        let mut errs = Vec::new();
        for n in [64, 128] {
            let vf = chandra(n);
            let h = grid_of(&vf).hz;
            errs.push(beltrami_residual_on(&vf, &ball_mask(&vf, a, 2.0 * h)).max);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order >= 1.8, "{errs:?} order {order}");
    }

    #[test]
    fn exterior_is_irrotational_and_divergence_free() {
        let vf = chandra(128);
        let rep = beltrami_residual(&vf);
        assert!(rep.exterior.nodes > 0);
        let scale = vf.u_z.max_abs();
        assert!(rep.exterior.max < 1e-2 * scale, "{rep:?}");
        assert!(divergence_max(&vf) < 1e-10 * scale);
        // Ψ ≤ 0 region has no swirl and no factor
        for k in 0..vf.f.values.len() {
            if vf.shifted.values[k] <= 0.0 {
                assert_eq!(vf.u_theta.values[k], 0.0);
                assert_eq!(vf.f.values[k], 0.0);
            }
        }
    }

    #[test]
    fn hill_is_perpendicular_and_swirl_free() {
        let p = HicksMoffattParams::hill(1.0, 1.0).unwrap();
        let g = AxiGrid::new(2.0 * p.a, 2.0 * p.a, 129, 65).unwrap();
        let vf = reconstruct(&StreamSolution::from_explicit(&p, g));
        assert_eq!(vf.u_theta.max_abs(), 0.0);
        let all = vec![true; g.len()];
        assert!(perpendicularity_max(&vf, &all) < 1e-12);
        // interior azimuthal vorticity is λ₁ r
        let (inside, _) = clean_mask(&vf, 2);
        assert!(vorticity_gap_max(&vf, &inside) < 1e-9 * p.lambda1 * p.a);
    }

    #[test]
    fn far_field_tends_to_uniform_stream() {
        let p = HicksMoffattParams::chandrasekhar(1.0, 1.0).unwrap();
        let g = AxiGrid::new(10.0 * p.a, 10.0 * p.a, 201, 101).unwrap();
        let vf = reconstruct(&StreamSolution::from_explicit(&p, g));
        let (i, j) = (200, 100);
        assert!(vf.u_r.at(i, j).abs() < 2e-3 * p.w);
        assert!((vf.u_z.at(i, j) + p.w).abs() < 2e-3 * p.w);
        assert_eq!(vf.u_theta.at(i, j), 0.0);
    }

    #[test]
    fn power_profile_topology() {
        // smooth bump with a single maximum, Ψ = bump − obstacle
        let g = AxiGrid::new(3.0, 3.0, 121, 61).unwrap();
        let psi = GridField::sample(g, |z, r| 4.0 * r * r * (-(z * z + (r - 1.2).powi(2)) / 0.5).exp());
        let sol = StreamSolution::from_psi(psi, Profile::Power { lambda: 1.0, q: 2.0 }, 2.0, 0.1);
        let vf = reconstruct(&sol);
        let k0 = sol.k0();
        let mut ks = interior_k_values(k0, 10);
        ks.extend([-1.0, 1.5 * k0, k0, 0.0]);
        let rep = factor_level_sets(&vf, &ks);
        assert_eq!(rep.nested, Some(true));
        assert_eq!(rep.shrinking, Some(true));
        for e in &rep.entries {
            match e.shape {
                LevelSetShape::Curves { count, closed, simple, .. } => {
                    assert!(e.k > 0.0 && e.k < k0);
                    assert!(count == 1 && closed && simple);
                }
                LevelSetShape::Empty => assert!(e.k < 0.0 || e.k > k0),
                LevelSetShape::Point { .. } => assert_eq!(e.k, k0),
                LevelSetShape::Complement { .. } => assert_eq!(e.k, 0.0),
            }
        }
    }
}
