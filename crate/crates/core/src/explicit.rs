//! Closed-form Hicks-Moffatt vortices and their three limits (Hill,
//! Chandrasekhar, Prendergast).
//!
//! Every member solves `−LΨ = λ₁ r² 1_{Ψ>0} + λ₂ Ψ₊` with the uniform stream
//! `Ψ → −(W/2) r²` at infinity. In spherical radius `σ = √(z² + r²)` the field
//! has the form `Ψ = r² g(σ)`; inside the ball `σ < a` the profile is a
//! spherical Bessel function, outside it is the potential flow past a sphere.
//!
//! Sign convention: the generic interior is
//! `Ψ = −(3/2) W r² (B(κ) − C(κ) J_{3/2}(s)/s^{3/2})`, `s = √λ₂ σ`, exactly as
//! the formula is usually printed. With this sign `Ψ > 0` throughout the open
//! ball for every admissible `(λ₁, λ₂, W)` (checked in the tests), so the core
//! `{Ψ > 0}` is the ball itself and no sign flip is needed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{apply_l, AxiGrid, GridField};
use crate::specfun::{
    bessel_j_half, bessel_j_half_scaled, bessel_zero, find_kappa, shape_b, shape_c, BesselOrder,
    SpecfunError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExplicitError {
    #[error("inconsistent parameters for {kind:?}: {reason}")]
    Inconsistent { kind: ExplicitKind, reason: String },
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplicitKind {
    Generic,
    Hill,
    Chandrasekhar,
    Prendergast,
}

impl ExplicitKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "generic" => Some(Self::Generic),
            "hill" => Some(Self::Hill),
            "chandrasekhar" => Some(Self::Chandrasekhar),
            "prendergast" => Some(Self::Prendergast),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Generic => "generic",
            Self::Hill => "hill",
            Self::Chandrasekhar => "chandrasekhar",
            Self::Prendergast => "prendergast",
        }
    }
}

/// Parameters of one member of the family together with its derived radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HicksMoffattParams {
    pub kind: ExplicitKind,
    /// Bernoulli strength.
    pub lambda1: f64,
    /// Swirl strength (units 1/length²).
    pub lambda2: f64,
    /// Ring speed.
    pub w: f64,
    /// Bessel argument at the matching sphere, `κ = a √λ₂` (0 for Hill).
    pub kappa: f64,
    /// Radius of the matching sphere.
    pub a: f64,
}

fn inconsistent(kind: ExplicitKind, reason: &str) -> ExplicitError {
    ExplicitError::Inconsistent {
        kind,
        reason: reason.to_string(),
    }
}

impl HicksMoffattParams {
    /// All three parameters nonzero: `κ` from `λ₁ = (3/2) W B(κ) λ₂`.
    pub fn generic(lambda1: f64, lambda2: f64, w: f64) -> Result<Self, ExplicitError> {
        let kind = ExplicitKind::Generic;
        if !(lambda2 > 0.0) || !(w > 0.0) || lambda1 == 0.0 || !lambda1.is_finite() {
            return Err(inconsistent(kind, "needs lambda1 != 0, lambda2 > 0, W > 0"));
        }
        let kappa = find_kappa(lambda1, lambda2, w)?;
        Ok(Self {
            kind,
            lambda1,
            lambda2,
            w,
            kappa,
            a: kappa / lambda2.sqrt(),
        })
    }

    /// No swirl (`λ₂ = 0`): `a = √(15W / (2λ₁))`.
    pub fn hill(lambda1: f64, w: f64) -> Result<Self, ExplicitError> {
        let kind = ExplicitKind::Hill;
        if !(lambda1 > 0.0) || !(w > 0.0) {
            return Err(inconsistent(kind, "needs lambda1 > 0, W > 0, lambda2 = 0"));
        }
        Ok(Self {
            kind,
            lambda1,
            lambda2: 0.0,
            w,
            kappa: 0.0,
            a: (15.0 * w / (2.0 * lambda1)).sqrt(),
        })
    }

    /// Constant Bernoulli function (`λ₁ = 0`): `κ = c_{3/2}`.
    pub fn chandrasekhar(lambda2: f64, w: f64) -> Result<Self, ExplicitError> {
        let kind = ExplicitKind::Chandrasekhar;
        if !(lambda2 > 0.0) || !(w > 0.0) {
            return Err(inconsistent(kind, "needs lambda2 > 0, W > 0, lambda1 = 0"));
        }
        let kappa = bessel_zero(BesselOrder::ThreeHalves);
        Ok(Self {
            kind,
            lambda1: 0.0,
            lambda2,
            w,
            kappa,
            a: kappa / lambda2.sqrt(),
        })
    }

    /// Stationary ring (`W = 0`): `κ = c_{5/2}`; positivity of the core needs `λ₁ < 0`.
    pub fn prendergast(lambda1: f64, lambda2: f64) -> Result<Self, ExplicitError> {
        let kind = ExplicitKind::Prendergast;
        if !(lambda2 > 0.0) || !(lambda1 < 0.0) {
            return Err(inconsistent(kind, "needs lambda1 < 0, lambda2 > 0, W = 0"));
        }
        let kappa = bessel_zero(BesselOrder::FiveHalves);
        Ok(Self {
            kind,
            lambda1,
            lambda2,
            w: 0.0,
            kappa,
            a: kappa / lambda2.sqrt(),
        })
    }

    /// Builds the requested kind, rejecting parameters that belong to another branch.
    pub fn new(kind: ExplicitKind, lambda1: f64, lambda2: f64, w: f64) -> Result<Self, ExplicitError> {
        match kind {
            ExplicitKind::Generic => Self::generic(lambda1, lambda2, w),
            ExplicitKind::Hill => {
                if lambda2 != 0.0 {
                    return Err(inconsistent(kind, "lambda2 must be 0"));
                }
                Self::hill(lambda1, w)
            }
            ExplicitKind::Chandrasekhar => {
                if lambda1 != 0.0 {
                    return Err(inconsistent(kind, "lambda1 must be 0"));
                }
                Self::chandrasekhar(lambda2, w)
            }
            ExplicitKind::Prendergast => {
                if w != 0.0 {
                    return Err(inconsistent(kind, "W must be 0"));
                }
                Self::prendergast(lambda1, lambda2)
            }
        }
    }

    /// Branch implied by which parameter vanishes.
    pub fn from_triple(lambda1: f64, lambda2: f64, w: f64) -> Result<Self, ExplicitError> {
        let kind = match (lambda1 == 0.0, lambda2 == 0.0, w == 0.0) {
            (false, false, false) => ExplicitKind::Generic,
            (false, true, false) => ExplicitKind::Hill,
            (true, false, false) => ExplicitKind::Chandrasekhar,
            (false, false, true) => ExplicitKind::Prendergast,
            _ => {
                return Err(inconsistent(
                    ExplicitKind::Generic,
                    "at most one of lambda1, lambda2, W may vanish",
                ))
            }
        };
        Self::new(kind, lambda1, lambda2, w)
    }

    /// `g(σ) = Ψ / r²`, continuous across `σ = a`.
    pub fn profile(&self, sigma: f64) -> f64 {
        let (a, w) = (self.a, self.w);
        if sigma >= a {
            // potential flow past the sphere; identically zero when W = 0
            return -0.5 * w * (1.0 - (a / sigma).powi(3));
        }
        match self.kind {
            ExplicitKind::Hill => 0.75 * w * (1.0 - sigma * sigma / (a * a)),
            ExplicitKind::Generic => {
                let s = self.lambda2.sqrt() * sigma;
                let h = bessel_j_half_scaled(BesselOrder::ThreeHalves, s);
                -1.5 * w * (shape_b(self.kappa) - shape_c(self.kappa) * h)
            }
            ExplicitKind::Chandrasekhar => {
                let s = self.lambda2.sqrt() * sigma;
                let h = bessel_j_half_scaled(BesselOrder::ThreeHalves, s);
                1.5 * w * shape_c(self.kappa) * h
            }
            ExplicitKind::Prendergast => {
                let s = self.lambda2.sqrt() * sigma;
                let h = bessel_j_half_scaled(BesselOrder::ThreeHalves, s);
                let c52 = self.kappa;
                let j32 = bessel_j_half(BesselOrder::ThreeHalves, c52).expect("positive zero");
                -(self.lambda1 / self.lambda2) * (1.0 - c52.powf(1.5) / j32 * h)
            }
        }
    }

    /// `Ψ(z, r)`.
    pub fn psi(&self, z: f64, r: f64) -> f64 {
        let sigma = (z * z + r * r).sqrt();
        r * r * self.profile(sigma)
    }

    /// Right-hand side `λ₁ r² 1_{Ψ>0} + λ₂ Ψ₊` of the elliptic equation.
    pub fn source(&self, r: f64, psi: f64) -> f64 {
        if psi > 0.0 {
            self.lambda1 * r * r + self.lambda2 * psi
        } else {
            0.0
        }
    }
}

/// Convenience wrapper evaluating `Ψ` for a parameter set.
pub fn explicit_psi(p: &HicksMoffattParams, z: f64, r: f64) -> f64 {
    p.psi(z, r)
}

/// Samples `Ψ` on every node of `grid`.
pub fn sample_psi(p: &HicksMoffattParams, grid: AxiGrid) -> GridField {
    GridField::sample(grid, |z, r| p.psi(z, r))
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// `−L_h Ψ − source` at evaluated nodes, zero elsewhere.
    pub field: GridField,
    /// Nodes that were evaluated (interior and outside the band around `σ = a`).
    pub evaluated: Vec<bool>,
    pub max_abs: f64,
    /// `max_abs` divided by the largest evaluated |source|.
    pub max_rel: f64,
    pub band: f64,
}

/// Pointwise residual of `−LΨ = λ₁r²1_{Ψ>0} + λ₂Ψ₊` with the lattice stencil.
///
/// Nodes within `2h` of the matching sphere are skipped: second derivatives
/// of `Ψ` jump there and the stencil cannot be consistent across it.
pub fn explicit_residual(p: &HicksMoffattParams, grid: AxiGrid) -> ResidualReport {
    let psi = sample_psi(p, grid);
    let lpsi = apply_l(&psi);
    let band = 2.0 * grid.hz.max(grid.hr);
    let mut field = GridField::zeros(grid);
    let mut evaluated = vec![false; grid.len()];
    let mut max_abs: f64 = 0.0;
    let mut max_src: f64 = 0.0;
    for j in 1..grid.nr - 1 {
        let r = grid.r(j);
        for i in 1..grid.nz - 1 {
            let z = grid.z(i);
            let sigma = (z * z + r * r).sqrt();
            if (sigma - p.a).abs() <= band {
                continue;
            }
            let k = grid.idx(i, j);
            let src = p.source(r, psi.values[k]);
            let res = -lpsi.values[k] - src;
            field.values[k] = res;
            evaluated[k] = true;
            max_abs = max_abs.max(res.abs());
            max_src = max_src.max(src.abs());
        }
    }
    ResidualReport {
        field,
        evaluated,
        max_abs,
        max_rel: if max_src > 0.0 { max_abs / max_src } else { max_abs },
        band,
    }
}

/// Cross-section of the level set `f⁻¹(k)` of the factor `f = λ₂^{1/2} 1_{Ψ>0}`.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorLevelSet {
    /// `k = λ₂^{1/2}`: the core `{Ψ > 0}`.
    Core(Vec<bool>),
    /// `k = 0`: the complement `{Ψ ≤ 0}`.
    Complement(Vec<bool>),
    Empty,
}

impl FactorLevelSet {
    pub fn count(&self) -> usize {
        match self {
            Self::Core(m) | Self::Complement(m) => m.iter().filter(|b| **b).count(),
            Self::Empty => 0,
        }
    }
}

/// Classifies `f⁻¹(k)` on the lattice. Exact comparison with `λ₂^{1/2}` is
/// relaxed to a relative tolerance of 1e-12.
pub fn classify_factor_level_sets(p: &HicksMoffattParams, k: f64, grid: AxiGrid) -> FactorLevelSet {
    let top = p.lambda2.sqrt();
    let psi = sample_psi(p, grid);
    if k == 0.0 {
        return FactorLevelSet::Complement(psi.values.iter().map(|v| *v <= 0.0).collect());
    }
    if top > 0.0 && (k - top).abs() <= 1e-12 * top {
        return FactorLevelSet::Core(psi.values.iter().map(|v| *v > 0.0).collect());
    }
    FactorLevelSet::Empty
}
