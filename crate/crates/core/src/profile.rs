//! Profile functions of the Grad-Shafranov equation
//! `−LΨ = −r² Π̇(Ψ) + Γ(Ψ) Γ̇(Ψ)`: the swirl `Γ`, the Bernoulli rate `−Π̇`, and
//! the proportionality factor `f = Γ̇(Ψ)`.

use serde::{Deserialize, Serialize};

use crate::explicit::HicksMoffattParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Profile {
    /// `Γ(t) = (λ/q)^{1/2} t₊^q`, `Π` constant: a Beltrami flow with
    /// factor `f = (λq)^{1/2} t₊^{q−1}` and source `λ t₊^{2q−1}`.
    Power { lambda: f64, q: f64 },
    /// `Γ(t) = λ₂^{1/2} t₊`, `−Π̇(t) = λ₁ 1_{t>0}`.
    HicksMoffatt(HicksMoffattParams),
}

impl Profile {
    /// Swirl `Γ(t)` (circulation over 2π).
    pub fn swirl(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Self::Power { lambda, q } => (lambda / q).sqrt() * t.powf(q),
            Self::HicksMoffatt(p) => p.lambda2.sqrt() * t,
        }
    }

    /// Proportionality factor `f = Γ̇(t)`.
    pub fn factor(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Self::Power { lambda, q } => (lambda * q).sqrt() * t.powf(q - 1.0),
            Self::HicksMoffatt(p) => p.lambda2.sqrt(),
        }
    }

    /// `−Π̇(t)`.
    pub fn bernoulli_rate(&self, t: f64) -> f64 {
        match *self {
            Self::Power { .. } => 0.0,
            Self::HicksMoffatt(p) => {
                if t > 0.0 {
                    p.lambda1
                } else {
                    0.0
                }
            }
        }
    }

    /// Right-hand side `−LΨ` at radius `r` and stream value `t`.
    pub fn source(&self, r: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Self::Power { lambda, q } => lambda * t.powf(2.0 * q - 1.0),
            Self::HicksMoffatt(p) => p.lambda1 * r * r + p.lambda2 * t,
        }
    }

    /// Inverse of the factor on `t > 0`: the stream level where `f = k`.
    /// `None` when `f` is not strictly increasing (Hicks-Moffatt, `q = 1`).
    pub fn level_of_factor(&self, k: f64) -> Option<f64> {
        match *self {
            Self::Power { lambda, q } if q > 1.0 && k > 0.0 => {
                Some((k / (lambda * q).sqrt()).powf(1.0 / (q - 1.0)))
            }
            _ => None,
        }
    }

    /// `true` when `Π` is constant, so `∇×u = f u` holds.
    pub fn is_beltrami(&self) -> bool {
        match *self {
            Self::Power { .. } => true,
            Self::HicksMoffatt(p) => p.lambda1 == 0.0,
        }
    }

    /// `true` when `Γ ≡ 0`.
    pub fn is_swirl_free(&self) -> bool {
        match *self {
            Self::Power { lambda, .. } => lambda == 0.0,
            Self::HicksMoffatt(p) => p.lambda2 == 0.0,
        }
    }

    /// The same profile with `Γ` replaced by `s Γ` (and `−Π̇` unchanged).
    pub fn with_swirl_scaled(&self, s: f64) -> Self {
        match *self {
            Self::Power { lambda, q } => Self::Power {
                lambda: lambda * s * s,
                q,
            },
            Self::HicksMoffatt(mut p) => {
                p.lambda2 *= s * s;
                Self::HicksMoffatt(p)
            }
        }
    }
}
