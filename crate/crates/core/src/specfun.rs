//! Half-integer Bessel functions, their first zeros, the Hicks-Moffatt
//! shape constants `B(κ)`, `C(κ)` and the complete elliptic integrals used
//! by the toroidal Green kernel.
//!
//! Only the orders 3/2 and 5/2 ever appear, so the spherical closed forms
//! are the primary evaluation path. Below `x = 0.5` the closed forms lose
//! digits to cancellation in `sin x / x - cos x` and the ascending series
//! is used instead.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use thiserror::Error;

/// Crossover below which the ascending series replaces the closed form.
const SERIES_THRESHOLD: f64 = 0.5;
/// Absolute bracket width at which the scalar bisections stop.
const BISECT_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecfunError {
    #[error("bessel argument must be positive, got {0}")]
    Domain(f64),
    #[error("B(kappa) = {target} is outside the attainable range of B on (0, c_5/2)")]
    Unattainable { target: f64 },
    #[error("invalid Hicks-Moffatt parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselOrder {
    ThreeHalves,
    FiveHalves,
}

impl BesselOrder {
    pub fn nu(self) -> f64 {
        match self {
            BesselOrder::ThreeHalves => 1.5,
            BesselOrder::FiveHalves => 2.5,
        }
    }

    /// Γ(ν + 1).
    fn gamma_nu_plus_one(self) -> f64 {
        let sqrt_pi = PI.sqrt();
        match self {
            BesselOrder::ThreeHalves => 0.75 * sqrt_pi,
            BesselOrder::FiveHalves => 1.875 * sqrt_pi,
        }
    }
}

/// `J_ν(x) / x^ν` from the ascending series; valid (and accurate) for small `x >= 0`.
fn scaled_series(order: BesselOrder, x: f64) -> f64 {
    let nu = order.nu();
    let q = -0.25 * x * x;
    let mut term = 1.0 / (2f64.powf(nu) * order.gamma_nu_plus_one());
    let mut sum = term;
    for k in 0..60 {
        let kf = k as f64;
        term *= q / ((kf + 1.0) * (kf + nu + 1.0));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `J_ν(x) / x^ν` for `x >= 0`, continuous through `x = 0`.
///
/// The Hicks-Moffatt interior profile is written in terms of
/// `J_{3/2}(s) / s^{3/2}`; this form avoids the removable 0/0 at the centre
/// of the vortex.
pub fn bessel_j_half_scaled(order: BesselOrder, x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_THRESHOLD {
        return scaled_series(order, x);
    }
    let (s, c) = x.sin_cos();
    let norm = (2.0 / PI).sqrt();
    match order {
        BesselOrder::ThreeHalves => norm * (s / x - c) / (x * x),
        BesselOrder::FiveHalves => {
            norm * ((3.0 / (x * x) - 1.0) * s - 3.0 * c / x) / (x * x * x)
        }
    }
}

/// Bessel function of the first kind of order 3/2 or 5/2.
pub fn bessel_j_half(order: BesselOrder, x: f64) -> Result<f64, SpecfunError> {
    if !(x > 0.0) {
        return Err(SpecfunError::Domain(x));
    }
    if x < SERIES_THRESHOLD {
        return Ok(scaled_series(order, x) * x.powf(order.nu()));
    }
    let (s, c) = x.sin_cos();
    let pref = (2.0 / (PI * x)).sqrt();
    Ok(match order {
        BesselOrder::ThreeHalves => pref * (s / x - c),
        BesselOrder::FiveHalves => pref * ((3.0 / (x * x) - 1.0) * s - 3.0 * c / x),
    })
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First positive zero of `J_ν`, by bisection on a hard-coded bracket.
pub fn bessel_zero(order: BesselOrder) -> f64 {
    static C32: OnceLock<f64> = OnceLock::new();
    static C52: OnceLock<f64> = OnceLock::new();
    let (cell, lo, hi) = match order {
        BesselOrder::ThreeHalves => (&C32, 4.0, 5.0),
        BesselOrder::FiveHalves => (&C52, 5.5, 6.0),
    };
    *cell.get_or_init(|| {
        // closed forms are exact in this range
        bisect(|x| bessel_j_half(order, x).unwrap(), lo, hi, 1e-14)
    })
}

/// `B(κ) = J_{3/2}(κ) / (κ J_{5/2}(κ))`, strictly decreasing from +∞ to −∞ on (0, c_{5/2}).
pub fn shape_b(kappa: f64) -> f64 {
    let j32 = bessel_j_half_scaled(BesselOrder::ThreeHalves, kappa);
    let j52 = bessel_j_half_scaled(BesselOrder::FiveHalves, kappa);
    // J32/(κ J52) = (j32 κ^{3/2}) / (κ j52 κ^{5/2})
    j32 / (j52 * kappa * kappa)
}

/// `C(κ) = κ^{1/2} / J_{5/2}(κ)`.
pub fn shape_c(kappa: f64) -> f64 {
    let j52 = bessel_j_half_scaled(BesselOrder::FiveHalves, kappa);
    kappa.sqrt() / (j52 * kappa.powf(2.5))
}

/// The pair of shape functions over the admissible interval (0, c_{5/2}).
#[derive(Debug, Clone, Copy, Default)]
pub struct KappaProfile;

impl KappaProfile {
    pub fn upper(&self) -> f64 {
        bessel_zero(BesselOrder::FiveHalves)
    }
    pub fn b(&self, kappa: f64) -> f64 {
        shape_b(kappa)
    }
    pub fn c(&self, kappa: f64) -> f64 {
        shape_c(kappa)
    }
}

/// Solves `λ₁ = (3/2) W B(κ) λ₂` for `κ ∈ (0, c_{5/2})`.
pub fn find_kappa(lambda1: f64, lambda2: f64, w: f64) -> Result<f64, SpecfunError> {
    if !(lambda2 > 0.0) {
        return Err(SpecfunError::InvalidParams("lambda2 must be positive"));
    }
    if !(w > 0.0) {
        return Err(SpecfunError::InvalidParams("W must be positive"));
    }
    let target = 2.0 * lambda1 / (3.0 * w * lambda2);
    let c52 = bessel_zero(BesselOrder::FiveHalves);
    let lo = 1e-6;
    let hi = c52 * (1.0 - 1e-12);
    if !target.is_finite() || target > shape_b(lo) || target < shape_b(hi) {
        return Err(SpecfunError::Unattainable { target });
    }
    Ok(bisect(|k| shape_b(k) - target, lo, hi, BISECT_TOL))
}

/// Complete elliptic integrals `(K(m), E(m))` by the arithmetic-geometric mean.
///
/// The complementary parameter `m1 = 1 - m` is taken separately so callers can
/// pass it without cancellation when `m` is close to one.
pub fn ellip_ke(m: f64, m1: f64) -> (f64, f64) {
    let mut a = 1.0;
    let mut b = m1.max(0.0).sqrt();
    let mut c = m.max(0.0).sqrt();
    let mut pow2 = 0.5;
    let mut sum = pow2 * c * c;
    for _ in 0..40 {
        if c.abs() <= 1e-17 * a {
            break;
        }
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        c = 0.5 * (a - b);
        a = an;
        b = bn;
        pow2 *= 2.0;
        sum += pow2 * c * c;
    }
    let k = FRAC_PI_2 / a;
    (k, k * (1.0 - sum))
}

/// `((2 - m) K(m) - 2 E(m)) / m`, the combination appearing in the ring kernel.
///
/// For small `m` the difference cancels to `O(m)`; the series in `m` is
/// summed directly there.
pub fn ring_combination(m: f64, m1: f64) -> f64 {
    if m < 0.25 {
        // ((2-m)K - 2E) = (π/2) Σ_{n≥2} m^n (4n a_n/(2n-1) - a_{n-1}), a_n = (binom(2n,n)/4^n)²
        let mut a_prev = 0.25; // a_1
        let mut mpow = m; // m^{n-1}
        let mut sum = 0.0;
        for n in 2..200 {
            let nf = n as f64;
            let ratio = (2.0 * nf - 1.0) / (2.0 * nf);
            let a_n = a_prev * ratio * ratio;
            let term = mpow * (4.0 * nf * a_n / (2.0 * nf - 1.0) - a_prev);
            sum += term;
            a_prev = a_n;
            mpow *= m;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        FRAC_PI_2 * sum
    } else {
        let (k, e) = ellip_ke(m, m1);
        ((2.0 - m) * k - 2.0 * e) / m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Double-double accumulator so the alternating series stays accurate at large x.
    #[derive(Clone, Copy)]
    struct Dd(f64, f64);

    impl Dd {
        fn add(self, o: Dd) -> Dd {
            let s = self.0 + o.0;
            let bb = s - self.0;
            let err = (self.0 - (s - bb)) + (o.0 - bb);
            let lo = err + self.1 + o.1;
            let hi = s + lo;
            Dd(hi, lo - (hi - s))
        }

        fn mul_f(self, b: f64) -> Dd {
            let p = self.0 * b;
            let e = self.0.mul_add(b, -p);
            let lo = e + self.1 * b;
            let hi = p + lo;
            Dd(hi, lo - (hi - p))
        }

        fn div_f(self, b: f64) -> Dd {
            let q = self.0 / b;
            let r = Dd(self.0, self.1).add(Dd(-q * b, -q.mul_add(b, -q * b)));
            let q2 = r.0 / b;
            let hi = q + q2;
            Dd(hi, q2 - (hi - q))
        }
    }

    /// Independent ascending series straight from the definition,
    /// `J_ν(x) = Σ (−1)^k (x/2)^{2k+ν} / (k! Γ(k+ν+1))`, summed in double-double.
    fn series_oracle(nu: f64, x: f64) -> f64 {
        let gamma_np1 = if nu == 1.5 { 0.75 * PI.sqrt() } else { 1.875 * PI.sqrt() };
        let y = 0.25 * x * x;
        let mut term = Dd(1.0, 0.0);
        let mut sum = Dd(1.0, 0.0);
        for k in 1..80 {
            term = term.mul_f(-y).div_f(k as f64 * (k as f64 + nu));
            sum = sum.add(term);
        }
        (sum.0 + sum.1) * (0.5 * x).powf(nu) / gamma_np1
    }

    #[test]
    fn first_zeros_match_printed_digits() {
        let c32 = bessel_zero(BesselOrder::ThreeHalves);
        let c52 = bessel_zero(BesselOrder::FiveHalves);
        // printed values are truncated to four decimals
        assert_eq!((c32 * 1e4).floor() / 1e4, 4.4934, "{c32}");
        assert_eq!((c52 * 1e4).floor() / 1e4, 5.7634, "{c52}");
        assert!(bessel_j_half(BesselOrder::ThreeHalves, c32).unwrap().abs() < 1e-10);
        assert!(bessel_j_half(BesselOrder::FiveHalves, c52).unwrap().abs() < 1e-10);
        // tan x = x characterises the J_{3/2} zero
        assert!((c32.tan() - c32).abs() < 1e-9);
    }

    #[test]
    fn j32_at_pi_matches_series() {
        let v = bessel_j_half(BesselOrder::ThreeHalves, PI).unwrap();
        let o = series_oracle(1.5, PI);
        assert!((v - o).abs() <= 1e-12 * o.abs().max(1.0), "{v} vs {o}");
    }

    #[test]
    fn closed_form_tracks_series_on_range() {
        for i in 0..=600 {
            let x = 0.5 + 19.5 * i as f64 / 600.0;
            for (ord, nu) in [(BesselOrder::ThreeHalves, 1.5), (BesselOrder::FiveHalves, 2.5)] {
                let v = bessel_j_half(ord, x).unwrap();
                let o = series_oracle(nu, x);
                assert!((v - o).abs() <= 1e-10, "nu={nu} x={x}: {v} vs {o}");
            }
        }
    }

    #[test]
    fn small_argument_vanishes() {
        let v = bessel_j_half(BesselOrder::ThreeHalves, 1e-8).unwrap();
        assert!(v > 0.0 && v < 1e-11);
        let o = series_oracle(1.5, 0.3);
        let v = bessel_j_half(BesselOrder::ThreeHalves, 0.3).unwrap();
        assert!((v - o).abs() <= 1e-14);
    }

    #[test]
    fn nonpositive_argument_is_domain_error() {
        assert_eq!(
            bessel_j_half(BesselOrder::FiveHalves, 0.0),
            Err(SpecfunError::Domain(0.0))
        );
        assert!(bessel_j_half(BesselOrder::ThreeHalves, -1.0).is_err());
    }

    #[test]
    fn shape_b_strictly_decreasing() {
        let c52 = bessel_zero(BesselOrder::FiveHalves);
        let mut prev = f64::INFINITY;
        for i in 1..1000 {
            let k = c52 * i as f64 / 1000.0;
            let b = shape_b(k);
            assert!(b < prev, "B not decreasing at {k}");
            prev = b;
        }
    }

    #[test]
    fn kappa_round_trip() {
        for &(l1, l2, w) in &[(1.0, 1.0, 1.0), (-2.0, 0.5, 3.0), (10.0, 0.01, 0.7), (0.3, 4.0, 2.0)] {
            let k = find_kappa(l1, l2, w).unwrap();
            let back = 1.5 * w * shape_b(k) * l2;
            assert!((back - l1).abs() <= 1e-9 * l1.abs().max(1e-12), "{l1} {back}");
        }
    }

    #[test]
    fn kappa_limits() {
        let c32 = bessel_zero(BesselOrder::ThreeHalves);
        let c52 = bessel_zero(BesselOrder::FiveHalves);
        assert!((find_kappa(0.0, 1.0, 1.0).unwrap() - c32).abs() < 1e-10);
        let k_small = find_kappa(1.0, 1e-6, 1.0).unwrap();
        assert!(k_small < 1e-2);
        let k_large = find_kappa(-1.0, 1.0, 1e-8).unwrap();
        assert!((k_large - c52).abs() < 1e-3);
        assert!(matches!(find_kappa(1.0, 0.0, 1.0), Err(SpecfunError::InvalidParams(_))));
        assert!(matches!(
            find_kappa(1e300, 1e-300, 1e-300),
            Err(SpecfunError::Unattainable { .. })
        ));
    }

    #[test]
    fn elliptic_reference_values() {
        // K(1/2), E(1/2)
        let (k, e) = ellip_ke(0.5, 0.5);
        assert!((k - 1.854_074_677_301_372).abs() < 1e-13);
        assert!((e - 1.350_643_881_047_675_5).abs() < 1e-13);
        let (k0, e0) = ellip_ke(0.0, 1.0);
        assert!((k0 - FRAC_PI_2).abs() < 1e-15 && (e0 - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn ring_combination_series_meets_agm() {
        for &m in &[0.2499, 0.2, 0.1, 0.25] {
            let (k, e) = ellip_ke(m, 1.0 - m);
            let direct = ((2.0 - m) * k - 2.0 * e) / m;
            let s = ring_combination(m, 1.0 - m);
            assert!((s - direct).abs() <= 1e-12 * direct.abs(), "m={m}: {s} {direct}");
        }
        // leading behaviour (π/16) m
        let m = 1e-6;
        assert!((ring_combination(m, 1.0 - m) / (PI / 16.0 * m) - 1.0).abs() < 1e-5);
    }
}
