//! Stream-line tracing on the invariant tori.
//!
//! In `y = (z, r²/2)` the meridional motion is the planar Hamiltonian system
//! `ż = ∂_yΨ̃ = ∂_rΨ/r`, `ẏ₂ = −∂_zΨ̃ = −∂_zΨ`, with `τ` the physical time. Each
//! cross-section orbit at level `l` carries the angular increment
//! `Θ(l) = Γ(l) ∮ dτ/r²`, and the torus is classified as closed or
//! quasi-periodic from the continued fraction of `Θ/2π`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::refined_argmax;
use crate::grid::{AxiGrid, GridField};
use crate::profile::Profile;
use crate::variational::StreamSolution;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("{}", level_message(*level, *l0))]
    LevelNotFound { level: f64, l0: f64 },
    #[error("Hamiltonian drift {drift:e} exceeds {tol:e}")]
    Drift { drift: f64, tol: f64 },
    #[error("no return to the section after {steps} steps")]
    NoReturn { steps: usize },
    #[error("degenerate critical point: {0}")]
    Degenerate(String),
}

fn level_message(level: f64, l0: f64) -> String {
    if level >= l0 {
        format!("level above maximum: {level} ≥ l₀ = {l0}")
    } else if level <= 0.0 {
        format!("level not positive: {level}")
    } else {
        format!("level {level} not found on the section")
    }
}

/// C¹ bicubic Hermite interpolant of a lattice field, with fourth-order nodal
/// slopes (one-sided at the far edges, even reflection at the axis).
#[derive(Debug, Clone)]
pub struct Bicubic {
    grid: AxiGrid,
    f: Vec<f64>,
    fz: Vec<f64>,
    fr: Vec<f64>,
    fzr: Vec<f64>,
}

/// Fourth-order nodal slope: five-point centred stencil, one-sided near the
/// ends, or even reflection `v[−k] = v[k]` at the start.
fn slope(v: &[f64], k: usize, h: f64, even_at_start: bool) -> f64 {
    let n = v.len();
    let at = |m: isize| -> f64 {
        if m < 0 {
            v[(-m) as usize]
        } else {
            v[m as usize]
        }
    };
    let k_i = k as isize;
    let centred = |k: isize| (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) / (12.0 * h);
    let fwd0 = |w: &dyn Fn(usize) -> f64| (-25.0 * w(0) + 48.0 * w(1) - 36.0 * w(2) + 16.0 * w(3) - 3.0 * w(4)) / (12.0 * h);
    let fwd1 = |w: &dyn Fn(usize) -> f64| (-3.0 * w(0) - 10.0 * w(1) + 18.0 * w(2) - 6.0 * w(3) + w(4)) / (12.0 * h);
    if k + 2 >= n {
        // mirrored one-sided stencils at the far end
        let w = |m: usize| v[n - 1 - m];
        return if k + 1 == n { -fwd0(&w) } else { -fwd1(&w) };
    }
    if k < 2 {
        if even_at_start {
            return if k == 0 { 0.0 } else { centred(k_i) };
        }
        let w = |m: usize| v[m];
        return if k == 0 { fwd0(&w) } else { fwd1(&w) };
    }
    centred(k_i)
}

/// Cubic Hermite basis on `[0, 1]` and its derivative: (value at left, value
/// at right, slope at left, slope at right), slopes already scaled by `h`.
fn hermite(t: f64, h: f64) -> ([f64; 4], [f64; 4]) {
    let t2 = t * t;
    let t3 = t2 * t;
    let v = [
        2.0 * t3 - 3.0 * t2 + 1.0,
        -2.0 * t3 + 3.0 * t2,
        (t3 - 2.0 * t2 + t) * h,
        (t3 - t2) * h,
    ];
    let d = [
        (6.0 * t2 - 6.0 * t) / h,
        (-6.0 * t2 + 6.0 * t) / h,
        3.0 * t2 - 4.0 * t + 1.0,
        3.0 * t2 - 2.0 * t,
    ];
    (v, d)
}

impl Bicubic {
    pub fn new(field: &GridField) -> Self {
        let g = field.grid;
        let mut fz = vec![0.0; g.len()];
        let mut fr = vec![0.0; g.len()];
        for j in 0..g.nr {
            let row = &field.values[j * g.nz..(j + 1) * g.nz];
            for i in 0..g.nz {
                fz[g.idx(i, j)] = slope(row, i, g.hz, false);
            }
        }
        let mut col = vec![0.0; g.nr];
        let mut colz = vec![0.0; g.nr];
        let mut fzr = vec![0.0; g.len()];
        for i in 0..g.nz {
            for j in 0..g.nr {
                col[j] = field.values[g.idx(i, j)];
                colz[j] = fz[g.idx(i, j)];
            }
            for j in 0..g.nr {
                fr[g.idx(i, j)] = slope(&col, j, g.hr, true);
                fzr[g.idx(i, j)] = slope(&colz, j, g.hr, true);
            }
        }
        Self {
            grid: g,
            f: field.values.clone(),
            fz,
            fr,
            fzr,
        }
    }

    pub fn grid(&self) -> AxiGrid {
        self.grid
    }

    /// `(Ψ, ∂_zΨ, ∂_rΨ)` at `(z, r)`; points outside the lattice are clamped to
    /// the boundary cell and extrapolated.
    pub fn eval(&self, z: f64, r: f64) -> (f64, f64, f64) {
        let g = &self.grid;
        let sz = (z + g.z_extent) / g.hz;
        let sr = r / g.hr;
        let i = (sz.floor().max(0.0) as usize).min(g.nz - 2);
        let j = (sr.floor().max(0.0) as usize).min(g.nr - 2);
        let (tv, td) = hermite(sz - i as f64, g.hz);
        let (uv, ud) = hermite(sr - j as f64, g.hr);
        let mut out = (0.0, 0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                let k = g.idx(i + a, j + b);
                // (z basis, r basis, coefficient) for value, z-slope, r-slope, mixed slope
                let terms = [
                    (a, b, self.f[k]),
                    (2 + a, b, self.fz[k]),
                    (a, 2 + b, self.fr[k]),
                    (2 + a, 2 + b, self.fzr[k]),
                ];
                for (p, s, coef) in terms {
                    out.0 += coef * tv[p] * uv[s];
                    out.1 += coef * td[p] * uv[s];
                    out.2 += coef * tv[p] * ud[s];
                }
            }
        }
        out
    }

    pub fn value(&self, z: f64, r: f64) -> f64 {
        self.eval(z, r).0
    }
}

/// Critical point of the interpolant near the lattice maximiser and the
/// linearised cross-section period there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linearization {
    pub z: f64,
    pub r: f64,
    pub psi: f64,
    /// `det Hess Ψ̃` in `(z, r²/2)`: `(Ψ_zz Ψ_rr − Ψ_zr²)/r²`.
    pub det_hessian: f64,
    /// `2π/√det`.
    pub period: f64,
}

fn hessian(ip: &Bicubic, z: f64, r: f64) -> [[f64; 2]; 2] {
    let e = 1e-5 * ip.grid.hz.min(ip.grid.hr);
    let (_, az, ar) = ip.eval(z + e, r);
    let (_, bz, br) = ip.eval(z - e, r);
    let (_, cz, cr) = ip.eval(z, r + e);
    let (_, dz, dr) = ip.eval(z, r - e);
    let zz = (az - bz) / (2.0 * e);
    let rr = (cr - dr) / (2.0 * e);
    let zr = 0.25 * ((ar - br) + (cz - dz)) / e;
    [[zz, zr], [zr, rr]]
}

/// Newton iteration on `∇Ψ = 0` started at the refined lattice maximiser.
pub fn linearize(ip: &Bicubic, start: (f64, f64)) -> Result<Linearization, DynamicsError> {
    use DynamicsError::Degenerate;
    let (mut z, mut r) = start;
    for _ in 0..50 {
        let (_, gz, gr) = ip.eval(z, r);
        let h = hessian(ip, z, r);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det <= 0.0 {
            return Err(Degenerate("Hessian is not definite at the maximiser".into()));
        }
        let dz = (h[1][1] * gz - h[0][1] * gr) / det;
        let dr = (h[0][0] * gr - h[1][0] * gz) / det;
        z -= dz;
        r -= dr;
        if dz.abs().max(dr.abs()) < 1e-14 * (1.0 + r.abs()) {
            break;
        }
    }
    let h = hessian(ip, z, r);
    let det = (h[0][0] * h[1][1] - h[0][1] * h[0][1]) / (r * r);
    if !(det > 0.0 && h[0][0] < 0.0 && r > 0.0) {
        return Err(Degenerate(format!("det {det:e} at r = {r}")));
    }
    Ok(Linearization {
        z,
        r,
        psi: ip.value(z, r),
        det_hessian: det,
        period: 2.0 * std::f64::consts::PI / det.sqrt(),
    })
}

/// Dormand-Prince 5(4) tableau (autonomous systems, so the nodes are not needed).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One DOPRI5 step: fifth-order solution and the embedded error estimate.
fn dopri_step<const N: usize, F: Fn(&[f64; N]) -> [f64; N]>(rhs: &F, y: &[f64; N], h: f64) -> ([f64; N], [f64; N]) {
    let mut k = [[0.0; N]; 7];
    for s in 0..7 {
        let mut ys = *y;
        for (p, kp) in k.iter().enumerate().take(s) {
            let a = A[s][p];
            if a != 0.0 {
                for n in 0..N {
                    ys[n] += h * a * kp[n];
                }
            }
        }
        k[s] = rhs(&ys);
    }
    let mut y5 = *y;
    let mut err = [0.0; N];
    for s in 0..7 {
        for n in 0..N {
            y5[n] += h * B5[s] * k[s][n];
            err[n] += h * (B5[s] - B4[s]) * k[s][n];
        }
    }
    (y5, err)
}

/// Integrator tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Allowed `max|Ψ(y(τ)) − l|` as a fraction of `l₀`.
    pub drift_tol: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-13,
            max_steps: 200_000,
            drift_tol: 1e-6,
        }
    }
}

/// Takes one accepted adaptive step of at most `h_max`: returns the step used,
/// the new state and the proposed next step.
fn adaptive_step<const N: usize, F: Fn(&[f64; N]) -> [f64; N]>(
    rhs: &F,
    y: &[f64; N],
    mut h: f64,
    h_max: f64,
    opts: &TraceOptions,
    scale: &[f64; N],
) -> (f64, [f64; N], f64) {
    loop {
        h = h.min(h_max);
        let (yn, err) = dopri_step(rhs, y, h);
        let mut en: f64 = 0.0;
        for n in 0..N {
            let sc = opts.atol * scale[n] + opts.rtol * y[n].abs().max(yn[n].abs());
            en = en.max((err[n] / sc).abs());
        }
        if en <= 1.0 {
            let next = h * (0.9 * en.max(1e-10).powf(-0.2)).min(5.0);
            return (h, yn, next);
        }
        h *= (0.9 * en.powf(-0.2)).max(0.2);
    }
}

/// Step size `s ∈ (0, h]` at which `g(step(y, s))` vanishes, for `g(y) > 0 ≥ g(step(y, h))`.
fn locate_event<const N: usize, F, G>(rhs: &F, y: &[f64; N], h: f64, g: G) -> (f64, [f64; N])
where
    F: Fn(&[f64; N]) -> [f64; N],
    G: Fn(&[f64; N]) -> f64,
{
    let (mut lo, mut hi) = (0.0, h);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(&dopri_step(rhs, y, mid).0) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (hi, dopri_step(rhs, y, hi).0)
}

/// Closed cross-section orbit at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub level: f64,
    /// Section `z = z*` through the critical point.
    pub section_z: f64,
    pub period: f64,
    /// `∮ dτ/r²`.
    pub inverse_r2_integral: f64,
    /// `max |Ψ(y(τ)) − l|` on the interpolant.
    pub max_drift: f64,
    /// `(z, r)` at the accepted steps, starting point first, ending on the section.
    pub points: Vec<(f64, f64)>,
}

impl Orbit {
    pub fn polyline(&self) -> crate::contour::Polyline {
        let mut pts = self.points.clone();
        pts.pop();
        crate::contour::Polyline { points: pts, closed: true }
    }
}

/// Resolution-bounded commensurability call for `Θ/2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    /// `Θ/2π` is within the tolerance of `p/q_den`.
    Closed { p: i64, q_den: i64 },
    QuasiPeriodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusDiagnostics {
    pub level: f64,
    pub period: f64,
    pub theta_increment: f64,
    pub rotation_ratio: f64,
    pub classification: Classification,
    pub max_drift: f64,
    /// Denominator cap and tolerance used for the classification.
    pub max_denominator: i64,
    pub tolerance: f64,
}

/// Continued-fraction convergents of `x` with denominators up to `max_den`;
/// `Closed` for the first within `tol`.
pub fn classify(x: f64, max_den: i64, tol: f64) -> Classification {
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut rem = x;
    for _ in 0..64 {
        let a = rem.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i64;
        let (p2, q2) = (ai * p1 + p0, ai * q1 + q0);
        if q2 > max_den {
            break;
        }
        if (x - p2 as f64 / q2 as f64).abs() <= tol {
            return Classification::Closed { p: p2, q_den: q2 };
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = rem - a;
        if frac == 0.0 {
            break;
        }
        rem = 1.0 / frac;
    }
    Classification::QuasiPeriodic
}

/// Traced solution: the interpolant, the critical point and the profile.
#[derive(Debug, Clone)]
pub struct Tracer {
    pub interp: Bicubic,
    pub center: Linearization,
    pub profile: Profile,
    pub opts: TraceOptions,
}

pub const MAX_DENOMINATOR: i64 = 1000;
pub const CLASSIFY_TOL: f64 = 1e-9;

impl Tracer {
    pub fn new(sol: &StreamSolution) -> Result<Self, DynamicsError> {
        let interp = Bicubic::new(&sol.shifted);
        let center = linearize(&interp, refined_argmax(&sol.shifted))?;
        Ok(Self {
            interp,
            center,
            profile: sol.profile,
            opts: TraceOptions::default(),
        })
    }

    /// Maximum of the interpolant, at the critical point.
    pub fn l0(&self) -> f64 {
        self.center.psi
    }

    /// Outer point on the section where the interpolant equals `l`.
    pub fn section_start(&self, l: f64) -> Result<f64, DynamicsError> {
        let err = DynamicsError::LevelNotFound { level: l, l0: self.l0() };
        if !(l > 0.0 && l < self.l0()) {
            return Err(err);
        }
        let g = self.interp.grid();
        let z = self.center.z;
        let step = 0.25 * g.hr;
        let mut lo = self.center.r;
        let mut hi = lo;
        loop {
            hi += step;
            if hi > g.r_extent {
                return Err(err);
            }
            if self.interp.value(z, hi) < l {
                break;
            }
            lo = hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.interp.value(z, mid) >= l {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Right-hand side in `(z, y₂, ∫dτ/r²)`.
    fn meridional(&self, s: &[f64; 3]) -> [f64; 3] {
        let r2 = 2.0 * s[1];
        let r = r2.max(0.0).sqrt();
        let (_, pz, pr) = self.interp.eval(s[0], r);
        [pr / r, -pz, 1.0 / r2]
    }

    /// Traces the cross-section orbit at level `l` from the outer section point
    /// to its first return with the same crossing direction (`z − z*` from `+` to `−`).
    pub fn trace(&self, l: f64) -> Result<Orbit, DynamicsError> {
        self.trace_with(l, 1.0)
    }

    /// `direction = −1` integrates backward in time (the crossing is then `−` to `+`).
    fn trace_with(&self, l: f64, direction: f64) -> Result<Orbit, DynamicsError> {
        let r0 = self.section_start(l)?;
        let zc = self.center.z;
        let tol = self.opts.drift_tol * self.l0();
        let rhs = |s: &[f64; 3]| {
            let d = self.meridional(s);
            [direction * d[0], direction * d[1], d[2]]
        };
        let g = |s: &[f64; 3]| direction * (s[0] - zc);
        let scale = [r0, 0.5 * r0 * r0, 1.0 / (r0 * r0)];
        let mut y = [zc, 0.5 * r0 * r0, 0.0];
        let mut h = 1e-3 * self.center.period;
        let mut t = 0.0;
        let mut armed = false;
        let mut drift: f64 = 0.0;
        let mut points = vec![(zc, r0)];
        for _ in 0..self.opts.max_steps {
            let (used, yn, next) = adaptive_step(&rhs, &y, h, f64::INFINITY, &self.opts, &scale);
            let (used, yn, done) = if armed && g(&y) > 0.0 && g(&yn) <= 0.0 {
                let (s, ye) = locate_event(&rhs, &y, used, g);
                (s, ye, true)
            } else {
                (used, yn, false)
            };
            let r = (2.0 * yn[1]).sqrt();
            drift = drift.max((self.interp.value(yn[0], r) - l).abs());
            if drift > tol {
                return Err(DynamicsError::Drift { drift, tol });
            }
            points.push((yn[0], r));
            t += used;
            y = yn;
            if done {
                return Ok(Orbit {
                    level: l,
                    section_z: zc,
                    period: t,
                    inverse_r2_integral: y[2],
                    max_drift: drift,
                    points,
                });
            }
            if g(&y) > 0.0 {
                armed = true;
            }
            h = next;
        }
        Err(DynamicsError::NoReturn { steps: self.opts.max_steps })
    }

    /// Distance between the start and the end of a forward orbit followed by a
    /// backward orbit from its end point.
    pub fn time_reversal_error(&self, l: f64) -> Result<f64, DynamicsError> {
        let fwd = self.trace_with(l, 1.0)?;
        let bwd = self.trace_with(l, -1.0)?;
        let a = fwd.points.last().unwrap();
        let b = bwd.points.last().unwrap();
        let start = fwd.points[0];
        let e1 = ((a.0 - start.0).powi(2) + (a.1 - start.1).powi(2)).sqrt();
        let e2 = ((b.0 - start.0).powi(2) + (b.1 - start.1).powi(2)).sqrt();
        let e3 = (fwd.period - bwd.period).abs() / fwd.period;
        Ok(e1.max(e2).max(e3))
    }

    /// `Θ(l) = Γ(l) ∮ dτ/r²` and the commensurability call.
    pub fn theta_increment(&self, l: f64) -> Result<TorusDiagnostics, DynamicsError> {
        let orbit = self.trace(l)?;
        let theta = self.profile.swirl(l) * orbit.inverse_r2_integral;
        let ratio = theta / (2.0 * std::f64::consts::PI);
        Ok(TorusDiagnostics {
            level: l,
            period: orbit.period,
            theta_increment: theta,
            rotation_ratio: ratio,
            classification: classify(ratio, MAX_DENOMINATOR, CLASSIFY_TOL),
            max_drift: orbit.max_drift,
            max_denominator: MAX_DENOMINATOR,
            tolerance: CLASSIFY_TOL,
        })
    }

    /// Independent check of `Θ(l)`: integrates `ẋ = u(x)` in Cartesian
    /// coordinates from the section start for one cross-section period and
    /// accumulates the unwrapped azimuth.
    pub fn theta_from_3d(&self, l: f64, period: f64) -> Result<(f64, Vec<[f64; 3]>), DynamicsError> {
        let r0 = self.section_start(l)?;
        let zc = self.center.z;
        let profile = self.profile;
        let rhs = |x: &[f64; 3]| {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let (psi, pz, pr) = self.interp.eval(x[2], r);
            let ur = -pz / r;
            let uz = pr / r;
            let ut = profile.swirl(psi) / r;
            let (c, s) = (x[0] / r, x[1] / r);
            [ur * c - ut * s, ur * s + ut * c, uz]
        };
        let scale = [r0, r0, r0];
        let mut x = [r0, 0.0, zc];
        let mut h = 1e-3 * period;
        let mut t = 0.0;
        let mut theta = 0.0;
        let mut path = vec![x];
        for _ in 0..self.opts.max_steps {
            let rem = period - t;
            if rem <= 0.0 {
                return Ok((theta, path));
            }
            let (used, xn, next) = adaptive_step(&rhs, &x, h, rem, &self.opts, &scale);
            let cross = x[0] * xn[1] - x[1] * xn[0];
            let dot = x[0] * xn[0] + x[1] * xn[1];
            theta += cross.atan2(dot);
            t += used;
            x = xn;
            path.push(x);
            if used >= rem {
                return Ok((theta, path));
            }
            h = next;
        }
        Err(DynamicsError::NoReturn { steps: self.opts.max_steps })
    }

    /// Diagnostics at `l_m = l₀ m/(n+1)`, `m = 1..=n`, traced in parallel.
    pub fn torus_spectrum(&self, n_levels: usize) -> TorusSpectrum {
        let l0 = self.l0();
        let results: Vec<(f64, Result<TorusDiagnostics, DynamicsError>)> = (1..=n_levels)
            .into_par_iter()
            .map(|m| {
                let l = l0 * m as f64 / (n_levels + 1) as f64;
                (l, self.theta_increment(l))
            })
            .collect();
        let mut levels = Vec::new();
        let mut skipped = Vec::new();
        for (l, r) in results {
            match r {
                Ok(d) => levels.push(d),
                Err(e) => skipped.push(SkippedLevel { level: l, reason: e.to_string() }),
            }
        }
        let limit = self.profile.swirl(l0) / (self.center.r * self.center.r) * self.center.period
            / (2.0 * std::f64::consts::PI);
        TorusSpectrum {
            l0,
            levels,
            skipped,
            linearized_ratio: limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedLevel {
    pub level: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusSpectrum {
    pub l0: f64,
    pub levels: Vec<TorusDiagnostics>,
    pub skipped: Vec<SkippedLevel>,
    /// `Γ(l₀) T_lin/(2π r*²)`, the `l → l₀` limit of `Θ/2π`.
    pub linearized_ratio: f64,
}

/// Convenience wrapper: builds a tracer and traces one level.
pub fn trace_cross_section(sol: &StreamSolution, l: f64) -> Result<Orbit, DynamicsError> {
    Tracer::new(sol)?.trace(l)
}

/// Convenience wrapper for a single `Θ(l)`.
pub fn theta_increment(sol: &StreamSolution, l: f64) -> Result<TorusDiagnostics, DynamicsError> {
    Tracer::new(sol)?.theta_increment(l)
}

/// Convenience wrapper for the spectrum.
pub fn torus_spectrum(sol: &StreamSolution, n_levels: usize) -> Result<TorusSpectrum, DynamicsError> {
    Ok(Tracer::new(sol)?.torus_spectrum(n_levels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explicit::HicksMoffattParams;
    use std::f64::consts::PI;

    fn chandra() -> StreamSolution {
        let p = HicksMoffattParams::chandrasekhar(1.0, 1.0).unwrap();
        let ext = 1.25 * p.a;
        let g = AxiGrid::new(ext, ext, 257, 129).unwrap();
        StreamSolution::from_explicit(&p, g)
    }

    #[test]
    fn bicubic_reproduces_cubics() {
        let g = AxiGrid::new(2.0, 2.0, 21, 11).unwrap();
        let f = |z: f64, r: f64| (1.0 + z + z * z - z * z * z) * (1.0 + r * r);
        let ip = Bicubic::new(&GridField::sample(g, f));
        for (z, r) in [(0.13, 0.07), (-1.71, 1.33), (0.5, 1.99)] {
            let (v, vz, vr) = ip.eval(z, r);
            assert!((v - f(z, r)).abs() < 1e-12);
            assert!((vz - (1.0 + 2.0 * z - 3.0 * z * z) * (1.0 + r * r)).abs() < 1e-11);
            assert!((vr - (1.0 + z + z * z - z * z * z) * 2.0 * r).abs() < 1e-11);
        }
    }

    #[test]
    fn continued_fractions() {
        assert_eq!(classify(0.25, 1000, 1e-9), Classification::Closed { p: 1, q_den: 4 });
        assert_eq!(classify(355.0 / 113.0, 1000, 1e-9), Classification::Closed { p: 355, q_den: 113 });
        assert_eq!(classify(0.5f64.sqrt(), 1000, 1e-9), Classification::QuasiPeriodic);
        assert_eq!(classify(PI, 100, 1e-9), Classification::QuasiPeriodic);
        assert_eq!(classify(-1.5, 1000, 1e-9), Classification::Closed { p: -3, q_den: 2 });
    }

    #[test]
    fn quadratic_hamiltonian_period() {
        // Ψ̃ = l₀ − α z² − β (y − y*)² in (z, y = r²/2) has period π/√(αβ) on every level
        let (alpha, beta, ys) = (0.5, 2.0, 1.0);
        let g = AxiGrid::new(2.0, 3.0, 401, 301).unwrap();
        let psi = GridField::sample(g, |z, r| 1.0 - alpha * z * z - beta * (0.5 * r * r - ys).powi(2));
        let sol = StreamSolution::from_psi(psi, Profile::Power { lambda: 1.0, q: 2.0 }, 0.0, 0.0);
        let tr = Tracer::new(&sol).unwrap();
        let exact = PI / (alpha * beta).sqrt();
        assert!((tr.center.r - (2.0 * ys).sqrt()).abs() < 1e-6, "{:?}", tr.center);
        assert!((tr.center.period - exact).abs() < 1e-4 * exact);
        for l in [0.3, 0.6, 0.9] {
            let o = tr.trace(l).unwrap();
            assert!((o.period - exact).abs() < 1e-4 * exact, "{l}: {}", o.period);
            assert!(o.max_drift <= 1e-6);
            assert!(o.polyline().contains((tr.center.z, tr.center.r)));
        }
    }

    #[test]
    fn chandrasekhar_orbits() {
        let sol = chandra();
        let tr = Tracer::new(&sol).unwrap();
        let l0 = tr.l0();
        let mut prev: Option<Orbit> = None;
        for m in 1..=4 {
            let l = l0 * m as f64 / 5.0;
            let o = tr.trace(l).unwrap();
            assert!(o.max_drift <= 1e-6 * l0, "{}", o.max_drift);
            let poly = o.polyline();
            assert!(poly.is_simple());
            assert!(poly.contains((tr.center.z, tr.center.r)));
            if let Some(p) = &prev {
                assert!(p.polyline().strictly_contains(&poly));
            }
            prev = Some(o);
        }
        // period tends to the linearised period
        let o = tr.trace(l0 * (1.0 - 1e-6)).unwrap();
        assert!((o.period - tr.center.period).abs() < 1e-3 * tr.center.period);
        assert!(tr.time_reversal_error(0.5 * l0).unwrap() < 1e-8);
    }

    #[test]
    fn theta_matches_3d_trace_and_scales_with_swirl() {
        let sol = chandra();
        let tr = Tracer::new(&sol).unwrap();
        let l = 0.5 * tr.l0();
        let d = tr.theta_increment(l).unwrap();
        let (theta3, path) = tr.theta_from_3d(l, d.period).unwrap();
        assert!((theta3 - d.theta_increment).abs() < 1e-6, "{theta3} {}", d.theta_increment);
        let end = path.last().unwrap();
        let start = path[0];
        let rs = (end[0] * end[0] + end[1] * end[1]).sqrt();
        assert!((rs - start[0]).abs() < 1e-7 && (end[2] - start[2]).abs() < 1e-7);

        let mut doubled = tr.clone();
        doubled.profile = tr.profile.with_swirl_scaled(2.0);
        let d2 = doubled.theta_increment(l).unwrap();
        assert!((d2.theta_increment - 2.0 * d.theta_increment).abs() < 1e-14 * d.theta_increment.abs());
    }

    #[test]
    fn hill_has_no_azimuthal_increment() {
        let p = HicksMoffattParams::hill(1.0, 1.0).unwrap();
        let g = AxiGrid::new(1.25 * p.a, 1.25 * p.a, 257, 129).unwrap();
        let sol = StreamSolution::from_explicit(&p, g);
        let spec = torus_spectrum(&sol, 5).unwrap();
        assert!(spec.skipped.is_empty());
        assert_eq!(spec.levels.len(), 5);
        for d in &spec.levels {
            assert_eq!(d.theta_increment, 0.0);
            assert_eq!(d.classification, Classification::Closed { p: 0, q_den: 1 });
        }
    }

    #[test]
    fn out_of_range_level() {
        let tr = Tracer::new(&chandra()).unwrap();
        assert!(matches!(tr.trace(-0.1), Err(DynamicsError::LevelNotFound { .. })));
        assert!(matches!(tr.trace(2.0 * tr.l0()), Err(DynamicsError::LevelNotFound { .. })));
    }
}
