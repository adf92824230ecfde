//! Acceptance criteria: one PASS/FAIL line per criterion, each with its
//! runtime budget. Built without the libtest harness so the report is always
//! printed; the process exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vring::dynamics::Tracer;
use vring::explicit::{explicit_residual, HicksMoffattParams};
use vring::fields::{beltrami_residual_on, factor_level_sets, interior_k_values, reconstruct, LevelSetShape};
use vring::greens::{apply_green, pointwise_bound_check};
use vring::grid::{AxiGrid, GridField};
use vring::specfun::{bessel_zero, BesselOrder};
use vring::variational::{
    continuation_sweep, functional_i, i_prime_pairing, solve_grand_state, ProblemParams, SolverOptions,
    StreamSolution,
};
use vring::verify::{core_geometry, run_suite, Status, Suite, Tolerances};

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
    budget: Duration,
}

impl Outcome {
    fn ok(&self) -> bool {
        self.pass && self.elapsed <= self.budget
    }

    fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2} {:<28} {:>9.3}s / {:>7.3}s  {}",
            if self.ok() { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs_f64(),
            self.detail
        )
    }
}

fn timed(id: usize, name: &'static str, budget_s: f64, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let t = Instant::now();
    let (pass, detail) = f();
    Outcome {
        id,
        name,
        pass,
        detail,
        elapsed: t.elapsed(),
        budget: Duration::from_secs_f64(budget_s),
    }
}

fn default_grid() -> AxiGrid {
    AxiGrid::new(8.0, 8.0, 257, 257).unwrap()
}

fn grand_state() -> StreamSolution {
    solve_grand_state(&ProblemParams::default(), default_grid(), &SolverOptions::default()).unwrap()
}

fn truncate4(x: f64) -> f64 {
    (x * 1e4).floor() / 1e4
}

fn c1_bessel() -> Outcome {
    timed(1, "bessel constants", 1e-3, || {
        let c32 = bessel_zero(BesselOrder::ThreeHalves);
        let c52 = bessel_zero(BesselOrder::FiveHalves);
        let pass = truncate4(c32) == 4.4934 && truncate4(c52) == 5.7634;
        (pass, format!("c32 = {c32:.10}, c52 = {c52:.10}"))
    })
}

fn c2_residual() -> Outcome {
    let p = HicksMoffattParams::generic(1.0, 1.0, 1.0).unwrap();
    let a = p.a;
    let t0 = Instant::now();
    let coarse = explicit_residual(&p, AxiGrid::new(2.0 * a, 2.0 * a, 257, 257).unwrap());
    let t_coarse = t0.elapsed();
    let mut o = timed(2, "hicks-moffatt residual", 10.0, || {
        let fine = explicit_residual(&p, AxiGrid::new(2.0 * a, 2.0 * a, 513, 513).unwrap());
        let ratio = coarse.max_abs / fine.max_abs;
        (
            (3.5..=4.5).contains(&ratio),
            format!("max residual {:.3e} → {:.3e}, ratio {ratio:.3}", coarse.max_abs, fine.max_abs),
        )
    });
    // budget is per grid: report the slower of the two
    o.elapsed = o.elapsed.max(t_coarse);
    o
}

fn c3_beltrami() -> Outcome {
    timed(3, "chandrasekhar beltrami", 10.0, || {
        let p = HicksMoffattParams::chandrasekhar(1.0, 1.0).unwrap();
        let a = p.a;
        let mut errs = Vec::new();
        for n in [256, 512] {
            let e = 1.25 * a;
            let g = AxiGrid::new(e, e, n + 1, n / 2 + 1).unwrap();
            let vf = reconstruct(&StreamSolution::from_explicit(&p, g));
            let h = g.hz.max(g.hr);
            let mut mask = vec![false; g.len()];
            for j in 1..g.nr - 1 {
                for i in 1..g.nz - 1 {
                    mask[g.idx(i, j)] = (g.z(i).powi(2) + g.r(j).powi(2)).sqrt() < a - 2.0 * h;
                }
            }
            errs.push(beltrami_residual_on(&vf, &mask).max);
        }
        let order = (errs[0] / errs[1]).log2();
        (order >= 1.8, format!("max |∇×u − λ₂^½u| {:.3e} → {:.3e}, order {order:.3}", errs[0], errs[1]))
    })
}

fn c4_green() -> Outcome {
    timed(4, "green representation", 60.0, || {
        let p = HicksMoffattParams::hill(7.5, 1.0).unwrap();
        let a = p.a;
        let g = AxiGrid::new(1.05 * a, 1.05 * a, 257, 129).unwrap();
        let zeta = GridField::cell_average(g, 16, |z, r| if z * z + r * r < a * a { p.lambda1 } else { 0.0 });
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let probes: Vec<(f64, f64)> = (0..100)
            .map(|_| (rng.gen_range(-2.0 * a..2.0 * a), rng.gen_range(0.2 * a..2.0 * a)))
            .collect();
        let vals = apply_green(&zeta, &probes);
        let worst = probes
            .iter()
            .zip(&vals)
            .map(|(&(z, r), v)| {
                let exact = p.psi(z, r) + 0.5 * p.w * r * r;
                (v - exact).abs() / exact.abs()
            })
            .fold(0.0, f64::max);
        (worst <= 1e-3, format!("100 probes, worst relative error {worst:.3e}"))
    })
}

fn c5_grand_state() -> Outcome {
    timed(5, "grand-state solve", 300.0, || {
        let sol = match solve_grand_state(&ProblemParams::default(), default_grid(), &SolverOptions::default()) {
            Ok(s) => s,
            Err(e) => return (false, e.to_string()),
        };
        let rep = run_suite(&sol, Suite::Identities, &Tolerances::default());
        let status = |n: &str| rep.check(n).map(|c| c.status) == Some(Status::Pass);
        let geo = core_geometry(&sol.shifted);
        let checks = [
            ("iterations≤500", sol.converged && sol.iterations <= 500),
            ("nehari", status("nehari")),
            ("energy identity", status("energy_identity")),
            ("core energy", status("core_energy")),
            ("core split", status("core_split")),
            ("coercivity", status("coercivity")),
            ("connected", geo.components == 1),
            ("simply connected", geo.holes == 0),
            ("off axis", !geo.touches_axis && !geo.touches_outer_boundary),
            ("even/monotone", status("even_monotone")),
        ];
        let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
        let gap = |n: &str| rep.check(n).map_or(String::new(), |c| c.detail.clone());
        (
            failed.is_empty(),
            format!(
                "I = {:.6e}, {} iterations, nehari {:.2e}, (energy) {}, (core) {}, (split) {}{}",
                sol.energy.unwrap_or(f64::NAN),
                sol.iterations,
                sol.nehari_residual.unwrap_or(f64::NAN),
                gap("energy_identity"),
                gap("core_energy"),
                gap("core_split"),
                if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
            ),
        )
    })
}

fn c6_continuation() -> Outcome {
    timed(6, "domain continuation", 900.0, || {
        let g = default_grid();
        let sweep = match continuation_sweep(&ProblemParams::default(), &[4.0, 8.0, 16.0], g.hz, g.hr, &SolverOptions::default())
        {
            Ok(s) => s,
            Err(e) => return (false, e.to_string()),
        };
        let e: Vec<f64> = sweep.iter().map(|s| s.energy.unwrap()).collect();
        let monotone = e[0] >= e[1] && e[1] >= e[2];
        let (g1, g2) = (e[0] - e[1], e[1] - e[2]);
        let shrinking = g2 * 2.0 <= g1;
        let (b1, b2) = (sweep[1].core_box().unwrap(), sweep[2].core_box().unwrap());
        let same = (b1.z_min - b2.z_min).abs() <= g.hz + 1e-12
            && (b1.z_max - b2.z_max).abs() <= g.hz + 1e-12
            && (b1.r_min - b2.r_min).abs() <= g.hr + 1e-12
            && (b1.r_max - b2.r_max).abs() <= g.hr + 1e-12;
        (
            monotone && shrinking && same,
            format!(
                "I = {:.6e}, {:.6e}, {:.6e}; gaps {g1:.3e}, {g2:.3e}; boxes z[{}, {}] r[{}, {}] vs z[{}, {}] r[{}, {}]",
                e[0], e[1], e[2], b1.z_min, b1.z_max, b1.r_min, b1.r_max, b2.z_min, b2.z_max, b2.r_min, b2.r_max
            ),
        )
    })
}

fn c7_topology(sol: &StreamSolution) -> Outcome {
    timed(7, "factor level-set topology", 30.0, || {
        let vf = reconstruct(sol);
        let k0 = sol.k0();
        let inner = interior_k_values(k0, 10);
        let mut ks = inner.clone();
        ks.extend([-0.5 * k0, -1e-3 * k0, 1.001 * k0, 2.0 * k0]);
        let rep = factor_level_sets(&vf, &ks);
        let curves_ok = rep.entries.iter().filter(|e| e.k > 0.0 && e.k < k0).all(|e| {
            matches!(e.shape, LevelSetShape::Curves { count: 1, closed: true, simple: true, .. })
        });
        let empty_ok = rep
            .entries
            .iter()
            .filter(|e| e.k < 0.0 || e.k > k0)
            .all(|e| e.shape == LevelSetShape::Empty);
        let radii: Vec<f64> = rep
            .entries
            .iter()
            .filter_map(|e| match e.shape {
                LevelSetShape::Curves { radius_about_max, .. } => Some(radius_about_max),
                _ => None,
            })
            .collect();
        let pass = curves_ok && empty_ok && rep.nested == Some(true) && rep.shrinking == Some(true) && radii.len() == 10;
        (
            pass,
            format!(
                "k₀ = {k0:.4}, 10 curves simple/closed {curves_ok}, nested {:?}, shrinking {:?} (radius {:.3} → {:.3}), outside (0, k₀) empty {empty_ok}",
                rep.nested,
                rep.shrinking,
                radii.first().copied().unwrap_or(f64::NAN),
                radii.last().copied().unwrap_or(f64::NAN)
            ),
        )
    })
}

fn c8_tori(sol: &StreamSolution) -> Outcome {
    timed(8, "invariant tori", 120.0, || {
        let tr = match Tracer::new(sol) {
            Ok(t) => t,
            Err(e) => return (false, e.to_string()),
        };
        let l0 = tr.l0();
        let mut worst_drift: f64 = 0.0;
        let mut worst_theta: f64 = 0.0;
        for m in 1..=10 {
            let l = l0 * m as f64 / 11.0;
            let d = match tr.theta_increment(l) {
                Ok(d) => d,
                Err(e) => return (false, format!("level {l}: {e}")),
            };
            let (t3, _) = match tr.theta_from_3d(l, d.period) {
                Ok(v) => v,
                Err(e) => return (false, format!("3d trace at {l}: {e}")),
            };
            worst_drift = worst_drift.max(d.max_drift / l0);
            worst_theta = worst_theta.max((t3 - d.theta_increment).abs());
        }
        let hill = HicksMoffattParams::hill(1.0, 1.0).unwrap();
        let e = 2.0 * hill.a;
        let hsol = StreamSolution::from_explicit(&hill, AxiGrid::new(e, e, 257, 129).unwrap());
        let spectrum = match Tracer::new(&hsol) {
            Ok(t) => t.torus_spectrum(10),
            Err(e) => return (false, format!("hill: {e}")),
        };
        let hill_zero = spectrum.skipped.is_empty() && spectrum.levels.len() == 10 && spectrum.levels.iter().all(|d| d.theta_increment == 0.0);
        (
            worst_drift <= 1e-6 && worst_theta <= 1e-6 && hill_zero,
            format!("drift/l₀ ≤ {worst_drift:.2e}, |Θ₂d − Θ₃d| ≤ {worst_theta:.2e} over 10 levels, hill Θ ≡ 0: {hill_zero}"),
        )
    })
}

fn c9_pointwise() -> Outcome {
    timed(9, "pointwise bound constant", 30.0, || {
        let p = ProblemParams::default();
        let opts = SolverOptions::default();
        let beta = p.beta();
        let runs = [
            ("R=8 129²", AxiGrid::new(8.0, 8.0, 129, 129).unwrap()),
            ("R=8 257²", AxiGrid::new(8.0, 8.0, 257, 257).unwrap()),
            ("R=8 513²", AxiGrid::new(8.0, 8.0, 513, 513).unwrap()),
            ("R=4 129²", AxiGrid::new(4.0, 4.0, 129, 129).unwrap()),
            ("R=16 513²", AxiGrid::new(16.0, 16.0, 513, 513).unwrap()),
        ];
        let mut cs = Vec::new();
        for (name, g) in runs {
            match solve_grand_state(&p, g, &opts) {
                Ok(sol) => cs.push((name, pointwise_bound_check(&sol, beta, 0.5).c_star)),
                Err(e) => return (false, format!("{name}: {e}")),
            }
        }
        let lo = cs.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let hi = cs.iter().map(|c| c.1).fold(0.0, f64::max);
        let spread = hi / lo - 1.0;
        let list: Vec<String> = cs.iter().map(|(n, c)| format!("{n}: {c:.4}")).collect();
        (hi.is_finite() && lo > 0.0 && spread < 0.2, format!("C* {}; spread {:.1}%", list.join(", "), 100.0 * spread))
    })
}

/// Smooth random field on the lattice, zero on the boundary.
fn random_field(g: AxiGrid, rng: &mut ChaCha8Rng, amp: f64) -> GridField {
    let modes: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(0.5..2.5),
                rng.gen_range(0.4..1.0),
            )
        })
        .collect();
    let mut f = GridField::sample(g, |z, r| {
        modes
            .iter()
            .map(|&(c, z0, r0, w)| c * amp * r * r * (-((z - z0).powi(2) + (r - r0).powi(2)) / (w * w)).exp())
            .sum()
    });
    f.zero_boundary();
    f
}

fn c10_frechet() -> Outcome {
    timed(10, "frechet derivative", 30.0, || {
        let p = ProblemParams::default();
        let g = AxiGrid::new(4.0, 4.0, 129, 129).unwrap();
        let eps: Vec<f64> = (0..9).map(|k| 1e-5 * 10f64.powf(k as f64 * 0.25)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut slopes = Vec::new();
        for _ in 0..20 {
            // ψ: an active core above the obstacle; φ: a random direction
            let psi = {
                let mut f = GridField::sample(g, |z, r| 6.0 * r * r * (-(z * z + (r - 1.2).powi(2)) / 0.6).exp());
                f.zero_boundary();
                f.combine(1.0, &random_field(g, &mut rng, 0.5), 1.0).unwrap()
            };
            // large enough that the ε² term clears the rounding floor ~1e-16·|I|/ε
            let phi = random_field(g, &mut rng, 30.0);
            let exact = i_prime_pairing(&psi, &phi, &p).unwrap();
            let pts: Vec<(f64, f64)> = eps
                .iter()
                .map(|&e| {
                    let plus = functional_i(&psi.combine(1.0, &phi, e).unwrap(), &p).0;
                    let minus = functional_i(&psi.combine(1.0, &phi, -e).unwrap(), &p).0;
                    let fd = (plus - minus) / (2.0 * e);
                    (e.log10(), (fd - exact).abs().max(f64::MIN_POSITIVE).log10())
                })
                .collect();
            let n = pts.len() as f64;
            let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
            let (mx, my) = (sx / n, sy / n);
            let (sxy, sxx) = pts
                .iter()
                .fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2)));
            slopes.push(sxy / sxx);
        }
        let lo = slopes.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (
            lo >= 1.8 && hi <= 2.2,
            format!("20 fields, log-log slope of |FD − I'[ψ]φ| over ε ∈ [1e-5, 1e-3]: {lo:.3} … {hi:.3}"),
        )
    })
}

fn main() {
    let sol = grand_state();
    let outcomes = vec![
        c1_bessel(),
        c2_residual(),
        c3_beltrami(),
        c4_green(),
        c5_grand_state(),
        c6_continuation(),
        c7_topology(&sol),
        c8_tori(&sol),
        c9_pointwise(),
        c10_frechet(),
    ];
    println!();
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.ok()).map(|o| o.id).collect();
    println!("{} of {} criteria pass", outcomes.len() - failed.len(), outcomes.len());
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
