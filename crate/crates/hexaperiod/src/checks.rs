//! Numbered end-to-end checks with pinned tolerances and time budgets.
//! The acceptance target runs all of them; `selftest` runs the cheap ones.

use std::time::Instant;

use hexaperiod_core::asymptotics::*;
use hexaperiod_core::enumerate::{brute_force_tilings, lgv_partition, marginals, partition_f64, partition_polynomial};
use hexaperiod_core::kernel::{Kernel, KernelConfig};
use hexaperiod_core::model::{hexagon_cells, tiling_weight_exponent};
use hexaperiod_core::sample::{run, SamplerConfig};
use hexaperiod_core::{Alpha, ModelParams};
use num_bigint::BigUint;
use num_complex::Complex64 as C;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "{} [{:02}] {}: {} ({:.2} s of {:.0} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds,
            self.budget_seconds
        )
    }
}

pub struct Check {
    pub id: u32,
    pub name: &'static str,
    pub budget_seconds: f64,
    /// Cheap enough for `selftest`.
    pub quick: bool,
    run: fn() -> (bool, String),
}

impl Check {
    /// Runs the check; exceeding the time budget is a failure.
    pub fn run(&self) -> CheckOutcome {
        let t0 = Instant::now();
        let (ok, mut detail) = (self.run)();
        let seconds = t0.elapsed().as_secs_f64();
        let in_time = seconds <= self.budget_seconds;
        if !in_time {
            detail.push_str("; over time budget");
        }
        CheckOutcome {
            id: self.id,
            name: self.name,
            passed: ok && in_time,
            detail,
            seconds,
            budget_seconds: self.budget_seconds,
        }
    }
}

const A3: Alpha = Alpha::Rational { num: 3, den: 10 };
const HALF: Alpha = Alpha::Rational { num: 1, den: 2 };

pub fn acceptance() -> Vec<Check> {
    vec![
        Check { id: 1, name: "exact counts", budget_seconds: 10.0, quick: true, run: exact_counts },
        Check { id: 2, name: "minimal exponent", budget_seconds: 10.0, quick: true, run: minimal_exponent },
        Check { id: 3, name: "triple agreement", budget_seconds: 5.0, quick: true, run: triple_agreement },
        Check { id: 4, name: "kernel vs exact", budget_seconds: 120.0, quick: true, run: kernel_vs_exact },
        Check { id: 5, name: "reproducing property", budget_seconds: 60.0, quick: true, run: reproducing_property },
        Check { id: 6, name: "saddle identities", budget_seconds: 5.0, quick: true, run: saddle_identities },
        Check { id: 7, name: "round trip and symmetries", budget_seconds: 10.0, quick: true, run: round_trip },
        Check { id: 8, name: "circle laws", budget_seconds: 30.0, quick: true, run: circle_laws },
        Check { id: 9, name: "density sum rule", budget_seconds: 5.0, quick: true, run: sum_rule },
        Check { id: 10, name: "frozen-boundary limits", budget_seconds: 30.0, quick: false, run: frozen_limits },
        Check { id: 11, name: "MCMC correctness", budget_seconds: 120.0, quick: false, run: mcmc_correctness },
        Check { id: 12, name: "finite-N trend", budget_seconds: 600.0, quick: false, run: finite_n_trend },
        Check { id: 13, name: "arctic curve consistency", budget_seconds: 60.0, quick: true, run: arctic_consistency },
    ]
}

/// The quick acceptance checks plus invariants that have no numbered
/// criterion: frozen limits at shrinking distance and a short MCMC run.
pub fn selftest() -> Vec<Check> {
    let mut v: Vec<Check> = acceptance().into_iter().filter(|c| c.quick).collect();
    v.push(Check { id: 101, name: "frozen limits converge", budget_seconds: 10.0, quick: true, run: frozen_convergence });
    v.push(Check { id: 102, name: "short MCMC run", budget_seconds: 20.0, quick: true, run: mcmc_short });
    v
}

fn macmahon(n: u32) -> BigUint {
    let (mut num, mut den) = (BigUint::one(), BigUint::one());
    for i in 1..=n {
        for j in 1..=n {
            for k in 1..=n {
                num *= i + j + k - 1;
                den *= i + j + k - 2;
            }
        }
    }
    num / den
}

fn exact_counts() -> (bool, String) {
    let mut ok = true;
    let mut got = Vec::new();
    for n in [2usize, 4, 6, 8] {
        let z = match partition_polynomial(n) {
            Ok(z) => z.total(),
            Err(e) => return (false, format!("n={n}: {e}")),
        };
        ok &= z == macmahon(n as u32);
        got.push(z.to_string());
    }
    (ok, format!("Z(1) = {}", got.join(", ")))
}

fn minimal_exponent() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [2usize, 4, 6, 8] {
        let z = match partition_polynomial(n) {
            Ok(z) => z,
            Err(e) => return (false, format!("n={n}: {e}")),
        };
        let Some((e, c)) = z.min_term() else { return (false, format!("n={n}: empty")) };
        let next = z.second_exponent();
        let m = (n * n / 4) as u32;
        ok &= e == m && c.is_one() && next.is_some_and(|x| x > m);
        parts.push(format!("n={n}: {c}a^{e}, next a^{}", next.map_or("-".into(), |x| x.to_string())));
    }
    (ok, parts.join("; "))
}

fn triple_agreement() -> (bool, String) {
    let mut worst: f64 = 0.0;
    for n in [2usize, 4] {
        let tilings = match brute_force_tilings(n) {
            Ok(t) => t,
            Err(e) => return (false, e.to_string()),
        };
        for a in [0.3f64, 0.7] {
            let brute: f64 = tilings.iter().map(|t| a.powi(tiling_weight_exponent(t).unwrap() as i32)).sum();
            let (Ok(tr), Ok(lgv)) = (partition_f64(n, a), lgv_partition(n, a)) else {
                return (false, format!("n={n} a={a}: evaluation failed"));
            };
            worst = worst.max(((tr - brute) / brute).abs()).max(((lgv - brute) / brute).abs());
        }
    }
    (worst < 1e-10, format!("max relative difference {worst:.2e} (tol 1e-10)"))
}

fn kernel_vs_exact() -> (bool, String) {
    let mut worst: f64 = 0.0;
    for a in [A3, HALF] {
        for nh in [1usize, 2] {
            let mut cfg = KernelConfig::new(nh, a);
            cfg.nodes = 256;
            cfg.precision_bits = 256;
            let k = match Kernel::new(cfg) {
                Ok(k) => k,
                Err(e) => return (false, e.to_string()),
            };
            let m = marginals(&ModelParams::new(2 * nh, a).unwrap()).unwrap();
            for x in 1..2 * nh {
                for y in 0..2 * nh {
                    let d = k.finite_density_matrices(x, y).unwrap();
                    worst = worst.max(d.triple.max_abs_diff(&m.density(x, y).unwrap()));
                    for eps in 0..2u8 {
                        let b = k.kernel_block(x, y as i64, eps).unwrap();
                        for i in 0..2 {
                            let want = m.occupancy(2 * x + eps as usize, 2 * y as i64 + i as i64);
                            worst = worst.max((b.m[i][i] - C::new(want, 0.0)).norm());
                        }
                    }
                }
            }
        }
    }
    (worst < 1e-8, format!("max entry error {worst:.2e} (tol 1e-8)"))
}

fn reproducing_property() -> (bool, String) {
    let pts = [C::new(0.3, 0.2), C::new(-1.0, 0.5), C::new(2.0, -1.0), C::new(0.0, 0.0), C::new(1.5, 0.01)];
    let mut worst: f64 = 0.0;
    for nh in 1..=4 {
        for a in [A3, HALF] {
            let mut cfg = KernelConfig::new(nh, a);
            cfg.nodes = 512;
            let k = match Kernel::new(cfg) {
                Ok(k) => k,
                Err(e) => return (false, e.to_string()),
            };
            for deg in 0..2 * nh {
                for z in pts {
                    worst = worst.max(k.reproducing_error(deg, z));
                }
            }
        }
    }
    (worst < 1e-8, format!("max |int z^k W R - z^k| = {worst:.2e} (tol 1e-8)"))
}

/// Closed forms of the cleared saddle polynomial at the poles and at
/// `r1, r2, r3`.
pub fn m_closed_forms(k: &AlphaConstants, xi: f64, eta: f64) -> Vec<(f64, f64)> {
    let (a, c) = (k.alpha, k.c);
    let sa = a.sqrt();
    let b = (1.0 + a * a) * c + sa * (1.0 + a);
    vec![
        (0.0, a.powi(4) * (1.0 - (eta - xi).powi(2))),
        (a * c, (1.0 - a).powi(8) * c.powi(8) * (1.0 - xi * xi)),
        (a / c, a.powi(4) * (1.0 - a).powi(8) * (1.0 - xi * xi)),
        (c, (1.0 - a).powi(8) * c.powi(8) * (1.0 - eta * eta)),
        (1.0 / c, (1.0 - a).powi(8) / a.powi(4) * (1.0 - eta * eta)),
        (k.r1, -a / (c * c) * (1.0 - a).powi(2) * (c + sa).powi(2) * (a * c + sa).powi(2) * (eta + xi).powi(2)),
        (k.r2, -a * (1.0 - a).powi(10) * c.powi(8) / (c + sa).powi(8) * b * b * (xi - 2.0 * eta).powi(2)),
        (k.r3, -a * (1.0 - a).powi(10) * c.powi(8) / (a * c + sa).powi(8) * b * b * (eta - 2.0 * xi).powi(2)),
    ]
}

fn hex_sample(rng: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let (xi, eta): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if (xi - eta).abs() < 1.0 {
            return (xi, eta);
        }
    }
}

fn saddle_identities() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a = rng.gen_range(0.02..0.98);
        let (xi, eta) = hex_sample(&mut rng);
        let k = AlphaConstants::new(a).unwrap();
        let got = m_special_values_mp(a, xi, eta, 192);
        for (g, (_, want)) in got.iter().zip(m_closed_forms(&k, xi, eta)) {
            worst = worst.max((g - want).abs() / want.abs());
        }
    }
    (worst < 1e-10, format!("max relative error {worst:.2e} over 800 values, 192-bit evaluation (tol 1e-10)"))
}

/// `count` liquid points drawn with a fixed seed.
fn liquid_points(seed: u64, count: usize) -> Vec<(AlphaConstants, SaddleData)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let k = AlphaConstants::new(rng.gen_range(0.02..0.98)).unwrap();
        let (xi, eta) = hex_sample(&mut rng);
        if let Ok(Some(sd)) = find_saddle(&k, xi, eta) {
            out.push((k, sd));
        }
    }
    out
}

fn round_trip() -> (bool, String) {
    let (mut trip, mut refl, mut star): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (k, sd) in liquid_points(7, 1000) {
        let Ok((x2, y2)) = inverse_map(&k, sd.s, sd.w) else { return (false, "inverse map failed".into()) };
        trip = trip.max((x2 - sd.xi).abs().max((y2 - sd.eta).abs()));
        match find_saddle(&k, -sd.xi, -sd.eta) {
            Ok(Some(m)) => refl = refl.max((m.s - sd.s).norm()),
            _ => refl = f64::INFINITY,
        }
        match (find_saddle(&k, sd.xi, sd.xi - sd.eta), k.star(sd.s.conj())) {
            (Ok(Some(r)), Ok(t)) => star = star.max((r.s - t).norm()),
            _ => star = f64::INFINITY,
        }
    }
    (
        trip < 1e-8 && refl < 1e-9 && star < 1e-9,
        format!("round trip {trip:.1e} (tol 1e-8), reflection {refl:.1e}, star {star:.1e} (tol 1e-9)"),
    )
}

fn circle_laws() -> (bool, String) {
    let mut worst: f64 = 0.0;
    let mut fails = 0;
    let mut checked = 0;
    for a in [0.1, 0.5, 0.9] {
        let k = AlphaConstants::new(a).unwrap();
        let r = match circle_membership_suite(&k, 200, 100) {
            Ok(r) => r,
            Err(e) => return (false, e.to_string()),
        };
        worst = worst.max(r.max_residual());
        fails += r.sign_failures + r.lines.iter().map(|l| l.arc_failures).sum::<usize>();
        checked += r.sign_checked;
    }
    (
        worst < 1e-8 && fails == 0,
        format!("max residual {worst:.1e} (tol 1e-8), {fails} sign/arc failures over {checked} grid points"),
    )
}

fn sum_rule() -> (bool, String) {
    let mut worst: f64 = 0.0;
    let mut outside = 0;
    for (k, sd) in liquid_points(9, 1000) {
        let d = density_from_saddle(&k, sd.s);
        worst = worst.max(d.sum_rule_residual());
        outside += d.entries().filter(|v| !(0.0..=1.0).contains(v)).count();
    }
    (
        worst < 1e-12 && outside == 0,
        format!("max |P1+P2+P3-1| = {worst:.1e} (tol 1e-12), {outside} entries outside [0,1]"),
    )
}

fn frozen_limits() -> (bool, String) {
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    for a in [0.2, 0.5, 0.8] {
        let k = AlphaConstants::new(a).unwrap();
        for f in 1..=6 {
            match frozen_deviation(&k, f, 1e-3) {
                Ok(d) if d > worst => {
                    worst = d;
                    at = format!("alpha={a} F{f}");
                }
                Ok(_) => {}
                Err(e) => return (false, e.to_string()),
            }
        }
    }
    (worst < 0.02, format!("max deviation at distance 1e-3 is {worst:.3} at {at} (tol 0.02)"))
}

fn frozen_convergence() -> (bool, String) {
    let mut ok = true;
    let mut worst7: f64 = 0.0;
    for a in [0.2, 0.5, 0.8] {
        let k = AlphaConstants::new(a).unwrap();
        for f in 1..=6 {
            let d: Vec<f64> = [1e-3, 1e-5, 1e-7].iter().map(|&t| frozen_deviation(&k, f, t).unwrap_or(f64::NAN)).collect();
            ok &= d[1] < 0.2 * d[0] && d[2] < 0.2 * d[1];
            worst7 = worst7.max(d[2]);
        }
    }
    (ok && worst7 < 0.01, format!("deviation falls ~10x per 100x in distance; max at 1e-7 is {worst7:.1e}"))
}

fn mcmc_tv(sweeps: u64, seed: u64) -> (f64, bool) {
    let p = ModelParams::new(4, A3).unwrap();
    let m = marginals(&p).unwrap();
    let cfg = SamplerConfig::new(p, sweeps, seed, 1);
    let (t1, s1) = run(&cfg).unwrap();
    let (t2, s2) = run(&cfg).unwrap();
    let mut worst: f64 = 0.0;
    for (x, y) in hexagon_cells(4) {
        let f = s1.frequencies(x, y);
        let e = m.lozenge_probs(x, y);
        worst = worst.max(0.5 * (0..3).map(|k| (f[k] - e[k]).abs()).sum::<f64>());
    }
    (worst, t1 == t2 && s1 == s2)
}

fn mcmc_correctness() -> (bool, String) {
    let (tv, same) = mcmc_tv(1_000_000, 2024);
    (tv < 0.01 && same, format!("max per-cell TV {tv:.2e} (tol 0.01), reproducible: {same}"))
}

fn mcmc_short() -> (bool, String) {
    let (tv, same) = mcmc_tv(100_000, 2024);
    (tv < 0.03 && same, format!("10^5 sweeps: max per-cell TV {tv:.2e} (tol 0.03), reproducible: {same}"))
}

fn finite_n_trend() -> (bool, String) {
    let lim = density_matrices(&AlphaConstants::new(0.5).unwrap(), 0.0, 0.0).unwrap();
    let mut dist = Vec::new();
    for n in [4usize, 8, 16] {
        let d = Kernel::new(KernelConfig::new(n, HALF)).and_then(|k| k.finite_density_matrices(n, n));
        match d {
            Ok(d) => dist.push(d.triple.max_abs_diff(&lim)),
            Err(e) => return (false, format!("N={n}: {e}")),
        }
    }
    let ok = dist.windows(2).all(|w| w[1] < w[0]);
    (ok, format!("distances for N=4,8,16: {:.6}, {:.6}, {:.6}", dist[0], dist[1], dist[2]))
}

fn arctic_consistency() -> (bool, String) {
    let (mut flips, mut proxies, mut refl) = (0usize, 0.0f64, 0.0f64);
    let mut checked = 0;
    for a in [0.04, 0.2, 0.4] {
        let k = AlphaConstants::new(a).unwrap();
        let pts = match arctic_boundary(&k, 240) {
            Ok(p) => p,
            Err(e) => return (false, e.to_string()),
        };
        for p in pts.iter().filter(|p| p.kind != BoundaryKind::Tangency) {
            proxies = proxies.max(discriminant_proxy(&k, p.s, p.xi, p.eta));
            if p.kind == BoundaryKind::Regular {
                checked += 1;
                if probe_flips(&k, p.s, p.branch as f64, 1e-4) != Ok(Some(true)) {
                    flips += 1;
                }
            }
        }
        // the two branches are point reflections of each other
        let half = pts.len() / 2;
        for (p, q) in pts[..half].iter().zip(&pts[half..]) {
            refl = refl.max((p.xi + q.xi).abs()).max((p.eta + q.eta).abs());
        }
    }
    (
        flips == 0 && proxies < PROXY_TOL && refl < 1e-9,
        format!(
            "{flips} probe failures over {checked} points, max proxy {proxies:.1e} (tol {PROXY_TOL:.0e}), reflection {refl:.1e} (tol 1e-9)"
        ),
    )
}
