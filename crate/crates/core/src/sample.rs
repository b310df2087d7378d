//! Single-site heat-bath dynamics on the path system.
//!
//! A site `(j, x)` with `1 <= x <= 2n-1` can move when `h_j(x-1) = v` and
//! `h_j(x+1) = v+1`: then `h_j(x)` is `v` or `v+1`, and it is resampled from
//! the conditional law of the alpha-weighted measure.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::domain;
use crate::model::{edge_weight_exponent, t_max, DensityTriple, ModelParams, TilingState};
use crate::Result;

/// Name of the generator, recorded in run metadata.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.3)";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanOrder {
    /// Sites visited `j = 0..n`, `x = 1..2n` in order.
    Raster,
    /// Each update picks a uniform random site.
    RandomSite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub params: ModelParams,
    pub sweeps: u64,
    pub seed: u64,
    pub chains: usize,
    /// Sweeps discarded before statistics are recorded.
    pub burnin: u64,
    pub scan: ScanOrder,
}

impl SamplerConfig {
    /// Default burn-in of `max(100, 2 n^2)` sweeps. Frozen corners melt out of
    /// the starting tiling on a time scale of order `n^2` sweeps.
    pub fn new(params: ModelParams, sweeps: u64, seed: u64, chains: usize) -> Self {
        SamplerConfig {
            params,
            sweeps,
            seed,
            chains,
            burnin: (2 * params.n as u64 * params.n as u64).max(100),
            scan: ScanOrder::Raster,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(domain!("sweeps must be at least 1"));
        }
        if self.chains == 0 {
            return Err(domain!("chains must be at least 1"));
        }
        ModelParams::new(self.params.n, self.params.alpha).map(|_| ())
    }
}

/// Lozenge counts per hexagon cell, accumulated over recorded samples.
///
/// Only R and U are stored; D is whatever remains, since every step of every
/// path covers exactly one R or U cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalStats {
    pub n: usize,
    pub samples: u64,
    /// `ru[x * 2n + y] = [#R, #U]` at cell `(x, y)`.
    ru: Vec<[u64; 2]>,
    pub updates: u64,
    pub flips: u64,
}

impl EmpiricalStats {
    pub fn new(n: usize) -> Self {
        EmpiricalStats {
            n,
            samples: 0,
            ru: vec![[0; 2]; 4 * n * n],
            updates: 0,
            flips: 0,
        }
    }

    fn record(&mut self, t: &TilingState) {
        let w = 2 * self.n;
        for j in 0..self.n {
            let p = t.path(j);
            for x in 0..w {
                let y = p[x] as usize;
                self.ru[x * w + y][(p[x + 1] == p[x]) as usize] += 1;
            }
        }
        self.samples += 1;
    }

    /// Counts `[#R, #U, #D]` at cell `(x, y)`.
    pub fn counts(&self, x: usize, y: usize) -> [u64; 3] {
        let [r, u] = self.ru[x * 2 * self.n + y];
        [r, u, self.samples - r - u]
    }

    /// Empirical lozenge frequencies at cell `(x, y)`.
    pub fn frequencies(&self, x: usize, y: usize) -> [f64; 3] {
        let c = self.counts(x, y);
        let s = self.samples.max(1) as f64;
        [c[0] as f64 / s, c[1] as f64 / s, c[2] as f64 / s]
    }

    /// Empirical density block at `(x, y)`, `0 <= x, y < n`.
    pub fn density(&self, x: usize, y: usize) -> DensityTriple {
        let mut d = DensityTriple::default();
        for (xp, yp) in [(2 * x, 2 * y), (2 * x + 1, 2 * y), (2 * x, 2 * y + 1), (2 * x + 1, 2 * y + 1)] {
            let (r, c) = DensityTriple::slot(xp, yp);
            let f = self.frequencies(xp, yp);
            for k in 0..3 {
                d.p[k][r][c] = f[k];
            }
        }
        d
    }

    /// Frequencies pooled over all hexagon cells of each parity class,
    /// laid out like a density block.
    pub fn parity_density(&self) -> DensityTriple {
        let mut tot = [[[0u64; 3]; 2]; 2];
        let mut cells = [[0u64; 2]; 2];
        for (x, y) in crate::model::hexagon_cells(self.n) {
            let (r, c) = DensityTriple::slot(x, y);
            let k = self.counts(x, y);
            for t in 0..3 {
                tot[r][c][t] += k[t];
            }
            cells[r][c] += 1;
        }
        let mut d = DensityTriple::default();
        for r in 0..2 {
            for c in 0..2 {
                let s = (cells[r][c] * self.samples).max(1) as f64;
                for t in 0..3 {
                    d.p[t][r][c] = tot[r][c][t] as f64 / s;
                }
            }
        }
        d
    }

    /// Associative merge of two runs over the same `n`.
    pub fn merge(&mut self, other: &EmpiricalStats) {
        assert_eq!(self.n, other.n);
        self.samples += other.samples;
        self.updates += other.updates;
        self.flips += other.flips;
        for (a, b) in self.ru.iter_mut().zip(&other.ru) {
            a[0] += b[0];
            a[1] += b[1];
        }
    }
}

/// Sites whose height may toggle between `v` and `v+1`.
pub fn flip_candidates(t: &TilingState) -> Vec<(usize, usize)> {
    let n = t.n();
    let mut out = Vec::new();
    for j in 0..n {
        for x in 1..2 * n {
            if candidate_value(t, j, x).is_some() {
                out.push((j, x));
            }
        }
    }
    out
}

/// `Some(v)` when site `(j, x)` can hold either `v` or `v + 1`.
#[inline]
fn candidate_value(t: &TilingState, j: usize, x: usize) -> Option<i32> {
    let n = t.n();
    if x == 0 || x >= 2 * n {
        return None;
    }
    let v = t.h(j, x - 1);
    if t.h(j, x + 1) != v + 1 {
        return None;
    }
    if j > 0 && t.h(j - 1, x) >= v {
        return None;
    }
    if j + 1 < n && t.h(j + 1, x) <= v + 1 {
        return None;
    }
    Some(v)
}

/// Exponents `(e_v, e_{v+1})` of the two steps through column `x`.
#[inline]
pub fn local_exponents(x: usize, v: i32) -> (u32, u32) {
    let v = v as i64;
    let e = |a, b, c| edge_weight_exponent(a, b, c).unwrap();
    (
        e(x - 1, v, v) + e(x, v, v + 1),
        e(x - 1, v, v + 1) + e(x, v + 1, v + 1),
    )
}

/// Probability that the heat bath picks the lower value `v`.
pub fn lower_probability(alpha: f64, x: usize, v: i32) -> f64 {
    let (a, b) = local_exponents(x, v);
    let wa = alpha.powi(a as i32);
    let wb = alpha.powi(b as i32);
    wa / (wa + wb)
}

#[inline]
fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Resamples `h_j(x)`; returns whether the value changed.
pub fn heat_bath_step(
    t: &mut TilingState,
    site: (usize, usize),
    alpha: f64,
    rng: &mut impl RngCore,
) -> Result<bool> {
    let (j, x) = site;
    if j >= t.n() {
        return Err(domain!("site ({j}, {x}) is not a flip candidate"));
    }
    let v = candidate_value(t, j, x).ok_or_else(|| domain!("site ({j}, {x}) is not a flip candidate"))?;
    let new = if uniform(rng) < lower_probability(alpha, x, v) { v } else { v + 1 };
    let old = t.h(j, x);
    t.set(j, x, new);
    Ok(new != old)
}

/// The four conditional probabilities indexed by `(x mod 2, v mod 2)`.
fn prob_table(alpha: f64) -> [[f64; 2]; 2] {
    let mut p = [[0.0; 2]; 2];
    for (xp, row) in p.iter_mut().enumerate() {
        for (vp, q) in row.iter_mut().enumerate() {
            *q = lower_probability(alpha, xp + 2, vp as i32 + 2);
        }
    }
    p
}

/// One chain: starts at the minimal-weight tiling, runs `burnin` sweeps and
/// then records a sample after each of `sweeps` sweeps.
pub fn run_chain(cfg: &SamplerConfig, chain: usize) -> Result<(TilingState, EmpiricalStats)> {
    cfg.validate()?;
    let n = cfg.params.n;
    let alpha = cfg.params.alpha.value();
    let table = prob_table(alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(chain as u64));
    let mut t = t_max(n)?;
    let mut stats = EmpiricalStats::new(n);
    let per_sweep = n * (2 * n - 1);
    let update = |t: &mut TilingState, j: usize, x: usize, rng: &mut ChaCha8Rng, st: &mut EmpiricalStats| {
        st.updates += 1;
        if let Some(v) = candidate_value(t, j, x) {
            let p = table[x % 2][(v % 2) as usize];
            let new = if uniform(rng) < p { v } else { v + 1 };
            if new != t.h(j, x) {
                st.flips += 1;
                t.set(j, x, new);
            }
        }
    };
    for s in 0..cfg.burnin + cfg.sweeps {
        match cfg.scan {
            ScanOrder::Raster => {
                for j in 0..n {
                    for x in 1..2 * n {
                        update(&mut t, j, x, &mut rng, &mut stats);
                    }
                }
            }
            ScanOrder::RandomSite => {
                for _ in 0..per_sweep {
                    let j = (rng.next_u64() % n as u64) as usize;
                    let x = 1 + (rng.next_u64() % (2 * n as u64 - 1)) as usize;
                    update(&mut t, j, x, &mut rng, &mut stats);
                }
            }
        }
        if s >= cfg.burnin {
            stats.record(&t);
        }
    }
    Ok((t, stats))
}

/// Runs all chains in sequence and merges their statistics; the returned
/// state is the final state of chain 0.
pub fn run(cfg: &SamplerConfig) -> Result<(TilingState, EmpiricalStats)> {
    cfg.validate()?;
    let (first, mut stats) = run_chain(cfg, 0)?;
    for c in 1..cfg.chains {
        stats.merge(&run_chain(cfg, c)?.1);
    }
    Ok((first, stats))
}
