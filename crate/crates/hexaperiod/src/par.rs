//! Scoped-thread helpers. Work is split by index and results are gathered
//! in index order, so outputs never depend on the thread count.

use std::thread;

use hexaperiod_core::sample::{run_chain, EmpiricalStats, SamplerConfig};
use hexaperiod_core::{Result, TilingState};

/// Thread count: the explicit value, else `HEXAPERIOD_THREADS`, else the
/// number of available cores.
pub fn resolve_threads(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var("HEXAPERIOD_THREADS").ok().and_then(|v| v.trim().parse().ok()))
        .filter(|&t| t > 0)
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
}

/// `f(0), .., f(len - 1)` on up to `threads` workers, in order.
pub fn map_indexed<T, F>(len: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.clamp(1, len.max(1));
    if threads == 1 {
        return (0..len).map(&f).collect();
    }
    let mut slots: Vec<Option<T>> = (0..len).map(|_| None).collect();
    let chunk = len.div_ceil(threads);
    thread::scope(|sc| {
        for (ci, part) in slots.chunks_mut(chunk).enumerate() {
            let f = &f;
            sc.spawn(move || {
                for (k, slot) in part.iter_mut().enumerate() {
                    *slot = Some(f(ci * chunk + k));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("every slot filled")).collect()
}

/// All chains of `cfg` in parallel, merged in chain order. Same result as
/// the sequential runner in the core crate.
pub fn run_chains(cfg: &SamplerConfig, threads: usize) -> Result<(TilingState, EmpiricalStats)> {
    cfg.validate()?;
    let mut results = map_indexed(cfg.chains, threads, |c| run_chain(cfg, c)).into_iter();
    let (first, mut stats) = results.next().expect("at least one chain")?;
    for r in results {
        stats.merge(&r?.1);
    }
    Ok((first, stats))
}
