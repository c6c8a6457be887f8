//! Deterministic task fan-out and per-task seed splitting.

use std::num::NonZeroUsize;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "JELLIUM_THREADS";

/// SplitMix64 finalizer applied to `base + (index + 1)·γ`.
///
/// Task `i` of a run seeded with `base` always gets `split_seed(base, i)`,
/// independent of how tasks are scheduled.
pub fn split_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn worker_count(serial: bool) -> usize {
    if serial {
        return 1;
    }
    let avail = std::thread::available_parallelism().map_or(1, NonZeroUsize::get);
    match std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        Some(cap) if cap >= 1 => avail.min(cap),
        _ => avail,
    }
}

/// Runs `f(0..n)` and returns results in index order. Output is the same for
/// any worker count since each task depends only on its index.
pub fn map_tasks<T, F>(n: usize, serial: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = worker_count(serial).min(n.max(1));
    if workers <= 1 {
        return (0..n).map(&f).collect();
    }
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        let f = &f;
        let chunks: Vec<(usize, &mut [Option<T>])> = {
            let per = n.div_ceil(workers);
            let mut out = Vec::new();
            let mut rest: &mut [Option<T>] = &mut slots;
            let mut start = 0;
            while !rest.is_empty() {
                let take = per.min(rest.len());
                let (head, tail) = rest.split_at_mut(take);
                out.push((start, head));
                start += take;
                rest = tail;
            }
            out
        };
        for (start, chunk) in chunks {
            scope.spawn(move || {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(f(start + k));
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("task completed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let s: Vec<u64> = (0..100).map(|i| split_seed(42, i)).collect();
        let mut d = s.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), 100);
        assert_eq!(split_seed(42, 7), s[7]);
        assert_ne!(split_seed(43, 0), split_seed(42, 0));
    }

    #[test]
    fn parallel_and_serial_agree() {
        let f = |i: usize| split_seed(1, i as u64) % 1000;
        assert_eq!(map_tasks(37, true, f), map_tasks(37, false, f));
    }
}
