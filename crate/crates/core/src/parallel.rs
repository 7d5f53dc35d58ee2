//! Deterministic replica-parallel reductions.
//!
//! Sample budgets are cut into fixed-size chunks; chunk `i` draws from
//! `rng.substream(i)`. Chunks may run on any number of worker threads but
//! their results are merged strictly in chunk order, so the merged
//! statistics are bit-identical for one worker or many.

use crate::rng::RngHandle;
use rayon::prelude::*;

/// Samples per chunk.
pub const CHUNK: u64 = 2048;

/// Runs `work(chunk_rng, count)` over all chunks of `total` samples and
/// folds the results left to right with `merge`.
pub fn chunked_reduce<T, W, M>(total: u64, rng: &RngHandle, work: W, merge: M) -> T
where
    T: Send + Default,
    W: Fn(RngHandle, u64) -> T + Sync,
    M: Fn(T, T) -> T,
{
    let chunks = total.div_ceil(CHUNK);
    let parts: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(total - c * CHUNK);
            work(rng.substream(c), count)
        })
        .collect();
    parts.into_iter().fold(T::default(), merge)
}

/// Runs `f` on a dedicated pool of `replicas` threads.
pub fn with_replicas<R: Send>(replicas: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(replicas.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Moments;
    use rand::Rng;

    fn run() -> Moments {
        chunked_reduce(
            10_000,
            &RngHandle::new(3),
            |h, n| {
                let mut rng = h.rng();
                let mut m = Moments::default();
                for _ in 0..n {
                    m.push(rng.random::<f64>());
                }
                m
            },
            Moments::merge,
        )
    }

    #[test]
    fn serial_and_parallel_agree_bitwise() {
        let serial = with_replicas(1, run);
        let parallel = with_replicas(8, run);
        assert_eq!(serial, parallel);
        assert_eq!(serial.n, 10_000);
    }
}
