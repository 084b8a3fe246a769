//! Deterministic random substreams.
//!
//! Work is cut into fixed-size chunks; chunk `i` of a run seeded with `seed`
//! draws from ChaCha stream `i`. Results therefore depend on `(seed, chunk
//! size)` only, never on how many workers execute the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of samples produced per substream.
pub const CHUNK: usize = 1024;

pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `f(chunk_index, range)` for every chunk of `0..n` and concatenates the
/// outputs in chunk order.
pub fn map_chunks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, std::ops::Range<usize>) -> Vec<T> + Sync + Send,
{
    let chunks: Vec<usize> = (0..n.div_ceil(CHUNK)).collect();
    let run = |c: &usize| {
        let start = c * CHUNK;
        f(*c, start..(start + CHUNK).min(n))
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<Vec<T>> = {
        use rayon::prelude::*;
        chunks.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Vec<T>> = chunks.iter().map(run).collect();
    parts.into_iter().flatten().collect()
}

/// Parallel map over a slice, preserving order.
pub fn par_map<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Runs `f` inside a pool of `workers` threads (0 = library default).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if workers > 0 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                return pool.install(f);
            }
        }
        f()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}
