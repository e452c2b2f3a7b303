use serde::{Deserialize, Serialize};

/// Samples per independent work item. Each chunk draws from its own
/// sub-stream, so results never depend on how chunks are scheduled.
pub const CHUNK_SAMPLES: u64 = 4096;

/// How independent work items are executed. Results are identical either
/// way; without the `parallel` feature both variants run sequentially.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Evaluates `f(0), …, f(n − 1)` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Splits `n_samples` into [`CHUNK_SAMPLES`]-sized chunks and maps
    /// `f(chunk_index, chunk_len)` over them in index order.
    pub fn map_chunks<T, F>(self, n_samples: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64, u64) -> T + Sync + Send,
    {
        let n_chunks = n_samples.div_ceil(CHUNK_SAMPLES) as usize;
        self.map(n_chunks, |c| {
            let start = c as u64 * CHUNK_SAMPLES;
            f(c as u64, CHUNK_SAMPLES.min(n_samples - start))
        })
    }
}

/// Caps the worker count of the global pool used by
/// [`Execution::Parallel`]. Must run before any parallel work; without the
/// `parallel` feature it does nothing.
pub fn init_workers(n: usize) -> Result<(), String> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_all_samples_in_order() {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let parts = exec.map_chunks(10_000, |i, len| (i, len));
            assert_eq!(parts, vec![(0, 4096), (1, 4096), (2, 1808)]);
        }
        assert!(Execution::Parallel.map_chunks(0, |_, len| len).is_empty());
    }
}
