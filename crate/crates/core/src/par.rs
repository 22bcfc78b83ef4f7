//! Data-parallel execution of independent per-index work.
//!
//! Fuzz campaigns, acceptance sweeps, and parameter grids all map a pure
//! function over an index range. With the `parallel` feature (default)
//! the work fans out over rayon; without it, or when sequential mode is
//! requested explicitly, the same code runs on one thread. The benchmark
//! suite compares both paths on identical workloads.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How to execute an index-mapped workload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    /// Rayon when the `parallel` feature is enabled; otherwise falls back
    /// to sequential execution.
    Parallel,
}

/// Maps `f` over `0..n`, preserving index order in the result.
pub fn map_indices<T, F>(n: u64, mode: ExecMode, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match mode {
        ExecMode::Sequential => (0..n).map(f).collect(),
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                (0..n).into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..n).map(f).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree() {
        let seq = map_indices(100, ExecMode::Sequential, |i| i * i);
        let par = map_indices(100, ExecMode::Parallel, |i| i * i);
        assert_eq!(seq, par);
    }
}
