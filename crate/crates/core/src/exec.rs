//! Sequential / data-parallel dispatch for the dense kernels.
//!
//! With the `parallel` feature the row loops run on the rayon global pool.
//! Without it, [`Execution::Parallel`] silently degrades to sequential, so
//! callers never need their own `cfg` gates.

use crate::hilbert::C64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread over a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Calls `f(row, row_slice)` for every row of a row-major buffer.
pub(crate) fn for_each_row<F>(data: &mut [C64], cols: usize, exec: Execution, f: F)
where
    F: Fn(usize, &mut [C64]) + Send + Sync,
{
    if cols == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(cols).enumerate().for_each(|(r, row)| f(r, row));
        return;
    }
    let _ = exec;
    data.chunks_mut(cols).enumerate().for_each(|(r, row)| f(r, row));
}

/// Maps `0..len` through `f`, preserving order.
pub(crate) fn map_range<T, F>(len: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}
