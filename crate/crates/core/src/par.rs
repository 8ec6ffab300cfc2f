//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the helpers dispatch to rayon unless the
//! calling thread has switched to [`Execution::Sequential`]. Without the
//! feature everything runs on the calling thread.
//!
//! Reductions never depend on the split chosen by the scheduler: callers
//! produce per-item (or fixed-size chunk) results and fold them in index
//! order, so results are bit-identical across thread counts.

use std::cell::Cell;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

thread_local! {
    static MODE: Cell<Execution> = Cell::new(Execution::default());
}

/// Current mode for the calling thread.
pub fn execution() -> Execution {
    MODE.with(|m| m.get())
}

/// Run `f` with the calling thread pinned to `mode`.
pub fn with_execution<R>(mode: Execution, f: impl FnOnce() -> R) -> R {
    struct Restore(Execution);
    impl Drop for Restore {
        fn drop(&mut self) {
            MODE.with(|m| m.set(self.0));
        }
    }
    let _restore = Restore(MODE.with(|m| m.replace(mode)));
    f()
}

#[cfg(feature = "parallel")]
fn parallel() -> bool {
    execution() == Execution::Parallel
}

/// Order-preserving map over `0..n`.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Order-preserving map over a slice.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// Apply `f(row_index, row)` to each `width`-sized row of `data`.
pub fn for_each_row_mut<T, F>(data: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
        return;
    }
    data.chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
}

/// Sum of `f(i)` over `0..n`, folded in index order.
pub fn sum_range<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_range(n, f).into_iter().sum()
}
