//! Data-parallel helpers.
//!
//! Every parallel loop in the crate goes through [`map_indexed`] or
//! [`map_slice`]. With the `parallel` feature these dispatch to rayon; without
//! it (or inside [`scoped`] with [`Execution::Sequential`]) they run as plain
//! iterators. Results are always collected in input order and any reduction
//! over them is done sequentially by the caller, so outputs are bit-identical
//! between the two modes.

use std::cell::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Execution {
    /// The mode compiled in: parallel when the `parallel` feature is on.
    pub const fn compiled() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

thread_local! {
    static MODE: Cell<Execution> = const { Cell::new(Execution::compiled()) };
}

/// Current execution mode for this thread.
pub fn current() -> Execution {
    MODE.with(|m| m.get())
}

/// Runs `f` with the given execution mode on the current thread, restoring the
/// previous mode afterwards. Requesting `Parallel` without the feature is a
/// no-op.
pub fn scoped<R>(mode: Execution, f: impl FnOnce() -> R) -> R {
    let mode = match mode {
        Execution::Parallel if !cfg!(feature = "parallel") => Execution::Sequential,
        m => m,
    };
    struct Restore(Execution);
    impl Drop for Restore {
        fn drop(&mut self) {
            MODE.with(|m| m.set(self.0));
        }
    }
    let _restore = Restore(MODE.with(|m| m.replace(mode)));
    f()
}

/// `(0..n).map(f)` collected in order.
pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if current() == Execution::Parallel && n > 1 {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// `items.iter().map(f)` collected in order.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if current() == Execution::Parallel && items.len() > 1 {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}
