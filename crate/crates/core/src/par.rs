//! Data-parallel helpers.
//!
//! With the `parallel` feature the helpers fan out over rayon's pool; without
//! it, or inside [`sequential`], they run on the calling thread. Results are
//! always collected in index order so reductions over them are deterministic.

use std::cell::Cell;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with all helpers in this module pinned to the calling thread.
pub fn sequential<R>(f: impl FnOnce() -> R) -> R {
    struct Restore(bool);
    impl Drop for Restore {
        fn drop(&mut self) {
            FORCE_SEQUENTIAL.with(|c| c.set(self.0));
        }
    }
    let _restore = Restore(FORCE_SEQUENTIAL.with(|c| c.replace(true)));
    f()
}

/// True when the helpers will dispatch to rayon.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.with(|c| c.get())
}

/// `(0..n).map(f)` collected in order.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// `items.iter().map(f)` collected in order.
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// `map_range` followed by an in-order fold, so floating sums do not depend
/// on scheduling.
pub fn sum_range<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_range(n, f).into_iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_flag_is_scoped() {
        let outer = is_parallel();
        sequential(|| assert!(!is_parallel()));
        assert_eq!(is_parallel(), outer);
    }

    #[test]
    fn order_is_preserved() {
        let par = map_range(1000, |i| i * i);
        let seq = sequential(|| map_range(1000, |i| i * i));
        assert_eq!(par, seq);
        assert_eq!(par[999], 999 * 999);
    }

    #[test]
    fn sums_match_bitwise() {
        let f = |i: usize| (i as f64 * 0.1).sin() / (1.0 + i as f64);
        let a = sum_range(10_000, f);
        let b = sequential(|| sum_range(10_000, f));
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
