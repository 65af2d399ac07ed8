//! Data-parallel helpers. With the `parallel` feature these fan out over the
//! rayon pool; without it they run as plain iterators with identical results.

use crate::linalg::nan_max;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(0..n).map(f).collect()`, in index order.
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Largest value of `f` over `0..n` (0 when empty). NaN propagates.
pub fn map_max<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).reduce(|| 0.0, nan_max)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).fold(0.0, nan_max)
    }
}

/// Like [`map_max`] but also reports the first index attaining the max.
pub fn map_argmax<F>(n: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let vals = map_collect(n, f);
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in vals.into_iter().enumerate() {
        match best {
            _ if v.is_nan() => return Some((i, v)),
            Some((_, b)) if b >= v => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
