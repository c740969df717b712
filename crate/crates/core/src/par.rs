//! Data-parallel mapping with a sequential fallback.
//!
//! Batch work (Haar samples, parameter grids, oracle sweeps) is expressed
//! as an index-ordered map. With the `parallel` feature the map runs on
//! rayon's thread pool; without it the same closure runs in a plain loop.
//! Output order is the input order either way, so results are identical
//! and deterministic regardless of the feature or thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving input order in the output.
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Map over `0..n`, preserving index order in the output.
pub fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
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

/// Fallible map over `0..n`; the first error (by index order) wins.
pub fn try_map_indices<U, F>(n: usize, f: F) -> crate::Result<Vec<U>>
where
    U: Send,
    F: Fn(usize) -> crate::Result<U> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        let results: Vec<crate::Result<U>> = (0..n).into_par_iter().map(f).collect();
        results.into_iter().collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Always-sequential variant of [`map_indices`], kept callable with the
/// `parallel` feature enabled so benchmarks can compare both paths.
pub fn map_indices_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_input_order() {
        let squares = map_indices(100, |i| i * i);
        let seq = map_indices_seq(100, |i| i * i);
        assert_eq!(squares, seq);
    }

    #[test]
    fn try_map_propagates_error() {
        let r = try_map_indices(10, |i| {
            if i == 7 {
                Err(crate::Error::InvalidSpec("boom".into()))
            } else {
                Ok(i)
            }
        });
        assert!(r.is_err());
    }
}
