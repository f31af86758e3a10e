//! Data-parallel driver helpers.
//!
//! With the `parallel` feature (default) these fan work out over rayon;
//! without it they degrade to plain sequential iteration. Both paths keep
//! input order in the output, and all arithmetic stays inside one work item,
//! so results are byte-identical across thread counts and feature choices.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub(crate) fn ordered_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn ordered_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}

/// Maps `f` over `items` and concatenates the per-item results in input
/// order.
pub(crate) fn ordered_flat_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> Vec<R> + Sync + Send,
{
    ordered_map(items, f).into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let input: Vec<u64> = (0..10_000).collect();
        let out = ordered_map(input.clone(), |x| x * 2);
        assert_eq!(out, input.iter().map(|x| x * 2).collect::<Vec<_>>());

        let flat = ordered_flat_map(vec![1u64, 2, 3], |x| vec![x; x as usize]);
        assert_eq!(flat, vec![1, 2, 2, 3, 3, 3]);
    }
}
