//! Batch construction: optional seeded shuffle, then contiguous chunks.

use alloc::vec::Vec;

use crate::rng::Rng;

/// Splits `items` into batches of `batch_size` (final short batch kept).
/// With `shuffle` set, the order is permuted by `Rng::new(seed)` first.
///
/// Panics if `batch_size` is 0.
pub fn make_batches<T: Clone>(items: &[T], batch_size: usize, seed: u64, shuffle: bool) -> Vec<Vec<T>> {
    assert!(batch_size >= 1, "batch_size must be at least 1");
    let mut order: Vec<T> = items.to_vec();
    if shuffle {
        Rng::new(seed).shuffle(&mut order);
    }
    order.chunks(batch_size).map(|c| c.to_vec()).collect()
}
