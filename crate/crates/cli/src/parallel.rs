//! Rayon-backed fork-join joiner for the partitioner recursion.

use fnlayout_core::partition::Joiner;

/// Runs the two recursive calls via `rayon::join`. Results are identical to
/// the sequential joiner because every recursion node derives its RNG from
/// the node path, not from execution order.
pub struct RayonJoiner;

impl Joiner for RayonJoiner {
    fn join<A, B, RA, RB>(&self, a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send,
    {
        rayon::join(a, b)
    }
}
