//! IO, file formats, comparators, and the end-to-end layout pipeline.
//!
//! The algorithmic core lives in `fnlayout-core`; this crate adds the trace
//! and manifest file formats, caller-order inheritance, the comparator
//! layouts, a rayon-backed fork-join joiner, and the `fnlayout` binary.

pub mod formats;
pub mod parallel;
pub mod pipeline;

pub use parallel::RayonJoiner;
