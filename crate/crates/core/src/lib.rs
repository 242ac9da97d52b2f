//! Function layout optimization via recursive balanced graph partitioning.
//!
//! The central abstraction is a bipartite graph between *function* vertices
//! and *utility* vertices, where each utility expresses a locality preference
//! for its adjacent functions. The partitioner recursively bisects the
//! function set, refining each split with a Kernighan-Lin-style local search,
//! and produces a permutation of functions.
//!
//! Two front-ends feed the same partitioner:
//!
//! * [`startup`] builds utilities from start-up traces (prefixes under a
//!   threshold scheme) and simulates page faults to evaluate layouts.
//! * [`compression`] builds utilities from shared instruction hashes and
//!   provides a distinct-k-mer sliding-window proxy for LZ compressibility.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats, and the CLI live
//! in the companion `fnlayout-cli` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod compression;
pub mod graph;
pub mod objective;
pub mod partition;
pub mod startup;

pub use graph::{BipartiteGraph, FunctionId, UtilityId};
pub use objective::{CostModel, ObjectiveKind, Side, SplitCounts};
pub use partition::{Joiner, Layout, PartitionerConfig, Sequential};
