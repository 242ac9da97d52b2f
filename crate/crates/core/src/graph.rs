//! Immutable bipartite graph between function and utility vertices.
//!
//! Function ids are dense integers in `[0, n)`; string names stay at the IO
//! boundary. Utility ids are re-densified at build time after dropping
//! utilities of degree below two, whose cost contribution is constant under
//! any split and therefore cannot affect move gains.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Dense index of a function vertex.
pub type FunctionId = u32;
/// Dense index of a utility vertex.
pub type UtilityId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    /// An edge referenced a function id at or beyond `n_functions`.
    FunctionOutOfRange {
        function: FunctionId,
        utility: UtilityId,
        n_functions: usize,
    },
    /// A subset passed to `induce_subgraph` contained an id twice.
    DuplicateSubsetId(FunctionId),
    /// A subset passed to `induce_subgraph` referenced a missing function.
    InvalidSubsetId(FunctionId),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::FunctionOutOfRange {
                function,
                utility,
                n_functions,
            } => write!(
                f,
                "edge ({function}, {utility}) references function {function} outside [0, {n_functions})"
            ),
            GraphError::DuplicateSubsetId(id) => write!(f, "duplicate function id {id} in subset"),
            GraphError::InvalidSubsetId(id) => write!(f, "invalid function id {id} in subset"),
        }
    }
}

impl core::error::Error for GraphError {}

/// Immutable bipartite graph in CSR form, function to utilities.
///
/// Utility-to-function adjacency is not materialized; the partitioner only
/// needs per-utility degree counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    n_functions: usize,
    offsets: Vec<usize>,
    adjacency: Vec<UtilityId>,
    utility_degrees: Vec<u32>,
}

impl BipartiteGraph {
    /// Builds a graph from an edge list. Duplicate edges are removed,
    /// utilities with resulting degree below two are dropped, and utility
    /// ids are re-densified (preserving their relative order).
    pub fn build(
        edges: &[(FunctionId, UtilityId)],
        n_functions: usize,
    ) -> Result<Self, GraphError> {
        for &(f, u) in edges {
            if (f as usize) >= n_functions {
                return Err(GraphError::FunctionOutOfRange {
                    function: f,
                    utility: u,
                    n_functions,
                });
            }
        }
        // Sort by (utility, function) to dedup and count degrees in one pass.
        let mut sorted: Vec<(UtilityId, FunctionId)> =
            edges.iter().map(|&(f, u)| (u, f)).collect();
        sorted.sort_unstable();
        sorted.dedup();

        // Assign dense ids to utilities that keep degree >= 2.
        let mut kept: Vec<(FunctionId, UtilityId)> = Vec::new();
        let mut n_utilities: u32 = 0;
        let mut utility_degrees: Vec<u32> = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let u = sorted[i].0;
            let mut j = i;
            while j < sorted.len() && sorted[j].0 == u {
                j += 1;
            }
            let degree = (j - i) as u32;
            if degree >= 2 {
                for &(_, f) in &sorted[i..j] {
                    kept.push((f, n_utilities));
                }
                utility_degrees.push(degree);
                n_utilities += 1;
            }
            i = j;
        }

        // CSR by function; adjacency within a function sorted by utility id.
        let mut counts = vec![0usize; n_functions];
        for &(f, _) in &kept {
            counts[f as usize] += 1;
        }
        let mut offsets = vec![0usize; n_functions + 1];
        for f in 0..n_functions {
            offsets[f + 1] = offsets[f] + counts[f];
        }
        let mut adjacency = vec![0 as UtilityId; kept.len()];
        let mut cursor = offsets.clone();
        kept.sort_unstable();
        for &(f, u) in &kept {
            adjacency[cursor[f as usize]] = u;
            cursor[f as usize] += 1;
        }

        Ok(BipartiteGraph {
            n_functions,
            offsets,
            adjacency,
            utility_degrees,
        })
    }

    pub fn n_functions(&self) -> usize {
        self.n_functions
    }

    pub fn n_utilities(&self) -> usize {
        self.utility_degrees.len()
    }

    /// Number of edges after dedup and degree filtering.
    pub fn n_edges(&self) -> usize {
        self.adjacency.len()
    }

    /// Utilities adjacent to `f`, sorted ascending.
    pub fn utilities_of(&self, f: FunctionId) -> &[UtilityId] {
        &self.adjacency[self.offsets[f as usize]..self.offsets[f as usize + 1]]
    }

    pub fn utility_degree(&self, u: UtilityId) -> u32 {
        self.utility_degrees[u as usize]
    }

    /// Exports the edge list; rebuilding from it yields an identical graph.
    pub fn edge_list(&self) -> Vec<(FunctionId, UtilityId)> {
        let mut out = Vec::with_capacity(self.adjacency.len());
        for f in 0..self.n_functions {
            for &u in self.utilities_of(f as FunctionId) {
                out.push((f as FunctionId, u));
            }
        }
        out
    }

    /// Extracts the subgraph induced by `subset`. The `i`-th subset entry
    /// becomes function `i` of the result; the returned mapping recovers
    /// parent ids. Utilities are re-filtered by the degree-two rule.
    pub fn induce_subgraph(
        &self,
        subset: &[FunctionId],
    ) -> Result<(BipartiteGraph, Vec<FunctionId>), GraphError> {
        let mut seen = vec![false; self.n_functions];
        for &f in subset {
            if (f as usize) >= self.n_functions {
                return Err(GraphError::InvalidSubsetId(f));
            }
            if seen[f as usize] {
                return Err(GraphError::DuplicateSubsetId(f));
            }
            seen[f as usize] = true;
        }
        let mut edges = Vec::new();
        for (new_id, &f) in subset.iter().enumerate() {
            for &u in self.utilities_of(f) {
                edges.push((new_id as FunctionId, u));
            }
        }
        let sub = BipartiteGraph::build(&edges, subset.len())?;
        Ok((sub, subset.to_vec()))
    }
}
