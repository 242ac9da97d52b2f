//! Start-up model: traces, reservoir sampling, threshold-utility graph
//! construction, and the page-fault simulator.
//!
//! A trace is the sequence of functions ordered by first-execution timestamp
//! during one cold start. The BPS graph has one utility per (trace,
//! threshold) pair, adjacent to the first `t` functions of the trace, so the
//! partitioner tries to keep every trace prefix consecutive in the layout.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{BipartiteGraph, FunctionId};
use crate::partition::Layout;

/// Default reservoir capacity for trace sampling.
pub const DEFAULT_SAMPLE_CAP: usize = 300;
/// Default page size in bytes.
pub const DEFAULT_PAGE_SIZE: u64 = 16384;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StartupError {
    /// A function appeared twice within one trace.
    DuplicateInTrace(FunctionId),
    /// Thresholds must be >= 1 and strictly increasing.
    InvalidThresholds,
    /// Graph construction or simulation needs at least one trace.
    EmptyTraceSet,
    /// All function sizes must be at least one byte, pages at least one byte.
    InvalidPagingModel,
    /// A trace referenced a function missing from the layout.
    FunctionNotPlaced(FunctionId),
    /// A trace referenced a function without a size entry.
    FunctionNotSized(FunctionId),
}

impl fmt::Display for StartupError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StartupError::DuplicateInTrace(id) => {
                write!(f, "function {id} appears twice in one trace")
            }
            StartupError::InvalidThresholds => {
                write!(f, "thresholds must be >= 1 and strictly increasing")
            }
            StartupError::EmptyTraceSet => write!(f, "trace set is empty"),
            StartupError::InvalidPagingModel => {
                write!(f, "page size and function sizes must be >= 1 byte")
            }
            StartupError::FunctionNotPlaced(id) => {
                write!(f, "trace function {id} is not present in the layout")
            }
            StartupError::FunctionNotSized(id) => {
                write!(f, "trace function {id} has no size entry")
            }
        }
    }
}

impl core::error::Error for StartupError {}

/// Ordered first-execution sequence of one profiled run; no duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    sequence: Vec<FunctionId>,
}

impl Trace {
    pub fn new(sequence: Vec<FunctionId>) -> Result<Self, StartupError> {
        let mut seen = HashSet::with_capacity(sequence.len());
        for &f in &sequence {
            if !seen.insert(f) {
                return Err(StartupError::DuplicateInTrace(f));
            }
        }
        Ok(Trace { sequence })
    }

    pub fn sequence(&self) -> &[FunctionId] {
        &self.sequence
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }
}

/// A collection of traces, typically the output of reservoir sampling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceSet {
    pub traces: Vec<Trace>,
}

impl TraceSet {
    pub fn new(traces: Vec<Trace>) -> Self {
        TraceSet { traces }
    }

    pub fn max_len(&self) -> usize {
        self.traces.iter().map(Trace::len).max().unwrap_or(0)
    }

    /// Union of all trace members, ascending.
    pub fn function_universe(&self) -> Vec<FunctionId> {
        let mut set: Vec<FunctionId> = self
            .traces
            .iter()
            .flat_map(|t| t.sequence.iter().copied())
            .collect();
        set.sort_unstable();
        set.dedup();
        set
    }
}

/// Keeps a uniform sample of at most `cap` traces from a stream.
///
/// When trace `i` (1-based) arrives past capacity it is kept with
/// probability `cap/i`, replacing a uniformly chosen resident.
pub fn reservoir_sample<I>(stream: I, cap: usize, seed: u64) -> TraceSet
where
    I: IntoIterator<Item = Trace>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample: Vec<Trace> = Vec::with_capacity(cap);
    for (i, trace) in stream.into_iter().enumerate() {
        if sample.len() < cap {
            sample.push(trace);
        } else if rng.gen_range(0..i + 1) < cap {
            let victim = rng.gen_range(0..cap);
            sample[victim] = trace;
        }
    }
    TraceSet::new(sample)
}

/// Strictly increasing prefix-length thresholds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdScheme {
    thresholds: Vec<u32>,
}

impl ThresholdScheme {
    pub fn new(thresholds: Vec<u32>) -> Result<Self, StartupError> {
        if thresholds.is_empty() || thresholds[0] < 1 {
            return Err(StartupError::InvalidThresholds);
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(StartupError::InvalidThresholds);
        }
        Ok(ThresholdScheme { thresholds })
    }

    /// Geometric doubling 1, 2, 4, ... until the max trace length is covered.
    /// Thresholds past a trace's end are clipped at build time, so every
    /// trace still gets a full-prefix utility.
    pub fn doubling(max_trace_len: usize) -> Self {
        let mut thresholds = vec![1u32];
        while (*thresholds.last().unwrap() as usize) < max_trace_len {
            let next = thresholds.last().unwrap().saturating_mul(2);
            thresholds.push(next);
        }
        ThresholdScheme { thresholds }
    }

    pub fn thresholds(&self) -> &[u32] {
        &self.thresholds
    }
}

/// BPS bipartite graph plus the mapping from graph-local function vertices
/// back to the caller's function ids (the hot universe, ascending).
#[derive(Debug, Clone)]
pub struct BpsGraph {
    pub graph: BipartiteGraph,
    pub functions: Vec<FunctionId>,
}

/// Builds the threshold-utility graph: one utility per (trace, threshold)
/// with the threshold clipped to the trace length (clipped duplicates are
/// emitted once per trace), edges to the first `t` functions of the trace.
/// Degree-one utilities (threshold 1) are dropped by the graph builder.
pub fn build_bps_graph(
    traces: &TraceSet,
    scheme: &ThresholdScheme,
) -> Result<BpsGraph, StartupError> {
    if traces.traces.is_empty() {
        return Err(StartupError::EmptyTraceSet);
    }
    let functions = traces.function_universe();
    let mut local_of = hashbrown::HashMap::with_capacity(functions.len());
    for (local, &global) in functions.iter().enumerate() {
        local_of.insert(global, local as FunctionId);
    }

    let mut edges: Vec<(FunctionId, u32)> = Vec::new();
    let mut next_utility = 0u32;
    for trace in &traces.traces {
        if trace.is_empty() {
            continue;
        }
        let mut effective: Vec<usize> = scheme
            .thresholds()
            .iter()
            .map(|&t| (t as usize).min(trace.len()))
            .collect();
        effective.dedup(); // clipped thresholds collapse to one full-trace utility
        for t in effective {
            for &f in &trace.sequence()[..t] {
                edges.push((local_of[&f], next_utility));
            }
            next_utility += 1;
        }
    }

    let graph = BipartiteGraph::build(&edges, functions.len())
        .expect("bps edges are constructed in range");
    Ok(BpsGraph { graph, functions })
}

/// Byte-level paging model: function sizes indexed by function id, fixed
/// page size, pages never evicted.
#[derive(Debug, Clone)]
pub struct PagingModel {
    pub page_size: u64,
    pub function_sizes: Vec<u64>,
}

impl PagingModel {
    pub fn new(page_size: u64, function_sizes: Vec<u64>) -> Result<Self, StartupError> {
        if page_size < 1 || function_sizes.iter().any(|&s| s < 1) {
            return Err(StartupError::InvalidPagingModel);
        }
        Ok(PagingModel {
            page_size,
            function_sizes,
        })
    }

    pub fn uniform(n_functions: usize, size: u64, page_size: u64) -> Result<Self, StartupError> {
        Self::new(page_size, vec![size; n_functions])
    }
}

/// Average page faults `p(t)` for `t = 1..=T` across a trace set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationCurve {
    pub values: Vec<f64>,
}

impl EvaluationCurve {
    /// Discrete area under the curve, the quantity layouts are compared by.
    pub fn area(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Simulates cold-start paging for `layout` against every trace and averages
/// the fault counts. Functions are placed at prefix-sum byte offsets in
/// layout order; executing a function touches every page it spans; fetched
/// pages stay resident.
pub fn simulate_page_faults(
    layout: &Layout,
    traces: &TraceSet,
    model: &PagingModel,
) -> Result<EvaluationCurve, StartupError> {
    if traces.traces.is_empty() {
        return Err(StartupError::EmptyTraceSet);
    }
    let mut offset_of: Vec<Option<u64>> = vec![None; model.function_sizes.len()];
    let mut offset = 0u64;
    for &f in &layout.order {
        let size = *model
            .function_sizes
            .get(f as usize)
            .ok_or(StartupError::FunctionNotSized(f))?;
        offset_of[f as usize] = Some(offset);
        offset += size;
    }

    let horizon = traces.max_len();
    let mut sums = vec![0.0f64; horizon];
    for trace in &traces.traces {
        let mut resident: HashSet<u64> = HashSet::new();
        let mut faults = 0u64;
        for (t, &f) in trace.sequence().iter().enumerate() {
            let off = offset_of
                .get(f as usize)
                .copied()
                .flatten()
                .ok_or(StartupError::FunctionNotPlaced(f))?;
            let size = model.function_sizes[f as usize];
            let first_page = off / model.page_size;
            let last_page = (off + size - 1) / model.page_size;
            for page in first_page..=last_page {
                if resident.insert(page) {
                    faults += 1;
                }
            }
            sums[t] += faults as f64;
        }
        // Shorter traces fault no further; extend their last value.
        for t in trace.len()..horizon {
            sums[t] += faults as f64;
        }
    }
    let n = traces.traces.len() as f64;
    Ok(EvaluationCurve {
        values: sums.into_iter().map(|s| s / n).collect(),
    })
}
