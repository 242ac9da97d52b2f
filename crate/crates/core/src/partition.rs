//! Recursive balanced graph bisection with local-search refinement.
//!
//! Each recursion node splits its function set into two near-equal halves
//! (shuffle-then-halve), then runs up to `max_iterations` refinement rounds.
//! A round computes all move gains against per-utility (L, R) counters,
//! sorts both sides by gain, and walks the two sorted lists in near-lockstep,
//! exchanging pairs while their combined gain is positive. Gains are not
//! updated within a round; counters are rebuilt once per round. Each vertex
//! skips its move with a fixed probability (its partner then pairs with the
//! next vertex on that side), which keeps the search from cycling between
//! equivalent splits.
//!
//! Every node derives its RNG from `(seed, node path)`, so results are
//! identical no matter how the fork-join recursion is scheduled.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{BipartiteGraph, FunctionId};
use crate::objective::{CostModel, ObjectiveKind, Side, SplitCounts};

/// Default for [`PartitionerConfig::materialize_threshold`].
pub const DEFAULT_MATERIALIZE_THRESHOLD: usize = 1 << 12;

/// A pair exchange must improve the estimated cost by more than this margin.
/// Treating numerically-tiny combined gains as zero keeps the decision
/// sequence invariant under positive rescaling of the cost model (e.g. a
/// different logarithm base) and avoids churn on cost-neutral exchanges.
const GAIN_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct PartitionerConfig {
    /// Recursion depth cap; the effective depth is `min(ceil(log2 n), max_depth)`.
    pub max_depth: u32,
    /// Local search rounds per bisection.
    pub max_iterations: u32,
    /// Probability that a vertex skips its move within an exchange round.
    pub skip_probability: f64,
    pub objective: ObjectiveKind,
    pub seed: u64,
    /// Recursion levels processed via the fork-join joiner; deeper nodes run
    /// sequentially.
    pub parallel_depth: u32,
    /// Subsets at least this large are materialized as induced subgraphs
    /// before recursing; smaller ones reuse the parent graph with an
    /// active-subset mask. The two paths are behaviorally identical; the
    /// threshold only trades construction cost against memory locality.
    pub materialize_threshold: usize,
    /// Number of independent refinement attempts per bisection; the attempt
    /// with the lowest refined cost wins. The local search only performs
    /// pair exchanges with positive combined gain, so it cannot cross cost
    /// barriers between basins; independent restarts recover most of that
    /// lost ground. Applies to subsets no larger than
    /// [`restart_max_size`](Self::restart_max_size); larger ones get one
    /// attempt.
    pub restarts: usize,
    /// Largest subset size that still gets multiple refinement attempts.
    /// Small subsets are where a single bad basin visibly scrambles the
    /// final order, and restarting them is cheap; restarting near the root
    /// of a large instance would multiply total runtime instead.
    pub restart_max_size: usize,
}

impl Default for PartitionerConfig {
    fn default() -> Self {
        PartitionerConfig {
            max_depth: 16,
            max_iterations: 20,
            skip_probability: 0.1,
            objective: ObjectiveKind::UniformLogGap,
            seed: 0,
            parallel_depth: 4,
            materialize_threshold: DEFAULT_MATERIALIZE_THRESHOLD,
            restarts: 8,
            restart_max_size: 256,
        }
    }
}

/// A permutation of function ids together with how it was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub order: Vec<FunctionId>,
    pub provenance: String,
}

impl Layout {
    pub fn new(order: Vec<FunctionId>, provenance: String) -> Self {
        Layout { order, provenance }
    }

    /// True when `order` is a bijection on `[0, n)`.
    pub fn is_permutation_of(&self, n: usize) -> bool {
        if self.order.len() != n {
            return false;
        }
        let mut seen = vec![false; n];
        for &f in &self.order {
            if (f as usize) >= n || seen[f as usize] {
                return false;
            }
            seen[f as usize] = true;
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionError {
    /// `initial_order` is not a permutation of the graph's functions.
    NotAPermutation { expected_len: usize, actual_len: usize },
    /// `initial_order` repeats or exceeds a function id.
    InvalidInitialOrder(FunctionId),
}

impl fmt::Display for PartitionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionError::NotAPermutation {
                expected_len,
                actual_len,
            } => write!(
                f,
                "initial order has {actual_len} entries, graph has {expected_len} functions"
            ),
            PartitionError::InvalidInitialOrder(id) => {
                write!(f, "initial order repeats or exceeds function id {id}")
            }
        }
    }
}

impl core::error::Error for PartitionError {}

/// Fork-join abstraction for the two independent recursive calls. The
/// sequential implementation lives here; a rayon-backed one lives in the
/// std companion crate.
pub trait Joiner: Sync {
    fn join<A, B, RA, RB>(&self, a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send;
}

/// Runs both recursive calls on the current thread.
pub struct Sequential;

impl Joiner for Sequential {
    fn join<A, B, RA, RB>(&self, a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send,
    {
        (a(), b())
    }
}

/// One refined bisection of `subset` into two halves.
#[derive(Debug, Clone)]
pub struct BisectResult {
    /// First half, `floor(n/2)` functions, in subset-relative order.
    pub left: Vec<FunctionId>,
    /// Second half, `ceil(n/2)` functions, in subset-relative order.
    pub right: Vec<FunctionId>,
    /// Partition cost of the initial random split.
    pub initial_cost: f64,
    /// Partition cost after refinement, recomputed from scratch.
    pub refined_cost: f64,
    /// Refinement rounds executed before convergence or the iteration cap.
    pub rounds: u32,
}

fn node_rng(seed: u64, path: u64) -> ChaCha8Rng {
    // splitmix64 finalizer over (seed, path) so sibling nodes are independent.
    let mut z = seed ^ path.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Splits `subset` into two near-equal halves and refines the split with
/// local search. `path` identifies the recursion node for RNG derivation
/// (use `1` for a standalone call). Requires `subset.len() >= 2`.
///
/// Subsets within [`PartitionerConfig::restart_max_size`] get
/// [`PartitionerConfig::restarts`] independent attempts and the one with
/// the lowest refined cost wins (ties keep the earliest attempt). Raw
/// costs decide, so the winner is identical for every cost-model scale.
pub fn bisect(
    g: &BipartiteGraph,
    subset: &[FunctionId],
    cfg: &PartitionerConfig,
    model: &CostModel,
    path: u64,
) -> BisectResult {
    debug_assert!(subset.len() >= 2);
    let mut rng = node_rng(cfg.seed, path);
    let attempts = if subset.len() <= cfg.restart_max_size {
        cfg.restarts.max(1)
    } else {
        1
    };

    // Scratch buffers shared across attempts. `counts` and `active` are
    // graph-sized, but only the entries for utilities adjacent to `subset`
    // (`touched`) are ever written or cleared, so per-round work scales
    // with the subset's adjacency rather than with the whole graph.
    let mut counts = vec![SplitCounts::default(); g.n_utilities()];
    let mut touched: Vec<u32> = Vec::new();
    for &f in subset {
        for &u in g.utilities_of(f) {
            if counts[u as usize].left == 0 {
                touched.push(u);
            }
            counts[u as usize].left += 1;
        }
    }
    // Refinement only performs balance-preserving pair exchanges, and a
    // utility covering the whole subset keeps its (L, R) counts under every
    // such exchange: its true contribution to any pair's gain is zero. The
    // single-move gains used during refinement would instead credit it with
    // a positive bias on both sides (breaking balance toward imbalance
    // always helps), which makes every pair sum positive and churns the
    // rounds forever. Utilities with fewer than two members are constants
    // too. Only utilities strictly between those extremes can steer the
    // split.
    let mut active = vec![false; g.n_utilities()];
    for &u in &touched {
        let deg = counts[u as usize].left as usize;
        active[u as usize] = deg >= 2 && deg < subset.len();
    }
    for &u in &touched {
        counts[u as usize] = SplitCounts::default();
    }
    let mut side_of = vec![Side::Right; g.n_functions()];

    let mut best: Option<(BisectResult, f64)> = None;
    for _ in 0..attempts {
        // Each attempt gets its own RNG derived from the node RNG, so the
        // sequence of attempts is deterministic and scheduling-independent.
        let mut attempt_rng = ChaCha8Rng::seed_from_u64(rng.gen());
        let (result, refined_raw) = refine_once(
            g,
            subset,
            cfg,
            model,
            &mut attempt_rng,
            &touched,
            &active,
            &mut side_of,
            &mut counts,
        );
        if best
            .as_ref()
            .is_none_or(|(_, raw)| refined_raw + GAIN_EPSILON < *raw)
        {
            best = Some((result, refined_raw));
        }
    }
    let mut result = best.expect("at least one attempt runs").0;
    // `counts` now holds the last attempt's final split; left + right is the
    // subset-restricted degree, which is the same for every attempt.
    canonicalize_equivalent(g, subset, &counts, &mut side_of, &mut result);
    result
}

/// Reassigns interchangeable vertices across the refined cut so they follow
/// the subset's inherited order.
///
/// Vertices whose cost-relevant utility sets are identical (the sets of
/// utilities covering at least two subset members) are interchangeable:
/// swapping two of them across the cut changes no utility's (L, R) counts,
/// so every assignment that keeps each class's per-side counts has exactly
/// the same cost, and the search picks one arbitrarily. When such a class
/// straddles the cut, put its inherited-earliest members on the side that
/// will be emitted first (the side holding the subset's first element), so
/// the final layout keeps equivalent vertices in inherited order instead of
/// scattering them.
fn canonicalize_equivalent(
    g: &BipartiteGraph,
    subset: &[FunctionId],
    counts: &[SplitCounts],
    side_of: &mut [Side],
    result: &mut BisectResult,
) {
    for &f in &result.left {
        side_of[f as usize] = Side::Left;
    }
    for &f in &result.right {
        side_of[f as usize] = Side::Right;
    }
    // The recursion emits the half holding the subset's first element ahead
    // of the other; earliest-inherited class members belong on that side.
    // The first element is always among its own class's earliest members,
    // so its side never changes and the emission choice stays fixed.
    let first_side = side_of[subset[0] as usize];

    let mut classes: hashbrown::HashMap<Vec<u32>, Vec<FunctionId>> = hashbrown::HashMap::new();
    for &f in subset {
        let key: Vec<u32> = g
            .utilities_of(f)
            .iter()
            .copied()
            .filter(|&u| {
                let c = counts[u as usize];
                c.left + c.right >= 2
            })
            .collect();
        // Members push in subset order, so each class lists its vertices in
        // inherited order.
        classes.entry(key).or_default().push(f);
    }

    let mut changed = false;
    for members in classes.values() {
        if members.len() < 2 {
            continue;
        }
        let on_first = members
            .iter()
            .filter(|&&f| side_of[f as usize] == first_side)
            .count();
        if on_first == 0 || on_first == members.len() {
            continue;
        }
        for (i, &f) in members.iter().enumerate() {
            let want = if i < on_first {
                first_side
            } else {
                match first_side {
                    Side::Left => Side::Right,
                    Side::Right => Side::Left,
                }
            };
            if side_of[f as usize] != want {
                side_of[f as usize] = want;
                changed = true;
            }
        }
    }
    if !changed {
        return;
    }

    result.left.clear();
    result.right.clear();
    for &f in subset {
        match side_of[f as usize] {
            Side::Left => result.left.push(f),
            Side::Right => result.right.push(f),
        }
    }
}

/// One shuffle-then-halve initial split plus refinement rounds. Returns the
/// result and the refined cost in raw (scale-free) units for attempt
/// selection.
#[allow(clippy::too_many_arguments)]
fn refine_once(
    g: &BipartiteGraph,
    subset: &[FunctionId],
    cfg: &PartitionerConfig,
    model: &CostModel,
    rng: &mut ChaCha8Rng,
    touched: &[u32],
    active: &[bool],
    side_of: &mut [Side],
    counts: &mut [SplitCounts],
) -> (BisectResult, f64) {
    // Initial split: shuffle then halve, so |F1| = floor(n/2) exactly. A
    // per-vertex coin flip would drift from balance.
    let mut shuffled = subset.to_vec();
    shuffled.shuffle(rng);
    let half = subset.len() / 2;

    for &f in &shuffled[..half] {
        side_of[f as usize] = Side::Left;
    }
    for &f in &shuffled[half..] {
        side_of[f as usize] = Side::Right;
    }

    let subset_counts = |side_of: &[Side], counts: &mut [SplitCounts]| {
        for &u in touched {
            counts[u as usize] = SplitCounts::default();
        }
        for &f in subset {
            for &u in g.utilities_of(f) {
                match side_of[f as usize] {
                    Side::Left => counts[u as usize].left += 1,
                    Side::Right => counts[u as usize].right += 1,
                }
            }
        }
    };
    // All search decisions run on raw (base-independent) costs; the
    // configured scale is applied only to the reported totals.
    let total_raw_cost = |counts: &[SplitCounts]| -> f64 {
        touched
            .iter()
            .map(|&u| {
                let c = counts[u as usize];
                model.raw_cost(c.left, c.right)
            })
            .sum()
    };

    subset_counts(side_of, counts);
    let initial_cost = total_raw_cost(counts) * model.cost_scale();

    let mut gains = vec![0.0f64; subset.len()];
    let mut rounds = 0;
    for _ in 0..cfg.max_iterations {
        rounds += 1;
        subset_counts(side_of, counts);

        // All gains are computed against the pre-round counters; they are
        // deliberately not refreshed after individual swaps.
        for (pos, &f) in subset.iter().enumerate() {
            let mut gain = 0.0;
            for &u in g.utilities_of(f) {
                if !active[u as usize] {
                    continue;
                }
                let c = counts[u as usize];
                gain += match side_of[f as usize] {
                    Side::Left => {
                        model.raw_cost(c.left, c.right)
                            - model.raw_cost(c.left - 1, c.right + 1)
                    }
                    Side::Right => {
                        model.raw_cost(c.left, c.right)
                            - model.raw_cost(c.left + 1, c.right - 1)
                    }
                };
            }
            gains[pos] = gain;
        }

        let mut s1: Vec<u32> = Vec::with_capacity(half);
        let mut s2: Vec<u32> = Vec::with_capacity(subset.len() - half);
        for (pos, &f) in subset.iter().enumerate() {
            match side_of[f as usize] {
                Side::Left => s1.push(pos as u32),
                Side::Right => s2.push(pos as u32),
            }
        }
        // Ties broken by a fresh random key each round. Structured inputs
        // produce many exactly-equal gains; a fixed positional tie-break
        // would pair the two lists so symmetrically that oscillating
        // exchanges cancel out and the split never improves. Randomized
        // pairing lets the skipped pairs perturb such symmetric states, and
        // the resulting gain asymmetry resolves them on the next round. The
        // keys come from the node RNG, so runs stay reproducible.
        let tie: Vec<u32> = (0..subset.len()).map(|_| rng.gen()).collect();
        let by_gain = |a: &u32, b: &u32| {
            gains[*b as usize]
                .total_cmp(&gains[*a as usize])
                .then(tie[*a as usize].cmp(&tie[*b as usize]))
                .then(a.cmp(b))
        };
        s1.sort_unstable_by(by_gain);
        s2.sort_unstable_by(by_gain);

        // Walk the two sorted lists with independent cursors. A vertex skips
        // its move with probability `skip_probability`, and its would-be
        // partner then pairs with the next-best vertex on the skipped side.
        // Skipping whole pairs instead would keep the lists aligned, and a
        // group of equal-gain vertices oscillating across the cut would pair
        // with itself forever; advancing one cursor shifts the pairing so
        // such groups get exchanged against outside vertices and resolve.
        // Balance is exact either way: every executed exchange moves one
        // vertex in each direction.
        let mut exchanged = 0usize;
        let (mut i, mut j) = (0usize, 0usize);
        while i < s1.len() && j < s2.len() {
            let pv = s1[i] as usize;
            let pu = s2[j] as usize;
            if gains[pv] + gains[pu] <= GAIN_EPSILON {
                break;
            }
            if rng.gen_bool(cfg.skip_probability) {
                i += 1;
                continue;
            }
            if rng.gen_bool(cfg.skip_probability) {
                j += 1;
                continue;
            }
            side_of[subset[pv] as usize] = Side::Right;
            side_of[subset[pu] as usize] = Side::Left;
            i += 1;
            j += 1;
            exchanged += 1;
        }
        if exchanged == 0 {
            break;
        }
    }

    subset_counts(side_of, counts);
    let refined_raw = total_raw_cost(counts);
    let refined_cost = refined_raw * model.cost_scale();

    let mut left = Vec::with_capacity(half);
    let mut right = Vec::with_capacity(subset.len() - half);
    for &f in subset {
        match side_of[f as usize] {
            Side::Left => left.push(f),
            Side::Right => right.push(f),
        }
    }
    (
        BisectResult {
            left,
            right,
            initial_cost,
            refined_cost,
            rounds,
        },
        refined_raw,
    )
}

/// True when some utility covers at least two members of `ids` but not all
/// of them. Only such a utility can make one split of `ids` cheaper than
/// another: a utility with a single member in the subset costs the same on
/// either side, and one covering the whole subset costs the same for every
/// balanced split at this node and, inductively, below it.
fn has_discriminating_utility(g: &BipartiteGraph, ids: &[FunctionId]) -> bool {
    let mut counts: hashbrown::HashMap<u32, u32> = hashbrown::HashMap::new();
    for &f in ids {
        for &u in g.utilities_of(f) {
            *counts.entry(u).or_insert(0) += 1;
        }
    }
    counts.values().any(|&c| c >= 2 && (c as usize) < ids.len())
}

fn recurse<J: Joiner>(
    g: &BipartiteGraph,
    ids: Vec<FunctionId>,
    to_root: &[FunctionId],
    depth_left: u32,
    path: u64,
    cfg: &PartitionerConfig,
    model: &CostModel,
    joiner: &J,
) -> Vec<FunctionId> {
    if ids.len() <= 1 || depth_left == 0 {
        // Stopped leaf: functions keep their inherited relative order.
        return ids.iter().map(|&i| to_root[i as usize]).collect();
    }

    // Cost plateau: when no utility distinguishes members of this subset,
    // every arrangement below costs the same. Keep the inherited order
    // rather than shuffling through pointless cuts.
    if !has_discriminating_utility(g, &ids) {
        return ids.iter().map(|&i| to_root[i as usize]).collect();
    }

    if ids.len() >= cfg.materialize_threshold && ids.len() < g.n_functions() {
        let (sub, parent_ids) = g
            .induce_subgraph(&ids)
            .expect("subset ids come from the parent graph");
        let to_root2: Vec<FunctionId> =
            parent_ids.iter().map(|&p| to_root[p as usize]).collect();
        let ids2: Vec<FunctionId> = (0..sub.n_functions() as u32).collect();
        return recurse(&sub, ids2, &to_root2, depth_left, path, cfg, model, joiner);
    }

    let first = ids[0];
    let split = bisect(g, &ids, cfg, model, path);
    drop(ids);
    // Which half comes first in the output is not determined by the cost
    // objective (the cut is symmetric), so canonicalize it by inherited
    // order: the half holding the subset's first element is emitted first.
    // This keeps the output aligned with the initial order wherever the
    // objective is indifferent, like leaf order already is.
    let left_first = split.left.first() == Some(&first);

    let depth = 63 - (path.leading_zeros() as u32).min(63);
    let run_left = move || {
        recurse(
            g,
            split.left,
            to_root,
            depth_left - 1,
            path << 1,
            cfg,
            model,
            joiner,
        )
    };
    let run_right = move || {
        recurse(
            g,
            split.right,
            to_root,
            depth_left - 1,
            (path << 1) | 1,
            cfg,
            model,
            joiner,
        )
    };
    let (left_out, right_out) = if depth < cfg.parallel_depth {
        joiner.join(run_left, run_right)
    } else {
        (run_left(), run_right())
    };
    let (mut o1, o2) = if left_first {
        (left_out, right_out)
    } else {
        (right_out, left_out)
    };
    o1.extend(o2);
    o1
}

fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

fn validate_initial_order(
    g: &BipartiteGraph,
    initial_order: &[FunctionId],
) -> Result<(), PartitionError> {
    let n = g.n_functions();
    if initial_order.len() != n {
        return Err(PartitionError::NotAPermutation {
            expected_len: n,
            actual_len: initial_order.len(),
        });
    }
    let mut seen = vec![false; n];
    for &f in initial_order {
        if (f as usize) >= n || seen[f as usize] {
            return Err(PartitionError::InvalidInitialOrder(f));
        }
        seen[f as usize] = true;
    }
    Ok(())
}

/// Reorders the graph's functions sequentially. `initial_order` is the
/// compiler-provided relative order, preserved inside stopped leaves.
pub fn reorder(
    g: &BipartiteGraph,
    initial_order: &[FunctionId],
    cfg: &PartitionerConfig,
) -> Result<Layout, PartitionError> {
    reorder_with(g, initial_order, cfg, &Sequential)
}

/// Reorders with an explicit fork-join joiner.
pub fn reorder_with<J: Joiner>(
    g: &BipartiteGraph,
    initial_order: &[FunctionId],
    cfg: &PartitionerConfig,
    joiner: &J,
) -> Result<Layout, PartitionError> {
    let model = CostModel::new(cfg.objective);
    reorder_with_model(g, initial_order, cfg, &model, joiner)
}

/// Reorders with an explicit cost model (used to demonstrate that the log
/// base cannot change the result).
pub fn reorder_with_model<J: Joiner>(
    g: &BipartiteGraph,
    initial_order: &[FunctionId],
    cfg: &PartitionerConfig,
    model: &CostModel,
    joiner: &J,
) -> Result<Layout, PartitionError> {
    validate_initial_order(g, initial_order)?;
    let n = g.n_functions();
    let provenance = format!(
        "balanced-partitioning objective={:?} seed={} max_depth={} max_iterations={} skip={}",
        cfg.objective, cfg.seed, cfg.max_depth, cfg.max_iterations, cfg.skip_probability
    );
    if n == 0 {
        return Ok(Layout::new(Vec::new(), provenance));
    }
    let depth_budget = ceil_log2(n).min(cfg.max_depth);
    let to_root: Vec<FunctionId> = (0..n as u32).collect();
    let order = recurse(
        g,
        initial_order.to_vec(),
        &to_root,
        depth_budget,
        1,
        cfg,
        model,
        joiner,
    );
    debug_assert_eq!(order.len(), n);
    Ok(Layout::new(order, provenance))
}

/// Closed-form work bound `m*log2(n) + n*log2(n)^2`, used for documentation
/// and the runtime-scaling check; purely informative.
pub fn estimate_complexity(n: usize, m: usize) -> f64 {
    if n <= 1 {
        return 1.0;
    }
    let lg = libm::log2(n as f64);
    m as f64 * lg + n as f64 * lg * lg
}
