//! End-to-end layout pipeline: hot/cold classification, BPS over traces,
//! BPC over cold functions, caller-order inheritance, comparator layouts,
//! and the deterministic run report.

use std::collections::HashMap;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use fnlayout_core::compression::{
    build_bpc_graph, expand_dedup, kmer_window_metric, FunctionRecord, KmerMetricParams,
};
use fnlayout_core::partition::{reorder_with, Joiner, Layout, PartitionerConfig};
use fnlayout_core::startup::{
    build_bps_graph, reservoir_sample, simulate_page_faults, EvaluationCurve, PagingModel,
    ThresholdScheme, Trace, TraceSet, DEFAULT_PAGE_SIZE, DEFAULT_SAMPLE_CAP,
};

use crate::formats::ManifestRecord;

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Bad or inconsistent input; maps to exit code 1.
    #[error("input error: {0}")]
    Input(String),
    /// An internal invariant was violated; maps to exit code 2.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// Which layout algorithm drives the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    /// Balanced partitioning: BPS for hot functions, BPC for cold ones.
    Bp,
    /// The manifest order, i.e. the order the compiler produced.
    Baseline,
    /// Seeded random permutations of the hot and cold regions.
    Random,
    /// Hot functions by average first-execution timestamp; cold baseline.
    OrderAvg,
    /// Cold functions by greedy hash-set similarity chaining; hot baseline.
    Greedy,
}

impl Comparator {
    pub const ALL: [Comparator; 5] = [
        Comparator::Baseline,
        Comparator::Random,
        Comparator::OrderAvg,
        Comparator::Greedy,
        Comparator::Bp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Comparator::Bp => "bp",
            Comparator::Baseline => "baseline",
            Comparator::Random => "random",
            Comparator::OrderAvg => "order-avg",
            Comparator::Greedy => "greedy",
        }
    }
}

impl FromStr for Comparator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bp" => Ok(Comparator::Bp),
            "baseline" => Ok(Comparator::Baseline),
            "random" => Ok(Comparator::Random),
            "order-avg" => Ok(Comparator::OrderAvg),
            "greedy" => Ok(Comparator::Greedy),
            other => Err(format!(
                "unknown comparator `{other}` (expected bp|baseline|random|order-avg|greedy)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub partitioner: PartitionerConfig,
    /// Explicit prefix thresholds; defaults to geometric doubling.
    pub thresholds: Option<Vec<u32>>,
    pub sample_cap: usize,
    pub comparator: Comparator,
    pub page_size: u64,
    pub kmer: KmerMetricParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            partitioner: PartitionerConfig::default(),
            thresholds: None,
            sample_cap: DEFAULT_SAMPLE_CAP,
            comparator: Comparator::Bp,
            page_size: DEFAULT_PAGE_SIZE,
            kmer: KmerMetricParams::default(),
        }
    }
}

/// Parsed pipeline inputs, all by name; ids are assigned internally.
#[derive(Debug, Clone, Default)]
pub struct PipelineInput {
    pub manifest: Vec<ManifestRecord>,
    /// Traces as name sequences, pre-sampling.
    pub traces: Vec<Vec<String>>,
    /// (callee, first_caller) pairs.
    pub hints: Vec<(String, String)>,
    /// Raw function bodies by name, when a synthetic corpus is available.
    pub bodies: Option<HashMap<String, Vec<u8>>>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Final order, one function name per entry, every manifest function
    /// exactly once, hot region first.
    pub order: Vec<String>,
    /// Deterministic run report (no timing; the CLI reports timing on
    /// stderr so identical inputs produce identical reports).
    pub report: String,
    pub curve: Option<EvaluationCurve>,
    pub kmer_metric: Option<u64>,
    pub warnings: Vec<String>,
}

/// An uninstrumented callee that inherits the position of its first caller.
#[derive(Debug, Clone, Copy)]
pub struct CallerHint {
    pub callee: u32,
    pub first_caller: u32,
}

/// Inserts each hinted callee immediately after its first caller; multiple
/// callees of one caller keep hint order; a hinted callee is removed from
/// wherever else it would appear. Hints whose caller is not placed are
/// ignored with a warning.
pub fn apply_caller_hints(
    layout: &[u32],
    hints: &[CallerHint],
    names: &[String],
) -> (Vec<u32>, Vec<String>) {
    let mut placed: std::collections::HashSet<u32> = layout.iter().copied().collect();
    let mut attached: HashMap<u32, Vec<u32>> = HashMap::new();
    let mut moved: std::collections::HashSet<u32> = std::collections::HashSet::new();
    let mut warnings = Vec::new();

    for hint in hints {
        if moved.contains(&hint.callee) {
            warnings.push(format!(
                "warning: ignoring repeated hint for `{}`",
                names[hint.callee as usize]
            ));
            continue;
        }
        if !placed.contains(&hint.first_caller) {
            warnings.push(format!(
                "warning: caller `{}` of hinted function `{}` is not in the hot layout; hint ignored",
                names[hint.first_caller as usize], names[hint.callee as usize]
            ));
            continue;
        }
        attached.entry(hint.first_caller).or_default().push(hint.callee);
        moved.insert(hint.callee);
        placed.insert(hint.callee);
    }

    fn emit(f: u32, attached: &HashMap<u32, Vec<u32>>, out: &mut Vec<u32>) {
        out.push(f);
        if let Some(callees) = attached.get(&f) {
            for &c in callees {
                emit(c, attached, out);
            }
        }
    }

    let mut out = Vec::with_capacity(layout.len());
    for &f in layout {
        if moved.contains(&f) {
            continue; // re-inserted after its caller
        }
        emit(f, &attached, &mut out);
    }
    (out, warnings)
}

/// Orders hot functions by mean 1-based first-execution position, averaged
/// over the traces that contain the function; ties broken by name.
pub fn order_avg(traces: &TraceSet, names: &[String]) -> Layout {
    let mut sum: HashMap<u32, (f64, u32)> = HashMap::new();
    for trace in &traces.traces {
        for (pos, &f) in trace.sequence().iter().enumerate() {
            let e = sum.entry(f).or_insert((0.0, 0));
            e.0 += (pos + 1) as f64;
            e.1 += 1;
        }
    }
    let mut scored: Vec<(f64, &str, u32)> = sum
        .iter()
        .map(|(&f, &(total, n))| (total / n as f64, names[f as usize].as_str(), f))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
    Layout::new(
        scored.into_iter().map(|(_, _, f)| f).collect(),
        "order-avg".to_string(),
    )
}

fn jaccard(a: &[u64], b: &[u64]) -> f64 {
    let (mut i, mut j, mut inter) = (0usize, 0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Greedy similarity chaining over hash sets: start from the function whose
/// hashes are shared the most, then repeatedly append the candidate with the
/// highest Jaccard similarity to the last placed function. Candidates are
/// pruned to functions sharing at least one hash with the last placed one;
/// when none exists, the lexicographically smallest remaining name is taken.
pub fn greedy_similarity(records: &[FunctionRecord], subset: &[u32]) -> Vec<u32> {
    if subset.is_empty() {
        return Vec::new();
    }
    // hash -> subset functions containing it.
    let mut sharers: HashMap<u64, Vec<u32>> = HashMap::new();
    for &f in subset {
        for &h in &records[f as usize].content_hashes {
            sharers.entry(h).or_default().push(f);
        }
    }
    let degree = |f: u32| -> usize {
        records[f as usize]
            .content_hashes
            .iter()
            .filter(|h| sharers[h].len() >= 2)
            .count()
    };

    let mut remaining: std::collections::BTreeSet<&str> = subset
        .iter()
        .map(|&f| records[f as usize].name.as_str())
        .collect();
    let id_of: HashMap<&str, u32> = subset
        .iter()
        .map(|&f| (records[f as usize].name.as_str(), f))
        .collect();

    let start = *subset
        .iter()
        .max_by(|&&a, &&b| {
            degree(a)
                .cmp(&degree(b))
                .then(records[b as usize].name.cmp(&records[a as usize].name))
        })
        .unwrap();

    let mut order = Vec::with_capacity(subset.len());
    let mut last = start;
    remaining.remove(records[start as usize].name.as_str());
    order.push(start);
    while !remaining.is_empty() {
        let last_hashes = &records[last as usize].content_hashes;
        let mut best: Option<(f64, &str)> = None;
        for &h in last_hashes {
            for &cand in &sharers[&h] {
                let cand_name = records[cand as usize].name.as_str();
                if !remaining.contains(cand_name) {
                    continue;
                }
                let score = jaccard(last_hashes, &records[cand as usize].content_hashes);
                let better = match best {
                    None => true,
                    Some((s, n)) => score > s || (score == s && cand_name < n),
                };
                if better {
                    best = Some((score, cand_name));
                }
            }
        }
        let next_name = match best {
            Some((_, n)) => n,
            None => remaining.iter().next().copied().unwrap(),
        };
        let next = id_of[next_name];
        remaining.remove(next_name);
        order.push(next);
        last = next;
    }
    order
}

/// Uniform seeded permutation of `items`.
pub fn random_layout(items: &[u32], seed: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = items.to_vec();
    out.shuffle(&mut rng);
    out
}

struct Classified {
    records: Vec<FunctionRecord>,
    names: Vec<String>,
    sampled: TraceSet,
    traced: Vec<u32>,
    hints: Vec<CallerHint>,
    warnings: Vec<String>,
}

fn classify(input: &PipelineInput, cfg: &PipelineConfig) -> Result<Classified, PipelineError> {
    let mut names: Vec<String> = input.manifest.iter().map(|r| r.name.clone()).collect();
    let mut records: Vec<FunctionRecord> = input
        .manifest
        .iter()
        .map(|r| FunctionRecord::new(r.name.clone(), r.size.max(1), r.hot, r.hashes.clone()))
        .collect();
    let mut id_of: HashMap<String, u32> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i as u32))
        .collect();
    let mut warnings = Vec::new();

    // Resolve traces to ids, synthesizing 1-byte records for unknown names.
    let mut traces = Vec::with_capacity(input.traces.len());
    for trace_names in &input.traces {
        let mut seq = Vec::with_capacity(trace_names.len());
        for n in trace_names {
            let id = match id_of.get(n) {
                Some(&id) => id,
                None => {
                    let id = records.len() as u32;
                    warnings.push(format!(
                        "warning: trace function `{n}` missing from manifest; synthesized 1-byte record"
                    ));
                    records.push(FunctionRecord::new(n.clone(), 1, false, Vec::new()));
                    names.push(n.clone());
                    id_of.insert(n.clone(), id);
                    id
                }
            };
            seq.push(id);
        }
        traces.push(Trace::new(seq).map_err(|e| PipelineError::Input(e.to_string()))?);
    }

    let sampled = reservoir_sample(traces, cfg.sample_cap, cfg.partitioner.seed);
    let traced = sampled.function_universe();

    let mut hints = Vec::with_capacity(input.hints.len());
    for (callee, caller) in &input.hints {
        let callee_id = *id_of
            .get(callee)
            .ok_or_else(|| PipelineError::Input(format!("hint callee `{callee}` not in manifest")))?;
        let caller_id = *id_of
            .get(caller)
            .ok_or_else(|| PipelineError::Input(format!("hint caller `{caller}` not in manifest")))?;
        hints.push(CallerHint {
            callee: callee_id,
            first_caller: caller_id,
        });
    }

    Ok(Classified {
        records,
        names,
        sampled,
        traced,
        hints,
        warnings,
    })
}

fn hot_order(
    c: &Classified,
    cfg: &PipelineConfig,
    joiner: &impl Joiner,
) -> Result<Vec<u32>, PipelineError> {
    let traced_order: Vec<u32> = match cfg.comparator {
        _ if c.traced.is_empty() => Vec::new(),
        Comparator::Baseline | Comparator::Greedy => c.traced.clone(),
        Comparator::Random => random_layout(&c.traced, cfg.partitioner.seed),
        Comparator::OrderAvg => order_avg(&c.sampled, &c.names).order,
        Comparator::Bp => {
            let scheme = match &cfg.thresholds {
                Some(t) => ThresholdScheme::new(t.clone())
                    .map_err(|e| PipelineError::Input(e.to_string()))?,
                None => ThresholdScheme::doubling(c.sampled.max_len()),
            };
            let bps = build_bps_graph(&c.sampled, &scheme)
                .map_err(|e| PipelineError::Input(e.to_string()))?;
            // The partitioner refines an execution-rank baseline: functions
            // sorted by mean first-execution position across the sampled
            // traces. Regions the threshold utilities cannot distinguish
            // keep this inherited order.
            let local_of: std::collections::HashMap<u32, u32> = bps
                .functions
                .iter()
                .enumerate()
                .map(|(l, &g)| (g, l as u32))
                .collect();
            let mut rank_sum = vec![(0.0f64, 0u32); bps.graph.n_functions()];
            for trace in &c.sampled.traces {
                for (pos, f) in trace.sequence().iter().enumerate() {
                    if let Some(&l) = local_of.get(f) {
                        let e = &mut rank_sum[l as usize];
                        e.0 += pos as f64;
                        e.1 += 1;
                    }
                }
            }
            let mut initial: Vec<u32> = (0..bps.graph.n_functions() as u32).collect();
            initial.sort_by(|&a, &b| {
                let (sa, ca) = rank_sum[a as usize];
                let (sb, cb) = rank_sum[b as usize];
                (sa * cb as f64).total_cmp(&(sb * ca as f64)).then(a.cmp(&b))
            });
            let layout = reorder_with(&bps.graph, &initial, &cfg.partitioner, joiner)
                .map_err(|e| PipelineError::Internal(e.to_string()))?;
            layout.order.iter().map(|&l| bps.functions[l as usize]).collect()
        }
    };

    // Manifest-hot functions that were never traced sit after the optimized
    // block, in manifest order; hints may then pull them next to a caller.
    let traced_set: std::collections::HashSet<u32> = traced_order.iter().copied().collect();
    let mut hot = traced_order;
    for (id, rec) in c.records.iter().enumerate() {
        if rec.hot && !traced_set.contains(&(id as u32)) {
            hot.push(id as u32);
        }
    }
    Ok(hot)
}

fn cold_order(
    c: &Classified,
    hot: &std::collections::HashSet<u32>,
    cfg: &PipelineConfig,
    joiner: &impl Joiner,
) -> Result<Vec<u32>, PipelineError> {
    let cold: Vec<u32> = (0..c.records.len() as u32)
        .filter(|id| !hot.contains(id))
        .collect();
    match cfg.comparator {
        Comparator::Baseline | Comparator::OrderAvg => Ok(cold),
        Comparator::Random => Ok(random_layout(&cold, cfg.partitioner.seed.wrapping_add(1))),
        Comparator::Greedy => Ok(greedy_similarity(&c.records, &cold)),
        Comparator::Bp => {
            if cold.is_empty() {
                return Ok(cold);
            }
            let cold_records: Vec<FunctionRecord> =
                cold.iter().map(|&id| c.records[id as usize].clone()).collect();
            let bpc = build_bpc_graph(&cold_records);
            let initial: Vec<u32> = (0..bpc.graph.n_functions() as u32).collect();
            let layout = reorder_with(&bpc.graph, &initial, &cfg.partitioner, joiner)
                .map_err(|e| PipelineError::Internal(e.to_string()))?;
            let expanded = expand_dedup(&layout, &bpc.groups)
                .map_err(|e| PipelineError::Internal(e.to_string()))?;
            Ok(expanded.into_iter().map(|i| cold[i as usize]).collect())
        }
    }
}

/// Runs the full pipeline: BPS over hot functions, BPC over cold ones,
/// caller-order inheritance, concatenation, and the evaluation report.
pub fn run_pipeline(
    input: &PipelineInput,
    cfg: &PipelineConfig,
    joiner: &impl Joiner,
) -> Result<PipelineOutput, PipelineError> {
    let c = classify(input, cfg)?;
    let mut warnings = c.warnings.clone();

    let hot = hot_order(&c, cfg, joiner)?;
    let (hot, hint_warnings) = apply_caller_hints(&hot, &c.hints, &c.names);
    warnings.extend(hint_warnings);

    let hot_set: std::collections::HashSet<u32> = hot.iter().copied().collect();
    if hot_set.len() != hot.len() {
        return Err(PipelineError::Internal(
            "hot layout contains a function twice".into(),
        ));
    }
    let cold = cold_order(&c, &hot_set, cfg, joiner)?;
    if let Some(clash) = cold.iter().find(|id| hot_set.contains(id)) {
        return Err(PipelineError::Internal(format!(
            "function `{}` present in both hot and cold sets",
            c.names[*clash as usize]
        )));
    }

    let mut order_ids = hot.clone();
    order_ids.extend_from_slice(&cold);
    if order_ids.len() != c.records.len() {
        return Err(PipelineError::Internal(format!(
            "output order has {} functions, expected {}",
            order_ids.len(),
            c.records.len()
        )));
    }
    let order: Vec<String> = order_ids
        .iter()
        .map(|&id| c.names[id as usize].clone())
        .collect();

    // Evaluation: page-fault curve over the sampled traces.
    let curve = if c.sampled.traces.is_empty() {
        None
    } else {
        let sizes: Vec<u64> = c.records.iter().map(|r| r.size).collect();
        let model = PagingModel::new(cfg.page_size, sizes)
            .map_err(|e| PipelineError::Input(e.to_string()))?;
        let layout = Layout::new(order_ids.clone(), cfg.comparator.name().to_string());
        Some(
            simulate_page_faults(&layout, &c.sampled, &model)
                .map_err(|e| PipelineError::Internal(e.to_string()))?,
        )
    };

    // Compression proxy over concatenated bodies, when all are available.
    let kmer_metric = match &input.bodies {
        Some(bodies) if order.iter().all(|n| bodies.contains_key(n)) => {
            let mut data = Vec::new();
            for n in &order {
                data.extend_from_slice(&bodies[n]);
            }
            Some(kmer_window_metric(&data, &cfg.kmer))
        }
        _ => None,
    };

    let mut report = String::new();
    report.push_str(&format!("comparator: {}\n", cfg.comparator.name()));
    report.push_str(&format!("functions: {}\n", c.records.len()));
    report.push_str(&format!("hot: {}\ncold: {}\n", hot.len(), cold.len()));
    report.push_str(&format!("traces_sampled: {}\n", c.sampled.traces.len()));
    match &curve {
        Some(cv) => report.push_str(&format!("curve_area: {}\n", cv.area())),
        None => report.push_str("curve_area: n/a (no traces)\n"),
    }
    match kmer_metric {
        Some(m) => report.push_str(&format!("kmer_metric: {m}\n")),
        None => report.push_str("kmer_metric: n/a (bodies unavailable)\n"),
    }

    Ok(PipelineOutput {
        order,
        report,
        curve,
        kmer_metric,
        warnings,
    })
}

/// Runs every comparator and returns a CSV summary
/// (`comparator,curve_area,kmer_metric`).
pub fn compare_all(
    input: &PipelineInput,
    cfg: &PipelineConfig,
    joiner: &impl Joiner,
) -> Result<String, PipelineError> {
    let mut csv = String::from("comparator,curve_area,kmer_metric\n");
    for comparator in Comparator::ALL {
        let mut run_cfg = cfg.clone();
        run_cfg.comparator = comparator;
        let out = run_pipeline(input, &run_cfg, joiner)?;
        let area = out
            .curve
            .as_ref()
            .map(|c| format!("{}", c.area()))
            .unwrap_or_else(|| "".into());
        let metric = out
            .kmer_metric
            .map(|m| m.to_string())
            .unwrap_or_else(|| "".into());
        csv.push_str(&format!("{},{},{}\n", comparator.name(), area, metric));
    }
    Ok(csv)
}
