//! Compression model: content-hash manifests, dedup grouping, the shared-
//! instruction utility graph, and the distinct-k-mer sliding-window proxy
//! for LZ compressed size.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashMap;

use crate::graph::BipartiteGraph;
use crate::partition::Layout;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompressionError {
    /// The layout over unique functions does not cover every dedup group.
    GroupNotCovered(u32),
    /// The layout referenced a group vertex that does not exist.
    UnknownGroup(u32),
    /// A laid-out function has no renderable body.
    MissingBody(u32),
}

impl fmt::Display for CompressionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompressionError::GroupNotCovered(g) => {
                write!(f, "layout does not cover dedup group {g}")
            }
            CompressionError::UnknownGroup(g) => write!(f, "layout references unknown group {g}"),
            CompressionError::MissingBody(i) => write!(f, "function {i} has no body to render"),
        }
    }
}

impl core::error::Error for CompressionError {}

/// Per-function input to the compression model. `content_hashes` is an
/// order-free, duplicate-free set of 64-bit stable hashes, one per
/// instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionRecord {
    pub name: String,
    pub size: u64,
    pub hot: bool,
    pub content_hashes: Vec<u64>,
}

impl FunctionRecord {
    /// Normalizes `content_hashes` into a sorted set.
    pub fn new(name: String, size: u64, hot: bool, mut content_hashes: Vec<u64>) -> Self {
        content_hashes.sort_unstable();
        content_hashes.dedup();
        FunctionRecord {
            name,
            size,
            hot,
            content_hashes,
        }
    }
}

/// Functions with identical hash sets, folded into one graph vertex.
/// `members` lists record indices in input order, representative first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DedupGroup {
    pub representative: u32,
    pub members: Vec<u32>,
}

/// BPC bipartite graph over unique (deduplicated) functions. Graph vertex
/// `i` corresponds to `groups[i]`.
#[derive(Debug, Clone)]
pub struct BpcGraph {
    pub graph: BipartiteGraph,
    pub groups: Vec<DedupGroup>,
}

/// Builds the shared-hash utility graph for a set of (cold) records.
/// Records with identical hash sets are grouped first, so clones do not
/// inflate utility degrees; one utility per hash present in at least two
/// unique functions.
pub fn build_bpc_graph(records: &[FunctionRecord]) -> BpcGraph {
    let mut groups: Vec<DedupGroup> = Vec::new();
    let mut group_of_set: HashMap<&[u64], u32> = HashMap::new();
    for (idx, rec) in records.iter().enumerate() {
        match group_of_set.get(rec.content_hashes.as_slice()) {
            Some(&gid) => groups[gid as usize].members.push(idx as u32),
            None => {
                let gid = groups.len() as u32;
                group_of_set.insert(rec.content_hashes.as_slice(), gid);
                groups.push(DedupGroup {
                    representative: idx as u32,
                    members: vec![idx as u32],
                });
            }
        }
    }

    // (hash, group) pairs sorted by hash; hashes covering >= 2 groups become
    // utilities with dense ids in ascending hash order. The degree-1
    // pre-filter falls out of the grouped scan.
    let mut pairs: Vec<(u64, u32)> = Vec::new();
    for (gid, group) in groups.iter().enumerate() {
        for &h in &records[group.representative as usize].content_hashes {
            pairs.push((h, gid as u32));
        }
    }
    pairs.sort_unstable();

    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut next_utility = 0u32;
    let mut i = 0;
    while i < pairs.len() {
        let h = pairs[i].0;
        let mut j = i;
        while j < pairs.len() && pairs[j].0 == h {
            j += 1;
        }
        if j - i >= 2 {
            for &(_, gid) in &pairs[i..j] {
                edges.push((gid, next_utility));
            }
            next_utility += 1;
        }
        i = j;
    }

    let graph =
        BipartiteGraph::build(&edges, groups.len()).expect("bpc edges are constructed in range");
    BpcGraph { graph, groups }
}

/// Expands a layout over unique functions to one over all records: each
/// group vertex is replaced in place by its member list (representative
/// first, members in input order). Returns record indices.
pub fn expand_dedup(
    layout: &Layout,
    groups: &[DedupGroup],
) -> Result<Vec<u32>, CompressionError> {
    let mut covered = vec![false; groups.len()];
    let mut out = Vec::new();
    for &g in &layout.order {
        let group = groups
            .get(g as usize)
            .ok_or(CompressionError::UnknownGroup(g))?;
        if covered[g as usize] {
            return Err(CompressionError::UnknownGroup(g));
        }
        covered[g as usize] = true;
        out.extend_from_slice(&group.members);
    }
    if let Some(missing) = covered.iter().position(|&c| !c) {
        return Err(CompressionError::GroupNotCovered(missing as u32));
    }
    Ok(out)
}

/// Parameters of the distinct-k-mer sliding-window metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KmerMetricParams {
    /// k-mer length in bytes.
    pub k: usize,
    /// Window size in bytes.
    pub w: usize,
    /// Window step; 1 slides over every position.
    pub stride: usize,
}

impl Default for KmerMetricParams {
    fn default() -> Self {
        KmerMetricParams {
            k: 8,
            w: 65536,
            stride: 1,
        }
    }
}

/// Distinct k-mer counts per window start. Data shorter than the window is
/// measured as a single window; data shorter than `k` yields no counts.
///
/// The count is maintained incrementally as the window advances (occurrence
/// counts per k-mer, distinct counter updated on 0<->1 transitions), so a
/// full stride-1 scan is O(n) map operations rather than O(n * w).
pub fn kmer_window_counts(data: &[u8], params: &KmerMetricParams) -> Vec<u64> {
    let k = params.k;
    let stride = params.stride.max(1);
    if data.len() < k || k == 0 {
        return Vec::new();
    }
    let w = params.w.min(data.len());
    let kmers_per_window = w - k + 1;

    fn add<'a>(map: &mut HashMap<&'a [u8], u32>, distinct: &mut u64, key: &'a [u8]) {
        let entry = map.entry(key).or_insert(0);
        *entry += 1;
        if *entry == 1 {
            *distinct += 1;
        }
    }
    fn remove(map: &mut HashMap<&[u8], u32>, distinct: &mut u64, key: &[u8]) {
        let entry = map.get_mut(key).unwrap();
        *entry -= 1;
        if *entry == 0 {
            map.remove(key);
            *distinct -= 1;
        }
    }
    let mut occurrences: HashMap<&[u8], u32> = HashMap::new();
    let mut distinct: u64 = 0;

    let mut counts = Vec::new();
    let mut prev: Option<usize> = None;
    let mut start = 0;
    while start + w <= data.len() {
        match prev {
            None => {
                for s in start..start + kmers_per_window {
                    add(&mut occurrences, &mut distinct, &data[s..s + k]);
                }
            }
            Some(p) if start - p < kmers_per_window => {
                for s in p..start {
                    remove(&mut occurrences, &mut distinct, &data[s..s + k]);
                }
                for s in p + kmers_per_window..start + kmers_per_window {
                    add(&mut occurrences, &mut distinct, &data[s..s + k]);
                }
            }
            Some(_) => {
                // Jumped past the previous window entirely; rebuild.
                occurrences.clear();
                distinct = 0;
                for s in start..start + kmers_per_window {
                    add(&mut occurrences, &mut distinct, &data[s..s + k]);
                }
            }
        }
        counts.push(distinct);
        prev = Some(start);
        start += stride;
    }
    counts
}

/// Sum of distinct k-mer counts over all windows; lower predicts a smaller
/// LZ-compressed size.
pub fn kmer_window_metric(data: &[u8], params: &KmerMetricParams) -> u64 {
    kmer_window_counts(data, params).iter().sum()
}

/// Concatenates function bodies in layout order. `order` holds record
/// indices (typically the output of [`expand_dedup`]).
pub fn layout_to_bytes(
    order: &[u32],
    bodies: &[Option<Vec<u8>>],
) -> Result<Vec<u8>, CompressionError> {
    let mut out = Vec::new();
    for &i in order {
        let body = bodies
            .get(i as usize)
            .and_then(|b| b.as_ref())
            .ok_or(CompressionError::MissingBody(i))?;
        out.extend_from_slice(body);
    }
    Ok(out)
}

/// Derives stable hashes from a raw function body by 8-byte shingling, the
/// synthetic stand-in for per-instruction hashing. Bodies shorter than 8
/// bytes hash as a single zero-padded shingle.
pub fn shingle_hashes(body: &[u8]) -> Vec<u64> {
    let mut hashes: Vec<u64> = if body.len() < 8 {
        let mut padded = [0u8; 8];
        padded[..body.len()].copy_from_slice(body);
        vec![u64::from_le_bytes(padded)]
    } else {
        body.windows(8)
            .map(|w| u64::from_le_bytes(w.try_into().unwrap()))
            .collect()
    };
    hashes.sort_unstable();
    hashes.dedup();
    hashes
}
