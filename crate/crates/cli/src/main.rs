//! `fnlayout`: function-layout optimization driven by start-up traces and
//! content-hash manifests.
//!
//! Exit codes: 0 success, 1 bad input, 2 internal invariant violation.

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use fnlayout_cli::formats::{
    parse_config, parse_hints, parse_manifest, parse_order_file, parse_traces, render_curve_csv,
    render_order_file, render_traces,
};
use fnlayout_cli::pipeline::{
    compare_all, run_pipeline, Comparator, PipelineConfig, PipelineError, PipelineInput,
};
use fnlayout_cli::RayonJoiner;
use fnlayout_core::compression::{kmer_window_metric, shingle_hashes, KmerMetricParams};
use fnlayout_core::partition::PartitionerConfig;
use fnlayout_core::startup::{
    reservoir_sample, simulate_page_faults, PagingModel, Trace, TraceSet,
};
use fnlayout_core::{Layout, ObjectiveKind};

#[derive(Parser)]
#[command(name = "fnlayout", version, about = "Function layout optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a function order from a manifest, traces, and caller hints.
    Reorder(ReorderArgs),
    /// Replay traces against an order file and emit the page-fault curve.
    Simulate(SimulateArgs),
    /// Distinct k-mer sliding-window metric of a raw byte file.
    KmerMetric(KmerArgs),
    /// Reservoir-sample a trace file down to a capped subset.
    SampleTraces(SampleArgs),
    /// Run every comparator and print a CSV of curve areas and k-mer metrics.
    Compare(CompareArgs),
}

/// Flags shared by the layout-producing subcommands. Every flag can also be
/// set in the config file; explicit flags win.
#[derive(Args, Clone)]
struct TuningArgs {
    /// Flat `key = value` config file mirroring these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cost model: log-gap, fanout[:P], or abs-diff.
    #[arg(long)]
    objective: Option<String>,
    /// Recursion depth cap.
    #[arg(long)]
    max_depth: Option<u32>,
    /// Refinement rounds per bisection.
    #[arg(long)]
    iterations: Option<u32>,
    /// Probability that a vertex skips its move during an exchange round.
    #[arg(long)]
    skip_prob: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 or 1 runs sequentially.
    #[arg(long)]
    threads: Option<usize>,
    /// Recursion levels dispatched to the thread pool.
    #[arg(long)]
    parallel_depth: Option<u32>,
    /// Reservoir capacity for trace sampling.
    #[arg(long)]
    sample_cap: Option<usize>,
    /// Page size in bytes for the fault simulator.
    #[arg(long)]
    page_size: Option<u64>,
    /// Comma-separated prefix thresholds; defaults to doubling.
    #[arg(long)]
    thresholds: Option<String>,
    /// Layout algorithm: bp, baseline, random, order-avg, or greedy.
    #[arg(long)]
    comparator: Option<String>,
}

#[derive(Args)]
struct ReorderArgs {
    /// Function manifest: name<TAB>size<TAB>hot|cold<TAB>hex-hash,...
    #[arg(long)]
    manifest: PathBuf,
    /// Trace file: one trace per line, whitespace-separated names.
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Caller hints: `callee first_caller` per line.
    #[arg(long)]
    hints: Option<PathBuf>,
    /// Directory of raw function bodies named after the functions.
    #[arg(long)]
    bodies: Option<PathBuf>,
    /// Where to write the order file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    traces: PathBuf,
    /// Order file to evaluate.
    #[arg(long)]
    order: PathBuf,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args)]
struct KmerArgs {
    /// Raw byte file to measure.
    input: PathBuf,
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(long, default_value_t = 65536)]
    window: usize,
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    traces: PathBuf,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    traces: Option<PathBuf>,
    #[arg(long)]
    hints: Option<PathBuf>,
    #[arg(long)]
    bodies: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    tuning: TuningArgs,
}

/// A failure carrying its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Input(_) => Failure::input(e.to_string()),
            PipelineError::Internal(_) => Failure::internal(e.to_string()),
        }
    }
}

fn read_file(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: &Option<PathBuf>, content: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{content}");
            std::io::stdout()
                .flush()
                .map_err(|e| Failure::internal(format!("stdout: {e}")))
        }
    }
}

fn parse_objective(s: &str) -> Result<ObjectiveKind, Failure> {
    match s {
        "log-gap" => Ok(ObjectiveKind::UniformLogGap),
        "abs-diff" => Ok(ObjectiveKind::AbsoluteDifference),
        "fanout" => Ok(ObjectiveKind::fanout_default()),
        other => match other.strip_prefix("fanout:") {
            Some(p) => {
                let p: f64 = p
                    .parse()
                    .map_err(|_| Failure::input(format!("invalid fanout probability `{p}`")))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Failure::input(format!(
                        "fanout probability {p} outside [0, 1]"
                    )));
                }
                Ok(ObjectiveKind::ProbabilisticFanout(p))
            }
            None => Err(Failure::input(format!(
                "unknown objective `{other}` (expected log-gap|fanout[:P]|abs-diff)"
            ))),
        },
    }
}

/// Effective tuning: defaults, overridden by config file keys, overridden by
/// explicit flags. `threads` is handled separately by the pool setup.
struct Tuning {
    pipeline: PipelineConfig,
    threads: usize,
}

fn resolve_tuning(args: &TuningArgs) -> Result<Tuning, Failure> {
    let mut from_config: HashMap<String, String> = HashMap::new();
    if let Some(path) = &args.config {
        let pairs = parse_config(&read_file(path)?)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        from_config.extend(pairs);
    }
    // Flag wins over config; config wins over None.
    let pick = |flag: &Option<String>, key: &str| -> Option<String> {
        flag.clone().or_else(|| from_config.get(key).cloned())
    };
    let parse_num = |text: Option<String>, key: &str| -> Result<Option<f64>, Failure> {
        text.map(|v| {
            v.parse::<f64>()
                .map_err(|_| Failure::input(format!("invalid {key} `{v}`")))
        })
        .transpose()
    };
    let num_flag = |flag: Option<f64>, key: &str| -> Result<Option<f64>, Failure> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => parse_num(from_config.get(key).cloned(), key),
        }
    };

    let mut partitioner = PartitionerConfig::default();
    if let Some(v) = num_flag(args.max_depth.map(|v| v as f64), "max-depth")? {
        partitioner.max_depth = v as u32;
    }
    if let Some(v) = num_flag(args.iterations.map(|v| v as f64), "iterations")? {
        partitioner.max_iterations = v as u32;
    }
    if let Some(v) = num_flag(args.skip_prob, "skip-prob")? {
        if !(0.0..=1.0).contains(&v) {
            return Err(Failure::input(format!("skip-prob {v} outside [0, 1]")));
        }
        partitioner.skip_probability = v;
    }
    if let Some(v) = num_flag(args.seed.map(|v| v as f64), "seed")? {
        partitioner.seed = v as u64;
    }
    if let Some(v) = num_flag(args.parallel_depth.map(|v| v as f64), "parallel-depth")? {
        partitioner.parallel_depth = v as u32;
    }
    if let Some(text) = pick(&args.objective, "objective") {
        partitioner.objective = parse_objective(&text)?;
    }

    let mut pipeline = PipelineConfig {
        partitioner,
        ..PipelineConfig::default()
    };
    if let Some(v) = num_flag(args.sample_cap.map(|v| v as f64), "sample-cap")? {
        pipeline.sample_cap = v as usize;
    }
    if let Some(v) = num_flag(args.page_size.map(|v| v as f64), "page-size")? {
        pipeline.page_size = v as u64;
    }
    if let Some(text) = pick(&args.thresholds, "thresholds") {
        let parsed: Result<Vec<u32>, _> = text
            .split(',')
            .map(|t| t.trim().parse::<u32>())
            .collect();
        pipeline.thresholds = Some(
            parsed.map_err(|_| Failure::input(format!("invalid thresholds `{text}`")))?,
        );
    }
    if let Some(text) = pick(&args.comparator, "comparator") {
        pipeline.comparator = text.parse::<Comparator>().map_err(Failure::input)?;
    }

    let threads = match num_flag(args.threads.map(|v| v as f64), "threads")? {
        Some(v) => v as usize,
        None => 0,
    };
    Ok(Tuning { pipeline, threads })
}

/// Runs `body` inside a rayon pool of the requested size; 0 means the
/// default pool. Thread count never changes results, only wall time.
fn with_pool<T>(
    threads: usize,
    body: impl FnOnce() -> Result<T, Failure> + Send,
) -> Result<T, Failure>
where
    T: Send,
{
    if threads == 0 {
        return body();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::input(format!("cannot build thread pool: {e}")))?
        .install(body)
}

fn load_input(
    manifest: &PathBuf,
    traces: &Option<PathBuf>,
    hints: &Option<PathBuf>,
    bodies: &Option<PathBuf>,
) -> Result<PipelineInput, Failure> {
    let manifest_text = read_file(manifest)?;
    let records = parse_manifest(&manifest_text)
        .map_err(|e| Failure::input(format!("{}: {e}", manifest.display())))?;

    let trace_names = match traces {
        Some(path) => parse_traces(&read_file(path)?)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?,
        None => Vec::new(),
    };
    let hint_pairs = match hints {
        Some(path) => parse_hints(&read_file(path)?)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?,
        None => Vec::new(),
    };

    // Bodies also backfill missing content hashes via shingling.
    let mut records = records;
    let body_map = match bodies {
        Some(dir) => {
            let mut map = HashMap::new();
            for rec in &mut records {
                let path = dir.join(&rec.name);
                let data = std::fs::read(&path).map_err(|e| {
                    Failure::input(format!("cannot read body {}: {e}", path.display()))
                })?;
                if rec.hashes.is_empty() {
                    rec.hashes = shingle_hashes(&data);
                }
                map.insert(rec.name.clone(), data);
            }
            Some(map)
        }
        None => None,
    };

    Ok(PipelineInput {
        manifest: records,
        traces: trace_names,
        hints: hint_pairs,
        bodies: body_map,
    })
}

fn cmd_reorder(args: &ReorderArgs) -> Result<(), Failure> {
    let tuning = resolve_tuning(&args.tuning)?;
    let input = load_input(&args.manifest, &args.traces, &args.hints, &args.bodies)?;
    let started = Instant::now();
    let out = with_pool(tuning.threads, || {
        run_pipeline(&input, &tuning.pipeline, &RayonJoiner).map_err(Failure::from)
    })?;
    let elapsed = started.elapsed();
    for w in &out.warnings {
        eprintln!("{w}");
    }
    // The report is deterministic; timing goes to stderr only.
    eprint!("{}", out.report);
    eprintln!("elapsed: {:.3}s", elapsed.as_secs_f64());
    write_output(&args.output, &render_order_file(&out.order))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let tuning = resolve_tuning(&args.tuning)?;
    let records = parse_manifest(&read_file(&args.manifest)?)
        .map_err(|e| Failure::input(format!("{}: {e}", args.manifest.display())))?;
    let id_of: HashMap<&str, u32> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.name.as_str(), i as u32))
        .collect();

    let resolve = |name: &str| -> Result<u32, Failure> {
        id_of
            .get(name)
            .copied()
            .ok_or_else(|| Failure::input(format!("function `{name}` not in manifest")))
    };
    let mut trace_list = Vec::new();
    for names in parse_traces(&read_file(&args.traces)?)
        .map_err(|e| Failure::input(format!("{}: {e}", args.traces.display())))?
    {
        let seq = names
            .iter()
            .map(|n| resolve(n))
            .collect::<Result<Vec<u32>, _>>()?;
        trace_list.push(Trace::new(seq).map_err(|e| Failure::input(e.to_string()))?);
    }

    let order_names = parse_order_file(&read_file(&args.order)?);
    let order = order_names
        .iter()
        .map(|n| resolve(n))
        .collect::<Result<Vec<u32>, _>>()?;
    let layout = Layout::new(order, "order-file".to_string());
    if !layout.is_permutation_of(records.len()) {
        return Err(Failure::input(format!(
            "{} is not a permutation of the manifest",
            args.order.display()
        )));
    }

    let sizes: Vec<u64> = records.iter().map(|r| r.size.max(1)).collect();
    let model = PagingModel::new(tuning.pipeline.page_size, sizes)
        .map_err(|e| Failure::input(e.to_string()))?;
    let curve = simulate_page_faults(&layout, &TraceSet::new(trace_list), &model)
        .map_err(|e| Failure::input(e.to_string()))?;
    eprintln!("curve_area: {}", curve.area());
    write_output(&args.output, &render_curve_csv(&curve))
}

fn cmd_kmer_metric(args: &KmerArgs) -> Result<(), Failure> {
    if args.k == 0 || args.window < args.k {
        return Err(Failure::input("need k >= 1 and window >= k"));
    }
    let data = std::fs::read(&args.input)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", args.input.display())))?;
    let params = KmerMetricParams {
        k: args.k,
        w: args.window,
        stride: args.stride.max(1),
    };
    println!("{}", kmer_window_metric(&data, &params));
    Ok(())
}

fn cmd_sample_traces(args: &SampleArgs) -> Result<(), Failure> {
    let tuning = resolve_tuning(&args.tuning)?;
    let traces = parse_traces(&read_file(&args.traces)?)
        .map_err(|e| Failure::input(format!("{}: {e}", args.traces.display())))?;

    // Sampling happens on name sequences via index traces, so the sampled
    // file round-trips byte-for-byte through the trace format.
    let index_traces: Vec<Trace> = (0..traces.len() as u32)
        .map(|i| Trace::new(vec![i]).expect("singleton traces have no duplicates"))
        .collect();
    let sampled = reservoir_sample(
        index_traces,
        tuning.pipeline.sample_cap,
        tuning.pipeline.partitioner.seed,
    );
    let kept: Vec<Vec<String>> = sampled
        .traces
        .iter()
        .map(|t| traces[t.sequence()[0] as usize].clone())
        .collect();
    write_output(&args.output, &render_traces(&kept))
}

fn cmd_compare(args: &CompareArgs) -> Result<(), Failure> {
    let tuning = resolve_tuning(&args.tuning)?;
    let input = load_input(&args.manifest, &args.traces, &args.hints, &args.bodies)?;
    let csv = with_pool(tuning.threads, || {
        compare_all(&input, &tuning.pipeline, &RayonJoiner).map_err(Failure::from)
    })?;
    write_output(&args.output, &csv)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Reorder(args) => cmd_reorder(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::KmerMetric(args) => cmd_kmer_metric(args),
        Command::SampleTraces(args) => cmd_sample_traces(args),
        Command::Compare(args) => cmd_compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
