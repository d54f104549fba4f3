//! Command-line front end. Each stage reads and writes plain files so runs can
//! be resumed, inspected or fed from other tools.

use std::ffi::OsString;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use paper2vec::baselines::{baseline_table, Measure};
use paper2vec::eval::{
    entropy_novelty, intersection_ratio, GoldStandard, GoldTies, IntersectionOptions, MetricReport,
    RatioDenominator,
};
use paper2vec::graph::{read_edge_records, GraphBuilder};
use paper2vec::synth::{generate, SynthConfig};
use paper2vec::trainer::{update_online, Checkpoint};
use paper2vec::{
    all_top_k, build_context_matrix, ingest_edges, train, CitationGraph, ContextConfig,
    ContextMatrix, LambdaMode, Optimizer, PaperVectors, RankingTable, TrainConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MISSING_INPUT: i32 = 3;
pub const EXIT_STAGE_ORDER: i32 = 4;

#[derive(Debug)]
struct MissingInput(PathBuf);

impl fmt::Display for MissingInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "input file not found: {}", self.0.display())
    }
}

impl std::error::Error for MissingInput {}

/// An upstream artifact is absent: the stage producing it has not run.
#[derive(Debug)]
struct StageOrder(String);

impl fmt::Display for StageOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for StageOrder {}

#[derive(Parser, Debug)]
#[command(
    name = "paper2vec",
    version,
    about = "Citation-graph document embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate an edge list and write it back in canonical form.
    Ingest {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the clipped log context matrix.
    BuildContext {
        #[arg(long)]
        edges: PathBuf,
        #[command(flatten)]
        context: ContextArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit embeddings to a context matrix, or update a checkpoint online.
    Train(TrainCmd),
    /// Rank every embedded document's nearest neighbors by cosine.
    Topk {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank documents with a citation-overlap measure.
    Baseline {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long, default_value = "amsler")]
        measure: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Intersection ratio of rankings against gold scores.
    Evaluate {
        #[arg(long)]
        rankings: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write per-query values as CSV.
        #[arg(long)]
        per_query: Option<PathBuf>,
    },
    /// Entropy of how often each document is recommended.
    Novelty {
        #[arg(long)]
        rankings: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run context, training, ranking and evaluation in one go.
    Pipeline(PipelineCmd),
    /// Generate a planted-community citation graph with gold scores.
    Synth {
        #[arg(long, default_value_t = 2)]
        communities: usize,
        #[arg(long, default_value_t = 200)]
        nodes: usize,
        #[arg(long, default_value_t = 0.1)]
        p_in: f64,
        #[arg(long, default_value_t = 0.005)]
        p_out: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Fraction of documents that also cite the first one.
        #[arg(long, default_value_t = 0.0)]
        hub_fraction: f64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
struct ContextArgs {
    #[arg(long, default_value_t = 3)]
    win: usize,
    /// Fixed shift added to the log mass.
    #[arg(long, conflicts_with = "lambda_auto_q")]
    lambda: Option<f64>,
    /// Choose the shift so this fraction of masses is clipped.
    #[arg(long)]
    lambda_auto_q: Option<f64>,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    exclude_diagonal: bool,
    #[arg(long, default_value_t = 0.0)]
    prune_threshold: f64,
}

impl ContextArgs {
    fn config(&self) -> ContextConfig {
        let lambda = match (self.lambda, self.lambda_auto_q) {
            (Some(l), _) => LambdaMode::Fixed(l),
            (None, Some(q)) => LambdaMode::Auto { percentile: q },
            (None, None) => ContextConfig::default().lambda,
        };
        ContextConfig {
            win: self.win,
            lambda,
            exclude_diagonal: self.exclude_diagonal,
            prune_threshold: self.prune_threshold,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct TrainArgs {
    #[arg(long, default_value_t = 500)]
    dim: usize,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// `adaptive` or `plain-sgd`.
    #[arg(long, default_value = "adaptive")]
    optimizer: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Train on the averaged two-way context instead of the raw one.
    #[arg(long)]
    symmetrize: bool,
}

impl TrainArgs {
    fn config(&self) -> anyhow::Result<TrainConfig> {
        let config = TrainConfig {
            dim: self.dim,
            epochs: self.epochs,
            alpha: self.alpha,
            optimizer: self.optimizer.parse::<Optimizer>()?,
            seed: self.seed,
            workers: self.workers,
            symmetrize: self.symmetrize,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum TiesArg {
    Truncate,
    Inclusive,
}

#[derive(Args, Debug, Clone)]
struct EvalArgs {
    /// How gold lists with ties at rank K are cut.
    #[arg(long, value_enum, default_value = "truncate")]
    gold_ties: TiesArg,
    /// Divide by the returned list length instead of K.
    #[arg(long)]
    divide_by_list_len: bool,
}

impl EvalArgs {
    fn options(&self) -> IntersectionOptions {
        IntersectionOptions {
            ties: match self.gold_ties {
                TiesArg::Truncate => GoldTies::Truncate,
                TiesArg::Inclusive => GoldTies::Inclusive,
            },
            denominator: if self.divide_by_list_len {
                RatioDenominator::ListLength
            } else {
                RatioDenominator::K
            },
        }
    }
}

#[derive(Args, Debug)]
struct TrainCmd {
    /// Edge list the context was built from; supplies document ids.
    #[arg(long)]
    edges: PathBuf,
    /// Context matrix from `build-context`.
    #[arg(long)]
    context: Option<PathBuf>,
    /// Continue from this checkpoint instead of training from scratch.
    #[arg(long, requires = "edges_delta", conflicts_with = "context")]
    resume: Option<PathBuf>,
    /// New citation records to fold into a resumed model.
    #[arg(long, requires = "resume")]
    edges_delta: Option<PathBuf>,
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    loss: Option<PathBuf>,
    /// Plain-text vectors, one document per line.
    #[arg(long)]
    text: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PipelineCmd {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long, default_value = "paper2vec-out")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Also rank with these overlap measures for comparison.
    #[arg(long)]
    baseline: Vec<String>,
    #[command(flatten)]
    context: ContextArgs,
    #[command(flatten)]
    train: TrainArgs,
    #[command(flatten)]
    eval: EvalArgs,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Errors are reported on stderr as a single line.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<MissingInput>().is_some() {
                EXIT_MISSING_INPUT
            } else if e.downcast_ref::<StageOrder>().is_some() {
                EXIT_STAGE_ORDER
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn require_input(path: &Path) -> anyhow::Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(MissingInput(path.to_owned()).into())
    }
}

fn require_stage(path: Option<&Path>, flag: &str, stage: &str) -> anyhow::Result<PathBuf> {
    match path {
        Some(p) if p.is_file() => Ok(p.to_owned()),
        Some(p) => Err(StageOrder(format!(
            "{} does not exist; run `{stage}` first",
            p.display()
        ))
        .into()),
        None => Err(StageOrder(format!("{flag} is required; run `{stage}` first")).into()),
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn lambda_text(mode: LambdaMode) -> String {
    match mode {
        LambdaMode::Fixed(l) => format!("{l}"),
        LambdaMode::Auto { percentile } => format!("auto(q={percentile})"),
    }
}

fn describe_context(c: &ContextConfig) -> String {
    format!(
        "win={} lambda={} exclude_diagonal={} prune_threshold={}",
        c.win,
        lambda_text(c.lambda),
        c.exclude_diagonal,
        c.prune_threshold
    )
}

fn describe_train(t: &TrainConfig) -> String {
    format!(
        "dim={} epochs={} alpha={} optimizer={} seed={} workers={} symmetrize={}",
        t.dim,
        t.epochs,
        t.alpha,
        t.optimizer.name(),
        t.seed,
        t.workers,
        t.symmetrize
    )
}

fn load_graph(path: &Path) -> anyhow::Result<CitationGraph> {
    require_input(path)?;
    let records = read_edge_records(path).with_context(|| format!("reading {}", path.display()))?;
    let graph = ingest_edges(records);
    info!(
        "graph {}: {} documents, {} links",
        path.display(),
        graph.node_count(),
        graph.edge_count()
    );
    Ok(graph)
}

fn load_gold(path: &Path) -> anyhow::Result<GoldStandard> {
    require_input(path)?;
    GoldStandard::read_file(path).with_context(|| format!("reading {}", path.display()))
}

fn load_rankings(path: &Path) -> anyhow::Result<RankingTable> {
    let path = require_stage(Some(path), "--rankings", "topk")?;
    RankingTable::read_file(&path).with_context(|| format!("reading {}", path.display()))
}

fn write_reports(reports: &[MetricReport], out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let mut w = create(path)?;
            for r in reports {
                r.write(&mut w)?;
            }
        }
        None => {
            let stdout = std::io::stdout();
            for r in reports {
                r.write(stdout.lock())?;
            }
        }
    }
    Ok(())
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Ingest { edges, out } => {
            let graph = load_graph(&edges)?;
            if let Some(out) = out {
                graph.write_edges(create(&out)?)?;
            }
            Ok(())
        }
        Command::BuildContext {
            edges,
            context,
            out,
        } => {
            let config = context.config();
            config.validate()?;
            let graph = load_graph(&edges)?;
            info!("context config: {}", describe_context(&config));
            let matrix = build_context_matrix(&graph, &config)?;
            info!("lambda={} entries={}", matrix.lambda, matrix.len());
            matrix.write(create(&out)?)?;
            Ok(())
        }
        Command::Train(cmd) => run_train(cmd),
        Command::Topk { model, k, out } => {
            let model = require_stage(Some(&model), "--model", "train")?;
            let vectors = PaperVectors::read_model_file(&model)
                .with_context(|| format!("reading {}", model.display()))?;
            info!("topk: k={k}, {} documents", vectors.len());
            all_top_k(&vectors, k)?.write(create(&out)?)?;
            Ok(())
        }
        Command::Baseline {
            edges,
            measure,
            k,
            out,
        } => {
            let measure: Measure = measure.parse()?;
            let graph = load_graph(&edges)?;
            info!("baseline: measure={measure} k={k}");
            baseline_table(&graph, measure, k)?.write(create(&out)?)?;
            Ok(())
        }
        Command::Evaluate {
            rankings,
            gold,
            k,
            eval,
            out,
            per_query,
        } => {
            let table = load_rankings(&rankings)?;
            let gold = load_gold(&gold)?;
            let options = eval.options();
            info!("evaluate: k={k} {options:?}");
            let report = intersection_ratio(&table, &gold, k, options)?;
            if let Some(path) = per_query {
                report.write_per_query(create(&path)?)?;
            }
            write_reports(&[report], out.as_deref())
        }
        Command::Novelty { rankings, out } => {
            let table = load_rankings(&rankings)?;
            write_reports(&[entropy_novelty(&table)?], out.as_deref())
        }
        Command::Pipeline(cmd) => run_pipeline(cmd),
        Command::Synth {
            communities,
            nodes,
            p_in,
            p_out,
            seed,
            hub_fraction,
            out_dir,
        } => {
            let config = SynthConfig {
                communities,
                nodes,
                p_in,
                p_out,
                seed,
                hub_fraction,
            };
            info!("synth: {config:?}");
            let g = generate(&config)?;
            fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            g.write_dir(&out_dir)?;
            info!(
                "wrote edges.tsv, gold.tsv, labels.tsv to {}",
                out_dir.display()
            );
            Ok(())
        }
    }
}

/// Writes the model artifacts shared by `train` and `pipeline`. Documents
/// without context rows get no vector.
fn export_model(
    checkpoint: &Checkpoint,
    trained: &[bool],
    model_path: &Path,
    text_path: Option<&Path>,
) -> anyhow::Result<PaperVectors> {
    let mut model = checkpoint.model.clone();
    model.clear_rows(trained);
    let vectors = model.finalize(&checkpoint.ids)?;
    let missing = (0..vectors.len())
        .filter(|&i| !vectors.is_embedded(i))
        .count();
    if missing > 0 {
        info!("{missing} documents have no context and are left unembedded");
    }
    vectors.write_model(create(model_path)?)?;
    if let Some(p) = text_path {
        vectors.write_text(create(p)?)?;
    }
    Ok(vectors)
}

fn run_train(cmd: TrainCmd) -> anyhow::Result<()> {
    let config = cmd.train.config()?;
    if let Some(resume) = &cmd.resume {
        return run_resume(&cmd, resume, &config);
    }
    let context = require_stage(cmd.context.as_deref(), "--context", "build-context")?;
    let graph = load_graph(&cmd.edges)?;
    let matrix = ContextMatrix::read_file(&context)
        .with_context(|| format!("reading {}", context.display()))?;
    if matrix.node_count != graph.node_count() {
        bail!(
            "context matrix covers {} documents but {} has {}",
            matrix.node_count,
            cmd.edges.display(),
            graph.node_count()
        );
    }
    info!(
        "context: {} lambda={}",
        describe_context(&matrix.config),
        matrix.lambda
    );
    info!("train config: {}", describe_train(&config));
    let (model, trace) = train(&matrix, &config)?;
    if let Some(last) = trace.epochs.last() {
        info!("final epoch cost {last}");
    }
    let checkpoint = Checkpoint::new(graph.ids().clone(), model, matrix.config, matrix.lambda);
    export_model(
        &checkpoint,
        &matrix.source_mask(),
        &cmd.model,
        cmd.text.as_deref(),
    )?;
    if let Some(p) = &cmd.checkpoint {
        checkpoint.write(create(p)?)?;
    }
    if let Some(p) = &cmd.loss {
        trace.write(create(p)?)?;
    }
    Ok(())
}

fn run_resume(cmd: &TrainCmd, resume: &Path, config: &TrainConfig) -> anyhow::Result<()> {
    let resume = require_stage(Some(resume), "--resume", "train --checkpoint")?;
    let delta_path = cmd
        .edges_delta
        .as_deref()
        .expect("clap enforces --edges-delta");
    require_input(&cmd.edges)?;
    require_input(delta_path)?;
    let mut checkpoint =
        Checkpoint::read_file(&resume).with_context(|| format!("reading {}", resume.display()))?;
    let old = read_edge_records(&cmd.edges)
        .with_context(|| format!("reading {}", cmd.edges.display()))?;
    let delta = read_edge_records(delta_path)
        .with_context(|| format!("reading {}", delta_path.display()))?;

    // keep the checkpoint's row order; unseen ids are appended
    let mut builder = GraphBuilder::new();
    for id in checkpoint.ids.ids() {
        builder.add_document(id);
    }
    for (a, b) in old.iter().chain(&delta) {
        builder.add_citation(a, b);
    }
    let graph = builder.build();
    info!(
        "resume: {} documents in checkpoint, {} after update; context {} lambda={}",
        checkpoint.ids.len(),
        graph.node_count(),
        describe_context(&checkpoint.context),
        checkpoint.lambda()
    );
    info!("train config: {}", describe_train(config));
    let report = update_online(&mut checkpoint, &graph, &delta, config)?;

    let trained: Vec<bool> = (0..graph.node_count())
        .map(|i| graph.degree(i) > 0)
        .collect();
    export_model(&checkpoint, &trained, &cmd.model, cmd.text.as_deref())?;
    let out = cmd.checkpoint.as_deref().unwrap_or(&resume);
    checkpoint.write(create(out)?)?;
    if let Some(p) = &cmd.loss {
        report.trace.write(create(p)?)?;
    }
    Ok(())
}

fn run_pipeline(cmd: PipelineCmd) -> anyhow::Result<()> {
    let context_config = cmd.context.config();
    context_config.validate()?;
    let train_config = cmd.train.config()?;
    let measures = cmd
        .baseline
        .iter()
        .map(|m| m.parse::<Measure>())
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(g) = &cmd.gold {
        require_input(g)?;
    }
    let graph = load_graph(&cmd.edges)?;
    let dir = &cmd.out_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let built = build_context_matrix(&graph, &context_config)?;
    let context_path = dir.join("context.tsv");
    built.write(create(&context_path)?)?;
    // train from the file so a pipeline run matches the staged commands exactly
    let matrix = ContextMatrix::read_file(&context_path)?;
    info!(
        "resolved config: {} resolved_lambda={} {} k={} {:?}",
        describe_context(&context_config),
        matrix.lambda,
        describe_train(&train_config),
        cmd.k,
        cmd.eval.options()
    );
    let mut cfg = create(&dir.join("config.txt"))?;
    writeln!(cfg, "edges\t{}", cmd.edges.display())?;
    writeln!(cfg, "context\t{}", describe_context(&context_config))?;
    writeln!(cfg, "resolved_lambda\t{}", matrix.lambda)?;
    writeln!(cfg, "train\t{}", describe_train(&train_config))?;
    writeln!(cfg, "k\t{}", cmd.k)?;
    cfg.flush()?;

    let (model, trace) = train(&matrix, &train_config)?;
    trace.write(create(&dir.join("loss.tsv"))?)?;
    let checkpoint = Checkpoint::new(graph.ids().clone(), model, matrix.config, matrix.lambda);
    checkpoint.write(create(&dir.join("checkpoint.bin"))?)?;
    let model_path = dir.join("model.bin");
    export_model(
        &checkpoint,
        &matrix.source_mask(),
        &model_path,
        Some(&dir.join("vectors.txt")),
    )?;
    // rank the stored single-precision vectors, as `topk` would
    let vectors = PaperVectors::read_model_file(&model_path)?;

    let rankings = all_top_k(&vectors, cmd.k)?;
    rankings.write(create(&dir.join("rankings.tsv"))?)?;
    let mut tables = vec![("paper2vec".to_owned(), rankings)];
    for m in measures {
        let t = baseline_table(&graph, m, cmd.k)?;
        t.write(create(&dir.join(format!("rankings-{m}.tsv")))?)?;
        tables.push((m.to_string(), t));
    }

    let gold = cmd.gold.as_deref().map(load_gold).transpose()?;
    for (system, table) in &tables {
        let suffix = if system == "paper2vec" {
            String::new()
        } else {
            format!("-{system}")
        };
        let mut reports = Vec::new();
        if let Some(gold) = &gold {
            let r = intersection_ratio(table, gold, cmd.k, cmd.eval.options())?;
            r.write_per_query(create(&dir.join(format!("per-query{suffix}.csv")))?)?;
            reports.push(r);
        }
        match entropy_novelty(table) {
            Ok(r) => reports.push(r),
            Err(paper2vec::Error::EmptyRankings) => info!("{system}: no recommendations"),
            Err(e) => return Err(e.into()),
        }
        for r in &reports {
            info!("{system}: {}", r.line());
        }
        write_reports(&reports, Some(&dir.join(format!("report{suffix}.tsv"))))?;
    }
    Ok(())
}
