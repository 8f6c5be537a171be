//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use ndarray::Array2;

use crate::baselines::BaselineMethod;
use crate::bench::{run_bench, BenchSource, BenchSpec};
use crate::diversity::{DiversityKind, DEFAULT_EXACT_DMAX_LIMIT, DEFAULT_RADIUS};
use crate::error::{Error, Result};
use crate::graph::{NodeId, SparseGraph};
use crate::greedy::{SelectionMode, DEFAULT_GAMMA};
use crate::influence::{default_prune_floor, DEFAULT_THETA};
use crate::io::{self, Splits};
use crate::pipeline::{run_baseline, run_selection, verify_report};
use crate::probe::{coreset_sweep, train_and_evaluate, EvalConfig, DEFAULT_L2};
use crate::propagation::{propagate, Kernel, PropagationConfig, DEFAULT_ALPHA, DEFAULT_STEPS};
use crate::report::{BudgetAccuracy, EvalReport, InputEcho, Method, RunConfig, SelectionReport, SCHEMA_VERSION};
use crate::sbm::{generate_sbm, random_splits, SbmParams};

#[derive(Debug, Parser)]
#[command(name = "dimsel", version, about = "Diversified influence-based seed node selection")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Greedily select seed nodes.
    Select(SelectCmd),
    /// Select seed nodes with a baseline method.
    Baseline(BaselineCmd),
    /// Score a selection report with the linear probe.
    Eval(EvalCmd),
    /// Run a method x budget accuracy grid over repeated seeds.
    Bench(BenchCmd),
    /// Write a synthetic SBM dataset.
    GenerateSbm(GenerateSbmCmd),
    /// Recompute the objective of a selection report.
    Verify(VerifyCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    Sym,
    Rw,
    Ppr,
    Tri,
    S2gc,
    Gbp,
}

impl From<KernelArg> for Kernel {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Sym => Kernel::NormalizedAdjacency,
            KernelArg::Rw => Kernel::RandomWalk,
            KernelArg::Ppr => Kernel::Ppr,
            KernelArg::Tri => Kernel::Triangle,
            KernelArg::S2gc => Kernel::S2gc,
            KernelArg::Gbp => Kernel::Gbp,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DiversityArg {
    Ball,
    Nn,
}

impl From<DiversityArg> for DiversityKind {
    fn from(d: DiversityArg) -> Self {
        match d {
            DiversityArg::Ball => DiversityKind::Ball,
            DiversityArg::Nn => DiversityKind::Nn,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Lazy,
    Naive,
}

impl From<ModeArg> for SelectionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Lazy => SelectionMode::Lazy,
            ModeArg::Naive => SelectionMode::Naive,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BaselineArg {
    Random,
    Degree,
    Kcenter,
}

impl From<BaselineArg> for BaselineMethod {
    fn from(b: BaselineArg) -> Self {
        match b {
            BaselineArg::Random => BaselineMethod::Random,
            BaselineArg::Degree => BaselineMethod::Degree,
            BaselineArg::Kcenter => BaselineMethod::Kcenter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    DimBall,
    DimNn,
    Random,
    Degree,
    Kcenter,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::DimBall => Method::DimBall,
            MethodArg::DimNn => Method::DimNn,
            MethodArg::Random => Method::Random,
            MethodArg::Degree => Method::Degree,
            MethodArg::Kcenter => Method::Kcenter,
        }
    }
}

/// Graph, feature and split inputs.
#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Edge list: `u v [w]` per line, `#` comments, optional `N <count>` header.
    #[arg(long)]
    pub graph: PathBuf,
    /// Node features: headerless CSV, or `.bin`/`.f32` little-endian f32.
    #[arg(long)]
    pub features: PathBuf,
    /// Node labels as `node class` lines; unlisted nodes are unlabelled.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Directory with train.txt, val.txt and test.txt; the train split is
    /// the candidate pool.
    #[arg(long)]
    pub splits: Option<PathBuf>,
    /// Keep edges directed instead of symmetrizing.
    #[arg(long)]
    pub directed: bool,
    /// Compact sparse node ids to 0..N and write the id map to this file.
    #[arg(long)]
    pub id_map: Option<PathBuf>,
}

/// Selection settings shared by every selecting subcommand.
#[derive(Debug, Clone, Args)]
pub struct SelectionArgs {
    #[arg(long, value_enum, default_value = "rw")]
    pub kernel: KernelArg,
    /// Propagation steps.
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Comma-separated GBP weights theta_0..theta_k.
    #[arg(long, value_delimiter = ',')]
    pub gbp_weights: Option<Vec<f64>>,
    /// Activation threshold on normalized influence.
    #[arg(long, default_value_t = DEFAULT_THETA)]
    pub theta: f64,
    /// Influence scores below this are not stored (defaults to theta, or
    /// 1e-4 when theta is 0).
    #[arg(long)]
    pub prune_floor: Option<f64>,
    #[arg(long, value_enum, default_value = "ball")]
    pub diversity: DiversityArg,
    /// Ball radius for ball-coverage diversity.
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    pub radius: f64,
    /// Weight of the diversity term.
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value = "lazy")]
    pub mode: ModeArg,
    /// Keep only this fraction of the candidate pool, highest degree first.
    #[arg(long)]
    pub prune_degree: Option<f64>,
    /// Node count above which d_max is estimated by sampling.
    #[arg(long, default_value_t = DEFAULT_EXACT_DMAX_LIMIT)]
    pub exact_dmax_limit: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SelectionArgs {
    fn run_config(&self, budget: usize) -> Result<RunConfig> {
        let mut propagation = PropagationConfig::new(self.kernel.into(), self.k).with_alpha(self.alpha);
        if let Some(w) = &self.gbp_weights {
            propagation = propagation.with_gbp_weights(w.clone());
        }
        propagation.validate()?;
        if !(self.radius >= 0.0) {
            return Err(Error::config(format!("radius must be >= 0, got {}", self.radius)));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::config(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        Ok(RunConfig {
            propagation,
            theta: self.theta,
            prune_floor: self.prune_floor.unwrap_or_else(|| default_prune_floor(self.theta)),
            diversity: self.diversity.into(),
            radius: self.radius,
            gamma: self.gamma,
            mode: self.mode.into(),
            budget,
            seed: self.seed,
            prune_degree: self.prune_degree,
            exact_dmax_limit: self.exact_dmax_limit,
        })
    }
}

#[derive(Debug, Args)]
pub struct SelectCmd {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    /// Number of seeds.
    #[arg(long)]
    pub budget: usize,
    /// Report path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record per-round wall times (makes the report non-reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct BaselineCmd {
    #[arg(long, value_enum)]
    pub method: BaselineArg,
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[arg(long)]
    pub budget: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalCmd {
    /// Selection report to score.
    #[arg(long)]
    pub report: PathBuf,
    /// Edge list (defaults to the path recorded in the report).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Features (defaults to the path recorded in the report).
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub splits: PathBuf,
    /// Comma-separated seed-prefix sizes (defaults to the full seed set).
    #[arg(long, value_delimiter = ',')]
    pub budgets: Option<Vec<usize>>,
    /// Also compare against a probe trained on the whole train split.
    #[arg(long)]
    pub coreset: bool,
    #[arg(long, default_value_t = DEFAULT_L2)]
    pub l2: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SbmArgs {
    #[arg(long, default_value_t = 2)]
    pub blocks: usize,
    #[arg(long, default_value_t = 200)]
    pub per_block: usize,
    #[arg(long, default_value_t = 0.05)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.005)]
    pub p_out: f64,
    #[arg(long, default_value_t = 16)]
    pub feat_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub feat_shift: f64,
    #[arg(long, default_value_t = 0.1)]
    pub val_frac: f64,
    #[arg(long, default_value_t = 0.4)]
    pub test_frac: f64,
}

impl SbmArgs {
    fn params(&self) -> SbmParams {
        SbmParams {
            blocks: self.blocks,
            per_block: self.per_block,
            p_in: self.p_in,
            p_out: self.p_out,
            feat_dim: self.feat_dim,
            feat_shift: self.feat_shift,
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchCmd {
    /// Fixed dataset inputs; an SBM instance per run is generated when
    /// `--graph` is absent.
    #[arg(long, requires_all = ["features", "labels", "splits"])]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub splits: Option<PathBuf>,
    #[arg(long)]
    pub directed: bool,
    #[command(flatten)]
    pub sbm: SbmArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "dim-ball,random,degree,kcenter")]
    pub methods: Vec<MethodArg>,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
    pub budgets: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[arg(long, default_value_t = DEFAULT_L2)]
    pub l2: f64,
    /// CSV summary path.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    /// Markdown table path (stdout when omitted).
    #[arg(long)]
    pub out_md: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateSbmCmd {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub sbm: SbmArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct VerifyCmd {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub directed: Option<bool>,
}

/// Process exit status for an error: 2 for bad settings, 3 for bad input
/// data, 1 for internal failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Parse { .. } | Error::Domain(_) | Error::Io { .. } | Error::NonFinite { .. } | Error::Csv(_) => 3,
        Error::Json(_) => 3,
        Error::Contract(_) => 1,
    }
}

struct Loaded {
    graph: SparseGraph,
    features: Array2<f64>,
    splits: Option<Splits>,
}

fn load_inputs(args: &InputArgs) -> Result<Loaded> {
    let symmetrize = !args.directed;
    let graph = match &args.id_map {
        Some(map_path) => {
            let (graph, original) = io::load_edge_list_remapped(&args.graph, symmetrize)?;
            io::write_id_map(map_path, &original)?;
            graph
        }
        None => io::load_edge_list(&args.graph, symmetrize)?,
    };
    let features = load_features_for(&graph, &args.features)?;
    let n = graph.num_nodes();
    // Labels are not used for selection; loading them still validates the file.
    if let Some(p) = &args.labels {
        io::load_labels(p, n)?;
    }
    let splits = args.splits.as_deref().map(|p| io::load_splits(p, n)).transpose()?;
    Ok(Loaded {
        graph,
        features,
        splits,
    })
}

fn load_features_for(graph: &SparseGraph, path: &Path) -> Result<Array2<f64>> {
    let features = io::load_features(path)?;
    if features.nrows() != graph.num_nodes() {
        return Err(Error::Domain(format!(
            "{} has {} feature rows but the graph has {} nodes",
            path.display(),
            features.nrows(),
            graph.num_nodes()
        )));
    }
    Ok(features)
}

fn echo(args: &InputArgs) -> InputEcho {
    InputEcho {
        graph: args.graph.display().to_string(),
        features: args.features.display().to_string(),
        labels: args.labels.as_ref().map(|p| p.display().to_string()),
        splits: args.splits.as_ref().map(|p| p.display().to_string()),
        directed: args.directed,
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pool_of(splits: &Option<Splits>) -> Option<Vec<NodeId>> {
    splits.as_ref().map(|s| s.train.clone())
}

fn finish_report(mut report: SelectionReport, inputs: &InputArgs, out: Option<&Path>) -> Result<()> {
    for w in &report.warnings {
        warn!("{w}");
    }
    report.inputs = Some(echo(inputs));
    emit(&report.to_json()?, out)
}

fn cmd_select(cmd: SelectCmd) -> Result<()> {
    let config = cmd.selection.run_config(cmd.budget)?;
    let data = load_inputs(&cmd.inputs)?;
    let report = run_selection(&data.graph, &data.features, &config, pool_of(&data.splits), cmd.timings)?;
    finish_report(report, &cmd.inputs, cmd.out.as_deref())
}

fn cmd_baseline(cmd: BaselineCmd) -> Result<()> {
    let config = cmd.selection.run_config(cmd.budget)?;
    let data = load_inputs(&cmd.inputs)?;
    let report = run_baseline(
        &data.graph,
        &data.features,
        cmd.method.into(),
        &config,
        pool_of(&data.splits),
    )?;
    finish_report(report, &cmd.inputs, cmd.out.as_deref())
}

/// Resolves an input path from the flag or the report's input echo.
fn from_report(flag: Option<PathBuf>, report: &SelectionReport, pick: fn(&InputEcho) -> &str, what: &str) -> Result<PathBuf> {
    flag.or_else(|| report.inputs.as_ref().map(|i| PathBuf::from(pick(i))))
        .ok_or_else(|| Error::config(format!("--{what} is required: the report does not record it")))
}

fn report_graph(report: &SelectionReport, graph: Option<PathBuf>, directed: Option<bool>) -> Result<SparseGraph> {
    let path = from_report(graph, report, |i| &i.graph, "graph")?;
    let directed = directed.unwrap_or_else(|| report.inputs.as_ref().is_some_and(|i| i.directed));
    io::load_edge_list(&path, !directed)
}

fn cmd_eval(cmd: EvalCmd) -> Result<()> {
    let report = SelectionReport::read(&cmd.report)?;
    let graph = report_graph(&report, cmd.graph.clone(), None)?;
    let features_path = from_report(cmd.features.clone(), &report, |i| &i.features, "features")?;
    let features = load_features_for(&graph, &features_path)?;
    let n = graph.num_nodes();
    let labels = io::load_labels(&cmd.labels, n)?;
    let splits = io::load_splits(&cmd.splits, n)?;
    let propagated = propagate(&graph, &features, &report.config.propagation)?;
    let probe = EvalConfig {
        l2_penalty: cmd.l2,
        ..EvalConfig::default()
    };
    let budgets = cmd.budgets.clone().unwrap_or_else(|| vec![report.seeds.len()]);
    if let Some(&b) = budgets.iter().find(|&&b| b == 0 || b > report.seeds.len()) {
        return Err(Error::config(format!(
            "budget {b} must lie in 1..={} (the report's seed count)",
            report.seeds.len()
        )));
    }
    let mut results = Vec::with_capacity(budgets.len());
    for &b in &budgets {
        let accuracy = train_and_evaluate(propagated.values.view(), &labels, &report.seeds[..b], &splits.test, &probe)?;
        results.push(BudgetAccuracy {
            method: report.method,
            budget: b,
            accuracy,
        });
    }
    let coreset = if cmd.coreset {
        let mut sorted = budgets.clone();
        sorted.sort_unstable();
        sorted.dedup();
        let selections: Vec<(usize, Vec<NodeId>)> = sorted.iter().map(|&b| (b, report.seeds[..b].to_vec())).collect();
        Some(coreset_sweep(
            propagated.values.view(),
            &labels,
            &selections,
            &splits.train,
            &splits.test,
            &probe,
        )?)
    } else {
        None
    };
    let out = EvalReport {
        schema_version: SCHEMA_VERSION,
        method: report.method,
        selection: report.config.clone(),
        probe,
        results,
        coreset,
        warnings: report.warnings.clone(),
    };
    emit(&out.to_json()?, cmd.out.as_deref())
}

fn cmd_bench(cmd: BenchCmd) -> Result<()> {
    let mut budgets = cmd.budgets.clone();
    budgets.sort_unstable();
    budgets.dedup();
    let max_budget = *budgets.last().ok_or_else(|| Error::config("--budgets is empty"))?;
    let config = cmd.selection.run_config(max_budget)?;
    let source = match &cmd.graph {
        Some(graph_path) => {
            let graph = io::load_edge_list(graph_path, !cmd.directed)?;
            let n = graph.num_nodes();
            let features = load_features_for(&graph, cmd.features.as_deref().expect("clap requires --features"))?;
            let labels = io::load_labels(cmd.labels.as_deref().expect("clap requires --labels"), n)?;
            let splits = io::load_splits(cmd.splits.as_deref().expect("clap requires --splits"), n)?;
            BenchSource::Fixed {
                graph,
                features,
                labels,
                splits,
            }
        }
        None => BenchSource::Sbm {
            params: cmd.sbm.params(),
            val_frac: cmd.sbm.val_frac,
            test_frac: cmd.sbm.test_frac,
        },
    };
    let spec = BenchSpec {
        source,
        methods: cmd.methods.iter().map(|&m| m.into()).collect(),
        budgets,
        runs: cmd.runs,
        base_seed: cmd.selection.seed,
        config,
        eval: EvalConfig {
            l2_penalty: cmd.l2,
            ..EvalConfig::default()
        },
    };
    let table = run_bench(&spec)?;
    if let Some(path) = &cmd.out_csv {
        emit(&table.to_csv()?, Some(path))?;
    }
    emit(&table.to_markdown(), cmd.out_md.as_deref())
}

fn cmd_generate_sbm(cmd: GenerateSbmCmd) -> Result<()> {
    let inst = generate_sbm(&cmd.sbm.params(), cmd.seed)?;
    let dir = &cmd.out;
    std::fs::create_dir_all(dir.join("splits")).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    io::write_edge_list(&dir.join("graph.txt"), &inst.graph)?;
    io::write_features(&dir.join("features.csv"), &inst.features)?;
    io::write_labels(&dir.join("labels.txt"), &inst.labels)?;
    let splits = random_splits(inst.graph.num_nodes(), cmd.sbm.val_frac, cmd.sbm.test_frac, cmd.seed);
    io::write_splits(&dir.join("splits"), &splits)
}

fn cmd_verify(cmd: VerifyCmd) -> Result<()> {
    let report = SelectionReport::read(&cmd.report)?;
    let graph = report_graph(&report, cmd.graph.clone(), cmd.directed)?;
    let features_path = from_report(cmd.features.clone(), &report, |i| &i.features, "features")?;
    let features = load_features_for(&graph, &features_path)?;
    let recomputed = verify_report(&graph, &features, &report)?;
    let recorded = report.objective.breakdown.value;
    if (recomputed.value - recorded).abs() > 1e-9 || recomputed.activated != report.objective.breakdown.activated {
        return Err(Error::Contract(format!(
            "report objective {recorded} does not match recomputed {} (activated {} vs {})",
            recomputed.value, report.objective.breakdown.activated, recomputed.activated
        )));
    }
    println!(
        "ok: F(S) = {:.12} with {} seeds, {} activated",
        recomputed.value,
        report.seeds.len(),
        recomputed.activated
    );
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::config(format!("cannot start {threads} worker threads: {e}")))?;
    }
    match cli.command {
        Command::Select(cmd) => cmd_select(cmd),
        Command::Baseline(cmd) => cmd_baseline(cmd),
        Command::Eval(cmd) => cmd_eval(cmd),
        Command::Bench(cmd) => cmd_bench(cmd),
        Command::GenerateSbm(cmd) => cmd_generate_sbm(cmd),
        Command::Verify(cmd) => cmd_verify(cmd),
    }
}
