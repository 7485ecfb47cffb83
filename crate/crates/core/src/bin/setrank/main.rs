//! Command-line driver: build an index, search, evaluate, tune and select.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use setrank::autoselect::{self, Distance, SelectionReport};
use setrank::corpus::ingest_corpus;
use setrank::evaluation::{evaluate_run, grid_search_cv, load_qrels, load_run, write_run, CvReport, FoldPlan, Gain};
use setrank::grids;
use setrank::hierarchy::{biomedical, TypeHierarchy};
use setrank::query::{build_query_graph, load_queries};
use setrank::rankers::{Bm25Params, QueryTable};
use setrank::store::{load_index, save_index};
use setrank::{CorpusIndex, Model, ParameterSetting, QueryGraph, Ranker, Variant};

const REPORT_FORMAT: &str = "setrank-report";
const REPORT_VERSION: u32 = 1;

/// Entity-set aware ranking of documents with word and entity annotations.
///
/// Formats:
///   corpus      JSON lines: {"doc_id", "fields": {"title"|"abstract": {"words": [..], "entities": [{"id", "type"?}]}}}
///   queries     JSON lines: {"query_id", "text" | "words": [..], "entities": [{"id", "type"?}]}
///   hierarchy   TSV lines `child<TAB>parent`, the root written as `root<TAB>-`
///   params      JSON ParameterSetting {"delta_title", "delta_abs", "mu_title", "mu_abs", "lambda_e", "jm_lambda"?}
///   grid        JSON list of ParameterSetting objects
///   qrels       `query_id 0 doc_id grade`
///   run         `query_id Q0 doc_id rank score tag`
#[derive(Parser, Debug)]
#[command(name = "setrank", version, verbatim_doc_comment)]
struct Cli {
    /// Seed for every random choice; echoed into each report.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ingest a corpus and write an index file.
    Index {
        #[arg(long)]
        corpus: PathBuf,
        /// Type hierarchy stored alongside the index.
        #[arg(long)]
        hierarchy: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank documents for each query and write a run file plus `<out>.meta.json`.
    Search {
        #[command(flatten)]
        input: QueryInput,
        #[command(flatten)]
        model: ModelArgs,
        /// ParameterSetting JSON; defaults are used when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a run file against qrels.
    Eval {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        /// JSON report path; the table always goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validated grid search against qrels.
    Tune {
        #[command(flatten)]
        input: QueryInput,
        #[arg(long)]
        qrels: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Cutoff whose mean NDCG picks the setting.
        #[arg(long, default_value_t = 20)]
        objective: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pick a SetRank setting without relevance labels.
    Autoselect {
        #[command(flatten)]
        input: QueryInput,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, value_enum, default_value_t = VariantArg::Full)]
        variant: VariantArg,
        #[arg(long, value_enum, default_value_t = DistanceArg::Kt)]
        distance: DistanceArg,
        #[arg(long, default_value_t = autoselect::DEFAULT_POOL_K)]
        pool_k: usize,
        #[arg(long, default_value_t = autoselect::DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a built-in parameter grid as JSON.
    Grid {
        #[arg(long, value_enum)]
        preset: Preset,
        /// Model whose supervised grid to write (cv preset only).
        #[arg(long, default_value = "setrank")]
        model: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct QueryInput {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// Overrides the hierarchy stored in the index.
    #[arg(long)]
    hierarchy: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// One of setrank, bm25, lm-dir, lm-jm.
    #[arg(long, default_value = "setrank")]
    model: String,
    #[arg(long, value_enum, default_value_t = VariantArg::Full)]
    variant: VariantArg,
    #[arg(long, default_value_t = 1.2)]
    k1: f64,
    #[arg(long, default_value_t = 0.75)]
    b: f64,
}

impl ModelArgs {
    fn resolve(&self) -> Result<Model> {
        Ok(Model::from_name(
            &self.model,
            self.variant.into(),
            Bm25Params { k1: self.k1, b: self.b },
        )?)
    }
}

#[derive(Args, Debug)]
struct MetricArgs {
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20")]
    cutoffs: Vec<usize>,
    #[arg(long, value_enum, default_value_t = GainArg::Exp)]
    gain: GainArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Full,
    NoType,
    NoSet,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Full => Variant::Full,
            VariantArg::NoType => Variant::NoType,
            VariantArg::NoSet => Variant::NoSet,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DistanceArg {
    Kt,
    Poskt,
}

impl From<DistanceArg> for Distance {
    fn from(d: DistanceArg) -> Self {
        match d {
            DistanceArg::Kt => Distance::Kt,
            DistanceArg::Poskt => Distance::PosKt,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GainArg {
    Exp,
    Linear,
}

impl From<GainArg> for Gain {
    fn from(g: GainArg) -> Self {
        match g {
            GainArg::Exp => Gain::Exp,
            GainArg::Linear => Gain::Linear,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Autoselect,
    Cv,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn report(command: &str, seed: u64, config: Value, result: impl Serialize) -> Result<Value> {
    Ok(json!({
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "command": command,
        "seed": seed,
        "config": config,
        "result": serde_json::to_value(result)?,
    }))
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

struct Loaded {
    index: CorpusIndex,
    graphs: Vec<QueryGraph>,
}

fn load_inputs(input: &QueryInput) -> Result<Loaded> {
    let (index, stored) =
        load_index(&input.index).with_context(|| format!("cannot load index {}", input.index.display()))?;
    let hierarchy = match &input.hierarchy {
        Some(p) => TypeHierarchy::load(p).with_context(|| format!("cannot load hierarchy {}", p.display()))?,
        None => stored.unwrap_or_else(biomedical),
    };
    let queries =
        load_queries(&input.queries).with_context(|| format!("cannot load queries {}", input.queries.display()))?;
    let graphs = queries
        .iter()
        .map(|q| build_query_graph(q, &hierarchy))
        .collect::<setrank::Result<Vec<_>>>()
        .with_context(|| format!("in {}", input.queries.display()))?;
    Ok(Loaded { index, graphs })
}

fn input_config(input: &QueryInput) -> Value {
    json!({
        "index": path_str(&input.index),
        "queries": path_str(&input.queries),
        "hierarchy": input.hierarchy.as_deref().map(path_str),
    })
}

fn print_or_write(out: Option<&Path>, value: &Value) -> Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => Ok(()),
    }
}

fn cmd_index(corpus: &Path, hierarchy: Option<&Path>, out: &Path) -> Result<()> {
    let index = ingest_corpus(corpus).with_context(|| format!("cannot ingest {}", corpus.display()))?;
    let hierarchy = hierarchy
        .map(|p| TypeHierarchy::load(p).with_context(|| format!("cannot load hierarchy {}", p.display())))
        .transpose()?;
    save_index(out, &index, hierarchy.as_ref()).with_context(|| format!("cannot write {}", out.display()))?;
    eprintln!("indexed {} documents into {}", index.doc_count(), out.display());
    Ok(())
}

fn cmd_search(seed: u64, input: &QueryInput, model: &ModelArgs, params: Option<&Path>, k: usize, out: &Path) -> Result<()> {
    if k == 0 {
        bail!("--k must be at least 1");
    }
    let setting: ParameterSetting = match params {
        Some(p) => read_json(p)?,
        None => ParameterSetting::default(),
    };
    let ranker = Ranker::new(model.resolve()?, setting)?;
    let loaded = load_inputs(input)?;
    let lists = loaded
        .graphs
        .iter()
        .map(|g| QueryTable::new(&loaded.index, g).rank(&ranker, k))
        .collect::<setrank::Result<Vec<_>>>()?;
    let tag = ranker.tag();
    let file = File::create(out).with_context(|| format!("cannot write {}", out.display()))?;
    let mut w = BufWriter::new(file);
    write_run(&mut w, &lists, &tag)?;
    w.flush()?;

    let config = json!({
        "input": input_config(input),
        "ranker": ranker,
        "k": k,
        "out": path_str(out),
    });
    let meta = report(
        "search",
        seed,
        config,
        json!({ "tag": tag, "queries": lists.len(), "lines": lists.iter().map(|l| l.len()).sum::<usize>() }),
    )?;
    let mut meta_path = out.as_os_str().to_owned();
    meta_path.push(".meta.json");
    write_json(Path::new(&meta_path), &meta)?;
    eprintln!("wrote {} ranked lists to {} ({tag})", lists.len(), out.display());
    Ok(())
}

fn cmd_eval(seed: u64, run: &Path, qrels: &Path, metric: &MetricArgs, out: Option<&Path>) -> Result<()> {
    let r = load_run(run).with_context(|| format!("cannot load run {}", run.display()))?;
    let q = load_qrels(qrels).with_context(|| format!("cannot load qrels {}", qrels.display()))?;
    let result = evaluate_run(&r, &q, &metric.cutoffs, metric.gain.into())?;
    print!("{}", result.table());
    let config = json!({
        "run": path_str(run),
        "qrels": path_str(qrels),
        "cutoffs": metric.cutoffs,
        "gain": Gain::from(metric.gain),
    });
    print_or_write(out, &report("eval", seed, config, &result)?)
}

fn cv_table(r: &CvReport) -> String {
    let mut out = String::from("fold\tselected\tvalidation");
    for k in &r.cutoffs {
        out.push_str(&format!("\tndcg@{k}"));
    }
    out.push('\n');
    for f in &r.folds {
        out.push_str(&format!("{}\t{}\t{:.4}", f.fold, f.selected, f.validation_ndcg));
        for v in &f.test_mean {
            out.push_str(&format!("\t{v:.4}"));
        }
        out.push('\n');
    }
    out.push_str("holdout\t-\t-");
    for v in &r.holdout_mean {
        out.push_str(&format!("\t{v:.4}"));
    }
    out.push('\n');
    out
}

#[allow(clippy::too_many_arguments)]
fn cmd_tune(
    seed: u64,
    input: &QueryInput,
    qrels: &Path,
    grid: &Path,
    model: &ModelArgs,
    metric: &MetricArgs,
    folds: usize,
    objective: usize,
    out: Option<&Path>,
) -> Result<()> {
    let model = model.resolve()?;
    let grid_settings: Vec<ParameterSetting> = read_json(grid)?;
    let q = load_qrels(qrels).with_context(|| format!("cannot load qrels {}", qrels.display()))?;
    let loaded = load_inputs(input)?;
    // only judged queries take part
    let ids: Vec<&str> = loaded
        .graphs
        .iter()
        .map(|g| g.query_id.as_str())
        .filter(|id| q.judgments(id).is_some())
        .collect();
    let plan = FoldPlan::new(&ids, folds, seed)?;
    let result = grid_search_cv(
        &loaded.index,
        &loaded.graphs,
        &q,
        model,
        &grid_settings,
        &plan,
        objective,
        &metric.cutoffs,
        metric.gain.into(),
    )?;
    print!("{}", cv_table(&result));
    let config = json!({
        "input": input_config(input),
        "qrels": path_str(qrels),
        "grid": path_str(grid),
        "grid_size": grid_settings.len(),
        "model": model,
        "folds": folds,
        "objective": objective,
        "cutoffs": metric.cutoffs,
        "gain": Gain::from(metric.gain),
    });
    print_or_write(out, &report("tune", seed, config, &result)?)
}

fn selection_table(r: &SelectionReport, grid: &[ParameterSetting], top: usize) -> String {
    let mut out = String::from("rank\tsetting\tscore\tlambda_e\tdelta_title\tdelta_abs\tmu_title\tmu_abs\n");
    for (rank, i) in r.ranking().into_iter().take(top).enumerate() {
        let s = &grid[i];
        out.push_str(&format!(
            "{}\t{}\t{:.6}\t{}\t{}\t{}\t{}\t{}\n",
            rank + 1,
            i,
            r.scores[i],
            s.lambda_e,
            s.delta_title,
            s.delta_abs,
            s.mu_title,
            s.mu_abs
        ));
    }
    let unconverged = r.per_query.iter().filter(|t| !t.converged && !t.skipped).count();
    out.push_str(&format!(
        "queries: {}, not converged: {unconverged}, skipped: {}\n",
        r.per_query.len(),
        r.per_query.iter().filter(|t| t.skipped).count()
    ));
    out
}

#[allow(clippy::too_many_arguments)]
fn cmd_autoselect(
    seed: u64,
    input: &QueryInput,
    grid: &Path,
    variant: Variant,
    distance: Distance,
    pool_k: usize,
    max_iter: usize,
    out: Option<&Path>,
) -> Result<()> {
    let grid_settings: Vec<ParameterSetting> = read_json(grid)?;
    let loaded = load_inputs(input)?;
    let result = autoselect::select_model(
        &loaded.index,
        &loaded.graphs,
        &grid_settings,
        variant,
        distance,
        pool_k,
        max_iter,
    )?;
    print!("{}", selection_table(&result, &grid_settings, 10));
    let config = json!({
        "input": input_config(input),
        "grid": path_str(grid),
        "grid_size": grid_settings.len(),
        "variant": variant,
        "distance": distance,
        "pool_k": pool_k,
        "max_iter": max_iter,
    });
    let body = json!({
        "winner_setting": grid_settings[result.winner],
        "selection": result,
    });
    print_or_write(out, &report("autoselect", seed, config, body)?)
}

fn cmd_grid(preset: Preset, model: &str, out: &Path) -> Result<()> {
    let grid = match preset {
        Preset::Autoselect => grids::autoselect_grid(),
        Preset::Cv => grids::cv_grid(&Model::from_name(model, Variant::Full, Bm25Params::default())?),
    };
    write_json(out, &grid)?;
    eprintln!("wrote {} settings to {}", grid.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match &cli.command {
        Command::Index { corpus, hierarchy, out } => cmd_index(corpus, hierarchy.as_deref(), out),
        Command::Search {
            input,
            model,
            params,
            k,
            out,
        } => cmd_search(seed, input, model, params.as_deref(), *k, out),
        Command::Eval { run, qrels, metric, out } => cmd_eval(seed, run, qrels, metric, out.as_deref()),
        Command::Tune {
            input,
            qrels,
            grid,
            model,
            metric,
            folds,
            objective,
            out,
        } => cmd_tune(seed, input, qrels, grid, model, metric, *folds, *objective, out.as_deref()),
        Command::Autoselect {
            input,
            grid,
            variant,
            distance,
            pool_k,
            max_iter,
            out,
        } => cmd_autoselect(
            seed,
            input,
            grid,
            (*variant).into(),
            (*distance).into(),
            *pool_k,
            *max_iter,
            out.as_deref(),
        ),
        Command::Grid { preset, model, out } => cmd_grid(*preset, model, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
