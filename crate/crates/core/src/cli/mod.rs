//! Command-line front end. Each command reads the previous stage's files from
//! the output directory and writes its own.

pub mod config;

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::corpus::{corpus_stats, parse_dataset, sample_per_app, write_csv, write_jsonl, Approach, Format, LabeledExample, RecordId, ReviewRecord};
use crate::error::{Error, Result};
use crate::eval::{evaluate_by_app, markdown_table, summary_csv, ByAppReport, EvalReport};
use crate::features::FeatureTable;
use crate::lexicon::Lexicons;
use crate::models::{train, Dataset, ModelKind, TrainedModel};
use crate::pipeline::{self, prepare, prepare_folds, Featurizer, LabeledCorpus};
use crate::preprocess::preprocess;
use crate::select::{select_features, SelectionReport};
use crate::topics::{fit_lda, TopicModel};
pub use config::ProjectConfig;

pub const RECORDS: &str = "records.jsonl";
pub const INGEST_ERRORS: &str = "ingest_errors.csv";
pub const STATS: &str = "stats.json";
pub const LABELS: &str = "labels.csv";
pub const LABEL_SUMMARY: &str = "label_summary.json";
pub const TOPICS: &str = "topics.json";
pub const TOPIC_SWEEP: &str = "topic_sweep.csv";
pub const IDF: &str = "idf.json";
pub const FEATURES: &str = "features.csv";
pub const SELECTION_CSV: &str = "selection.csv";
pub const SELECTION: &str = "selection.json";
pub const RANK: &str = "rank.csv";
pub const LOCK: &str = ".lock";

pub fn model_file(kind: ModelKind) -> String {
    format!("model-{kind}.json")
}

pub fn eval_file(kind: ModelKind, ext: &str) -> String {
    format!("eval-{kind}.{ext}")
}

pub fn by_app_file(kind: ModelKind, ext: &str) -> String {
    format!("by_app-{kind}.{ext}")
}

#[derive(Debug, Parser)]
#[command(name = "review-priority", version, about = "Rank app reviews by predicted developer-response priority")]
pub struct Cli {
    /// Flat `key = value` project config; command-line flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory holding every stage artifact.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Directory with replacement lexicon files.
    #[arg(long, global = true)]
    pub lexicon_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a review dataset into the artifact directory.
    Ingest {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
    },
    /// Corpus statistics, including mean response latency.
    Stats,
    /// Label reviews under one approach.
    Label {
        #[arg(long)]
        approach: Option<Approach>,
        #[arg(long)]
        threshold_days: Option<f64>,
    },
    /// Topic modelling.
    #[command(subcommand)]
    Topics(TopicsCommand),
    /// Compute the 34-feature matrix for labeled reviews.
    Featurize(FeaturizeArgs),
    /// Pearson-correlation feature selection over the feature matrix.
    Select {
        #[arg(long)]
        min_abs_r: Option<f64>,
        #[arg(long)]
        redundancy_r: Option<f64>,
    },
    /// Train one model on the selected features.
    Train(TrainArgs),
    /// K-fold cross-validation with per-fold refitting.
    Evaluate {
        #[command(flatten)]
        train: TrainArgs,
        /// Number of folds.
        #[arg(long)]
        cv: Option<usize>,
        #[arg(long)]
        cv_seed: Option<u64>,
        /// Featurize and select on the whole corpus before splitting.
        #[arg(long)]
        paper_mode: bool,
        /// Also report per-app metrics over the held-out predictions.
        #[arg(long)]
        group_by_app: bool,
        /// Evaluate all four models.
        #[arg(long)]
        all_models: bool,
        /// Relabel under this approach instead of reading the label stage output.
        #[arg(long)]
        approach: Option<Approach>,
        #[arg(long)]
        threshold_days: Option<f64>,
        #[command(flatten)]
        featurize: FeaturizeArgs,
    },
    /// Score reviews with a trained model and write the response queue.
    Rank {
        #[arg(long)]
        model: Option<ModelKind>,
        /// Keep only the first N rows.
        #[arg(long)]
        top: Option<usize>,
        /// Score only reviews without a response.
        #[arg(long)]
        unresponded_only: bool,
    },
    /// Collect evaluation results into one table.
    Report {
        #[arg(long, default_value = "md")]
        format: ReportFormat,
    },
    /// Seeded per-app sample of the ingested reviews, written as a dataset CSV.
    Sample {
        #[arg(long)]
        per_app: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the effective configuration as a config file.
    Config,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Csv,
    Md,
}

#[derive(Debug, Subcommand)]
pub enum TopicsCommand {
    /// Fit the topic model on the labeled reviews.
    Fit(LdaArgs),
    /// Held-out perplexity for several topic counts.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "5,10,15,20")]
        k_list: Vec<usize>,
        #[command(flatten)]
        lda: LdaArgs,
    },
    /// Print the most probable words of each topic.
    TopWords {
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct LdaArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub min_df: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct FeaturizeArgs {
    /// Map unknown tokens to their unique edit-distance-1 lexicon neighbour.
    #[arg(long)]
    pub spell_check: bool,
    #[arg(long)]
    pub english_threshold: Option<f64>,
    #[arg(long)]
    pub inference_sweeps: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Weight classes inversely to their frequency.
    #[arg(long)]
    pub balance_classes: bool,
}

/// Exclusive use of an output directory; released on drop.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(DirLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(dir.to_path_buf())),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

struct Ctx {
    config: ProjectConfig,
    out: PathBuf,
    /// Relabel from records instead of reading `labels.csv`.
    relabel: bool,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn require(&self, name: &str, stage: &'static str) -> Result<PathBuf> {
        let p = self.path(name);
        if p.exists() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact { stage, path: p })
        }
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let p = self.path(name);
        File::create(&p).map(BufWriter::new).map_err(|e| Error::io(&p, e))
    }

    fn lexicons(&self) -> Result<Lexicons> {
        match &self.config.lexicon_dir {
            Some(dir) => Lexicons::from_dir(dir),
            None => Ok(Lexicons::bundled()),
        }
    }

    fn records(&self) -> Result<Vec<ReviewRecord>> {
        let p = self.require(RECORDS, "ingest")?;
        Ok(parse_dataset(&p, Format::Jsonl)?.records)
    }

    fn labels(&self) -> Result<Vec<LabeledExample>> {
        read_labels(&self.require(LABELS, "label")?)
    }

    fn corpus(&self) -> Result<(LabeledCorpus, Lexicons)> {
        let records = self.records()?;
        let labels = if self.relabel {
            pipeline::label(&records, self.config.approach, self.config.threshold_days).examples
        } else {
            self.labels()?
        };
        let lexicons = self.lexicons()?;
        let corpus = prepare(&records, &labels, &lexicons, &self.config.featurize.preprocess)?;
        Ok((corpus, lexicons))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(self.path(name), e))
    }

    fn read_json<T: DeserializeOwned>(&self, name: &str, stage: &'static str) -> Result<T> {
        let p = self.require(name, stage)?;
        let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn flush(&self, mut w: BufWriter<File>, name: &str) -> Result<()> {
        w.flush().map_err(|e| Error::io(self.path(name), e))
    }
}

pub fn write_labels(path: &Path, labels: &[LabeledExample]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["record_id", "label", "approach"])?;
    for l in labels {
        wtr.write_record([l.record_id.to_string(), l.label.to_string(), l.approach.cli_name().to_string()])?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

pub fn read_labels(path: &Path) -> Result<Vec<LabeledExample>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let bad = || Error::malformed("labels row", row.iter().collect::<Vec<_>>().join(","));
        let record_id = RecordId(row.get(0).and_then(|v| v.parse().ok()).ok_or_else(bad)?);
        let label: u8 = row.get(1).and_then(|v| v.parse().ok()).filter(|l| *l <= 1).ok_or_else(bad)?;
        let approach: Approach = row.get(2).ok_or_else(bad)?.parse()?;
        out.push(LabeledExample {
            record_id,
            label,
            approach,
        });
    }
    Ok(out)
}

fn apply_lda(config: &mut ProjectConfig, lda: &LdaArgs) {
    let c = &mut config.featurize.lda;
    if let Some(k) = lda.k {
        c.k = k;
    }
    if let Some(v) = lda.iters {
        c.iterations = v;
    }
    if let Some(v) = lda.seed {
        c.seed = v;
    }
    if lda.alpha.is_some() {
        c.alpha = lda.alpha;
    }
    if let Some(v) = lda.beta {
        c.beta = v;
    }
    if let Some(v) = lda.min_df {
        c.min_df = v;
    }
}

fn apply_featurize(config: &mut ProjectConfig, args: &FeaturizeArgs) {
    let f = &mut config.featurize;
    if args.spell_check {
        f.preprocess.spell_check = true;
    }
    if let Some(v) = args.english_threshold {
        f.preprocess.english_threshold = v;
    }
    if let Some(v) = args.inference_sweeps {
        f.inference_sweeps = v;
    }
}

fn apply_train(config: &mut ProjectConfig, args: &TrainArgs) {
    if let Some(m) = args.model {
        config.train.kind = m;
    }
    if let Some(s) = args.seed {
        config.train.seed = s;
    }
    if args.balance_classes {
        config.train.balance_classes = true;
    }
}

/// Parse arguments and run one command. Returns the text printed on success.
pub fn run<I, T>(args: I) -> Result<String>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
    execute(cli)
}

pub fn execute(cli: Cli) -> Result<String> {
    let mut config = match &cli.config {
        Some(p) => ProjectConfig::load(p)?,
        None => ProjectConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    if let Some(dir) = &cli.lexicon_dir {
        config.lexicon_dir = Some(dir.clone());
    }
    if let Command::Config = cli.command {
        return Ok(config.render());
    }
    let out = config.out.clone();
    let _lock = DirLock::acquire(&out)?;
    let mut ctx = Ctx {
        config,
        out,
        relabel: false,
    };
    match cli.command {
        Command::Ingest { input, format } => {
            if let Some(i) = input {
                ctx.config.input = Some(i);
            }
            if format.is_some() {
                ctx.config.format = format;
            }
            cmd_ingest(&ctx)
        }
        Command::Stats => cmd_stats(&ctx),
        Command::Label {
            approach,
            threshold_days,
        } => {
            if let Some(a) = approach {
                ctx.config.approach = a;
            }
            if let Some(t) = threshold_days {
                ctx.config.threshold_days = t;
            }
            cmd_label(&ctx)
        }
        Command::Topics(TopicsCommand::Fit(lda)) => {
            apply_lda(&mut ctx.config, &lda);
            cmd_topics_fit(&ctx)
        }
        Command::Topics(TopicsCommand::Sweep { k_list, lda }) => {
            apply_lda(&mut ctx.config, &lda);
            cmd_topics_sweep(&ctx, &k_list)
        }
        Command::Topics(TopicsCommand::TopWords { n }) => cmd_top_words(&ctx, n),
        Command::Featurize(args) => {
            apply_featurize(&mut ctx.config, &args);
            cmd_featurize(&ctx)
        }
        Command::Select {
            min_abs_r,
            redundancy_r,
        } => {
            if let Some(v) = min_abs_r {
                ctx.config.selection.min_abs_r = v;
            }
            if let Some(v) = redundancy_r {
                ctx.config.selection.redundancy_r = v;
            }
            cmd_select(&ctx)
        }
        Command::Train(args) => {
            apply_train(&mut ctx.config, &args);
            cmd_train(&ctx)
        }
        Command::Evaluate {
            train,
            cv,
            cv_seed,
            paper_mode,
            group_by_app,
            all_models,
            approach,
            threshold_days,
            featurize,
        } => {
            if let Some(a) = approach {
                ctx.config.approach = a;
                ctx.relabel = true;
            }
            if let Some(t) = threshold_days {
                ctx.config.threshold_days = t;
                ctx.relabel = true;
            }
            apply_train(&mut ctx.config, &train);
            apply_featurize(&mut ctx.config, &featurize);
            if let Some(k) = cv {
                ctx.config.cv.k = k;
            }
            if let Some(s) = cv_seed {
                ctx.config.cv.seed = s;
            } else if let Some(s) = train.seed {
                ctx.config.cv.seed = s;
            }
            if paper_mode {
                ctx.config.cv.paper_mode = true;
            }
            let kinds = if all_models {
                ModelKind::ALL.to_vec()
            } else {
                vec![ctx.config.train.kind]
            };
            cmd_evaluate(&ctx, &kinds, group_by_app)
        }
        Command::Rank {
            model,
            top,
            unresponded_only,
        } => {
            if let Some(m) = model {
                ctx.config.train.kind = m;
            }
            cmd_rank(&ctx, top, unresponded_only)
        }
        Command::Report { format } => cmd_report(&ctx, format),
        Command::Sample { per_app, seed, output } => cmd_sample(&ctx, per_app, seed, output),
        Command::Config => unreachable!("handled above"),
    }
}

fn cmd_ingest(ctx: &Ctx) -> Result<String> {
    let input = ctx
        .config
        .input
        .clone()
        .ok_or_else(|| Error::Config("ingest needs --input".into()))?;
    let format = match ctx.config.format {
        Some(f) => f,
        None => Format::from_path(&input)
            .ok_or_else(|| Error::Config(format!("cannot infer the format of {}; pass --format", input.display())))?,
    };
    let outcome = parse_dataset(&input, format)?;
    let w = ctx.create(RECORDS)?;
    write_jsonl(&outcome.records, w)?;
    let mut wtr = csv::Writer::from_path(ctx.path(INGEST_ERRORS))?;
    wtr.write_record(["line", "error"])?;
    for e in &outcome.errors {
        wtr.write_record([e.line.to_string(), e.kind.to_string()])?;
    }
    wtr.flush().map_err(|e| Error::io(ctx.path(INGEST_ERRORS), e))?;
    Ok(format!(
        "ingested {} records, skipped {} malformed rows\n",
        outcome.records.len(),
        outcome.errors.len()
    ))
}

fn cmd_stats(ctx: &Ctx) -> Result<String> {
    let stats = corpus_stats(&ctx.records()?);
    ctx.write_json(STATS, &stats)?;
    let latency = stats
        .mean_response_latency_days
        .map_or_else(|| "n/a".to_string(), |d| format!("{d:.4} days"));
    Ok(format!(
        "records: {}\nresponded: {}\ndropped as updated after response: {}\nmean response latency: {latency}\n",
        stats.n_records, stats.n_responded, stats.n_dropped_updated
    ))
}

#[derive(Serialize)]
struct LabelSummary {
    approach: Approach,
    threshold_days: f64,
    n_labeled: usize,
    n_positive: usize,
    dropped_updated: usize,
    skipped_unresponded: usize,
    skipped_negative_latency: usize,
}

fn cmd_label(ctx: &Ctx) -> Result<String> {
    let records = ctx.records()?;
    let labeling = pipeline::label(&records, ctx.config.approach, ctx.config.threshold_days);
    write_labels(&ctx.path(LABELS), &labeling.examples)?;
    let count = |reason| labeling.skipped.iter().filter(|(_, r)| *r == reason).count();
    let summary = LabelSummary {
        approach: ctx.config.approach,
        threshold_days: ctx.config.threshold_days,
        n_labeled: labeling.examples.len(),
        n_positive: labeling.examples.iter().filter(|e| e.label == 1).count(),
        dropped_updated: labeling.dropped_updated,
        skipped_unresponded: count(crate::corpus::SkipReason::Unresponded),
        skipped_negative_latency: count(crate::corpus::SkipReason::NegativeLatency),
    };
    ctx.write_json(LABEL_SUMMARY, &summary)?;
    Ok(format!(
        "{} labels ({} positive) under `{}`\n",
        summary.n_labeled,
        summary.n_positive,
        summary.approach.cli_name()
    ))
}

fn stem_docs(corpus: &LabeledCorpus) -> Vec<Vec<String>> {
    corpus.reviews.iter().map(|r| r.stems.clone()).collect()
}

fn cmd_topics_fit(ctx: &Ctx) -> Result<String> {
    let (corpus, _) = ctx.corpus()?;
    let model = fit_lda(&stem_docs(&corpus), &ctx.config.featurize.lda)?;
    ctx.write_json(TOPICS, &model)?;
    Ok(format!(
        "fitted {} topics over {} documents, vocabulary {}\n",
        model.k,
        corpus.len(),
        model.vocab_size()
    ))
}

fn cmd_topics_sweep(ctx: &Ctx, k_list: &[usize]) -> Result<String> {
    let (corpus, _) = ctx.corpus()?;
    let docs = stem_docs(&corpus);
    let folds = crate::eval::kfold_split(docs.len(), 5, ctx.config.featurize.lda.seed)?;
    let held: Vec<Vec<String>> = folds[0].iter().map(|&i| docs[i].clone()).collect();
    let mut in_held = vec![false; docs.len()];
    for &i in &folds[0] {
        in_held[i] = true;
    }
    let train: Vec<Vec<String>> = (0..docs.len()).filter(|&i| !in_held[i]).map(|i| docs[i].clone()).collect();
    let rows: Vec<(usize, f64)> = {
        use rayon::prelude::*;
        k_list
            .par_iter()
            .map(|&k| {
                let mut lda = ctx.config.featurize.lda;
                lda.k = k;
                let model = fit_lda(&train, &lda)?;
                Ok((k, model.perplexity(&held, ctx.config.featurize.inference_sweeps, lda.seed)))
            })
            .collect::<Result<_>>()?
    };
    let mut wtr = csv::Writer::from_path(ctx.path(TOPIC_SWEEP))?;
    wtr.write_record(["k", "perplexity"])?;
    let mut text = String::from("k\tperplexity\n");
    for (k, p) in &rows {
        wtr.write_record([k.to_string(), format!("{p:.4}")])?;
        text.push_str(&format!("{k}\t{p:.4}\n"));
    }
    wtr.flush().map_err(|e| Error::io(ctx.path(TOPIC_SWEEP), e))?;
    Ok(text)
}

fn load_topics(ctx: &Ctx) -> Result<TopicModel> {
    let model: TopicModel = ctx.read_json(TOPICS, "topics fit")?;
    model.check_version()?;
    Ok(model)
}

fn cmd_top_words(ctx: &Ctx, n: usize) -> Result<String> {
    let model = load_topics(ctx)?;
    let mut out = String::new();
    for (k, words) in model.top_words(n).iter().enumerate() {
        let list: Vec<String> = words.iter().map(|(w, p)| format!("{w} ({p:.3})")).collect();
        out.push_str(&format!("topic {k}: {}\n", list.join(", ")));
    }
    Ok(out)
}

fn cmd_featurize(ctx: &Ctx) -> Result<String> {
    let topics = load_topics(ctx)?;
    let (corpus, lexicons) = ctx.corpus()?;
    let featurizer = Featurizer {
        idf: crate::features::IdfTable::fit(corpus.reviews.iter().map(|r| r.stems.iter())),
        topics,
        inference_sweeps: ctx.config.featurize.inference_sweeps,
    };
    let all: Vec<usize> = (0..corpus.len()).collect();
    let table = featurizer.table(&corpus, &all, &lexicons)?;
    ctx.write_json(IDF, &featurizer.idf)?;
    let w = ctx.create(FEATURES)?;
    table.write_csv(w)?;
    Ok(format!(
        "featurized {} reviews ({} removed by the language filter)\n",
        table.len(),
        corpus.non_english.len()
    ))
}

fn load_features(ctx: &Ctx) -> Result<FeatureTable> {
    let p = ctx.require(FEATURES, "featurize")?;
    FeatureTable::read_csv(File::open(&p).map_err(|e| Error::io(&p, e))?)
}

fn approach_of(ctx: &Ctx) -> Result<Approach> {
    Ok(ctx.labels()?.first().map_or(ctx.config.approach, |l| l.approach))
}

fn cmd_select(ctx: &Ctx) -> Result<String> {
    let table = load_features(ctx)?;
    let approach = approach_of(ctx)?;
    let report = select_features(&table, &crate::features::approach_features(approach), &ctx.config.selection)?;
    ctx.write_json(SELECTION, &report)?;
    let w = ctx.create(SELECTION_CSV)?;
    report.write_csv(w)?;
    Ok(report.to_text())
}

fn cmd_train(ctx: &Ctx) -> Result<String> {
    let table = load_features(ctx)?;
    let selection: SelectionReport = ctx.read_json(SELECTION, "select")?;
    let data = Dataset::from_table(&table, &selection.kept)?;
    let model = train(&data, &ctx.config.train)?;
    let name = model_file(model.kind);
    model.save(&ctx.path(&name))?;
    Ok(format!(
        "trained {} on {} rows with {} features -> {name}\n",
        model.kind.display_name(),
        data.len(),
        data.features.len()
    ))
}

fn cmd_evaluate(ctx: &Ctx, kinds: &[ModelKind], group_by_app: bool) -> Result<String> {
    let (corpus, lexicons) = ctx.corpus()?;
    let cfg = &ctx.config;
    let folds = prepare_folds(&corpus, &lexicons, &cfg.featurize, &cfg.selection, &cfg.cv)?;
    let mut text = String::new();
    let mut reports = Vec::new();
    for &kind in kinds {
        let mut train_config = cfg.train;
        train_config.kind = kind;
        let report = pipeline::evaluate(&folds, corpus.approach, &cfg.selection, &train_config)?;
        ctx.write_json(&eval_file(kind, "json"), &report)?;
        let w = ctx.create(&eval_file(kind, "csv"))?;
        report.write_csv(w)?;
        for f in &report.leakage {
            text.push_str(&format!(
                "warning: {f} ({}) correlates above 0.95 with the label in some training split\n",
                f.descriptor().name
            ));
        }
        if group_by_app {
            let by_app = by_app_report(&corpus, &report)?;
            ctx.write_json(&by_app_file(kind, "json"), &by_app)?;
            let mut w = ctx.create(&by_app_file(kind, "md"))?;
            w.write_all(by_app.markdown().as_bytes()).map_err(|e| Error::io(ctx.path(&by_app_file(kind, "md")), e))?;
            ctx.flush(w, &by_app_file(kind, "md"))?;
            text.push_str(&format!("{}: mean per-app F1 {:.4}\n", kind.display_name(), by_app.mean_f1));
        }
        reports.push(report);
    }
    text.push_str(&markdown_table(&reports));
    Ok(text)
}

fn by_app_report(corpus: &LabeledCorpus, report: &EvalReport) -> Result<ByAppReport> {
    let app_of: std::collections::HashMap<RecordId, &str> =
        corpus.records.iter().map(|r| (r.record_id, r.app_name.as_str())).collect();
    evaluate_by_app(report.held_out.iter().map(|h| (app_of[&h.record_id], h.label, h.predicted)))
}

fn cmd_rank(ctx: &Ctx, top: Option<usize>, unresponded_only: bool) -> Result<String> {
    let kind = ctx.config.train.kind;
    let model = TrainedModel::load(&ctx.require(&model_file(kind), "train")?)?;
    let topics = load_topics(ctx)?;
    let idf = ctx.read_json(IDF, "featurize")?;
    let lexicons = ctx.lexicons()?;
    let records: Vec<ReviewRecord> = ctx
        .records()?
        .into_iter()
        .filter(|r| !unresponded_only || !r.has_response())
        .collect();
    let featurizer = Featurizer {
        idf,
        topics,
        inference_sweeps: ctx.config.featurize.inference_sweeps,
    };
    let vectors = {
        use rayon::prelude::*;
        records
            .par_iter()
            .map(|r| {
                let pre = preprocess(&r.review_text, &lexicons, &ctx.config.featurize.preprocess);
                featurizer.transform(r, &pre, &lexicons)
            })
            .collect::<Result<Vec<_>>>()?
    };
    let mut ranked = pipeline::rank(&records, &vectors, &model)?;
    if let Some(n) = top {
        ranked.truncate(n);
    }
    let w = ctx.create(RANK)?;
    pipeline::write_rank_csv(&ranked, w)?;
    let mut text = format!("ranked {} reviews with {}\n", ranked.len(), kind.display_name());
    for r in ranked.iter().take(10) {
        text.push_str(&format!("{:.4}\t{}\t{}\t{}\n", r.score, r.record_id, r.app_name, r.review_excerpt));
    }
    Ok(text)
}

fn cmd_report(ctx: &Ctx, format: ReportFormat) -> Result<String> {
    let mut reports = Vec::new();
    for kind in ModelKind::ALL {
        let name = eval_file(kind, "json");
        if ctx.path(&name).exists() {
            reports.push(ctx.read_json::<EvalReport>(&name, "evaluate")?);
        }
    }
    if reports.is_empty() {
        return Err(Error::MissingArtifact {
            stage: "evaluate",
            path: ctx.path(&eval_file(ctx.config.train.kind, "json")),
        });
    }
    match format {
        ReportFormat::Csv => {
            let w = ctx.create("report.csv")?;
            summary_csv(&reports, w)?;
            let mut buf = Vec::new();
            summary_csv(&reports, &mut buf)?;
            Ok(String::from_utf8_lossy(&buf).into_owned())
        }
        ReportFormat::Md => {
            let mut md = format!("# Evaluation ({})\n\n", reports[0].approach.cli_name());
            md.push_str(&markdown_table(&reports));
            for r in &reports {
                let kept: Vec<String> = r.kept.iter().map(|f| f.to_string()).collect();
                md.push_str(&format!("\n{}: features kept in every fold: {}\n", r.model.display_name(), kept.join(", ")));
                let by_app = by_app_file(r.model, "md");
                if ctx.path(&by_app).exists() {
                    let text = std::fs::read_to_string(ctx.path(&by_app)).map_err(|e| Error::io(ctx.path(&by_app), e))?;
                    md.push_str(&format!("\n## {} per app\n\n{text}", r.model.display_name()));
                }
            }
            let mut w = ctx.create("report.md")?;
            w.write_all(md.as_bytes()).map_err(|e| Error::io(ctx.path("report.md"), e))?;
            ctx.flush(w, "report.md")?;
            Ok(md)
        }
    }
}

fn cmd_sample(ctx: &Ctx, per_app: usize, seed: u64, output: Option<PathBuf>) -> Result<String> {
    let records = ctx.records()?;
    let sample = sample_per_app(&records, per_app, seed);
    let path = output.unwrap_or_else(|| ctx.path("sample.csv"));
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_csv(&sample, BufWriter::new(file))?;
    Ok(format!("sampled {} of {} records -> {}\n", sample.len(), records.len(), path.display()))
}

/// Entry point for the binary: run, print, and map errors to exit codes.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
