//! `bugtag` command-line front end.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 on a runtime failure.

mod bundle;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bugtag::bench::{
    load_task_datasets, metrics, prepare_task, run_benchmark, select_and_fit, task_embeddings, BenchmarkConfig, CellStatus, Classifier, Example,
    FitContext, Method, PreparedTask, Task,
};
use bugtag::corpus::{load_dataset, Document};
use bugtag::embeddings::{load_embeddings, save_embeddings, EmbeddingTable};
use bugtag::preprocess::preprocess_document;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use bundle::{Bundle, BundleMeta};

#[derive(Parser)]
#[command(name = "bugtag", version, about = "Label bug-tracker and support-ticket text")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master seed for splits, initialization and sampling.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// JSON configuration (pipeline, vocabulary, embeddings, models, grids).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a JSON-lines dataset and summarize its label fields.
    Ingest {
        dataset: PathBuf,
        /// Label fields to keep (all observed fields if omitted).
        #[arg(long, value_delimiter = ',')]
        fields: Vec<String>,
    },
    /// Write the preprocessed sentences of every record as JSON lines.
    Preprocess { dataset: PathBuf },
    /// Train skip-gram embeddings on the training split of a task.
    TrainEmbeddings {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        field: String,
    },
    /// Train one method on the training split and write a model bundle.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        field: String,
        #[arg(long)]
        method: Method,
        /// Embedding file from `train-embeddings` (trained on the fly otherwise).
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Score a model bundle on the test split it was trained against.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Classify one JSON document read from a file or stdin.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// File holding the document; `-` or absent reads stdin.
        input: Option<PathBuf>,
    },
    /// Run the method x task x seed matrix and write report.json / report.md.
    Benchmark {
        /// Tasks as dataset:field, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        tasks: Vec<Task>,
        /// Methods to run (all six if omitted).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<Method>,
        /// Seeds to run (the global --seed if omitted).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Dataset files as name=path; unnamed datasets are looked up as
        /// <data-dir>/<name>.jsonl.
        #[arg(long = "data")]
        data: Vec<String>,
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.common.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(common: &Common) -> Result<BenchmarkConfig> {
    match &common.config {
        Some(path) => BenchmarkConfig::load(path).with_context(|| format!("reading config {}", path.display())),
        None => Ok(BenchmarkConfig::default()),
    }
}

/// Prints `text` and, if `--out` names a file, writes it there too.
fn emit(common: &Common, text: &str) -> Result<()> {
    println!("{text}");
    if let Some(path) = &common.out {
        std::fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn require_out(common: &Common, what: &str) -> Result<PathBuf> {
    let dir = common.out.clone().with_context(|| format!("{what} needs --out DIR"))?;
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn prepare(dataset: &Path, field: &str, config: &BenchmarkConfig, seed: u64) -> Result<PreparedTask> {
    let ds = load_dataset(dataset, &[field.to_string()])?;
    let pipeline = config.pipeline.build()?;
    let name = dataset.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into());
    Ok(prepare_task(&ds, &Task::new(name, field), &pipeline, config, seed)?)
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    let config = load_config(common)?;
    match cli.command {
        Command::Ingest { dataset, fields } => ingest(common, &dataset, &fields),
        Command::Preprocess { dataset } => {
            let ds = load_dataset(&dataset, &[])?;
            let pipeline = config.pipeline.build()?;
            let mut out: Box<dyn Write> = match &common.out {
                Some(path) => Box::new(std::io::BufWriter::new(
                    std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
                )),
                None => Box::new(std::io::stdout().lock()),
            };
            for doc in &ds.documents {
                writeln!(out, "{}", serde_json::to_string(&preprocess_document(doc, &pipeline))?)?;
            }
            out.flush()?;
            Ok(())
        }
        Command::TrainEmbeddings { dataset, field } => {
            let dir = require_out(common, "train-embeddings")?;
            let prepared = prepare(&dataset, &field, &config, common.seed)?;
            let table = task_embeddings(&prepared, &config.embeddings, common.seed)?;
            save_embeddings(&table, &prepared.vocab, dir.join("embeddings.txt"))?;
            std::fs::write(dir.join("vocab.json"), serde_json::to_string(&prepared.vocab)?)?;
            emit_summary(json!({
                "vocabulary_size": prepared.vocab.len(),
                "dim": table.dim(),
                "vocab_hash": prepared.vocab.fingerprint(),
                "embeddings": dir.join("embeddings.txt"),
            }))
        }
        Command::Train {
            dataset,
            field,
            method,
            embeddings,
        } => train(common, &config, &dataset, &field, method, embeddings.as_deref()),
        Command::Evaluate { model, dataset } => evaluate(common, &model, &dataset),
        Command::Predict { model, input } => predict(common, &model, input.as_deref()),
        Command::Benchmark {
            tasks,
            methods,
            seeds,
            data,
            data_dir,
        } => benchmark(common, &config, &tasks, &methods, &seeds, &data, &data_dir),
    }
}

fn emit_summary(value: serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(())
}

fn ingest(common: &Common, path: &Path, fields: &[String]) -> Result<()> {
    let ds = load_dataset(path, fields)?;
    let mut summary = BTreeMap::new();
    for (field, classes) in &ds.fields {
        let mut counts: BTreeMap<&str, usize> = classes.names().iter().map(|n| (n.as_str(), 0)).collect();
        for doc in &ds.documents {
            if let Some(label) = doc.label(field) {
                *counts.entry(label).or_default() += 1;
            }
        }
        summary.insert(field.clone(), json!({ "labeled": counts.values().sum::<usize>(), "classes": counts }));
    }
    let text = serde_json::to_string_pretty(&json!({
        "dataset": path,
        "records": ds.documents.len(),
        "fields": summary,
    }))?;
    emit(common, &text)
}

fn train(common: &Common, config: &BenchmarkConfig, dataset: &Path, field: &str, method: Method, embeddings: Option<&Path>) -> Result<()> {
    let dir = require_out(common, "train")?;
    let prepared = prepare(dataset, field, config, common.seed)?;
    let table: Option<EmbeddingTable> = match (method.is_neural(), embeddings) {
        (false, _) => None,
        (true, Some(path)) => {
            let (_, table) = load_embeddings(path)?;
            if table.vocab_hash() != prepared.vocab.fingerprint() {
                bail!(
                    "embeddings in {} were trained for vocabulary {}, but this task yields {}; rerun train-embeddings with the same dataset, field, seed and config",
                    path.display(),
                    table.vocab_hash(),
                    prepared.vocab.fingerprint()
                );
            }
            Some(table)
        }
        (true, None) => Some(task_embeddings(&prepared, &config.embeddings, common.seed)?),
    };
    let ctx = FitContext {
        vocab: &prepared.vocab,
        num_classes: prepared.class_names.len(),
        embeddings: table.as_ref(),
        neural: &config.neural,
    };
    let selection = select_and_fit(method, &config.grid(method), &prepared.train, &ctx, config.validation_fraction, common.seed)?;
    let meta = BundleMeta::new(method, field, &prepared, common.seed, &selection);
    Bundle::write(&dir, &meta, config, &prepared.vocab, &selection.classifier)?;
    emit_summary(json!({
        "method": method,
        "field": field,
        "train_size": prepared.train.len(),
        "test_size": prepared.test.len(),
        "hyperparameters": selection.hyperparameters,
        "validation": selection.grid.cells,
        "bundle": dir,
    }))
}

fn evaluate(common: &Common, model: &Path, dataset: &Path) -> Result<()> {
    let bundle = Bundle::read(model)?;
    let prepared = prepare(dataset, &bundle.meta.field, &bundle.config, bundle.meta.seed)?;
    let found = prepared.vocab.fingerprint();
    if found != bundle.meta.vocab_hash {
        bail!(
            "vocabulary mismatch: the model in {} was trained with vocabulary {}, but {} yields {}; the dataset or preprocessing differs from training",
            model.display(),
            bundle.meta.vocab_hash,
            dataset.display(),
            found
        );
    }
    if prepared.class_names != bundle.meta.class_names {
        bail!("class mismatch: model has {:?}, dataset has {:?}", bundle.meta.class_names, prepared.class_names);
    }
    let classifier = bundle.classifier()?;
    let cm = classifier.confusion(&prepared.test)?;
    let m = metrics(&cm, Some(&prepared.class_names))?;
    let text = serde_json::to_string_pretty(&json!({
        "method": bundle.meta.method,
        "field": bundle.meta.field,
        "test_size": prepared.test.len(),
        "accuracy": m.accuracy,
        "weighted_f1": m.weighted_f1,
        "per_class": m.per_class,
        "confusion": cm,
    }))?;
    emit(common, &text)
}

#[derive(Deserialize)]
struct InputDocument {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    title: String,
    #[serde(default)]
    content: String,
}

fn predict(common: &Common, model: &Path, input: Option<&Path>) -> Result<()> {
    let bundle = Bundle::read(model)?;
    let line = match input {
        Some(p) if p != Path::new("-") => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        _ => {
            let mut s = String::new();
            for line in std::io::stdin().lock().lines() {
                s = line?;
                if !s.trim().is_empty() {
                    break;
                }
            }
            s
        }
    };
    let line = line.lines().find(|l| !l.trim().is_empty()).context("no document given")?;
    let raw: InputDocument = serde_json::from_str(line).context("the document must be a JSON object with title and/or content")?;
    let doc = Document {
        id: raw.id.unwrap_or_else(|| "input".into()),
        title: raw.title,
        body: raw.content,
        labels: BTreeMap::new(),
    };
    let pipeline = bundle.config.pipeline.build()?;
    let example = Example::from_document(&doc, 0, &pipeline, &bundle.vocab);
    let classifier: Classifier = bundle.classifier()?;
    let probs = classifier.predict_proba(std::slice::from_ref(&example))?.remove(0);
    let best = probs.iter().enumerate().fold(0, |b, (i, &p)| if p > probs[b] { i } else { b });
    let names = &bundle.meta.class_names;
    let probabilities: BTreeMap<&str, f64> = names.iter().map(String::as_str).zip(probs.iter().copied()).collect();
    let text = serde_json::to_string(&json!({ "id": doc.id, "class": names[best], "probabilities": probabilities }))?;
    emit(common, &text)
}

fn benchmark(
    common: &Common,
    config: &BenchmarkConfig,
    tasks: &[Task],
    methods: &[Method],
    seeds: &[u64],
    data: &[String],
    data_dir: &Path,
) -> Result<()> {
    let mut paths: BTreeMap<String, PathBuf> = BTreeMap::new();
    for entry in data {
        let (name, path) = entry.split_once('=').with_context(|| format!("--data expects name=path, got {entry:?}"))?;
        paths.insert(name.to_string(), PathBuf::from(path));
    }
    for t in tasks {
        paths.entry(t.dataset.clone()).or_insert_with(|| data_dir.join(format!("{}.jsonl", t.dataset)));
    }
    let datasets = load_task_datasets(&paths, tasks)?;
    let methods = if methods.is_empty() { Method::ALL.to_vec() } else { methods.to_vec() };
    let seeds = if seeds.is_empty() { vec![common.seed] } else { seeds.to_vec() };
    let report = run_benchmark(&datasets, tasks, &methods, &seeds, config)?;
    println!("{}", report.render_markdown());
    if let Some(dir) = &common.out {
        let (json, md) = report.write(dir)?;
        eprintln!("wrote {} and {}", json.display(), md.display());
    }
    if report.cells.iter().all(|c| c.status == CellStatus::Failed) {
        bail!("every benchmark cell failed");
    }
    Ok(())
}
