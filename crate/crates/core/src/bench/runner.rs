//! The benchmark matrix: every requested method on every `dataset:field`
//! task and seed, with the results rendered as JSON and Markdown.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::classifier::{select_and_fit, Example, FitContext, Method, NeuralOptions};
use super::grid::{CellOutcome, GridAxis, GridSearchSpec, Hyperparameters};
use super::metrics::{metrics, ClassMetrics, ConfusionMatrix};
use super::reference::{reference_scores, ReferenceScores};
use crate::corpus::{make_split, Dataset, Split};
use crate::embeddings::{train_skipgram, EmbeddingTable, SkipGramConfig};
use crate::preprocess::{
    bundled_stopwords, compile_rules, default_garbage_rules, load_garbage_rules, load_stopwords, preprocess_document, EncodedDocument,
    PipelineConfig, ProcessedDocument, Vocabulary,
};
use crate::rng::Rng;
use crate::{Error, Result};

pub const REPORT_VERSION: u32 = 1;

/// A label field of a named dataset, written `dataset:field`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Task {
    pub dataset: String,
    pub field: String,
}

impl Task {
    pub fn new(dataset: impl Into<String>, field: impl Into<String>) -> Self {
        Task {
            dataset: dataset.into(),
            field: field.into(),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.dataset, self.field)
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some((d, f)) if !d.is_empty() && !f.is_empty() && !f.contains(':') => Ok(Task::new(d, f)),
            _ => Err(Error::invalid(format!("task {s:?} is not of the form dataset:field"))),
        }
    }
}

/// Serializable description of a [`PipelineConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    pub use_stopwords: bool,
    /// Replaces the bundled stopword list.
    pub stopwords: Option<PathBuf>,
    /// Replaces the default garbage rules.
    pub garbage_rules: Option<PathBuf>,
    pub max_sentences: usize,
    pub max_tokens_per_sentence: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            use_stopwords: true,
            stopwords: None,
            garbage_rules: None,
            max_sentences: 30,
            max_tokens_per_sentence: 60,
        }
    }
}

impl PipelineOptions {
    pub fn build(&self) -> Result<PipelineConfig> {
        let stopwords = match (&self.stopwords, self.use_stopwords) {
            (_, false) => Default::default(),
            (Some(path), true) => load_stopwords(path)?,
            (None, true) => bundled_stopwords(),
        };
        let specs = match &self.garbage_rules {
            Some(path) => load_garbage_rules(path)?,
            None => default_garbage_rules(),
        };
        PipelineConfig::new(stopwords, compile_rules(&specs)?, self.max_sentences, self.max_tokens_per_sentence)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub test_fraction: f64,
    pub validation_fraction: f64,
    pub min_frequency: usize,
    pub max_vocabulary: usize,
    pub pipeline: PipelineOptions,
    pub embeddings: SkipGramConfig,
    pub neural: NeuralOptions,
    /// Grid per method tag; methods not listed use [`default_grid`].
    pub grids: BTreeMap<String, Vec<GridAxis>>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            test_fraction: 0.15,
            validation_fraction: 0.15,
            min_frequency: 2,
            max_vocabulary: 50_000,
            pipeline: PipelineOptions::default(),
            embeddings: SkipGramConfig::default(),
            neural: NeuralOptions::default(),
            grids: BTreeMap::new(),
        }
    }
}

pub fn default_grid(method: Method) -> Vec<GridAxis> {
    match method {
        Method::Nb => vec![GridAxis::new("alpha", [0.1, 0.5, 1.0])],
        Method::Svm => vec![GridAxis::new("lambda", [1e-5, 1e-4, 1e-3]), GridAxis::new("epochs", [10.0])],
        _ => vec![GridAxis::new("learning_rate", [0.002, 0.005])],
    }
}

impl BenchmarkConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: BenchmarkConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        BenchmarkConfig::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [("test", self.test_fraction), ("validation", self.validation_fraction)] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::invalid(format!("{name} fraction {f} is outside (0, 1)")));
            }
        }
        if self.min_frequency == 0 || self.max_vocabulary == 0 {
            return Err(Error::invalid("vocabulary min_frequency and max_vocabulary must be positive"));
        }
        self.embeddings.validate()?;
        self.neural.train.validate()?;
        for (tag, axes) in &self.grids {
            let method: Method = tag.parse()?;
            self.grid(method).validate()?;
            if let Some(a) = axes.iter().find(|a| !method.hyperparameter_names().contains(&a.name.as_str())) {
                return Err(Error::invalid(format!("{method} has no hyperparameter {:?}", a.name)));
            }
        }
        Ok(())
    }

    pub fn grid(&self, method: Method) -> GridSearchSpec {
        let axes = self.grids.get(method.tag()).cloned().unwrap_or_else(|| default_grid(method));
        GridSearchSpec::new(method.tag(), axes)
    }
}

/// A task after splitting and preprocessing. The vocabulary comes from the
/// training split only.
#[derive(Debug, Clone)]
pub struct PreparedTask {
    pub task: Task,
    pub class_names: Vec<String>,
    pub split: Split,
    pub vocab: Vocabulary,
    pub train: Vec<Example>,
    pub test: Vec<Example>,
}

pub fn prepare_task(dataset: &Dataset, task: &Task, pipeline: &PipelineConfig, config: &BenchmarkConfig, seed: u64) -> Result<PreparedTask> {
    let classes = dataset.class_set(&task.field)?;
    let split = make_split(dataset, &task.field, config.test_fraction, seed)?;
    let process = |ids: &[String]| -> Result<Vec<(ProcessedDocument, usize)>> {
        ids.iter()
            .map(|id| {
                let doc = dataset.get(id).ok_or_else(|| Error::invalid(format!("split names unknown document {id:?}")))?;
                let label = doc.label(&task.field).and_then(|l| classes.id(l)).ok_or_else(|| Error::invalid(format!("{id} has no {} label", task.field)))?;
                Ok((preprocess_document(doc, pipeline), label))
            })
            .collect()
    };
    let train = process(&split.train)?;
    let test = process(&split.test)?;
    let train_docs: Vec<ProcessedDocument> = train.iter().map(|(d, _)| d.clone()).collect();
    let vocab = Vocabulary::build(&train_docs, config.min_frequency, config.max_vocabulary)?;
    let to_examples = |docs: Vec<(ProcessedDocument, usize)>| docs.into_iter().map(|(d, c)| Example::from_processed(d, c, &vocab)).collect();
    Ok(PreparedTask {
        task: task.clone(),
        class_names: classes.names().to_vec(),
        train: to_examples(train),
        test: to_examples(test),
        split,
        vocab,
    })
}

/// Skip-gram embeddings over the training split of `prepared`, seeded from
/// the master seed.
pub fn task_embeddings(prepared: &PreparedTask, config: &SkipGramConfig, seed: u64) -> Result<EmbeddingTable> {
    let docs: Vec<EncodedDocument> = prepared.train.iter().map(|e| e.encoded.clone()).collect();
    let config = SkipGramConfig {
        seed: Rng::derive(seed, 1).next_u64(),
        ..config.clone()
    };
    train_skipgram(&docs, &prepared.vocab, &config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed,
}

/// One (method, task, seed) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub method: Method,
    pub task: String,
    pub seed: u64,
    pub status: CellStatus,
    pub hyperparameters: Hyperparameters,
    pub accuracy: Option<f64>,
    pub weighted_f1: Option<f64>,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: Option<ConfusionMatrix>,
    /// Validation accuracy of every grid cell.
    pub validation: Vec<CellOutcome>,
    pub seconds: f64,
    pub error: Option<String>,
    pub reference: Option<ReferenceScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task: String,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub vocabulary_size: usize,
    pub num_classes: usize,
    pub embedding_seconds: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub version: u32,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub tasks: Vec<String>,
    pub notes: Vec<String>,
    pub task_summaries: Vec<TaskSummary>,
    pub cells: Vec<CellReport>,
}

const TIMING_FIELDS: [&str; 2] = ["seconds", "embedding_seconds"];

fn strip_timings(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            for f in TIMING_FIELDS {
                map.remove(f);
            }
            map.values_mut().for_each(strip_timings);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

impl BenchmarkReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON without wall-clock fields; equal across reruns with the same
    /// seeds and configuration.
    pub fn to_json_without_timings(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        strip_timings(&mut value);
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn cells_for(&self, method: Method, task: &str) -> impl Iterator<Item = &CellReport> {
        let task = task.to_string();
        self.cells.iter().filter(move |c| c.method == method && c.task == task)
    }

    fn table(&self, title: &str, value: impl Fn(&CellReport) -> Option<f64>, reference: impl Fn(&ReferenceScores) -> f64, fmt: fn(f64) -> String) -> String {
        let has_ref: Vec<bool> = self
            .tasks
            .iter()
            .map(|t| self.methods.iter().any(|&m| reference_scores(m, t).is_some()))
            .collect();
        let mut out = format!("## {title}\n\n| Method |");
        let mut rule = String::from("|---|");
        for (t, &r) in self.tasks.iter().zip(&has_ref) {
            out.push_str(&format!(" {t} |"));
            rule.push_str("---:|");
            if r {
                out.push_str(" reference |");
                rule.push_str("---:|");
            }
        }
        out.push('\n');
        out.push_str(&rule);
        out.push('\n');
        for &m in &self.methods {
            out.push_str(&format!("| {} |", m.label()));
            for (t, &r) in self.tasks.iter().zip(&has_ref) {
                let values: Vec<f64> = self.cells_for(m, t).filter_map(&value).collect();
                let failed = self.cells_for(m, t).any(|c| c.status == CellStatus::Failed);
                let cell = match mean(&values) {
                    Some(v) if failed => format!("{}*", fmt(v)),
                    Some(v) => fmt(v),
                    None => "failed".to_string(),
                };
                out.push_str(&format!(" {cell} |"));
                if r {
                    let rv = reference_scores(m, t).map(|s| fmt(reference(&s))).unwrap_or_else(|| "n/a".into());
                    out.push_str(&format!(" {rv} |"));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn render_markdown(&self) -> String {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let mut out = format!(
            "# Benchmark report\n\nSeeds: {}. Scores are on the held-out test split, averaged over seeds; `*` marks an average \
             with failed seeds. The reference columns hold published reference values for the same task.\n\n",
            seeds.join(", ")
        );
        out.push_str(&self.table("Accuracy (%)", |c| c.accuracy, |r| r.accuracy, pct));
        out.push('\n');
        out.push_str(&self.table("Weighted F1", |c| c.weighted_f1, |r| r.weighted_f1, |x| format!("{x:.3}")));
        out.push('\n');
        out.push_str(&self.table("Wall-clock seconds", |c| Some(c.seconds), |_| 0.0, |x| format!("{x:.1}")).replace(" reference |", " |"));
        let failures: Vec<&CellReport> = self.cells.iter().filter(|c| c.status == CellStatus::Failed).collect();
        if !failures.is_empty() {
            out.push_str("\n## Failures\n\n");
            for c in failures {
                out.push_str(&format!("- {} on {} (seed {}): {}\n", c.method, c.task, c.seed, c.error.as_deref().unwrap_or("unknown")));
            }
        }
        if !self.notes.is_empty() {
            out.push_str("\n## Notes\n\n");
            for n in &self.notes {
                out.push_str(&format!("- {n}\n"));
            }
        }
        out
    }

    /// Writes `report.json` and `report.md` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join("report.json");
        let md = dir.join("report.md");
        std::fs::write(&json, self.to_json()?).map_err(|e| Error::io(&json, e))?;
        std::fs::write(&md, self.render_markdown()).map_err(|e| Error::io(&md, e))?;
        Ok((json, md))
    }
}

fn dedup<T: PartialEq + Clone>(items: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for x in items {
        if !out.contains(x) {
            out.push(x.clone());
        }
    }
    out
}

fn failed_cell(method: Method, task: &str, seed: u64, seconds: f64, error: String) -> CellReport {
    CellReport {
        method,
        task: task.to_string(),
        seed,
        status: CellStatus::Failed,
        hyperparameters: Hyperparameters::new(),
        accuracy: None,
        weighted_f1: None,
        per_class: Vec::new(),
        confusion: None,
        validation: Vec::new(),
        seconds,
        error: Some(error),
        reference: reference_scores(method, task),
    }
}

fn run_cell(method: Method, prepared: &PreparedTask, embeddings: Option<&EmbeddingTable>, config: &BenchmarkConfig, seed: u64) -> Result<CellReport> {
    let ctx = FitContext {
        vocab: &prepared.vocab,
        num_classes: prepared.class_names.len(),
        embeddings,
        neural: &config.neural,
    };
    let selection = select_and_fit(method, &config.grid(method), &prepared.train, &ctx, config.validation_fraction, seed)?;
    let cm = selection.classifier.confusion(&prepared.test)?;
    let m = metrics(&cm, Some(&prepared.class_names))?;
    let task = prepared.task.to_string();
    Ok(CellReport {
        method,
        reference: reference_scores(method, &task),
        task,
        seed,
        status: CellStatus::Ok,
        hyperparameters: selection.hyperparameters,
        accuracy: Some(m.accuracy),
        weighted_f1: Some(m.weighted_f1),
        per_class: m.per_class,
        confusion: Some(cm),
        validation: selection.grid.cells,
        seconds: 0.0,
        error: None,
    })
}

/// Runs every (seed, task, method) cell. Failures of a task or a cell are
/// recorded in the report and the run continues; only an invalid request
/// is an error.
pub fn run_benchmark(
    datasets: &BTreeMap<String, Dataset>,
    tasks: &[Task],
    methods: &[Method],
    seeds: &[u64],
    config: &BenchmarkConfig,
) -> Result<BenchmarkReport> {
    if tasks.is_empty() || methods.is_empty() || seeds.is_empty() {
        return Err(Error::invalid("a benchmark needs at least one task, method and seed"));
    }
    config.validate()?;
    let pipeline = config.pipeline.build()?;
    let (tasks, methods, seeds) = (dedup(tasks), dedup(methods), dedup(seeds));
    let mut summaries = Vec::new();
    let mut cells = Vec::new();
    for &seed in &seeds {
        for task in &tasks {
            let name = task.to_string();
            let prepared = datasets
                .get(&task.dataset)
                .ok_or_else(|| Error::invalid(format!("dataset {:?} was not loaded", task.dataset)))
                .and_then(|ds| prepare_task(ds, task, &pipeline, config, seed));
            let prepared = match prepared {
                Ok(p) => p,
                Err(e) => {
                    log::error!("{name} (seed {seed}): {e}");
                    summaries.push(TaskSummary {
                        task: name.clone(),
                        seed,
                        train_size: 0,
                        test_size: 0,
                        vocabulary_size: 0,
                        num_classes: 0,
                        embedding_seconds: None,
                        error: Some(e.to_string()),
                    });
                    cells.extend(methods.iter().map(|&m| failed_cell(m, &name, seed, 0.0, format!("task preparation failed: {e}"))));
                    continue;
                }
            };
            let mut summary = TaskSummary {
                task: name.clone(),
                seed,
                train_size: prepared.train.len(),
                test_size: prepared.test.len(),
                vocabulary_size: prepared.vocab.len(),
                num_classes: prepared.class_names.len(),
                embedding_seconds: None,
                error: None,
            };
            let embeddings = if methods.iter().any(|m| m.is_neural()) {
                let start = Instant::now();
                let table = task_embeddings(&prepared, &config.embeddings, seed);
                summary.embedding_seconds = Some(start.elapsed().as_secs_f64());
                if let Err(e) = &table {
                    summary.error = Some(format!("embedding training failed: {e}"));
                }
                Some(table)
            } else {
                None
            };
            for &method in &methods {
                log::info!("{method} on {name} (seed {seed})");
                let start = Instant::now();
                let result = match (&embeddings, method.is_neural()) {
                    (Some(Err(e)), true) => Err(Error::invalid(format!("no embeddings: {e}"))),
                    (Some(Ok(table)), true) => run_cell(method, &prepared, Some(table), config, seed),
                    _ => run_cell(method, &prepared, None, config, seed),
                };
                let seconds = start.elapsed().as_secs_f64();
                cells.push(match result {
                    Ok(cell) => {
                        log::info!("{method} on {name}: accuracy {:.4}", cell.accuracy.unwrap_or(0.0));
                        CellReport { seconds, ..cell }
                    }
                    Err(e) => {
                        log::error!("{method} on {name} (seed {seed}) failed: {e}");
                        failed_cell(method, &name, seed, seconds, e.to_string())
                    }
                });
            }
            summaries.push(summary);
        }
    }
    Ok(BenchmarkReport {
        version: REPORT_VERSION,
        seeds,
        methods,
        tasks: tasks.iter().map(Task::to_string).collect(),
        notes: vec![
            format!(
                "Hyperparameters are chosen by grid search scored on a seeded {:.0}% validation split of the training data; \
                 the winning cell is refit on the full training split. Single-cell grids are fitted directly.",
                100.0 * config.validation_fraction
            ),
            format!("Test split: {:.0}% of the labeled documents, seeded, unstratified.", 100.0 * config.test_fraction),
            "Vocabulary, TF-IDF statistics and word embeddings are computed from the training split only.".to_string(),
            "Cell wall-clock seconds exclude skip-gram training, which is listed per task.".to_string(),
            "Reference values are published reference results, for side-by-side display only.".to_string(),
        ],
        task_summaries: summaries,
        cells,
    })
}

/// Loads each dataset named by `tasks` from `paths`, with the union of the
/// fields the tasks ask for as its schema.
pub fn load_task_datasets(paths: &BTreeMap<String, PathBuf>, tasks: &[Task]) -> Result<BTreeMap<String, Dataset>> {
    let mut fields: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for t in tasks {
        let entry = fields.entry(&t.dataset).or_default();
        if !entry.contains(&t.field) {
            entry.push(t.field.clone());
        }
    }
    fields
        .into_iter()
        .map(|(name, schema)| {
            let path = paths.get(name).ok_or_else(|| Error::invalid(format!("no file given for dataset {name:?}")))?;
            Ok((name.to_string(), crate::corpus::load_dataset(path, &schema)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::synthetic::{keyword_dataset, KEYWORD_FIELD};

    fn baseline_config() -> BenchmarkConfig {
        BenchmarkConfig {
            min_frequency: 1,
            ..Default::default()
        }
    }

    #[test]
    fn task_parsing() {
        let t: Task = "chromium:type".parse().unwrap();
        assert_eq!(t, Task::new("chromium", "type"));
        assert_eq!(t.to_string(), "chromium:type");
        for bad in ["chromium", ":type", "a:", "a:b:c"] {
            assert!(bad.parse::<Task>().is_err(), "{bad}");
        }
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = BenchmarkConfig::from_json("{}").unwrap();
        assert_eq!(c, BenchmarkConfig::default());
        assert_eq!(c.grid(Method::Nb).cells().len(), 3);
        assert!(BenchmarkConfig::from_json(r#"{"test_fraction": 1.5}"#).is_err());
        assert!(BenchmarkConfig::from_json(r#"{"grids": {"nb": [{"name": "lambda", "values": [1.0]}]}}"#).is_err());
        assert!(BenchmarkConfig::from_json(r#"{"grids": {"xgboost": [{"name": "alpha", "values": [1.0]}]}}"#).is_err());
        assert!(BenchmarkConfig::from_json(r#"{"grids": {"nb": []}}"#).is_err());
    }

    #[test]
    fn vocabulary_comes_from_train_only() {
        let ds = keyword_dataset(60, 1).unwrap();
        let task = Task::new("syn", KEYWORD_FIELD);
        let p = prepare_task(&ds, &task, &PipelineConfig::default(), &baseline_config(), 3).unwrap();
        assert_eq!((p.train.len(), p.test.len()), (51, 9));
        let train_docs: Vec<ProcessedDocument> = p.train.iter().map(|e| e.processed.clone()).collect();
        assert_eq!(p.vocab, Vocabulary::build(&train_docs, 1, 50_000).unwrap());
    }

    #[test]
    fn baseline_benchmark_is_complete_and_deterministic() {
        let datasets = BTreeMap::from([("syn".to_string(), keyword_dataset(90, 2).unwrap())]);
        let tasks = [Task::new("syn", KEYWORD_FIELD), Task::new("missing", "x")];
        let methods = [Method::Nb, Method::Svm, Method::Nb];
        let run = || run_benchmark(&datasets, &tasks, &methods, &[1, 2], &baseline_config()).unwrap();
        let a = run();
        assert_eq!(a.cells.len(), 2 * 2 * 2);
        let failed = a.cells.iter().filter(|c| c.status == CellStatus::Failed).count();
        assert_eq!(failed, 4);
        assert!(a.cells.iter().filter(|c| c.task == "syn:category").all(|c| c.accuracy.unwrap() > 0.9));
        assert_eq!(a.to_json_without_timings().unwrap(), run().to_json_without_timings().unwrap());
        assert!(!a.to_json_without_timings().unwrap().contains("\"seconds\""));
        let md = a.render_markdown();
        assert!(md.contains("| Naive Bayes |"));
        assert!(md.contains("## Failures"));
    }

    #[test]
    fn reference_columns_appear_for_known_tasks() {
        let report = BenchmarkReport {
            version: REPORT_VERSION,
            seeds: vec![0],
            methods: vec![Method::Proposed],
            tasks: vec!["chromium:type".into()],
            notes: vec![],
            task_summaries: vec![],
            cells: vec![CellReport {
                accuracy: Some(0.5),
                weighted_f1: Some(0.25),
                status: CellStatus::Ok,
                ..failed_cell(Method::Proposed, "chromium:type", 0, 1.0, String::new())
            }],
        };
        let md = report.render_markdown();
        assert!(md.contains("| 50.0 | 88.2 |"), "{md}");
        assert!(md.contains("| 0.250 | 0.879 |"), "{md}");
    }
}
