use std::collections::BTreeMap;

use bugtag::bench::synthetic::{keyword_dataset, keyword_documents, KEYWORD_FIELD};
use bugtag::bench::{
    prepare_task, run_benchmark, select_and_fit, task_embeddings, BenchmarkConfig, CellStatus, FitContext, GridAxis, GridSearchSpec, Method, Task,
};
use bugtag::corpus::Dataset;
use bugtag::embeddings::SkipGramConfig;
use bugtag::preprocess::PipelineConfig;

fn small_config() -> BenchmarkConfig {
    let mut config = BenchmarkConfig {
        min_frequency: 1,
        embeddings: SkipGramConfig {
            dim: 8,
            epochs: 2,
            ..Default::default()
        },
        ..Default::default()
    };
    config.neural.han_size = 8;
    config.neural.fc_width = 8;
    config.neural.train.epochs = 3;
    config
}

#[test]
fn diverging_grid_cell_loses_to_the_sane_one() {
    let ds = keyword_dataset(90, 4).unwrap();
    let config = small_config();
    let prepared = prepare_task(&ds, &Task::new("syn", KEYWORD_FIELD), &PipelineConfig::default(), &config, 1).unwrap();
    let table = task_embeddings(&prepared, &config.embeddings, 1).unwrap();
    let ctx = FitContext {
        vocab: &prepared.vocab,
        num_classes: 3,
        embeddings: Some(&table),
        neural: &config.neural,
    };
    let spec = GridSearchSpec::new("han", vec![GridAxis::new("learning_rate", [1e308, 0.005])]);
    let selection = select_and_fit(Method::Han, &spec, &prepared.train, &ctx, 0.15, 1).unwrap();
    assert_eq!(selection.grid.best, 1);
    let error = selection.grid.cells[0].error.as_deref().unwrap();
    assert!(error.contains("non-finite"), "{error}");
    assert_eq!(selection.hyperparameters["learning_rate"], 0.005);
}

#[test]
fn method_and_task_filtering() {
    let mut docs = keyword_documents(60, 9);
    for d in &mut docs {
        let label = d.labels.remove(KEYWORD_FIELD).unwrap();
        d.labels.insert("type".into(), label);
    }
    let chromium = Dataset::from_documents(docs, &["type".to_string()]).unwrap();
    let datasets = BTreeMap::from([("chromium".to_string(), chromium), ("syn".to_string(), keyword_dataset(60, 1).unwrap())]);
    let tasks = [Task::new("chromium", "type")];
    let report = run_benchmark(&datasets, &tasks, &[Method::Nb, Method::Svm], &[3], &small_config()).unwrap();
    assert_eq!(report.cells.len(), 2);
    assert!(report.cells.iter().all(|c| c.status == CellStatus::Ok && c.task == "chromium:type"));
    let nb = &report.cells[0];
    assert_eq!(nb.reference.unwrap().accuracy, 0.805);
    let md = report.render_markdown();
    assert!(md.contains("| chromium:type | reference |"), "{md}");
    assert!(md.contains("| 80.5 |"));
    // no neural method requested, so no embeddings are trained
    assert_eq!(report.task_summaries[0].embedding_seconds, None);
}

#[test]
fn neural_cells_record_their_grid() {
    let datasets = BTreeMap::from([("syn".to_string(), keyword_dataset(90, 2).unwrap())]);
    let report = run_benchmark(&datasets, &[Task::new("syn", KEYWORD_FIELD)], &[Method::EmbeddingBag], &[5], &small_config()).unwrap();
    let cell = &report.cells[0];
    assert_eq!(cell.status, CellStatus::Ok, "{:?}", cell.error);
    assert_eq!(cell.validation.len(), 2);
    assert!(cell.validation.iter().all(|v| v.score.is_some()));
    assert!(cell.hyperparameters.contains_key("learning_rate"));
    assert!(report.task_summaries[0].embedding_seconds.is_some());
    let parsed: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    for key in ["method", "task", "hyperparameters", "accuracy", "weighted_f1", "per_class", "seconds", "status"] {
        assert!(parsed["cells"][0].get(key).is_some(), "{key}");
    }
    assert_eq!(parsed["cells"][0]["method"], "embedding-bag");
}
