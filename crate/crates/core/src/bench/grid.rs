use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Hyperparameters = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<f64>,
}

impl GridAxis {
    pub fn new(name: impl Into<String>, values: impl Into<Vec<f64>>) -> Self {
        GridAxis {
            name: name.into(),
            values: values.into(),
        }
    }
}

/// Candidate values per hyperparameter. Cells are enumerated with the
/// first axis varying slowest; that order breaks ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchSpec {
    pub method: String,
    pub grid: Vec<GridAxis>,
}

impl GridSearchSpec {
    pub fn new(method: impl Into<String>, grid: Vec<GridAxis>) -> Self {
        GridSearchSpec {
            method: method.into(),
            grid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::invalid(format!("grid for {} is empty", self.method)));
        }
        for axis in &self.grid {
            if axis.values.is_empty() {
                return Err(Error::invalid(format!("no candidates for {}.{}", self.method, axis.name)));
            }
            if axis.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("non-finite candidate for {}.{}", self.method, axis.name)));
            }
        }
        let mut names: Vec<&str> = self.grid.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate hyperparameter in the {} grid", self.method)));
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<Hyperparameters> {
        let mut cells = vec![Hyperparameters::new()];
        for axis in &self.grid {
            cells = cells
                .into_iter()
                .flat_map(|cell| {
                    axis.values.iter().map(move |&v| {
                        let mut next = cell.clone();
                        next.insert(axis.name.clone(), v);
                        next
                    })
                })
                .collect();
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub hyperparameters: Hyperparameters,
    pub score: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    pub best: usize,
    pub cells: Vec<CellOutcome>,
}

impl GridOutcome {
    pub fn best_hyperparameters(&self) -> &Hyperparameters {
        &self.cells[self.best].hyperparameters
    }

    pub fn best_score(&self) -> Option<f64> {
        self.cells[self.best].score
    }
}

/// Scores every cell with `evaluate(cell_index, hyperparameters)` and picks
/// the highest score, the earliest cell on ties. A failing cell is recorded
/// and skipped; if every cell fails the search fails.
pub fn grid_search<F>(spec: &GridSearchSpec, mut evaluate: F) -> Result<GridOutcome>
where
    F: FnMut(usize, &Hyperparameters) -> Result<f64>,
{
    spec.validate()?;
    let mut cells = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for (i, hp) in spec.cells().into_iter().enumerate() {
        match evaluate(i, &hp) {
            Ok(score) if score.is_finite() => {
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((i, score));
                }
                cells.push(CellOutcome {
                    hyperparameters: hp,
                    score: Some(score),
                    error: None,
                });
            }
            Ok(score) => cells.push(CellOutcome {
                hyperparameters: hp,
                score: None,
                error: Some(format!("non-finite score {score}")),
            }),
            Err(e) => {
                log::warn!("{} grid cell {i} failed: {e}", spec.method);
                cells.push(CellOutcome {
                    hyperparameters: hp,
                    score: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    match best {
        Some((best, _)) => Ok(GridOutcome { best, cells }),
        None => Err(Error::invalid(format!(
            "every {} grid cell failed; first error: {}",
            spec.method,
            cells[0].error.as_deref().unwrap_or("unknown")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_in_declared_order() {
        let spec = GridSearchSpec::new("m", vec![GridAxis::new("a", [1.0, 2.0]), GridAxis::new("b", [10.0, 20.0, 30.0])]);
        let cells = spec.cells();
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[0]["a"], 1.0);
        assert_eq!(cells[0]["b"], 10.0);
        assert_eq!(cells[1]["b"], 20.0);
        assert_eq!(cells[3]["a"], 2.0);
    }

    #[test]
    fn single_cell_wins() {
        let spec = GridSearchSpec::new("m", vec![GridAxis::new("a", [0.5])]);
        let out = grid_search(&spec, |_, _| Ok(0.1)).unwrap();
        assert_eq!(out.best, 0);
    }

    #[test]
    fn ties_go_to_the_first_cell() {
        let spec = GridSearchSpec::new("m", vec![GridAxis::new("a", [1.0, 2.0, 3.0])]);
        let out = grid_search(&spec, |_, _| Ok(0.7)).unwrap();
        assert_eq!(out.best, 0);
        let out = grid_search(&spec, |_, hp| Ok(if hp["a"] >= 2.0 { 0.9 } else { 0.1 })).unwrap();
        assert_eq!(out.best_hyperparameters()["a"], 2.0);
    }

    #[test]
    fn failed_cells_are_recorded() {
        let spec = GridSearchSpec::new("m", vec![GridAxis::new("a", [1.0, 2.0])]);
        let out = grid_search(&spec, |i, _| if i == 0 { Err(Error::NonFinite("loss".into())) } else { Ok(0.2) }).unwrap();
        assert_eq!(out.best, 1);
        assert!(out.cells[0].error.as_deref().unwrap().contains("loss"));
        assert!(grid_search(&spec, |_, _| Err(Error::invalid("boom"))).is_err());
        assert!(grid_search(&spec, |_, _| Ok(f64::NAN)).is_err());
    }

    #[test]
    fn invalid_grids() {
        assert!(GridSearchSpec::new("m", vec![]).validate().is_err());
        assert!(GridSearchSpec::new("m", vec![GridAxis::new("a", [])]).validate().is_err());
        assert!(GridSearchSpec::new("m", vec![GridAxis::new("a", [1.0]), GridAxis::new("a", [2.0])]).validate().is_err());
    }
}
