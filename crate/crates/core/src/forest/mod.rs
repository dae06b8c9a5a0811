//! Bagged CART forests with out-of-bag bookkeeping.

mod importance;
mod tree;

pub use importance::{importance_ranking, permutation_importance, permutation_importances};
pub use tree::{fit_tree, Node, Tree};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ActiveSet, Dataset, Task};
use crate::error::{FkrfeError, Result};
use crate::seed::SeedSpec;
use tree::argmax_first;

/// Fully resolved forest hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub mtry: usize,
    pub min_node_size: usize,
    pub max_depth: Option<usize>,
    /// Permutations per tree when computing importances.
    pub importance_reps: usize,
}

/// User-facing forest settings; unset fields take task-dependent defaults.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub mtry: Option<usize>,
    pub min_node_size: Option<usize>,
    pub max_depth: Option<usize>,
    pub importance_reps: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 500,
            mtry: None,
            min_node_size: None,
            max_depth: None,
            importance_reps: 1,
        }
    }
}

impl ForestConfig {
    /// Defaults: `mtry = max(1, p/3)` for regression and `max(1, sqrt p)` for
    /// classification; `min_node_size` 5 and 1 respectively. An explicit
    /// `mtry` larger than the active set is capped at its size.
    pub fn resolve(&self, task: Task, p_active: usize) -> ForestParams {
        let mtry = match (self.mtry, task) {
            (Some(m), _) => m.min(p_active),
            (None, Task::Regression) => (p_active / 3).max(1),
            (None, Task::Classification) => ((p_active as f64).sqrt().floor() as usize).max(1),
        };
        let min_node_size = self.min_node_size.unwrap_or(match task {
            Task::Regression => 5,
            Task::Classification => 1,
        });
        ForestParams {
            n_trees: self.n_trees,
            mtry,
            min_node_size,
            max_depth: self.max_depth,
            importance_reps: self.importance_reps,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(FkrfeError::ConfigInvalid("n_trees must be at least 1".into()));
        }
        if self.mtry == Some(0) {
            return Err(FkrfeError::ConfigInvalid("mtry must be at least 1".into()));
        }
        if self.min_node_size == Some(0) {
            return Err(FkrfeError::ConfigInvalid(
                "min_node_size must be at least 1".into(),
            ));
        }
        if self.importance_reps == 0 {
            return Err(FkrfeError::ConfigInvalid(
                "importance_reps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    /// Bootstrap rows per tree, in draw order.
    pub inbag: Vec<Vec<usize>>,
    /// Rows absent from each bootstrap, ascending.
    pub oob: Vec<Vec<usize>>,
    pub params: ForestParams,
    pub task: Task,
    pub n_classes: usize,
    pub active_features: ActiveSet,
}

/// Anything that maps a row of feature values to a prediction.
pub trait Predictor {
    fn task(&self) -> Task;
    fn predict_with<F: Fn(usize) -> f64>(&self, get: F) -> f64;

    fn predict_row(&self, dataset: &Dataset, row: usize) -> f64 {
        self.predict_with(|f| dataset.get(row, f))
    }
}

impl Predictor for Forest {
    fn task(&self) -> Task {
        self.task
    }

    fn predict_with<F: Fn(usize) -> f64>(&self, get: F) -> f64 {
        match self.task {
            Task::Regression => {
                self.trees.iter().map(|t| t.predict_with(&get)).sum::<f64>()
                    / self.trees.len() as f64
            }
            Task::Classification => {
                let mut votes = vec![0; self.n_classes];
                for t in &self.trees {
                    votes[t.predict_with(&get) as usize] += 1;
                }
                argmax_first(&votes) as f64
            }
        }
    }
}

/// A single tree paired with the task it was grown for.
pub struct TaskTree<'a>(pub &'a Tree, pub Task);

impl Predictor for TaskTree<'_> {
    fn task(&self) -> Task {
        self.1
    }

    fn predict_with<F: Fn(usize) -> f64>(&self, get: F) -> f64 {
        self.0.predict_with(get)
    }
}

impl Forest {
    /// Prediction for a full-width feature row (`x_row.len() == p`).
    pub fn predict(&self, x_row: &[f64]) -> f64 {
        self.predict_with(|f| x_row[f])
    }

    pub fn tree(&self, m: usize) -> TaskTree<'_> {
        TaskTree(&self.trees[m], self.task)
    }
}

/// Grow `params.n_trees` trees, tree `m` on a bootstrap sample drawn from
/// substream `("tree", m)`.
pub fn fit_forest(
    dataset: &Dataset,
    active: &ActiveSet,
    params: &ForestParams,
    seed: SeedSpec,
) -> Result<Forest> {
    if params.n_trees == 0 || params.min_node_size == 0 || params.importance_reps == 0 {
        return Err(FkrfeError::ConfigInvalid(format!("bad forest params {params:?}")));
    }
    if active.is_empty() {
        return Err(FkrfeError::ConfigInvalid("no active features".into()));
    }
    if let Some(&j) = active.indices().iter().find(|&&j| j >= dataset.p()) {
        return Err(FkrfeError::ConfigInvalid(format!(
            "feature {j} out of range for p = {}",
            dataset.p()
        )));
    }
    if params.mtry == 0 || params.mtry > active.len() {
        return Err(FkrfeError::ConfigInvalid(format!(
            "mtry {} not in 1..={}",
            params.mtry,
            active.len()
        )));
    }
    let n = dataset.n();
    let n_classes = dataset.y.n_levels().unwrap_or(0);
    let grown: Vec<(Tree, Vec<usize>, Vec<usize>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|m| {
            let mut rng = seed.substream("tree", m as u64);
            let inbag: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut seen = vec![false; n];
            for &i in &inbag {
                seen[i] = true;
            }
            let oob = (0..n).filter(|&i| !seen[i]).collect();
            let tree = fit_tree(dataset, &inbag, active, params, n_classes, &mut rng);
            (tree, inbag, oob)
        })
        .collect();
    let mut trees = Vec::with_capacity(grown.len());
    let mut inbag = Vec::with_capacity(grown.len());
    let mut oob = Vec::with_capacity(grown.len());
    for (t, i, o) in grown {
        trees.push(t);
        inbag.push(i);
        oob.push(o);
    }
    Ok(Forest {
        trees,
        inbag,
        oob,
        params: params.clone(),
        task: dataset.task(),
        n_classes,
        active_features: active.clone(),
    })
}

/// Mean squared error (regression) or misclassification rate
/// (classification) of `model` on `rows`.
pub fn risk<P: Predictor>(model: &P, dataset: &Dataset, rows: &[usize]) -> Result<f64> {
    if rows.is_empty() {
        return Err(FkrfeError::EmptySampleSet);
    }
    Ok(risk_with(model, dataset, rows, |k, f| dataset.get(rows[k], f)))
}

/// Risk where feature values are read through `get(row_position, feature)`.
pub(crate) fn risk_with<P, G>(model: &P, dataset: &Dataset, rows: &[usize], get: G) -> f64
where
    P: Predictor,
    G: Fn(usize, usize) -> f64,
{
    let loss: f64 = rows
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let yhat = model.predict_with(|f| get(k, f));
            let y = dataset.y.value(i);
            match model.task() {
                Task::Regression => (y - yhat).powi(2),
                Task::Classification => (y != yhat) as u8 as f64,
            }
        })
        .sum();
    loss / rows.len() as f64
}

/// OOB prediction error: each row is predicted only by the trees that did not
/// see it, then scored by MSE or misclassification rate.
pub fn oob_performance(forest: &Forest, dataset: &Dataset) -> Result<f64> {
    let n = dataset.n();
    let per_tree: Vec<Vec<f64>> = forest
        .trees
        .par_iter()
        .zip(forest.oob.par_iter())
        .map(|(t, rows)| {
            rows.iter()
                .map(|&i| t.predict_with(|f| dataset.get(i, f)))
                .collect()
        })
        .collect();
    match forest.task {
        Task::Regression => {
            let mut sum = vec![0.0; n];
            let mut count = vec![0usize; n];
            for (rows, preds) in forest.oob.iter().zip(&per_tree) {
                for (&i, &v) in rows.iter().zip(preds) {
                    sum[i] += v;
                    count[i] += 1;
                }
            }
            let mut total = 0.0;
            for i in 0..n {
                if count[i] == 0 {
                    return Err(FkrfeError::RowNeverOob(i));
                }
                total += (dataset.y.value(i) - sum[i] / count[i] as f64).powi(2);
            }
            Ok(total / n as f64)
        }
        Task::Classification => {
            let mut votes = vec![vec![0usize; forest.n_classes]; n];
            for (rows, preds) in forest.oob.iter().zip(&per_tree) {
                for (&i, &v) in rows.iter().zip(preds) {
                    votes[i][v as usize] += 1;
                }
            }
            let mut wrong = 0usize;
            for (i, v) in votes.iter().enumerate() {
                if v.iter().all(|&c| c == 0) {
                    return Err(FkrfeError::RowNeverOob(i));
                }
                wrong += (argmax_first(v) as f64 != dataset.y.value(i)) as usize;
            }
            Ok(wrong as f64 / n as f64)
        }
    }
}
