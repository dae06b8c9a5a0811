//! Out-of-bag permutation importance.
//!
//! For tree `m` the importance contribution of feature `j` is the tree's risk
//! on its OOB rows after shuffling column `j` among those rows, minus its risk
//! on the untouched OOB rows. The forest importance averages this over trees.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{FkrfeError, Result};
use crate::forest::{risk_with, Forest};
use crate::seed::SeedSpec;

/// Importance of one active feature.
pub fn permutation_importance(
    forest: &Forest,
    dataset: &Dataset,
    feature: usize,
    seed: SeedSpec,
) -> Result<f64> {
    Ok(permutation_importances(forest, dataset, &[feature], seed)?[0])
}

/// Importances of `features`, in the given order.
///
/// The shuffle for tree `m`, feature `j`, replicate `r` comes from substream
/// `("perm", (r * M + m) * p + j)`. A tree that never splits on `j` yields
/// exactly zero for it.
pub fn permutation_importances(
    forest: &Forest,
    dataset: &Dataset,
    features: &[usize],
    seed: SeedSpec,
) -> Result<Vec<f64>> {
    if let Some(&j) = features
        .iter()
        .find(|&&j| !forest.active_features.contains(j))
    {
        return Err(FkrfeError::InactiveFeature(j));
    }
    if let Some(m) = forest.oob.iter().position(Vec::is_empty) {
        return Err(FkrfeError::EmptyOob(m));
    }
    let baseline: Vec<f64> = (0..forest.trees.len())
        .into_par_iter()
        .map(|m| {
            let rows = &forest.oob[m];
            risk_with(&forest.tree(m), dataset, rows, |k, f| dataset.get(rows[k], f))
        })
        .collect();

    let n_trees = forest.trees.len() as u64;
    let p = dataset.p() as u64;
    let reps = forest.params.importance_reps;
    Ok(features
        .par_iter()
        .map(|&j| {
            let mut total = 0.0;
            for (m, tree) in forest.trees.iter().enumerate() {
                if !tree.uses_feature(j) {
                    continue;
                }
                let rows = &forest.oob[m];
                let mut diff = 0.0;
                for r in 0..reps as u64 {
                    let mut rng = seed.substream("perm", (r * n_trees + m as u64) * p + j as u64);
                    let mut shuffled: Vec<f64> = rows.iter().map(|&i| dataset.get(i, j)).collect();
                    shuffled.shuffle(&mut rng);
                    let permuted = risk_with(&forest.tree(m), dataset, rows, |k, f| {
                        if f == j {
                            shuffled[k]
                        } else {
                            dataset.get(rows[k], f)
                        }
                    });
                    diff += permuted - baseline[m];
                }
                total += diff / reps as f64;
            }
            total / forest.trees.len() as f64
        })
        .collect())
}

/// Importances of every active feature, ascending. Equal importances put the
/// larger feature index first, so it is eliminated before the smaller one.
pub fn importance_ranking(
    forest: &Forest,
    dataset: &Dataset,
    seed: SeedSpec,
) -> Result<Vec<(usize, f64)>> {
    let features = forest.active_features.indices();
    let values = permutation_importances(forest, dataset, features, seed)?;
    let mut ranked: Vec<(usize, f64)> = features.iter().copied().zip(values).collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
    Ok(ranked)
}
