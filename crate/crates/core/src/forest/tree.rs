//! CART trees: variance splits for regression, Gini splits for classification.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{ActiveSet, Dataset, Task};
use crate::forest::ForestParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// `value` is the mean response (regression) or the majority class
    /// (classification); `class_counts` is empty for regression.
    Leaf { value: f64, class_counts: Vec<usize> },
}

/// A fitted tree; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Index of the leaf reached by a row whose feature values come from `get`.
    #[inline]
    pub fn leaf_of<F: Fn(usize) -> f64>(&self, get: F) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if get(*feature) <= *threshold { *left } else { *right },
                Node::Leaf { .. } => return at,
            }
        }
    }

    #[inline]
    pub fn predict_with<F: Fn(usize) -> f64>(&self, get: F) -> f64 {
        match &self.nodes[self.leaf_of(get)] {
            Node::Leaf { value, .. } => *value,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn uses_feature(&self, j: usize) -> bool {
        self.nodes
            .iter()
            .any(|n| matches!(n, Node::Split { feature, .. } if *feature == j))
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, at: usize) -> usize {
            match &t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Grow one tree on `rows` (duplicates allowed, as in a bootstrap sample).
///
/// Each node draws `mtry` of the active features without replacement and
/// takes the split with the largest impurity decrease. A node becomes a leaf
/// when it holds fewer than `2 * min_node_size` rows, is pure, has reached
/// `max_depth`, or no candidate split improves it.
pub fn fit_tree<R: Rng + ?Sized>(
    dataset: &Dataset,
    rows: &[usize],
    active: &ActiveSet,
    params: &ForestParams,
    n_classes: usize,
    rng: &mut R,
) -> Tree {
    let task = dataset.task();
    let mut nodes: Vec<Node> = Vec::new();
    // (node slot, rows, depth)
    let mut stack: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    nodes.push(Node::Leaf {
        value: 0.0,
        class_counts: Vec::new(),
    });
    stack.push((0, rows.to_vec(), 0));

    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
    while let Some((slot, node_rows, depth)) = stack.pop() {
        let leaf = make_leaf(dataset, &node_rows, task, n_classes);
        let stop = node_rows.len() < 2 * params.min_node_size
            || is_pure(dataset, &node_rows)
            || params.max_depth.is_some_and(|d| depth >= d);
        let split = if stop {
            None
        } else {
            best_split(dataset, &node_rows, active, params, task, n_classes, rng, &mut pairs)
        };
        match split {
            None => nodes[slot] = leaf,
            Some(c) => {
                let (l_rows, r_rows): (Vec<usize>, Vec<usize>) = node_rows
                    .iter()
                    .partition(|&&i| dataset.get(i, c.feature) <= c.threshold);
                let left = nodes.len();
                let right = left + 1;
                nodes.push(Node::Leaf {
                    value: 0.0,
                    class_counts: Vec::new(),
                });
                nodes.push(Node::Leaf {
                    value: 0.0,
                    class_counts: Vec::new(),
                });
                nodes[slot] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right,
                };
                // right first so the left subtree is grown first
                stack.push((right, r_rows, depth + 1));
                stack.push((left, l_rows, depth + 1));
            }
        }
    }
    Tree { nodes }
}

fn make_leaf(dataset: &Dataset, rows: &[usize], task: Task, n_classes: usize) -> Node {
    match task {
        Task::Regression => {
            let mean = if rows.is_empty() {
                0.0
            } else {
                rows.iter().map(|&i| dataset.y.value(i)).sum::<f64>() / rows.len() as f64
            };
            Node::Leaf {
                value: mean,
                class_counts: Vec::new(),
            }
        }
        Task::Classification => {
            let mut counts = vec![0; n_classes];
            for &i in rows {
                counts[dataset.y.value(i) as usize] += 1;
            }
            Node::Leaf {
                value: argmax_first(&counts) as f64,
                class_counts: counts,
            }
        }
    }
}

/// Index of the largest count; the smallest index wins ties.
pub(crate) fn argmax_first(counts: &[usize]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

fn is_pure(dataset: &Dataset, rows: &[usize]) -> bool {
    let first = dataset.y.value(rows[0]);
    rows.iter().all(|&i| dataset.y.value(i) == first)
}

#[allow(clippy::too_many_arguments)]
fn best_split<R: Rng + ?Sized>(
    dataset: &Dataset,
    rows: &[usize],
    active: &ActiveSet,
    params: &ForestParams,
    task: Task,
    n_classes: usize,
    rng: &mut R,
    pairs: &mut Vec<(f64, f64)>,
) -> Option<Candidate> {
    let features = active.indices();
    let mtry = params.mtry.min(features.len());
    let drawn = index::sample(rng, features.len(), mtry);
    let n = rows.len();
    let min_leaf = params.min_node_size.max(1);

    let mean = rows.iter().map(|&i| dataset.y.value(i)).sum::<f64>() / n as f64;
    let mut best: Option<Candidate> = None;
    for k in drawn.iter() {
        let feature = features[k];
        let col = dataset.column(feature);
        pairs.clear();
        pairs.extend(rows.iter().map(|&i| (col[i], dataset.y.value(i))));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs[0].0 == pairs[n - 1].0 {
            continue;
        }
        let found = match task {
            Task::Regression => scan_regression(pairs, mean, min_leaf),
            Task::Classification => scan_gini(pairs, n_classes, min_leaf),
        };
        if let Some((pos, gain)) = found {
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(Candidate {
                    feature,
                    threshold: midpoint(pairs[pos - 1].0, pairs[pos].0),
                    gain,
                });
            }
        }
    }
    best
}

/// Threshold strictly below `hi` and at least `lo`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m < hi {
        m
    } else {
        lo
    }
}

/// Best cut position (first index of the right child) by sum-of-squares
/// reduction, computed on responses centred at the node mean.
fn scan_regression(pairs: &[(f64, f64)], mean: f64, min_leaf: usize) -> Option<(usize, f64)> {
    let n = pairs.len();
    let total: f64 = pairs.iter().map(|p| p.1 - mean).sum();
    let sse: f64 = pairs.iter().map(|p| (p.1 - mean).powi(2)).sum();
    let parent = total * total / n as f64;
    let mut left = 0.0;
    let mut best: Option<(usize, f64)> = None;
    for pos in 1..n {
        left += pairs[pos - 1].1 - mean;
        if pos < min_leaf || n - pos < min_leaf || pairs[pos - 1].0 == pairs[pos].0 {
            continue;
        }
        let right = total - left;
        let score = left * left / pos as f64 + right * right / (n - pos) as f64;
        let gain = score - parent;
        if best.is_none_or(|b| gain > b.1) {
            best = Some((pos, gain));
        }
    }
    best.filter(|b| b.1 > 1e-12 * sse.max(f64::MIN_POSITIVE))
}

/// Best cut position by weighted Gini decrease.
fn scan_gini(pairs: &[(f64, f64)], n_classes: usize, min_leaf: usize) -> Option<(usize, f64)> {
    let n = pairs.len();
    let mut total = vec![0.0f64; n_classes];
    for p in pairs {
        total[p.1 as usize] += 1.0;
    }
    let parent: f64 = total.iter().map(|c| c * c).sum::<f64>() / n as f64;
    let mut left = vec![0.0f64; n_classes];
    // running sums of squared counts
    let mut sq_left = 0.0;
    let mut sq_right: f64 = total.iter().map(|c| c * c).sum();
    let mut best: Option<(usize, f64)> = None;
    for pos in 1..n {
        let c = pairs[pos - 1].1 as usize;
        let r = total[c] - left[c];
        sq_left += 2.0 * left[c] + 1.0;
        sq_right -= 2.0 * r - 1.0;
        left[c] += 1.0;
        if pos < min_leaf || n - pos < min_leaf || pairs[pos - 1].0 == pairs[pos].0 {
            continue;
        }
        let score = sq_left / pos as f64 + sq_right / (n - pos) as f64;
        let gain = score - parent;
        if best.is_none_or(|b| gain > b.1) {
            best = Some((pos, gain));
        }
    }
    best.filter(|b| b.1 > 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Response;
    use crate::seed::SeedSpec;

    fn params(mtry: usize, min_node_size: usize) -> ForestParams {
        ForestParams {
            n_trees: 1,
            mtry,
            min_node_size,
            max_depth: None,
            importance_reps: 1,
        }
    }

    fn route_all(t: &Tree, ds: &Dataset) -> Vec<usize> {
        (0..ds.n()).map(|i| t.leaf_of(|f| ds.get(i, f))).collect()
    }

    #[test]
    fn single_row_is_a_single_leaf() {
        let ds = Dataset::from_rows(
            &[vec![1.0], vec![2.0]],
            Response::Continuous {
                values: vec![3.5, 9.0],
            },
            None,
        )
        .unwrap();
        let mut rng = SeedSpec::new(0).substream("t", 0);
        let t = fit_tree(&ds, &[0], &ActiveSet::all(1), &params(1, 1), 0, &mut rng);
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict_with(|_| 100.0), 3.5);
    }

    #[test]
    fn separable_classes_split_once_in_the_gap() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 - 9.5).collect();
        let labels: Vec<usize> = xs.iter().map(|&x| (x >= 0.0) as usize).collect();
        let ds = Dataset::from_columns(
            vec![xs.clone()],
            Response::Categorical {
                labels: labels.clone(),
                n_levels: 2,
            },
            None,
        )
        .unwrap();
        let rows: Vec<usize> = (0..20).collect();
        let mut rng = SeedSpec::new(0).substream("t", 0);
        let t = fit_tree(&ds, &rows, &ActiveSet::all(1), &params(1, 1), 2, &mut rng);
        assert_eq!(t.depth(), 1);
        match &t.nodes[0] {
            Node::Split { threshold, .. } => assert!(*threshold > -0.5 && *threshold < 0.5),
            _ => panic!("root should split"),
        }
        for i in 0..20 {
            assert_eq!(t.predict_with(|_| xs[i]), labels[i] as f64);
        }
    }

    #[test]
    fn constant_response_gives_one_leaf() {
        let ds = Dataset::from_columns(
            vec![(0..30).map(|i| i as f64).collect()],
            Response::Continuous {
                values: vec![2.0; 30],
            },
            None,
        )
        .unwrap();
        let rows: Vec<usize> = (0..30).collect();
        let mut rng = SeedSpec::new(0).substream("t", 0);
        let t = fit_tree(&ds, &rows, &ActiveSet::all(1), &params(1, 1), 0, &mut rng);
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn fully_grown_regression_tree_interpolates_training_rows() {
        let x1: Vec<f64> = (0..40).map(|i| ((i * 17) % 40) as f64 * 0.3).collect();
        let x2: Vec<f64> = (0..40).map(|i| ((i * 7) % 40) as f64).collect();
        let y: Vec<f64> = (0..40).map(|i| (i as f64).sin() * 3.0 + x1[i]).collect();
        let ds = Dataset::from_columns(
            vec![x1, x2],
            Response::Continuous { values: y.clone() },
            None,
        )
        .unwrap();
        let rows: Vec<usize> = (0..40).collect();
        let mut rng = SeedSpec::new(3).substream("t", 0);
        let t = fit_tree(&ds, &rows, &ActiveSet::all(2), &params(2, 1), 0, &mut rng);
        let mse: f64 = (0..40)
            .map(|i| (t.predict_with(|f| ds.get(i, f)) - y[i]).powi(2))
            .sum::<f64>()
            / 40.0;
        assert!(mse < 1e-20, "{mse}");
    }

    #[test]
    fn max_depth_and_min_node_size_are_respected() {
        let x: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let ds =
            Dataset::from_columns(vec![x], Response::Continuous { values: y }, None).unwrap();
        let rows: Vec<usize> = (0..64).collect();
        let mut p = params(1, 1);
        p.max_depth = Some(2);
        let mut rng = SeedSpec::new(0).substream("t", 0);
        assert!(fit_tree(&ds, &rows, &ActiveSet::all(1), &p, 0, &mut rng).depth() <= 2);

        let p = params(1, 10);
        let t = fit_tree(&ds, &rows, &ActiveSet::all(1), &p, 0, &mut rng);
        let leaves = route_all(&t, &ds);
        for leaf in leaves.iter() {
            assert!(leaves.iter().filter(|l| *l == leaf).count() >= 10);
        }
    }

    #[test]
    fn monotone_transform_keeps_leaf_membership() {
        let x1: Vec<f64> = (0..50).map(|i| ((i * 13) % 50) as f64 / 10.0).collect();
        let x2: Vec<f64> = (0..50).map(|i| ((i * 31) % 50) as f64 / 7.0).collect();
        let y: Vec<f64> = (0..50).map(|i| x1[i] * 2.0 - x2[i] + (i % 3) as f64).collect();
        let rows: Vec<usize> = (0..50).map(|i| (i * 3) % 50).collect();
        let ds = Dataset::from_columns(
            vec![x1.clone(), x2.clone()],
            Response::Continuous { values: y.clone() },
            None,
        )
        .unwrap();
        let warped = Dataset::from_columns(
            vec![x1.iter().map(|v| v.exp()).collect(), x2],
            Response::Continuous { values: y },
            None,
        )
        .unwrap();
        let a = fit_tree(
            &ds,
            &rows,
            &ActiveSet::all(2),
            &params(1, 2),
            0,
            &mut SeedSpec::new(9).substream("t", 0),
        );
        let b = fit_tree(
            &warped,
            &rows,
            &ActiveSet::all(2),
            &params(1, 2),
            0,
            &mut SeedSpec::new(9).substream("t", 0),
        );
        assert_eq!(route_all(&a, &ds), route_all(&b, &warped));
    }
}
