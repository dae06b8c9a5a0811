//! Fused Kolmogorov filter screening.
//!
//! The response is sliced by one or more partitions. For each feature and
//! partition we take the largest two-sample Kolmogorov–Smirnov distance
//! between the feature's conditional distributions in any two slices, then
//! sum those maxima over partitions. Features are ranked by the sum and the
//! top `d_n` survive.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ActiveSet, Dataset, Response};
use crate::error::{FkrfeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    QuantileOfY,
    CategoricalLevels,
}

/// A slicing scheme over the response.
///
/// For `QuantileOfY` the slices are `[a_{l-1}, a_l)` with `a_0 = -inf` and
/// `a_g = +inf`; `boundaries` holds the interior cut points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub slice_count: usize,
    pub boundaries: Vec<f64>,
    pub kind: PartitionKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceAssignment {
    pub labels: Vec<usize>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRanking {
    /// Fused statistic per feature, indexed by feature.
    pub statistics: Vec<f64>,
    /// Features by decreasing statistic; ties go to the lower index.
    pub order: Vec<usize>,
}

/// Build one partition per requested slice count.
///
/// Cut points are chosen among the distinct response values. A cut at `v`
/// puts every observation below `v` in the lower slices. For the `l`-th cut
/// the target number of observations below it is `ceil(n * l / g)`; the cut
/// taken is the distinct value whose below-count is nearest that target
/// (smaller count on a tie), subject to the cuts being strictly increasing.
/// Without ties this is the order statistic `y_(ceil(n l / g) + 1)`. Ties in
/// the response only fail the partition when there are fewer than `g`
/// distinct values.
///
/// A categorical response yields a single partition by level, regardless of
/// `slice_counts`.
pub fn build_partitions(y: &Response, slice_counts: &[usize]) -> Result<Vec<Partition>> {
    match y {
        Response::Categorical { n_levels, .. } => Ok(vec![Partition {
            slice_count: *n_levels,
            boundaries: Vec::new(),
            kind: PartitionKind::CategoricalLevels,
        }]),
        Response::Continuous { values } => {
            if slice_counts.is_empty() {
                return Err(FkrfeError::ConfigInvalid(
                    "at least one slice count is required".into(),
                ));
            }
            let n = values.len();
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            // (value, number of observations strictly below it), minimum excluded
            let candidates: Vec<(f64, usize)> = (1..n)
                .filter(|&k| sorted[k] > sorted[k - 1])
                .map(|k| (sorted[k], k))
                .collect();
            slice_counts
                .iter()
                .map(|&g| quantile_partition(&candidates, n, g))
                .collect()
        }
    }
}

fn quantile_partition(candidates: &[(f64, usize)], n: usize, g: usize) -> Result<Partition> {
    if g < 2 {
        return Err(FkrfeError::ConfigInvalid(format!(
            "slice count must be at least 2, got {g}"
        )));
    }
    if candidates.len() < g - 1 {
        return Err(FkrfeError::EmptySlice(g));
    }
    let mut boundaries = Vec::with_capacity(g - 1);
    let mut lo = 0;
    for l in 1..g {
        let target = (n * l).div_ceil(g);
        // leave room for the remaining g - 1 - l cuts
        let hi = candidates.len() - (g - 1 - l);
        let mut best = lo;
        for k in lo..hi {
            if candidates[k].1.abs_diff(target) < candidates[best].1.abs_diff(target) {
                best = k;
            }
        }
        boundaries.push(candidates[best].0);
        lo = best + 1;
    }
    Ok(Partition {
        slice_count: g,
        boundaries,
        kind: PartitionKind::QuantileOfY,
    })
}

/// Slice label of every observation under `partition`.
pub fn assign_slices(y: &Response, partition: &Partition) -> SliceAssignment {
    let labels: Vec<usize> = match (y, partition.kind) {
        (Response::Categorical { labels, .. }, _) => labels.clone(),
        (Response::Continuous { values }, _) => values
            .iter()
            .map(|&v| partition.boundaries.partition_point(|&a| a <= v))
            .collect(),
    };
    let mut counts = vec![0; partition.slice_count];
    for &l in &labels {
        counts[l] += 1;
    }
    SliceAssignment { labels, counts }
}

/// Exact two-sample Kolmogorov–Smirnov distance `sup_x |F_a(x) - F_b(x)|`.
pub fn two_sample_ks(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(FkrfeError::EmptySample);
    }
    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(ks_sorted(&a, &b))
}

/// KS distance for two nonempty, ascending samples.
///
/// Both empirical CDFs only jump at sample points, so the supremum is read
/// after consuming every copy of each pooled value.
pub(crate) fn ks_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

fn sorted_groups(x_col: &[f64], assignment: &SliceAssignment) -> Vec<Vec<f64>> {
    let mut groups: Vec<Vec<f64>> = assignment
        .counts
        .iter()
        .map(|&c| Vec::with_capacity(c))
        .collect();
    for (&x, &l) in x_col.iter().zip(&assignment.labels) {
        groups[l].push(x);
    }
    for g in &mut groups {
        g.sort_by(f64::total_cmp);
    }
    groups
}

/// Largest pairwise KS distance between the slices of one partition.
pub fn partition_statistic(x_col: &[f64], assignment: &SliceAssignment) -> f64 {
    let groups = sorted_groups(x_col, assignment);
    let mut best: f64 = 0.0;
    for l in 0..groups.len() {
        for m in l + 1..groups.len() {
            if groups[l].is_empty() || groups[m].is_empty() {
                continue;
            }
            best = best.max(ks_sorted(&groups[l], &groups[m]));
        }
    }
    best
}

/// Sum of `partition_statistic` over all partitions.
pub fn fused_statistic(x_col: &[f64], assignments: &[SliceAssignment]) -> f64 {
    assignments
        .iter()
        .map(|a| partition_statistic(x_col, a))
        .sum()
}

/// Screening threshold `ceil(a * ceil(n / ln n))`, before capping at `p`.
pub fn default_dn(n: usize, a: f64) -> Result<usize> {
    if n < 3 {
        return Err(FkrfeError::ConfigInvalid(format!(
            "automatic d_n needs n >= 3, got {n}"
        )));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(FkrfeError::ConfigInvalid(format!(
            "d_n multiplier must be positive, got {a}"
        )));
    }
    let base = (n as f64 / (n as f64).ln()).ceil();
    Ok((a * base).ceil() as usize)
}

/// Rank every feature by its fused statistic and keep the top `d_n`.
pub fn screen(
    dataset: &Dataset,
    slice_counts: &[usize],
    d_n: usize,
) -> Result<(ActiveSet, FilterRanking)> {
    let p = dataset.p();
    if d_n == 0 || d_n > p {
        return Err(FkrfeError::ConfigInvalid(format!(
            "d_n must be in 1..={p}, got {d_n}"
        )));
    }
    let partitions = build_partitions(&dataset.y, slice_counts)?;
    let assignments: Vec<SliceAssignment> = partitions
        .iter()
        .map(|part| assign_slices(&dataset.y, part))
        .collect();
    for (part, a) in partitions.iter().zip(&assignments) {
        if a.counts.contains(&0) {
            return Err(FkrfeError::EmptySlice(part.slice_count));
        }
    }
    let statistics: Vec<f64> = (0..p)
        .into_par_iter()
        .map(|j| fused_statistic(dataset.column(j), &assignments))
        .collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| statistics[b].total_cmp(&statistics[a]).then(a.cmp(&b)));
    let kept = ActiveSet::new(order[..d_n].to_vec());
    Ok((kept, FilterRanking { statistics, order }))
}
