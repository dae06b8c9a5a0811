//! Monte-Carlo benchmark runs and the train/test holdout protocol.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{validate, ActiveSet, Dataset, Task};
use crate::error::{FkrfeError, Result};
use crate::filter::screen;
use crate::forest::{fit_forest, risk, Forest, Predictor};
use crate::rfe::{check_trace, fkrfe_select, FkrfeConfig, TaskOverride};
use crate::seed::SeedSpec;
use crate::sim::generate::{gen_example, ExampleSpec};
use crate::sim::metrics::{error_metrics, selection_metrics, ErrorMetrics, MeanStd};

/// Outcome of one benchmark replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub selected: ActiveSet,
    pub tpr: f64,
    pub tnr: f64,
    pub balanced_accuracy: f64,
    pub model_size: usize,
    pub chosen_perf: f64,
    /// Whether the screened set contained the whole true support.
    pub screened_truth: bool,
    /// Features in the order they were eliminated; the last is the final survivor.
    pub elimination_order: Vec<usize>,
    /// `None` when every trace invariant held, else the first violation.
    pub trace_violation: Option<String>,
}

/// One table row: mean (sample std) of each metric over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub example_id: u8,
    pub n: usize,
    pub p: usize,
    pub reps: usize,
    pub balanced_accuracy: MeanStd,
    pub model_size: MeanStd,
    pub tpr: MeanStd,
    pub tnr: MeanStd,
}

impl MetricRow {
    pub fn from_records(spec: &ExampleSpec, records: &[RepRecord]) -> MetricRow {
        let col = |f: fn(&RepRecord) -> f64| MeanStd::of(&records.iter().map(f).collect::<Vec<_>>());
        MetricRow {
            example_id: spec.example_id,
            n: spec.n,
            p: spec.p,
            reps: records.len(),
            balanced_accuracy: col(|r| r.balanced_accuracy),
            model_size: col(|r| r.model_size as f64),
            tpr: col(|r| r.tpr),
            tnr: col(|r| r.tnr),
        }
    }
}

impl std::fmt::Display for MetricRow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Example {}  n={}  p={}  reps={}  | Balanced Accuracy {}  Model Size {:.2}  TPR {}  TNR {}",
            self.example_id,
            self.n,
            self.p,
            self.reps,
            self.balanced_accuracy,
            self.model_size,
            self.tpr,
            self.tnr
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub records: Vec<RepRecord>,
    pub row: MetricRow,
}

/// Run selection on `reps` independent draws of an example design.
///
/// Replication `r` uses seed `seed.child("rep", r)` for both its data and its
/// selection, so any single replication can be replayed on its own.
pub fn run_benchmark(
    example_id: u8,
    n: usize,
    p: usize,
    reps: usize,
    config: &FkrfeConfig,
    seed: SeedSpec,
) -> Result<BenchmarkReport> {
    if reps == 0 {
        return Err(FkrfeError::ConfigInvalid("reps must be at least 1".into()));
    }
    let spec = ExampleSpec::new(example_id, n, p)?;
    let records = (0..reps)
        .into_par_iter()
        .map(|r| run_rep(&spec, r, config, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkReport {
        row: MetricRow::from_records(&spec, &records),
        records,
    })
}

pub fn run_rep(spec: &ExampleSpec, rep: usize, config: &FkrfeConfig, seed: SeedSpec) -> Result<RepRecord> {
    let rep_seed = seed.child("rep", rep as u64);
    let (ds, truth) = gen_example(spec, rep_seed.child("data", 0))?;
    let result = fkrfe_select(&ds, config, rep_seed.child("select", 0))?;
    let m = selection_metrics(&result.chosen, &truth, spec.p)?;
    let mut elimination_order: Vec<usize> = result.trace.iter().filter_map(|s| s.eliminated).collect();
    if let Some(last) = result.trace.last() {
        elimination_order.extend(last.active_set.iter());
    }
    Ok(RepRecord {
        rep,
        selected: result.chosen.clone(),
        tpr: m.tpr,
        tnr: m.tnr,
        balanced_accuracy: m.balanced_accuracy,
        model_size: m.model_size,
        chosen_perf: result.chosen_perf,
        screened_truth: truth.is_subset_of(&result.trace[0].active_set),
        elimination_order,
        trace_violation: check_trace(&result).err(),
    })
}

/// For each replication, whether the filter phase alone keeps the true support.
pub fn screening_coverage(
    example_id: u8,
    n: usize,
    p: usize,
    d_n: usize,
    slice_counts: &[usize],
    reps: usize,
    seed: SeedSpec,
) -> Result<Vec<bool>> {
    let spec = ExampleSpec::new(example_id, n, p)?;
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let rep_seed = seed.child("rep", r as u64);
            let (ds, truth) = gen_example(&spec, rep_seed.child("data", 0))?;
            let (v0, _) = screen(&ds, slice_counts, d_n)?;
            Ok(truth.is_subset_of(&v0))
        })
        .collect()
}

/// One train/test evaluation of the selection procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub train_n: usize,
    pub test_n: usize,
    pub selected: ActiveSet,
    pub model_size: usize,
    /// Number of selected features that are injected noise columns.
    pub wrong_selection: usize,
    /// Indices of the injected noise columns.
    pub synthetic: ActiveSet,
    /// MSE (regression) or misclassification rate of the final forest.
    pub train_risk: f64,
    pub test_risk: f64,
    /// MSE/MAE/MAPE; regression only.
    pub train_metrics: Option<ErrorMetrics>,
    pub test_metrics: Option<ErrorMetrics>,
}

/// Append `noise_p` standard-normal columns, split rows at random into
/// `train_n` training rows and the rest for testing, select on the training
/// rows, refit a forest on the selected features, and score both parts.
pub fn holdout_protocol(
    dataset: &Dataset,
    train_n: usize,
    noise_p: usize,
    seed: SeedSpec,
    config: &FkrfeConfig,
) -> Result<(HoldoutReport, Dataset)> {
    let n = dataset.n();
    if train_n < 2 || train_n >= n {
        return Err(FkrfeError::ConfigInvalid(format!(
            "train_n must be in 2..{n}, got {train_n}"
        )));
    }
    let mut rng = seed.substream("noise", 0);
    let noise: Vec<Vec<f64>> = (0..noise_p)
        .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let names = (0..noise_p).map(|k| format!("noise_{}", k + 1)).collect();
    let (augmented, synthetic) = dataset.with_extra_columns(noise, names)?;
    let synthetic = ActiveSet::new(synthetic);
    // convert before splitting so both parts share one label mapping
    let augmented = match config.task {
        TaskOverride::Auto => augmented,
        TaskOverride::Regression => augmented.with_task(Task::Regression)?,
        TaskOverride::Classification => augmented.with_task(Task::Classification)?,
    };

    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut seed.substream("split", 0));
    let (train_rows, test_rows) = rows.split_at(train_n);
    let train = validate(augmented.select_rows(train_rows))?;
    let test = augmented.select_rows(test_rows);

    let result = fkrfe_select(&train, config, seed.child("select", 0))?;
    let params = config.forest.resolve(result.task, result.chosen.len());
    let forest = fit_forest(&train, &result.chosen, &params, seed.child("final", 0))?;

    let all_train: Vec<usize> = (0..train.n()).collect();
    let all_test: Vec<usize> = (0..test.n()).collect();
    let (train_metrics, test_metrics) = match result.task {
        Task::Regression => (
            Some(score(&forest, &train)?),
            Some(score(&forest, &test)?),
        ),
        Task::Classification => (None, None),
    };
    let report = HoldoutReport {
        train_n: train.n(),
        test_n: test.n(),
        model_size: result.chosen.len(),
        wrong_selection: result.chosen.intersection_len(&synthetic),
        selected: result.chosen,
        synthetic,
        train_risk: risk(&forest, &train, &all_train)?,
        test_risk: risk(&forest, &test, &all_test)?,
        train_metrics,
        test_metrics,
    };
    Ok((report, augmented))
}

fn score(forest: &Forest, ds: &Dataset) -> Result<ErrorMetrics> {
    let y_hat: Vec<f64> = (0..ds.n()).map(|i| forest.predict_row(ds, i)).collect();
    let y: Vec<f64> = (0..ds.n()).map(|i| ds.y.value(i)).collect();
    error_metrics(&y_hat, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutSummary {
    pub splits: Vec<HoldoutReport>,
    pub model_size: MeanStd,
    pub wrong_selection: MeanStd,
    pub train_risk: MeanStd,
    pub test_risk: MeanStd,
    pub train_mse: Option<MeanStd>,
    pub train_mae: Option<MeanStd>,
    pub train_mape: Option<MeanStd>,
    pub test_mse: Option<MeanStd>,
    pub test_mae: Option<MeanStd>,
    pub test_mape: Option<MeanStd>,
}

/// Repeat the holdout protocol over `splits` independent splits (and noise
/// draws); split `s` uses seed `seed.child("split", s)`.
pub fn holdout_repeated(
    dataset: &Dataset,
    train_n: usize,
    noise_p: usize,
    splits: usize,
    seed: SeedSpec,
    config: &FkrfeConfig,
) -> Result<HoldoutSummary> {
    if splits == 0 {
        return Err(FkrfeError::ConfigInvalid("splits must be at least 1".into()));
    }
    let reports = (0..splits)
        .into_par_iter()
        .map(|s| holdout_protocol(dataset, train_n, noise_p, seed.child("split", s as u64), config).map(|r| r.0))
        .collect::<Result<Vec<_>>>()?;
    let col = |f: &dyn Fn(&HoldoutReport) -> f64| MeanStd::of(&reports.iter().map(f).collect::<Vec<_>>());
    let opt = |f: &dyn Fn(&HoldoutReport) -> Option<f64>| {
        reports
            .iter()
            .map(f)
            .collect::<Option<Vec<f64>>>()
            .map(|v| MeanStd::of(&v))
    };
    Ok(HoldoutSummary {
        model_size: col(&|r| r.model_size as f64),
        wrong_selection: col(&|r| r.wrong_selection as f64),
        train_risk: col(&|r| r.train_risk),
        test_risk: col(&|r| r.test_risk),
        train_mse: opt(&|r| r.train_metrics.map(|m| m.mse)),
        train_mae: opt(&|r| r.train_metrics.map(|m| m.mae)),
        train_mape: opt(&|r| r.train_metrics.map(|m| m.mape_percent)),
        test_mse: opt(&|r| r.test_metrics.map(|m| m.mse)),
        test_mae: opt(&|r| r.test_metrics.map(|m| m.mae)),
        test_mape: opt(&|r| r.test_metrics.map(|m| m.mape_percent)),
        splits: reports,
    })
}
