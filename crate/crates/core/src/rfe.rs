//! Screening followed by random-forest recursive feature elimination.

use serde::{Deserialize, Serialize};

use crate::data::{ActiveSet, Dataset, Task};
use crate::error::{FkrfeError, Result};
use crate::filter::{default_dn, screen, FilterRanking};
use crate::forest::{fit_forest, importance_ranking, oob_performance, ForestConfig};
use crate::seed::SeedSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskOverride {
    #[default]
    Auto,
    Regression,
    Classification,
}

/// Selection settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FkrfeConfig {
    /// Slice counts of the response partitions (continuous response only).
    pub slice_counts: Vec<usize>,
    /// Screening threshold; `None` means `ceil(dn_scale * ceil(n / ln n))`.
    pub d_n: Option<usize>,
    pub dn_scale: f64,
    pub forest: ForestConfig,
    pub task: TaskOverride,
}

impl Default for FkrfeConfig {
    fn default() -> Self {
        FkrfeConfig {
            slice_counts: vec![3, 4],
            d_n: None,
            dn_scale: 1.0,
            forest: ForestConfig::default(),
            task: TaskOverride::Auto,
        }
    }
}

/// Resolved screening threshold plus whether a requested value was clamped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedDn {
    pub d_n: usize,
    pub clamped_from: Option<usize>,
}

impl FkrfeConfig {
    pub fn resolve_dn(&self, n: usize, p: usize) -> Result<ResolvedDn> {
        let wanted = match self.d_n {
            Some(0) => return Err(FkrfeError::ConfigInvalid("d_n must be at least 1".into())),
            Some(d) => d,
            None => default_dn(n, self.dn_scale)?,
        };
        Ok(ResolvedDn {
            d_n: wanted.min(p),
            clamped_from: (self.d_n.is_some() && wanted > p).then_some(wanted),
        })
    }

    pub fn check(&self) -> Result<()> {
        self.forest.check()?;
        if let Some(&g) = self.slice_counts.iter().find(|&&g| g < 2) {
            return Err(FkrfeError::ConfigInvalid(format!(
                "slice counts must be at least 2, got {g}"
            )));
        }
        Ok(())
    }
}

/// One wrapper iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub active_set: ActiveSet,
    pub oob_perf: f64,
    /// `(feature, importance)` ascending by importance.
    pub importances: Vec<(usize, f64)>,
    /// Feature removed to form the next set; `None` on the last step.
    pub eliminated: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub chosen: ActiveSet,
    pub chosen_perf: f64,
    pub best_step: usize,
    pub d_n: usize,
    pub task: Task,
    pub trace: Vec<TraceStep>,
    pub filter_ranking: FilterRanking,
    pub config: FkrfeConfig,
    pub seed: SeedSpec,
}

/// Step with the lowest OOB error; ties go to the later, smaller set.
pub fn best_step(trace: &[TraceStep]) -> usize {
    let mut best = 0;
    for (l, s) in trace.iter().enumerate() {
        if s.oob_perf <= trace[best].oob_perf {
            best = l;
        }
    }
    best
}

/// Run both phases on `dataset`.
///
/// The wrapper refits a forest on every active set down to a single feature.
/// All steps share the same forest and permutation substreams, so tree `m`
/// sees the same bootstrap rows at every step and the OOB errors being
/// compared differ only through the feature set.
pub fn fkrfe_select(dataset: &Dataset, config: &FkrfeConfig, seed: SeedSpec) -> Result<SelectionResult> {
    config.check()?;
    let ds;
    let dataset = match config.task {
        TaskOverride::Auto => dataset,
        TaskOverride::Regression => {
            ds = dataset.clone().with_task(Task::Regression)?;
            &ds
        }
        TaskOverride::Classification => {
            ds = dataset.clone().with_task(Task::Classification)?;
            &ds
        }
    };
    let task = dataset.task();
    let d_n = config.resolve_dn(dataset.n(), dataset.p())?.d_n;
    let (v0, filter_ranking) = screen(dataset, &config.slice_counts, d_n)?;

    let forest_seed = seed.child("forest", 0);
    let importance_seed = seed.child("importance", 0);
    let mut trace = Vec::with_capacity(d_n);
    let mut active = v0;
    loop {
        let params = config.forest.resolve(task, active.len());
        let forest = fit_forest(dataset, &active, &params, forest_seed)?;
        let oob_perf = oob_performance(&forest, dataset)?;
        let importances = importance_ranking(&forest, dataset, importance_seed)?;
        let eliminated = (active.len() > 1).then(|| importances[0].0);
        trace.push(TraceStep {
            step: trace.len(),
            active_set: active.clone(),
            oob_perf,
            importances,
            eliminated,
        });
        match eliminated {
            Some(j) => active = active.without(j),
            None => break,
        }
    }

    let best = best_step(&trace);
    Ok(SelectionResult {
        chosen: trace[best].active_set.clone(),
        chosen_perf: trace[best].oob_perf,
        best_step: best,
        d_n,
        task,
        trace,
        filter_ranking,
        config: config.clone(),
        seed,
    })
}

/// Check the structural invariants of a trace: sizes `d_n - l`, strict
/// nesting, and that every eliminated feature had the step's minimum
/// importance. Returns a description of the first violation.
pub fn check_trace(result: &SelectionResult) -> std::result::Result<(), String> {
    let trace = &result.trace;
    if trace.len() != result.d_n {
        return Err(format!("trace has {} steps, d_n = {}", trace.len(), result.d_n));
    }
    for (l, s) in trace.iter().enumerate() {
        if s.active_set.len() != result.d_n - l {
            return Err(format!("step {l}: |V| = {}", s.active_set.len()));
        }
        let min = s.importances.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
        match (s.eliminated, trace.get(l + 1)) {
            (Some(j), Some(next)) => {
                if next.active_set != s.active_set.without(j) || !s.active_set.contains(j) {
                    return Err(format!("step {l}: next set is not V minus {j}"));
                }
                let imp = s.importances.iter().find(|e| e.0 == j).map(|e| e.1);
                if imp != Some(min) {
                    return Err(format!("step {l}: eliminated {j} is not a minimum"));
                }
                // larger index goes first among equal minima
                if s.importances.iter().any(|e| e.1 == min && e.0 > j) {
                    return Err(format!("step {l}: tie rule violated"));
                }
            }
            (None, None) if s.active_set.len() == 1 => {}
            _ => return Err(format!("step {l}: inconsistent elimination record")),
        }
    }
    let best = best_step(trace);
    if result.best_step != best || result.chosen != trace[best].active_set {
        return Err("chosen set is not the best step".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Response;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn step(l: usize, size: usize, perf: f64) -> TraceStep {
        TraceStep {
            step: l,
            active_set: ActiveSet::all(size),
            oob_perf: perf,
            importances: Vec::new(),
            eliminated: None,
        }
    }

    #[test]
    fn best_step_rules() {
        let valley = vec![step(0, 4, 3.0), step(1, 3, 2.0), step(2, 2, 1.0), step(3, 1, 2.5)];
        assert_eq!(best_step(&valley), 2);
        let tie = vec![step(0, 8, 1.0), step(1, 7, 2.0), step(2, 6, 2.0), step(3, 5, 1.0)];
        assert_eq!(best_step(&tie), 3);
        assert_eq!(best_step(&[step(0, 1, 5.0)]), 0);
    }

    fn small_config(n_trees: usize) -> FkrfeConfig {
        FkrfeConfig {
            forest: ForestConfig {
                n_trees,
                ..ForestConfig::default()
            },
            ..FkrfeConfig::default()
        }
    }

    fn exact_first_feature(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let y = cols[0].clone();
        Dataset::from_columns(cols, Response::Continuous { values: y }, None).unwrap()
    }

    #[test]
    fn noiseless_first_feature_is_selected() {
        let ds = exact_first_feature(60, 3, 1);
        let cfg = FkrfeConfig {
            d_n: Some(3),
            ..small_config(100)
        };
        let r = fkrfe_select(&ds, &cfg, SeedSpec::new(3)).unwrap();
        assert_eq!(r.trace.len(), 3);
        assert!(r.chosen.contains(0));
        check_trace(&r).unwrap();
    }

    #[test]
    fn single_screened_feature() {
        let ds = exact_first_feature(40, 5, 2);
        let cfg = FkrfeConfig {
            d_n: Some(1),
            ..small_config(60)
        };
        let r = fkrfe_select(&ds, &cfg, SeedSpec::new(1)).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.chosen.indices(), &[0]);
        assert_eq!(r.trace[0].eliminated, None);
        check_trace(&r).unwrap();
    }

    #[test]
    fn selection_is_deterministic() {
        let ds = exact_first_feature(50, 20, 3);
        let cfg = small_config(50);
        let a = fkrfe_select(&ds, &cfg, SeedSpec::new(11)).unwrap();
        let b = fkrfe_select(&ds, &cfg, SeedSpec::new(11)).unwrap();
        assert_eq!(a, b);
        check_trace(&a).unwrap();
        // automatic d_n at n = 50 is ceil(50 / ln 50) = 13
        assert_eq!(a.d_n, 13);
    }

    #[test]
    fn dn_resolution_and_clamping() {
        let cfg = FkrfeConfig {
            d_n: Some(5000),
            ..FkrfeConfig::default()
        };
        assert_eq!(
            cfg.resolve_dn(100, 100).unwrap(),
            ResolvedDn {
                d_n: 100,
                clamped_from: Some(5000)
            }
        );
        let auto = FkrfeConfig::default().resolve_dn(100, 10).unwrap();
        assert_eq!(auto, ResolvedDn { d_n: 10, clamped_from: None });
        assert_eq!(FkrfeConfig::default().resolve_dn(100, 500).unwrap().d_n, 22);
    }

    #[test]
    fn classification_override_runs() {
        let ds = exact_first_feature(60, 6, 4);
        let labels: Vec<usize> = ds.column(0).iter().map(|&v| (v > 0.0) as usize).collect();
        let ds = Dataset::from_columns(
            (0..6).map(|j| ds.column(j).to_vec()).collect(),
            Response::Categorical { labels, n_levels: 2 },
            None,
        )
        .unwrap();
        let r = fkrfe_select(&ds, &small_config(80), SeedSpec::new(2)).unwrap();
        assert_eq!(r.task, Task::Classification);
        assert!(r.chosen.contains(0));
        check_trace(&r).unwrap();
    }

    #[test]
    fn invalid_config_is_rejected() {
        let ds = exact_first_feature(30, 4, 5);
        let cfg = FkrfeConfig {
            slice_counts: vec![1],
            ..FkrfeConfig::default()
        };
        assert!(matches!(
            fkrfe_select(&ds, &cfg, SeedSpec::new(1)),
            Err(FkrfeError::ConfigInvalid(_))
        ));
    }

    #[test]
    fn result_round_trips_through_json() {
        let ds = exact_first_feature(40, 6, 6);
        let r = fkrfe_select(&ds, &small_config(40), SeedSpec::new(9)).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: SelectionResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
