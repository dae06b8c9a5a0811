//! CSV ingestion, run configuration files and serialized outputs.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Response};
use crate::error::{FkrfeError, Result};
use crate::forest::ForestConfig;
use crate::rfe::{FkrfeConfig, SelectionResult, TaskOverride};
use crate::seed::SeedSpec;

/// Which column holds the response: a header name, or a 0-based column index
/// when no header matches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseSelector {
    Name(String),
    Index(usize),
}

impl ResponseSelector {
    pub fn parse(s: &str) -> ResponseSelector {
        match s.parse::<usize>() {
            Ok(i) => ResponseSelector::Index(i),
            Err(_) => ResponseSelector::Name(s.to_string()),
        }
    }

    fn locate(&self, headers: &[String]) -> Result<usize> {
        match self {
            ResponseSelector::Name(name) => headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| FkrfeError::MissingColumn(name.clone())),
            // a header that happens to be numeric wins over the index reading
            ResponseSelector::Index(i) => match headers.iter().position(|h| *h == i.to_string()) {
                Some(k) => Ok(k),
                None if *i < headers.len() => Ok(*i),
                None => Err(FkrfeError::MissingColumn(i.to_string())),
            },
        }
    }
}

pub fn parse_csv(path: &Path, response: &ResponseSelector, categorical: bool) -> Result<Dataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| FkrfeError::Io(format!("{}: {e}", path.display())))?;
    read_csv(file, response, categorical)
}

/// Parse CSV text with a header row. Predictor columns must be numeric; a
/// categorical response keeps its labels as strings, numbered in order of
/// first appearance.
pub fn read_csv<R: std::io::Read>(
    reader: R,
    response: &ResponseSelector,
    categorical: bool,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers.is_empty() {
        return Err(FkrfeError::EmptyFile);
    }
    let mut seen = HashMap::new();
    for h in &headers {
        if seen.insert(h.as_str(), ()).is_some() {
            return Err(FkrfeError::DuplicateHeader(h.clone()));
        }
    }
    let ycol = response.locate(&headers)?;
    let p = headers.len() - 1;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); p];
    let mut raw_y: Vec<String> = Vec::new();

    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (c, cell) in rec.iter().enumerate() {
            let cell = cell.trim();
            if c == ycol {
                raw_y.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| FkrfeError::NonNumericCell {
                row: r + 1,
                col: c + 1,
                name: headers[c].clone(),
                value: cell.to_string(),
            })?;
            columns[if c < ycol { c } else { c - 1 }].push(v);
        }
    }
    if raw_y.is_empty() {
        return Err(FkrfeError::EmptyFile);
    }

    let y = if categorical {
        let mut levels: HashMap<String, usize> = HashMap::new();
        let labels = raw_y
            .into_iter()
            .map(|s| {
                let k = levels.len();
                *levels.entry(s).or_insert(k)
            })
            .collect();
        Response::Categorical { labels, n_levels: levels.len() }
    } else {
        let values = raw_y
            .into_iter()
            .enumerate()
            .map(|(r, s)| {
                s.parse::<f64>().map_err(|_| FkrfeError::NonNumericCell {
                    row: r + 1,
                    col: ycol + 1,
                    name: headers[ycol].clone(),
                    value: s,
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        Response::Continuous { values }
    };
    let names = headers
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != ycol)
        .map(|(_, h)| h.clone())
        .collect();
    Dataset::from_columns(columns, y, Some(names))
}

/// Screening threshold setting: `"auto"` or a fixed count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DnSetting {
    #[default]
    Auto,
    Fixed(usize),
}

impl Serialize for DnSetting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DnSetting::Auto => s.serialize_str("auto"),
            DnSetting::Fixed(d) => s.serialize_u64(*d as u64),
        }
    }
}

impl<'de> Deserialize<'de> for DnSetting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(usize),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(DnSetting::Fixed(n)),
            Raw::S(s) if s == "auto" => Ok(DnSetting::Auto),
            Raw::S(s) => Err(serde::de::Error::custom(format!(
                "d_n must be \"auto\" or a positive integer, got {s:?}"
            ))),
        }
    }
}

/// Everything a run needs besides its input; stored as JSON with `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub slice_counts: Vec<usize>,
    pub d_n: DnSetting,
    /// Multiplier `a` in the automatic threshold.
    pub dn_scale: f64,
    pub n_trees: usize,
    pub mtry: Option<usize>,
    pub min_node_size: Option<usize>,
    pub max_depth: Option<usize>,
    pub importance_reps: usize,
    pub seed: u64,
    pub task: TaskOverride,
    /// Replications in simulate mode.
    pub reps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let f = ForestConfig::default();
        let s = FkrfeConfig::default();
        RunConfig {
            slice_counts: s.slice_counts,
            d_n: DnSetting::Auto,
            dn_scale: s.dn_scale,
            n_trees: f.n_trees,
            mtry: f.mtry,
            min_node_size: f.min_node_size,
            max_depth: f.max_depth,
            importance_reps: f.importance_reps,
            seed: 0,
            task: TaskOverride::Auto,
            reps: 50,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FkrfeError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| FkrfeError::ConfigInvalid(format!("{}: {e}", path.display())))
    }

    pub fn selection(&self) -> FkrfeConfig {
        FkrfeConfig {
            slice_counts: self.slice_counts.clone(),
            d_n: match self.d_n {
                DnSetting::Auto => None,
                DnSetting::Fixed(d) => Some(d),
            },
            dn_scale: self.dn_scale,
            forest: ForestConfig {
                n_trees: self.n_trees,
                mtry: self.mtry,
                min_node_size: self.min_node_size,
                max_depth: self.max_depth,
                importance_reps: self.importance_reps,
            },
            task: self.task,
        }
    }

    pub fn seed(&self) -> SeedSpec {
        SeedSpec::new(self.seed)
    }

    pub fn check(&self) -> Result<()> {
        if self.slice_counts.is_empty() {
            return Err(FkrfeError::ConfigInvalid("slice_counts is empty".into()));
        }
        if !(self.dn_scale > 0.0 && self.dn_scale.is_finite()) {
            return Err(FkrfeError::ConfigInvalid(format!(
                "dn_scale must be positive, got {}",
                self.dn_scale
            )));
        }
        if self.reps == 0 {
            return Err(FkrfeError::ConfigInvalid("reps must be at least 1".into()));
        }
        if self.d_n == DnSetting::Fixed(0) {
            return Err(FkrfeError::ConfigInvalid("d_n must be at least 1".into()));
        }
        self.selection().check()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub index: usize,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectOutput {
    pub chosen_features: Vec<Feature>,
    /// Features in the order they were eliminated.
    pub eliminated: Vec<Feature>,
    pub feature_names: Vec<String>,
    pub d_n_requested: Option<usize>,
    pub result: SelectionResult,
    pub run_config: RunConfig,
}

impl SelectOutput {
    pub fn new(ds: &Dataset, result: SelectionResult, run_config: RunConfig) -> SelectOutput {
        let feature = |j: usize| Feature { index: j, name: ds.feature_name(j) };
        let d_n_requested = match run_config.d_n {
            DnSetting::Fixed(d) if d != result.d_n => Some(d),
            _ => None,
        };
        SelectOutput {
            chosen_features: result.chosen.iter().map(feature).collect(),
            eliminated: result.trace.iter().filter_map(|s| s.eliminated).map(feature).collect(),
            feature_names: (0..ds.p()).map(|j| ds.feature_name(j)).collect(),
            d_n_requested,
            result,
            run_config,
        }
    }

    /// One row per elimination step.
    pub fn trace_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "step",
            "size",
            "oob_perf",
            "chosen",
            "eliminated_index",
            "eliminated_name",
            "active_set",
        ])?;
        for s in &self.result.trace {
            let (ei, en) = match s.eliminated {
                Some(j) => (j.to_string(), self.feature_names[j].clone()),
                None => (String::new(), String::new()),
            };
            let active: Vec<&str> = s.active_set.iter().map(|j| self.feature_names[j].as_str()).collect();
            w.write_record([
                s.step.to_string(),
                s.active_set.len().to_string(),
                format!("{:?}", s.oob_perf),
                (s.step == self.result.best_step).to_string(),
                ei,
                en,
                active.join(" "),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| FkrfeError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| FkrfeError::Io(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, y: &str, cat: bool) -> Result<Dataset> {
        read_csv(text.as_bytes(), &ResponseSelector::parse(y), cat)
    }

    #[test]
    fn response_by_name() {
        let ds = read("a,y,b\n1,2,3\n4,5,6\n7,8,9\n", "y", false).unwrap();
        assert_eq!(ds.p(), 2);
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.column(1), &[3.0, 6.0, 9.0]);
        assert_eq!(ds.feature_name(1), "b");
        assert_eq!(ds.y.value(2), 8.0);
    }

    #[test]
    fn response_by_index() {
        let ds = read("a,y,b\n1,2,3\n4,5,6\n", "0", false).unwrap();
        assert_eq!(ds.y.value(1), 4.0);
        assert_eq!(ds.feature_name(0), "y");
        assert_eq!(read("a,b\n1,2\n3,4\n", "7", false), Err(FkrfeError::MissingColumn("7".into())));
    }

    #[test]
    fn non_numeric_cell_position() {
        let err = read("a,y,b\n1,2,3\n4,5,abc\n", "y", false).unwrap_err();
        assert_eq!(
            err,
            FkrfeError::NonNumericCell { row: 2, col: 3, name: "b".into(), value: "abc".into() }
        );
        assert!(err.to_string().contains("row 2, column 3"));
    }

    #[test]
    fn categorical_first_appearance() {
        let ds = read("x,y\n1,a\n2,b\n3,a\n", "y", true).unwrap();
        assert_eq!(
            ds.y,
            Response::Categorical { labels: vec![0, 1, 0], n_levels: 2 }
        );
    }

    #[test]
    fn header_errors() {
        assert_eq!(read("a,a,y\n1,2,3\n4,5,6\n", "y", false), Err(FkrfeError::DuplicateHeader("a".into())));
        assert_eq!(read("", "y", false), Err(FkrfeError::EmptyFile));
        assert_eq!(read("a,y\n", "y", false), Err(FkrfeError::EmptyFile));
        assert_eq!(read("a,y\n1,2\n3,4\n", "z", false), Err(FkrfeError::MissingColumn("z".into())));
    }

    #[test]
    fn ragged_rows_are_csv_errors() {
        assert!(matches!(read("a,y\n1,2\n3\n", "y", false), Err(FkrfeError::Csv(_))));
    }

    #[test]
    fn run_config_round_trip() {
        let mut c = RunConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"d_n\":\"auto\""));
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
        c.d_n = DnSetting::Fixed(12);
        c.mtry = Some(3);
        c.task = TaskOverride::Classification;
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
        let partial: RunConfig = serde_json::from_str(r#"{"n_trees": 50, "d_n": 7}"#).unwrap();
        assert_eq!((partial.n_trees, partial.d_n), (50, DnSetting::Fixed(7)));
        assert!(serde_json::from_str::<RunConfig>(r#"{"trees": 50}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"d_n": "many"}"#).is_err());
    }

    #[test]
    fn run_config_checks() {
        assert!(RunConfig::default().check().is_ok());
        let bad = RunConfig { slice_counts: vec![1], ..RunConfig::default() };
        assert!(bad.check().is_err());
        let bad = RunConfig { reps: 0, ..RunConfig::default() };
        assert!(bad.check().is_err());
    }
}
