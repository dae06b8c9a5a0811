//! Dataset representation and response taxonomy.

use serde::{Deserialize, Serialize};

use crate::error::{FkrfeError, Result};

/// The response vector, either real-valued or a categorical label per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Response {
    Continuous { values: Vec<f64> },
    Categorical { labels: Vec<usize>, n_levels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

impl Response {
    pub fn len(&self) -> usize {
        match self {
            Response::Continuous { values } => values.len(),
            Response::Categorical { labels, .. } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> Task {
        match self {
            Response::Continuous { .. } => Task::Regression,
            Response::Categorical { .. } => Task::Classification,
        }
    }

    /// Response value of row `i` as a float (class index for categorical).
    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        match self {
            Response::Continuous { values } => values[i],
            Response::Categorical { labels, .. } => labels[i] as f64,
        }
    }

    pub fn n_levels(&self) -> Option<usize> {
        match self {
            Response::Continuous { .. } => None,
            Response::Categorical { n_levels, .. } => Some(*n_levels),
        }
    }

    /// Reinterpret the response for a different task.
    ///
    /// Continuous → categorical maps distinct values to levels in ascending
    /// value order; categorical → continuous uses the level index as the value.
    pub fn into_task(self, task: Task) -> Response {
        match (self, task) {
            (r @ Response::Continuous { .. }, Task::Regression) => r,
            (r @ Response::Categorical { .. }, Task::Classification) => r,
            (Response::Categorical { labels, .. }, Task::Regression) => Response::Continuous {
                values: labels.iter().map(|&l| l as f64).collect(),
            },
            (Response::Continuous { values }, Task::Classification) => {
                let mut distinct = values.clone();
                distinct.sort_by(f64::total_cmp);
                distinct.dedup();
                let labels = values
                    .iter()
                    .map(|v| distinct.partition_point(|d| d < v))
                    .collect();
                Response::Categorical {
                    labels,
                    n_levels: distinct.len(),
                }
            }
        }
    }
}

/// An `n × p` predictor matrix with its response.
///
/// Columns are stored contiguously; every consumer in this crate walks one
/// feature at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    n: usize,
    p: usize,
    columns: Vec<Vec<f64>>,
    pub y: Response,
    pub feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Build from column vectors and validate.
    pub fn from_columns(
        columns: Vec<Vec<f64>>,
        y: Response,
        feature_names: Option<Vec<String>>,
    ) -> Result<Dataset> {
        let n = y.len();
        let p = columns.len();
        for (j, c) in columns.iter().enumerate() {
            if c.len() != n {
                return Err(FkrfeError::LengthMismatch(format!(
                    "column {j} has {} rows, response has {n}",
                    c.len()
                )));
            }
        }
        validate(Dataset {
            n,
            p,
            columns,
            y,
            feature_names,
        })
    }

    /// Build from row-major rows and validate.
    pub fn from_rows(
        rows: &[Vec<f64>],
        y: Response,
        feature_names: Option<Vec<String>>,
    ) -> Result<Dataset> {
        let p = rows.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::with_capacity(rows.len()); p];
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(FkrfeError::LengthMismatch(format!(
                    "row {i} has {} values, expected {p}",
                    r.len()
                )));
            }
            for (c, &v) in columns.iter_mut().zip(r) {
                c.push(v);
            }
        }
        Dataset::from_columns(columns, y, feature_names)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    pub fn task(&self) -> Task {
        self.y.task()
    }

    pub fn feature_name(&self, j: usize) -> String {
        match &self.feature_names {
            Some(names) => names[j].clone(),
            None => format!("X{}", j + 1),
        }
    }

    /// Rows `rows` (in that order) as a new dataset. Categorical levels are
    /// kept, so the subset may violate the every-level-present invariant and
    /// is returned unvalidated on that point only.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&i| c[i]).collect())
            .collect();
        let y = match &self.y {
            Response::Continuous { values } => Response::Continuous {
                values: rows.iter().map(|&i| values[i]).collect(),
            },
            Response::Categorical { labels, n_levels } => Response::Categorical {
                labels: rows.iter().map(|&i| labels[i]).collect(),
                n_levels: *n_levels,
            },
        };
        Dataset {
            n: rows.len(),
            p: self.p,
            columns,
            y,
            feature_names: self.feature_names.clone(),
        }
    }

    /// Append extra predictor columns; returns the indices they received.
    pub fn with_extra_columns(
        &self,
        extra: Vec<Vec<f64>>,
        names: Vec<String>,
    ) -> Result<(Dataset, Vec<usize>)> {
        let start = self.p;
        let mut columns = self.columns.clone();
        let added = extra.len();
        columns.extend(extra);
        let feature_names = self.feature_names.clone().map(|mut f| {
            f.extend(names);
            f
        });
        let ds = Dataset::from_columns(columns, self.y.clone(), feature_names)?;
        Ok((ds, (start..start + added).collect()))
    }

    pub fn with_task(self, task: Task) -> Result<Dataset> {
        let Dataset {
            columns,
            y,
            feature_names,
            ..
        } = self;
        Dataset::from_columns(columns, y.into_task(task), feature_names)
    }
}

/// Check every dataset invariant, returning the dataset unchanged on success.
pub fn validate(ds: Dataset) -> Result<Dataset> {
    if ds.n < 2 {
        return Err(FkrfeError::TooFewRows(ds.n));
    }
    if ds.p == 0 {
        return Err(FkrfeError::NoFeatures);
    }
    if ds.columns.len() != ds.p {
        return Err(FkrfeError::LengthMismatch(format!(
            "{} columns, p = {}",
            ds.columns.len(),
            ds.p
        )));
    }
    if ds.y.len() != ds.n {
        return Err(FkrfeError::LengthMismatch(format!(
            "response has {} values, expected {}",
            ds.y.len(),
            ds.n
        )));
    }
    if let Some(names) = &ds.feature_names {
        if names.len() != ds.p {
            return Err(FkrfeError::LengthMismatch(format!(
                "{} feature names for {} features",
                names.len(),
                ds.p
            )));
        }
    }
    for (j, c) in ds.columns.iter().enumerate() {
        if c.len() != ds.n {
            return Err(FkrfeError::LengthMismatch(format!(
                "column {j} has {} rows, expected {}",
                c.len(),
                ds.n
            )));
        }
    }
    // report the first offending cell in row-major order
    for i in 0..ds.n {
        for j in 0..ds.p {
            if !ds.columns[j][i].is_finite() {
                return Err(FkrfeError::NonFiniteValue { row: i, col: j });
            }
        }
    }
    match &ds.y {
        Response::Continuous { values } => {
            if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                return Err(FkrfeError::NonFiniteValue { row: i, col: ds.p });
            }
        }
        Response::Categorical { labels, n_levels } => {
            if *n_levels < 2 {
                return Err(FkrfeError::ConfigInvalid(format!(
                    "categorical response needs at least 2 levels, got {n_levels}"
                )));
            }
            let mut seen = vec![false; *n_levels];
            for &l in labels {
                if l >= *n_levels {
                    return Err(FkrfeError::LengthMismatch(format!(
                        "label {l} out of range for {n_levels} levels"
                    )));
                }
                seen[l] = true;
            }
            if let Some(l) = seen.iter().position(|s| !s) {
                return Err(FkrfeError::EmptyLevel(l));
            }
        }
    }
    Ok(ds)
}

/// A strictly increasing set of feature indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActiveSet(Vec<usize>);

impl ActiveSet {
    /// Sorts and deduplicates.
    pub fn new(mut indices: Vec<usize>) -> ActiveSet {
        indices.sort_unstable();
        indices.dedup();
        ActiveSet(indices)
    }

    pub fn all(p: usize) -> ActiveSet {
        ActiveSet((0..p).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn without(&self, j: usize) -> ActiveSet {
        ActiveSet(self.0.iter().copied().filter(|&k| k != j).collect())
    }

    pub fn is_subset_of(&self, other: &ActiveSet) -> bool {
        self.0.iter().all(|&j| other.contains(j))
    }

    pub fn intersection_len(&self, other: &ActiveSet) -> usize {
        self.0.iter().filter(|&&j| other.contains(j)).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<usize> for ActiveSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        ActiveSet::new(iter.into_iter().collect())
    }
}
