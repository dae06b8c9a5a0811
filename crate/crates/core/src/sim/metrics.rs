use serde::{Deserialize, Serialize};

use crate::data::ActiveSet;
use crate::error::{FkrfeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics {
    pub tpr: f64,
    pub tnr: f64,
    pub balanced_accuracy: f64,
    pub model_size: usize,
}

/// Selection quality of `selected` against `truth` over features `0..p`.
/// With no true negatives (`truth` covers every feature) TNR is 1.
pub fn selection_metrics(selected: &ActiveSet, truth: &ActiveSet, p: usize) -> Result<SelectionMetrics> {
    if truth.is_empty() {
        return Err(FkrfeError::EmptyTruth);
    }
    if let Some(j) = selected.iter().chain(truth.iter()).find(|&j| j >= p) {
        return Err(FkrfeError::ConfigInvalid(format!("feature {j} out of range for p = {p}")));
    }
    let tp = selected.intersection_len(truth);
    let fp = selected.len() - tp;
    let negatives = p - truth.len();
    let tpr = tp as f64 / truth.len() as f64;
    let tnr = if negatives == 0 {
        1.0
    } else {
        (negatives - fp) as f64 / negatives as f64
    };
    Ok(SelectionMetrics {
        tpr,
        tnr,
        balanced_accuracy: (tpr + tnr) / 2.0,
        model_size: selected.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub mse: f64,
    pub mae: f64,
    /// Mean of `|yhat - y| / |y|` in percent, over rows with `y != 0`.
    pub mape_percent: f64,
    /// Rows left out of MAPE because `y == 0`.
    pub mape_excluded: usize,
}

pub fn error_metrics(y_hat: &[f64], y: &[f64]) -> Result<ErrorMetrics> {
    if y_hat.len() != y.len() {
        return Err(FkrfeError::LengthMismatch(format!(
            "{} predictions for {} responses",
            y_hat.len(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(FkrfeError::EmptySampleSet);
    }
    let n = y.len() as f64;
    let mse = y_hat.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
    let mae = y_hat.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
    let nonzero: Vec<(f64, f64)> = y_hat
        .iter()
        .zip(y)
        .filter(|(_, b)| **b != 0.0)
        .map(|(a, b)| (*a, *b))
        .collect();
    if nonzero.is_empty() {
        return Err(FkrfeError::AllZeroResponse);
    }
    let mape = nonzero.iter().map(|(a, b)| ((a - b) / b).abs()).sum::<f64>()
        / nonzero.len() as f64
        * 100.0;
    Ok(ErrorMetrics {
        mse,
        mae,
        mape_percent: mape,
        mape_excluded: y.len() - nonzero.len(),
    })
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Sums in slice order; the standard deviation of one value is 0.
    pub fn of(values: &[f64]) -> MeanStd {
        let n = values.len();
        if n == 0 {
            return MeanStd { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        MeanStd { mean, std }
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let prec = f.precision().unwrap_or(3);
        write!(f, "{:.prec$} ({:.2})", self.mean, self.std)
    }
}
