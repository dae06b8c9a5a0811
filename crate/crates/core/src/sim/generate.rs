//! Benchmark data generators.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{ActiveSet, Dataset, Response};
use crate::error::{FkrfeError, Result};
use crate::seed::SeedSpec;

/// One of the five simulation designs, at a given size.
///
/// | id | response | support |
/// |----|----------|---------|
/// | 1 | `exp(X1 + … + X5) + e` | 0..5 |
/// | 2 | `(2.8 X1 - 2.8 X2 + e)^9` | 0, 1 |
/// | 3 | `(X1 + X2 + 1)^3 + e` | 0, 1 |
/// | 4 | `2(X1 + X2) + 2 tan(pi X3 / 2) + 5 X4 + e` | 0..4 |
/// | 5 | `Poisson(exp(0.8 X1 - 0.8 X2))`, `X ~ t_2` i.i.d. | 0, 1 |
///
/// Designs 1–4 draw rows from `N(0, S)` with `S_ij = 0.5^|i-j|`; `e ~ N(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleSpec {
    pub example_id: u8,
    pub n: usize,
    pub p: usize,
}

impl ExampleSpec {
    pub fn new(example_id: u8, n: usize, p: usize) -> Result<ExampleSpec> {
        let spec = ExampleSpec { example_id, n, p };
        let q = match example_id {
            1 => 5,
            2 | 3 | 5 => 2,
            4 => 4,
            _ => {
                return Err(FkrfeError::ConfigInvalid(format!(
                    "example id must be 1..=5, got {example_id}"
                )))
            }
        };
        if p < q {
            return Err(FkrfeError::ConfigInvalid(format!(
                "example {example_id} needs p >= {q}, got {p}"
            )));
        }
        if n < 2 {
            return Err(FkrfeError::TooFewRows(n));
        }
        Ok(spec)
    }

    pub fn true_support(&self) -> ActiveSet {
        match self.example_id {
            1 => ActiveSet::all(5),
            4 => ActiveSet::all(4),
            _ => ActiveSet::all(2),
        }
    }
}

/// `n` rows of `N(0, S)` with `S_ij = rho^|i-j|`, returned as `p` columns.
///
/// Uses the stationary AR(1) recursion `X_1 = Z_1`,
/// `X_j = rho X_{j-1} + sqrt(1 - rho^2) Z_j`, which has exactly this
/// covariance. Rows are drawn one after another.
pub fn gen_ar_gaussian<R: Rng + ?Sized>(n: usize, p: usize, rho: f64, rng: &mut R) -> Vec<Vec<f64>> {
    let innov = (1.0 - rho * rho).sqrt();
    let mut cols = vec![Vec::with_capacity(n); p];
    for _ in 0..n {
        let mut prev = 0.0;
        for (j, col) in cols.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            let v = if j == 0 { z } else { rho * prev + innov * z };
            col.push(v);
            prev = v;
        }
    }
    cols
}

/// Student t with 2 degrees of freedom: `Z / sqrt(V / 2)` with `V ~ chi2(2)`,
/// and `chi2(2) / 2` is a unit exponential.
pub fn sample_t2<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let e: f64 = rng.sample(Exp1);
    z / e.sqrt()
}

/// Noise-free response of designs 1–4 for the leading features `x`, plus `eps`.
pub fn example_response(example_id: u8, x: &[f64], eps: f64) -> f64 {
    match example_id {
        1 => x[..5].iter().sum::<f64>().exp() + eps,
        2 => (2.8 * x[0] - 2.8 * x[1] + eps).powi(9),
        3 => (x[0] + x[1] + 1.0).powi(3) + eps,
        4 => {
            2.0 * (x[0] + x[1])
                + 2.0 * (std::f64::consts::FRAC_PI_2 * x[2]).tan()
                + 5.0 * x[3]
                + eps
        }
        _ => panic!("example {example_id} has no additive-noise response"),
    }
}

/// Poisson mean of design 5.
pub fn poisson_mean(x1: f64, x2: f64) -> f64 {
    (0.8 * x1 - 0.8 * x2).exp()
}

/// Poisson draw. Means beyond the range `rand_distr` supports (about 1.8e19)
/// fall back to a rounded normal, which is exact to double precision there.
pub fn sample_poisson<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> f64 {
    if mu <= 0.0 {
        return 0.0;
    }
    match Poisson::new(mu) {
        Ok(d) => d.sample(rng),
        Err(_) => {
            let z: f64 = rng.sample(StandardNormal);
            (mu + mu.sqrt() * z).round().max(0.0)
        }
    }
}

/// Draw one dataset for `spec` and return it with the true support.
pub fn gen_example(spec: &ExampleSpec, seed: SeedSpec) -> Result<(Dataset, ActiveSet)> {
    let spec = ExampleSpec::new(spec.example_id, spec.n, spec.p)?;
    let mut rng = seed.substream("example", spec.example_id as u64);
    let (n, p) = (spec.n, spec.p);
    let (cols, y) = if spec.example_id == 5 {
        let mut cols = vec![Vec::with_capacity(n); p];
        for _ in 0..n {
            for col in cols.iter_mut() {
                col.push(sample_t2(&mut rng));
            }
        }
        let y = (0..n)
            .map(|i| sample_poisson(poisson_mean(cols[0][i], cols[1][i]), &mut rng))
            .collect();
        (cols, y)
    } else {
        let cols = gen_ar_gaussian(n, p, 0.5, &mut rng);
        let k = spec.true_support().len().max(2);
        let y = (0..n)
            .map(|i| {
                let lead: Vec<f64> = cols[..k].iter().map(|c| c[i]).collect();
                let eps: f64 = rng.sample(StandardNormal);
                example_response(spec.example_id, &lead, eps)
            })
            .collect();
        (cols, y)
    };
    let ds = Dataset::from_columns(cols, Response::Continuous { values: y }, None)?;
    Ok((ds, spec.true_support()))
}
