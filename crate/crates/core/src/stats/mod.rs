//! Statistical kernels: location and dispersion, correlation, first
//! principal component, Moran's I, Z-scores and Fisher-Jenks breaks.
//!
//! Standard deviations use the sample (n - 1) convention throughout.

mod correlation;
mod jenks;
mod moran;
mod pca;

use thiserror::Error;

pub use correlation::{average_ranks, pearson, spearman};
pub use jenks::{classify, jenks_breaks};
pub use moran::morans_i;
pub use pca::{pca_first_component, PcaResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("empty input")]
    Empty,
    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("{0} has zero variance")]
    ZeroVariance(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("spatial weights have no links (S0 = 0)")]
    NoLinks,
    #[error("standard deviation must be positive, got {0}")]
    NonPositiveSd(f64),
    #[error("eigen solver did not converge after {0} sweeps")]
    NonConvergence(usize),
    #[error("class count must be at least 1")]
    ZeroClasses,
    #[error("{classes} classes requested but only {distinct} distinct values")]
    TooFewDistinct { classes: usize, distinct: usize },
}

/// A named column aligned with a city's block-group order.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableVector {
    name: String,
    values: Vec<f64>,
}

impl VariableVector {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self, StatsError> {
        let name = name.into();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(name));
        }
        Ok(VariableVector { name, values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl AsRef<[f64]> for VariableVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

pub fn mean(xs: &[f64]) -> Result<f64, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Middle element of the sorted values; mean of the two middle elements for
/// even lengths.
pub fn median(xs: &[f64]) -> Result<f64, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    })
}

/// Sample variance (divisor n - 1), two-pass.
pub fn variance(xs: &[f64]) -> Result<f64, StatsError> {
    if xs.len() < 2 {
        return Err(StatsError::TooFew { needed: 2, got: xs.len() });
    }
    let m = mean(xs)?;
    Ok(xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64)
}

/// Sample standard deviation (divisor n - 1).
///
/// ```
/// use atlas_core::stats::std_dev;
/// assert_eq!(std_dev(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
/// assert!((std_dev(&[0.0, 2.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
/// ```
pub fn std_dev(xs: &[f64]) -> Result<f64, StatsError> {
    variance(xs).map(f64::sqrt)
}

/// `(sel_mean - city_mean) / city_sd`.
pub fn z_score(sel_mean: f64, city_mean: f64, city_sd: f64) -> Result<f64, StatsError> {
    if !(city_sd > 0.0) {
        return Err(StatsError::NonPositiveSd(city_sd));
    }
    Ok((sel_mean - city_mean) / city_sd)
}
