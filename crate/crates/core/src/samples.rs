//! Labelled sets of canary cosine statistics and their Gaussian fit.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::{count, Real};

/// Whether a canary's update entered the aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Observed,
    Unobserved,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Observed => "observed",
            Self::Unobserved => "unobserved",
        }
    }
}

impl std::str::FromStr for Label {
    type Err = crate::error::AuditError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "observed" => Ok(Self::Observed),
            "unobserved" => Ok(Self::Unobserved),
            other => Err(invalid(format!("unknown canary label {other:?}"))),
        }
    }
}

/// Cosines between canaries and a released vector, all in `[−1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineSampleSet<T> {
    dim: usize,
    label: Label,
    values: Vec<T>,
}

impl<T: Real> CosineSampleSet<T> {
    pub fn new(dim: usize, label: Label, values: Vec<T>) -> Result<Self> {
        if dim < 2 {
            return Err(invalid(format!("cosine samples need dim >= 2, got {dim}")));
        }
        if let Some(bad) = values.iter().find(|v| !(v.abs() <= T::one())) {
            return Err(invalid(format!("cosine {bad} is outside [-1, 1]")));
        }
        Ok(Self { dim, label, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// First two moments with `1/k` normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedMoments<T> {
    pub mean: T,
    /// Square root of the `1/k` central second moment. May be zero.
    pub std: T,
}

impl<T: Real> FittedMoments<T> {
    /// The fit as a Gaussian, or `None` when the spread is zero.
    pub fn hypothesis(&self) -> Option<crate::gaussian::GaussianHypothesis<T>> {
        crate::gaussian::GaussianHypothesis::new(self.mean, self.std).ok()
    }
}

/// Mean and `1/k`-normalized standard deviation of the samples.
///
/// The standard deviation is allowed to be zero, e.g. for constant inputs;
/// callers decide how to treat the degenerate fit.
pub fn fit_gaussian_moments<T: Real>(samples: &CosineSampleSet<T>) -> Result<FittedMoments<T>> {
    moments(samples.values())
}

pub(crate) fn moments<T: Real>(values: &[T]) -> Result<FittedMoments<T>> {
    if values.len() < 2 {
        return Err(invalid(format!("moment fit needs at least 2 samples, got {}", values.len())));
    }
    if values.iter().all(|&v| v == values[0]) {
        return Ok(FittedMoments { mean: values[0], std: T::zero() });
    }
    let k = count::<T>(values.len());
    let mean = values.iter().copied().sum::<T>() / k;
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / k;
    Ok(FittedMoments { mean, std: var.sqrt() })
}

/// Concatenates sample sets from independent runs, preserving run order.
pub fn pool_runs<T: Real>(sets: &[CosineSampleSet<T>]) -> Result<CosineSampleSet<T>> {
    let first = sets.first().ok_or_else(|| invalid("cannot pool an empty list of runs"))?;
    let mut values = Vec::with_capacity(sets.iter().map(|s| s.len()).sum());
    for (i, s) in sets.iter().enumerate() {
        if s.dim != first.dim || s.label != first.label {
            return Err(invalid(format!(
                "run {i} has (dim {}, {}) but run 0 has (dim {}, {})",
                s.dim,
                s.label.as_str(),
                first.dim,
                first.label.as_str()
            )));
        }
        values.extend_from_slice(&s.values);
    }
    Ok(CosineSampleSet { dim: first.dim, label: first.label, values })
}
