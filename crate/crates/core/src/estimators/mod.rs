//! Turning cosine samples into privacy numbers.
//!
//! - [`estimate_epsilon_final`]: fit a Gaussian to the observed canary
//!   cosines and compare it against the `N(0, 1/d)` null.
//! - [`estimate_epsilon_all_iterates`]: same, with the null fitted to the
//!   max-over-rounds cosines of canaries that never entered training.
//! - [`epsilon_lower_bound`]: a high-confidence lower bound from a
//!   thresholding attack.
//! - [`anderson_darling`]: Gaussianity diagnostic for the fitted samples.
//!
//! The estimates are not certified bounds: they are as good as the cosine
//! attack is strong.

mod lower_bound;
mod normality;

pub use lower_bound::{epsilon_lower_bound, jeffreys_upper_bound, AttackRates, EpsilonLowerBound, NullModel};
pub use normality::{anderson_darling, NormalityDiagnostic, AD_REJECT_15PCT, AD_REJECT_1PCT};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gaussian::{epsilon_for_delta, validate_delta};
use crate::samples::{fit_gaussian_moments, CosineSampleSet, FittedMoments, Label};
use crate::scalar::{count, Real};

/// Why an ε estimate is infinite, if it is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateStatus {
    Finite,
    /// A fitted standard deviation is zero.
    DegenerateFit,
    /// No ε up to the line-search cap satisfies the target δ.
    Saturated,
}

/// An ε estimate together with the two Gaussians it compares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEstimate<T> {
    pub epsilon: T,
    pub status: EstimateStatus,
    pub null: FittedMoments<T>,
    pub alternative: FittedMoments<T>,
}

impl<T: Real> EpsilonEstimate<T> {
    pub fn is_finite(&self) -> bool {
        self.status == EstimateStatus::Finite
    }
}

fn estimate_between<T: Real>(null: FittedMoments<T>, alternative: FittedMoments<T>, delta: T) -> Result<EpsilonEstimate<T>> {
    let (Some(p0), Some(p1)) = (null.hypothesis(), alternative.hypothesis()) else {
        return Ok(EpsilonEstimate { epsilon: T::infinity(), status: EstimateStatus::DegenerateFit, null, alternative });
    };
    let epsilon = epsilon_for_delta(&p0, &p1, delta)?;
    let status = if epsilon.is_finite() { EstimateStatus::Finite } else { EstimateStatus::Saturated };
    Ok(EpsilonEstimate { epsilon, status, null, alternative })
}

/// ε from observed canary/final-model cosines against the `N(0, 1/d)` null.
pub fn estimate_epsilon_final<T: Real>(samples: &CosineSampleSet<T>, dim: usize, delta: T) -> Result<EpsilonEstimate<T>> {
    validate_delta(delta)?;
    if samples.dim() != dim {
        return Err(invalid(format!("samples are for dim {}, asked for dim {dim}", samples.dim())));
    }
    let alternative = fit_gaussian_moments(samples)?;
    let null = FittedMoments { mean: T::zero(), std: count::<T>(dim).sqrt().recip() };
    estimate_between(null, alternative, delta)
}

/// ε between the fitted max-over-rounds cosines of unobserved (null) and
/// observed (alternative) canaries.
pub fn estimate_epsilon_all_iterates<T: Real>(
    observed_max: &CosineSampleSet<T>,
    unobserved_max: &CosineSampleSet<T>,
    delta: T,
) -> Result<EpsilonEstimate<T>> {
    validate_delta(delta)?;
    if observed_max.dim() != unobserved_max.dim() {
        return Err(invalid("observed and unobserved samples come from different dimensions"));
    }
    if observed_max.label() != Label::Observed || unobserved_max.label() != Label::Unobserved {
        return Err(invalid("expected one observed and one unobserved sample set"));
    }
    let alternative = fit_gaussian_moments(observed_max)?;
    let null = fit_gaussian_moments(unobserved_max)?;
    estimate_between(null, alternative, delta)
}
