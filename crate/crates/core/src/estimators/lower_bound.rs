//! High-confidence ε lower bound from a thresholding membership attack.
//!
//! The attack predicts "member" when a canary's cosine is at least `a`. For
//! a threshold, the false negative rate is bounded above with a one-sided
//! Jeffreys interval on the observed binomial count; the false positive rate
//! comes straight from the null CDF when the null is known in closed form,
//! or from another Jeffreys bound when it is only known through unobserved
//! canaries. Any (ε, δ)-DP mechanism must satisfy
//!
//! ```text
//! ε >= ln((1 − δ − FPR) / FNR)   and   ε >= ln((1 − δ − FNR) / FPR)
//! ```
//!
//! and the bound is the best value over all thresholds, floored at zero.
//! Scanning many thresholds makes the bound slightly optimistic.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gaussian::validate_delta;
use crate::samples::CosineSampleSet;
use crate::scalar::{lit, Real};
use crate::special::beta_quantile;
use crate::sphere::CosineNull;

/// Where the false positive rate comes from.
#[derive(Debug, Clone, Copy)]
pub enum NullModel<'a, T> {
    /// Closed-form cosine null; FPR is exact.
    Analytic(CosineNull),
    /// Cosines of canaries that never entered training; FPR is bounded.
    Empirical(&'a CosineSampleSet<T>),
}

/// Error rates of the attack at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackRates<T> {
    /// Exact under an analytic null, an upper confidence bound otherwise.
    pub fpr: T,
    /// One-sided upper confidence bound on the false negative rate.
    pub fnr_upper: T,
    pub threshold: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonLowerBound<T> {
    pub value: T,
    pub confidence: T,
    pub threshold_used: T,
    pub rates: AttackRates<T>,
}

/// Upper end of the one-sided Jeffreys interval for a binomial proportion:
/// the `confidence` quantile of `Beta(failures + ½, n − failures + ½)`.
pub fn jeffreys_upper_bound<T: Real>(failures: usize, n: usize, confidence: T) -> Result<T> {
    if n == 0 {
        return Err(invalid("jeffreys bound needs n >= 1"));
    }
    if failures > n {
        return Err(invalid(format!("failures ({failures}) exceed trials ({n})")));
    }
    if !(confidence > T::zero() && confidence < T::one()) {
        return Err(invalid(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    if failures == n {
        return Ok(T::one());
    }
    let half = lit::<T>(0.5);
    let a = T::of(failures as f64) + half;
    let b = T::of((n - failures) as f64) + half;
    Ok(beta_quantile(a, b, confidence).min(T::one()))
}

/// Caches Jeffreys bounds per failure count for a fixed `n`.
struct JeffreysTable<T> {
    n: usize,
    confidence: T,
    cache: Vec<Option<T>>,
}

impl<T: Real> JeffreysTable<T> {
    fn new(n: usize, confidence: T) -> Self {
        Self { n, confidence, cache: vec![None; n + 1] }
    }

    fn get(&mut self, failures: usize) -> T {
        if let Some(v) = self.cache[failures] {
            return v;
        }
        let v = jeffreys_upper_bound(failures, self.n, self.confidence).expect("arguments validated by caller");
        self.cache[failures] = Some(v);
        v
    }
}

fn ln_ratio<T: Real>(numerator: T, denominator: T) -> T {
    if numerator <= T::zero() || denominator.is_nan() {
        return T::neg_infinity();
    }
    if denominator <= T::zero() {
        return T::infinity();
    }
    (numerator / denominator).ln()
}

/// Sorted copy, NaN-free by construction of [`CosineSampleSet`].
fn sorted<T: Real>(values: &[T]) -> Vec<T> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("cosines are never NaN"));
    v
}

/// Number of entries strictly below `a` in a sorted slice.
fn count_below<T: Real>(sorted: &[T], a: T) -> usize {
    sorted.partition_point(|&v| v < a)
}

/// ε lower bound at the given confidence from the observed canary cosines.
///
/// Candidate thresholds are the distinct sample values (observed, plus
/// unobserved for an empirical null) and `+∞`. Placing the threshold exactly
/// on a sample is optimal among thresholds with the same counts since the
/// FPR only shrinks as the threshold rises.
pub fn epsilon_lower_bound<T: Real>(
    observed: &CosineSampleSet<T>,
    null_model: &NullModel<'_, T>,
    delta: T,
    confidence: T,
) -> Result<EpsilonLowerBound<T>> {
    validate_delta(delta)?;
    if !(confidence > T::zero() && confidence < T::one()) {
        return Err(invalid(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    if observed.is_empty() {
        return Err(invalid("lower bound needs at least one observed cosine"));
    }
    let obs = sorted(observed.values());
    let n = obs.len();
    let mut fnr_table = JeffreysTable::new(n, confidence);

    let (mut candidates, unobserved) = match null_model {
        NullModel::Analytic(null) => {
            if null.dim() != observed.dim() {
                return Err(invalid("null model dimension differs from the samples"));
            }
            (obs.clone(), None)
        }
        NullModel::Empirical(set) => {
            if set.is_empty() {
                return Err(invalid("empirical null needs at least one unobserved cosine"));
            }
            let unobs = sorted(set.values());
            let mut all = obs.clone();
            all.extend_from_slice(&unobs);
            let all = sorted(&all);
            (all, Some(unobs))
        }
    };
    candidates.dedup();
    candidates.push(T::infinity());
    let mut fpr_table = unobserved.as_ref().map(|u| JeffreysTable::new(u.len(), confidence));

    let one_minus_delta = T::one() - delta;
    let mut best: Option<(T, AttackRates<T>)> = None;
    for &a in &candidates {
        let failures = count_below(&obs, a);
        let fnr_upper = fnr_table.get(failures);
        let fpr = match (null_model, &unobserved, fpr_table.as_mut()) {
            (NullModel::Analytic(null), _, _) => null.sf(a),
            (NullModel::Empirical(_), Some(unobs), Some(table)) => {
                let false_alarms = unobs.len() - count_below(unobs, a);
                table.get(false_alarms)
            }
            _ => unreachable!("empirical null always carries its samples"),
        };
        let mut value = ln_ratio(one_minus_delta - fpr, fnr_upper);
        if matches!(null_model, NullModel::Empirical(_)) {
            // Symmetric branch; only meaningful when both rates carry
            // finite-sample uncertainty.
            value = value.max(ln_ratio(one_minus_delta - fnr_upper, fpr));
        }
        let rates = AttackRates { fpr, fnr_upper, threshold: a };
        let better = match &best {
            None => a.is_finite(),
            Some((v, _)) => a.is_finite() && value > *v,
        };
        if better {
            best = Some((value, rates));
        }
    }
    let (value, rates) = best.expect("at least one finite candidate exists");
    Ok(EpsilonLowerBound { value: value.max(T::zero()), confidence, threshold_used: rates.threshold, rates })
}
