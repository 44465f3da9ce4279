//! Exact (ε, δ) trade-off between two univariate Gaussians with arbitrary
//! means and variances.
//!
//! Writing the log density ratio of `P1 = N(μ1, σ1²)` against
//! `P2 = N(μ2, σ2²)` as a quadratic `a x² + b x + c`, the privacy loss
//! events `{Z1 > ε}` and `{−Z2 > ε}` are both the set where
//! `a x² + b x + (c − ε) > 0`. Their probabilities are Gaussian masses of at
//! most two intervals, evaluated here in the log domain. The smallest δ is
//! the larger of the two directional requirements
//!
//! ```text
//! Pr[Z1 > ε] − e^ε Pr[−Z2 > ε]   and   Pr[Z2 > ε] − e^ε Pr[−Z1 > ε]
//! ```
//!
//! and ε for a target δ comes from a bracketed bisection, since δ(ε) is
//! nonincreasing.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, AuditError, Result};
use crate::roots::{bisect, expand_upper, Bracket};
use crate::scalar::{lit, Real};
use crate::special::{ln_1m_exp, ln_add_exp, ln_normal_cdf, ln_normal_sf};

/// Default largest ε the line search will report before saturating.
pub const DEFAULT_EPSILON_CAP: f64 = 1e6;

/// A normal distribution modelling a test statistic under one hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianHypothesis<T> {
    pub mean: T,
    pub std: T,
}

impl<T: Real> GaussianHypothesis<T> {
    pub fn new(mean: T, std: T) -> Result<Self> {
        if !mean.is_finite() || !std.is_finite() || std <= T::zero() {
            return Err(invalid(format!("gaussian needs finite mean and std > 0, got N({mean}, {std}²)")));
        }
        Ok(Self { mean, std })
    }

    pub fn variance(&self) -> T {
        self.std * self.std
    }

    fn standardize(&self, x: T) -> T {
        (x - self.mean) / self.std
    }

    /// `ln Pr[X < x]`
    fn ln_cdf(&self, x: T) -> T {
        ln_normal_cdf(self.standardize(x))
    }

    /// `ln Pr[X > x]`, evaluated as `ln Pr[X' < μ]` for `X' ~ N(x, σ²)`.
    fn ln_sf(&self, x: T) -> T {
        ln_normal_sf(self.standardize(x))
    }

    /// `ln Pr[lo < X < hi]` for `lo < hi`.
    fn ln_interval(&self, lo: T, hi: T) -> T {
        // Work in whichever tail keeps both endpoints' masses small.
        if self.standardize(lo) > T::zero() {
            let (big, small) = (self.ln_sf(lo), self.ln_sf(hi));
            big + ln_1m_exp((small - big).min(T::zero()))
        } else {
            let (big, small) = (self.ln_cdf(hi), self.ln_cdf(lo));
            big + ln_1m_exp((small - big).min(T::zero()))
        }
    }
}

/// Coefficients of `ln p1(x) / p2(x) = a x² + b x + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRatioQuadratic<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Real> LogRatioQuadratic<T> {
    pub fn from_pair(p1: &GaussianHypothesis<T>, p2: &GaussianHypothesis<T>) -> Self {
        let half = lit::<T>(0.5);
        let (v1, v2) = (p1.variance(), p2.variance());
        let a = half * (v2.recip() - v1.recip());
        let b = p1.mean / v1 - p2.mean / v2;
        let z1 = p1.mean / p1.std;
        let z2 = p2.mean / p2.std;
        let c = half * (z2 * z2 - z1 * z1) + p2.std.ln() - p1.std.ln();
        Self { a, b, c }
    }

    pub fn eval(&self, x: T) -> T {
        (self.a * x + self.b) * x + self.c
    }

    fn negated(&self) -> Self {
        Self { a: -self.a, b: -self.b, c: -self.c }
    }

    /// `ln Pr[a X² + b X + (c − shift) > 0]` for `X ~ g`.
    fn ln_prob_positive(&self, shift: T, g: &GaussianHypothesis<T>) -> T {
        let (a, b, c) = (self.a, self.b, self.c - shift);
        let zero = T::zero();
        let certain = zero;
        let impossible = T::neg_infinity();

        if a == zero {
            if b == zero {
                return if c > zero { certain } else { impossible };
            }
            let root = -c / b;
            return if b > zero { g.ln_sf(root) } else { g.ln_cdf(root) };
        }

        let disc = b * b - lit::<T>(4.0) * a * c;
        if disc <= zero {
            // R keeps the sign of `a` except at a single point at most.
            return if a > zero { certain } else { impossible };
        }
        // Cancellation-free roots.
        let sign_b = if b < zero { -T::one() } else { T::one() };
        let q = -lit::<T>(0.5) * (b + sign_b * disc.sqrt());
        let (r1, r2) = (q / a, c / q);
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        if a > zero {
            ln_add_exp(g.ln_cdf(lo), g.ln_sf(hi))
        } else {
            g.ln_interval(lo, hi)
        }
    }
}

/// An (ε, δ) pair. ε may be `+∞` to signal saturation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams<T> {
    pub epsilon: T,
    pub delta: T,
}

impl<T: Real> PrivacyParams<T> {
    pub fn new(epsilon: T, delta: T) -> Result<Self> {
        if epsilon.is_nan() || epsilon < T::zero() {
            return Err(invalid(format!("epsilon must be >= 0, got {epsilon}")));
        }
        validate_delta(delta)?;
        Ok(Self { epsilon, delta })
    }
}

pub(crate) fn validate_delta<T: Real>(delta: T) -> Result<()> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(invalid(format!("delta must lie strictly inside (0, 1), got {delta}")));
    }
    Ok(())
}

/// `Pr_first[R > 0] − e^ε Pr_second[R > 0]`, or 0 when that is negative.
fn directional_delta<T: Real>(
    q: &LogRatioQuadratic<T>,
    epsilon: T,
    first: &GaussianHypothesis<T>,
    second: &GaussianHypothesis<T>,
) -> T {
    let ln_first = q.ln_prob_positive(epsilon, first);
    if ln_first == T::neg_infinity() {
        return T::zero();
    }
    let ln_second = q.ln_prob_positive(epsilon, second);
    let gap = epsilon + ln_second - ln_first;
    if gap.is_nan() || gap >= T::zero() {
        return T::zero();
    }
    (ln_first + ln_1m_exp(gap)).exp()
}

/// Smallest δ for which `P1` and `P2` are (ε, δ)-indistinguishable.
pub fn delta_for_epsilon<T: Real>(p1: &GaussianHypothesis<T>, p2: &GaussianHypothesis<T>, epsilon: T) -> Result<T> {
    GaussianHypothesis::new(p1.mean, p1.std)?;
    GaussianHypothesis::new(p2.mean, p2.std)?;
    if epsilon.is_nan() || epsilon < T::zero() {
        return Err(invalid(format!("epsilon must be >= 0, got {epsilon}")));
    }
    Ok(delta_unchecked(p1, p2, epsilon))
}

fn delta_unchecked<T: Real>(p1: &GaussianHypothesis<T>, p2: &GaussianHypothesis<T>, epsilon: T) -> T {
    let q = LogRatioQuadratic::from_pair(p1, p2);
    let forward = directional_delta(&q, epsilon, p1, p2);
    let backward = directional_delta(&q.negated(), epsilon, p2, p1);
    forward.max(backward)
}

/// Line search settings for [`epsilon_for_delta_with`].
#[derive(Debug, Clone, Copy)]
pub struct EpsilonSearch<T> {
    /// ε beyond which the search reports `+∞`.
    pub cap: T,
    /// Bisection steps after bracketing.
    pub max_bisections: usize,
}

impl<T: Real> Default for EpsilonSearch<T> {
    fn default() -> Self {
        Self { cap: lit(DEFAULT_EPSILON_CAP), max_bisections: 200 }
    }
}

/// Smallest ε ≥ 0 with `delta_for_epsilon(p1, p2, ε) <= delta`, or `+∞`
/// when no ε up to the default cap suffices.
pub fn epsilon_for_delta<T: Real>(p1: &GaussianHypothesis<T>, p2: &GaussianHypothesis<T>, delta: T) -> Result<T> {
    epsilon_for_delta_with(p1, p2, delta, EpsilonSearch::default())
}

pub fn epsilon_for_delta_with<T: Real>(
    p1: &GaussianHypothesis<T>,
    p2: &GaussianHypothesis<T>,
    delta: T,
    search: EpsilonSearch<T>,
) -> Result<T> {
    validate_delta(delta)?;
    GaussianHypothesis::new(p1.mean, p1.std)?;
    GaussianHypothesis::new(p2.mean, p2.std)?;
    let feasible = |eps: T| delta_unchecked(p1, p2, eps) <= delta;
    if feasible(T::zero()) {
        return Ok(T::zero());
    }
    match expand_upper(T::zero(), T::one(), search.cap, feasible) {
        Bracket::Exhausted => Ok(T::infinity()),
        Bracket::Found { lo, hi } => Ok(bisect(lo, hi, search.max_bisections, feasible).1),
    }
}

/// Noise scale σ for which the unit-sensitivity Gaussian mechanism,
/// `N(0, σ²)` against `N(1, σ²)`, has exactly the given ε at δ.
pub fn calibrate_gaussian_sigma<T: Real>(epsilon: T, delta: T) -> Result<T> {
    if !(epsilon > T::zero()) || !epsilon.is_finite() {
        return Err(invalid(format!("target epsilon must be positive and finite, got {epsilon}")));
    }
    validate_delta(delta)?;
    let eps_at = |ln_sigma: T| -> T {
        let sigma = ln_sigma.exp();
        let p1 = GaussianHypothesis { mean: T::zero(), std: sigma };
        let p2 = GaussianHypothesis { mean: T::one(), std: sigma };
        epsilon_for_delta(&p1, &p2, delta).unwrap_or(T::infinity())
    };
    // ε(σ) decreases in σ; search over ln σ.
    let above = |ln_sigma: T| eps_at(ln_sigma) <= epsilon;
    let no_convergence = || AuditError::NoConvergence(format!("cannot calibrate sigma for epsilon = {epsilon}, delta = {delta}"));
    let mut hi = T::zero();
    let mut steps = 0;
    while !above(hi) {
        hi = hi + T::one();
        steps += 1;
        if steps > 60 {
            return Err(no_convergence());
        }
    }
    let mut lo = hi - T::one();
    steps = 0;
    while above(lo) {
        lo = lo - T::one();
        steps += 1;
        if steps > 60 {
            return Err(no_convergence());
        }
    }
    let (_, hi) = bisect(lo, hi, 200, above);
    if (eps_at(hi) - epsilon).abs() > lit(1e-4) {
        return Err(no_convergence());
    }
    Ok(hi.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn g(mean: f64, std: f64) -> GaussianHypothesis<f64> {
        GaussianHypothesis::new(mean, std).unwrap()
    }

    #[test]
    fn quadratic_matches_log_density_ratio() {
        let (p1, p2) = (g(0.3, 0.7), g(-1.1, 2.2));
        let q = LogRatioQuadratic::from_pair(&p1, &p2);
        let ln_pdf = |p: &GaussianHypothesis<f64>, x: f64| {
            -0.5 * ((x - p.mean) / p.std).powi(2) - p.std.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
        };
        for &x in &[-3.0, -0.2, 0.0, 1.7, 4.0] {
            assert_relative_eq!(q.eval(x), ln_pdf(&p1, x) - ln_pdf(&p2, x), max_relative = 1e-12);
        }
    }

    #[test]
    fn identical_distributions_have_zero_delta_and_epsilon() {
        let p = g(0.4, 1.3);
        assert_eq!(delta_for_epsilon(&p, &p, 0.0).unwrap(), 0.0);
        assert_eq!(epsilon_for_delta(&p, &p, 1e-6).unwrap(), 0.0);
        assert_eq!(epsilon_for_delta(&p, &p, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn unit_shift_delta_matches_closed_form() {
        // Φ(1/2 − 1) − e Φ(−1/2 − 1)
        let expected = 0.308_537_538_725_986_9 - std::f64::consts::E * 0.066_807_201_268_858_06;
        let got = delta_for_epsilon(&g(0.0, 1.0), &g(1.0, 1.0), 1.0).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-12);
        assert!((got - 0.12693).abs() < 1e-5);
    }

    #[test]
    fn sign_cases_of_the_quadratic() {
        let p = g(0.0, 1.0);
        // a > 0, negative discriminant: the event is certain.
        let q = LogRatioQuadratic { a: 1.0, b: 0.0, c: 1.0 };
        assert_eq!(q.ln_prob_positive(0.0, &p), 0.0);
        // a < 0, negative discriminant: impossible.
        let q = LogRatioQuadratic { a: -1.0, b: 0.0, c: -1.0 };
        assert_eq!(q.ln_prob_positive(0.0, &p), f64::NEG_INFINITY);
        // a > 0, two roots ±1: both outer tails.
        let q = LogRatioQuadratic { a: 1.0, b: 0.0, c: -1.0 };
        assert_relative_eq!(q.ln_prob_positive(0.0, &p).exp(), 2.0 * 0.158_655_253_931_457_05, max_relative = 1e-12);
        // a < 0, two roots ±1: the middle interval.
        let q = LogRatioQuadratic { a: -1.0, b: 0.0, c: 1.0 };
        assert_relative_eq!(q.ln_prob_positive(0.0, &p).exp(), 1.0 - 2.0 * 0.158_655_253_931_457_05, max_relative = 1e-12);
        // linear, both slopes
        let q = LogRatioQuadratic { a: 0.0, b: 2.0, c: -2.0 };
        assert_relative_eq!(q.ln_prob_positive(0.0, &p).exp(), 0.158_655_253_931_457_05, max_relative = 1e-12);
        let q = LogRatioQuadratic { a: 0.0, b: -2.0, c: 2.0 };
        assert_relative_eq!(q.ln_prob_positive(0.0, &p).exp(), 1.0 - 0.158_655_253_931_457_05, max_relative = 1e-12);
        // constant
        let q = LogRatioQuadratic { a: 0.0, b: 0.0, c: 0.5 };
        assert_eq!(q.ln_prob_positive(0.0, &p), 0.0);
        assert_eq!(q.ln_prob_positive(1.0, &p), f64::NEG_INFINITY);
        // middle interval deep in the upper tail stays finite in log space
        let q = LogRatioQuadratic { a: -1.0, b: 80.0, c: -1599.0 };
        let ln = q.ln_prob_positive(0.0, &p);
        assert!(ln.is_finite() && ln < -700.0);
    }

    #[test]
    fn table_rows_for_unit_sensitivity() {
        let eps = |s: f64| epsilon_for_delta(&g(0.0, s), &g(1.0, s), 1e-6).unwrap();
        assert!((eps(0.541) - 10.0).abs() < 0.05);
        assert!((eps(1.54) - 3.0).abs() < 0.05);
        assert!((eps(4.22) - 1.0).abs() < 0.01);
    }

    #[test]
    fn calibration_inverts_epsilon() {
        let s = calibrate_gaussian_sigma(10.0f64, 1e-6).unwrap();
        assert!((s - 0.541).abs() < 5e-4, "{s}");
        let s = calibrate_gaussian_sigma(3.0f64, 1e-6).unwrap();
        assert!((s - 1.54).abs() < 5e-3, "{s}");
        let s = calibrate_gaussian_sigma(1.0f64, 1e-6).unwrap();
        assert!((s - 4.22).abs() < 5e-3, "{s}");
        let back = epsilon_for_delta(&g(0.0, s), &g(1.0, s), 1e-6).unwrap();
        assert!((back - 1.0).abs() < 1e-4);
    }

    #[test]
    fn saturation_reports_infinity() {
        // Separation of 1e4 standard deviations: ε ≈ 1e8 / 2, beyond the cap.
        let got = epsilon_for_delta(&g(0.0, 1e-4), &g(1.0, 1e-4), 1e-6).unwrap();
        assert!(got.is_infinite());
        let search = EpsilonSearch { cap: 1e9, ..Default::default() };
        let got = epsilon_for_delta_with(&g(0.0, 1e-4), &g(1.0, 1e-4), 1e-6, search).unwrap();
        assert!(got.is_finite() && got > 4e7 && got < 6e7, "{got}");
        // 1e3 standard deviations still resolves under the default cap.
        let got = epsilon_for_delta(&g(0.0, 1e-3), &g(1.0, 1e-3), 1e-6).unwrap();
        assert!(got.is_finite() && got > 5e5, "{got}");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(GaussianHypothesis::new(0.0, 0.0).is_err());
        assert!(GaussianHypothesis::new(0.0, -1.0).is_err());
        assert!(GaussianHypothesis::new(f64::NAN, 1.0).is_err());
        let p = g(0.0, 1.0);
        assert!(epsilon_for_delta(&p, &p, 0.0).is_err());
        assert!(epsilon_for_delta(&p, &p, 1.0).is_err());
        assert!(delta_for_epsilon(&p, &p, -1.0).is_err());
        let bad = GaussianHypothesis { mean: 0.0, std: 0.0 };
        assert!(delta_for_epsilon(&p, &bad, 1.0).is_err());
        assert!(calibrate_gaussian_sigma(0.0f64, 1e-6).is_err());
        assert!(PrivacyParams::new(1.0, 1.0).is_err());
        assert!(PrivacyParams::new(f64::INFINITY, 1e-5).is_ok());
    }

    #[test]
    fn single_precision_agrees_roughly() {
        let p1 = GaussianHypothesis::new(0.0f32, 1.54).unwrap();
        let p2 = GaussianHypothesis::new(1.0f32, 1.54).unwrap();
        let e = epsilon_for_delta(&p1, &p2, 1e-6).unwrap();
        assert!((e - 3.0).abs() < 0.05, "{e}");
    }
}
