//! Uniform points on the unit sphere `S^{d−1}` and the law of the cosine
//! between such a point and any independent nonzero vector.
//!
//! The cosine `τ_d` has density
//!
//! ```text
//! f_d(t) = Γ(d/2) / (Γ((d−1)/2) √π) · (1 − t²)^((d−3)/2),   t ∈ [−1, 1]
//! ```
//!
//! so `(1 + τ_d)/2 ~ Beta((d−1)/2, (d−1)/2)`, which gives the CDF through the
//! regularized incomplete beta function. `τ_d √d` tends to a standard normal,
//! and for large `d` the null is usually modelled as `N(0, 1/d)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, AuditError, Result};
use crate::gaussian::GaussianHypothesis;
use crate::rng::fill_standard_normal;
use crate::scalar::{count, lit, Real};
use crate::special::{beta_quantile, ln_gamma, normal_cdf, reg_inc_beta};
use crate::vector::{norm, scale};

/// Dimension from which the `N(0, 1/d)` approximation is the default null.
pub const GAUSSIAN_NULL_MIN_DIM: usize = 1000;

/// A point on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector<T> {
    coords: Vec<T>,
}

impl<T: Real> UnitVector<T> {
    /// Wraps coordinates that already have unit norm (relative tolerance 1e-9).
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(invalid(format!("unit vectors need dim >= 2, got {}", coords.len())));
        }
        let n = norm(&coords);
        if (n - T::one()).abs() > lit(1e-9_f64.max(4.0 * T::epsilon().to_f64_lossy())) {
            return Err(invalid(format!("vector norm is {n}, not 1")));
        }
        Ok(Self { coords })
    }

    /// Scales a nonzero vector onto the sphere.
    pub fn normalized(mut coords: Vec<T>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(invalid(format!("unit vectors need dim >= 2, got {}", coords.len())));
        }
        let n = norm(&coords);
        if !(n > T::zero()) || !n.is_finite() {
            return Err(AuditError::DegenerateInput("cannot normalize a zero or non-finite vector".into()));
        }
        scale(n.recip(), &mut coords);
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<T> {
        self.coords
    }
}

impl<T> AsRef<[T]> for UnitVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.coords
    }
}

/// Overwrites `out` with a uniform point on the sphere: i.i.d. standard
/// normals, normalized.
pub fn fill_unit_sphere<T: Real, R: Rng + ?Sized>(rng: &mut R, out: &mut [T]) {
    loop {
        fill_standard_normal(rng, out);
        let n = norm(out);
        // A zero draw has probability zero but would poison the caller.
        if n > T::zero() && n.is_finite() {
            scale(n.recip(), out);
            return;
        }
    }
}

/// Draws a uniform point on the unit sphere in `dim` dimensions.
pub fn sample_unit_sphere<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<UnitVector<T>> {
    if dim < 2 {
        return Err(invalid(format!("sphere sampling needs dim >= 2, got {dim}")));
    }
    let mut coords = vec![T::zero(); dim];
    fill_unit_sphere(rng, &mut coords);
    Ok(UnitVector { coords })
}

/// Exact law of the cosine between a uniform sphere point and a fixed vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NullCosineDistribution {
    dim: usize,
}

impl NullCosineDistribution {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(invalid(format!("null cosine distribution needs dim >= 2, got {dim}")));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Shape parameter of the symmetric beta law of `(1 + τ)/2`.
    fn beta_shape<T: Real>(&self) -> T {
        (count::<T>(self.dim) - T::one()) * lit(0.5)
    }

    pub fn variance<T: Real>(&self) -> T {
        count::<T>(self.dim).recip()
    }

    fn check_domain<T: Real>(t: T) -> Result<()> {
        if t.is_nan() || t.abs() > T::one() {
            return Err(AuditError::Domain(format!("cosine must lie in [-1, 1], got {t}")));
        }
        Ok(())
    }

    /// Density at `t`. For `d = 2` the density diverges at `±1` and `+∞` is
    /// returned there.
    pub fn pdf<T: Real>(&self, t: T) -> Result<T> {
        Self::check_domain(t)?;
        let d = count::<T>(self.dim);
        let half = lit::<T>(0.5);
        let ln_norm = ln_gamma(d * half) - ln_gamma((d - T::one()) * half) - half * T::PI().ln();
        let exponent = (d - lit(3.0)) * half;
        if exponent == T::zero() {
            return Ok(ln_norm.exp());
        }
        let one_minus = T::one() - t * t;
        if one_minus == T::zero() {
            return Ok(if exponent < T::zero() { T::infinity() } else { T::zero() });
        }
        Ok((ln_norm + exponent * one_minus.ln()).exp())
    }

    /// `Pr[τ_d <= t]`.
    pub fn cdf<T: Real>(&self, t: T) -> Result<T> {
        Self::check_domain(t)?;
        let shape = self.beta_shape::<T>();
        Ok(reg_inc_beta(shape, shape, (T::one() + t) * lit(0.5)))
    }

    /// `Pr[τ_d > t]`, computed through the lower tail for accuracy.
    pub fn sf<T: Real>(&self, t: T) -> Result<T> {
        self.cdf(-t)
    }

    /// Inverse CDF.
    pub fn quantile<T: Real>(&self, p: T) -> Result<T> {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(invalid(format!("probability must lie in [0, 1], got {p}")));
        }
        let shape = self.beta_shape::<T>();
        Ok(lit::<T>(2.0) * beta_quantile(shape, shape, p) - T::one())
    }
}

/// `N(0, 1/d)`, the large-dimension approximation of the cosine null.
pub fn gaussian_null_approximation<T: Real>(dim: usize) -> Result<GaussianHypothesis<T>> {
    if dim < 2 {
        return Err(invalid(format!("null approximation needs dim >= 2, got {dim}")));
    }
    GaussianHypothesis::new(T::zero(), count::<T>(dim).sqrt().recip())
}

/// How the null cosine law is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CosineNull {
    /// Exact beta-based law.
    Exact { dim: usize },
    /// `N(0, 1/d)`.
    Gaussian { dim: usize },
}

impl CosineNull {
    /// Gaussian approximation from [`GAUSSIAN_NULL_MIN_DIM`] on, exact below.
    pub fn default_for(dim: usize) -> Result<Self> {
        NullCosineDistribution::new(dim)?;
        Ok(if dim >= GAUSSIAN_NULL_MIN_DIM { Self::Gaussian { dim } } else { Self::Exact { dim } })
    }

    pub fn exact(dim: usize) -> Result<Self> {
        NullCosineDistribution::new(dim)?;
        Ok(Self::Exact { dim })
    }

    pub fn gaussian(dim: usize) -> Result<Self> {
        NullCosineDistribution::new(dim)?;
        Ok(Self::Gaussian { dim })
    }

    pub fn dim(&self) -> usize {
        match *self {
            Self::Exact { dim } | Self::Gaussian { dim } => dim,
        }
    }

    /// `Pr[τ > t]`; thresholds outside `[−1, 1]` are clamped.
    pub fn sf<T: Real>(&self, t: T) -> T {
        if t >= T::one() {
            return T::zero();
        }
        if t < -T::one() {
            return T::one();
        }
        match *self {
            Self::Exact { dim } => NullCosineDistribution { dim }.sf(t).expect("domain checked"),
            Self::Gaussian { dim } => normal_cdf(-t * count::<T>(dim).sqrt()),
        }
    }
}
