//! One-shot audit of a single Gaussian vector-sum release.
//!
//! `k` random unit canaries are added to the sum of the data vectors, the
//! total is noised once, and the cosines between each canary and the release
//! are compared against the null `N(0, 1/d)`.
//!
//! Canaries are regenerated from their own substreams instead of being kept,
//! so live memory is a handful of `d`-vectors whatever `k` is. Canary sums
//! are formed in fixed-size groups and added in group order, which keeps the
//! release bitwise identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, AuditError, Result};
use crate::estimators::{estimate_epsilon_final, EpsilonEstimate};
use crate::gaussian::validate_delta;
use crate::rng::{fill_standard_normal, substream, Purpose};
use crate::samples::{CosineSampleSet, Label};
use crate::scalar::{lit, Real};
use crate::vector::{add_assign, axpy, cosine_with, dot, norm, norm_sq, scale};

/// Canaries summed sequentially into one partial sum.
const CANARY_GROUP: usize = 16;
/// Partial sums formed concurrently before being folded into the release.
const GROUPS_PER_BATCH: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct GaussianSumInstance<T> {
    pub dim: usize,
    /// Individual data vectors, each of norm at most 1.
    #[serde(default)]
    pub data_vectors: Vec<Vec<T>>,
    /// Precomputed data sum, added on top of `data_vectors`.
    #[serde(default)]
    pub data_sum: Option<Vec<T>>,
    pub noise_std: T,
    pub canary_count: usize,
    pub delta: T,
    pub seed: u64,
}

impl<T: Real> GaussianSumInstance<T> {
    /// Instance with no data (`X = 0`).
    pub fn new(dim: usize, noise_std: T, canary_count: usize, delta: T, seed: u64) -> Result<Self> {
        let inst = Self { dim, data_vectors: Vec::new(), data_sum: None, noise_std, canary_count, delta, seed };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(invalid(format!("dim must be at least 2, got {}", self.dim)));
        }
        if self.canary_count < 2 {
            return Err(invalid(format!("canary_count must be at least 2, got {}", self.canary_count)));
        }
        if !(self.noise_std >= T::zero()) || !self.noise_std.is_finite() {
            return Err(invalid(format!("noise_std must be finite and nonnegative, got {}", self.noise_std)));
        }
        validate_delta(self.delta)?;
        let tol = T::one() + lit(1e-9);
        for (j, x) in self.data_vectors.iter().enumerate() {
            if x.len() != self.dim {
                return Err(invalid(format!("data vector {j} has length {}, expected {}", x.len(), self.dim)));
            }
            let n = norm(x);
            if !(n <= tol) {
                return Err(invalid(format!("data vector {j} has norm {n} > 1")));
            }
        }
        if let Some(sum) = &self.data_sum {
            if sum.len() != self.dim {
                return Err(invalid(format!("data_sum has length {}, expected {}", sum.len(), self.dim)));
            }
            if sum.iter().any(|v| !v.is_finite()) {
                return Err(invalid("data_sum has non-finite entries"));
            }
        }
        Ok(())
    }
}

/// Result of [`run_gaussian_mechanism_audit`].
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismAudit<T> {
    pub estimate: EpsilonEstimate<T>,
    pub samples: CosineSampleSet<T>,
    pub release_norm: T,
}

/// Coordinates generated and consumed together; small enough for L1.
const BLOCK: usize = 1024;
/// Canaries whose cosines share one sweep over the release.
const COSINE_GROUP: usize = 8;

/// Raw normal draws of canary `index` into `out`; returns their norm.
fn raw_canary<T: Real>(seed: u64, index: usize, out: &mut [T]) -> T {
    let mut rng = substream(seed, Purpose::Canary, 0, index as u64);
    loop {
        let mut ss = T::zero();
        for chunk in out.chunks_mut(BLOCK) {
            fill_standard_normal(&mut rng, chunk);
            ss = ss + norm_sq(chunk);
        }
        let n = ss.sqrt();
        // A zero draw has probability zero; redraw from the same stream.
        if n > T::zero() && n.is_finite() {
            return n;
        }
    }
}

/// Canary `index` as a unit vector.
fn canary_into<T: Real>(seed: u64, index: usize, out: &mut [T]) {
    let n = raw_canary(seed, index, out);
    scale(n.recip(), out);
}

fn group_sum<T: Real>(seed: u64, dim: usize, indices: std::ops::Range<usize>) -> Vec<T> {
    let mut sum = vec![T::zero(); dim];
    let mut c = vec![T::zero(); dim];
    for i in indices {
        let n = raw_canary(seed, i, &mut c);
        axpy(n.recip(), &c, &mut sum);
    }
    sum
}

/// Cosines of a run of canaries with each release in `rhos`, regenerating
/// each canary block by block instead of materializing it. Returns one
/// vector of cosines per release.
fn group_cosines<T: Real>(seed: u64, indices: std::ops::Range<usize>, rhos: &[(Vec<T>, T)]) -> Vec<Vec<T>> {
    let mut rngs: Vec<_> = indices.clone().map(|i| substream(seed, Purpose::Canary, 0, i as u64)).collect();
    let mut dots = vec![vec![T::zero(); rngs.len()]; rhos.len()];
    let mut sums = vec![T::zero(); rngs.len()];
    let mut buf = vec![T::zero(); BLOCK];
    let dim = rhos[0].0.len();
    for start in (0..dim).step_by(BLOCK) {
        let end = (start + BLOCK).min(dim);
        let b = &mut buf[..end - start];
        for (g, rng) in rngs.iter_mut().enumerate() {
            fill_standard_normal(rng, b);
            sums[g] = sums[g] + norm_sq(b);
            for (dr, (rho, _)) in dots.iter_mut().zip(rhos) {
                dr[g] = dr[g] + dot(b, &rho[start..end]);
            }
        }
    }
    rhos.iter()
        .zip(dots)
        .map(|((rho, rho_norm), dr)| {
            indices
                .clone()
                .zip(dr.into_iter().zip(&sums))
                .map(|(i, (d, &ss))| {
                    let n = ss.sqrt();
                    let g = if n > T::zero() && n.is_finite() {
                        d / n / *rho_norm
                    } else {
                        let mut c = vec![T::zero(); rho.len()];
                        canary_into(seed, i, &mut c);
                        cosine_with(&c, rho, *rho_norm)
                    };
                    g.max(-T::one()).min(T::one())
                })
                .collect()
        })
        .collect()
}

/// `X + Σ c_i`, the release before noise.
fn noiseless_release<T: Real>(inst: &GaussianSumInstance<T>) -> Vec<T> {
    let d = inst.dim;
    let mut rho = vec![T::zero(); d];
    for x in &inst.data_vectors {
        add_assign(&mut rho, x);
    }
    if let Some(sum) = &inst.data_sum {
        add_assign(&mut rho, sum);
    }
    let k = inst.canary_count;
    let groups: Vec<_> = (0..k).step_by(CANARY_GROUP).map(|s| s..(s + CANARY_GROUP).min(k)).collect();
    for batch in groups.chunks(GROUPS_PER_BATCH) {
        let sums: Vec<Vec<T>> = batch.par_iter().map(|r| group_sum(inst.seed, d, r.clone())).collect();
        for s in &sums {
            add_assign(&mut rho, s);
        }
    }
    rho
}

/// Releases the noised sum once and estimates ε from the canary cosines.
pub fn run_gaussian_mechanism_audit<T: Real>(instance: &GaussianSumInstance<T>) -> Result<MechanismAudit<T>> {
    let mut out = run_gaussian_mechanism_sweep(instance, &[instance.noise_std])?;
    out.pop().expect("one noise level")
}

/// Audits of `instance` at each noise level in `noise_stds`, sharing the
/// canaries, data and noise direction. Each entry is bitwise identical to
/// [`run_gaussian_mechanism_audit`] with `noise_std` replaced; per-level
/// failures (such as a zero release) are reported in their own slot.
pub fn run_gaussian_mechanism_sweep<T: Real>(
    instance: &GaussianSumInstance<T>,
    noise_stds: &[T],
) -> Result<Vec<Result<MechanismAudit<T>>>> {
    instance.validate()?;
    if noise_stds.is_empty() {
        return Err(invalid("noise sweep needs at least one level"));
    }
    for &s in noise_stds {
        if !(s >= T::zero()) || !s.is_finite() {
            return Err(invalid(format!("noise_std must be finite and nonnegative, got {s}")));
        }
    }
    let d = instance.dim;
    let base = noiseless_release(instance);
    let mut z = Vec::new();
    if noise_stds.iter().any(|&s| s > T::zero()) {
        z = vec![T::zero(); d];
        fill_standard_normal(&mut substream(instance.seed, Purpose::Noise, 0, 0), &mut z);
    }
    let mut slots: Vec<Option<Result<MechanismAudit<T>>>> = Vec::with_capacity(noise_stds.len());
    let mut live = Vec::new();
    for &s in noise_stds {
        let mut rho = base.clone();
        if s > T::zero() {
            axpy(s, &z, &mut rho);
        }
        let rho_norm = norm(&rho);
        if !(rho_norm > T::zero()) || !rho_norm.is_finite() {
            slots.push(Some(Err(AuditError::DegenerateRelease)));
        } else {
            slots.push(None);
            live.push((rho, rho_norm));
        }
    }
    drop(base);
    drop(z);
    if !live.is_empty() {
        let k = instance.canary_count;
        let groups: Vec<_> = (0..k).step_by(COSINE_GROUP).map(|s| s..(s + COSINE_GROUP).min(k)).collect();
        let per_group: Vec<Vec<Vec<T>>> =
            groups.into_par_iter().map(|r| group_cosines(instance.seed, r, &live)).collect();
        let mut live_iter = live.iter().enumerate();
        for slot in slots.iter_mut().filter(|s| s.is_none()) {
            let (j, (_, rho_norm)) = live_iter.next().expect("one release per open slot");
            let cosines: Vec<T> = per_group.iter().flat_map(|g| g[j].iter().copied()).collect();
            *slot = Some((|| {
                let samples = CosineSampleSet::new(d, Label::Observed, cosines)?;
                let estimate = estimate_epsilon_final(&samples, d, instance.delta)?;
                Ok(MechanismAudit { estimate, samples, release_norm: *rho_norm })
            })());
        }
    }
    Ok(slots.into_iter().map(|s| s.expect("every slot filled")).collect())
}
