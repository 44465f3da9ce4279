//! Synthetic client objectives standing in for real local training.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{fill_standard_normal, substream, Purpose};
use crate::scalar::{count, Real};
use crate::vector::{dot, norm_sq, scale};

/// Built-in client tasks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticTask {
    /// Client `j` holds a target `w_j ~ N(0, I/d)` and minimizes
    /// `½‖θ − w_j‖²`; one unit-rate gradient step gives `w_j − θ`.
    #[default]
    MeanPoint,
}

impl SyntheticTask {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::MeanPoint => "mean-point",
        }
    }

    /// Writes the client's private target into `out`.
    pub fn client_target<T: Real>(&self, seed: u64, client_id: usize, out: &mut [T]) {
        match self {
            Self::MeanPoint => {
                fill_standard_normal(&mut substream(seed, Purpose::ClientData, 0, client_id as u64), out);
                scale(count::<T>(out.len()).sqrt().recip(), out);
            }
        }
    }

    /// Writes the raw (unclipped) update of `client_id` at `model` into `out`.
    pub fn client_update_into<T: Real>(&self, seed: u64, client_id: usize, model: &[T], out: &mut [T]) {
        match self {
            Self::MeanPoint => {
                self.client_target(seed, client_id, out);
                for (o, &m) in out.iter_mut().zip(model) {
                    *o = *o - m;
                }
            }
        }
    }
}

impl std::str::FromStr for SyntheticTask {
    type Err = crate::error::AuditError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean-point" => Ok(Self::MeanPoint),
            other => Err(invalid(format!("unknown synthetic task {other:?}"))),
        }
    }
}

/// The raw update of one client at `model`.
pub fn client_update<T: Real>(task: SyntheticTask, seed: u64, client_id: usize, model: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); model.len()];
    task.client_update_into(seed, client_id, model, &mut out);
    out
}

/// Average client objective `½ mean_j ‖θ − w_j‖²` over `clients` clients.
pub fn training_loss<T: Real>(task: SyntheticTask, seed: u64, clients: usize, model: &[T]) -> Result<T> {
    if clients == 0 {
        return Err(invalid("training loss needs at least one client"));
    }
    let mut w = vec![T::zero(); model.len()];
    let theta_sq = norm_sq(model);
    let mut total = T::zero();
    for j in 0..clients {
        task.client_target(seed, j, &mut w);
        total = total + theta_sq - (dot(model, &w) + dot(model, &w)) + norm_sq(&w);
    }
    Ok(total / count::<T>(clients) / (T::one() + T::one()))
}
