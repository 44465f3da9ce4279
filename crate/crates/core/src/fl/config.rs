//! DP-FedAvg experiment configuration.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gaussian::validate_delta;
use crate::scalar::{count, lit, Real};

use super::task::SyntheticTask;

fn one() -> usize {
    1
}

/// Everything needed to reproduce one simulated training run.
///
/// Field names double as the JSON configuration keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct FederatedConfig<T> {
    pub dim: usize,
    pub total_clients: usize,
    pub clients_per_round: usize,
    pub rounds: usize,
    /// Noise standard deviation as a multiple of `clip_norm`.
    pub noise_multiplier: T,
    pub clip_norm: T,
    pub server_lr: T,
    pub server_momentum: T,
    pub observed_canaries: usize,
    pub unobserved_canaries: usize,
    /// Rounds in which each observed canary is sent.
    #[serde(default = "one")]
    pub repetitions: usize,
    /// Passes over the client population; each client trains once per pass.
    #[serde(default = "one")]
    pub epochs: usize,
    /// Target δ; `total_clients^-1.1` when unset.
    #[serde(default)]
    pub delta: Option<T>,
    pub seed: u64,
    /// Seed for canary directions only; defaults to `seed`.
    #[serde(default)]
    pub canary_seed: Option<u64>,
    #[serde(default)]
    pub task: SyntheticTask,
}

impl<T: Real> FederatedConfig<T> {
    /// δ in use: the configured value or `m^-1.1`.
    pub fn resolved_delta(&self) -> T {
        self.delta.unwrap_or_else(|| count::<T>(self.total_clients).powf(lit(-1.1)))
    }

    pub fn resolved_canary_seed(&self) -> u64 {
        self.canary_seed.unwrap_or(self.seed)
    }

    /// Copy with `delta` filled in, as echoed in reports.
    pub fn resolved(&self) -> Self {
        Self { delta: Some(self.resolved_delta()), canary_seed: Some(self.resolved_canary_seed()), ..self.clone() }
    }

    /// Standard deviation of the per-round noise added to the sum.
    pub fn noise_std(&self) -> T {
        self.noise_multiplier * self.clip_norm
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: usize| {
            if v == 0 {
                Err(invalid(format!("{name} must be positive")))
            } else {
                Ok(())
            }
        };
        if self.dim < 2 {
            return Err(invalid(format!("dim must be at least 2, got {}", self.dim)));
        }
        // An empty population (canaries only) is allowed; otherwise rounds
        // must seat at least one client.
        if self.total_clients == 0 {
            if self.clients_per_round != 0 {
                return Err(invalid("clients_per_round must be 0 when total_clients is 0"));
            }
        } else {
            pos("clients_per_round", self.clients_per_round)?;
        }
        pos("rounds", self.rounds)?;
        pos("repetitions", self.repetitions)?;
        pos("epochs", self.epochs)?;
        if self.clients_per_round > self.total_clients {
            return Err(invalid(format!(
                "clients_per_round ({}) exceeds total_clients ({})",
                self.clients_per_round, self.total_clients
            )));
        }
        if !(self.noise_multiplier >= T::zero()) || !self.noise_multiplier.is_finite() {
            return Err(invalid(format!("noise_multiplier must be finite and nonnegative, got {}", self.noise_multiplier)));
        }
        if !(self.clip_norm > T::zero()) || !self.clip_norm.is_finite() {
            return Err(invalid(format!("clip_norm must be finite and positive, got {}", self.clip_norm)));
        }
        if !(self.server_lr > T::zero()) || !self.server_lr.is_finite() {
            return Err(invalid(format!("server_lr must be finite and positive, got {}", self.server_lr)));
        }
        if !(self.server_momentum >= T::zero() && self.server_momentum < T::one()) {
            return Err(invalid(format!("server_momentum must lie in [0, 1), got {}", self.server_momentum)));
        }
        if self.repetitions > self.rounds {
            return Err(invalid(format!("repetitions ({}) exceed rounds ({})", self.repetitions, self.rounds)));
        }
        if self.epochs > self.rounds {
            return Err(invalid(format!("epochs ({}) exceed rounds ({})", self.epochs, self.rounds)));
        }
        // The shortest epoch must still seat every client.
        let shortest = self.rounds / self.epochs;
        if self.clients_per_round * shortest < self.total_clients {
            return Err(invalid(format!(
                "{} clients cannot each train once in {shortest} rounds of {} clients",
                self.total_clients, self.clients_per_round
            )));
        }
        if let Some(d) = self.delta {
            validate_delta(d)?;
        } else {
            validate_delta(self.resolved_delta())?;
        }
        Ok(())
    }
}
