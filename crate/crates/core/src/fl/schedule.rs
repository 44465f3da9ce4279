//! Which clients and canaries take part in each round.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::{substream, Purpose};
use crate::scalar::Real;

use super::config::FederatedConfig;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundAssignment {
    pub clients: Vec<usize>,
    /// Observed canary ids.
    pub canaries: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipationSchedule {
    pub rounds: Vec<RoundAssignment>,
}

impl ParticipationSchedule {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Rounds in which canary `id` is sent, ascending.
    pub fn canary_rounds(&self, id: usize) -> Vec<usize> {
        self.rounds.iter().enumerate().filter(|(_, a)| a.canaries.contains(&id)).map(|(t, _)| t).collect()
    }
}

/// Rounds of canary `i` out of `rounds` with `r` repetitions: offset
/// `i mod ⌊T/r⌋`, then every `T/r` rounds.
pub fn canary_rounds(i: usize, rounds: usize, repetitions: usize) -> Vec<usize> {
    let period = rounds / repetitions;
    let offset = i % period;
    (0..repetitions).map(|j| offset + j * rounds / repetitions).collect()
}

/// Epoch `e` of `epochs` covers rounds `[e·T/E, (e+1)·T/E)`. Within an epoch
/// every client is seated once: a fresh shuffle is cut into contiguous,
/// near-equal slices, one per round.
pub fn build_schedule<T: Real>(config: &FederatedConfig<T>) -> Result<ParticipationSchedule> {
    config.validate()?;
    let t_total = config.rounds;
    let m = config.total_clients;
    let mut rounds = vec![RoundAssignment::default(); t_total];
    let mut order: Vec<usize> = (0..m).collect();
    for e in 0..config.epochs {
        let start = e * t_total / config.epochs;
        let end = (e + 1) * t_total / config.epochs;
        let len = end - start;
        order.sort_unstable();
        order.shuffle(&mut substream(config.seed, Purpose::Schedule, e as u64, 0));
        for r in 0..len {
            let slice = &order[r * m / len..(r + 1) * m / len];
            let mut clients = slice.to_vec();
            clients.sort_unstable();
            rounds[start + r].clients = clients;
        }
    }
    for i in 0..config.observed_canaries {
        for t in canary_rounds(i, t_total, config.repetitions) {
            rounds[t].canaries.push(i);
        }
    }
    Ok(ParticipationSchedule { rounds })
}
