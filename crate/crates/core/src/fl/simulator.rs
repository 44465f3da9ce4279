//! DP-FedAvg training loop with canary clients.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, AuditError, Result};
use crate::rng::{fill_standard_normal, substream, Purpose};
use crate::samples::{CosineSampleSet, Label};
use crate::scalar::{count, Real};
use crate::sphere::fill_unit_sphere;
use crate::vector::{add_assign, axpy, dot, norm, scale};

use super::config::FederatedConfig;
use super::schedule::{build_schedule, ParticipationSchedule};

/// Clients whose clipped updates are summed sequentially into one partial.
const CLIENT_GROUP: usize = 32;
/// Partials computed concurrently before being folded in order.
const GROUPS_PER_BATCH: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState<T> {
    pub params: Vec<T>,
    pub momentum_buffer: Vec<T>,
    /// Rounds completed.
    pub round: usize,
}

/// Per-round cosines with the noised average delta `ρ̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace<T> {
    pub round: usize,
    pub dim: usize,
    pub observed: Vec<T>,
    pub unobserved: Vec<T>,
    /// `ρ̄` was exactly zero; cosines are recorded as 0.
    pub zero_delta: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutput<T> {
    pub final_model: ModelState<T>,
    /// Cosines of observed canaries with the final parameters.
    pub observed_final: CosineSampleSet<T>,
    /// Same for unobserved canaries.
    pub unobserved_final: CosineSampleSet<T>,
    /// Empty unless all rounds were traced.
    pub traces: Vec<RoundTrace<T>>,
    pub schedule: ParticipationSchedule,
}

/// `x · min(1, S/‖x‖)` in place; returns the original norm.
pub fn clip_in_place<T: Real>(x: &mut [T], clip_norm: T) -> T {
    let n = norm(x);
    if n > clip_norm {
        scale(clip_norm / n, x);
    }
    n
}

/// `c · S/‖c‖`.
pub fn project_to_norm<T: Real>(c: &[T], clip_norm: T) -> Vec<T> {
    let n = norm(c);
    c.iter().map(|&v| v * (clip_norm / n)).collect()
}

/// Canary directions with their norms, computed once.
struct CanarySet<T> {
    vectors: Vec<Vec<T>>,
    norms: Vec<T>,
}

impl<T: Real> CanarySet<T> {
    fn draw(seed: u64, purpose: Purpose, count: usize, dim: usize) -> Self {
        let vectors: Vec<Vec<T>> = (0..count)
            .into_par_iter()
            .map(|i| {
                let mut c = vec![T::zero(); dim];
                fill_unit_sphere(&mut substream(seed, purpose, 0, i as u64), &mut c);
                c
            })
            .collect();
        let norms = vectors.iter().map(|c| norm(c)).collect();
        Self { vectors, norms }
    }

    /// Cosine of every canary with `v`, whose norm is `v_norm`; 0 when
    /// `v` is zero.
    fn cosines(&self, v: &[T], v_norm: T) -> Vec<T> {
        if v_norm == T::zero() {
            return vec![T::zero(); self.vectors.len()];
        }
        self.vectors
            .par_iter()
            .zip(&self.norms)
            .map(|(c, &cn)| (dot(c, v) / (cn * v_norm)).max(-T::one()).min(T::one()))
            .collect()
    }
}

/// Clipped update sums of one client group, for every model in the batch.
///
/// Each client's target is drawn once and shared by all models. For the
/// mean-point task the clipped sum `Σ f_j (w_j − θ)` is accumulated as
/// `Σ f_j w_j − (Σ f_j) θ`, which avoids materializing each update.
fn clipped_client_sums<T: Real>(
    configs: &[&FederatedConfig<T>],
    clients: &[usize],
    models: &[&[T]],
    scratch: &mut GroupScratch<T>,
) {
    let lead = configs[0];
    let GroupScratch { sums, weights, w } = scratch;
    for s in sums.iter_mut() {
        s.fill(T::zero());
    }
    weights.fill(T::zero());
    for &j in clients {
        lead.task.client_target(lead.seed, j, w);
        for (k, (cfg, model)) in configs.iter().zip(models).enumerate() {
            let n = diff_norm(w, model);
            let factor = if n > cfg.clip_norm { cfg.clip_norm / n } else { T::one() };
            axpy(factor, w, &mut sums[k]);
            weights[k] = weights[k] + factor;
        }
    }
    for ((sum, model), &f) in sums.iter_mut().zip(models).zip(weights.iter()) {
        axpy(-f, model, sum);
    }
}

/// Reused buffers for one client group, so rounds do not allocate.
struct GroupScratch<T> {
    sums: Vec<Vec<T>>,
    weights: Vec<T>,
    w: Vec<T>,
}

impl<T: Real> GroupScratch<T> {
    fn new(models: usize, dim: usize) -> Self {
        Self { sums: vec![vec![T::zero(); dim]; models], weights: vec![T::zero(); models], w: vec![T::zero(); dim] }
    }
}

/// `‖a − b‖` without a temporary.
fn diff_norm<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        for l in 0..4 {
            let e = a[j + l] - b[j + l];
            acc[l] = acc[l] + e * e;
        }
    }
    let mut tail = T::zero();
    for j in 4 * chunks..a.len() {
        let e = a[j] - b[j];
        tail = tail + e * e;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3]) + tail).sqrt()
}

/// Canary directions, shared between runs drawing the same set.
struct CanaryCache<T> {
    entries: Vec<((u64, Purpose, usize), Arc<CanarySet<T>>)>,
}

impl<T: Real> CanaryCache<T> {
    fn get(&mut self, seed: u64, purpose: Purpose, count: usize, dim: usize) -> Arc<CanarySet<T>> {
        let key = (seed, purpose, count);
        if let Some((_, v)) = self.entries.iter().find(|(k, _)| *k == key) {
            return Arc::clone(v);
        }
        let v = Arc::new(CanarySet::draw(seed, purpose, count, dim));
        self.entries.push((key, Arc::clone(&v)));
        v
    }
}

struct Run<'a, T> {
    config: &'a FederatedConfig<T>,
    trace: bool,
    schedule: ParticipationSchedule,
    observed: Arc<CanarySet<T>>,
    unobserved: Arc<CanarySet<T>>,
    state: ModelState<T>,
    traces: Vec<RoundTrace<T>>,
}

/// Simulates `config.rounds` rounds of DP-FedAvg.
///
/// Each round sums clipped client updates and canaries projected to the
/// clip norm, adds `N(0, (zS)²)` noise, divides by the number of
/// participants and takes a server step `buf ← β·buf + ρ̄; θ ← θ + η·buf`.
/// Unobserved canaries never enter the sum. With `trace_all_rounds`, every
/// canary's cosine with every `ρ̄` is recorded.
pub fn run_training<T: Real>(config: &FederatedConfig<T>, trace_all_rounds: bool) -> Result<TrainingOutput<T>> {
    run_training_batch(&[(config, trace_all_rounds)]).pop().expect("one run in, one result out")
}

/// Runs several configurations that share their client population in one
/// pass, drawing each client's data once per round for all of them.
///
/// The configurations must agree on everything that determines which
/// clients train when and on what: `dim`, `total_clients`,
/// `clients_per_round`, `rounds`, `epochs`, `seed` and `task`. Results are
/// bitwise identical to separate [`run_training`] calls.
pub fn run_training_batch<T: Real>(runs: &[(&FederatedConfig<T>, bool)]) -> Vec<Result<TrainingOutput<T>>> {
    let Some(&(lead, _)) = runs.first() else {
        return Vec::new();
    };
    let shared = |c: &FederatedConfig<T>| {
        (c.dim, c.total_clients, c.clients_per_round, c.rounds, c.epochs, c.seed, c.task)
    };
    if let Some((_, _)) = runs.iter().find(|(c, _)| shared(c) != shared(lead)) {
        let err = invalid("batched runs must share dim, clients, rounds, epochs, seed and task");
        return runs.iter().map(|_| Err(err.clone())).collect();
    }
    let mut results: Vec<Option<Result<TrainingOutput<T>>>> = (0..runs.len()).map(|_| None).collect();
    let mut cache = CanaryCache { entries: Vec::new() };
    let d = lead.dim;
    let mut live: Vec<(usize, Run<'_, T>)> = Vec::new();
    for (k, &(config, trace)) in runs.iter().enumerate() {
        let schedule = match config.validate().and_then(|_| build_schedule(config)) {
            Ok(s) => s,
            Err(e) => {
                results[k] = Some(Err(e));
                continue;
            }
        };
        let canary_seed = config.resolved_canary_seed();
        live.push((
            k,
            Run {
                config,
                trace,
                schedule,
                observed: cache.get(canary_seed, Purpose::Canary, config.observed_canaries, d),
                unobserved: cache.get(canary_seed, Purpose::UnobservedCanary, config.unobserved_canaries, d),
                state: ModelState { params: vec![T::zero(); d], momentum_buffer: vec![T::zero(); d], round: 0 },
                traces: Vec::new(),
            },
        ));
    }

    let mut noise = vec![T::zero(); d];
    let mut scratch: Vec<GroupScratch<T>> = Vec::new();
    for t in 0..lead.rounds {
        if live.is_empty() {
            break;
        }
        let clients = &live[0].1.schedule.rounds[t].clients.clone();
        let configs: Vec<&FederatedConfig<T>> = live.iter().map(|(_, r)| r.config).collect();
        let models: Vec<&[T]> = live.iter().map(|(_, r)| r.state.params.as_slice()).collect();
        let mut rhos = vec![vec![T::zero(); d]; live.len()];
        if scratch.first().map_or(true, |sc| sc.sums.len() != live.len()) {
            scratch = (0..GROUPS_PER_BATCH).map(|_| GroupScratch::new(live.len(), d)).collect();
        }
        let groups: Vec<&[usize]> = clients.chunks(CLIENT_GROUP).collect();
        for batch in groups.chunks(GROUPS_PER_BATCH) {
            batch
                .par_iter()
                .zip(scratch[..batch.len()].par_iter_mut())
                .for_each(|(g, sc)| clipped_client_sums(&configs, g, &models, sc));
            for sc in &scratch[..batch.len()] {
                for (rho, s) in rhos.iter_mut().zip(&sc.sums) {
                    add_assign(rho, s);
                }
            }
        }
        drop(models);

        let mut aborted = Vec::new();
        for ((slot, run), mut rho) in live.iter_mut().zip(rhos) {
            let config = run.config;
            let assignment = &run.schedule.rounds[t];
            for &i in &assignment.canaries {
                let c = &run.observed.vectors[i];
                axpy(config.clip_norm / run.observed.norms[i], c, &mut rho);
            }
            let noise_std = config.noise_std();
            if noise_std > T::zero() {
                fill_standard_normal(&mut substream(config.seed, Purpose::Noise, t as u64, 0), &mut noise);
                axpy(noise_std, &noise, &mut rho);
            }
            let n = (assignment.clients.len() + assignment.canaries.len()).max(1);
            scale(count::<T>(n).recip(), &mut rho);
            let rho_bar = rho;

            if run.trace {
                let rn = norm(&rho_bar);
                run.traces.push(RoundTrace {
                    round: t,
                    dim: d,
                    observed: run.observed.cosines(&rho_bar, rn),
                    unobserved: run.unobserved.cosines(&rho_bar, rn),
                    zero_delta: rn == T::zero(),
                });
            }

            let beta = config.server_momentum;
            let state = &mut run.state;
            for (b, &r) in state.momentum_buffer.iter_mut().zip(&rho_bar) {
                *b = beta * *b + r;
            }
            axpy(config.server_lr, &state.momentum_buffer, &mut state.params);
            state.round = t + 1;
            if state.params.iter().any(|v| !v.is_finite()) {
                aborted.push(*slot);
            }
        }
        for slot in aborted {
            let pos = live.iter().position(|(k, _)| *k == slot).expect("slot is live");
            live.remove(pos);
            results[slot] = Some(Err(AuditError::AbortedRun { round: t }));
        }
    }

    for (slot, run) in live {
        let params = &run.state.params;
        let pn = norm(params);
        let obs = run.observed.cosines(params, pn);
        let unobs = run.unobserved.cosines(params, pn);
        let out = CosineSampleSet::new(d, Label::Observed, obs).and_then(|observed_final| {
            let unobserved_final = CosineSampleSet::new(d, Label::Unobserved, unobs)?;
            Ok(TrainingOutput { final_model: run.state, observed_final, unobserved_final, traces: run.traces, schedule: run.schedule })
        });
        results[slot] = Some(out);
    }
    results.into_iter().map(|r| r.expect("every run resolved")).collect()
}

/// Per-canary maximum over rounds, for observed and unobserved canaries.
pub fn max_over_rounds<T: Real>(traces: &[RoundTrace<T>]) -> Result<(CosineSampleSet<T>, CosineSampleSet<T>)> {
    let first = traces.first().ok_or_else(|| invalid("max over rounds needs at least one trace"))?;
    let mut obs = first.observed.clone();
    let mut unobs = first.unobserved.clone();
    for tr in &traces[1..] {
        if tr.dim != first.dim || tr.observed.len() != obs.len() || tr.unobserved.len() != unobs.len() {
            return Err(invalid(format!("trace for round {} does not match the shape of round {}", tr.round, first.round)));
        }
        for (m, &v) in obs.iter_mut().zip(&tr.observed) {
            *m = m.max(v);
        }
        for (m, &v) in unobs.iter_mut().zip(&tr.unobserved) {
            *m = m.max(v);
        }
    }
    Ok((CosineSampleSet::new(first.dim, Label::Observed, obs)?, CosineSampleSet::new(first.dim, Label::Unobserved, unobs)?))
}
