//! DP-FedAvg simulator with canary clients.
//!
//! Observed canaries are sent as client updates on their scheduled rounds;
//! unobserved canaries are drawn the same way but never sent, and calibrate
//! the null for the all-iterates estimate.

mod config;
mod schedule;
mod simulator;
mod task;

pub use config::FederatedConfig;
pub use schedule::{build_schedule, canary_rounds, ParticipationSchedule, RoundAssignment};
pub use simulator::{clip_in_place, max_over_rounds, project_to_norm, run_training, run_training_batch, ModelState, RoundTrace, TrainingOutput};
pub use task::{client_update, training_loss, SyntheticTask};
