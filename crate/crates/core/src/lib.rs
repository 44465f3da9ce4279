//! Empirical (ε, δ) estimation for Gaussian-noised releases and DP-FedAvg
//! from the cosines between random canaries and the released model.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below pin the common `f64` and `f32` instantiations.

pub mod error;
pub mod estimators;
pub mod fl;
pub mod gaussian;
pub mod mechanism;
pub mod roots;
pub mod rng;
pub mod samples;
pub mod scalar;
pub mod special;
pub mod sphere;
pub mod vector;

pub use error::{AuditError, Result};
pub use estimators::{
    anderson_darling, epsilon_lower_bound, estimate_epsilon_all_iterates, estimate_epsilon_final, jeffreys_upper_bound,
    AttackRates, EpsilonEstimate, EpsilonLowerBound, EstimateStatus, NormalityDiagnostic, NullModel,
};
pub use fl::{max_over_rounds, run_training, FederatedConfig, RoundTrace, SyntheticTask, TrainingOutput};
pub use gaussian::{
    calibrate_gaussian_sigma, delta_for_epsilon, epsilon_for_delta, EpsilonSearch, GaussianHypothesis, PrivacyParams,
};
pub use mechanism::{run_gaussian_mechanism_audit, run_gaussian_mechanism_sweep, GaussianSumInstance, MechanismAudit};
pub use samples::{fit_gaussian_moments, pool_runs, CosineSampleSet, FittedMoments, Label};
pub use scalar::Real;
pub use sphere::{CosineNull, NullCosineDistribution, UnitVector};

pub type GaussianHypothesisF64 = GaussianHypothesis<f64>;
pub type GaussianHypothesisF32 = GaussianHypothesis<f32>;
pub type CosineSampleSetF64 = CosineSampleSet<f64>;
pub type CosineSampleSetF32 = CosineSampleSet<f32>;
pub type EpsilonEstimateF64 = EpsilonEstimate<f64>;
pub type EpsilonLowerBoundF64 = EpsilonLowerBound<f64>;
pub type GaussianSumInstanceF64 = GaussianSumInstance<f64>;
pub type GaussianSumInstanceF32 = GaussianSumInstance<f32>;
pub type FederatedConfigF64 = FederatedConfig<f64>;
pub type FederatedConfigF32 = FederatedConfig<f32>;
