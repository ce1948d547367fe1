//! Replica orchestration, stopping rules, survival certificates and
//! estimators with confidence intervals.

pub mod estimate;
pub mod stats;
pub mod stopping;

pub use estimate::{
    estimate_exit_distribution, estimate_expected_survivors, estimate_survival, first_death_times,
    martingale_check, EstimateResult, ExitEstimate, MartingaleCheck,
};
pub use stats::{ks_two_sample, replica_rng, run_replicas, wilson, KsResult};
pub use stopping::{Certification, Certifier, StoppingRule};
