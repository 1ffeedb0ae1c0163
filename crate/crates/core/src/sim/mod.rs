//! Monte Carlo simulation of a worker population.
//!
//! The simulator plays out the mechanisms slot by slot with a fixed worker
//! policy and reports empirical rates with standard errors, so the
//! closed-form results elsewhere in the crate can be checked against an
//! independent estimate.
//!
//! Solution model: a worker's submission is acceptable with probability
//! equal to its quality. All acceptable solutions to a task are identical
//! and unacceptable ones never coincide, so a consensus panel agrees only
//! on the acceptable solution.
//!
//! Randomness comes from `Xoshiro256PlusPlus` seeded through SplitMix64
//! (`seed_from_u64`). Runs are bit-reproducible for a given seed.

mod engine;
mod stats;

pub use engine::{replicate, simulate};
pub use stats::Estimate;

use crate::basic::{AccuracyParams, ConsensusParams};
use crate::error::{Error, Result};
use crate::training::{ActionPair, TrainingParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mechanism {
    Consensus(ConsensusParams),
    Accuracy(AccuracyParams),
    Training(TrainingParams),
}

impl Mechanism {
    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::Consensus(_) => "consensus",
            Mechanism::Accuracy(_) => "accuracy",
            Mechanism::Training(_) => "training",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub mechanism: Mechanism,
    /// Fixed worker policy. The basic mechanisms only use `q_w`.
    pub policy: ActionPair,
    pub population: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Used by [`replicate`]; [`simulate`] always runs once.
    pub replications: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let min_pop = match &self.mechanism {
            Mechanism::Consensus(p) => {
                p.validate()?;
                p.k as usize + 1
            }
            Mechanism::Accuracy(p) => {
                p.validate()?;
                1
            }
            Mechanism::Training(p) => {
                p.validate()?;
                if p.beta_w < 1.0 {
                    3
                } else {
                    1
                }
            }
        };
        if self.population < min_pop {
            return Err(Error::Config(format!(
                "population {} is too small; {} mechanism needs at least {min_pop}",
                self.population,
                self.mechanism.name()
            )));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        Ok(())
    }
}

/// Aggregated empirical statistics of one run (or of several replications).
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Accepted working-state submissions per submission.
    pub empirical_work_accept_rate: Estimate,
    /// Passed training rounds per round. `None` without a training state or
    /// when no round was played.
    pub empirical_train_pass_rate: Option<Estimate>,
    /// Fraction of the population in the working state at the start of
    /// each slot.
    pub occupancy_trace: Vec<f64>,
    /// Mean occupancy over the second half of the horizon.
    pub tail_occupancy: Estimate,
    /// Requester spend (rewards plus validation) per task. A consensus task
    /// is shared by its whole panel.
    pub cost_per_task: Estimate,
    /// Average one-slot utility per worker.
    pub mean_worker_utility: Estimate,
    /// Mean total utility over a lifetime, for workers who enter in the
    /// working state. Only the training mechanism has churn; `None`
    /// otherwise or when no lifetime finished.
    pub discounted_utility_estimate: Option<Estimate>,
}
