//! The quality-aware training mechanism.
//!
//! Workers alternate between a *working* state, where they solve paid
//! tasks, and an unpaid *training* state. In the working state a task is
//! validated by a three-worker consensus with probability `1 - beta_w` and
//! otherwise spot-checked with probability `alpha_w`. A rejected worker is
//! demoted to training, where it must solve `n_tasks` training tasks; with
//! probability `alpha_t` these are all checked and every one must pass
//! before the worker returns to work. Each slot a worker stays in the
//! system with probability `delta`.
//!
//! The worker's problem is a two-state discounted MDP. [`best_response`]
//! solves it by value iteration over a quality grid, [`verify_sne`] checks
//! whether an action pair is a symmetric equilibrium, and
//! [`design_mechanism`] picks `n_tasks` and `alpha_t` so that quality 1 in
//! the working state is an equilibrium.

mod design;
mod dynamics;
mod mdp;
mod stationary;

pub use design::{
    cost_upper_bound, design_mechanism, max_training_sampling, min_training_tasks,
    training_tasks_bound, working_state_cost,
};
pub use dynamics::{
    bellman_residuals, immediate_utilities, long_term_utilities, mechanism_cost_training,
    p_train_pass, p_work_accept, utility_gap,
};
pub use mdp::{
    best_response, equilibrium_training_quality, solve_worker_mdp, verify_sne, EquilibriumReport,
    MdpSolution, ValueIteration, DEFAULT_GRID,
};
pub use stationary::{stationary_working_prob, StateDistribution, StationaryDistribution};

use crate::cost::Quality;
use crate::error::{check_eps, check_nonneg, check_unit, Error, Result};

/// Full parameterisation of the training mechanism.
///
/// The pass threshold always equals `n_tasks`: a selected worker must get
/// every training task right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingParams {
    /// Probability a working-state task is spot-checked instead of going to
    /// a consensus panel.
    pub beta_w: f64,
    /// Spot-check probability in the working state.
    pub alpha_w: f64,
    pub r: f64,
    /// Probability a training round is evaluated.
    pub alpha_t: f64,
    pub n_tasks: u32,
    /// Per-slot probability of staying in the system.
    pub delta: f64,
    pub eps: f64,
    /// Validation cost per checked task.
    pub d: f64,
    /// Budget for training-state validation relative to working-state cost.
    pub gamma: f64,
    /// Probability a newcomer starts in the working state.
    pub pi0_w: f64,
}

impl Default for TrainingParams {
    fn default() -> Self {
        TrainingParams {
            beta_w: 0.0,
            alpha_w: 0.0,
            r: 1.0,
            alpha_t: 1.0,
            n_tasks: 1,
            delta: 0.9,
            eps: 0.01,
            d: 10.0,
            gamma: 1.0,
            pi0_w: 1.0,
        }
    }
}

impl TrainingParams {
    pub fn validate(&self) -> Result<()> {
        check_unit("beta_w", self.beta_w)?;
        check_unit("alpha_w", self.alpha_w)?;
        check_unit("alpha_t", self.alpha_t)?;
        check_unit("pi0_w", self.pi0_w)?;
        check_nonneg("r", self.r)?;
        check_nonneg("d", self.d)?;
        check_eps(self.eps)?;
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::domain(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::domain(format!("gamma = {} must be positive", self.gamma)));
        }
        if self.n_tasks == 0 || self.n_tasks > i32::MAX as u32 {
            return Err(Error::domain(format!("n_tasks = {} out of range", self.n_tasks)));
        }
        Ok(())
    }

    /// Number of correct training solutions required to pass.
    pub fn pass_threshold(&self) -> u32 {
        self.n_tasks
    }

    pub fn working(&self) -> WorkingParams {
        WorkingParams {
            beta_w: self.beta_w,
            alpha_w: self.alpha_w,
            r: self.r,
        }
    }
}

/// The parameters a requester picks freely before designing the training
/// state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkingParams {
    pub beta_w: f64,
    pub alpha_w: f64,
    pub r: f64,
}

/// Stationary worker policy: quality in the working and training states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionPair {
    pub q_w: Quality,
    pub q_t: Quality,
}

impl ActionPair {
    pub fn new(q_w: Quality, q_t: Quality) -> Self {
        ActionPair { q_w, q_t }
    }
}

/// Long-term expected utility starting from each state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityPair {
    pub u_work: f64,
    pub u_train: f64,
}

impl UtilityPair {
    pub fn gap(&self) -> f64 {
        self.u_work - self.u_train
    }
}
