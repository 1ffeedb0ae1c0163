//! The two baseline mechanisms: reward-consensus (majority voting over a
//! panel of `K + 1` workers) and reward-accuracy (random spot checks
//! against a validator that errs with probability `eps`).

mod accuracy;
mod consensus;

pub use accuracy::{
    mechanism_cost_accuracy, min_cost_accuracy, optimal_action_accuracy, utility_accuracy,
    AccuracyParams,
};
pub use consensus::{
    consensus_probability, consensus_roots, equilibrium_consensus, is_sne_consensus_q1,
    mechanism_cost_consensus, min_cost_consensus, utility_consensus, ConsensusParams,
    MAX_CONSENSUS_K,
};

/// Requester cost of a mechanism at its cost-minimising parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport<P> {
    /// Expected requester spend per task.
    pub mechanism_cost: f64,
    pub optimal_params: P,
    /// Whether quality 1 is the worker equilibrium / best response at
    /// `optimal_params`.
    pub achieves_q1: bool,
}
