//! Incentive mechanisms for microtask crowdsourcing.
//!
//! Workers choose the quality of their solutions to maximise their own
//! utility. This crate analyses what quality a requester can obtain, and at
//! what cost, under three mechanisms:
//!
//! * [`basic`]: reward-consensus (majority voting) and reward-accuracy
//!   (random spot checks), with their equilibria and minimum costs;
//! * [`training`]: a two-state mechanism that demotes rejected workers to
//!   an unpaid training state, solved as a discounted MDP;
//! * [`sim`]: a Monte Carlo population simulator used to cross-check the
//!   closed forms.
//!
//! Worker costs enter only through the [`CostModel`] trait.
//!
//! ```
//! use crowd_incentives::{basic, QuadraticCost};
//!
//! let cost = QuadraticCost::new(1.0)?;
//! let report = basic::min_cost_consensus(&cost);
//! assert_eq!(report.mechanism_cost, 3.0);
//! # Ok::<(), crowd_incentives::Error>(())
//! ```

pub mod basic;
pub mod cost;
mod error;
pub mod sim;
pub mod training;

pub use cost::{check_assumptions, quality_grid, CostModel, QuadraticCost, Quality};
pub use error::{Error, Result};

// Runs the code listings in the guide as doctests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/cost-model.md")]
    mod cost_model {}
    #[doc = include_str!("../../../book/src/basic-mechanisms.md")]
    mod basic_mechanisms {}
    #[doc = include_str!("../../../book/src/training-mechanism.md")]
    mod training_mechanism {}
    #[doc = include_str!("../../../book/src/equilibrium.md")]
    mod equilibrium {}
    #[doc = include_str!("../../../book/src/design.md")]
    mod design {}
    #[doc = include_str!("../../../book/src/stationary.md")]
    mod stationary {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
