use crate::cost::{CostModel, Quality};
use crate::error::{check_nonneg, check_unit, Error, Result};

use super::{TrainingParams, WorkingParams};

/// Expected working-state spend per task at quality 1:
/// `3r (1 - beta_w) + beta_w [(1 - alpha_w eps) r + alpha_w d]`.
pub fn working_state_cost(p: &TrainingParams) -> f64 {
    3.0 * p.r * (1.0 - p.beta_w) + p.beta_w * ((1.0 - p.alpha_w * p.eps) * p.r + p.alpha_w * p.d)
}

/// Unclamped lower bound on the number of training tasks that makes
/// quality 1 in the working state an equilibrium. `p.n_tasks` and
/// `p.alpha_t` are ignored: the bound holds for every `alpha_t`.
pub fn training_tasks_bound<C: CostModel>(p: &TrainingParams, cost: &C) -> Result<f64> {
    p.validate()?;
    let detect = p.delta * (1.0 - p.beta_w) + p.delta * p.beta_w * p.alpha_w * (1.0 - 2.0 * p.eps);
    if detect <= 0.0 {
        return Err(Error::domain(
            "beta_w = 1 with alpha_w = 0 never validates a working-state solution; no number of training tasks helps",
        ));
    }
    let c0 = cost.cost(Quality::ZERO);
    if !(c0 > 0.0) {
        return Err(Error::domain("cost at zero quality must be positive"));
    }
    let marginal = (1.0 + p.delta * p.beta_w * p.alpha_w * p.eps) * cost.marginal_cost(Quality::ONE) / detect;
    Ok((marginal - (p.delta + 1.0) / p.delta * p.r + cost.cost(Quality::ONE)) / c0)
}

/// Smallest integer number of training tasks satisfying
/// [`training_tasks_bound`], never below 1.
pub fn min_training_tasks<C: CostModel>(p: &TrainingParams, cost: &C) -> Result<u32> {
    let bound = training_tasks_bound(p, cost)?;
    // Absorb rounding noise when the bound is an exact integer.
    let n = (bound - 1e-9).ceil().max(1.0);
    if n > i32::MAX as f64 {
        return Err(Error::domain(format!("required number of training tasks {bound:.3e} is too large")));
    }
    Ok(n as u32)
}

/// Largest training-state sampling probability whose validation spend
/// stays within `gamma` times the working-state spend, capped at 1.
/// `p.alpha_t` is ignored.
pub fn max_training_sampling(p: &TrainingParams) -> f64 {
    let b = working_state_cost(p);
    let training_cost = p.beta_w * p.alpha_w * p.eps * p.n_tasks as f64 * p.d;
    if training_cost == 0.0 {
        return 1.0;
    }
    let eps_n = p.eps.powi(p.n_tasks as i32);
    let bound = p.gamma * b / (p.gamma * (1.0 - eps_n) * b + training_cost);
    bound.min(1.0)
}

/// `(1 + gamma)` times the working-state spend; an upper bound on the
/// mechanism cost whenever `alpha_t` respects [`max_training_sampling`].
pub fn cost_upper_bound(p: &TrainingParams) -> Result<f64> {
    p.validate()?;
    let limit = max_training_sampling(p);
    if p.alpha_t > limit * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "alpha_t = {} exceeds the budget limit {limit} for gamma = {}",
            p.alpha_t, p.gamma
        )));
    }
    Ok((1.0 + p.gamma) * working_state_cost(p))
}

/// Completes a mechanism from freely chosen working-state parameters:
/// the fewest training tasks that guarantee the quality-1 equilibrium, the
/// largest affordable `alpha_t`, and newcomers starting in the working
/// state.
pub fn design_mechanism<C: CostModel>(
    working: WorkingParams,
    gamma: f64,
    delta: f64,
    eps: f64,
    d: f64,
    cost: &C,
) -> Result<TrainingParams> {
    check_unit("beta_w", working.beta_w)?;
    check_unit("alpha_w", working.alpha_w)?;
    check_nonneg("r", working.r)?;
    let mut p = TrainingParams {
        beta_w: working.beta_w,
        alpha_w: working.alpha_w,
        r: working.r,
        alpha_t: 1.0,
        n_tasks: 1,
        delta,
        eps,
        d,
        gamma,
        pi0_w: 1.0,
    };
    p.validate()?;
    p.n_tasks = min_training_tasks(&p, cost)?;
    p.alpha_t = max_training_sampling(&p);
    Ok(p)
}
