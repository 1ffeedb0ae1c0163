//! Best responses in the training mechanism.
//!
//! Against peers who play `q_tilde_w` in the working state, a worker faces
//! a two-state discounted MDP whose actions are the qualities it produces
//! in each state. Actions are restricted to a uniform grid. Value
//! iteration finds the optimal values; the greedy policy is then polished
//! with exact policy evaluation until no grid action improves on it, so
//! the returned pair satisfies both optimality equations over the grid.

use crate::cost::{quality_grid, CostModel, Quality};
use crate::error::{Error, Result};

use super::dynamics::{evaluate, immediate_utilities, p_train_pass, p_work_accept, solve_two_state};
use super::{ActionPair, TrainingParams, UtilityPair};

/// Number of grid intervals per state (101 grid points).
pub const DEFAULT_GRID: usize = 100;

/// Value iteration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueIteration {
    /// Grid intervals per state; the grid has `grid_n + 1` points.
    pub grid_n: usize,
    /// Stop when the sup-norm change falls below `tol * max(1, |V|)`.
    pub tol: f64,
}

impl Default for ValueIteration {
    fn default() -> Self {
        ValueIteration { grid_n: DEFAULT_GRID, tol: 1e-9 }
    }
}

impl ValueIteration {
    pub fn new(grid_n: usize) -> Self {
        ValueIteration { grid_n, ..Default::default() }
    }

    /// `10 ⌈1 / (1 - δ)⌉ ln(1 / tol)`.
    pub fn max_iterations(&self, delta: f64) -> usize {
        let horizon = (1.0 / (1.0 - delta) - 1e-9).ceil();
        (10.0 * horizon * (1.0 / self.tol).ln()).ceil() as usize
    }
}

/// Result of solving the worker MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpSolution {
    pub action: ActionPair,
    /// Exact values of `action`.
    pub values: UtilityPair,
    /// Sup-norm change of each value-iteration sweep.
    pub sup_changes: Vec<f64>,
}

impl MdpSolution {
    pub fn iterations(&self) -> usize {
        self.sup_changes.len()
    }
}

/// Per-state action table: immediate reward and probability of being in
/// the working state next slot, for each grid quality.
struct ActionTable {
    reward: Vec<f64>,
    to_work: Vec<f64>,
}

impl ActionTable {
    fn q_value(&self, i: usize, delta: f64, v: &UtilityPair) -> f64 {
        self.reward[i] + delta * (self.to_work[i] * v.u_work + (1.0 - self.to_work[i]) * v.u_train)
    }

    fn max(&self, delta: f64, v: &UtilityPair) -> f64 {
        (0..self.reward.len())
            .map(|i| self.q_value(i, delta, v))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Highest-quality index whose value is within rounding of the maximum.
    fn argmax(&self, delta: f64, v: &UtilityPair) -> usize {
        let best = self.max(delta, v);
        let slack = 1e-11 * (1.0 + best.abs());
        (0..self.reward.len())
            .rev()
            .find(|&i| self.q_value(i, delta, v) >= best - slack)
            .expect("grid is non-empty")
    }
}

fn checked_grid(grid_n: usize) -> Result<Vec<Quality>> {
    if grid_n < 2 {
        return Err(Error::domain(format!("grid_n = {grid_n} must be at least 2")));
    }
    Ok(quality_grid(grid_n))
}

/// Solves the worker MDP against peers playing `q_tilde_w`.
pub fn solve_worker_mdp<C: CostModel>(
    q_tilde_w: Quality,
    p: &TrainingParams,
    cost: &C,
    vi: &ValueIteration,
) -> Result<MdpSolution> {
    p.validate()?;
    let grid = checked_grid(vi.grid_n)?;
    let work = ActionTable {
        reward: grid
            .iter()
            .map(|&q| immediate_utilities(q_tilde_w, q, q, p, cost).0)
            .collect(),
        to_work: grid.iter().map(|&q| p_work_accept(q_tilde_w, q, p)).collect(),
    };
    let train = ActionTable {
        reward: grid
            .iter()
            .map(|&q| immediate_utilities(q_tilde_w, q, q, p, cost).1)
            .collect(),
        to_work: grid.iter().map(|&q| p_train_pass(q, p)).collect(),
    };

    let max_iter = vi.max_iterations(p.delta);
    let mut v = UtilityPair { u_work: 0.0, u_train: 0.0 };
    let mut sup_changes = Vec::new();
    loop {
        let next = UtilityPair {
            u_work: work.max(p.delta, &v),
            u_train: train.max(p.delta, &v),
        };
        let change = (next.u_work - v.u_work).abs().max((next.u_train - v.u_train).abs());
        let scale = next.u_work.abs().max(next.u_train.abs()).max(1.0);
        v = next;
        sup_changes.push(change);
        if change < vi.tol * scale {
            break;
        }
        if sup_changes.len() >= max_iter {
            return Err(Error::NonConvergence { iterations: max_iter, last_change: change });
        }
    }

    // Policy polish: evaluate the greedy policy exactly and re-improve.
    let mut policy = (work.argmax(p.delta, &v), train.argmax(p.delta, &v));
    let mut values = UtilityPair { u_work: 0.0, u_train: 0.0 };
    for _ in 0..100 {
        values = solve_two_state(
            p.delta,
            work.to_work[policy.0],
            train.to_work[policy.1],
            work.reward[policy.0],
            train.reward[policy.1],
        );
        let improved = (work.argmax(p.delta, &values), train.argmax(p.delta, &values));
        if improved == policy {
            break;
        }
        policy = improved;
    }

    Ok(MdpSolution {
        action: ActionPair::new(grid[policy.0], grid[policy.1]),
        values,
        sup_changes,
    })
}

/// Optimal stationary action pair against peers playing `q_tilde_w`, over
/// a `(grid_n + 1)`-point grid per state. Ties go to the higher quality.
pub fn best_response<C: CostModel>(
    q_tilde_w: Quality,
    p: &TrainingParams,
    cost: &C,
    grid_n: usize,
) -> Result<ActionPair> {
    Ok(solve_worker_mdp(q_tilde_w, p, cost, &ValueIteration::new(grid_n))?.action)
}

/// Training-state quality at the desirable equilibrium: the training
/// component of the best response when every peer plays quality 1.
pub fn equilibrium_training_quality<C: CostModel>(p: &TrainingParams, cost: &C, grid_n: usize) -> Result<Quality> {
    Ok(best_response(Quality::ONE, p, cost, grid_n)?.q_t)
}

/// Outcome of checking whether an action pair is a symmetric equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub action: ActionPair,
    pub is_sne: bool,
    /// Long-term utilities of `action` when everyone plays it.
    pub utilities: UtilityPair,
    /// What a single deviator would play.
    pub best_response: ActionPair,
    /// `U^w(q̂_w, q̂_w, q̂_t) - U^w(q̂_w, q_w, q̂_t)` for each grid `q_w`.
    pub utility_loss_curve: Vec<(Quality, f64)>,
}

impl EquilibriumReport {
    pub fn min_loss(&self) -> f64 {
        self.utility_loss_curve
            .iter()
            .map(|&(_, l)| l)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks whether `a` is a symmetric equilibrium: assume every peer plays
/// `a`, solve for one worker's best response, and compare.
///
/// The working-state quality must land on the same grid cell as `a.q_w`.
/// The training-state quality only has to attain the optimal value, so
/// ties with the best response are accepted.
pub fn verify_sne<C: CostModel>(a: ActionPair, p: &TrainingParams, cost: &C, grid_n: usize) -> Result<EquilibriumReport> {
    let sol = solve_worker_mdp(a.q_w, p, cost, &ValueIteration::new(grid_n))?;
    let spacing = 1.0 / grid_n as f64;
    let work_matches = (sol.action.q_w.get() - a.q_w.get()).abs() <= 0.5 * spacing + 1e-12;

    let v = sol.values;
    let (_, train_reward) = immediate_utilities(a.q_w, a.q_w, a.q_t, p, cost);
    let pt = p_train_pass(a.q_t, p);
    let train_value = train_reward + p.delta * (pt * v.u_work + (1.0 - pt) * v.u_train);
    let train_matches = train_value >= v.u_train - 1e-9 * (1.0 + v.u_train.abs());

    let utilities = evaluate(a.q_w, a, p, cost);
    let utility_loss_curve = quality_grid(grid_n)
        .into_iter()
        .map(|q_w| {
            let deviated = evaluate(a.q_w, ActionPair::new(q_w, a.q_t), p, cost);
            (q_w, utilities.u_work - deviated.u_work)
        })
        .collect();

    Ok(EquilibriumReport {
        action: a,
        is_sne: work_matches && train_matches,
        utilities,
        best_response: sol.action,
        utility_loss_curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::QuadraticCost;

    fn q(v: f64) -> Quality {
        Quality::new(v).unwrap()
    }

    #[test]
    fn zero_reward_means_zero_effort() {
        let c = QuadraticCost::new(1.0).unwrap();
        // With one training task per round nothing is gained by passing.
        let p = TrainingParams { r: 0.0, n_tasks: 1, beta_w: 0.5, alpha_w: 0.5, ..Default::default() };
        for qt in [0.0, 0.5, 1.0] {
            let a = best_response(q(qt), &p, &c, DEFAULT_GRID).unwrap();
            assert_eq!(a, ActionPair::new(Quality::ZERO, Quality::ZERO));
        }
    }

    #[test]
    fn free_training_round_trip() {
        let c = QuadraticCost::new(1.0).unwrap();
        let p = TrainingParams {
            beta_w: 1.0,
            alpha_w: 1.0,
            eps: 0.0,
            alpha_t: 0.0,
            n_tasks: 1,
            r: 1.0,
            delta: 0.9,
            ..Default::default()
        };
        let a = best_response(Quality::ONE, &p, &c, DEFAULT_GRID).unwrap();
        assert_eq!(a.q_w, Quality::ONE);
        assert_eq!(a.q_t, Quality::ZERO);
    }

    #[test]
    fn iteration_guard() {
        let vi = ValueIteration::default();
        // 10 * 10 * ln(1e9)
        assert_eq!(vi.max_iterations(0.9), 2073);
    }

    #[test]
    fn tiny_grid_rejected() {
        let c = QuadraticCost::new(1.0).unwrap();
        assert!(best_response(Quality::ONE, &TrainingParams::default(), &c, 1).is_err());
    }

    #[test]
    fn zero_reward_pair_is_not_an_equilibrium() {
        let c = QuadraticCost::new(1.0).unwrap();
        let p = TrainingParams { r: 0.0, ..Default::default() };
        let rep = verify_sne(ActionPair::new(Quality::ONE, Quality::ZERO), &p, &c, DEFAULT_GRID).unwrap();
        assert!(!rep.is_sne);
        assert!(rep.min_loss() < 0.0);
    }
}
