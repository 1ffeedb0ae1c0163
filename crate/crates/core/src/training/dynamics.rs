use crate::cost::{CostModel, Quality};
use crate::error::Result;

use super::{ActionPair, TrainingParams, UtilityPair};

/// Probability that a working-state submission of quality `q_w` is
/// accepted while the other two panel members play `q_tilde_w`.
///
/// Consensus accepts when the worker and at least one peer are acceptable;
/// the spot check accepts unchecked work, and checked work with the
/// validator's error rate.
pub fn p_work_accept(q_tilde_w: Quality, q_w: Quality, p: &TrainingParams) -> f64 {
    let (qt, q) = (q_tilde_w.get(), q_w.get());
    let peer_agrees = qt * qt + 2.0 * qt * (1.0 - qt);
    let consensus = (1.0 - p.beta_w) * q * peer_agrees;
    let unchecked = p.beta_w * (1.0 - p.alpha_w);
    let checked = p.beta_w * p.alpha_w * ((1.0 - 2.0 * p.eps) * q + p.eps);
    (consensus + unchecked + checked).clamp(0.0, 1.0)
}

/// Probability of leaving the training state after one round.
pub fn p_train_pass(q_t: Quality, p: &TrainingParams) -> f64 {
    let per_task = (1.0 - 2.0 * p.eps) * q_t.get() + p.eps;
    let all_pass = per_task.powi(p.n_tasks as i32);
    ((1.0 - p.alpha_t) + p.alpha_t * all_pass).clamp(0.0, 1.0)
}

/// One-slot utilities `(working, training)`. Training tasks are unpaid.
pub fn immediate_utilities<C: CostModel>(
    q_tilde_w: Quality,
    q_w: Quality,
    q_t: Quality,
    p: &TrainingParams,
    cost: &C,
) -> (f64, f64) {
    let work = p.r * p_work_accept(q_tilde_w, q_w, p) - cost.cost(q_w);
    let train = -(p.n_tasks as f64) * cost.cost(q_t);
    (work, train)
}

/// Exact policy evaluation: solves the two Bellman equations
/// `(I - delta Q) U = b` for a worker playing `a` against peers at
/// `q_tilde_w`.
pub fn long_term_utilities<C: CostModel>(
    q_tilde_w: Quality,
    a: ActionPair,
    p: &TrainingParams,
    cost: &C,
) -> Result<UtilityPair> {
    p.validate()?;
    Ok(evaluate(q_tilde_w, a, p, cost))
}

pub(crate) fn evaluate<C: CostModel>(q_tilde_w: Quality, a: ActionPair, p: &TrainingParams, cost: &C) -> UtilityPair {
    let pw = p_work_accept(q_tilde_w, a.q_w, p);
    let pt = p_train_pass(a.q_t, p);
    let (bw, bt) = immediate_utilities(q_tilde_w, a.q_w, a.q_t, p, cost);
    solve_two_state(p.delta, pw, pt, bw, bt)
}

/// Cramer's rule on
/// ```text
/// [1 - δ pw    -δ (1 - pw)] [Uw]   [bw]
/// [ -δ pt     1 - δ (1 - pt)] [Ut] = [bt]
/// ```
/// whose determinant factors as `(1 - δ)(1 + δ (pt - pw))`.
pub(crate) fn solve_two_state(delta: f64, pw: f64, pt: f64, bw: f64, bt: f64) -> UtilityPair {
    let det = (1.0 - delta) * (1.0 + delta * (pt - pw));
    assert!(det > 0.0, "I - delta Q is singular (delta = {delta})");
    let (a11, a12) = (1.0 - delta * pw, -delta * (1.0 - pw));
    let (a21, a22) = (-delta * pt, 1.0 - delta * (1.0 - pt));
    UtilityPair {
        u_work: (bw * a22 - a12 * bt) / det,
        u_train: (a11 * bt - a21 * bw) / det,
    }
}

/// Absolute residuals of the two Bellman recursions at `u`.
pub fn bellman_residuals<C: CostModel>(
    q_tilde_w: Quality,
    a: ActionPair,
    p: &TrainingParams,
    cost: &C,
    u: &UtilityPair,
) -> (f64, f64) {
    let pw = p_work_accept(q_tilde_w, a.q_w, p);
    let pt = p_train_pass(a.q_t, p);
    let (bw, bt) = immediate_utilities(q_tilde_w, a.q_w, a.q_t, p, cost);
    let rw = bw + p.delta * (pw * u.u_work + (1.0 - pw) * u.u_train) - u.u_work;
    let rt = bt + p.delta * (pt * u.u_work + (1.0 - pt) * u.u_train) - u.u_train;
    (rw.abs(), rt.abs())
}

/// `U^w - U^t` in closed form: `(u^w - u^t) / (1 + δ (P_t - P_w))`.
pub fn utility_gap<C: CostModel>(q_tilde_w: Quality, a: ActionPair, p: &TrainingParams, cost: &C) -> f64 {
    let pw = p_work_accept(q_tilde_w, a.q_w, p);
    let pt = p_train_pass(a.q_t, p);
    let (bw, bt) = immediate_utilities(q_tilde_w, a.q_w, a.q_t, p, cost);
    (bw - bt) / (1.0 + p.delta * (pt - pw))
}

/// Expected requester spend per working-state task when workers play
/// `(1, q_hat_t)`.
///
/// The last term charges each false rejection with the validation cost of
/// the training rounds it triggers, `alpha_t n d` per round over an
/// expected `1 / P_t` rounds.
pub fn mechanism_cost_training(p: &TrainingParams, q_hat_t: Quality) -> Result<f64> {
    p.validate()?;
    let working = super::working_state_cost(p);
    let demotion = p.beta_w * p.alpha_w * p.eps;
    if demotion == 0.0 {
        return Ok(working);
    }
    let pt = p_train_pass(q_hat_t, p);
    Ok(working + demotion * p.alpha_t * p.n_tasks as f64 * p.d / pt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::QuadraticCost;

    fn q(v: f64) -> Quality {
        Quality::new(v).unwrap()
    }

    fn unit() -> QuadraticCost {
        QuadraticCost::new(1.0).unwrap()
    }

    #[test]
    fn work_accept_examples() {
        for (beta_w, alpha_w) in [(0.0, 0.0), (0.5, 0.3), (1.0, 1.0)] {
            let p = TrainingParams { beta_w, alpha_w, eps: 0.0, ..Default::default() };
            assert_eq!(p_work_accept(q(1.0), q(1.0), &p), 1.0);
        }
        let p = TrainingParams { beta_w: 1.0, alpha_w: 0.9, eps: 0.01, ..Default::default() };
        assert!((p_work_accept(q(1.0), q(1.0), &p) - 0.991).abs() < 1e-15);
        let p = TrainingParams { beta_w: 0.0, ..Default::default() };
        assert_eq!(p_work_accept(q(0.5), q(1.0), &p), 0.75);
    }

    #[test]
    fn train_pass_examples() {
        let p = TrainingParams { alpha_t: 0.0, n_tasks: 7, ..Default::default() };
        assert_eq!(p_train_pass(q(0.3), &p), 1.0);
        let p = TrainingParams { alpha_t: 1.0, eps: 0.0, n_tasks: 15, ..Default::default() };
        assert_eq!(p_train_pass(q(1.0), &p), 1.0);
        let p = TrainingParams { alpha_t: 0.5, eps: 0.01, n_tasks: 2, ..Default::default() };
        assert!((p_train_pass(q(0.0), &p) - 0.50005).abs() < 1e-15);
    }

    #[test]
    fn immediate_utility_examples() {
        let c = unit();
        let p = TrainingParams { eps: 0.0, r: 1.0, ..Default::default() };
        assert_eq!(immediate_utilities(q(1.0), q(1.0), q(0.0), &p, &c).0, 0.0);
        let p = TrainingParams { n_tasks: 15, ..Default::default() };
        assert_eq!(immediate_utilities(q(1.0), q(1.0), q(0.0), &p, &c).1, -3.75);
        let p = TrainingParams { n_tasks: 1, ..Default::default() };
        assert_eq!(immediate_utilities(q(1.0), q(1.0), q(1.0), &p, &c).1, -1.0);
    }

    #[test]
    fn absorbing_working_state_is_geometric() {
        let c = unit();
        let p = TrainingParams { eps: 0.0, r: 2.0, delta: 0.9, ..Default::default() };
        let u = long_term_utilities(q(1.0), ActionPair::new(q(1.0), q(0.3)), &p, &c).unwrap();
        assert!((u.u_work - 10.0).abs() < 1e-12);
    }

    #[test]
    fn gap_example() {
        let c = unit();
        let p = TrainingParams {
            eps: 0.0,
            beta_w: 0.0,
            alpha_t: 1.0,
            n_tasks: 1,
            r: 1.0,
            delta: 0.9,
            ..Default::default()
        };
        let a = ActionPair::new(q(1.0), q(0.0));
        assert!((utility_gap(q(1.0), a, &p, &c) - 2.5).abs() < 1e-12);
        assert!((long_term_utilities(q(1.0), a, &p, &c).unwrap().gap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn long_term_rejects_invalid_params() {
        let c = unit();
        let p = TrainingParams { delta: 1.0, ..Default::default() };
        let a = ActionPair::new(q(1.0), q(1.0));
        assert!(long_term_utilities(q(1.0), a, &p, &c).is_err());
    }

    #[test]
    fn training_cost_reduces_to_working_cost_without_errors() {
        let p = TrainingParams { beta_w: 0.0, r: 1.0, ..Default::default() };
        assert_eq!(mechanism_cost_training(&p, q(0.0)).unwrap(), 3.0);
        let p = TrainingParams { beta_w: 1.0, alpha_w: 0.5, eps: 0.01, alpha_t: 0.5, n_tasks: 4, ..Default::default() };
        let exact = mechanism_cost_training(&p, q(0.0)).unwrap();
        assert!(exact > super::super::working_state_cost(&p));
    }
}
