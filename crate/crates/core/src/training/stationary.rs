use crate::cost::Quality;
use crate::error::Result;

use super::dynamics::{p_train_pass, p_work_accept};
use super::TrainingParams;

/// Long-run probability of a worker being in the working state when
/// everyone plays `(1, q_hat_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryDistribution {
    pub exact: f64,
    /// Bound that holds for every `q_hat_t`.
    pub lower_bound: f64,
}

pub fn stationary_working_prob(p: &TrainingParams, q_hat_t: Quality) -> Result<StationaryDistribution> {
    p.validate()?;
    let delta = p.delta;
    let pw = p_work_accept(Quality::ONE, Quality::ONE, p);
    let pt = p_train_pass(q_hat_t, p);
    // Written as one minus the training share so that the degenerate
    // cases (no demotions, newcomers start working) come out as exactly 1.
    let den = 1.0 - delta * (pw - pt);
    let exact = 1.0 - ((1.0 - delta) * (1.0 - p.pi0_w) + delta * (1.0 - pw)) / den;
    let demotion = p.beta_w * p.alpha_w * p.eps;
    let lower_bound = ((1.0 - delta) * p.pi0_w + delta * (1.0 - p.alpha_t))
        / (1.0 - delta + delta * demotion + delta * (1.0 - p.alpha_t));
    Ok(StationaryDistribution {
        exact,
        lower_bound,
    })
}

/// Iterates the per-slot update of the working-state probability,
/// starting from `pi0_w`:
///
/// ```text
/// π(n+1) = δ π(n) P_w(1,1) + δ (1 - π(n)) P_t(q̂_t) + (1 - δ) π0
/// ```
#[derive(Debug, Clone)]
pub struct StateDistribution {
    current: f64,
    pw: f64,
    pt: f64,
    delta: f64,
    pi0: f64,
}

impl StateDistribution {
    pub fn new(p: &TrainingParams, q_hat_t: Quality) -> Result<Self> {
        p.validate()?;
        Ok(StateDistribution {
            current: p.pi0_w,
            pw: p_work_accept(Quality::ONE, Quality::ONE, p),
            pt: p_train_pass(q_hat_t, p),
            delta: p.delta,
            pi0: p.pi0_w,
        })
    }
}

impl Iterator for StateDistribution {
    type Item = f64;

    /// Yields `π(0), π(1), ...`.
    fn next(&mut self) -> Option<f64> {
        let out = self.current;
        self.current = self.delta * self.current * self.pw
            + self.delta * (1.0 - self.current) * self.pt
            + (1.0 - self.delta) * self.pi0;
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consensus_only_keeps_everyone_working() {
        for alpha_t in [0.0, 0.4, 1.0] {
            for qt in [0.0, 0.5, 1.0] {
                let p = TrainingParams { beta_w: 0.0, alpha_t, n_tasks: 3, ..Default::default() };
                let s = stationary_working_prob(&p, Quality::new(qt).unwrap()).unwrap();
                assert_eq!(s.exact, 1.0);
            }
        }
    }

    #[test]
    fn perfect_validator_keeps_everyone_working() {
        let p = TrainingParams { beta_w: 1.0, alpha_w: 0.7, eps: 0.0, alpha_t: 0.5, ..Default::default() };
        assert_eq!(stationary_working_prob(&p, Quality::ZERO).unwrap().exact, 1.0);
    }

    #[test]
    fn lower_bound_example() {
        let p = TrainingParams { delta: 0.9, beta_w: 1.0, alpha_w: 0.9, eps: 0.01, alpha_t: 0.5, pi0_w: 1.0, ..Default::default() };
        let s = stationary_working_prob(&p, Quality::ZERO).unwrap();
        assert!((s.lower_bound - 0.55 / 0.5581).abs() < 1e-12);
        assert!(s.exact >= s.lower_bound);
    }

    #[test]
    fn iteration_reaches_closed_form() {
        let p = TrainingParams { beta_w: 1.0, alpha_w: 0.9, alpha_t: 0.5, n_tasks: 4, pi0_w: 0.3, ..Default::default() };
        let q = Quality::new(0.6).unwrap();
        let exact = stationary_working_prob(&p, q).unwrap().exact;
        let last = StateDistribution::new(&p, q).unwrap().nth(500).unwrap();
        assert!((last - exact).abs() < 1e-12);
    }
}
