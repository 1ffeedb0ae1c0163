use crate::cost::{CostModel, Quality};
use crate::error::{check_eps, check_nonneg, check_unit, Result};

use super::CostReport;

/// Spot-check mechanism: each submission is validated with probability
/// `alpha_a` at cost `d`; the validator errs with probability `eps`.
/// Unchecked and accepted submissions earn `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyParams {
    pub alpha_a: f64,
    pub r: f64,
    pub eps: f64,
    pub d: f64,
}

impl AccuracyParams {
    pub fn new(alpha_a: f64, r: f64, eps: f64, d: f64) -> Result<Self> {
        let p = AccuracyParams { alpha_a, r, eps, d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("alpha_a", self.alpha_a)?;
        check_nonneg("r", self.r)?;
        check_eps(self.eps)?;
        check_nonneg("d", self.d)
    }
}

pub fn utility_accuracy<C: CostModel>(q: Quality, p: &AccuracyParams, cost: &C) -> f64 {
    let q = q.get();
    let paid = (1.0 - p.alpha_a) + p.alpha_a * (1.0 - p.eps) * q + p.alpha_a * p.eps * (1.0 - q);
    p.r * paid - cost.cost(Quality::clamped(q))
}

/// Maximiser of [`utility_accuracy`]. The utility is concave, so this is
/// the clamped root of `r alpha_a (1 - 2 eps) = c'(q)`.
pub fn optimal_action_accuracy<C: CostModel>(p: &AccuracyParams, cost: &C) -> Quality {
    cost.inverse_marginal(p.r * p.alpha_a * (1.0 - 2.0 * p.eps))
}

/// Expected spend per task when workers choose quality 1.
pub fn mechanism_cost_accuracy(p: &AccuracyParams) -> f64 {
    (1.0 - p.alpha_a * p.eps) * p.r + p.alpha_a * p.d
}

/// Cheapest `(alpha_a, r)` that makes quality 1 optimal, in closed form.
///
/// With `m = c'(1) / (1 - 2 eps)` the constraint is `alpha_a r >= m`. When
/// `d >= m` the optimum sits on that boundary at `alpha_a = sqrt(m / d)`;
/// otherwise every submission is checked.
pub fn min_cost_accuracy<C: CostModel>(d: f64, eps: f64, cost: &C) -> Result<CostReport<AccuracyParams>> {
    check_nonneg("d", d)?;
    check_eps(eps)?;
    let m = cost.marginal_cost(Quality::ONE) / (1.0 - 2.0 * eps);
    let (alpha_a, r, mechanism_cost) = if d >= m {
        ((m / d).sqrt(), (m * d).sqrt(), 2.0 * (m * d).sqrt() - eps * m)
    } else {
        (1.0, m, m * (1.0 - eps) + d)
    };
    let params = AccuracyParams { alpha_a, r, eps, d };
    Ok(CostReport {
        mechanism_cost,
        // alpha_a r = m holds up to rounding, so compare the condition
        // directly rather than through inverse_marginal.
        achieves_q1: alpha_a * r * (1.0 - 2.0 * eps)
            >= cost.marginal_cost(Quality::ONE) * (1.0 - 1e-12),
        optimal_params: params,
    })
}
