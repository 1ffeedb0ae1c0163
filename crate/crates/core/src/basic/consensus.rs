use crate::cost::{quality_grid, CostModel, Quality};
use crate::error::{check_nonneg, Error, Result};

use super::CostReport;

/// Largest panel for which the binomial sum is evaluated.
pub const MAX_CONSENSUS_K: u32 = 20;

/// A task goes to `k + 1` workers; everyone who submits the majority
/// solution earns `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusParams {
    pub k: u32,
    pub r: f64,
}

impl ConsensusParams {
    pub fn new(k: u32, r: f64) -> Result<Self> {
        let p = ConsensusParams { k, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.k % 2 != 0 {
            return Err(Error::domain(format!("K = {} must be even and at least 2", self.k)));
        }
        check_nonneg("r", self.r)
    }
}

fn binomial(n: u32, k: u32) -> u64 {
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut acc = 1u64;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Probability that at least `K/2` of the `K` peers submit the acceptable
/// solution when each does so independently with probability `q_tilde`.
///
/// Unacceptable solutions never coincide, so a consensus can only form
/// around the acceptable one.
pub fn consensus_probability(k: u32, q_tilde: Quality) -> Result<f64> {
    if k > MAX_CONSENSUS_K {
        return Err(Error::Overflow { k, max: MAX_CONSENSUS_K });
    }
    let p = q_tilde.get();
    let sum = (k / 2..=k)
        .map(|n| binomial(k, n) as f64 * p.powi(n as i32) * (1.0 - p).powi((k - n) as i32))
        .sum::<f64>();
    Ok(sum.min(1.0))
}

/// Utility of a worker choosing `q` while all peers choose `q_tilde`.
pub fn utility_consensus<C: CostModel>(
    q: Quality,
    q_tilde: Quality,
    p: &ConsensusParams,
    cost: &C,
) -> Result<f64> {
    p.validate()?;
    Ok(p.r * q.get() * consensus_probability(p.k, q_tilde)? - cost.cost(q))
}

/// Quality 1 is a symmetric equilibrium exactly when `r >= c'(1)`,
/// independently of the panel size.
pub fn is_sne_consensus_q1<C: CostModel>(p: &ConsensusParams, cost: &C) -> bool {
    p.r >= cost.marginal_cost(Quality::ONE)
}

const SCAN_STEP: f64 = 1e-3;
const BISECT_TOL: f64 = 1e-10;

/// All roots in `[0, 1]` of the symmetric first-order condition of the
/// three-worker panel, `r (2q - q²) = c'(q)`, in increasing order.
///
/// Roots are bracketed by a scan at `1e-3` resolution and refined by
/// bisection to `1e-10`.
pub fn consensus_roots<C: CostModel>(r: f64, cost: &C) -> Vec<f64> {
    let f = |q: f64| r * (2.0 * q - q * q) - cost.marginal_cost(Quality::clamped(q));
    let steps = (1.0 / SCAN_STEP).round() as usize;
    let mut roots: Vec<f64> = Vec::new();
    let push = |x: f64, roots: &mut Vec<f64>| {
        if roots.last().is_none_or(|&last| (x - last).abs() > 10.0 * BISECT_TOL) {
            roots.push(x);
        }
    };

    let mut lo = 0.0;
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        push(lo, &mut roots);
    }
    for i in 1..=steps {
        let hi = if i == steps { 1.0 } else { i as f64 * SCAN_STEP };
        let f_hi = f(hi);
        if f_hi == 0.0 {
            push(hi, &mut roots);
        } else if f_lo != 0.0 && (f_lo < 0.0) != (f_hi < 0.0) {
            let (mut a, mut b, mut fa) = (lo, hi, f_lo);
            while b - a > BISECT_TOL {
                let mid = 0.5 * (a + b);
                let fm = f(mid);
                if fm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if (fm < 0.0) == (fa < 0.0) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            push(0.5 * (a + b), &mut roots);
        }
        lo = hi;
        f_lo = f_hi;
    }
    roots
}

/// True when `q_hat` is a best response to peers playing `q_hat` in the
/// three-worker panel, checked against a 1001-point grid of deviations.
fn is_best_response<C: CostModel>(q_hat: Quality, r: f64, cost: &C) -> bool {
    let p = ConsensusParams { k: 2, r };
    let u = |q: Quality| utility_consensus(q, q_hat, &p, cost).expect("K = 2 is valid");
    let own = u(q_hat);
    let best = quality_grid(1000).into_iter().map(u).fold(f64::NEG_INFINITY, f64::max);
    own >= best - 1e-9 * (1.0 + best.abs())
}

/// Symmetric equilibrium quality of the three-worker consensus mechanism
/// at reward `r`.
///
/// Returns 1 whenever `r >= c'(1)`. Otherwise returns the largest root of
/// the first-order condition that survives a best-response check, and 0
/// when no root does.
pub fn equilibrium_consensus<C: CostModel>(r: f64, cost: &C) -> Result<Quality> {
    check_nonneg("r", r)?;
    if r >= cost.marginal_cost(Quality::ONE) {
        return Ok(Quality::ONE);
    }
    Ok(consensus_roots(r, cost)
        .into_iter()
        .rev()
        .map(Quality::clamped)
        .find(|&q| is_best_response(q, r, cost))
        .unwrap_or(Quality::ZERO))
}

/// `(K + 1) r`: every panel member is paid when quality is 1.
pub fn mechanism_cost_consensus(p: &ConsensusParams) -> f64 {
    (p.k as f64 + 1.0) * p.r
}

/// Cheapest consensus mechanism achieving quality 1: `K = 2`, `r = c'(1)`.
pub fn min_cost_consensus<C: CostModel>(cost: &C) -> CostReport<ConsensusParams> {
    let params = ConsensusParams {
        k: 2,
        r: cost.marginal_cost(Quality::ONE),
    };
    CostReport {
        mechanism_cost: mechanism_cost_consensus(&params),
        achieves_q1: is_sne_consensus_q1(&params, cost),
        optimal_params: params,
    }
}
