use rand::{RngExt, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::training::TrainingParams;

use super::stats::{batch_means, ratio_estimate, sample_mean, Estimate};
use super::{Mechanism, SimConfig, SimResult};

const OCCUPANCY_BATCHES: usize = 20;

/// How a single working-state submission is validated.
#[derive(Clone, Copy)]
struct Validation {
    /// Probability the task goes to a consensus panel.
    consensus: f64,
    /// Peers on a consensus panel.
    k: usize,
    /// Spot-check probability for non-consensus tasks.
    alpha: f64,
    eps: f64,
    d: f64,
    r: f64,
}

/// Per-slot totals, one entry per slot.
#[derive(Default)]
struct SlotTotals {
    accepts: Vec<(f64, f64)>,
    passes: Vec<(f64, f64)>,
    spend: Vec<(f64, f64)>,
    utility: Vec<(f64, f64)>,
    occupancy: Vec<f64>,
}

struct Population {
    working: Vec<bool>,
    next_working: Vec<bool>,
    acceptable: Vec<bool>,
    lifetime_utility: Vec<f64>,
    entered_at: Vec<usize>,
    entered_working: Vec<bool>,
}

impl Population {
    fn new(n: usize, pi0: f64, rng: &mut Xoshiro256PlusPlus) -> Self {
        let working: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < pi0).collect();
        Population {
            entered_working: working.clone(),
            next_working: working.clone(),
            working,
            acceptable: vec![false; n],
            lifetime_utility: vec![0.0; n],
            entered_at: vec![0; n],
        }
    }
}

/// Draws `k` distinct members of `pool` other than `me`. Falls back to the
/// whole population when the pool is too small.
fn sample_peers(rng: &mut Xoshiro256PlusPlus, pool: &[usize], n: usize, me: usize, k: usize, out: &mut Vec<usize>) {
    out.clear();
    let pool_has_room = pool.len() > k;
    while out.len() < k {
        let cand = if pool_has_room {
            pool[rng.random_range(0..pool.len())]
        } else {
            rng.random_range(0..n)
        };
        if cand != me && !out.contains(&cand) {
            out.push(cand);
        }
    }
}

/// A validator that errs with probability `eps` judges a submission.
fn judged_acceptable(rng: &mut Xoshiro256PlusPlus, acceptable: bool, eps: f64) -> bool {
    let err = rng.random::<f64>() < eps;
    acceptable != err
}

/// Runs one replication with seed `cfg.seed`.
///
/// Each slot every working-state worker submits one task. With
/// probability `1 - beta_w` it joins a panel with peers sampled from the
/// working state and is paid if it and at least half the peers submitted
/// the acceptable solution; otherwise it is spot-checked with probability
/// `alpha_w`. Rejected workers move to training. A training-state worker
/// solves `n_tasks` training tasks; with probability `alpha_t` they are all
/// checked and must all pass, otherwise the worker passes outright. At the
/// end of the slot each worker leaves with probability `1 - delta` and is
/// replaced by a newcomer that starts working with probability `pi0_w`.
///
/// The basic mechanisms have no training state and no churn.
pub fn simulate<C: CostModel>(cfg: &SimConfig, cost: &C) -> Result<SimResult> {
    cfg.validate()?;
    let (validation, training) = match cfg.mechanism {
        Mechanism::Consensus(p) => (
            Validation { consensus: 1.0, k: p.k as usize, alpha: 0.0, eps: 0.0, d: 0.0, r: p.r },
            None,
        ),
        Mechanism::Accuracy(p) => (
            Validation { consensus: 0.0, k: 2, alpha: p.alpha_a, eps: p.eps, d: p.d, r: p.r },
            None,
        ),
        Mechanism::Training(p) => (
            Validation { consensus: 1.0 - p.beta_w, k: 2, alpha: p.alpha_w, eps: p.eps, d: p.d, r: p.r },
            Some(p),
        ),
    };
    let n = cfg.population;
    let q_w = cfg.policy.q_w.get();
    let q_t = cfg.policy.q_t.get();
    let work_cost = cost.cost(cfg.policy.q_w);
    let train_cost = training.map_or(0.0, |p| p.n_tasks as f64 * cost.cost(cfg.policy.q_t));
    let pi0 = training.map_or(1.0, |p| p.pi0_w);
    // Lifetimes starting after this slot may be cut off by the horizon.
    let cohort_cutoff = cfg.horizon / 2;

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(cfg.seed);
    let mut pop = Population::new(n, pi0, &mut rng);
    let mut totals = SlotTotals::default();
    let mut lifetimes = Vec::new();
    let mut pool = Vec::with_capacity(n);
    let mut peers = Vec::with_capacity(validation.k);

    for slot in 0..cfg.horizon {
        pool.clear();
        pool.extend((0..n).filter(|&i| pop.working[i]));
        totals.occupancy.push(pool.len() as f64 / n as f64);
        for a in pop.acceptable.iter_mut() {
            *a = rng.random::<f64>() < q_w;
        }

        let (mut attempts, mut accepted, mut tasks, mut spend, mut utility) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let (mut rounds, mut passed) = (0.0, 0.0);
        for i in 0..n {
            if pop.working[i] {
                let own = pop.acceptable[i];
                let ok = if rng.random::<f64>() < validation.consensus {
                    sample_peers(&mut rng, &pool, n, i, validation.k, &mut peers);
                    tasks += 1.0 / (validation.k as f64 + 1.0);
                    let agreeing = peers.iter().filter(|&&j| pop.acceptable[j]).count();
                    own && agreeing >= validation.k / 2
                } else {
                    tasks += 1.0;
                    if rng.random::<f64>() < validation.alpha {
                        spend += validation.d;
                        judged_acceptable(&mut rng, own, validation.eps)
                    } else {
                        true
                    }
                };
                let pay = if ok { validation.r } else { 0.0 };
                attempts += 1.0;
                accepted += f64::from(u8::from(ok));
                spend += pay;
                utility += pay - work_cost;
                pop.lifetime_utility[i] += pay - work_cost;
                pop.next_working[i] = ok || training.is_none();
            } else {
                let p = training.expect("only the training mechanism has a training state");
                rounds += 1.0;
                utility -= train_cost;
                pop.lifetime_utility[i] -= train_cost;
                let pass = if rng.random::<f64>() < p.alpha_t {
                    spend += p.n_tasks as f64 * p.d;
                    (0..p.n_tasks).all(|_| {
                        let acceptable = rng.random::<f64>() < q_t;
                        judged_acceptable(&mut rng, acceptable, p.eps)
                    })
                } else {
                    true
                };
                passed += f64::from(u8::from(pass));
                pop.next_working[i] = pass;
            }
        }
        totals.accepts.push((accepted, attempts));
        totals.passes.push((passed, rounds));
        totals.spend.push((spend, tasks));
        totals.utility.push((utility, n as f64));

        match training {
            Some(p) => churn(&mut pop, &p, slot, cohort_cutoff, &mut lifetimes, &mut rng),
            None => std::mem::swap(&mut pop.working, &mut pop.next_working),
        }
    }

    let tail = &totals.occupancy[cfg.horizon / 2..];
    Ok(SimResult {
        empirical_work_accept_rate: ratio_estimate(&totals.accepts).unwrap_or(Estimate::exact(0.0)),
        empirical_train_pass_rate: training.and_then(|_| ratio_estimate(&totals.passes)),
        tail_occupancy: batch_means(tail, OCCUPANCY_BATCHES),
        occupancy_trace: totals.occupancy,
        cost_per_task: ratio_estimate(&totals.spend).unwrap_or(Estimate::exact(0.0)),
        mean_worker_utility: ratio_estimate(&totals.utility).unwrap_or(Estimate::exact(0.0)),
        discounted_utility_estimate: training.and_then(|_| sample_mean(&lifetimes)),
    })
}

/// End-of-slot departures and replacements.
fn churn(
    pop: &mut Population,
    p: &TrainingParams,
    slot: usize,
    cohort_cutoff: usize,
    lifetimes: &mut Vec<f64>,
    rng: &mut Xoshiro256PlusPlus,
) {
    for i in 0..pop.working.len() {
        if rng.random::<f64>() < p.delta {
            pop.working[i] = pop.next_working[i];
        } else {
            if pop.entered_working[i] && pop.entered_at[i] <= cohort_cutoff {
                lifetimes.push(pop.lifetime_utility[i]);
            }
            let start = rng.random::<f64>() < p.pi0_w;
            pop.working[i] = start;
            pop.entered_working[i] = start;
            pop.entered_at[i] = slot + 1;
            pop.lifetime_utility[i] = 0.0;
        }
    }
}

/// Runs `cfg.replications` independent replications with seeds
/// `seed, seed + 1, ...` in parallel and reports the across-replication
/// mean and standard error of every statistic.
pub fn replicate<C: CostModel + Sync>(cfg: &SimConfig, cost: &C) -> Result<SimResult> {
    cfg.validate()?;
    if cfg.replications < 2 {
        return Err(Error::Config("replicate needs at least 2 replications".into()));
    }
    let runs = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|i| {
            let run = SimConfig { seed: cfg.seed.wrapping_add(i), ..*cfg };
            simulate(&run, cost)
        })
        .collect::<Result<Vec<_>>>()?;

    let across = |f: &dyn Fn(&SimResult) -> f64| {
        let xs: Vec<f64> = runs.iter().map(f).collect();
        sample_mean(&xs).expect("at least two replications")
    };
    let across_opt = |f: &dyn Fn(&SimResult) -> Option<Estimate>| {
        let xs: Option<Vec<f64>> = runs.iter().map(|r| f(r).map(|e| e.mean)).collect();
        xs.and_then(|xs| sample_mean(&xs))
    };
    let horizon = cfg.horizon;
    let occupancy_trace = (0..horizon)
        .map(|t| runs.iter().map(|r| r.occupancy_trace[t]).sum::<f64>() / runs.len() as f64)
        .collect();

    Ok(SimResult {
        empirical_work_accept_rate: across(&|r| r.empirical_work_accept_rate.mean),
        empirical_train_pass_rate: across_opt(&|r| r.empirical_train_pass_rate),
        occupancy_trace,
        tail_occupancy: across(&|r| r.tail_occupancy.mean),
        cost_per_task: across(&|r| r.cost_per_task.mean),
        mean_worker_utility: across(&|r| r.mean_worker_utility.mean),
        discounted_utility_estimate: across_opt(&|r| r.discounted_utility_estimate),
    })
}
