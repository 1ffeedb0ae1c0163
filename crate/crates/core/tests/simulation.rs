use rand::{RngExt, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crowd_incentives::basic::{consensus_probability, AccuracyParams, ConsensusParams};
use crowd_incentives::sim::{replicate, simulate, Mechanism, SimConfig};
use crowd_incentives::training::{p_train_pass, p_work_accept, stationary_working_prob, ActionPair, TrainingParams};
use crowd_incentives::{QuadraticCost, Quality};

fn q(v: f64) -> Quality {
    Quality::new(v).unwrap()
}

fn cost() -> QuadraticCost {
    QuadraticCost::new(1.0).unwrap()
}

fn training_config(p: TrainingParams, policy: ActionPair, seed: u64) -> SimConfig {
    SimConfig { mechanism: Mechanism::Training(p), policy, population: 2000, horizon: 200, seed, replications: 1 }
}

#[test]
fn same_seed_same_result() {
    let p = TrainingParams { beta_w: 0.5, alpha_w: 0.5, alpha_t: 0.7, n_tasks: 3, ..Default::default() };
    let cfg = training_config(p, ActionPair::new(q(0.8), q(0.6)), 42);
    assert_eq!(simulate(&cfg, &cost()).unwrap(), simulate(&cfg, &cost()).unwrap());
    let other = simulate(&SimConfig { seed: 43, ..cfg }, &cost()).unwrap();
    assert_ne!(simulate(&cfg, &cost()).unwrap(), other);
}

#[test]
fn perfect_spot_checks_accept_everything_at_quality_one() {
    let p = AccuracyParams::new(1.0, 2.0, 0.0, 5.0).unwrap();
    let cfg = SimConfig {
        mechanism: Mechanism::Accuracy(p),
        policy: ActionPair::new(Quality::ONE, Quality::ZERO),
        population: 500,
        horizon: 50,
        seed: 1,
        replications: 1,
    };
    let res = simulate(&cfg, &cost()).unwrap();
    assert_eq!(res.empirical_work_accept_rate.mean, 1.0);
    assert_eq!(res.cost_per_task.mean, 7.0);
    assert!(res.empirical_train_pass_rate.is_none());
    assert!(res.discounted_utility_estimate.is_none());
}

#[test]
fn consensus_acceptance_matches_panel_probability() {
    let p = ConsensusParams::new(4, 1.0).unwrap();
    let cfg = SimConfig {
        mechanism: Mechanism::Consensus(p),
        policy: ActionPair::new(q(0.7), Quality::ZERO),
        population: 3000,
        horizon: 100,
        seed: 9,
        replications: 1,
    };
    let res = simulate(&cfg, &cost()).unwrap();
    let want = 0.7 * consensus_probability(4, q(0.7)).unwrap();
    assert!(res.empirical_work_accept_rate.within(want, 4.0), "{:?} vs {want}", res.empirical_work_accept_rate);
}

/// Solves `pi = delta (pi P_w + (1 - pi) P_t) + (1 - delta) pi0` for an
/// arbitrary symmetric policy.
fn fixed_point_occupancy(p: &TrainingParams, a: ActionPair) -> f64 {
    let pw = p_work_accept(a.q_w, a.q_w, p);
    let pt = p_train_pass(a.q_t, p);
    (p.delta * pt + (1.0 - p.delta) * p.pi0_w) / (1.0 - p.delta * (pw - pt))
}

#[test]
fn stationary_closed_form_matches_fixed_point_at_quality_one() {
    let p = TrainingParams { beta_w: 0.7, alpha_w: 0.4, alpha_t: 0.6, n_tasks: 3, pi0_w: 0.2, eps: 0.1, ..Default::default() };
    let a = ActionPair::new(Quality::ONE, q(0.6));
    let exact = stationary_working_prob(&p, a.q_t).unwrap().exact;
    assert!((exact - fixed_point_occupancy(&p, a)).abs() < 1e-12);
}

#[test]
fn estimates_are_unbiased_over_random_configs() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2024);
    for i in 0..10 {
        let p = TrainingParams {
            beta_w: rng.random(),
            alpha_w: rng.random(),
            alpha_t: rng.random(),
            n_tasks: rng.random_range(1..=5),
            eps: 0.2 * rng.random::<f64>(),
            delta: 0.5 + 0.45 * rng.random::<f64>(),
            pi0_w: rng.random(),
            ..Default::default()
        };
        let policy = ActionPair::new(q(rng.random()), q(rng.random()));
        let res = simulate(&training_config(p, policy, 100 + i), &cost()).unwrap();
        let accept = p_work_accept(policy.q_w, policy.q_w, &p);
        assert!(res.empirical_work_accept_rate.within(accept, 4.0), "{p:?}: {:?} vs {accept}", res.empirical_work_accept_rate);
        if let Some(pass) = res.empirical_train_pass_rate {
            let want = p_train_pass(policy.q_t, &p);
            assert!(pass.within(want, 4.0), "{p:?}: {pass:?} vs {want}");
        }
        let occ = fixed_point_occupancy(&p, policy);
        assert!(res.tail_occupancy.within(occ, 4.0), "{p:?}: {:?} vs {occ}", res.tail_occupancy);
    }
}

#[test]
fn occupancy_stays_a_fraction() {
    let p = TrainingParams { beta_w: 1.0, alpha_w: 0.6, alpha_t: 1.0, n_tasks: 2, pi0_w: 0.3, ..Default::default() };
    let res = simulate(&training_config(p, ActionPair::new(q(0.5), q(0.5)), 5), &cost()).unwrap();
    assert_eq!(res.occupancy_trace.len(), 200);
    for &o in &res.occupancy_trace {
        assert!((0.0..=1.0).contains(&o));
        // Occupancy is a count over a population of 2000.
        assert!((o * 2000.0 - (o * 2000.0).round()).abs() < 1e-9);
    }
}

#[test]
fn replication_error_shrinks() {
    let p = TrainingParams { beta_w: 0.5, alpha_w: 0.5, alpha_t: 0.5, n_tasks: 2, ..Default::default() };
    let base = SimConfig { population: 300, horizon: 60, ..training_config(p, ActionPair::new(q(0.9), q(0.5)), 7) };
    // A standard error from four runs is itself noisy, so average over
    // several base seeds.
    let se: Vec<f64> = [4, 16, 64]
        .iter()
        .map(|&n| {
            (0..8u64)
                .map(|s| {
                    let cfg = SimConfig { replications: n, seed: 1000 * s, ..base };
                    replicate(&cfg, &cost()).unwrap().empirical_work_accept_rate.se
                })
                .sum::<f64>()
        })
        .collect();
    assert!(se[0] > se[1] && se[1] > se[2], "{se:?}");
}

#[test]
fn replicate_needs_two_runs() {
    let cfg = training_config(TrainingParams::default(), ActionPair::new(Quality::ONE, Quality::ONE), 0);
    assert!(replicate(&cfg, &cost()).is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    let good = training_config(TrainingParams::default(), ActionPair::new(Quality::ONE, Quality::ONE), 0);
    for bad in [
        SimConfig { population: 2, ..good },
        SimConfig { horizon: 0, ..good },
        SimConfig { replications: 0, ..good },
        SimConfig { mechanism: Mechanism::Consensus(ConsensusParams { k: 4, r: 1.0 }), population: 4, ..good },
        SimConfig { mechanism: Mechanism::Training(TrainingParams { delta: 1.0, ..Default::default() }), ..good },
    ] {
        assert!(simulate(&bad, &cost()).is_err(), "{bad:?}");
    }
}
