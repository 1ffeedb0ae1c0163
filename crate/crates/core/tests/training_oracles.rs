use crowd_incentives::training::{
    best_response, immediate_utilities, long_term_utilities, p_train_pass, p_work_accept, solve_worker_mdp,
    ActionPair, TrainingParams, ValueIteration,
};
use crowd_incentives::{quality_grid, QuadraticCost, Quality};

fn cases() -> Vec<(TrainingParams, QuadraticCost, Quality)> {
    let q = |v| Quality::new(v).unwrap();
    vec![
        (TrainingParams { beta_w: 0.5, alpha_w: 0.5, r: 1.0, alpha_t: 0.8, n_tasks: 3, ..Default::default() }, QuadraticCost::new(1.0).unwrap(), q(1.0)),
        (TrainingParams { beta_w: 1.0, alpha_w: 0.3, r: 2.0, alpha_t: 1.0, n_tasks: 1, ..Default::default() }, QuadraticCost::new(0.5).unwrap(), q(0.4)),
        (TrainingParams { beta_w: 0.0, r: 0.7, alpha_t: 0.2, n_tasks: 6, delta: 0.7, ..Default::default() }, QuadraticCost::new(2.0).unwrap(), q(0.9)),
        (TrainingParams { beta_w: 0.2, alpha_w: 1.0, r: 3.0, alpha_t: 0.6, n_tasks: 2, eps: 0.2, delta: 0.95, ..Default::default() }, QuadraticCost::new(1.0).unwrap(), q(0.0)),
    ]
}

/// 500 steps of finite-horizon backward induction over the same grid.
#[test]
fn value_iteration_matches_backward_induction() {
    let grid_n = 40;
    for (p, c, qt) in cases() {
        let grid = quality_grid(grid_n);
        let (mut vw, mut vt) = (0.0f64, 0.0f64);
        for _ in 0..500 {
            let step = |state_work: bool| {
                grid.iter()
                    .map(|&q| {
                        let (bw, bt) = immediate_utilities(qt, q, q, &p, &c);
                        let (reward, to_work) =
                            if state_work { (bw, p_work_accept(qt, q, &p)) } else { (bt, p_train_pass(q, &p)) };
                        reward + p.delta * (to_work * vw + (1.0 - to_work) * vt)
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            (vw, vt) = (step(true), step(false));
        }
        let sol = solve_worker_mdp(qt, &p, &c, &ValueIteration::new(grid_n)).unwrap();
        assert!((sol.values.u_work - vw).abs() < 1e-8 * (1.0 + vw.abs()), "{p:?}: {} vs {vw}", sol.values.u_work);
        assert!((sol.values.u_train - vt).abs() < 1e-8 * (1.0 + vt.abs()), "{p:?}: {} vs {vt}", sol.values.u_train);
    }
}

/// Every stationary grid policy is evaluated exactly; none beats the
/// returned best response in either state.
#[test]
fn best_response_beats_every_grid_policy() {
    let grid_n = 20;
    for (p, c, qt) in cases() {
        let br = best_response(qt, &p, &c, grid_n).unwrap();
        let best = long_term_utilities(qt, br, &p, &c).unwrap();
        let grid = quality_grid(grid_n);
        for &qw in &grid {
            for &qtr in &grid {
                let u = long_term_utilities(qt, ActionPair::new(qw, qtr), &p, &c).unwrap();
                let slack = 1e-9 * (1.0 + best.u_work.abs().max(best.u_train.abs()));
                assert!(u.u_work <= best.u_work + slack, "{p:?}: ({qw}, {qtr}) beats {br:?} in work");
                assert!(u.u_train <= best.u_train + slack, "{p:?}: ({qw}, {qtr}) beats {br:?} in training");
            }
        }
    }
}

#[test]
fn value_iteration_contracts() {
    for (p, c, qt) in cases() {
        let sol = solve_worker_mdp(qt, &p, &c, &ValueIteration::default()).unwrap();
        assert!(sol.iterations() <= ValueIteration::default().max_iterations(p.delta));
        for w in sol.sup_changes.windows(2) {
            assert!(w[1] <= p.delta * w[0] * (1.0 + 1e-9) + 1e-12, "{w:?}");
        }
    }
}
