//! Worker cost functions.
//!
//! A worker producing a solution of quality `q` (the probability that the
//! solution is acceptable) pays `c(q)`. Every analysis in this crate only
//! touches the cost through [`CostModel`], so any function that is convex,
//! differentiable, strictly increasing and positive at zero can be plugged in.
//! [`QuadraticCost`] is the default family:
//!
//! ```text
//! c(q) = (q + λ)² / (λ + 1)²
//! ```
//!
//! normalised so that `c(1) = 1`. Smaller `λ` makes the cost more sensitive
//! to quality.

use std::fmt;

use crate::error::{Error, Result};

/// Probability that a submitted solution is acceptable.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Quality(f64);

impl Quality {
    pub const ZERO: Quality = Quality(0.0);
    pub const ONE: Quality = Quality(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Quality(value))
        } else {
            Err(Error::domain(format!("quality {value} must lie in [0, 1]")))
        }
    }

    /// Clamps into `[0, 1]`. NaN maps to zero.
    pub fn clamped(value: f64) -> Self {
        if value.is_nan() {
            Quality(0.0)
        } else {
            Quality(value.clamp(0.0, 1.0))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<Quality> for f64 {
    fn from(q: Quality) -> f64 {
        q.0
    }
}

/// Uniform grid `0, 1/n, ..., 1` with `n + 1` points. The last point is
/// exactly 1.
pub fn quality_grid(n: usize) -> Vec<Quality> {
    assert!(n >= 1, "grid needs at least two points");
    (0..=n)
        .map(|i| {
            if i == n {
                Quality::ONE
            } else {
                Quality(i as f64 / n as f64)
            }
        })
        .collect()
}

/// Cost of producing solutions of a given quality.
pub trait CostModel {
    fn cost(&self, q: Quality) -> f64;

    fn marginal_cost(&self, q: Quality) -> f64;

    /// Quality whose marginal cost equals `m`, clamped to `[0, 1]`.
    ///
    /// This solves first-order conditions of the form `slope = c'(q)` for
    /// objectives that are linear in `q` minus the convex cost.
    fn inverse_marginal(&self, m: f64) -> Quality;
}

impl<C: CostModel + ?Sized> CostModel for &C {
    fn cost(&self, q: Quality) -> f64 {
        (**self).cost(q)
    }
    fn marginal_cost(&self, q: Quality) -> f64 {
        (**self).marginal_cost(q)
    }
    fn inverse_marginal(&self, m: f64) -> Quality {
        (**self).inverse_marginal(m)
    }
}

/// `c(q) = (q + λ)² / (λ + 1)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCost {
    lambda: f64,
    norm: f64,
}

impl QuadraticCost {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!("lambda = {lambda} must be positive and finite")));
        }
        Ok(QuadraticCost {
            lambda,
            norm: (lambda + 1.0) * (lambda + 1.0),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl CostModel for QuadraticCost {
    fn cost(&self, q: Quality) -> f64 {
        let s = q.get() + self.lambda;
        s * s / self.norm
    }

    fn marginal_cost(&self, q: Quality) -> f64 {
        2.0 * (q.get() + self.lambda) / self.norm
    }

    fn inverse_marginal(&self, m: f64) -> Quality {
        Quality::clamped(self.norm * m / 2.0 - self.lambda)
    }
}

/// Grid size and tolerance used by [`check_assumptions`].
pub const ASSUMPTION_GRID: usize = 100;
pub const ASSUMPTION_TOL: f64 = 1e-9;

/// Verifies the structural assumptions every analysis relies on: convexity,
/// strictly positive marginal cost and a positive cost at zero quality.
/// The check runs on a 101-point uniform grid.
pub fn check_assumptions<C: CostModel + ?Sized>(model: &C) -> Result<()> {
    let grid = quality_grid(ASSUMPTION_GRID);
    let c0 = model.cost(Quality::ZERO);
    if !(c0 > 0.0) {
        return Err(Error::domain(format!("cost at zero quality must be positive, got {c0}")));
    }
    for q in &grid {
        let m = model.marginal_cost(*q);
        if !(m > 0.0) {
            return Err(Error::domain(format!("marginal cost must be positive, got {m} at q = {q}")));
        }
    }
    for w in grid.windows(3) {
        let second = model.cost(w[2]) - 2.0 * model.cost(w[1]) + model.cost(w[0]);
        if second < -ASSUMPTION_TOL {
            return Err(Error::domain(format!(
                "cost is not convex around q = {}: second difference {second}",
                w[1]
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: f64) -> Quality {
        Quality::new(v).unwrap()
    }

    #[test]
    fn quadratic_cost_values() {
        let c = QuadraticCost::new(1.0).unwrap();
        assert_eq!(c.cost(Quality::ONE), 1.0);
        assert_eq!(c.cost(Quality::ZERO), 0.25);
        assert_eq!(c.cost(q(0.5)), 0.5625);
        for lambda in [0.01, 0.5, 1.0, 2.0, 37.0] {
            assert_eq!(QuadraticCost::new(lambda).unwrap().cost(Quality::ONE), 1.0);
        }
    }

    #[test]
    fn marginal_cost_values() {
        let c = QuadraticCost::new(1.0).unwrap();
        assert_eq!(c.marginal_cost(Quality::ONE), 1.0);
        assert_eq!(c.marginal_cost(Quality::ZERO), 0.5);
        let c = QuadraticCost::new(0.5).unwrap();
        assert!((c.marginal_cost(Quality::ONE) - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn marginal_matches_finite_difference() {
        let h = 1e-6;
        for lambda in [0.5, 1.0, 2.0] {
            let c = QuadraticCost::new(lambda).unwrap();
            for i in 1..100 {
                let x = i as f64 / 100.0;
                let fd = (c.cost(q(x + h)) - c.cost(q(x - h))) / (2.0 * h);
                assert!((fd - c.marginal_cost(q(x))).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn inverse_marginal_clamps() {
        let c = QuadraticCost::new(1.0).unwrap();
        let m = c.marginal_cost(q(0.7));
        assert!((c.inverse_marginal(m).get() - 0.7).abs() < 1e-12);
        assert_eq!(c.inverse_marginal(0.0), Quality::ZERO);
        assert_eq!(c.inverse_marginal(10.0), Quality::ONE);
    }

    #[test]
    fn domain_errors() {
        assert!(Quality::new(1.2).is_err());
        assert!(Quality::new(-0.1).is_err());
        assert!(Quality::new(f64::NAN).is_err());
        assert!(QuadraticCost::new(0.0).is_err());
        assert!(QuadraticCost::new(-1.0).is_err());
    }

    #[test]
    fn quadratic_family_passes_assumptions() {
        for lambda in [0.05, 0.5, 1.0, 2.0, 10.0] {
            check_assumptions(&QuadraticCost::new(lambda).unwrap()).unwrap();
        }
    }

    struct Concave;
    impl CostModel for Concave {
        fn cost(&self, q: Quality) -> f64 {
            1.0 + q.get().sqrt()
        }
        fn marginal_cost(&self, q: Quality) -> f64 {
            0.5 / q.get().max(1e-12).sqrt()
        }
        fn inverse_marginal(&self, _m: f64) -> Quality {
            Quality::ZERO
        }
    }

    #[test]
    fn concave_cost_rejected() {
        assert!(matches!(check_assumptions(&Concave), Err(Error::Domain(_))));
    }

    #[test]
    fn grid_endpoints() {
        let g = quality_grid(100);
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], Quality::ZERO);
        assert_eq!(g[100], Quality::ONE);
    }
}
