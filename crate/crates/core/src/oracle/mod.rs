//! Brute-force reference computations on small finite CMDPs.

mod cmdp;
mod exact;
mod numeric;

pub use cmdp::{TabularCmdp, DEFAULT_ENUMERATION_CAP};
pub use exact::{
    enumerate_trajectories, estimator_expectation, exact_cost_distribution, exact_lagrangian,
    exact_performance, exact_risk_j,
};
pub use numeric::{
    fd_gradient, gauss_hermite, gaussian_expectation, grid_search, Goal, GRID_POINT_CAP,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{rollout, Environment};
    use crate::estimators::{Aggregation, RiskTerm};
    use crate::policy::{Policy, TabularSoftmaxPolicy};
    use crate::risk::RiskMeasure;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain() -> TabularCmdp<f64> {
        // two states, action 1 moves to the other state, action 0 stays
        let transition = vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        TabularCmdp::new(
            2,
            2,
            transition,
            vec![-0.5, -1.0, 0.0, -0.25],
            vec![vec![0.0, 1.0, 0.5, 0.0]],
            vec![1.0, 0.0],
            1.0,
            2,
        )
        .unwrap()
    }

    #[test]
    fn deterministic_chain_counts() {
        let policy = TabularSoftmaxPolicy::new(2, 2, vec![0.0, 1.0, -0.5, 0.5], 1.0).unwrap();
        let trajs = enumerate_trajectories(&chain(), &policy).unwrap();
        assert_eq!(trajs.len(), 4);
        let total: f64 = trajs.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (t, p) in &trajs {
            let s1 = t.states[1].index.unwrap();
            let a0 = match t.actions[0] {
                crate::env::Action::Discrete(a) => a,
                _ => unreachable!(),
            };
            let a1 = match t.actions[1] {
                crate::env::Action::Discrete(a) => a,
                _ => unreachable!(),
            };
            let expect = policy.probs(0)[a0] * policy.probs(s1)[a1];
            assert!((p - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_symmetric_chain_is_uniform() {
        let t = vec![0.5_f64; 8];
        let cmdp =
            TabularCmdp::new(2, 2, t, vec![-0.5; 4], vec![], vec![0.5, 0.5], 1.0, 2).unwrap();
        let trajs = enumerate_trajectories(&cmdp, &TabularSoftmaxPolicy::uniform(2, 2)).unwrap();
        assert_eq!(trajs.len(), 2 * 2 * 2 * 2);
        assert!(trajs.iter().all(|(_, p)| (p - 1.0 / 16.0).abs() < 1e-15));
    }

    #[test]
    fn random_cmdps_are_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let cmdp = TabularCmdp::<f64>::random(3, 2, 1, 3, 0.9, &mut rng).unwrap();
            let theta: Vec<f64> = (0..6).map(|i| (i as f64 * 0.37).sin()).collect();
            let policy = TabularSoftmaxPolicy::new(3, 2, theta, 1.0).unwrap();
            let total: f64 = enumerate_trajectories(&cmdp, &policy)
                .unwrap()
                .iter()
                .map(|(_, p)| p)
                .sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cmdp = TabularCmdp::<f64>::random(3, 2, 1, 10, 1.0, &mut rng).unwrap();
        assert!(matches!(
            enumerate_trajectories(&cmdp, &TabularSoftmaxPolicy::uniform(3, 2)),
            Err(crate::Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn performance_identities() {
        let cmdp = chain();
        let policy = TabularSoftmaxPolicy::new(2, 2, vec![0.2, -0.3, 0.1, 0.4], 1.0).unwrap();
        let neg_return: f64 = enumerate_trajectories(&cmdp, &policy)
            .unwrap()
            .iter()
            .map(|(t, p)| -p * t.discounted_return(1.0))
            .sum();
        assert!((exact_performance(&cmdp, &policy, 0).unwrap() - neg_return).abs() < 1e-15);
        let ec = RiskTerm::new(RiskMeasure::ExpectedCost, Aggregation::DiscountedSum, 1);
        assert_eq!(
            exact_risk_j(&cmdp, &policy, &ec, 0.0).unwrap(),
            exact_performance(&cmdp, &policy, 1).unwrap()
        );
        let cvar = RiskTerm::new(
            RiskMeasure::cvar(0.8).unwrap(),
            Aggregation::DiscountedSum,
            1,
        );
        assert_eq!(exact_risk_j(&cmdp, &policy, &cvar, 5.0).unwrap(), 5.0);
    }

    #[test]
    fn zero_cost_and_deterministic_cases() {
        let t = vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        let cmdp = TabularCmdp::new(
            2,
            2,
            t.clone(),
            vec![-0.5; 4],
            vec![vec![0.0; 4]],
            vec![1.0, 0.0],
            1.0,
            3,
        )
        .unwrap();
        let policy = TabularSoftmaxPolicy::uniform(2, 2);
        assert_eq!(exact_performance(&cmdp, &policy, 1).unwrap(), 0.0);
        // one action: a single trajectory
        let single = TabularCmdp::<f64>::new(
            2,
            1,
            vec![0.0, 1.0, 1.0, 0.0],
            vec![-0.5, -0.1],
            vec![vec![0.3, 0.7]],
            vec![1.0, 0.0],
            1.0,
            3,
        )
        .unwrap();
        let trajs = enumerate_trajectories(&single, &TabularSoftmaxPolicy::uniform(2, 1)).unwrap();
        assert_eq!(trajs.len(), 1);
        assert!(
            (exact_performance(&single, &TabularSoftmaxPolicy::uniform(2, 1), 1).unwrap() - 1.3)
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn monte_carlo_agrees_with_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cmdp = TabularCmdp::<f64>::random(3, 2, 1, 3, 0.95, &mut rng).unwrap();
        let policy =
            TabularSoftmaxPolicy::new(3, 2, vec![0.5, -0.5, 0.0, 0.3, -0.2, 0.1], 1.0).unwrap();
        let exact = exact_performance(&cmdp, &policy, 1).unwrap();
        let n = 200_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                rollout(&cmdp, &policy, 3, &mut rng)
                    .unwrap()
                    .discounted_cost(1, 0.95)
                    .unwrap()
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - exact).abs() < 3.0 * (var / n as f64).sqrt());
        assert_eq!(cmdp.descriptor().num_constraints, 1);
    }

    #[test]
    fn score_expectation_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cmdp = TabularCmdp::<f64>::random(3, 2, 1, 3, 1.0, &mut rng).unwrap();
        let policy =
            TabularSoftmaxPolicy::new(3, 2, vec![0.7, -0.1, 0.2, 0.3, -0.6, 0.0], 1.0).unwrap();
        let e = estimator_expectation(&cmdp, &policy, |t| {
            let mut g = vec![0.0; 6];
            for (s, a) in t.states.iter().zip(&t.actions) {
                policy.accumulate_score(s, a, 1.0, &mut g)?;
            }
            Ok(g)
        })
        .unwrap();
        assert!(e.iter().all(|x| x.abs() < 1e-14));
        let c = estimator_expectation(&cmdp, &policy, |_| Ok(vec![2.5])).unwrap();
        assert!((c[0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn cvar_grid_minimum_matches_exact_measure() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cmdp = TabularCmdp::<f64>::random(2, 2, 1, 2, 1.0, &mut rng).unwrap();
        let policy = TabularSoftmaxPolicy::uniform(2, 2);
        let term = RiskTerm::new(
            RiskMeasure::cvar(0.7).unwrap(),
            Aggregation::DiscountedSum,
            1,
        );
        let dist = exact_cost_distribution(&cmdp, &policy, &term).unwrap();
        let target = crate::risk::exact_measure(&dist, &term.measure);
        let (_, v) = grid_search(
            |e: &[f64]| exact_risk_j(&cmdp, &policy, &term, e[0]).unwrap(),
            &[(0.0, 2.0)],
            1e-3,
            Goal::Minimize,
        )
        .unwrap();
        assert!(v >= target - 1e-12 && v - target <= 1e-3);
    }
}
