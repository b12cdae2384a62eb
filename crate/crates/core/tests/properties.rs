use cpg_core::env::{Action, State};
use cpg_core::oracle::{enumerate_trajectories, fd_gradient, TabularCmdp};
use cpg_core::policy::{GaussianHyperpolicy, LinearGaussianPolicy, Policy, TabularSoftmaxPolicy};
use cpg_core::risk::{exact_measure, DiscreteDist, RiskMeasure};
use cpg_core::solver::{
    h_omega_closed_form, lagrangian_value, lambda_radius, lambda_star_closed_form, project_lambda,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn cost_dist() -> impl Strategy<Value = DiscreteDist<f64>> {
    prop::collection::vec((0.0f64..5.0, 0.05f64..1.0), 1..8).prop_map(|atoms| {
        let z: f64 = atoms.iter().map(|a| a.1).sum();
        let (s, p) = atoms.into_iter().map(|(x, w)| (x, w / z)).unzip();
        DiscreteDist::new(s, p).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projection_lands_in_the_dual_set(
        raw in prop::collection::vec(-50.0f64..50.0, 1..5),
        omega in 0.01f64..3.0,
        j_max in 0.5f64..20.0,
    ) {
        let p = project_lambda(&raw, omega, j_max);
        let r = lambda_radius(omega, raw.len(), j_max).unwrap();
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!(norm(&p) <= r * (1.0 + 1e-12));
        let again = project_lambda(&p, omega, j_max);
        prop_assert!(dist(&again, &p) <= 1e-12 * (1.0 + norm(&p)));
    }

    #[test]
    fn projection_is_non_expansive(
        pair in (1usize..5).prop_flat_map(|u| (
            prop::collection::vec(-30.0f64..30.0, u),
            prop::collection::vec(-30.0f64..30.0, u),
        )),
        omega in 0.05f64..3.0,
    ) {
        let (x, y) = pair;
        let (px, py) = (project_lambda(&x, omega, 2.0), project_lambda(&y, omega, 2.0));
        prop_assert!(dist(&px, &py) <= dist(&x, &y) + 1e-12);
    }

    #[test]
    fn dual_maximizer_is_projected_scaled_slack(
        slack in prop::collection::vec(-1.0f64..1.0, 1..5),
        omega in 0.01f64..3.0,
    ) {
        let scaled: Vec<f64> = slack.iter().map(|s| s / omega).collect();
        let projected = project_lambda(&scaled, omega, 1.0);
        let closed = lambda_star_closed_form(&slack, omega).unwrap();
        prop_assert!(dist(&projected, &closed) <= 1e-12 * (1.0 + norm(&closed)));
    }

    #[test]
    fn primal_function_dominates_the_lagrangian(
        j0 in -3.0f64..3.0,
        slack in prop::collection::vec(-1.0f64..1.0, 2),
        lambda in prop::collection::vec(0.0f64..10.0, 2),
        omega in 0.01f64..3.0,
    ) {
        let h = h_omega_closed_form(j0, &slack, omega).unwrap();
        let star = lambda_star_closed_form(&slack, omega).unwrap();
        prop_assert!((lagrangian_value(j0, &slack, &star, omega) - h).abs() <= 1e-9 * (1.0 + h.abs()));
        prop_assert!(lagrangian_value(j0, &slack, &lambda, omega) <= h + 1e-9 * (1.0 + h.abs()));
    }

    #[test]
    fn mean_variance_fenchel_identity(d in cost_dist(), kappa in 0.01f64..3.0) {
        let m = RiskMeasure::mean_variance(kappa).unwrap();
        let at_mean = d.risk_objective(&m, d.mean());
        let direct = d.mean() + kappa * d.variance();
        prop_assert!((at_mean - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
        prop_assert!((exact_measure(&d, &m) - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
        for eta in [d.mean() - 0.3, d.mean() + 0.7] {
            prop_assert!(d.risk_objective(&m, eta) >= at_mean - 1e-12);
        }
    }

    #[test]
    fn cvar_variational_form_is_minimized_at_the_measure(
        d in cost_dist(),
        alpha in 0.05f64..0.95,
        eta in 0.0f64..5.0,
    ) {
        let m = RiskMeasure::cvar(alpha).unwrap();
        let exact = exact_measure(&d, &m);
        prop_assert!(d.risk_objective(&m, eta) >= exact - 1e-9);
        let hi = d.support().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(exact >= d.mean() - 1e-9 && exact <= hi + 1e-9);
    }

    #[test]
    fn chance_is_an_indicator(c in 0.0f64..10.0, n in 0.0f64..10.0) {
        let m = RiskMeasure::chance(n).unwrap();
        let f = m.f(c, 0.0);
        prop_assert_eq!(f, if c >= n { 1.0 } else { 0.0 });
        prop_assert_eq!(m.g(0.0), 0.0);
    }

    #[test]
    fn enumeration_is_a_distribution(seed in any::<u64>(), horizon in 1usize..4, gamma in 0.5f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cmdp = TabularCmdp::random(3, 2, 1, horizon, gamma, &mut rng).unwrap();
        let theta: Vec<f64> = (0..6).map(|k| ((seed >> k) & 7) as f64 * 0.3 - 1.0).collect();
        let policy = TabularSoftmaxPolicy::new(3, 2, theta, 1.0).unwrap();
        let trajs = enumerate_trajectories(&cmdp, &policy).unwrap();
        let total: f64 = trajs.iter().map(|t| t.1).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(trajs.iter().all(|(t, p)| *p >= 0.0 && t.len() == horizon));
    }

    #[test]
    fn softmax_score_matches_log_prob_differences(
        theta in prop::collection::vec(-3.0f64..3.0, 6),
        s in 0usize..2,
        a in 0usize..3,
        temperature in 0.3f64..3.0,
    ) {
        let policy = TabularSoftmaxPolicy::new(2, 3, theta.clone(), temperature).unwrap();
        let state = State::tabular(s, vec![s as f64]);
        let action = Action::Discrete(a);
        let score = policy.score(&state, &action).unwrap();
        let fd = fd_gradient(|x| {
            TabularSoftmaxPolicy::new(2, 3, x.to_vec(), temperature).unwrap().log_prob(&state, &action).unwrap()
        }, &theta, 1e-5).unwrap();
        for (g, f) in score.iter().zip(&fd) {
            prop_assert!((g - f).abs() <= 1e-6 * (1.0 + f.abs()));
        }
    }

    #[test]
    fn gaussian_score_matches_log_prob_differences(
        theta in prop::collection::vec(-2.0f64..2.0, 4),
        s in prop::collection::vec(-2.0f64..2.0, 2),
        a in prop::collection::vec(-2.0f64..2.0, 2),
        sigma2 in 0.1f64..2.0,
    ) {
        let policy = LinearGaussianPolicy::new(2, 2, theta.clone(), sigma2).unwrap();
        let state = State::continuous(s);
        let action = Action::Continuous(a);
        let score = policy.score(&state, &action).unwrap();
        let fd = fd_gradient(|x| {
            LinearGaussianPolicy::new(2, 2, x.to_vec(), sigma2).unwrap().log_prob(&state, &action).unwrap()
        }, &theta, 1e-5).unwrap();
        for (g, f) in score.iter().zip(&fd) {
            prop_assert!((g - f).abs() <= 1e-6 * (1.0 + f.abs()));
        }
    }

    #[test]
    fn hyperpolicy_score_matches_log_density_differences(
        rho in prop::collection::vec(-2.0f64..2.0, 3),
        theta in prop::collection::vec(-2.0f64..2.0, 3),
        sigma2 in 0.05f64..2.0,
    ) {
        let hyper = GaussianHyperpolicy::new(rho.clone(), sigma2).unwrap();
        let score = hyper.score(&theta).unwrap();
        let fd = fd_gradient(|r| {
            GaussianHyperpolicy::new(r.to_vec(), sigma2).unwrap().log_density(&theta).unwrap()
        }, &rho, 1e-5).unwrap();
        for (g, f) in score.iter().zip(&fd) {
            prop_assert!((g - f).abs() <= 1e-6 * (1.0 + f.abs()));
        }
    }
}
