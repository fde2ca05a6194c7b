use evidence_strength::oracle::{ln_v_by_integration, maximize_likelihood_grid, GenericPrior};
use evidence_strength::param::{
    flat_left_endpoint, partial_integrals, tau_hat_unbalanced, v_balanced, v_known_prior, v_unbalanced,
};
use evidence_strength::stats::std_normal_log_cdf;
use evidence_strength::verify::FLAT_ENDPOINTS;
use evidence_strength::{EvidenceModel, NormalPrior};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64)
}

// 40-digit reference values.
const X0_ALPHA_055: f64 = 0.869_961_985_516_169_8;
const X0_ALPHA_075: f64 = 0.805_735_716_373_454_6;

#[test]
fn known_prior_is_strictly_increasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let sigma = rng.gen_range(0.05..1.0);
        let prior = NormalPrior { mu: rng.gen_range(-1.0..1.0), tau: rng.gen_range(0.05..1.0) };
        let theta0 = rng.gen_range(-1.0..1.0);
        let mut prev = f64::NEG_INFINITY;
        for x in grid(theta0 - 3.0 * sigma, theta0 + 3.0 * sigma, 301) {
            let l = v_known_prior(x, prior, sigma, theta0).unwrap().ln_value();
            assert!(l > prev, "not increasing at x={x}");
            prev = l;
        }
    }
}

#[test]
fn posterior_odds_equal_v_times_prior_odds() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let sigma = rng.gen_range(0.05..2.0);
        let tau = rng.gen_range(0.05..2.0);
        let theta0 = rng.gen_range(-2.0..2.0);
        let prior = NormalPrior { mu: theta0 + tau * rng.gen_range(-4.0..4.0), tau };
        let x = theta0 + sigma * rng.gen_range(-4.0..4.0);
        let parts = partial_integrals(x, prior, sigma, theta0).unwrap();
        let ln_posterior_odds = parts.ln_upper - parts.ln_lower;
        let b = (prior.mu - theta0) / tau;
        let ln_prior_odds = std_normal_log_cdf(b).unwrap() - std_normal_log_cdf(-b).unwrap();
        let ln_v = v_known_prior(x, prior, sigma, theta0).unwrap().ln_value();
        let rel = (ln_posterior_odds - ln_v - ln_prior_odds).exp_m1().abs();
        assert!(rel <= 1e-10, "relative mismatch {rel:e}");
    }
}

#[test]
fn balanced_flat_region_is_exactly_one() {
    let (theta0, sigma) = (1.0, 0.1);
    for x in grid(theta0 - sigma, theta0 + sigma, 401).chain([theta0 - sigma, theta0 + sigma]) {
        let v = v_balanced(x, theta0, sigma).unwrap();
        assert_eq!(v.value, Some(1.0), "x={x}");
        assert!(v.in_flat_region);
    }
    assert_ne!(v_balanced(theta0 + sigma * (1.0 + 1e-9), theta0, sigma).unwrap().value, Some(1.0));
}

#[test]
fn balanced_is_antisymmetric_about_theta0() {
    let (theta0, sigma) = (0.0, 0.1);
    for d in grid(0.0, 0.6, 241) {
        let up = v_balanced(theta0 + d, theta0, sigma).unwrap().log10_value;
        let down = v_balanced(theta0 - d, theta0, sigma).unwrap().log10_value;
        assert!((up + down).abs() <= 1e-12 * up.abs().max(1.0), "d={d}");
    }
}

#[test]
fn unbalanced_flat_region_and_monotone_tails() {
    let (theta0, sigma) = (1.0, 0.1);
    for (alpha, pinned) in [(0.55, X0_ALPHA_055), (0.75, X0_ALPHA_075)] {
        let x0 = flat_left_endpoint(theta0, sigma, alpha).unwrap();
        assert!((x0 - pinned).abs() < 1e-9, "alpha={alpha}: x0={x0}");
        for x in grid(x0 + 1e-8, theta0, 501) {
            assert_eq!(v_unbalanced(x, theta0, sigma, alpha).unwrap().value, Some(1.0), "x={x}");
        }
        for (a, b) in [(theta0 - 6.0 * sigma, x0 - 1e-9), (theta0, theta0 + 6.0 * sigma)] {
            let mut prev = f64::NEG_INFINITY;
            for x in grid(a, b, 601) {
                let l = v_unbalanced(x, theta0, sigma, alpha).unwrap().ln_value();
                assert!(l >= prev, "alpha={alpha}: decrease at x={x}");
                prev = l;
            }
        }
    }
}

#[test]
fn pinned_endpoints_agree_with_suite_constants() {
    assert_eq!(FLAT_ENDPOINTS, [(0.55, X0_ALPHA_055), (0.75, X0_ALPHA_075)]);
}

#[test]
fn tau_hat_is_continuous_above_theta0() {
    let (theta0, sigma) = (1.0, 0.1);
    for alpha in [0.55, 0.75, 0.9] {
        // Lipschitz bound from the grid oracle on a coarse grid.
        let coarse: Vec<f64> = grid(theta0, theta0 + 0.6, 31).collect();
        let oracle: Vec<f64> = coarse
            .iter()
            .map(|&x| {
                let g = |t: f64| evidence_strength::param::constrained_log_likelihood(x, theta0, sigma, alpha, t).exp();
                maximize_likelihood_grid(g, 4.0).unwrap().0
            })
            .collect();
        let lipschitz = oracle
            .windows(2)
            .zip(coarse.windows(2))
            .map(|(t, x)| (t[1] - t[0]).abs() / (x[1] - x[0]))
            .fold(0.0, f64::max);
        let fine: Vec<f64> = grid(theta0, theta0 + 0.6, 3001).collect();
        let h = fine[1] - fine[0];
        let taus: Vec<f64> = fine.iter().map(|&x| tau_hat_unbalanced(x, theta0, sigma, alpha).unwrap()).collect();
        for (i, w) in taus.windows(2).enumerate() {
            assert!((w[1] - w[0]).abs() <= 2.0 * lipschitz * h + 1e-12, "alpha={alpha}: jump at x={}", fine[i]);
        }
    }
}

#[test]
fn reflected_alpha_matches_quadrature() {
    let (theta0, sigma) = (1.0, 0.1);
    let model = EvidenceModel::normal_location(sigma).unwrap();
    for alpha in [0.1, 0.25, 0.45] {
        for x in grid(0.6, 1.4, 41) {
            let v = v_unbalanced(x, theta0, sigma, alpha).unwrap();
            let tau = v.tau_hat.unwrap();
            if tau == 0.0 {
                assert_eq!(v.value, Some(1.0));
                continue;
            }
            let prior = NormalPrior { mu: v.mu_hat.unwrap(), tau };
            assert!((prior.upper_probability(theta0) - alpha).abs() < 1e-12);
            let quad = ln_v_by_integration(&GenericPrior::normal(prior).unwrap(), &model, x, theta0).unwrap();
            assert!((quad - v.ln_value()).abs() <= 1e-8, "alpha={alpha} x={x}");
        }
    }
}

proptest! {
    #[test]
    fn reflection_negates_log_strength(d in -0.6f64..0.6, alpha in 0.51f64..0.95) {
        let (theta0, sigma) = (0.0, 0.1);
        let direct = v_unbalanced(theta0 + d, theta0, sigma, alpha).unwrap().ln_value();
        let mirrored = v_unbalanced(theta0 - d, theta0, sigma, 1.0 - alpha).unwrap().ln_value();
        prop_assert!((direct + mirrored).abs() <= 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn unbalanced_tau_beats_every_other_tau(d in -0.6f64..0.6, alpha in 0.51f64..0.95, t in 0.0f64..2.0) {
        use evidence_strength::param::constrained_log_likelihood as ll;
        let tau = tau_hat_unbalanced(1.0 + d, 1.0, 0.1, alpha).unwrap();
        prop_assert!(ll(1.0 + d, 1.0, 0.1, alpha, tau) >= ll(1.0 + d, 1.0, 0.1, alpha, t) - 1e-12);
    }
}
