use evidence_strength::oracle::{
    finite_difference_sign, ln_v_by_integration, maximize_likelihood_grid, side_integrals_with_tolerance,
    v_by_integration, GenericPrior, INTEGRATION_REL_TOL,
};
use evidence_strength::param::{constrained_log_likelihood, marginal_density, tau_hat_unbalanced, v_known_prior};
use evidence_strength::{empirical_prior, v_nonparam, EvidenceError, EvidenceModel, NormalPrior};
use proptest::prelude::*;

const THETA0: f64 = 1.0;
const SIGMA: f64 = 0.1;

#[test]
fn halving_the_tolerance_is_stable() {
    let model = EvidenceModel::normal_location(SIGMA).unwrap();
    for (mu, tau) in [(1.2, 0.3), (0.8, 0.3), (1.0, 0.05), (1.3, 1.5)] {
        let prior = GenericPrior::normal(NormalPrior { mu, tau }).unwrap();
        for x in [0.7, 0.95, 1.0, 1.1, 1.35] {
            let a = side_integrals_with_tolerance(&prior, &model, x, THETA0, INTEGRATION_REL_TOL).unwrap();
            let b = side_integrals_with_tolerance(&prior, &model, x, THETA0, 0.5 * INTEGRATION_REL_TOL).unwrap();
            let change = (a.ln_v() - b.ln_v()).abs();
            assert!(change < INTEGRATION_REL_TOL, "mu={mu} tau={tau} x={x}: {change:e}");
        }
    }
}

#[test]
fn narrow_prior_approaches_point_mass() {
    let model = EvidenceModel::normal_location(SIGMA).unwrap();
    let prior = GenericPrior::normal(NormalPrior { mu: THETA0 + 5e-7, tau: 1e-6 }).unwrap();
    for x in [0.95, 0.98, 1.0, 1.02, 1.05] {
        let v = v_by_integration(&prior, &model, x, THETA0).unwrap();
        assert!((v - 1.0).abs() <= 1e-5, "x={x}: {v}");
    }
    assert_eq!(
        v_known_prior(1.3, NormalPrior { mu: 1.1, tau: 0.0 }, SIGMA, THETA0).unwrap().value,
        Some(1.0)
    );
}

#[test]
fn known_prior_example_matches_closed_form() {
    let model = EvidenceModel::normal_location(SIGMA).unwrap();
    let prior = NormalPrior { mu: 1.2, tau: 0.3 };
    let quad = v_by_integration(&GenericPrior::normal(prior).unwrap(), &model, 1.0, THETA0).unwrap();
    let closed = v_known_prior(1.0, prior, SIGMA, THETA0).unwrap().value.unwrap();
    assert!((quad / closed - 1.0).abs() <= 1e-8);
    // 40-digit reference value.
    assert!((closed - 0.473_187_269_937_873_2).abs() <= 1e-13);
}

#[test]
fn symmetric_setup_gives_one() {
    let model = EvidenceModel::normal_location(SIGMA).unwrap();
    for tau in [0.01, 0.3, 4.0] {
        let v = v_by_integration(&GenericPrior::normal(NormalPrior { mu: THETA0, tau }).unwrap(), &model, THETA0, THETA0).unwrap();
        assert!((v - 1.0).abs() <= 1e-10, "tau={tau}: {v}");
    }
}

#[test]
fn two_point_prior_sum_is_the_ratio_of_suprema() {
    let model = EvidenceModel::normal_location(SIGMA).unwrap();
    for x in [0.6, 0.99, 1.0, 1.01, 1.4] {
        let prior = empirical_prior(&model, x, THETA0, 0.3).unwrap();
        let sum = ln_v_by_integration(&GenericPrior::from(&prior), &model, x, THETA0).unwrap();
        assert!((sum - v_nonparam(&model, x, THETA0).unwrap().ln_value()).abs() <= 1e-12);
    }
}

#[test]
fn one_sided_prior_is_undefined() {
    let model = EvidenceModel::normal_location(SIGMA).unwrap();
    let prior = GenericPrior::discrete(&[(1.5, 0.5), (2.0, 0.5)]).unwrap();
    assert!(matches!(
        v_by_integration(&prior, &model, 1.2, THETA0),
        Err(EvidenceError::UndefinedOdds(_))
    ));
    assert!(GenericPrior::discrete(&[(0.5, 0.5), (2.0, 0.6)]).is_err());
}

#[test]
fn grid_maximiser_examples() {
    let x = THETA0 + 2.0 * SIGMA;
    let g = |tau: f64| marginal_density(x, NormalPrior { mu: THETA0, tau }, SIGMA).unwrap();
    let (tau, _) = maximize_likelihood_grid(g, 1.0).unwrap();
    assert!((tau - SIGMA * 3f64.sqrt()).abs() <= 1e-8, "{tau}");

    let g0 = |tau: f64| constrained_log_likelihood(THETA0, THETA0, SIGMA, 0.75, tau).exp();
    assert_eq!(maximize_likelihood_grid(g0, 1.0).unwrap().0, 0.0);

    let x = THETA0 + 0.3;
    let gu = |tau: f64| constrained_log_likelihood(x, THETA0, SIGMA, 0.75, tau).exp();
    let (tau, _) = maximize_likelihood_grid(gu, 2.0).unwrap();
    assert!((tau - tau_hat_unbalanced(x, THETA0, SIGMA, 0.75).unwrap()).abs() <= 1e-8);

    assert!(maximize_likelihood_grid(|_| f64::NAN, 1.0).is_err());
    assert!(maximize_likelihood_grid(|t| t, 0.0).is_err());
}

#[test]
fn finite_difference_signs() {
    assert_eq!(finite_difference_sign(|t| 1.0 - (t - 0.5) * (t - 0.5), 0.5, 1e-6), 0);
    let x = THETA0 + 2.0 * SIGMA;
    let balanced_tau = SIGMA * 3f64.sqrt();
    let g = |tau: f64| marginal_density(x, NormalPrior { mu: THETA0, tau }, SIGMA).unwrap();
    assert_eq!(finite_difference_sign(g, 0.5 * balanced_tau, 1e-7), 1);
    assert_eq!(finite_difference_sign(g, 2.0 * balanced_tau, 1e-7), -1);
}

proptest! {
    #[test]
    fn grid_maximiser_recovers_normal_peak(peak in 0.05f64..9.5, width in 0.01f64..2.0) {
        let f = |t: f64| (-0.5 * ((t - peak) / width).powi(2)).exp() / width;
        let (t, _) = maximize_likelihood_grid(f, 10.0).unwrap();
        prop_assert!((t - peak).abs() <= 1e-9, "peak {} found {}", peak, t);
    }
}
