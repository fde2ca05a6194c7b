use evidence_strength::{EvidenceModel, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64)
}

fn location_models() -> Vec<(&'static str, EvidenceModel)> {
    vec![
        ("normal-closed", EvidenceModel::normal_location(0.1).unwrap()),
        ("mixture", EvidenceModel::normal_mixture_location(0.1).unwrap()),
    ]
}

#[test]
fn normal_closed_sup_matches_grid_search() {
    let (theta0, sigma) = (1.0, 0.1);
    let model = EvidenceModel::normal_location(sigma).unwrap();
    for x in grid(theta0 - 10.0 * sigma, theta0 + 10.0 * sigma, 200) {
        for side in [Side::Upper, Side::Lower] {
            let closed = model.sup_density(x, theta0, side).unwrap();
            let numeric = model.sup_density_numeric(x, theta0, side).unwrap();
            let rel = (numeric.log_value - closed.log_value).exp_m1().abs();
            assert!(rel <= 1e-6, "x={x} {side:?}: relative difference {rel:e}");
        }
    }
}

#[test]
fn one_sided_suprema_are_monotone_in_x() {
    let theta0 = 1.0;
    for (name, model) in location_models() {
        let xs: Vec<f64> = grid(theta0 - 1.0, theta0 + 1.0, 801).collect();
        let up: Vec<f64> = xs.iter().map(|&x| model.sup_density(x, theta0, Side::Upper).unwrap().log_value).collect();
        let lo: Vec<f64> = xs.iter().map(|&x| model.sup_density(x, theta0, Side::Lower).unwrap().log_value).collect();
        for i in 1..xs.len() {
            let slack = 1e-12 * up[i].abs().max(1.0);
            assert!(up[i] >= up[i - 1] - slack, "{name}: upper sup decreases at x={}", xs[i]);
            let slack = 1e-12 * lo[i].abs().max(1.0);
            assert!(lo[i] <= lo[i - 1] + slack, "{name}: lower sup increases at x={}", xs[i]);
        }
    }
}

#[test]
fn supremum_dominates_sampled_densities() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let theta0 = 1.0;
    let mut models = location_models();
    models.push(("scale", EvidenceModel::normal_scale()));
    for (name, model) in models {
        for x in [-2.0, -0.3, 0.4, 0.95, 1.0, 1.07, 1.8, 3.0] {
            for side in [Side::Upper, Side::Lower] {
                let sup = model.sup_density(x, theta0, side).unwrap();
                for _ in 0..100 {
                    let theta = match (side, &model) {
                        (Side::Upper, _) => theta0 + rng.gen_range(0.0..5.0),
                        (Side::Lower, EvidenceModel::Scale(_)) => rng.gen_range(1e-3..theta0),
                        (Side::Lower, _) => theta0 - rng.gen_range(1e-9..5.0),
                    };
                    let ld = model.log_density_at(x, theta).unwrap();
                    assert!(
                        sup.log_value >= ld - 1e-12 * ld.abs().max(1.0),
                        "{name} x={x} {side:?}: sup {} < f(θ={theta}) {ld}",
                        sup.log_value
                    );
                }
            }
        }
    }
}

#[test]
fn scale_family_rejects_zero_measurement() {
    let model = EvidenceModel::normal_scale();
    assert!(model.sup_density(0.0, 1.0, Side::Upper).is_err());
    assert!(model.log_density_at(1.0, 0.0).is_err());
    assert!(model.log_density_at(1.0, -1.0).is_err());
}
