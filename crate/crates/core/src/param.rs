//! Parametric empirical Bayes with a normal prior `N(μ, τ²)` on the normal
//! location model `X ~ N(θ, σ²)`.
//!
//! With a known prior the evidence density is `N(μ, σ² + τ²)` and
//!
//! ```text
//! V(x) = Λ( (τ²(x-θ₀) + σ²(μ-θ₀)) / (στ√(σ²+τ²)) ) / Λ( (μ-θ₀)/τ )
//! ```
//!
//! When the judge only fixes `α = P(θ >= θ₀)`, the prior satisfies
//! `μ = θ₀ - θ_{1-α} τ` (with `θ_u` the standard normal `u`-quantile) and `τ`
//! is chosen by maximising the evidence density. For `α = 0.5` that maximiser
//! has a closed form. For `α > 0.5` the derivative of the constrained
//! likelihood in `τ` has the sign of the cubic
//!
//! ```text
//! P(τ) = -τ³ + θ_{1-α}(x-θ₀)τ² + ((x-θ₀)² - σ²(θ_{1-α}² + 1))τ - θ_{1-α}(x-θ₀)σ²
//! ```
//!
//! so the maximiser is `0` or one of the roots of `P` where it changes sign
//! from `+` to `-`. Cases with `α < 0.5` are mapped onto `α > 0.5` by
//! reflecting the measurement axis about `θ₀`.

use crate::cubic::CubicPoly;
use crate::error::{require_finite, require_positive, EvidenceError, Result};
use crate::evidence::{EvidenceStrength, Method};
use crate::optimize::linspace;
use crate::stats::{ln_cdf, ln_lambda, ln_phi, quantile, LN_SQRT_2PI};

/// Normal prior `N(mu, tau²)` on `θ`; `tau = 0` is a point mass at `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalPrior {
    pub mu: f64,
    pub tau: f64,
}

impl NormalPrior {
    pub fn new(mu: f64, tau: f64) -> Result<Self> {
        require_finite("mu", mu)?;
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(EvidenceError::Domain(format!("tau must be finite and >= 0, got {tau}")));
        }
        Ok(NormalPrior { mu, tau })
    }

    /// Prior probability of `θ >= θ₀`.
    pub fn upper_probability(&self, theta0: f64) -> f64 {
        if self.tau == 0.0 {
            return if self.mu >= theta0 { 1.0 } else { 0.0 };
        }
        ln_cdf((self.mu - theta0) / self.tau).exp()
    }
}

/// The judge's threshold and prior probability of the upper hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileConstraint {
    pub theta0: f64,
    pub alpha: f64,
}

impl QuantileConstraint {
    pub fn new(theta0: f64, alpha: f64) -> Result<Self> {
        require_finite("theta0", theta0)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(EvidenceError::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(QuantileConstraint { theta0, alpha })
    }
}

/// The two one-sided pieces of the evidence density, on the log scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialMasses {
    /// `ln ∫_{θ < θ₀} f(x|θ) π(θ) dθ`.
    pub ln_lower: f64,
    /// `ln ∫_{θ >= θ₀} f(x|θ) π(θ) dθ`.
    pub ln_upper: f64,
}

impl PartialMasses {
    pub fn lower(&self) -> f64 {
        self.ln_lower.exp()
    }

    pub fn upper(&self) -> f64 {
        self.ln_upper.exp()
    }
}

fn ln_normal_density(x: f64, mean: f64, sd: f64) -> f64 {
    ln_phi((x - mean) / sd) - sd.ln()
}

/// `ln g(x)` for the evidence density `N(μ, σ² + τ²)`.
pub fn log_marginal_density(x: f64, prior: NormalPrior, sigma: f64) -> Result<f64> {
    require_finite("x", x)?;
    require_positive("sigma", sigma)?;
    let sd = sigma.hypot(prior.tau);
    Ok(ln_normal_density(x, prior.mu, sd))
}

/// Evidence density `g(x) = ∫ f(x|θ) π(θ) dθ`, i.e. the `N(μ, σ² + τ²)` density.
pub fn marginal_density(x: f64, prior: NormalPrior, sigma: f64) -> Result<f64> {
    Ok(log_marginal_density(x, prior, sigma)?.exp())
}

/// Splits `g(x)` at `θ₀` using the normal posterior `N(m, s²)` with
/// `m = (τ²x + σ²μ)/(σ² + τ²)` and `s = στ/√(σ² + τ²)`.
pub fn partial_integrals(
    x: f64,
    prior: NormalPrior,
    sigma: f64,
    theta0: f64,
) -> Result<PartialMasses> {
    require_finite("theta0", theta0)?;
    if prior.tau == 0.0 {
        return Err(EvidenceError::Domain(
            "partial integrals need tau > 0; a point-mass prior does not split".into(),
        ));
    }
    let ln_g = log_marginal_density(x, prior, sigma)?;
    let z = -posterior_standardized_excess(x - theta0, prior.mu - theta0, prior.tau, sigma);
    Ok(PartialMasses {
        ln_lower: ln_g + ln_cdf(z),
        ln_upper: ln_g + ln_cdf(-z),
    })
}

/// `(m - θ₀)/s` written in terms of `x - θ₀` and `μ - θ₀`.
fn posterior_standardized_excess(dx: f64, dmu: f64, tau: f64, sigma: f64) -> f64 {
    let var = sigma * sigma + tau * tau;
    (tau * tau * dx + sigma * sigma * dmu) / (sigma * tau * var.sqrt())
}

/// `ln V` for a known prior, from offsets relative to `θ₀`. Requires `tau > 0`.
fn ln_v_known(dx: f64, dmu: f64, tau: f64, sigma: f64) -> f64 {
    ln_lambda(posterior_standardized_excess(dx, dmu, tau, sigma)) - ln_lambda(dmu / tau)
}

/// Strength of evidence for a fully specified normal prior.
///
/// Evaluated entirely on the log scale. A point-mass prior (`tau = 0`) gives
/// exactly `V = 1`.
pub fn v_known_prior(
    x: f64,
    prior: NormalPrior,
    sigma: f64,
    theta0: f64,
) -> Result<EvidenceStrength> {
    require_finite("x", x)?;
    require_finite("theta0", theta0)?;
    require_positive("sigma", sigma)?;
    let prior = NormalPrior::new(prior.mu, prior.tau)?;
    if prior.tau == 0.0 {
        return Ok(EvidenceStrength::from_ln(0.0, Method::KnownPrior));
    }
    let ln_v = ln_v_known(x - theta0, prior.mu - theta0, prior.tau, sigma);
    Ok(EvidenceStrength::from_ln(ln_v, Method::KnownPrior))
}

/// Normal prior meeting the constraint `P(θ >= θ₀) = α`: `μ = θ₀ - θ_{1-α} τ`.
///
/// Only `α >= 0.5` is accepted; `α = 0.5` pins `μ = θ₀` for every `τ`.
pub fn prior_from_constraint(constraint: QuantileConstraint, tau: f64) -> Result<NormalPrior> {
    let QuantileConstraint { theta0, alpha } = QuantileConstraint::new(constraint.theta0, constraint.alpha)?;
    if alpha < 0.5 {
        return Err(EvidenceError::Domain(format!(
            "the constrained prior is parameterised for alpha >= 0.5, got {alpha}"
        )));
    }
    let prior = NormalPrior::new(theta0, tau)?;
    if alpha == 0.5 || tau == 0.0 {
        return Ok(prior);
    }
    Ok(NormalPrior {
        mu: theta0 - quantile(1.0 - alpha) * tau,
        tau,
    })
}

/// Maximum-likelihood `τ` for the balanced judge (`μ = θ₀`):
/// `0` if `θ₀ - σ <= x <= θ₀ + σ`, else `√((x - θ₀)² - σ²)`.
pub fn tau_hat_balanced(x: f64, theta0: f64, sigma: f64) -> Result<f64> {
    require_finite("x", x)?;
    require_finite("theta0", theta0)?;
    require_positive("sigma", sigma)?;
    // Compare with the interval ends so that x = θ₀ ± σ lands in the flat set.
    if x >= theta0 - sigma && x <= theta0 + sigma {
        return Ok(0.0);
    }
    let d = (x - theta0).abs();
    Ok(((d - sigma) * (d + sigma)).max(0.0).sqrt())
}

/// Strength of evidence for the balanced judge with `τ` fitted by maximum
/// likelihood. Exactly `1` on `|x - θ₀| <= σ`, otherwise
/// `Λ(sign(x - θ₀) √((x - θ₀)² - σ²) / σ)`.
pub fn v_balanced(x: f64, theta0: f64, sigma: f64) -> Result<EvidenceStrength> {
    let tau = tau_hat_balanced(x, theta0, sigma)?;
    if tau == 0.0 {
        return Ok(EvidenceStrength::flat(Method::Balanced).with_prior_fit(theta0, 0.0));
    }
    let y = (x - theta0).signum() * tau / sigma;
    Ok(EvidenceStrength::from_ln(ln_lambda(y), Method::Balanced).with_prior_fit(theta0, tau))
}

fn require_unbalanced_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(EvidenceError::Domain(format!("alpha must lie in (0.5, 1), got {alpha}")));
    }
    Ok(())
}

/// The cubic whose sign is the sign of `d/dτ g_τ(x)` under the constraint.
pub fn cubic_coeffs(x: f64, theta0: f64, sigma: f64, alpha: f64) -> Result<CubicPoly> {
    require_finite("x", x)?;
    require_finite("theta0", theta0)?;
    require_positive("sigma", sigma)?;
    require_unbalanced_alpha(alpha)?;
    let q = quantile(1.0 - alpha);
    let d = x - theta0;
    let s2 = sigma * sigma;
    Ok(CubicPoly {
        c3: -1.0,
        c2: q * d,
        c1: d * d - s2 * (q * q + 1.0),
        c0: -q * d * s2,
    })
}

/// `ln g_τ(x)` with `μ` eliminated through the quantile constraint.
pub fn constrained_log_likelihood(x: f64, theta0: f64, sigma: f64, alpha: f64, tau: f64) -> f64 {
    let q = quantile(1.0 - alpha);
    constrained_ll(x - theta0, sigma, q, tau)
}

fn constrained_ll(d: f64, sigma: f64, q: f64, tau: f64) -> f64 {
    let var = sigma * sigma + tau * tau;
    let z = (d + q * tau) / var.sqrt();
    -0.5 * z * z - 0.5 * var.ln() - LN_SQRT_2PI
}

/// Global maximiser over `τ >= 0` of the constrained evidence density, for `α > 0.5`.
///
/// Candidates are `0` and the positive roots of [`cubic_coeffs`] at which
/// the cubic falls through zero. Exact ties go to `0`.
pub fn tau_hat_unbalanced(x: f64, theta0: f64, sigma: f64, alpha: f64) -> Result<f64> {
    let poly = cubic_coeffs(x, theta0, sigma, alpha)?;
    let q = quantile(1.0 - alpha);
    let d = x - theta0;
    let mut best = 0.0;
    let mut best_ll = constrained_ll(d, sigma, q, 0.0);
    for r in poly.real_roots() {
        let residual = poly.eval(r).abs();
        if !r.is_finite() || residual > 1e-9 * poly.magnitude(r).max(f64::MIN_POSITIVE) {
            return Err(EvidenceError::Numerical(format!(
                "cubic root polish failed: P({r}) = {residual:e} for x={x}, theta0={theta0}, \
                 sigma={sigma}, alpha={alpha}, coefficients {poly:?}"
            )));
        }
        if r > 0.0 && poly.derivative(r) < 0.0 {
            let ll = constrained_ll(d, sigma, q, r);
            if ll > best_ll {
                best = r;
                best_ll = ll;
            }
        }
    }
    Ok(best)
}

/// Strength of evidence with `μ` and `τ` fitted under the quantile constraint.
///
/// `α = 0.5` is delegated to [`v_balanced`]; `α < 0.5` is evaluated on the
/// problem reflected about `θ₀`, `(x, α) → (2θ₀ - x, 1 - α)`, and inverted.
pub fn v_unbalanced(x: f64, theta0: f64, sigma: f64, alpha: f64) -> Result<EvidenceStrength> {
    require_finite("x", x)?;
    require_finite("theta0", theta0)?;
    require_positive("sigma", sigma)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EvidenceError::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if alpha == 0.5 {
        return v_balanced(x, theta0, sigma);
    }
    if alpha < 0.5 {
        let mirrored = v_unbalanced(2.0 * theta0 - x, theta0, sigma, 1.0 - alpha)?;
        let mut out = EvidenceStrength::from_ln(-mirrored.ln_value(), Method::Unbalanced);
        out.in_flat_region = mirrored.in_flat_region;
        out.tau_hat = mirrored.tau_hat;
        out.mu_hat = mirrored.mu_hat.map(|mu| 2.0 * theta0 - mu);
        return Ok(out);
    }
    let tau = tau_hat_unbalanced(x, theta0, sigma, alpha)?;
    if tau == 0.0 {
        return Ok(EvidenceStrength::flat(Method::Unbalanced).with_prior_fit(theta0, 0.0));
    }
    let q = quantile(1.0 - alpha);
    let dmu = -q * tau;
    let ln_v = ln_v_known(x - theta0, dmu, tau, sigma);
    Ok(EvidenceStrength::from_ln(ln_v, Method::Unbalanced).with_prior_fit(theta0 + dmu, tau))
}

/// Points in the coarse scan that checks the flat-set predicate is monotone.
const ENDPOINT_SCAN_POINTS: usize = 257;

/// Left end `x₀` of the interval `[x₀, θ₀]` on which the fitted `τ` is zero
/// and `V = 1`, for `α > 0.5`.
///
/// Bisects on the predicate `τ̂(x) = 0` over `[θ₀ - 10σ(1 + |θ_{1-α}|), θ₀]`
/// to an absolute tolerance of `1e-10 σ`. The returned point satisfies the
/// predicate. A predicate that is not monotone over the bracket, or a bracket
/// whose left end is already flat, is reported as a structure violation.
pub fn flat_left_endpoint(theta0: f64, sigma: f64, alpha: f64) -> Result<f64> {
    require_finite("theta0", theta0)?;
    require_positive("sigma", sigma)?;
    require_unbalanced_alpha(alpha)?;
    let q = quantile(1.0 - alpha);
    let left = theta0 - 10.0 * sigma * (1.0 + q.abs());
    let flat = |x: f64| -> Result<bool> { Ok(tau_hat_unbalanced(x, theta0, sigma, alpha)? == 0.0) };

    if flat(left)? {
        return Err(EvidenceError::Structure(format!(
            "fitted tau is zero at the bracket's left end x = {left}; the flat set is not bracketed"
        )));
    }
    if !flat(theta0)? {
        return Err(EvidenceError::Structure(format!(
            "fitted tau is positive at theta0 = {theta0}"
        )));
    }

    let grid = linspace(left, theta0, ENDPOINT_SCAN_POINTS);
    let mut first_flat = None;
    for (i, &x) in grid.iter().enumerate() {
        let f = flat(x)?;
        match (first_flat, f) {
            (None, true) => first_flat = Some(i),
            (Some(_), false) => {
                return Err(EvidenceError::Structure(format!(
                    "flat-set predicate is not monotone: tau_hat > 0 again at x = {x}"
                )))
            }
            _ => {}
        }
    }
    let k = first_flat.expect("theta0 is flat");
    let (mut lo, mut hi) = (grid[k - 1], grid[k]);
    let tol = 1e-10 * sigma;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if flat(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{cdf, phi};

    // Frozen from 40-digit evaluations of the same closed forms (mpmath).
    const V_KNOWN_X1: f64 = 0.473_187_269_937_873_2;
    const LAMBDA_SQRT3: f64 = 23.019_835_581_121_116;
    const MU_ALPHA_075_TAU_03: f64 = 1.202_346_925_058_824_5;

    #[test]
    fn marginal_density_examples() {
        let d = marginal_density(1.3, NormalPrior::new(1.0, 0.0).unwrap(), 0.1).unwrap();
        assert!((d - phi(3.0) / 0.1).abs() < 1e-13);
        let d = marginal_density(0.0, NormalPrior::new(0.0, 1.0).unwrap(), 1.0).unwrap();
        assert!((d - phi(0.0) / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn partial_integrals_split_the_marginal() {
        let prior = NormalPrior::new(1.2, 0.3).unwrap();
        let m = partial_integrals(1.0, prior, 0.1, 1.0).unwrap();
        let g = marginal_density(1.0, prior, 0.1).unwrap();
        assert!(((m.lower() + m.upper()) - g).abs() <= 1e-12 * g);
    }

    #[test]
    fn partial_integrals_symmetric_case() {
        let prior = NormalPrior::new(1.0, 0.4).unwrap();
        let m = partial_integrals(1.0, prior, 0.1, 1.0).unwrap();
        assert_eq!(m.ln_lower, m.ln_upper);
    }

    #[test]
    fn partial_integrals_far_threshold() {
        let prior = NormalPrior::new(1.0, 0.3).unwrap();
        let m = partial_integrals(1.0, prior, 0.1, 1.0 - 12.0 * 0.3).unwrap();
        let ln_g = log_marginal_density(1.0, prior, 0.1).unwrap();
        assert!(m.ln_lower - ln_g <= 1e-20f64.ln());
        assert!(partial_integrals(1.0, NormalPrior::new(1.0, 0.0).unwrap(), 0.1, 1.0).is_err());
    }

    #[test]
    fn known_prior_examples() {
        for x in [-3.0, 0.9, 1.0, 5.0] {
            let v = v_known_prior(x, NormalPrior::new(1.4, 0.0).unwrap(), 0.1, 1.0).unwrap();
            assert_eq!(v.value, Some(1.0));
        }
        let prior = NormalPrior::new(1.2, 0.3).unwrap();
        let p_hp = prior.upper_probability(1.0);
        assert!((p_hp - 0.75).abs() <= 0.01);
        assert!((p_hp - cdf(2.0 / 3.0)).abs() < 1e-15);
        let v = v_known_prior(1.0, prior, 0.1, 1.0).unwrap().value.unwrap();
        assert!((v - V_KNOWN_X1).abs() < 1e-13, "{v}");
    }

    #[test]
    fn known_prior_does_not_overflow() {
        let prior = NormalPrior::new(1.2, 0.3).unwrap();
        let v = v_known_prior(200.0, prior, 0.1, 1.0).unwrap();
        assert!(v.log10_value.is_finite());
        assert!(v.is_saturated());
    }

    #[test]
    fn constraint_examples() {
        let c = QuantileConstraint::new(1.0, 0.5).unwrap();
        assert_eq!(prior_from_constraint(c, 0.7).unwrap().mu, 1.0);
        let c = QuantileConstraint::new(1.0, 0.75).unwrap();
        let p = prior_from_constraint(c, 0.3).unwrap();
        assert!((p.mu - MU_ALPHA_075_TAU_03).abs() < 1e-14);
        assert!((cdf((1.0 - p.mu) / 0.3) - 0.25).abs() < 1e-12);
        assert_eq!(prior_from_constraint(c, 0.0).unwrap().mu, 1.0);
        let low = QuantileConstraint::new(1.0, 0.25).unwrap();
        assert!(prior_from_constraint(low, 0.3).is_err());
        assert!(QuantileConstraint::new(1.0, 1.0).is_err());
    }

    #[test]
    fn balanced_examples() {
        assert_eq!(tau_hat_balanced(1.0, 1.0, 0.1).unwrap(), 0.0);
        assert_eq!(tau_hat_balanced(1.1, 1.0, 0.1).unwrap(), 0.0);
        let t = tau_hat_balanced(1.2, 1.0, 0.1).unwrap();
        assert!((t - 0.03f64.sqrt()).abs() < 1e-15);
        let v = v_balanced(1.2, 1.0, 0.1).unwrap();
        assert!((v.value.unwrap() - LAMBDA_SQRT3).abs() / LAMBDA_SQRT3 < 1e-12);
        let w = v_balanced(0.8, 1.0, 0.1).unwrap();
        assert!((v.log10_value + w.log10_value).abs() < 1e-12);
        let flat = v_balanced(1.05, 1.0, 0.1).unwrap();
        assert_eq!(flat.value, Some(1.0));
        assert!(flat.in_flat_region);
    }

    #[test]
    fn cubic_examples() {
        let p = cubic_coeffs(1.0, 1.0, 0.1, 0.75).unwrap();
        assert_eq!(p.c2, 0.0);
        assert_eq!(p.c0, 0.0);
        for t in [1e-6, 0.01, 0.5, 3.0] {
            assert!(p.eval(t) < 0.0);
        }
        let p = cubic_coeffs(2.0, 1.0, 0.1, 0.75).unwrap();
        assert!(p.c0 > 0.0);
        assert_eq!(p.c3, -1.0);
        assert!(cubic_coeffs(2.0, 1.0, 0.1, 0.5).is_err());
        assert!(cubic_coeffs(0.5, 1.0, 0.1, 0.75).unwrap().c0 < 0.0);
    }

    #[test]
    fn unbalanced_flat_near_threshold() {
        assert_eq!(tau_hat_unbalanced(1.0, 1.0, 0.1, 0.75).unwrap(), 0.0);
        let q = quantile(0.25);
        let radius = 0.1 * (3.0 * (q * q + 1.0) / (q * q + 3.0)).sqrt();
        for frac in [0.1, 0.5, 0.99] {
            let x = 1.0 - frac * radius;
            assert_eq!(tau_hat_unbalanced(x, 1.0, 0.1, 0.75).unwrap(), 0.0);
            assert_eq!(v_unbalanced(x, 1.0, 0.1, 0.75).unwrap().value, Some(1.0));
        }
    }

    #[test]
    fn unbalanced_alpha_half_is_balanced() {
        let a = v_unbalanced(1.3, 1.0, 0.1, 0.5).unwrap();
        let b = v_balanced(1.3, 1.0, 0.1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unbalanced_reflection() {
        let hi = v_unbalanced(1.5, 1.0, 0.1, 0.75).unwrap();
        let lo = v_unbalanced(0.5, 1.0, 0.1, 0.25).unwrap();
        assert!((hi.log10_value + lo.log10_value).abs() < 1e-12);
        assert_eq!(hi.tau_hat, lo.tau_hat);
    }

    #[test]
    fn flat_endpoint_rejects_balanced() {
        assert!(flat_left_endpoint(1.0, 0.1, 0.5).is_err());
        assert!(flat_left_endpoint(1.0, 0.0, 0.75).is_err());
    }
}
