//! Nonparametric empirical Bayes: the quantile-constrained maximum-likelihood
//! prior is a two-point distribution at the one-sided likelihood maximisers,
//! and the strength of evidence reduces to a ratio of one-sided suprema
//!
//! ```text
//! V(x) = sup_{θ ≥ θ₀} f(x|θ) / sup_{θ < θ₀} f(x|θ)
//! ```
//!
//! which does not depend on the prior probability `α` of the upper hypothesis.

use crate::error::{require_finite, require_open_unit, require_positive, EvidenceError, Result};
use crate::evidence::{EvidenceStrength, Method};
use crate::models::{log_sum_exp, EvidenceModel, Side};

/// The empirical prior: mass `α` at `θ_p >= θ₀` and `1 - α` at `θ_d` below `θ₀`.
///
/// When the lower supremum is only reached in the limit `θ → θ₀`, `theta_d`
/// is reported as `θ₀` and `theta_d_at_threshold` is set; the atom still
/// belongs to the lower hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointPrior {
    pub theta0: f64,
    pub theta_p: f64,
    pub theta_d: f64,
    pub weight_p: f64,
    pub weight_d: f64,
    pub theta_p_at_threshold: bool,
    pub theta_d_at_threshold: bool,
}

impl TwoPointPrior {
    /// `ln g(x)` for this prior: `ln(α f(x|θ_p) + (1-α) f(x|θ_d))`.
    pub fn log_marginal_likelihood(&self, model: &EvidenceModel, x: f64) -> Result<f64> {
        let lp = model.log_density_at(x, self.theta_p)?;
        let ld = model.log_density_at(x, self.theta_d)?;
        Ok(log_sum_exp(&[self.weight_p.ln() + lp, self.weight_d.ln() + ld]))
    }
}

/// Ratio of one-sided suprema of the likelihood.
///
/// The normal location model is evaluated with its exact log-scale closed
/// form. A lower supremum that underflows yields a saturated result with
/// `log10_value = +inf`.
pub fn v_nonparam(model: &EvidenceModel, x: f64, theta0: f64) -> Result<EvidenceStrength> {
    require_finite("x", x)?;
    require_finite("theta0", theta0)?;
    if let EvidenceModel::NormalLocation(m) = model {
        return v_nonparam_normal_closed(x, theta0, m.sigma());
    }
    let upper = model.sup_density(x, theta0, Side::Upper)?;
    let lower = model.sup_density(x, theta0, Side::Lower)?;
    ratio_of_suprema(upper.log_value, lower.log_value)
}

/// [`v_nonparam`] forced through the numeric suprema, for any model.
pub fn v_nonparam_numeric(model: &EvidenceModel, x: f64, theta0: f64) -> Result<EvidenceStrength> {
    require_finite("x", x)?;
    require_finite("theta0", theta0)?;
    let upper = model.sup_density_numeric(x, theta0, Side::Upper)?;
    let lower = model.sup_density_numeric(x, theta0, Side::Lower)?;
    ratio_of_suprema(upper.log_value, lower.log_value)
}

fn ratio_of_suprema(ln_upper: f64, ln_lower: f64) -> Result<EvidenceStrength> {
    if ln_lower == f64::NEG_INFINITY {
        if ln_upper == f64::NEG_INFINITY {
            return Err(EvidenceError::Numerical(
                "both one-sided suprema underflow to zero".into(),
            ));
        }
        return Ok(EvidenceStrength::from_ln(f64::INFINITY, Method::Nonparam));
    }
    Ok(EvidenceStrength::from_ln(ln_upper - ln_lower, Method::Nonparam))
}

/// Normal location closed form: `exp(±(x-θ₀)²/(2σ²))`, `+` for `x >= θ₀`.
pub fn v_nonparam_normal_closed(x: f64, theta0: f64, sigma: f64) -> Result<EvidenceStrength> {
    require_finite("x", x)?;
    require_finite("theta0", theta0)?;
    require_positive("sigma", sigma)?;
    let z = (x - theta0) / sigma;
    Ok(EvidenceStrength::from_ln(0.5 * z * z.abs(), Method::Nonparam))
}

/// Scale family with `k = φ`:
/// `r φ(r)/φ(1)` for `r = |x|/θ₀ <= 1`, and its reciprocal form `φ(1)/(r φ(r))` otherwise.
pub fn v_nonparam_scale_normal_closed(x: f64, theta0: f64) -> Result<EvidenceStrength> {
    require_finite("x", x)?;
    require_positive("theta0", theta0)?;
    if x == 0.0 {
        return Err(EvidenceError::Domain(
            "scale family strength of evidence is undefined at x = 0".into(),
        ));
    }
    let r = x.abs() / theta0;
    let ln_r_phi_ratio = r.ln() - 0.5 * r * r + 0.5;
    let ln_v = if r <= 1.0 { ln_r_phi_ratio } else { -ln_r_phi_ratio };
    Ok(EvidenceStrength::from_ln(ln_v, Method::Nonparam))
}

/// The two-point maximum-likelihood prior under the constraint `P(θ >= θ₀) = α`.
pub fn empirical_prior(
    model: &EvidenceModel,
    x: f64,
    theta0: f64,
    alpha: f64,
) -> Result<TwoPointPrior> {
    require_open_unit("alpha", alpha)?;
    let upper = model.sup_density(x, theta0, Side::Upper)?;
    let lower = model.sup_density(x, theta0, Side::Lower)?;
    Ok(TwoPointPrior {
        theta0,
        theta_p: upper.arg,
        theta_d: lower.arg,
        weight_p: alpha,
        weight_d: 1.0 - alpha,
        theta_p_at_threshold: upper.at_threshold,
        theta_d_at_threshold: lower.at_threshold,
    })
}
