//! Standard normal density, distribution function, quantile and the odds
//! function `Λ(y) = Φ(y) / Φ(-y)`.
//!
//! The distribution function is built on the complementary error function
//! (`libm::erfc`, a rational approximation accurate to about one ulp). In the
//! far lower tail, where `erfc` approaches the subnormal range, `ln Φ` is taken
//! from the asymptotic Mills-ratio series
//!
//! ```text
//! Φ(-z) = φ(z)/z · (1 - 1/z² + 3/z⁴ - 15/z⁶ + ...)
//! ```
//!
//! truncated at its smallest term. All downstream odds are computed from
//! [`log_lambda_ratio`], which stays finite for any finite argument.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::ops::Neg;

use crate::error::{require_finite, EvidenceError, Result};

/// `ln √(2π)`.
pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument `ln Φ` switches from `erfc` to the Mills-ratio series.
/// At `z = 30` the smallest series term is of order `e^{-450}`.
const MILLS_SWITCH: f64 = -30.0;

/// Natural logarithm of an odds ratio.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogOdds(pub f64);

impl LogOdds {
    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn log10(self) -> f64 {
        self.0 / std::f64::consts::LN_10
    }

    /// Linear odds; may be `inf` or `0` when out of range.
    pub fn exp(self) -> f64 {
        self.0.exp()
    }
}

impl Neg for LogOdds {
    type Output = LogOdds;

    fn neg(self) -> LogOdds {
        LogOdds(-self.0)
    }
}

impl fmt::Display for LogOdds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ln-odds {}", self.0)
    }
}

// Unchecked kernels used throughout the crate. Callers validate finiteness.

#[inline]
pub(crate) fn ln_phi(y: f64) -> f64 {
    -0.5 * y * y - LN_SQRT_2PI
}

#[inline]
pub(crate) fn phi(y: f64) -> f64 {
    (-0.5 * y * y).exp() / (2.0 * PI).sqrt()
}

/// `Φ(y)`; underflows to zero below about `-38.5`.
#[inline]
pub(crate) fn cdf(y: f64) -> f64 {
    0.5 * libm::erfc(-y * FRAC_1_SQRT_2)
}

pub(crate) fn ln_cdf(y: f64) -> f64 {
    if y < MILLS_SWITCH {
        ln_cdf_mills(y)
    } else if y < 0.0 {
        cdf(y).ln()
    } else {
        // Φ(y) = 1 - Φ(-y) with Φ(-y) small and accurate.
        (-cdf(-y)).ln_1p()
    }
}

/// Asymptotic `ln Φ(y)` for `y < 0`, summing the Mills-ratio series until
/// the terms stop shrinking or fall below double precision.
fn ln_cdf_mills(y: f64) -> f64 {
    let z = -y;
    let inv_z2 = 1.0 / (z * z);
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for n in 1..200 {
        let next = -term * (2 * n - 1) as f64 * inv_z2;
        if next.abs() >= term.abs() || next.abs() < 1e-18 * sum.abs() {
            break;
        }
        sum += next;
        term = next;
    }
    -0.5 * z * z - z.ln() - LN_SQRT_2PI + sum.ln()
}

#[inline]
pub(crate) fn ln_lambda(y: f64) -> f64 {
    ln_cdf(y) - ln_cdf(-y)
}

/// Quantile for `u` in `(0, 1)`; `u == 0.5` maps to exactly `0`.
pub(crate) fn quantile(u: f64) -> f64 {
    if u == 0.5 {
        return 0.0;
    }
    if u > 0.5 {
        // 1 - u is exact for u in [0.5, 1].
        return -quantile(1.0 - u);
    }
    let target = u.ln();
    // ln Φ(-40) ≈ -804.6 lies below the log of the smallest subnormal.
    let (mut lo, mut hi) = (-40.0_f64, 0.0_f64);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if ln_cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton on ln Φ(x) - ln u, whose derivative is φ(x)/Φ(x).
    let mut x = 0.5 * (lo + hi);
    for _ in 0..4 {
        let lc = ln_cdf(x);
        let slope = (ln_phi(x) - lc).exp();
        let step = (lc - target) / slope;
        let next = x - step;
        if !next.is_finite() || next < lo || next > hi {
            break;
        }
        x = next;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Standard normal density `φ(y)`.
pub fn std_normal_pdf(y: f64) -> Result<f64> {
    require_finite("y", y)?;
    Ok(phi(y))
}

/// Standard normal distribution function `Φ(y)`.
///
/// For very negative `y` the result underflows; use [`std_normal_log_cdf`].
pub fn std_normal_cdf(y: f64) -> Result<f64> {
    require_finite("y", y)?;
    Ok(cdf(y))
}

/// `ln Φ(y)`, accurate to about 1e-12 relative down to `y = -300` and beyond.
pub fn std_normal_log_cdf(y: f64) -> Result<f64> {
    require_finite("y", y)?;
    Ok(ln_cdf(y))
}

/// Inverse of [`std_normal_cdf`] on `(0, 1)`, by bracketed bisection followed
/// by Newton polishing on the log-cdf.
pub fn std_normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(EvidenceError::Domain(format!("quantile level must lie in (0, 1), got {u}")));
    }
    Ok(quantile(u))
}

/// `Λ(y) = Φ(y)/Φ(-y)` on the linear scale.
///
/// Uses the direct ratio while both tails are normal floats and otherwise
/// exponentiates [`log_lambda_ratio`]. Values that do not fit an `f64`
/// yield [`EvidenceError::Overflow`].
pub fn lambda_ratio(y: f64) -> Result<f64> {
    require_finite("y", y)?;
    let (num, den) = (cdf(y), cdf(-y));
    if num >= f64::MIN_POSITIVE && den >= f64::MIN_POSITIVE {
        return Ok(num / den);
    }
    let l = ln_lambda(y);
    if l > f64::MAX.ln() || l < f64::MIN_POSITIVE.ln() {
        return Err(EvidenceError::Overflow(y));
    }
    Ok(l.exp())
}

/// `ln Λ(y)`, finite for every finite `y` and odd in `y`.
pub fn log_lambda_ratio(y: f64) -> Result<LogOdds> {
    require_finite("y", y)?;
    Ok(LogOdds(ln_lambda(y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from 40-digit evaluations (mpmath ncdf / npdf).
    const PDF_2: f64 = 0.053_990_966_513_188_05;
    const CDF_1_96: f64 = 0.975_002_104_851_779_6;
    const LN_CDF_M10: f64 = -53.231_285_150_512_47;
    const LN_CDF_M40: f64 = -804.608_442_013_753_8;
    const Q_0975: f64 = 1.959_963_984_540_054_2;
    const LAMBDA_1: f64 = 5.302_974_375_068_754;
    const LAMBDA_SQRT3: f64 = 23.019_835_581_121_116;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn pdf_values() {
        assert_eq!(std_normal_pdf(0.0).unwrap(), 0.398_942_280_401_432_7);
        assert_eq!(std_normal_pdf(1.0).unwrap(), std_normal_pdf(-1.0).unwrap());
        assert!(close(std_normal_pdf(2.0).unwrap(), PDF_2, 1e-15));
        assert!(std_normal_pdf(f64::NAN).is_err());
        assert!(std_normal_pdf(f64::INFINITY).is_err());
    }

    #[test]
    fn cdf_values() {
        assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
        assert!(close(std_normal_cdf(1.96).unwrap(), CDF_1_96, 1e-15));
        assert!(std_normal_cdf(-40.0).unwrap() >= 0.0);
        assert!(std_normal_log_cdf(-40.0).unwrap().is_finite());
        assert!(std_normal_cdf(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn cdf_symmetry() {
        let mut y = -9.0;
        while y <= 9.0 {
            let s = cdf(y) + cdf(-y);
            assert!((s - 1.0).abs() <= 1e-15, "y={y} sum={s}");
            y += 0.0137;
        }
    }

    #[test]
    fn log_cdf_tail() {
        assert_eq!(std_normal_log_cdf(0.0).unwrap(), 0.5_f64.ln());
        assert!(close(std_normal_log_cdf(-10.0).unwrap(), LN_CDF_M10, 1e-12));
        assert!(close(std_normal_log_cdf(-40.0).unwrap(), LN_CDF_M40, 1e-12));
        let c3 = std_normal_cdf(3.0).unwrap().ln();
        assert!((std_normal_log_cdf(3.0).unwrap() - c3).abs() <= 1e-14);
    }

    #[test]
    fn log_cdf_continuous_at_series_switch() {
        let below = ln_cdf_mills(MILLS_SWITCH);
        let above = cdf(MILLS_SWITCH).ln();
        assert!(close(below, above, 1e-13), "{below} vs {above}");
    }

    #[test]
    fn quantile_values() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        assert!(close(std_normal_quantile(0.975).unwrap(), Q_0975, 1e-13));
        assert_eq!(
            std_normal_quantile(0.25).unwrap(),
            -std_normal_quantile(0.75).unwrap()
        );
        for u in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(std_normal_quantile(u).is_err(), "u={u}");
        }
    }

    #[test]
    fn quantile_deep_tail() {
        for u in [1e-300, 1e-100, 1e-20] {
            let q = std_normal_quantile(u).unwrap();
            assert!(close(ln_cdf(q), u.ln(), 1e-13), "u={u}");
        }
    }

    #[test]
    fn lambda_values() {
        assert_eq!(lambda_ratio(0.0).unwrap(), 1.0);
        assert!(close(lambda_ratio(1.0).unwrap(), LAMBDA_1, 1e-14));
        assert!(close(lambda_ratio(3f64.sqrt()).unwrap(), LAMBDA_SQRT3, 1e-14));
        assert_eq!(log_lambda_ratio(0.0).unwrap(), LogOdds(0.0));
    }

    #[test]
    fn lambda_overflow_is_distinct() {
        assert!(matches!(lambda_ratio(60.0), Err(EvidenceError::Overflow(_))));
        assert!(matches!(lambda_ratio(-60.0), Err(EvidenceError::Overflow(_))));
        let l = log_lambda_ratio(60.0).unwrap();
        assert!(l.ln().is_finite() && l.ln() > 700.0);
    }

    #[test]
    fn log_lambda_is_odd() {
        for y in [0.1, 1.0, 5.0, 37.0, 120.0, 300.0] {
            assert_eq!(log_lambda_ratio(-y).unwrap(), -log_lambda_ratio(y).unwrap());
        }
    }
}
