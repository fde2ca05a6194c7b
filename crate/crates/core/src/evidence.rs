//! The computed strength of evidence and its diagnostics.

use std::f64::consts::LN_10;
use std::fmt;

use serde::Serialize;

/// Beyond this magnitude of `log10 V` the linear value is not reported.
pub const SATURATION_LOG10: f64 = 300.0;

/// Which route produced a strength of evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Nonparam,
    KnownPrior,
    Balanced,
    Unbalanced,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Nonparam => "nonparam",
            Method::KnownPrior => "known-prior",
            Method::Balanced => "balanced",
            Method::Unbalanced => "unbalanced",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nonparam" => Ok(Method::Nonparam),
            "known-prior" => Ok(Method::KnownPrior),
            "balanced" => Ok(Method::Balanced),
            "unbalanced" => Ok(Method::Unbalanced),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// A strength of evidence `V(x)`.
///
/// `log10_value` is the primary quantity. `value` holds the linear form only
/// while `|log10 V| <= 300`; otherwise the result is saturated. A lower
/// supremum that underflows to zero gives `log10_value = +inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvidenceStrength {
    pub log10_value: f64,
    pub value: Option<f64>,
    pub method: Method,
    pub tau_hat: Option<f64>,
    pub mu_hat: Option<f64>,
    pub in_flat_region: bool,
}

impl EvidenceStrength {
    /// Builds a result from `ln V`.
    pub fn from_ln(ln_value: f64, method: Method) -> Self {
        let log10_value = ln_value / LN_10;
        let value = if log10_value.is_finite() && log10_value.abs() <= SATURATION_LOG10 {
            Some(ln_value.exp())
        } else {
            None
        };
        EvidenceStrength {
            log10_value,
            value,
            method,
            tau_hat: None,
            mu_hat: None,
            in_flat_region: false,
        }
    }

    /// `V = 1` exactly, flagged as lying in the flat region.
    pub fn flat(method: Method) -> Self {
        EvidenceStrength {
            in_flat_region: true,
            ..Self::from_ln(0.0, method)
        }
    }

    pub fn with_prior_fit(mut self, mu_hat: f64, tau_hat: f64) -> Self {
        self.mu_hat = Some(mu_hat);
        self.tau_hat = Some(tau_hat);
        self
    }

    pub fn ln_value(&self) -> f64 {
        self.log10_value * LN_10
    }

    pub fn is_saturated(&self) -> bool {
        self.value.is_none()
    }
}
