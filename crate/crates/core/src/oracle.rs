//! Brute-force reference computations used to cross-check the closed forms.
//!
//! * [`v_by_integration`] evaluates the Bayes factor
//!   `(∫_{θ≥θ₀} f π / P(θ≥θ₀)) / (∫_{θ<θ₀} f π / P(θ<θ₀))` directly, by adaptive
//!   Simpson quadrature for continuous priors or by summation for discrete ones.
//! * [`maximize_likelihood_grid`] maximises a likelihood in a nonnegative
//!   parameter by a dense grid followed by golden-section refinement.
//! * [`finite_difference_sign`] gives the sign of a central difference.
//!
//! None of these routines use the closed forms they are meant to check.

use std::fmt;
use std::sync::Arc;

use crate::error::{require_finite, require_positive, EvidenceError, Result};
use crate::models::{log_sum_exp, EvidenceModel};
use crate::nonparam::TwoPointPrior;
use crate::optimize::{golden_section_max, linspace};
use crate::param::NormalPrior;
use crate::stats::ln_phi;

/// Relative tolerance of each one-sided integral.
pub const INTEGRATION_REL_TOL: f64 = 1e-10;

/// Truncation of the integration range, in combined standard deviations.
pub const TRUNCATION_SDS: f64 = 12.0;

/// Prior masses are integrated over this many prior scales around the prior centre.
const PRIOR_MASS_SDS: f64 = 40.0;

const INITIAL_PANELS: usize = 64;
const MAX_DEPTH: u32 = 48;

/// Smallest one-sided prior mass for which odds are considered defined.
pub const MIN_SIDE_MASS: f64 = 1e-300;

/// Points in the coarse grid of [`maximize_likelihood_grid`].
pub const LIKELIHOOD_GRID_POINTS: usize = 4097;

/// Which hypothesis an atom of a discrete prior belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// `θ >= θ₀`.
    Upper,
    /// `θ < θ₀`.
    Lower,
}

/// A point mass of a discrete prior. Without an explicit hypothesis the atom
/// is assigned by comparing `theta` with `θ₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub theta: f64,
    pub weight: f64,
    pub hypothesis: Option<Hypothesis>,
}

/// A prior with a density, given on the log scale.
#[derive(Clone)]
pub struct ContinuousPrior {
    log_density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    support: (f64, f64),
    center: f64,
    scale: f64,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for ContinuousPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuousPrior")
            .field("support", &self.support)
            .field("center", &self.center)
            .field("scale", &self.scale)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl ContinuousPrior {
    /// `center` and `scale` locate the bulk of the prior; they bound the
    /// integration range together with `support`.
    pub fn from_log_density<F>(log_density: F, support: (f64, f64), center: f64, scale: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        require_finite("prior center", center)?;
        require_positive("prior scale", scale)?;
        if !(support.0 < support.1) {
            return Err(EvidenceError::Domain(format!("empty prior support {support:?}")));
        }
        Ok(ContinuousPrior {
            log_density: Arc::new(log_density),
            support,
            center,
            scale,
            breakpoints: Vec::new(),
        })
    }

    /// Normal prior `N(mu, tau²)`; needs `tau > 0`.
    pub fn normal(prior: NormalPrior) -> Result<Self> {
        require_positive("tau", prior.tau)?;
        let NormalPrior { mu, tau } = prior;
        Self::from_log_density(
            move |t| ln_phi((t - mu) / tau) - tau.ln(),
            (f64::NEG_INFINITY, f64::INFINITY),
            mu,
            tau,
        )
    }

    /// Extra points at which integration intervals are split, e.g. component
    /// centres or discontinuities.
    pub fn with_breakpoints(mut self, points: Vec<f64>) -> Self {
        self.breakpoints = points;
        self
    }

    fn checked_log_density(&self, t: f64) -> Result<f64> {
        let v = (self.log_density)(t);
        if v.is_nan() || v == f64::INFINITY {
            return Err(EvidenceError::ModelValidity(format!(
                "prior log-density is not a valid value at theta = {t}"
            )));
        }
        Ok(v)
    }
}

/// A prior on `θ`.
#[derive(Debug, Clone)]
pub enum GenericPrior {
    Continuous(ContinuousPrior),
    Discrete(Vec<Atom>),
}

impl GenericPrior {
    /// Discrete prior whose atoms are assigned to hypotheses by position.
    pub fn discrete(points: &[(f64, f64)]) -> Result<Self> {
        let atoms: Vec<Atom> = points
            .iter()
            .map(|&(theta, weight)| Atom { theta, weight, hypothesis: None })
            .collect();
        Self::discrete_atoms(atoms)
    }

    pub fn discrete_atoms(atoms: Vec<Atom>) -> Result<Self> {
        let mut total = 0.0;
        for a in &atoms {
            require_finite("atom location", a.theta)?;
            if !(a.weight >= 0.0 && a.weight.is_finite()) {
                return Err(EvidenceError::Domain(format!("atom weight must be >= 0, got {}", a.weight)));
            }
            total += a.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(EvidenceError::Domain(format!("atom weights must sum to 1, got {total}")));
        }
        Ok(GenericPrior::Discrete(atoms))
    }

    pub fn normal(prior: NormalPrior) -> Result<Self> {
        Ok(GenericPrior::Continuous(ContinuousPrior::normal(prior)?))
    }
}

impl From<&TwoPointPrior> for GenericPrior {
    fn from(p: &TwoPointPrior) -> Self {
        GenericPrior::Discrete(vec![
            Atom { theta: p.theta_p, weight: p.weight_p, hypothesis: Some(Hypothesis::Upper) },
            Atom { theta: p.theta_d, weight: p.weight_d, hypothesis: Some(Hypothesis::Lower) },
        ])
    }
}

/// Log-scale one-sided integrals `∫ f(x|θ) dπ(θ)` and prior masses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideIntegrals {
    pub ln_lower: f64,
    pub ln_upper: f64,
    pub ln_mass_lower: f64,
    pub ln_mass_upper: f64,
}

impl SideIntegrals {
    /// `ln` of the evidence density `g(x)`.
    pub fn ln_marginal(&self) -> f64 {
        log_sum_exp(&[self.ln_lower, self.ln_upper])
    }

    /// `ln V`.
    pub fn ln_v(&self) -> f64 {
        (self.ln_upper - self.ln_mass_upper) - (self.ln_lower - self.ln_mass_lower)
    }
}

/// Computes both one-sided integrals and prior masses without dividing.
pub fn side_integrals(
    prior: &GenericPrior,
    model: &EvidenceModel,
    x: f64,
    theta0: f64,
) -> Result<SideIntegrals> {
    side_integrals_with_tolerance(prior, model, x, theta0, INTEGRATION_REL_TOL)
}

/// [`side_integrals`] with an explicit relative tolerance for each integral.
pub fn side_integrals_with_tolerance(
    prior: &GenericPrior,
    model: &EvidenceModel,
    x: f64,
    theta0: f64,
    rel_tol: f64,
) -> Result<SideIntegrals> {
    require_finite("x", x)?;
    require_finite("theta0", theta0)?;
    require_positive("rel_tol", rel_tol)?;
    match prior {
        GenericPrior::Discrete(atoms) => discrete_sides(atoms, model, x, theta0),
        GenericPrior::Continuous(p) => continuous_sides(p, model, x, theta0, rel_tol),
    }
}

/// The Bayes factor by direct integration (or summation) against `prior`.
///
/// Fails with [`EvidenceError::UndefinedOdds`] when either side carries
/// prior mass below [`MIN_SIDE_MASS`].
pub fn v_by_integration(prior: &GenericPrior, model: &EvidenceModel, x: f64, theta0: f64) -> Result<f64> {
    Ok(ln_v_by_integration(prior, model, x, theta0)?.exp())
}

/// `ln V` by direct integration; see [`v_by_integration`].
pub fn ln_v_by_integration(prior: &GenericPrior, model: &EvidenceModel, x: f64, theta0: f64) -> Result<f64> {
    let s = side_integrals(prior, model, x, theta0)?;
    let floor = MIN_SIDE_MASS.ln();
    if s.ln_mass_lower < floor || s.ln_mass_upper < floor {
        return Err(EvidenceError::UndefinedOdds(format!(
            "prior mass below {MIN_SIDE_MASS:e} on one side of theta0 = {theta0}"
        )));
    }
    Ok(s.ln_v())
}

fn discrete_sides(atoms: &[Atom], model: &EvidenceModel, x: f64, theta0: f64) -> Result<SideIntegrals> {
    let (mut lo, mut up, mut mlo, mut mup) = (vec![], vec![], vec![], vec![]);
    for a in atoms {
        if a.weight == 0.0 {
            continue;
        }
        let side = a.hypothesis.unwrap_or(if a.theta >= theta0 { Hypothesis::Upper } else { Hypothesis::Lower });
        let lw = a.weight.ln();
        let term = lw + model.log_density_at(x, a.theta)?;
        match side {
            Hypothesis::Upper => {
                up.push(term);
                mup.push(lw);
            }
            Hypothesis::Lower => {
                lo.push(term);
                mlo.push(lw);
            }
        }
    }
    Ok(SideIntegrals {
        ln_lower: log_sum_exp(&lo),
        ln_upper: log_sum_exp(&up),
        ln_mass_lower: log_sum_exp(&mlo),
        ln_mass_upper: log_sum_exp(&mup),
    })
}

fn continuous_sides(
    p: &ContinuousPrior,
    model: &EvidenceModel,
    x: f64,
    theta0: f64,
    rel_tol: f64,
) -> Result<SideIntegrals> {
    let (lo_bound, hi_bound) = {
        let lb = model.theta_lower_bound().map_or(p.support.0, |b| b.max(p.support.0));
        (lb, p.support.1)
    };
    // Normal-normal posterior algebra places the bulk of f(x|θ)π(θ).
    let (mc, ms) = model.theta_hint(x);
    let (pc, ps) = (p.center, p.scale);
    let combined = ms.hypot(ps);
    let post_mean = (ps * ps * mc + ms * ms * pc) / (combined * combined);
    let post_sd = ms * ps / combined;
    let a = (post_mean - TRUNCATION_SDS * combined).max(lo_bound);
    let b = (post_mean + TRUNCATION_SDS * combined).min(hi_bound);

    let mut splits = vec![theta0, post_mean, pc, mc];
    for k in [1.0, 3.0, 6.0] {
        splits.push(post_mean - k * post_sd);
        splits.push(post_mean + k * post_sd);
    }
    splits.extend(p.breakpoints.iter().copied());

    let log_integrand = |t: f64| -> Result<f64> {
        let lp = p.checked_log_density(t)?;
        if lp == f64::NEG_INFINITY {
            return Ok(lp);
        }
        Ok(lp + model.log_density_at(x, t)?)
    };
    let ln_lower = log_integral(&log_integrand, a, b.min(theta0), &splits, rel_tol)?;
    let ln_upper = log_integral(&log_integrand, a.max(theta0), b, &splits, rel_tol)?;

    let ma = (pc - PRIOR_MASS_SDS * ps).max(p.support.0);
    let mb = (pc + PRIOR_MASS_SDS * ps).min(p.support.1);
    let prior_log = |t: f64| p.checked_log_density(t);
    let mass_splits = [theta0, pc, pc - ps, pc + ps];
    let mut mass_splits: Vec<f64> = mass_splits.to_vec();
    mass_splits.extend(p.breakpoints.iter().copied());
    let ln_mass_lower = log_integral(&prior_log, ma, mb.min(theta0), &mass_splits, rel_tol)?;
    let ln_mass_upper = log_integral(&prior_log, ma.max(theta0), mb, &mass_splits, rel_tol)?;

    Ok(SideIntegrals { ln_lower, ln_upper, ln_mass_lower, ln_mass_upper })
}

/// `ln ∫_a^b exp(h(t)) dt` by adaptive Simpson on `exp(h - shift)`, splitting
/// `[a, b]` at every point of `splits` that falls inside.
fn log_integral<H>(h: &H, a: f64, b: f64, splits: &[f64], rel_tol: f64) -> Result<f64>
where
    H: Fn(f64) -> Result<f64>,
{
    if !(b > a) {
        return Ok(f64::NEG_INFINITY);
    }
    let mut knots: Vec<f64> = splits.iter().copied().filter(|&s| s > a && s < b).collect();
    knots.push(a);
    knots.push(b);
    knots.sort_by(|x, y| x.partial_cmp(y).expect("finite knots"));
    knots.dedup();

    // Coarse pass: find the peak of h for scaling, and per-panel boundaries.
    let mut panels = Vec::new();
    let mut shift = f64::NEG_INFINITY;
    for w in knots.windows(2) {
        for t in linspace(w[0], w[1], INITIAL_PANELS + 1) {
            shift = shift.max(h(t)?);
        }
        panels.push((w[0], w[1]));
    }
    if shift == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let f = |t: f64| -> Result<f64> { Ok((h(t)? - shift).exp()) };

    // A crude Simpson estimate fixes the absolute tolerance.
    let mut coarse = 0.0;
    let mut pieces = Vec::new();
    for &(pa, pb) in &panels {
        let pts = linspace(pa, pb, INITIAL_PANELS + 1);
        for w in pts.windows(2) {
            let (l, r) = (w[0], w[1]);
            let m = 0.5 * (l + r);
            let (fl, fm, fr) = (f(l)?, f(m)?, f(r)?);
            let s = (r - l) / 6.0 * (fl + 4.0 * fm + fr);
            coarse += s;
            pieces.push((l, r, fl, fm, fr, s));
        }
    }
    let tol = rel_tol * coarse.abs();
    let n = pieces.len() as f64;
    let mut total = 0.0;
    for (l, r, fl, fm, fr, s) in pieces {
        total += simpson_refine(&f, l, r, fl, fm, fr, s, tol / n, MAX_DEPTH)?;
    }
    if !(total > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(total.ln() + shift)
}

#[allow(clippy::too_many_arguments)]
fn simpson_refine<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Maximises a positive objective over `[0, bracket_max]`: a grid of
/// [`LIKELIHOOD_GRID_POINTS`] points, then golden-section refinement in the
/// best cell to `1e-10` in the argument. A grid maximum at index 0 whose
/// refinement does not beat the value at zero returns exactly `0`.
pub fn maximize_likelihood_grid<F>(objective: F, bracket_max: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    require_positive("bracket_max", bracket_max)?;
    let eval = |t: f64| -> Result<f64> {
        let v = objective(t);
        if !v.is_finite() {
            return Err(EvidenceError::Numerical(format!("objective is not finite at {t}: {v}")));
        }
        Ok(v)
    };
    let grid = linspace(0.0, bracket_max, LIKELIHOOD_GRID_POINTS);
    let mut best_i = 0;
    let mut best_v = eval(0.0)?;
    for (i, &t) in grid.iter().enumerate().skip(1) {
        let v = eval(t)?;
        if v > best_v {
            best_i = i;
            best_v = v;
        }
    }
    let lo = grid[best_i.saturating_sub(1)];
    let hi = grid[(best_i + 1).min(grid.len() - 1)];
    let (t, v) = golden_section_max(|t| objective(t), lo, hi, 1e-10);
    if best_i == 0 && (v <= best_v || t <= 1e-10) {
        return Ok((0.0, best_v));
    }
    let (t, v) = parabolic_polish(&objective, t, v, lo, hi, 1e-3 * (grid[1] - grid[0]));
    if v >= best_v {
        Ok((t, v))
    } else {
        Ok((grid[best_i], best_v))
    }
}

/// One vertex step of the parabola through `ln objective` at `t - h, t, t + h`;
/// exact for normal-shaped peaks.
fn parabolic_polish<F>(objective: &F, t: f64, v: f64, lo: f64, hi: f64, h: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    if t - h < lo || t + h > hi || !(v > 0.0) {
        return (t, v);
    }
    let (lm, l0, lp) = (objective(t - h).ln(), v.ln(), objective(t + h).ln());
    let curvature = lp - 2.0 * l0 + lm;
    if !(curvature < 0.0) {
        return (t, v);
    }
    let vertex = t - 0.5 * h * (lp - lm) / curvature;
    if !(vertex >= lo && vertex <= hi) {
        return (t, v);
    }
    let fv = objective(vertex);
    if fv >= v {
        (vertex, fv)
    } else {
        (t, v)
    }
}

/// Sign of the central difference of `objective` at `at`, with relative
/// changes below `1e-12` reported as `0`.
pub fn finite_difference_sign<F>(objective: F, at: f64, step: f64) -> i32
where
    F: Fn(f64) -> f64,
{
    let up = objective(at + step);
    let down = objective(at - step);
    let diff = up - down;
    let scale = up.abs().max(down.abs());
    if diff.abs() <= 1e-12 * scale {
        0
    } else if diff > 0.0 {
        1
    } else {
        -1
    }
}
