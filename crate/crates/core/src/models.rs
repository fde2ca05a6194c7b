//! Measurement families `f(x|θ)` and their one-sided likelihood suprema.
//!
//! Three families are supported: the normal location model with known
//! standard error, a generic location family `f(x|θ) = k(x - θ)` and a generic
//! scale family `f(x|θ) = k(x/θ)/θ` for `θ > 0`. Suprema for the generic
//! families are found in the kernel argument `t` on a fixed grid of
//! [`GRID_POINTS`] points over `[-W, W]`, followed by golden-section refinement
//! around the best grid point. Everything is carried on the log scale so that
//! tail densities do not underflow.

use std::fmt;
use std::sync::Arc;

use crate::error::{require_finite, require_positive, EvidenceError, Result};
use crate::optimize::{golden_section_max, linspace};
use crate::stats::{ln_phi, LN_SQRT_2PI};

/// Points in the coarse search grid.
pub const GRID_POINTS: usize = 4097;

/// Default search half-width, in kernel scale units.
pub const DEFAULT_HALFWIDTH_SCALES: f64 = 12.0;

/// A density `k` on the real line.
pub trait Kernel: Send + Sync + fmt::Debug {
    /// `ln k(t)`. May be `-inf` where `k` underflows; `NaN` signals an invalid kernel.
    fn log_density(&self, t: f64) -> f64;

    /// A characteristic width of `k`, used to size search windows.
    fn scale(&self) -> f64;

    fn name(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalComponent {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Finite mixture of normal densities; covers `φ`, scaled normals and the
/// bimodal kernels used to exhibit flat parts.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMixtureKernel {
    components: Vec<NormalComponent>,
}

impl NormalMixtureKernel {
    pub fn new(components: Vec<NormalComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(EvidenceError::ModelValidity("mixture needs at least one component".into()));
        }
        let mut total = 0.0;
        for c in &components {
            require_finite("component mean", c.mean)?;
            require_positive("component sd", c.sd)?;
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(EvidenceError::ModelValidity(format!(
                    "component weight must be positive, got {}",
                    c.weight
                )));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(EvidenceError::ModelValidity(format!(
                "mixture weights must sum to 1, got {total}"
            )));
        }
        Ok(NormalMixtureKernel { components })
    }

    /// The standard normal density `φ`.
    pub fn standard() -> Self {
        Self::scaled(1.0)
    }

    /// `φ(t/sd)/sd`.
    pub fn scaled(sd: f64) -> Self {
        NormalMixtureKernel {
            components: vec![NormalComponent { weight: 1.0, mean: 0.0, sd }],
        }
    }

    /// The built-in two-component kernel `0.6·N(-2, 0.5²) + 0.4·N(2, 0.5²)`,
    /// stretched by `unit`.
    pub fn bimodal(unit: f64) -> Self {
        NormalMixtureKernel {
            components: vec![
                NormalComponent { weight: 0.6, mean: -2.0 * unit, sd: 0.5 * unit },
                NormalComponent { weight: 0.4, mean: 2.0 * unit, sd: 0.5 * unit },
            ],
        }
    }

    pub fn components(&self) -> &[NormalComponent] {
        &self.components
    }
}

impl Kernel for NormalMixtureKernel {
    fn log_density(&self, t: f64) -> f64 {
        let terms: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.weight.ln() + ln_phi((t - c.mean) / c.sd) - c.sd.ln())
            .collect();
        log_sum_exp(&terms)
    }

    fn scale(&self) -> f64 {
        let mean: f64 = self.components.iter().map(|c| c.weight * c.mean).sum();
        let second: f64 = self
            .components
            .iter()
            .map(|c| c.weight * (c.sd * c.sd + c.mean * c.mean))
            .sum();
        (second - mean * mean).max(0.0).sqrt()
    }

    fn name(&self) -> String {
        if self.components.len() == 1 {
            format!("normal(sd={})", self.components[0].sd)
        } else {
            format!("normal-mixture({} components)", self.components.len())
        }
    }
}

/// A kernel given by a closure returning `k(t)` on the linear scale.
#[derive(Clone)]
pub struct FnKernel {
    density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    scale: f64,
    name: String,
}

impl FnKernel {
    pub fn new<F>(name: impl Into<String>, scale: f64, density: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        require_positive("kernel scale", scale)?;
        Ok(FnKernel {
            density: Arc::new(density),
            scale,
            name: name.into(),
        })
    }
}

impl fmt::Debug for FnKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnKernel")
            .field("name", &self.name)
            .field("scale", &self.scale)
            .finish()
    }
}

impl Kernel for FnKernel {
    fn log_density(&self, t: f64) -> f64 {
        let d = (self.density)(t);
        if d >= 0.0 {
            d.ln()
        } else {
            f64::NAN
        }
    }

    fn scale(&self) -> f64 {
        self.scale
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Normal measurement error with known standard error `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalLocationModel {
    sigma: f64,
}

impl NormalLocationModel {
    pub fn new(sigma: f64) -> Result<Self> {
        require_positive("sigma", sigma)?;
        Ok(NormalLocationModel { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// The same model as a generic location family with kernel `φ(t/σ)/σ`.
    pub fn as_location_family(&self) -> LocationFamily {
        LocationFamily::new(Arc::new(NormalMixtureKernel::scaled(self.sigma)))
            .expect("normal kernel is a valid location kernel")
    }
}

/// `f(x|θ) = k(x - θ)`.
#[derive(Debug, Clone)]
pub struct LocationFamily {
    kernel: Arc<dyn Kernel>,
    search_halfwidth: f64,
}

impl LocationFamily {
    /// Uses a search half-width of 12 kernel scales.
    pub fn new(kernel: Arc<dyn Kernel>) -> Result<Self> {
        let w = DEFAULT_HALFWIDTH_SCALES * kernel.scale();
        Self::with_halfwidth(kernel, w)
    }

    pub fn with_halfwidth(kernel: Arc<dyn Kernel>, search_halfwidth: f64) -> Result<Self> {
        check_window(search_halfwidth)?;
        check_normalization(kernel.as_ref(), search_halfwidth)?;
        Ok(LocationFamily { kernel, search_halfwidth })
    }

    pub fn kernel(&self) -> &dyn Kernel {
        self.kernel.as_ref()
    }

    pub fn search_halfwidth(&self) -> f64 {
        self.search_halfwidth
    }
}

/// `f(x|θ) = k(x/θ)/θ` for `θ > 0`.
#[derive(Debug, Clone)]
pub struct ScaleFamily {
    kernel: Arc<dyn Kernel>,
    search_halfwidth: f64,
}

impl ScaleFamily {
    pub fn new(kernel: Arc<dyn Kernel>) -> Result<Self> {
        let w = DEFAULT_HALFWIDTH_SCALES * kernel.scale();
        Self::with_halfwidth(kernel, w)
    }

    pub fn with_halfwidth(kernel: Arc<dyn Kernel>, search_halfwidth: f64) -> Result<Self> {
        check_window(search_halfwidth)?;
        check_normalization(kernel.as_ref(), search_halfwidth)?;
        Ok(ScaleFamily { kernel, search_halfwidth })
    }

    pub fn kernel(&self) -> &dyn Kernel {
        self.kernel.as_ref()
    }

    pub fn search_halfwidth(&self) -> f64 {
        self.search_halfwidth
    }
}

fn check_window(w: f64) -> Result<()> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(EvidenceError::Domain(format!(
            "degenerate search window: half-width must be positive, got {w}"
        )));
    }
    Ok(())
}

/// Simpson's rule on the search grid; the kernel must carry mass ≈ 1 on `[-W, W]`.
fn check_normalization(kernel: &dyn Kernel, w: f64) -> Result<()> {
    let grid = linspace(-w, w, GRID_POINTS);
    let h = grid[1] - grid[0];
    let mut total = 0.0;
    for (i, &t) in grid.iter().enumerate() {
        let d = checked_log_density(kernel, t)?.exp();
        let coef = if i == 0 || i == GRID_POINTS - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        total += coef * d;
    }
    total *= h / 3.0;
    if (total - 1.0).abs() > 1e-3 {
        return Err(EvidenceError::ModelValidity(format!(
            "kernel `{}` integrates to {total} on [-{w}, {w}], expected 1",
            kernel.name()
        )));
    }
    Ok(())
}

fn checked_log_density(kernel: &dyn Kernel, t: f64) -> Result<f64> {
    let v = kernel.log_density(t);
    if v.is_nan() || v == f64::INFINITY {
        return Err(EvidenceError::ModelValidity(format!(
            "kernel `{}` is not a positive finite density at t = {t}",
            kernel.name()
        )));
    }
    Ok(v)
}

/// Which hypothesis side a supremum is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `θ >= θ₀`.
    Upper,
    /// `θ < θ₀`, evaluated over its closure.
    Lower,
}

/// A one-sided supremum of `θ ↦ f(x|θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Supremum {
    pub log_value: f64,
    /// The maximising `θ`; equals `θ₀` when `at_threshold` is set.
    pub arg: f64,
    /// The supremum sits at `θ₀` (for the lower side: attained only in the closure).
    pub at_threshold: bool,
}

impl Supremum {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// A parametric measurement family.
#[derive(Debug, Clone)]
pub enum EvidenceModel {
    NormalLocation(NormalLocationModel),
    Location(LocationFamily),
    Scale(ScaleFamily),
}

impl EvidenceModel {
    pub fn normal_location(sigma: f64) -> Result<Self> {
        Ok(EvidenceModel::NormalLocation(NormalLocationModel::new(sigma)?))
    }

    /// Scale family with `k = φ`.
    pub fn normal_scale() -> Self {
        EvidenceModel::Scale(
            ScaleFamily::new(Arc::new(NormalMixtureKernel::standard()))
                .expect("standard normal is a valid scale kernel"),
        )
    }

    /// Location family with the built-in bimodal kernel in units of `unit`.
    pub fn normal_mixture_location(unit: f64) -> Result<Self> {
        require_positive("unit", unit)?;
        Ok(EvidenceModel::Location(LocationFamily::new(Arc::new(
            NormalMixtureKernel::bimodal(unit),
        ))?))
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        require_finite("theta", theta)?;
        if let EvidenceModel::Scale(_) = self {
            if theta <= 0.0 {
                return Err(EvidenceError::Domain(format!(
                    "scale family requires theta > 0, got {theta}"
                )));
            }
        }
        Ok(())
    }

    /// `ln f(x|θ)`.
    pub fn log_density_at(&self, x: f64, theta: f64) -> Result<f64> {
        require_finite("x", x)?;
        self.check_theta(theta)?;
        Ok(match self {
            EvidenceModel::NormalLocation(m) => ln_phi((x - theta) / m.sigma) - m.sigma.ln(),
            EvidenceModel::Location(fam) => checked_log_density(fam.kernel(), x - theta)?,
            EvidenceModel::Scale(fam) => checked_log_density(fam.kernel(), x / theta)? - theta.ln(),
        })
    }

    /// `f(x|θ)`.
    pub fn density_at(&self, x: f64, theta: f64) -> Result<f64> {
        Ok(self.log_density_at(x, theta)?.exp())
    }

    /// One-sided supremum of `f(x|θ)` over `θ >= θ₀` or `θ < θ₀`.
    ///
    /// The normal location model uses its closed form; the generic families
    /// search numerically.
    pub fn sup_density(&self, x: f64, theta0: f64, side: Side) -> Result<Supremum> {
        require_finite("x", x)?;
        require_finite("theta0", theta0)?;
        match self {
            EvidenceModel::NormalLocation(m) => Ok(normal_location_sup(m.sigma, x, theta0, side)),
            EvidenceModel::Location(fam) => location_sup(fam, x, theta0, side),
            EvidenceModel::Scale(fam) => scale_sup(fam, x, theta0, side),
        }
    }

    /// Like [`sup_density`](Self::sup_density) but always takes the numeric
    /// route; the normal location model is searched as a location family.
    pub fn sup_density_numeric(&self, x: f64, theta0: f64, side: Side) -> Result<Supremum> {
        match self {
            EvidenceModel::NormalLocation(m) => {
                EvidenceModel::Location(m.as_location_family()).sup_density(x, theta0, side)
            }
            _ => self.sup_density(x, theta0, side),
        }
    }

    /// A rough location and width of `θ ↦ f(x|θ)`, used to place integration ranges.
    pub fn theta_hint(&self, x: f64) -> (f64, f64) {
        match self {
            EvidenceModel::NormalLocation(m) => (x, m.sigma),
            EvidenceModel::Location(fam) => (x, fam.kernel().scale()),
            EvidenceModel::Scale(fam) => (x.abs(), x.abs().max(f64::MIN_POSITIVE) * fam.kernel().scale()),
        }
    }

    /// Smallest admissible `θ`, if bounded.
    pub fn theta_lower_bound(&self) -> Option<f64> {
        match self {
            EvidenceModel::Scale(_) => Some(0.0),
            _ => None,
        }
    }
}

fn normal_location_sup(sigma: f64, x: f64, theta0: f64, side: Side) -> Supremum {
    let peak = -LN_SQRT_2PI - sigma.ln();
    let at_threshold = ln_phi((x - theta0) / sigma) - sigma.ln();
    let interior = match side {
        Side::Upper => x >= theta0,
        Side::Lower => x < theta0,
    };
    if interior {
        Supremum { log_value: peak, arg: x, at_threshold: false }
    } else {
        Supremum { log_value: at_threshold, arg: theta0, at_threshold: true }
    }
}

/// Searches `obj` over `[a, b]` using the points of `grid` that fall inside
/// plus both endpoints, then refines around the best point. `prefer` breaks
/// ties: it returns true when its first argument should win.
fn search_range<F, P>(obj: &F, grid: &[f64], a: f64, b: f64, prefer: P) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
    P: Fn(f64, f64) -> bool,
{
    let mut best_t = a;
    let mut best_v = obj(a)?;
    let consider = |t: f64, v: f64, best_t: &mut f64, best_v: &mut f64| {
        if v > *best_v || (v == *best_v && prefer(t, *best_t)) {
            *best_t = t;
            *best_v = v;
        }
    };
    let h = grid[1] - grid[0];
    for &t in grid.iter().filter(|&&t| t > a && t < b) {
        let v = obj(t)?;
        consider(t, v, &mut best_t, &mut best_v);
    }
    let vb = obj(b)?;
    consider(b, vb, &mut best_t, &mut best_v);

    if best_v == f64::NEG_INFINITY {
        return Ok((best_t, best_v));
    }
    let lo = (best_t - h).max(a);
    let hi = (best_t + h).min(b);
    if hi > lo {
        // Kernel evaluation errors surfaced on the grid; refinement sees -inf on failure.
        let (t, v) = golden_section_max(|t| obj(t).unwrap_or(f64::NEG_INFINITY), lo, hi, 1e-12 * h.max(1.0));
        if v > best_v {
            best_t = t;
            best_v = v;
        }
    }
    Ok((best_t, best_v))
}

fn location_sup(fam: &LocationFamily, x: f64, theta0: f64, side: Side) -> Result<Supremum> {
    let w = fam.search_halfwidth;
    check_window(w)?;
    let kernel = fam.kernel();
    let obj = |t: f64| checked_log_density(kernel, t);
    // θ = x - t, so θ >= θ₀ iff t <= u.
    let u = x - theta0;
    let (a, b) = match side {
        Side::Upper => (-w, u.min(w)),
        Side::Lower => (u.max(-w), w),
    };
    if a > b {
        // The window lies entirely on the other side; the nearest point is θ₀.
        return Ok(Supremum { log_value: obj(u)?, arg: theta0, at_threshold: true });
    }
    let grid = linspace(-w, w, GRID_POINTS);
    // Smallest θ wins ties, i.e. the largest t.
    let (t, v) = search_range(&obj, &grid, a, b, |cand, cur| cand > cur)?;
    let at_threshold = t == u;
    Ok(Supremum {
        log_value: v,
        arg: if at_threshold { theta0 } else { x - t },
        at_threshold,
    })
}

fn scale_sup(fam: &ScaleFamily, x: f64, theta0: f64, side: Side) -> Result<Supremum> {
    let w = fam.search_halfwidth;
    check_window(w)?;
    if !(theta0 > 0.0) {
        return Err(EvidenceError::Domain(format!(
            "scale family requires theta0 > 0, got {theta0}"
        )));
    }
    if x == 0.0 {
        return Err(EvidenceError::Domain(
            "scale family suprema are undefined at x = 0".into(),
        ));
    }
    let kernel = fam.kernel();
    // f(x|θ) = |t| k(t) / |x| with t = x/θ.
    let obj = |t: f64| Ok(t.abs().ln() + checked_log_density(kernel, t)?);
    let u = x / theta0;
    let ln_abs_x = x.abs().ln();
    let grid = linspace(-w, w, GRID_POINTS);

    // θ >= θ₀ iff t lies between 0 and u.
    let (a, b) = match (side, x > 0.0) {
        (Side::Upper, true) => (0.0, u.min(w)),
        (Side::Lower, true) => (u, w),
        (Side::Upper, false) => (u.max(-w), 0.0),
        (Side::Lower, false) => (-w, u),
    };
    if a > b {
        return Ok(Supremum { log_value: obj(u)? - ln_abs_x, arg: theta0, at_threshold: true });
    }
    // Smallest θ = x/t wins ties, i.e. the largest |t|.
    let (t, v) = search_range(&obj, &grid, a, b, |cand, cur| cand.abs() > cur.abs())?;
    let at_threshold = t == u;
    Ok(Supremum {
        log_value: v - ln_abs_x,
        arg: if at_threshold { theta0 } else { x / t },
        at_threshold,
    })
}
