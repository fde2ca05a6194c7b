//! Command-line front end.
//!
//! Every subcommand emits a table, as CSV (the default) or JSON. Point and
//! curve evaluations share the columns `x,method,v,log10_v,tau_hat,flat`;
//! numbers carry 12 significant digits and absent fields are left empty.
//! The JSON layout is described by `schema/output.schema.json`.
//!
//! Exit status is 0 on success, 2 for invalid input and 3 when a numerical
//! or structural check fails.

use std::ffi::OsString;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{EvidenceError, Result};
use crate::evidence::{EvidenceStrength, Method, SATURATION_LOG10};
use crate::models::EvidenceModel;
use crate::nonparam::v_nonparam;
use crate::optimize::linspace;
use crate::param::{flat_left_endpoint, v_balanced, v_known_prior, v_unbalanced, NormalPrior};
use crate::stats::log_lambda_ratio;
use crate::verify::{run_suite, DEFAULT_SEED};

/// Significant digits of every emitted number.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Header of point and curve tables.
pub const CSV_HEADER: [&str; 6] = ["x", "method", "v", "log10_v", "tau_hat", "flat"];

/// Points of the preset x-grids.
pub const PRESET_POINTS: usize = 601;

/// Exit status and the text written to each stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { status: 0, stdout, stderr: String::new() }
    }

    fn error(e: &EvidenceError) -> Self {
        let status = if e.is_input_error() { 2 } else { 3 };
        Outcome { status, stdout: String::new(), stderr: format!("error: {e}\n") }
    }
}

#[derive(Debug, Parser)]
#[command(name = "evidence-strength", version, about = "Strength-of-evidence functions for one-sided composite hypotheses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ratio of the one-sided likelihood suprema at a single x.
    Nonparam(NonparamArgs),
    /// Known normal prior N(mu, tau^2) at a single x.
    KnownPrior(KnownPriorArgs),
    /// Balanced judge (alpha = 0.5) with tau fitted by maximum likelihood.
    Balanced(BalancedArgs),
    /// Judge with prior probability alpha of the upper hypothesis.
    Unbalanced(UnbalancedArgs),
    /// Left end x0 of the flat interval [x0, theta0] for alpha > 0.5.
    FlatEndpoint(FlatEndpointArgs),
    /// Evaluate one or more methods on an x-grid, or emit a named preset.
    Curve(CurveArgs),
    /// Run the oracle cross-check suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Measurement families available to the `nonparam` method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NonparamModel {
    /// N(theta, sigma^2).
    NormalLocation,
    /// phi(x/theta)/theta.
    NormalScale,
    /// Bimodal normal mixture shifted by theta, in units of sigma.
    NormalMixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

#[derive(Debug, Args)]
struct FormatArg {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct NonparamArgs {
    #[arg(long, value_enum, default_value_t = NonparamModel::NormalLocation)]
    model: NonparamModel,
    #[arg(long, value_parser = finite)]
    theta0: f64,
    /// Required by the location models.
    #[arg(long, value_parser = positive)]
    sigma: Option<f64>,
    #[arg(long, value_parser = finite)]
    x: f64,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct KnownPriorArgs {
    #[arg(long, value_parser = finite)]
    theta0: f64,
    #[arg(long, value_parser = positive)]
    sigma: f64,
    #[arg(long, value_parser = finite)]
    mu: f64,
    #[arg(long, value_parser = nonnegative)]
    tau: f64,
    #[arg(long, value_parser = finite)]
    x: f64,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct BalancedArgs {
    #[arg(long, value_parser = finite)]
    theta0: f64,
    #[arg(long, value_parser = positive)]
    sigma: f64,
    #[arg(long, value_parser = finite)]
    x: f64,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct UnbalancedArgs {
    #[arg(long, value_parser = finite)]
    theta0: f64,
    #[arg(long, value_parser = positive)]
    sigma: f64,
    #[arg(long, value_parser = open_unit)]
    alpha: f64,
    #[arg(long, value_parser = finite)]
    x: f64,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct FlatEndpointArgs {
    #[arg(long, value_parser = finite)]
    theta0: f64,
    #[arg(long, value_parser = positive)]
    sigma: f64,
    /// Must lie in (0.5, 1).
    #[arg(long, value_parser = open_unit)]
    alpha: f64,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct CurveArgs {
    /// Comma-separated subset of nonparam, known-prior, balanced, unbalanced.
    #[arg(long, value_delimiter = ',', conflicts_with = "preset")]
    methods: Vec<Method>,
    #[arg(long, value_enum, default_value_t = NonparamModel::NormalLocation, conflicts_with = "preset")]
    model: NonparamModel,
    #[arg(long, value_parser = finite, conflicts_with = "preset")]
    theta0: Option<f64>,
    #[arg(long, value_parser = positive, conflicts_with = "preset")]
    sigma: Option<f64>,
    #[arg(long, value_parser = open_unit, conflicts_with = "preset")]
    alpha: Option<f64>,
    #[arg(long, value_parser = finite, conflicts_with = "preset")]
    mu: Option<f64>,
    #[arg(long, value_parser = nonnegative, conflicts_with = "preset")]
    tau: Option<f64>,
    #[arg(long = "x-min", value_parser = finite, conflicts_with = "preset")]
    x_min: Option<f64>,
    #[arg(long = "x-max", value_parser = finite, conflicts_with = "preset")]
    x_max: Option<f64>,
    #[arg(long, default_value_t = PRESET_POINTS as u64, value_parser = clap::value_parser!(u64).range(2..=1_000_000))]
    points: u64,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    format: FormatArg,
}

fn finite(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("must be finite".into())
    }
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let v = finite(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err("must be > 0".into())
    }
}

fn nonnegative(s: &str) -> std::result::Result<f64, String> {
    let v = finite(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err("must be >= 0".into())
    }
}

fn open_unit(s: &str) -> std::result::Result<f64, String> {
    let v = finite(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err("must lie in (0, 1)".into())
    }
}

/// One curve of a table and the parameters it needs.
#[derive(Debug, Clone, PartialEq)]
pub enum Series {
    Nonparam { model: NonparamModel, sigma: Option<f64> },
    KnownPrior { sigma: f64, prior: NormalPrior },
    Balanced { sigma: f64 },
    Unbalanced { sigma: f64, alpha: f64 },
    /// `Λ(x)`, ignoring `θ₀`.
    Lambda,
}

/// A labelled series.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeled {
    pub label: String,
    pub series: Series,
}

/// An x-grid and the series evaluated on it.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub theta0: f64,
    pub series: Vec<Labeled>,
}

/// One output row; `None` fields are emitted empty (CSV) or omitted (JSON).
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub x: f64,
    pub method: String,
    pub log10_v: Option<f64>,
    pub v: Option<f64>,
    pub tau_hat: Option<f64>,
    pub mu_hat: Option<f64>,
    pub flat: Option<bool>,
}

impl Row {
    fn from_strength(x: f64, label: &str, s: &EvidenceStrength) -> Row {
        Row {
            x,
            method: label.to_string(),
            log10_v: Some(s.log10_value),
            v: s.value,
            tau_hat: s.tau_hat,
            mu_hat: s.mu_hat,
            flat: Some(s.in_flat_region),
        }
    }

    fn empty(x: f64, label: &str) -> Row {
        Row { x, method: label.to_string(), log10_v: None, v: None, tau_hat: None, mu_hat: None, flat: None }
    }

    fn saturated(&self) -> bool {
        self.log10_v.is_some_and(|l| !(l.abs() <= SATURATION_LOG10))
    }
}

impl CurveSpec {
    fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max) {
            return Err(EvidenceError::Domain(format!(
                "--x-min ({}) must be below --x-max ({})",
                self.x_min, self.x_max
            )));
        }
        if self.points < 2 {
            return Err(EvidenceError::Domain("--points must be at least 2".into()));
        }
        if self.series.is_empty() {
            return Err(EvidenceError::Domain("--methods selects no method".into()));
        }
        Ok(())
    }

    /// Rows ordered by x, then by series.
    pub fn evaluate(&self) -> Result<Vec<Row>> {
        self.validate()?;
        let models: Vec<Option<EvidenceModel>> =
            self.series.iter().map(|l| series_model(&l.series)).collect::<Result<_>>()?;
        let mut rows = Vec::with_capacity(self.points * self.series.len());
        for x in linspace(self.x_min, self.x_max, self.points) {
            for (l, model) in self.series.iter().zip(&models) {
                rows.push(evaluate_point(&l.series, model.as_ref(), &l.label, x, self.theta0)?);
            }
        }
        Ok(rows)
    }
}

fn series_model(series: &Series) -> Result<Option<EvidenceModel>> {
    match series {
        Series::Nonparam { model, sigma } => nonparam_model(*model, *sigma).map(Some),
        _ => Ok(None),
    }
}

fn nonparam_model(model: NonparamModel, sigma: Option<f64>) -> Result<EvidenceModel> {
    let need_sigma = || sigma.ok_or_else(|| EvidenceError::Domain("--sigma is required by this model".into()));
    match model {
        NonparamModel::NormalLocation => EvidenceModel::normal_location(need_sigma()?),
        NonparamModel::NormalScale => Ok(EvidenceModel::normal_scale()),
        NonparamModel::NormalMixture => EvidenceModel::normal_mixture_location(need_sigma()?),
    }
}

fn evaluate_point(series: &Series, model: Option<&EvidenceModel>, label: &str, x: f64, theta0: f64) -> Result<Row> {
    let strength = match series {
        Series::Nonparam { .. } => {
            let model = model.expect("nonparam series carries a model");
            if matches!(model, EvidenceModel::Scale(_)) && x == 0.0 {
                return Ok(Row::empty(x, label));
            }
            v_nonparam(model, x, theta0)?
        }
        Series::KnownPrior { sigma, prior } => v_known_prior(x, *prior, *sigma, theta0)?,
        Series::Balanced { sigma } => v_balanced(x, theta0, *sigma)?,
        Series::Unbalanced { sigma, alpha } => v_unbalanced(x, theta0, *sigma, *alpha)?,
        Series::Lambda => {
            let l = log_lambda_ratio(x)?;
            return Ok(Row { log10_v: Some(l.log10()), v: Some(l.exp()), ..Row::empty(x, label) });
        }
    };
    Ok(Row::from_strength(x, label, &strength))
}

/// Named parameter sets for `--preset`.
pub fn preset_spec(preset: Preset) -> CurveSpec {
    let (theta0, sigma) = (1.0, 0.1);
    let around = |series: Vec<Labeled>| CurveSpec {
        x_min: theta0 - 5.0 * sigma,
        x_max: theta0 + 5.0 * sigma,
        points: PRESET_POINTS,
        theta0,
        series,
    };
    let lab = |label: &str, series: Series| Labeled { label: label.to_string(), series };
    let nonparam = lab("nonparam", Series::Nonparam { model: NonparamModel::NormalLocation, sigma: Some(sigma) });
    let balanced = lab("balanced", Series::Balanced { sigma });
    match preset {
        Preset::Fig1 => around(vec![nonparam]),
        Preset::Fig2 => CurveSpec {
            x_min: -3.0 * theta0,
            x_max: 3.0 * theta0,
            points: PRESET_POINTS,
            theta0,
            series: vec![lab("nonparam", Series::Nonparam { model: NonparamModel::NormalScale, sigma: None })],
        },
        Preset::Fig3 => CurveSpec { x_min: -3.0, x_max: 3.0, points: PRESET_POINTS, theta0: 0.0, series: vec![lab("lambda", Series::Lambda)] },
        Preset::Fig4 => around(
            [1.2, 0.8]
                .into_iter()
                .map(|mu| lab(&format!("known-prior-mu{mu}"), Series::KnownPrior { sigma, prior: NormalPrior { mu, tau: 0.3 } }))
                .collect(),
        ),
        Preset::Fig5 => around(vec![nonparam, balanced]),
        Preset::Fig6 => {
            let mut s = vec![nonparam, balanced];
            for alpha in [0.55, 0.75] {
                s.push(lab(&format!("unbalanced-a{alpha}"), Series::Unbalanced { sigma, alpha }));
            }
            around(s)
        }
    }
}

fn curve_spec(a: &CurveArgs) -> Result<CurveSpec> {
    if let Some(p) = a.preset {
        return Ok(preset_spec(p));
    }
    let need = |v: Option<f64>, flag: &str, method: &str| {
        v.ok_or_else(|| EvidenceError::Domain(format!("{flag} is required by method {method}")))
    };
    let theta0 = need(a.theta0, "--theta0", "curve")?;
    let x_min = need(a.x_min, "--x-min", "curve")?;
    let x_max = need(a.x_max, "--x-max", "curve")?;
    if a.methods.is_empty() {
        return Err(EvidenceError::Domain("--methods or --preset is required".into()));
    }
    let mut series = Vec::new();
    for &m in &a.methods {
        let s = match m {
            Method::Nonparam => Series::Nonparam { model: a.model, sigma: a.sigma },
            Method::KnownPrior => Series::KnownPrior {
                sigma: need(a.sigma, "--sigma", m.as_str())?,
                prior: NormalPrior { mu: need(a.mu, "--mu", m.as_str())?, tau: need(a.tau, "--tau", m.as_str())? },
            },
            Method::Balanced => Series::Balanced { sigma: need(a.sigma, "--sigma", m.as_str())? },
            Method::Unbalanced => Series::Unbalanced {
                sigma: need(a.sigma, "--sigma", m.as_str())?,
                alpha: need(a.alpha, "--alpha", m.as_str())?,
            },
        };
        series.push(Labeled { label: m.as_str().to_string(), series: s });
    }
    Ok(CurveSpec { x_min, x_max, points: a.points as usize, theta0, series })
}

/// `x` with [`SIGNIFICANT_DIGITS`] significant digits in the style of C's `%g`.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= SIGNIFICANT_DIGITS as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    } else {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `v` rounded to the emitted precision.
fn rounded(v: f64) -> f64 {
    format_number(v).parse().expect("formatted number parses")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

fn csv_document<I, R>(header: &[&str], records: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in records {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

#[derive(Serialize)]
struct JsonRow<'a> {
    x: f64,
    method: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log10_v: Option<f64>,
    saturated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flat: Option<bool>,
}

#[derive(Serialize)]
struct JsonRows<'a> {
    rows: Vec<JsonRow<'a>>,
}

fn json_text<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("serialisable document");
    s.push('\n');
    s
}

/// Renders point or curve rows.
pub fn render_rows(rows: &[Row], format: Format) -> String {
    match format {
        Format::Csv => csv_document(
            &CSV_HEADER,
            rows.iter().map(|r| {
                let v = if r.saturated() { None } else { r.v };
                [
                    format_number(r.x),
                    r.method.clone(),
                    opt_num(v),
                    opt_num(r.log10_v),
                    opt_num(r.tau_hat),
                    r.flat.map(|f| f.to_string()).unwrap_or_default(),
                ]
            }),
        ),
        Format::Json => {
            let rows = rows
                .iter()
                .map(|r| {
                    let saturated = r.saturated();
                    JsonRow {
                        x: rounded(r.x),
                        method: &r.method,
                        v: if saturated { None } else { r.v.map(rounded) },
                        log10_v: r.log10_v.filter(|l| l.is_finite()).map(rounded),
                        saturated,
                        tau_hat: r.tau_hat.map(rounded),
                        mu_hat: r.mu_hat.map(rounded),
                        flat: r.flat,
                    }
                })
                .collect();
            json_text(&JsonRows { rows })
        }
    }
}

#[derive(Serialize)]
struct JsonEndpoint {
    theta0: f64,
    sigma: f64,
    alpha: f64,
    x0: f64,
}

fn render_endpoint(theta0: f64, sigma: f64, alpha: f64, x0: f64, format: Format) -> String {
    match format {
        Format::Csv => csv_document(
            &["theta0", "sigma", "alpha", "x0"],
            [[theta0, sigma, alpha, x0].map(format_number)],
        ),
        Format::Json => json_text(&JsonEndpoint {
            theta0: rounded(theta0),
            sigma: rounded(sigma),
            alpha: rounded(alpha),
            x0: rounded(x0),
        }),
    }
}

#[derive(Serialize)]
struct JsonVerify<'a> {
    passed: bool,
    checks: &'a [crate::verify::Check],
}

fn point(series: Series, label: &str, x: f64, theta0: f64, format: Format) -> Result<String> {
    let model = series_model(&series)?;
    let row = evaluate_point(&series, model.as_ref(), label, x, theta0)?;
    Ok(render_rows(&[row], format))
}

fn dispatch(command: Command) -> Result<Outcome> {
    let text = match command {
        Command::Nonparam(a) => {
            let model = nonparam_model(a.model, a.sigma)?;
            let row = Row::from_strength(a.x, "nonparam", &v_nonparam(&model, a.x, a.theta0)?);
            render_rows(&[row], a.format.format)
        }
        Command::KnownPrior(a) => point(
            Series::KnownPrior { sigma: a.sigma, prior: NormalPrior { mu: a.mu, tau: a.tau } },
            "known-prior",
            a.x,
            a.theta0,
            a.format.format,
        )?,
        Command::Balanced(a) => point(Series::Balanced { sigma: a.sigma }, "balanced", a.x, a.theta0, a.format.format)?,
        Command::Unbalanced(a) => point(
            Series::Unbalanced { sigma: a.sigma, alpha: a.alpha },
            "unbalanced",
            a.x,
            a.theta0,
            a.format.format,
        )?,
        Command::FlatEndpoint(a) => {
            let x0 = flat_left_endpoint(a.theta0, a.sigma, a.alpha)?;
            render_endpoint(a.theta0, a.sigma, a.alpha, x0, a.format.format)
        }
        Command::Curve(a) => render_rows(&curve_spec(&a)?.evaluate()?, a.format.format),
        Command::Verify(a) => {
            let checks = run_suite(a.seed);
            let passed = checks.iter().all(|c| c.passed);
            let text = match a.format.format {
                Format::Csv => csv_document(
                    &["check", "status", "detail"],
                    checks.iter().map(|c| [c.check, if c.passed { "pass" } else { "fail" }, c.detail.as_str()]),
                ),
                Format::Json => json_text(&JsonVerify { passed, checks: &checks }),
            };
            return Ok(Outcome { status: if passed { 0 } else { 3 }, stdout: text, stderr: String::new() });
        }
    };
    Ok(Outcome::ok(text))
}

/// Parses `argv` (program name first) and runs the selected subcommand.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { status: e.exit_code(), stdout: String::new(), stderr: text }
            } else {
                Outcome { status: 0, stdout: text, stderr: String::new() }
            };
        }
    };
    dispatch(cli.command).unwrap_or_else(|e| Outcome::error(&e))
}
