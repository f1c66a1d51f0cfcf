//! Monte Carlo estimation of reliability and PRMSE for any model and score.
//!
//! A run simulates latent and manifest variables once. Reliability regresses the
//! observed score on the latent variables (spline surface) or on its true
//! score; PRMSE regresses the latent score on the response patterns
//! (saturated fit) or on its EAP score. The coefficient of determination of
//! the fit is the estimate.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::analytic_irt::{standard_coefficients, StandardCoefficients};
use crate::analytic_linear::{prmse_linear, reliability_eap_factor, reliability_summed_factor};
use crate::error::{Error, Result};
use crate::model::{LatentScore, ModelSpec, ScoreDefinition};
use crate::quadrature::{GridConfig, QuadratureGrid, DEFAULT_PATTERN_CAP};
use crate::regression::{
    fit_multiple_linear, fit_pattern_means, fit_simple_linear, fit_spline_surface, RegressionFit, SplineSurface,
};
use crate::simulation::{compute_latent_scores, compute_observed_scores, compute_true_scores, McSample, Responses};

/// Smallest accepted simulation size.
pub const MIN_SAMPLE: usize = 1000;
const WARN_SAMPLE: usize = 100_000;

/// Regression strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum McMethod {
    /// Spline on the latent variables for reliability; pattern means (or
    /// the EAP regressor when the pattern space is too large) for PRMSE.
    #[default]
    Auto,
    /// Regress on all latent variables (reliability) or all manifest
    /// variables (PRMSE).
    Nonparametric,
    /// Regress on the true score (reliability) or the EAP score (PRMSE).
    SimpleLinear,
}

impl std::str::FromStr for McMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(McMethod::Auto),
            "nonparametric" => Ok(McMethod::Nonparametric),
            "simple_linear" | "simple-linear" => Ok(McMethod::SimpleLinear),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?} (expected auto, nonparametric or simple_linear)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub n: usize,
    pub seed: u64,
    pub method: McMethod,
    pub grid: GridConfig,
    pub pattern_cap: usize,
    /// B-spline basis functions per latent dimension.
    pub spline_df: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n: 1_000_000,
            seed: 1,
            method: McMethod::Auto,
            grid: GridConfig::default(),
            pattern_cap: DEFAULT_PATTERN_CAP,
            spline_df: 8,
        }
    }
}

impl McConfig {
    pub fn with_n(n: usize, seed: u64) -> Self {
        Self { n, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_SAMPLE {
            return Err(Error::InvalidConfig(format!("n must be at least {MIN_SAMPLE}, got {}", self.n)));
        }
        if self.n < WARN_SAMPLE {
            log::warn!("n = {} is small; Monte Carlo error may exceed .005", self.n);
        }
        if self.spline_df < 4 {
            return Err(Error::InvalidConfig(format!("spline df must be at least 4, got {}", self.spline_df)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoefficientKind {
    Reliability,
    Prmse,
}

impl std::fmt::Display for CoefficientKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CoefficientKind::Reliability => "reliability",
            CoefficientKind::Prmse => "prmse",
        })
    }
}

impl std::str::FromStr for CoefficientKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reliability" => Ok(CoefficientKind::Reliability),
            "prmse" => Ok(CoefficientKind::Prmse),
            other => Err(Error::InvalidConfig(format!("unknown kind {other:?} (expected reliability or prmse)"))),
        }
    }
}

/// How a reported value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReportMethod {
    Analytic,
    McNonparametric,
    McSimpleLinear,
}

impl std::fmt::Display for ReportMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReportMethod::Analytic => "analytic",
            ReportMethod::McNonparametric => "mc_nonparametric",
            ReportMethod::McSimpleLinear => "mc_simple_linear",
        })
    }
}

/// A reliability or PRMSE value with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionReport {
    pub kind: CoefficientKind,
    pub score: ScoreDefinition,
    pub value: f64,
    pub method: ReportMethod,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub model_hash: u64,
    /// Half-width of an asymptotic 95% interval (Monte Carlo only).
    pub half_width: Option<f64>,
    pub regressor: Option<String>,
}

/// FNV-1a hash of the model parameters.
pub fn model_hash(model: &ModelSpec) -> u64 {
    let text = format!("{model:?}");
    text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Wraps the `R²` of a Monte Carlo fit as a report.
pub fn r_squared_report(
    fit: &RegressionFit,
    kind: CoefficientKind,
    score: ScoreDefinition,
    method: ReportMethod,
    model: &ModelSpec,
    seed: u64,
) -> PrecisionReport {
    PrecisionReport {
        kind,
        score,
        value: fit.r_squared,
        method,
        n: Some(fit.n),
        seed: Some(seed),
        model_hash: model_hash(model),
        half_width: Some(fit.half_width),
        regressor: Some(fit.regressor.clone()),
    }
}

fn require_kind(score: ScoreDefinition, kind: CoefficientKind) -> Result<()> {
    match (kind, score.is_observed()) {
        (CoefficientKind::Reliability, true) | (CoefficientKind::Prmse, false) => Ok(()),
        (CoefficientKind::Reliability, false) => {
            Err(Error::ScoreKind(format!("reliability needs an observed score, got {score}")))
        }
        (CoefficientKind::Prmse, true) => Err(Error::ScoreKind(format!("PRMSE needs a latent score, got {score}"))),
    }
}

type ScoreCache = Mutex<HashMap<ScoreDefinition, Arc<Vec<f64>>>>;

/// A simulated sample plus the quadrature grid, shared by every estimate
/// computed from it. Observed and true scores are computed once per run.
pub struct McRun {
    cfg: McConfig,
    grid: QuadratureGrid,
    sample: McSample,
    observed: ScoreCache,
    true_scores: ScoreCache,
}

fn cached(cache: &ScoreCache, score: ScoreDefinition, f: impl FnOnce() -> Result<Vec<f64>>) -> Result<Arc<Vec<f64>>> {
    if let Some(v) = cache.lock().expect("score cache").get(&score) {
        return Ok(Arc::clone(v));
    }
    let v = Arc::new(f()?);
    cache.lock().expect("score cache").insert(score, Arc::clone(&v));
    Ok(v)
}

impl McRun {
    pub fn new(model: &ModelSpec, cfg: &McConfig) -> Result<Self> {
        cfg.validate()?;
        model.validate()?;
        let grid = cfg.grid.build(model.latent())?;
        let sample = McSample::generate(model, cfg.n, cfg.seed)?;
        Ok(Self::from_parts(cfg.clone(), grid, sample))
    }

    fn from_parts(cfg: McConfig, grid: QuadratureGrid, sample: McSample) -> Self {
        Self { cfg, grid, sample, observed: Mutex::default(), true_scores: Mutex::default() }
    }

    pub fn model(&self) -> &ModelSpec {
        &self.sample.model
    }

    pub fn sample(&self) -> &McSample {
        &self.sample
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn config(&self) -> &McConfig {
        &self.cfg
    }

    /// The first `n` rows, as if simulated with size `n`.
    pub fn head(&self, n: usize) -> Self {
        let cfg = McConfig { n, ..self.cfg.clone() };
        Self::from_parts(cfg, self.grid.clone(), self.sample.head(n))
    }

    pub fn observed_scores(&self, score: ScoreDefinition) -> Result<Arc<Vec<f64>>> {
        cached(&self.observed, score, || {
            compute_observed_scores(self.model(), &self.sample.responses, score, Some(&self.grid))
        })
    }

    pub fn latent_scores(&self, target: LatentScore) -> Result<Vec<f64>> {
        compute_latent_scores(self.model(), &self.sample.latents, target)
    }

    pub fn true_scores(&self, score: ScoreDefinition) -> Result<Arc<Vec<f64>>> {
        cached(&self.true_scores, score, || {
            compute_true_scores(self.model(), &self.sample.latents, score, &self.grid, self.cfg.pattern_cap)
        })
    }

    fn report(&self, fit: &RegressionFit, kind: CoefficientKind, score: ScoreDefinition, method: ReportMethod) -> PrecisionReport {
        r_squared_report(fit, kind, score, method, self.model(), self.cfg.seed)
    }

    pub fn reliability(&self, score: ScoreDefinition) -> Result<PrecisionReport> {
        self.reliability_with(score, self.cfg.method)
    }

    pub fn reliability_with(&self, score: ScoreDefinition, method: McMethod) -> Result<PrecisionReport> {
        require_kind(score, CoefficientKind::Reliability)?;
        let d = self.model().dimension();
        let spline = match method {
            McMethod::Auto => d <= 2,
            McMethod::Nonparametric if d > 2 => {
                return Err(Error::Unsupported(format!(
                    "nonparametric reliability supports at most 2 latent dimensions, got {d}"
                )))
            }
            McMethod::Nonparametric => true,
            McMethod::SimpleLinear => false,
        };
        if spline {
            let (report, _) = self.reliability_surface(score)?;
            return Ok(report);
        }
        let x = self.observed_scores(score)?;
        let tau = self.true_scores(score)?;
        let fit = fit_simple_linear(&x, &tau)?;
        Ok(self.report(&fit, CoefficientKind::Reliability, score, ReportMethod::McSimpleLinear))
    }

    /// Spline regression of an observed score on the latent variables, with
    /// the fitted surface.
    pub fn reliability_surface(&self, score: ScoreDefinition) -> Result<(PrecisionReport, SplineSurface)> {
        require_kind(score, CoefficientKind::Reliability)?;
        let x = self.observed_scores(score)?;
        let d = self.sample.latents.dimension();
        let eta: Vec<f64> = self.sample.latents.rows().flatten().copied().collect();
        let (fit, surface) = fit_spline_surface(&x, &eta, d, self.cfg.spline_df)?;
        Ok((self.report(&fit, CoefficientKind::Reliability, score, ReportMethod::McNonparametric), surface))
    }

    pub fn prmse(&self, score: ScoreDefinition) -> Result<PrecisionReport> {
        self.prmse_with(score, self.cfg.method)
    }

    pub fn prmse_with(&self, score: ScoreDefinition, method: McMethod) -> Result<PrecisionReport> {
        require_kind(score, CoefficientKind::Prmse)?;
        let ScoreDefinition::Latent(target) = score else { unreachable!() };
        let xi = self.latent_scores(target)?;
        let eap_route = |xi: &[f64]| -> Result<PrecisionReport> {
            let eap = self.observed_scores(ScoreDefinition::Eap(target))?;
            let fit = fit_simple_linear(xi, &eap)?;
            Ok(self.report(&fit, CoefficientKind::Prmse, score, ReportMethod::McSimpleLinear))
        };
        match (&self.sample.responses, method) {
            (_, McMethod::SimpleLinear) => eap_route(&xi),
            (Responses::Discrete(patterns), _) => {
                let count = self
                    .model()
                    .discrete_items()
                    .map(|items| items.pattern_count())
                    .unwrap_or(f64::INFINITY);
                if count > self.cfg.pattern_cap as f64 {
                    log::info!(
                        "{count:.3e} response patterns exceed the cap of {}; regressing on the EAP score",
                        self.cfg.pattern_cap
                    );
                    return eap_route(&xi);
                }
                let fit = fit_pattern_means(&xi, patterns)?;
                Ok(self.report(&fit, CoefficientKind::Prmse, score, ReportMethod::McNonparametric))
            }
            (Responses::Continuous { .. }, McMethod::Auto) => eap_route(&xi),
            (Responses::Continuous { n_items, values }, McMethod::Nonparametric) => {
                // E(ξ | y) is linear in y for the linear factor model
                let fit = fit_multiple_linear(&xi, values, *n_items)?;
                Ok(self.report(&fit, CoefficientKind::Prmse, score, ReportMethod::McNonparametric))
            }
        }
    }

    /// Reliability for observed scores, PRMSE for latent scores.
    pub fn estimate(&self, score: ScoreDefinition) -> Result<PrecisionReport> {
        if score.is_observed() {
            self.reliability(score)
        } else {
            self.prmse(score)
        }
    }
}

/// Monte Carlo reliability of an observed score.
pub fn estimate_reliability(model: &ModelSpec, observed_score: ScoreDefinition, cfg: &McConfig) -> Result<PrecisionReport> {
    require_kind(observed_score, CoefficientKind::Reliability)?;
    McRun::new(model, cfg)?.reliability(observed_score)
}

/// Monte Carlo PRMSE of a latent score.
pub fn estimate_prmse(model: &ModelSpec, latent_score: ScoreDefinition, cfg: &McConfig) -> Result<PrecisionReport> {
    require_kind(latent_score, CoefficientKind::Prmse)?;
    McRun::new(model, cfg)?.prmse(latent_score)
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    pub n: usize,
    pub r_squared: f64,
    pub half_width: f64,
}

/// Estimates on nested prefixes of one sample of size `max(n_grid)`.
pub fn convergence_diagnostic(
    model: &ModelSpec,
    score: ScoreDefinition,
    cfg: &McConfig,
    n_grid: &[usize],
) -> Result<Vec<ConvergencePoint>> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("sample sizes must be non-empty and strictly ascending".into()));
    }
    let largest = *n_grid.last().expect("non-empty");
    let run = McRun::new(model, &McConfig { n: largest, ..cfg.clone() })?;
    n_grid
        .iter()
        .map(|&n| {
            if n < MIN_SAMPLE {
                return Err(Error::InvalidConfig(format!("n must be at least {MIN_SAMPLE}, got {n}")));
            }
            let report = run.head(n).estimate(score)?;
            Ok(ConvergencePoint { n, r_squared: report.value, half_width: report.half_width.unwrap_or(0.0) })
        })
        .collect()
}

/// Closed-form reliability of (EAP of `η`, summed score) and PRMSE of
/// (`η`, true summed score) for a unidimensional linear factor, 2PL or
/// graded model.
pub fn analytic_coefficients(model: &ModelSpec, grid: &GridConfig, cap: usize) -> Result<StandardCoefficients> {
    model.validate()?;
    if model.dimension() != 1 {
        return Err(Error::Unsupported(format!(
            "closed-form coefficients need a unidimensional model, got d = {}; use mc",
            model.dimension()
        )));
    }
    match model {
        ModelSpec::LinearFactor(m) => Ok(StandardCoefficients {
            reliability_eap: reliability_eap_factor(m)?,
            reliability_summed: reliability_summed_factor(m)?,
            prmse_lv: prmse_linear(m, LatentScore::Component(0))?,
            prmse_true_summed: prmse_linear(m, LatentScore::TrueSummed)?,
        }),
        ModelSpec::TwoPl(_) | ModelSpec::Graded(_) => standard_coefficients(model, &grid.build(model.latent())?, cap),
        ModelSpec::Hurdle(_) => Err(Error::Unsupported("no closed form for the hurdle model; use mc".into())),
    }
}

/// The four closed-form coefficients as reports.
pub fn analytic_reports(model: &ModelSpec, grid: &GridConfig, cap: usize) -> Result<Vec<PrecisionReport>> {
    let c = analytic_coefficients(model, grid, cap)?;
    let hash = model_hash(model);
    let eta = LatentScore::Component(0);
    let rows = [
        (CoefficientKind::Reliability, ScoreDefinition::Eap(eta), c.reliability_eap),
        (CoefficientKind::Reliability, ScoreDefinition::Summed, c.reliability_summed),
        (CoefficientKind::Prmse, ScoreDefinition::Latent(eta), c.prmse_lv),
        (CoefficientKind::Prmse, ScoreDefinition::Latent(LatentScore::TrueSummed), c.prmse_true_summed),
    ];
    Ok(rows
        .into_iter()
        .map(|(kind, score, value)| PrecisionReport {
            kind,
            score,
            value,
            method: ReportMethod::Analytic,
            n: None,
            seed: None,
            model_hash: hash,
            half_width: None,
            regressor: None,
        })
        .collect())
}
