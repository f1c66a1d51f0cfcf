//! Measurement models with known parameters, response patterns and score
//! definitions.
//!
//! Every model type validates its invariants in its constructor, so a value
//! that exists is a valid model. [`validate_model`] re-runs the same checks
//! and is idempotent.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Multivariate normal distribution of the latent variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentDistribution {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl LatentDistribution {
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let dist = Self { mean: DVector::from_vec(mean), covariance };
        dist.validate()?;
        Ok(dist)
    }

    /// `N(0, I_d)`.
    pub fn standard(dimension: usize) -> Self {
        Self {
            mean: DVector::zeros(dimension),
            covariance: DMatrix::identity(dimension, dimension),
        }
    }

    /// Standardized bivariate normal with correlation `rho`.
    pub fn bivariate(rho: f64) -> Result<Self> {
        Self::new(
            vec![0.0, 0.0],
            DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.mean.len();
        if self.covariance.nrows() != d || self.covariance.ncols() != d {
            return Err(Error::ShapeMismatch(format!(
                "latent mean has length {d} but covariance is {}x{}",
                self.covariance.nrows(),
                self.covariance.ncols()
            )));
        }
        if self.mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("latent mean must be finite".into()));
        }
        linalg::check_psd(&self.covariance, "latent covariance")
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn variance(&self, component: usize) -> f64 {
        self.covariance[(component, component)]
    }

    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.covariance[(i, j)] / (self.variance(i) * self.variance(j)).sqrt()
    }
}

/// Linear factor model `y = ν + Λη + ε` with `Cov(ε) = Θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFactorModel {
    intercepts: DVector<f64>,
    loadings: DMatrix<f64>,
    unique_covariance: DMatrix<f64>,
    latent: LatentDistribution,
}

impl LinearFactorModel {
    pub fn new(
        intercepts: Vec<f64>,
        loadings: DMatrix<f64>,
        unique_covariance: DMatrix<f64>,
        latent: LatentDistribution,
    ) -> Result<Self> {
        let model = Self {
            intercepts: DVector::from_vec(intercepts),
            loadings,
            unique_covariance,
            latent,
        };
        model.validate()?;
        Ok(model)
    }

    /// One-factor model with diagonal unique covariance.
    pub fn one_factor(
        intercepts: &[f64],
        loadings: &[f64],
        uniquenesses: &[f64],
        factor_variance: f64,
    ) -> Result<Self> {
        let m = loadings.len();
        Self::new(
            intercepts.to_vec(),
            DMatrix::from_column_slice(m, 1, loadings),
            DMatrix::from_diagonal(&DVector::from_column_slice(uniquenesses)),
            LatentDistribution::new(vec![0.0], DMatrix::from_element(1, 1, factor_variance))?,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.latent.validate()?;
        let m = self.intercepts.len();
        let d = self.latent.dimension();
        if self.loadings.nrows() != m || self.loadings.ncols() != d {
            return Err(Error::ShapeMismatch(format!(
                "loadings must be {m}x{d}, got {}x{}",
                self.loadings.nrows(),
                self.loadings.ncols()
            )));
        }
        if self.unique_covariance.nrows() != m || self.unique_covariance.ncols() != m {
            return Err(Error::ShapeMismatch(format!(
                "unique covariance must be {m}x{m}, got {}x{}",
                self.unique_covariance.nrows(),
                self.unique_covariance.ncols()
            )));
        }
        if self.intercepts.iter().chain(self.loadings.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("intercepts and loadings must be finite".into()));
        }
        linalg::check_psd(&self.unique_covariance, "unique covariance")
    }

    pub fn n_items(&self) -> usize {
        self.intercepts.len()
    }

    pub fn intercepts(&self) -> &DVector<f64> {
        &self.intercepts
    }

    pub fn loadings(&self) -> &DMatrix<f64> {
        &self.loadings
    }

    pub fn unique_covariance(&self) -> &DMatrix<f64> {
        &self.unique_covariance
    }

    pub fn latent(&self) -> &LatentDistribution {
        &self.latent
    }

    /// Model-implied covariance `ΛΨΛ' + Θ` of the manifest variables.
    pub fn implied_covariance(&self) -> DMatrix<f64> {
        &self.loadings * self.latent.covariance() * self.loadings.transpose()
            + &self.unique_covariance
    }
}

/// Numerically stable logistic function.
#[inline]
pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(logistic(x))` without overflow.
#[inline]
pub(crate) fn log_logistic(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// A graded-response item: `P(y >= k | η) = logistic(a'η - c_k)` for
/// `k = 1..K-1` with strictly increasing thresholds `c_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedItem {
    slopes: Vec<f64>,
    thresholds: Vec<f64>,
}

impl GradedItem {
    pub fn new(slopes: Vec<f64>, thresholds: Vec<f64>) -> Result<Self> {
        let item = Self { slopes, thresholds };
        item.validate(0)?;
        Ok(item)
    }

    /// The 2PL item `P(y = 1 | η) = logistic(α + β'η)` as a two-category
    /// graded item with threshold `-α`.
    pub fn two_pl(intercept: f64, slopes: Vec<f64>) -> Self {
        Self { slopes, thresholds: vec![-intercept] }
    }

    fn validate(&self, index: usize) -> Result<()> {
        if self.thresholds.is_empty() {
            return Err(Error::InvalidModel(format!(
                "item {index}: a graded item needs at least 2 categories"
            )));
        }
        if self.slopes.iter().chain(&self.thresholds).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(format!("item {index}: parameters must be finite")));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::NonMonotoneThresholds { item: index });
        }
        Ok(())
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn categories(&self) -> usize {
        self.thresholds.len() + 1
    }

    fn linear_predictor(&self, eta: &[f64]) -> f64 {
        self.slopes.iter().zip(eta).map(|(a, e)| a * e).sum()
    }

    /// `P(y >= k | η)`; 1 for `k = 0` and 0 for `k >= K`.
    pub fn cumulative_prob(&self, k: usize, eta: &[f64]) -> f64 {
        if k == 0 {
            1.0
        } else if k >= self.categories() {
            0.0
        } else {
            logistic(self.linear_predictor(eta) - self.thresholds[k - 1])
        }
    }

    /// `P(y = k | η)`.
    pub fn category_prob(&self, k: usize, eta: &[f64]) -> f64 {
        self.log_category_prob(k, eta).exp()
    }

    /// `ln P(y = k | η)`, evaluated without forming differences of
    /// probabilities close to one.
    pub fn log_category_prob(&self, k: usize, eta: &[f64]) -> f64 {
        let kk = self.categories();
        debug_assert!(k < kk);
        let z = self.linear_predictor(eta);
        if k == 0 {
            log_logistic(-(z - self.thresholds[0]))
        } else if k == kk - 1 {
            log_logistic(z - self.thresholds[k - 1])
        } else {
            // σ(a) - σ(b) = σ(a) σ(-b) (1 - e^{-(a-b)}) for a > b
            let a = z - self.thresholds[k - 1];
            let b = z - self.thresholds[k];
            log_logistic(a) + log_logistic(-b) + (-(-(a - b)).exp_m1()).ln()
        }
    }

    /// `E(y | η)` on the 0-based category scale.
    pub fn expected_code(&self, eta: &[f64]) -> f64 {
        (1..self.categories()).map(|k| self.cumulative_prob(k, eta)).sum()
    }

    /// Index of the only latent dimension with a nonzero slope, `Ok(None)`
    /// when all slopes are zero and `Err(())` when several are nonzero.
    pub(crate) fn single_dimension(&self) -> std::result::Result<Option<usize>, ()> {
        let mut found = None;
        for (t, &a) in self.slopes.iter().enumerate() {
            if a != 0.0 {
                if found.is_some() {
                    return Err(());
                }
                found = Some(t);
            }
        }
        Ok(found)
    }
}

/// Two-parameter logistic model with `P(y_j = 1 | η) = logistic(α_j + β_j'η)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPlModel {
    intercepts: Vec<f64>,
    slopes: DMatrix<f64>,
    latent: LatentDistribution,
}

impl TwoPlModel {
    pub fn new(intercepts: Vec<f64>, slopes: DMatrix<f64>, latent: LatentDistribution) -> Result<Self> {
        let model = Self { intercepts, slopes, latent };
        model.validate()?;
        Ok(model)
    }

    /// Unidimensional 2PL with a standard normal latent variable.
    pub fn unidimensional(intercepts: &[f64], slopes: &[f64]) -> Result<Self> {
        Self::new(
            intercepts.to_vec(),
            DMatrix::from_column_slice(slopes.len(), 1, slopes),
            LatentDistribution::standard(1),
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.latent.validate()?;
        let m = self.intercepts.len();
        let d = self.latent.dimension();
        if self.slopes.nrows() != m || self.slopes.ncols() != d {
            return Err(Error::ShapeMismatch(format!(
                "slopes must be {m}x{d}, got {}x{}",
                self.slopes.nrows(),
                self.slopes.ncols()
            )));
        }
        if self.intercepts.iter().chain(self.slopes.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("2PL parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn n_items(&self) -> usize {
        self.intercepts.len()
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn slopes(&self) -> &DMatrix<f64> {
        &self.slopes
    }

    pub fn latent(&self) -> &LatentDistribution {
        &self.latent
    }

    pub fn item(&self, j: usize) -> GradedItem {
        GradedItem::two_pl(self.intercepts[j], self.slopes.row(j).iter().cloned().collect())
    }
}

/// Graded response model over ordered categories.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedModel {
    items: Vec<GradedItem>,
    latent: LatentDistribution,
}

impl GradedModel {
    pub fn new(items: Vec<GradedItem>, latent: LatentDistribution) -> Result<Self> {
        let model = Self { items, latent };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.latent.validate()?;
        let d = self.latent.dimension();
        for (j, item) in self.items.iter().enumerate() {
            item.validate(j)?;
            if item.slopes.len() != d {
                return Err(Error::ShapeMismatch(format!(
                    "item {j} has {} slopes for a {d}-dimensional latent",
                    item.slopes.len()
                )));
            }
            if item.categories() > usize::from(u8::MAX) {
                return Err(Error::InvalidModel(format!("item {j} has too many categories")));
            }
        }
        Ok(())
    }

    pub fn items(&self) -> &[GradedItem] {
        &self.items
    }

    pub fn latent(&self) -> &LatentDistribution {
        &self.latent
    }
}

/// One symptom of the hurdle model: a binary presence item loading on the
/// susceptibility dimension and a three-category frequency item loading on
/// the severity dimension, observed only when the symptom is present.
#[derive(Debug, Clone, PartialEq)]
pub struct HurdlePair {
    pub presence: GradedItem,
    pub frequency: GradedItem,
}

impl HurdlePair {
    /// Presence `logistic(a·η₁ - c)`, frequency thresholds on `η₂`.
    pub fn new(
        presence_slope: f64,
        presence_threshold: f64,
        frequency_slope: f64,
        frequency_thresholds: [f64; 2],
    ) -> Result<Self> {
        Ok(Self {
            presence: GradedItem::new(vec![presence_slope, 0.0], vec![presence_threshold])?,
            frequency: GradedItem::new(vec![0.0, frequency_slope], frequency_thresholds.to_vec())?,
        })
    }
}

/// Two-stage IRTree (multidimensional hurdle graded response) model with a
/// correlated bivariate latent distribution (susceptibility, severity).
#[derive(Debug, Clone, PartialEq)]
pub struct HurdleIrtreeModel {
    pairs: Vec<HurdlePair>,
    latent: LatentDistribution,
}

impl HurdleIrtreeModel {
    pub fn new(pairs: Vec<HurdlePair>, latent: LatentDistribution) -> Result<Self> {
        let model = Self { pairs, latent };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.latent.validate()?;
        if self.latent.dimension() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "hurdle model needs a 2-dimensional latent, got {}",
                self.latent.dimension()
            )));
        }
        let rho = self.latent.correlation(0, 1);
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::InvalidModel(format!(
                "latent correlation must lie in (-1, 1), got {rho}"
            )));
        }
        for (j, pair) in self.pairs.iter().enumerate() {
            pair.presence.validate(2 * j)?;
            pair.frequency.validate(2 * j + 1)?;
            if pair.presence.slopes.len() != 2 || pair.frequency.slopes.len() != 2 {
                return Err(Error::ShapeMismatch(format!("pair {j}: slopes must have length 2")));
            }
            if pair.presence.categories() != 2 {
                return Err(Error::InvalidModel(format!("pair {j}: presence item must be binary")));
            }
            if pair.frequency.categories() != 3 {
                return Err(Error::InvalidModel(format!(
                    "pair {j}: frequency item must have 3 categories"
                )));
            }
            if pair.presence.slopes[1] != 0.0 || pair.frequency.slopes[0] != 0.0 {
                return Err(Error::InvalidModel(format!(
                    "pair {j}: presence must load only on dimension 1 and frequency only on dimension 2"
                )));
            }
        }
        Ok(())
    }

    pub fn pairs(&self) -> &[HurdlePair] {
        &self.pairs
    }

    pub fn latent(&self) -> &LatentDistribution {
        &self.latent
    }
}

/// Maps an original 0..=3 response to `(presence, frequency)` where the
/// frequency is `None` for "never" and 1..=3 otherwise.
pub fn hurdle_recode(y: u8) -> Result<(u8, Option<u8>)> {
    match y {
        0 => Ok((0, None)),
        1..=3 => Ok((1, Some(y))),
        _ => Err(Error::InadmissiblePattern(format!("original code {y} is outside 0..=3"))),
    }
}

/// Inverse of [`hurdle_recode`].
pub fn hurdle_original(presence: u8, frequency: Option<u8>) -> Result<u8> {
    match (presence, frequency) {
        (0, None) => Ok(0),
        (1, Some(f @ 1..=3)) => Ok(f),
        _ => Err(Error::InadmissiblePattern(format!(
            "(presence={presence}, frequency={frequency:?}) is not a valid hurdle pair"
        ))),
    }
}

/// A measurement model with known parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    LinearFactor(LinearFactorModel),
    TwoPl(TwoPlModel),
    Graded(GradedModel),
    Hurdle(HurdleIrtreeModel),
}

impl From<LinearFactorModel> for ModelSpec {
    fn from(m: LinearFactorModel) -> Self {
        ModelSpec::LinearFactor(m)
    }
}

impl From<TwoPlModel> for ModelSpec {
    fn from(m: TwoPlModel) -> Self {
        ModelSpec::TwoPl(m)
    }
}

impl From<GradedModel> for ModelSpec {
    fn from(m: GradedModel) -> Self {
        ModelSpec::Graded(m)
    }
}

impl From<HurdleIrtreeModel> for ModelSpec {
    fn from(m: HurdleIrtreeModel) -> Self {
        ModelSpec::Hurdle(m)
    }
}

/// Re-checks every invariant of `spec` and hands it back.
pub fn validate_model(spec: ModelSpec) -> Result<ModelSpec> {
    spec.validate()?;
    Ok(spec)
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::LinearFactor(m) => m.validate(),
            ModelSpec::TwoPl(m) => m.validate(),
            ModelSpec::Graded(m) => m.validate(),
            ModelSpec::Hurdle(m) => m.validate(),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::LinearFactor(_) => "linear_factor",
            ModelSpec::TwoPl(_) => "2pl",
            ModelSpec::Graded(_) => "graded",
            ModelSpec::Hurdle(_) => "hurdle",
        }
    }

    pub fn latent(&self) -> &LatentDistribution {
        match self {
            ModelSpec::LinearFactor(m) => m.latent(),
            ModelSpec::TwoPl(m) => m.latent(),
            ModelSpec::Graded(m) => m.latent(),
            ModelSpec::Hurdle(m) => m.latent(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.latent().dimension()
    }

    /// Whether the manifest variables are categorical.
    pub fn is_discrete(&self) -> bool {
        !matches!(self, ModelSpec::LinearFactor(_))
    }

    /// Number of manifest variables (both stages count for hurdle pairs).
    pub fn n_observed(&self) -> usize {
        match self {
            ModelSpec::LinearFactor(m) => m.n_items(),
            ModelSpec::TwoPl(m) => m.n_items(),
            ModelSpec::Graded(m) => m.items().len(),
            ModelSpec::Hurdle(m) => 2 * m.pairs().len(),
        }
    }

    /// Categorical view of a discrete model, `None` for the linear factor
    /// model.
    pub fn discrete_items(&self) -> Option<DiscreteItems> {
        let items = match self {
            ModelSpec::LinearFactor(_) => return None,
            ModelSpec::TwoPl(m) => (0..m.n_items())
                .map(|j| DiscreteItem { item: m.item(j), gate: None })
                .collect(),
            ModelSpec::Graded(m) => m
                .items()
                .iter()
                .map(|it| DiscreteItem { item: it.clone(), gate: None })
                .collect(),
            ModelSpec::Hurdle(m) => m
                .pairs()
                .iter()
                .enumerate()
                .flat_map(|(j, p)| {
                    [
                        DiscreteItem { item: p.presence.clone(), gate: None },
                        DiscreteItem { item: p.frequency.clone(), gate: Some(2 * j) },
                    ]
                })
                .collect(),
        };
        Some(DiscreteItems { items })
    }

    /// Checks that `pattern` can occur under this (discrete) model.
    pub fn check_pattern(&self, pattern: &ResponsePattern) -> Result<()> {
        let items = self.discrete_items().ok_or_else(|| {
            Error::Unsupported("response patterns are defined for categorical models".into())
        })?;
        items.check_pattern(pattern)
    }
}

/// A categorical item together with its structural gate: a gated item is
/// observed exactly when its parent item takes the value 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteItem {
    pub item: GradedItem,
    pub gate: Option<usize>,
}

/// Flattened categorical view shared by 2PL, graded and hurdle models.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteItems {
    items: Vec<DiscreteItem>,
}

impl DiscreteItems {
    pub fn items(&self) -> &[DiscreteItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn check_pattern(&self, pattern: &ResponsePattern) -> Result<()> {
        if pattern.len() != self.items.len() {
            return Err(Error::InadmissiblePattern(format!(
                "pattern has {} entries, model has {}",
                pattern.len(),
                self.items.len()
            )));
        }
        for (j, it) in self.items.iter().enumerate() {
            let observed = match it.gate {
                None => true,
                Some(parent) => pattern.values[parent] == Some(1),
            };
            match (pattern.values[j], observed) {
                (Some(k), true) if usize::from(k) < it.item.categories() => {}
                (Some(k), true) => {
                    return Err(Error::InadmissiblePattern(format!(
                        "entry {j}: code {k} outside 0..{}",
                        it.item.categories()
                    )))
                }
                (None, false) => {}
                (None, true) => {
                    return Err(Error::InadmissiblePattern(format!(
                        "entry {j} is missing but its item is administered"
                    )))
                }
                (Some(_), false) => {
                    return Err(Error::InadmissiblePattern(format!(
                        "entry {j} must be missing because its gate item is not 1"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Number of admissible patterns, as a float so that long tests do not
    /// overflow.
    pub fn pattern_count(&self) -> f64 {
        // Gated items only ever hang off ungated parents.
        let mut count = 1.0;
        for (j, it) in self.items.iter().enumerate() {
            if it.gate.is_some() {
                continue;
            }
            let k = it.item.categories() as f64;
            let mut children = self.items.iter().filter(|c| c.gate == Some(j)).peekable();
            if children.peek().is_none() {
                count *= k;
            } else {
                // Value 1 opens the children; every other value closes them.
                let opened: f64 = children.map(|c| c.item.categories() as f64).product();
                count *= (k - 1.0) + opened;
            }
        }
        count
    }
}

/// One realized vector of categorical responses. `None` marks a
/// structurally missing entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResponsePattern {
    values: Vec<Option<u8>>,
}

/// Byte used for structurally missing entries in compact pattern keys.
pub const MISSING_CODE: u8 = u8::MAX;

impl ResponsePattern {
    pub fn new(values: Vec<Option<u8>>) -> Self {
        Self { values }
    }

    pub fn from_codes(codes: &[u8]) -> Self {
        Self { values: codes.iter().map(|&c| Some(c)).collect() }
    }

    /// Decodes a compact key where [`MISSING_CODE`] marks missing entries.
    pub fn from_key(key: &[u8]) -> Self {
        Self {
            values: key.iter().map(|&c| (c != MISSING_CODE).then_some(c)).collect(),
        }
    }

    pub fn key(&self) -> Vec<u8> {
        self.values.iter().map(|v| v.unwrap_or(MISSING_CODE)).collect()
    }

    pub fn values(&self) -> &[Option<u8>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_missing(&self, j: usize) -> bool {
        self.values[j].is_none()
    }

    /// Sum of the observed codes. Hurdle frequencies are stored as 0..=2,
    /// so presence plus frequency equals the original 0..=3 response and this
    /// is the summed score of the original items.
    pub fn summed_score(&self) -> f64 {
        self.values.iter().flatten().map(|&c| f64::from(c)).sum()
    }
}

impl std::fmt::Display for ResponsePattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .values
            .iter()
            .map(|v| v.map_or_else(|| "NA".to_string(), |c| c.to_string()))
            .collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// Row-major matrix of categorical responses, one compact pattern key per
/// row with [`MISSING_CODE`] marking structurally missing entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternMatrix {
    n_items: usize,
    codes: Vec<u8>,
}

impl PatternMatrix {
    pub fn new(n_items: usize, codes: Vec<u8>) -> Result<Self> {
        if n_items == 0 && !codes.is_empty() || n_items > 0 && codes.len() % n_items != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} codes do not split into rows of {n_items}",
                codes.len()
            )));
        }
        Ok(Self { n_items, codes })
    }

    pub fn from_patterns(patterns: &[ResponsePattern]) -> Result<Self> {
        let n_items = patterns.first().map_or(0, ResponsePattern::len);
        if patterns.iter().any(|p| p.len() != n_items) {
            return Err(Error::ShapeMismatch("patterns have different lengths".into()));
        }
        Ok(Self { n_items, codes: patterns.iter().flat_map(|p| p.key()).collect() })
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_rows(&self) -> usize {
        if self.n_items == 0 {
            0
        } else {
            self.codes.len() / self.n_items
        }
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.codes[i * self.n_items..(i + 1) * self.n_items]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> + '_ {
        self.codes.chunks_exact(self.n_items.max(1))
    }

    pub fn pattern(&self, i: usize) -> ResponsePattern {
        ResponsePattern::from_key(self.row(i))
    }

    pub fn summed_scores(&self) -> Vec<f64> {
        self.rows()
            .map(|r| r.iter().filter(|&&c| c != MISSING_CODE).map(|&c| f64::from(c)).sum())
            .collect()
    }
}

/// A function of the latent variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatentScore {
    /// One latent variable, 0-based.
    Component(usize),
    /// `E(s | η)` for the summed score `s`.
    TrueSummed,
}

/// Observed scores (functions of the manifest variables) and latent scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreDefinition {
    Summed,
    Eap(LatentScore),
    Latent(LatentScore),
}

impl ScoreDefinition {
    pub fn lv_component(index: usize) -> Self {
        ScoreDefinition::Latent(LatentScore::Component(index))
    }

    pub fn true_summed() -> Self {
        ScoreDefinition::Latent(LatentScore::TrueSummed)
    }

    pub fn eap_of(target: LatentScore) -> Self {
        ScoreDefinition::Eap(target)
    }

    pub fn is_observed(&self) -> bool {
        !matches!(self, ScoreDefinition::Latent(_))
    }

    pub fn check(&self, model: &ModelSpec) -> Result<()> {
        let d = model.dimension();
        match self {
            ScoreDefinition::Eap(LatentScore::Component(t))
            | ScoreDefinition::Latent(LatentScore::Component(t))
                if *t >= d =>
            {
                Err(Error::ScoreKind(format!("latent component {t} out of range for d = {d}")))
            }
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for LatentScore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LatentScore::Component(t) => write!(f, "eta{}", t + 1),
            LatentScore::TrueSummed => write!(f, "true_sum"),
        }
    }
}

impl std::fmt::Display for ScoreDefinition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScoreDefinition::Summed => write!(f, "sum"),
            ScoreDefinition::Eap(t) => write!(f, "eap_{t}"),
            ScoreDefinition::Latent(t) => write!(f, "{t}"),
        }
    }
}
