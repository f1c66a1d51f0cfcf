//! Numerical integration over the latent distribution for categorical
//! models: pattern likelihoods, marginal probabilities, EAP scores and true
//! score curves.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::analytic_linear;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{
    DiscreteItems, LatentDistribution, LatentScore, ModelSpec, ResponsePattern, ScoreDefinition,
    MISSING_CODE,
};

/// Default cap on the number of enumerated response patterns.
pub const DEFAULT_PATTERN_CAP: usize = 1 << 20;

/// Marginal probabilities below this are treated as underflow.
pub const MIN_MARGINAL: f64 = 1e-300;

/// Node placement rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    /// Equally spaced nodes on `[lo, hi]` (in standard-deviation units)
    /// weighted by the latent density.
    Rectangular,
    /// Gauss–Hermite nodes per axis, reweighted to the joint latent density.
    GaussHermite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub rule: QuadratureRule,
    pub nodes_per_dim: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { rule: QuadratureRule::Rectangular, nodes_per_dim: 61, lo: -6.0, hi: 6.0 }
    }
}

impl GridConfig {
    pub fn with_nodes(nodes_per_dim: usize) -> Self {
        Self { nodes_per_dim, ..Self::default() }
    }

    pub fn build(&self, latent: &LatentDistribution) -> Result<QuadratureGrid> {
        match self.rule {
            QuadratureRule::Rectangular => build_grid(latent, self.nodes_per_dim, self.lo, self.hi),
            QuadratureRule::GaussHermite => build_gauss_hermite_grid(latent, self.nodes_per_dim),
        }
    }
}

/// Tensor-product quadrature grid. Nodes are stored row-major with the last
/// axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    axes: Vec<Vec<f64>>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    fn from_axes(axes: Vec<Vec<f64>>, weight_of: impl Fn(&[f64], &[usize]) -> f64) -> Result<Self> {
        let d = axes.len();
        let count: usize = axes.iter().map(Vec::len).product();
        let mut nodes = Vec::with_capacity(count * d);
        let mut weights = Vec::with_capacity(count);
        let mut index = vec![0usize; d];
        let mut eta = vec![0.0; d];
        for _ in 0..count {
            for t in 0..d {
                eta[t] = axes[t][index[t]];
            }
            nodes.extend_from_slice(&eta);
            weights.push(weight_of(&eta, &index));
            for t in (0..d).rev() {
                index[t] += 1;
                if index[t] < axes[t].len() {
                    break;
                }
                index[t] = 0;
            }
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidGrid("latent density vanishes on every node".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { axes, nodes, weights })
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let d = self.dimension();
        &self.nodes[i * d..(i + 1) * d]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.nodes.chunks_exact(self.dimension().max(1)).take(self.len())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Evaluates `f` at every node.
    pub fn map_nodes(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|i| f(self.node(i))).collect()
    }

    /// Quadrature mean and variance of a function tabulated on the nodes.
    pub fn moments(&self, values: &[f64]) -> (f64, f64) {
        weighted_moments(values, &self.weights)
    }

    /// Position of node `i` along axis `t`.
    #[inline]
    fn axis_index(&self, i: usize, t: usize) -> usize {
        let stride: usize = self.axes[t + 1..].iter().map(Vec::len).product();
        (i / stride) % self.axes[t].len()
    }
}

/// Mean and variance of `values` under probability weights `weights`,
/// computed around the weighted mean.
pub fn weighted_moments(values: &[f64], weights: &[f64]) -> (f64, f64) {
    let total: f64 = weights.iter().sum();
    let mean = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
    let var = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v - mean) * (v - mean))
        .sum::<f64>()
        / total;
    (mean, var)
}

fn check_grid_dimension(latent: &LatentDistribution, nodes_per_dim: usize) -> Result<()> {
    if nodes_per_dim < 2 {
        return Err(Error::GridTooCoarse(nodes_per_dim));
    }
    let d = latent.dimension();
    if d == 0 || d > 2 {
        return Err(Error::Unsupported(format!(
            "quadrature grids support 1 or 2 latent dimensions, got {d}"
        )));
    }
    Ok(())
}

fn precision_and_log_det(latent: &LatentDistribution) -> Result<(DMatrix<f64>, f64)> {
    let cov = latent.covariance();
    let chol = cov.clone().cholesky().ok_or_else(|| {
        Error::InvalidGrid("latent covariance must be positive definite for quadrature".into())
    })?;
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok((chol.inverse(), log_det))
}

/// Equally spaced tensor-product grid on `[lo, hi]` standard deviations
/// around the latent mean, weighted by the latent density and renormalized.
pub fn build_grid(
    latent: &LatentDistribution,
    nodes_per_dim: usize,
    lo: f64,
    hi: f64,
) -> Result<QuadratureGrid> {
    check_grid_dimension(latent, nodes_per_dim)?;
    if !(lo < hi) {
        return Err(Error::InvalidGrid(format!("lo ({lo}) must be below hi ({hi})")));
    }
    let d = latent.dimension();
    let step = (hi - lo) / (nodes_per_dim - 1) as f64;
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|t| {
            let (mu, sd) = (latent.mean()[t], latent.variance(t).sqrt());
            (0..nodes_per_dim).map(|i| mu + sd * (lo + step * i as f64)).collect()
        })
        .collect();
    let (precision, log_det) = precision_and_log_det(latent)?;
    let mean = latent.mean().clone();
    QuadratureGrid::from_axes(axes, |eta, _| {
        linalg::mvn_log_density(eta, &mean, &precision, log_det).exp()
    })
}

/// Probabilists' Gauss–Hermite rule (weight `exp(-x²/2)`) by Golub–Welsch,
/// with weights normalized to sum to one.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    pairs.into_iter().map(|(x, w)| (x, w / total)).unzip()
}

/// Tensor-product Gauss–Hermite grid on the marginal scales; correlated
/// latents are handled by reweighting with the joint-to-product density
/// ratio.
pub fn build_gauss_hermite_grid(latent: &LatentDistribution, nodes_per_dim: usize) -> Result<QuadratureGrid> {
    check_grid_dimension(latent, nodes_per_dim)?;
    let d = latent.dimension();
    let (x, w) = gauss_hermite(nodes_per_dim);
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|t| {
            let (mu, sd) = (latent.mean()[t], latent.variance(t).sqrt());
            x.iter().map(|xi| mu + sd * xi).collect()
        })
        .collect();
    let (precision, log_det) = precision_and_log_det(latent)?;
    let mean = latent.mean().clone();
    let marginal_log: f64 = (0..d).map(|t| latent.variance(t).ln()).sum();
    let marginal_precision = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        d,
        (0..d).map(|t| 1.0 / latent.variance(t)),
    ));
    QuadratureGrid::from_axes(axes, |eta, index| {
        let base: f64 = index.iter().map(|&i| w[i]).product();
        let joint = linalg::mvn_log_density(eta, &mean, &precision, log_det);
        let product = linalg::mvn_log_density(eta, &mean, &marginal_precision, marginal_log);
        base * (joint - product).exp()
    })
}

fn discrete(model: &ModelSpec) -> Result<DiscreteItems> {
    model.discrete_items().ok_or_else(|| {
        Error::Unsupported("this operation needs a model with categorical responses".into())
    })
}

/// `P(y_j = k | η)` for item `j` of a categorical model.
pub fn item_response_prob(model: &ModelSpec, item: usize, k: usize, eta: &[f64]) -> Result<f64> {
    let items = discrete(model)?;
    let it = items
        .items()
        .get(item)
        .ok_or_else(|| Error::InvalidConfig(format!("item {item} out of range")))?;
    if k >= it.item.categories() {
        return Err(Error::InadmissiblePattern(format!(
            "category {k} outside 0..{} for item {item}",
            it.item.categories()
        )));
    }
    Ok(it.item.category_prob(k, eta))
}

/// `P(y | η)` under local independence; structurally missing entries
/// contribute a factor of one.
pub fn pattern_likelihood(model: &ModelSpec, pattern: &ResponsePattern, eta: &[f64]) -> Result<f64> {
    let items = discrete(model)?;
    items.check_pattern(pattern)?;
    let log: f64 = items
        .items()
        .iter()
        .zip(pattern.values())
        .filter_map(|(it, v)| v.map(|k| it.item.log_category_prob(usize::from(k), eta)))
        .sum();
    Ok(log.exp())
}

/// Marginal probability `∫ P(y | η) dF(η)` by quadrature.
pub fn marginal_probability(model: &ModelSpec, pattern: &ResponsePattern, grid: &QuadratureGrid) -> Result<f64> {
    let scorer = PatternScorer::new(model, grid)?;
    scorer.items.check_pattern(pattern)?;
    let mut buf = Vec::new();
    Ok(scorer.log_marginal(&pattern.key(), &mut buf).exp())
}

/// Value of a latent score at `eta`.
pub fn latent_score_value(model: &ModelSpec, target: LatentScore, eta: &[f64]) -> f64 {
    match target {
        LatentScore::Component(t) => eta[t],
        LatentScore::TrueSummed => expected_summed_score(model, eta),
    }
}

/// True summed score `E(s | η)`.
pub fn expected_summed_score(model: &ModelSpec, eta: &[f64]) -> f64 {
    match model {
        ModelSpec::LinearFactor(m) => {
            let l = m.loadings();
            (0..m.n_items())
                .map(|j| m.intercepts()[j] + (0..l.ncols()).map(|t| l[(j, t)] * eta[t]).sum::<f64>())
                .sum()
        }
        _ => {
            let items = model.discrete_items().expect("categorical model");
            items
                .items()
                .iter()
                .map(|it| {
                    let open = match it.gate {
                        None => 1.0,
                        Some(parent) => items.items()[parent].item.category_prob(1, eta),
                    };
                    open * it.item.expected_code(eta)
                })
                .sum()
        }
    }
}

/// EAP score `E(ξ | y)` of a latent score.
pub fn eap_score(
    model: &ModelSpec,
    pattern: &ResponsePattern,
    target: LatentScore,
    grid: &QuadratureGrid,
) -> Result<f64> {
    ScoreDefinition::Latent(target).check(model)?;
    let values = grid.map_nodes(|eta| latent_score_value(model, target, eta));
    eap_of_values(model, pattern, grid, &values)
}

/// Posterior mean of an arbitrary function tabulated on the grid nodes.
pub fn eap_of_values(
    model: &ModelSpec,
    pattern: &ResponsePattern,
    grid: &QuadratureGrid,
    values: &[f64],
) -> Result<f64> {
    let scorer = PatternScorer::new(model, grid)?;
    scorer.items.check_pattern(pattern)?;
    let mut buf = Vec::new();
    scorer.posterior_mean(&pattern.key(), values, &mut buf)
}

/// Enumerates every admissible response pattern in lexicographic order
/// (missing sorts before 0).
pub fn enumerate_patterns(model: &ModelSpec, cap: usize) -> Result<Vec<ResponsePattern>> {
    let items = discrete(model)?;
    let count = items.pattern_count();
    if count > cap as f64 {
        return Err(Error::PatternSpaceTooLarge { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut current: Vec<Option<u8>> = Vec::with_capacity(items.len());
    fn recurse(items: &DiscreteItems, current: &mut Vec<Option<u8>>, out: &mut Vec<ResponsePattern>) {
        let j = current.len();
        if j == items.len() {
            out.push(ResponsePattern::new(current.clone()));
            return;
        }
        let it = &items.items()[j];
        let open = it.gate.map_or(true, |parent| current[parent] == Some(1));
        if open {
            for k in 0..it.item.categories() {
                current.push(Some(k as u8));
                recurse(items, current, out);
                current.pop();
            }
        } else {
            current.push(None);
            recurse(items, current, out);
            current.pop();
        }
    }
    recurse(&items, &mut current, &mut out);
    Ok(out)
}

/// True score `E(x | η)` of an observed score.
///
/// The summed score uses the item expectations directly. EAP scores of
/// categorical models sum `x̃(y) P(y | η)` over all patterns and therefore
/// need an enumerable pattern space; for the linear factor model the EAP
/// true score is linear in `η`.
pub fn true_score_curve(
    model: &ModelSpec,
    score: ScoreDefinition,
    eta: &[f64],
    grid: &QuadratureGrid,
    cap: usize,
) -> Result<f64> {
    let curve = TrueScoreCurve::new(model, score, grid, cap)?;
    Ok(curve.eval(eta))
}

/// Reusable true-score function; EAP tables are computed once.
pub struct TrueScoreCurve<'a> {
    model: &'a ModelSpec,
    kind: CurveKind,
}

enum CurveKind {
    Summed,
    Linear { weights: Vec<f64>, offset: f64 },
    PatternSum { items: DiscreteItems, patterns: Vec<Vec<u8>>, scores: Vec<f64> },
}

impl<'a> TrueScoreCurve<'a> {
    pub fn new(model: &'a ModelSpec, score: ScoreDefinition, grid: &QuadratureGrid, cap: usize) -> Result<Self> {
        score.check(model)?;
        let kind = match (score, model) {
            (ScoreDefinition::Latent(_), _) => {
                return Err(Error::ScoreKind("true scores are defined for observed scores".into()))
            }
            (ScoreDefinition::Summed, _) => CurveKind::Summed,
            (ScoreDefinition::Eap(target), ModelSpec::LinearFactor(m)) => {
                let w = analytic_linear::linear_eap_weights(m, target)?;
                // E(w'y + b | η) = w'(ν + Λη) + b
                let l = m.loadings();
                let weights = (0..l.ncols())
                    .map(|t| (0..l.nrows()).map(|j| w.weights[j] * l[(j, t)]).sum())
                    .collect();
                let offset = w.offset + w.weights.iter().zip(m.intercepts().iter()).map(|(a, b)| a * b).sum::<f64>();
                CurveKind::Linear { weights, offset }
            }
            (ScoreDefinition::Eap(target), _) => {
                let patterns = enumerate_patterns(model, cap)?;
                let scorer = PatternScorer::new(model, grid)?;
                let values = grid.map_nodes(|eta| latent_score_value(model, target, eta));
                let mut buf = Vec::new();
                let mut keys = Vec::with_capacity(patterns.len());
                let mut scores = Vec::with_capacity(patterns.len());
                for p in &patterns {
                    let key = p.key();
                    scores.push(scorer.posterior_mean(&key, &values, &mut buf)?);
                    keys.push(key);
                }
                CurveKind::PatternSum { items: scorer.items.clone(), patterns: keys, scores }
            }
        };
        Ok(Self { model, kind })
    }

    pub fn eval(&self, eta: &[f64]) -> f64 {
        match &self.kind {
            CurveKind::Summed => expected_summed_score(self.model, eta),
            CurveKind::Linear { weights, offset } => {
                offset + weights.iter().zip(eta).map(|(w, e)| w * e).sum::<f64>()
            }
            CurveKind::PatternSum { items, patterns, scores } => {
                // log P(y_j = k | η) tabulated once per call
                let table: Vec<Vec<f64>> = items
                    .items()
                    .iter()
                    .map(|it| (0..it.item.categories()).map(|k| it.item.log_category_prob(k, eta)).collect())
                    .collect();
                patterns
                    .iter()
                    .zip(scores)
                    .map(|(key, s)| {
                        let log: f64 = key
                            .iter()
                            .enumerate()
                            .filter(|(_, &c)| c != MISSING_CODE)
                            .map(|(j, &c)| table[j][usize::from(c)])
                            .sum();
                        s * log.exp()
                    })
                    .sum()
            }
        }
    }
}

/// Log-probability table of one (item, category) over the grid.
#[derive(Debug, Clone)]
enum LogTable {
    /// Item depends on no latent dimension.
    Constant(f64),
    /// Item depends on a single axis; values indexed by axis node.
    Axis(usize, Vec<f64>),
    /// Values indexed by full grid node.
    Full(Vec<f64>),
}

/// Precomputed per-node item log-probabilities for fast repeated pattern
/// scoring on one grid.
///
/// Items loading on a single latent dimension are tabulated along that
/// axis only, so a pattern costs `O(m · nodes_per_dim + nodes)` rather than
/// `O(m · nodes)` under simple structure.
#[derive(Debug, Clone)]
pub struct PatternScorer<'g> {
    items: DiscreteItems,
    grid: &'g QuadratureGrid,
    tables: Vec<Vec<LogTable>>,
    axis_index: Vec<Vec<usize>>,
    log_weights: Vec<f64>,
    /// No item needs a full-grid table.
    separable: bool,
}

impl<'g> PatternScorer<'g> {
    pub fn new(model: &ModelSpec, grid: &'g QuadratureGrid) -> Result<Self> {
        let items = discrete(model)?;
        if grid.dimension() != model.dimension() {
            return Err(Error::ShapeMismatch(format!(
                "grid has {} dimensions, model has {}",
                grid.dimension(),
                model.dimension()
            )));
        }
        let d = grid.dimension();
        let mut eta = vec![0.0; d];
        let tables: Vec<Vec<LogTable>> = items
            .items()
            .iter()
            .map(|it| {
                let kk = it.item.categories();
                match it.item.single_dimension() {
                    Ok(None) => (0..kk).map(|k| LogTable::Constant(it.item.log_category_prob(k, &eta))).collect(),
                    Ok(Some(t)) => (0..kk)
                        .map(|k| {
                            let vals = grid.axes()[t]
                                .iter()
                                .map(|&x| {
                                    let mut e = vec![0.0; d];
                                    e[t] = x;
                                    it.item.log_category_prob(k, &e)
                                })
                                .collect();
                            LogTable::Axis(t, vals)
                        })
                        .collect(),
                    Err(()) => {
                        (0..kk)
                            .map(|k| {
                                LogTable::Full(
                                    (0..grid.len())
                                        .map(|i| {
                                            eta.copy_from_slice(grid.node(i));
                                            it.item.log_category_prob(k, &eta)
                                        })
                                        .collect(),
                                )
                            })
                            .collect()
                    }
                }
            })
            .collect();
        let axis_index = (0..d).map(|t| (0..grid.len()).map(|i| grid.axis_index(i, t)).collect()).collect();
        let log_weights = grid.weights().iter().map(|w| w.ln()).collect();
        let separable = tables.iter().flatten().all(|t| !matches!(t, LogTable::Full(_)));
        Ok(Self { items, grid, tables, axis_index, log_weights, separable })
    }

    pub fn items(&self) -> &DiscreteItems {
        &self.items
    }

    pub fn grid(&self) -> &QuadratureGrid {
        self.grid
    }

    /// Fills `out` with `ln P(y | node_i)` for every grid node. `key` uses
    /// [`MISSING_CODE`] for missing entries and is assumed admissible.
    pub fn log_likelihoods(&self, key: &[u8], out: &mut Vec<f64>) {
        let d = self.grid.dimension();
        out.clear();
        out.resize(self.grid.len(), 0.0);
        let (constant, axis_acc) = self.accumulate(key, out);
        if d == 1 {
            out.iter_mut().zip(&axis_acc[0]).for_each(|(o, a)| *o += a + constant);
        } else {
            for (i, o) in out.iter_mut().enumerate() {
                let mut s = constant;
                for t in 0..d {
                    s += axis_acc[t][self.axis_index[t][i]];
                }
                *o += s;
            }
        }
    }

    /// Sums the constant and per-axis log-likelihood terms of `key`; full
    /// tables are added into `full`.
    fn accumulate(&self, key: &[u8], full: &mut [f64]) -> (f64, Vec<Vec<f64>>) {
        let mut constant = 0.0;
        let mut axis_acc: Vec<Vec<f64>> = self.grid.axes().iter().map(|a| vec![0.0; a.len()]).collect();
        for (j, &code) in key.iter().enumerate() {
            if code == MISSING_CODE {
                continue;
            }
            match &self.tables[j][usize::from(code)] {
                LogTable::Constant(v) => constant += v,
                LogTable::Axis(t, vals) => axis_acc[*t].iter_mut().zip(vals).for_each(|(a, v)| *a += v),
                LogTable::Full(vals) => full.iter_mut().zip(vals).for_each(|(a, v)| *a += v),
            }
        }
        (constant, axis_acc)
    }

    /// Product form of the posterior for separable likelihoods: one `exp`
    /// per axis node instead of one per grid node. `None` on underflow.
    fn separable_marginal(&self, key: &[u8], buf: &mut Vec<f64>) -> Option<f64> {
        let (constant, axis_acc) = self.accumulate(key, &mut []);
        let mut shift = constant;
        let factors: Vec<Vec<f64>> = axis_acc
            .iter()
            .map(|acc| {
                let max = acc.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                shift += max;
                acc.iter().map(|v| (v - max).exp()).collect()
            })
            .collect();
        buf.clear();
        let weights = self.grid.weights();
        match factors.as_slice() {
            [f0] => buf.extend(f0.iter().zip(weights).map(|(f, w)| f * w)),
            [f0, f1] => {
                // nodes are row-major with the first axis slowest
                for (a, row) in weights.chunks_exact(f1.len()).enumerate() {
                    buf.extend(row.iter().zip(f1).map(|(w, g)| f0[a] * g * w));
                }
            }
            _ => return None,
        }
        let sum: f64 = buf.iter().sum();
        if !(sum > 1e-250) || !sum.is_finite() || !shift.is_finite() {
            return None;
        }
        buf.iter_mut().for_each(|v| *v /= sum);
        Some(shift + sum.ln())
    }

    /// Returns `ln P(y)` and leaves the normalized posterior weights over
    /// the grid nodes in `buf`.
    pub fn log_marginal(&self, key: &[u8], buf: &mut Vec<f64>) -> f64 {
        if self.separable {
            if let Some(v) = self.separable_marginal(key, buf) {
                return v;
            }
        }
        self.log_likelihoods(key, buf);
        let mut max = f64::NEG_INFINITY;
        for (v, lw) in buf.iter_mut().zip(&self.log_weights) {
            *v += lw;
            max = max.max(*v);
        }
        if !max.is_finite() {
            return f64::NEG_INFINITY;
        }
        let mut sum = 0.0;
        for v in buf.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        buf.iter_mut().for_each(|v| *v /= sum);
        max + sum.ln()
    }

    /// Posterior mean of `values` (tabulated on the grid) given pattern `key`.
    pub fn posterior_mean(&self, key: &[u8], values: &[f64], buf: &mut Vec<f64>) -> Result<f64> {
        let log_marginal = self.log_marginal(key, buf);
        if !(log_marginal >= MIN_MARGINAL.ln()) {
            return Err(Error::ZeroMarginal);
        }
        Ok(buf.iter().zip(values).map(|(p, v)| p * v).sum())
    }
}
