//! Reliability and PRMSE for categorical models by exact enumeration of the
//! response patterns combined with quadrature over the latent variables.
//!
//! Pattern-indexed moments (variance of an observed score, variance of an
//! EAP score) are exact sums weighted by the marginal pattern
//! probabilities. Moments of functions of `η` (true scores, latent scores)
//! are quadrature sums.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{LatentScore, ModelSpec, ScoreDefinition, TwoPlModel};
use crate::quadrature::{
    enumerate_patterns, latent_score_value, weighted_moments, GridConfig, PatternScorer, QuadratureGrid,
    DEFAULT_PATTERN_CAP,
};

/// Variance of a pattern-level score and of its true score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreVariances {
    pub observed: f64,
    pub true_score: f64,
}

impl ScoreVariances {
    pub fn ratio(&self) -> Result<f64> {
        if !(self.observed > 0.0) {
            return Err(Error::DegenerateOutcome);
        }
        Ok(self.true_score / self.observed)
    }
}

/// `Var(ξ) = Var(ξ̃) + E[Var(ξ | y)]`, each side computed separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceDecomposition {
    /// Variance of the EAP score, by pattern sums.
    pub explained: f64,
    /// Mean posterior variance, by pattern sums.
    pub residual: f64,
    /// Quadrature variance of the latent score.
    pub total: f64,
}

struct Accumulated {
    probs: Vec<f64>,
    scores: Vec<Vec<f64>>,
    posterior_var: Vec<Vec<f64>>,
    true_scores: Vec<Vec<f64>>,
}

/// One pass over all patterns computing, for every requested observed
/// score, its value per pattern, its posterior variance (EAP scores only)
/// and its true score on every grid node.
fn accumulate(
    model: &ModelSpec,
    grid: &QuadratureGrid,
    cap: usize,
    scores: &[ScoreDefinition],
) -> Result<Accumulated> {
    for s in scores {
        s.check(model)?;
        if !s.is_observed() {
            return Err(Error::ScoreKind(format!("{s} is not an observed score")));
        }
    }
    let patterns = enumerate_patterns(model, cap)?;
    let scorer = PatternScorer::new(model, grid)?;
    let targets: Vec<Option<Vec<f64>>> = scores
        .iter()
        .map(|s| match s {
            ScoreDefinition::Eap(t) => Some(grid.map_nodes(|eta| latent_score_value(model, *t, eta))),
            _ => None,
        })
        .collect();
    let n_nodes = grid.len();
    let k = scores.len();

    const PATTERN_CHUNK: usize = 256;
    struct Partial {
        rows: Vec<(f64, Vec<f64>, Vec<f64>)>,
        true_scores: Vec<Vec<f64>>,
    }
    let empty = || Partial { rows: Vec::new(), true_scores: vec![vec![0.0; n_nodes]; k] };
    // fixed chunks merged in order keep the sums independent of the thread count
    let partial = patterns
        .par_chunks(PATTERN_CHUNK)
        .map(|chunk| {
            chunk.iter().fold(empty(), |mut acc, pattern| {
                let key = pattern.key();
                let mut ll = Vec::with_capacity(n_nodes);
                scorer.log_likelihoods(&key, &mut ll);
                let lik: Vec<f64> = ll.iter().map(|v| v.exp()).collect();
                let prob: f64 = lik.iter().zip(grid.weights()).map(|(l, w)| l * w).sum();
                let mut values = Vec::with_capacity(k);
                let mut post_vars = Vec::with_capacity(k);
                for target in &targets {
                    match target {
                        None => {
                            values.push(pattern.summed_score());
                            post_vars.push(0.0);
                        }
                        Some(xi) if prob > 0.0 => {
                            let post: Vec<f64> =
                                lik.iter().zip(grid.weights()).map(|(l, w)| l * w / prob).collect();
                            let (mean, var) = weighted_moments(xi, &post);
                            values.push(mean);
                            post_vars.push(var);
                        }
                        Some(_) => {
                            values.push(0.0);
                            post_vars.push(0.0);
                        }
                    }
                }
                for (tau, x) in acc.true_scores.iter_mut().zip(&values) {
                    tau.iter_mut().zip(&lik).for_each(|(t, l)| *t += x * l);
                }
                acc.rows.push((prob, values, post_vars));
                acc
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(empty(), |mut a, b| {
            a.rows.extend(b.rows);
            for (ta, tb) in a.true_scores.iter_mut().zip(b.true_scores) {
                ta.iter_mut().zip(tb).for_each(|(x, y)| *x += y);
            }
            a
        });
    let rows = partial.rows;
    let probs = rows.iter().map(|r| r.0).collect();
    let scores_by_kind = (0..k).map(|s| rows.iter().map(|r| r.1[s]).collect()).collect();
    let post_by_kind = (0..k).map(|s| rows.iter().map(|r| r.2[s]).collect()).collect();
    Ok(Accumulated {
        probs,
        scores: scores_by_kind,
        posterior_var: post_by_kind,
        true_scores: partial.true_scores,
    })
}

/// Variances of an observed score (pattern sums) and of its true score
/// `τ_x(η) = Σ_y x(y) P(y | η)` (quadrature).
pub fn score_variances(
    model: &ModelSpec,
    score: ScoreDefinition,
    grid: &QuadratureGrid,
    cap: usize,
) -> Result<ScoreVariances> {
    let acc = accumulate(model, grid, cap, &[score])?;
    let (_, observed) = weighted_moments(&acc.scores[0], &acc.probs);
    let (_, true_score) = grid.moments(&acc.true_scores[0]);
    Ok(ScoreVariances { observed, true_score })
}

/// Reliability `Var(τ_x) / Var(x)` of an observed score of a categorical
/// model.
pub fn reliability_discrete(
    model: &ModelSpec,
    score: ScoreDefinition,
    grid: &QuadratureGrid,
    cap: usize,
) -> Result<f64> {
    score_variances(model, score, grid, cap)?.ratio()
}

/// Decomposition of the variance of a latent score into the part explained
/// by its EAP score and the mean posterior variance.
pub fn variance_decomposition(
    model: &ModelSpec,
    target: LatentScore,
    grid: &QuadratureGrid,
    cap: usize,
) -> Result<VarianceDecomposition> {
    let acc = accumulate(model, grid, cap, &[ScoreDefinition::Eap(target)])?;
    let (_, explained) = weighted_moments(&acc.scores[0], &acc.probs);
    let residual = acc.posterior_var[0].iter().zip(&acc.probs).map(|(v, p)| v * p).sum::<f64>()
        / acc.probs.iter().sum::<f64>();
    let xi = grid.map_nodes(|eta| latent_score_value(model, target, eta));
    let (_, total) = grid.moments(&xi);
    Ok(VarianceDecomposition { explained, residual, total })
}

/// PRMSE `Var(ξ̃) / Var(ξ)` of a latent score of a categorical model.
pub fn prmse_discrete(model: &ModelSpec, target: LatentScore, grid: &QuadratureGrid, cap: usize) -> Result<f64> {
    let v = variance_decomposition(model, target, grid, cap)?;
    if !(v.total > 0.0) {
        return Err(Error::DegenerateOutcome);
    }
    Ok(v.explained / v.total)
}

fn spec_of(model: &TwoPlModel) -> ModelSpec {
    ModelSpec::TwoPl(model.clone())
}

const ETA: LatentScore = LatentScore::Component(0);

/// Reliability of the EAP score of `η` under a 2PL model.
pub fn reliability_eap_2pl(model: &TwoPlModel, grid: &QuadratureGrid) -> Result<f64> {
    reliability_discrete(&spec_of(model), ScoreDefinition::Eap(ETA), grid, DEFAULT_PATTERN_CAP)
}

/// Reliability of the summed score under a 2PL model.
pub fn reliability_summed_2pl(model: &TwoPlModel, grid: &QuadratureGrid) -> Result<f64> {
    reliability_discrete(&spec_of(model), ScoreDefinition::Summed, grid, DEFAULT_PATTERN_CAP)
}

/// PRMSE of `η` under a 2PL model.
pub fn prmse_lv_2pl(model: &TwoPlModel, grid: &QuadratureGrid) -> Result<f64> {
    prmse_discrete(&spec_of(model), ETA, grid, DEFAULT_PATTERN_CAP)
}

/// PRMSE of the true summed score under a 2PL model.
pub fn prmse_true_summed_2pl(model: &TwoPlModel, grid: &QuadratureGrid) -> Result<f64> {
    prmse_discrete(&spec_of(model), LatentScore::TrueSummed, grid, DEFAULT_PATTERN_CAP)
}

/// The four standard coefficients of a unidimensional model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardCoefficients {
    pub reliability_eap: f64,
    pub reliability_summed: f64,
    pub prmse_lv: f64,
    pub prmse_true_summed: f64,
}

impl StandardCoefficients {
    pub fn as_array(&self) -> [f64; 4] {
        [self.reliability_eap, self.reliability_summed, self.prmse_lv, self.prmse_true_summed]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Reliability of (EAP of `η`, summed score) and PRMSE of (`η`, true summed
/// score) for a unidimensional categorical model, in one enumeration.
pub fn standard_coefficients(model: &ModelSpec, grid: &QuadratureGrid, cap: usize) -> Result<StandardCoefficients> {
    if model.dimension() != 1 {
        return Err(Error::Unsupported("standard coefficients need a unidimensional model".into()));
    }
    let scores = [
        ScoreDefinition::Eap(ETA),
        ScoreDefinition::Summed,
        ScoreDefinition::Eap(LatentScore::TrueSummed),
    ];
    let acc = accumulate(model, grid, cap, &scores)?;
    let var_obs = |s: usize| weighted_moments(&acc.scores[s], &acc.probs).1;
    let var_true = |s: usize| grid.moments(&acc.true_scores[s]).1;
    let var_latent = |t: LatentScore| grid.moments(&grid.map_nodes(|e| latent_score_value(model, t, e))).1;
    let ratio = |a: f64, b: f64| if b > 0.0 { Ok(a / b) } else { Err(Error::DegenerateOutcome) };
    Ok(StandardCoefficients {
        reliability_eap: ratio(var_true(0), var_obs(0))?,
        reliability_summed: ratio(var_true(1), var_obs(1))?,
        prmse_lv: ratio(var_obs(0), var_latent(ETA))?,
        prmse_true_summed: ratio(var_obs(2), var_latent(LatentScore::TrueSummed))?,
    })
}

/// Largest change in the standard coefficients when the grid is refined
/// from `n` to `2n - 1` nodes (halving the spacing).
pub fn quadrature_stability(model: &ModelSpec, cfg: &GridConfig, cap: usize) -> Result<f64> {
    let coarse = standard_coefficients(model, &cfg.build(model.latent())?, cap)?;
    let fine_cfg = GridConfig { nodes_per_dim: 2 * cfg.nodes_per_dim - 1, ..*cfg };
    let fine = standard_coefficients(model, &fine_cfg.build(model.latent())?, cap)?;
    Ok(coarse.max_abs_diff(&fine))
}
