//! Monte Carlo draws of latent and manifest variables, and the observed and
//! latent scores derived from them.
//!
//! Random numbers come from ChaCha8 with one substream per (seed, purpose,
//! row): the 256-bit key is `seed` (little endian) followed by a purpose tag,
//! and the ChaCha stream id is the row index. Rows can therefore be drawn in
//! any order or in parallel with bit-identical results, and the first `n`
//! rows of a larger sample equal a sample of size `n`.

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analytic_linear::linear_eap_weights;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{LatentDistribution, LatentScore, ModelSpec, PatternMatrix, ScoreDefinition, MISSING_CODE};
use crate::quadrature::{expected_summed_score, latent_score_value, PatternScorer, QuadratureGrid, TrueScoreCurve};

const LATENT_STREAM: u64 = 1;
const RESPONSE_STREAM: u64 = 2;

/// Independent generator for one row of one purpose.
pub fn row_rng(seed: u64, purpose: u64, row: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&purpose.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(row);
    rng
}

/// `n` latent vectors stored row-major (`n × d`).
#[derive(Debug, Clone, PartialEq)]
pub struct LatentDraws {
    dimension: usize,
    values: Vec<f64>,
}

impl LatentDraws {
    pub fn new(dimension: usize, values: Vec<f64>) -> Result<Self> {
        if dimension == 0 || values.len() % dimension != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} values do not split into rows of {dimension}",
                values.len()
            )));
        }
        Ok(Self { dimension, values })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dimension)
    }

    pub fn column(&self, t: usize) -> Vec<f64> {
        self.rows().map(|r| r[t]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.dimension).map(|t| self.column(t)).collect()
    }

    /// First `n` rows.
    pub fn head(&self, n: usize) -> Self {
        Self { dimension: self.dimension, values: self.values[..n * self.dimension].to_vec() }
    }
}

/// Simulated manifest variables.
#[derive(Debug, Clone, PartialEq)]
pub enum Responses {
    Discrete(PatternMatrix),
    /// Row-major `n × m` continuous responses.
    Continuous { n_items: usize, values: Vec<f64> },
}

impl Responses {
    pub fn len(&self) -> usize {
        match self {
            Responses::Discrete(p) => p.n_rows(),
            Responses::Continuous { n_items, values } => {
                if *n_items == 0 {
                    0
                } else {
                    values.len() / n_items
                }
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_items(&self) -> usize {
        match self {
            Responses::Discrete(p) => p.n_items(),
            Responses::Continuous { n_items, .. } => *n_items,
        }
    }

    pub fn head(&self, n: usize) -> Self {
        match self {
            Responses::Discrete(p) => {
                let m = p.n_items();
                let codes = (0..n).flat_map(|i| p.row(i).iter().copied()).collect();
                Responses::Discrete(PatternMatrix::new(m, codes).expect("shape preserved"))
            }
            Responses::Continuous { n_items, values } => {
                Responses::Continuous { n_items: *n_items, values: values[..n * n_items].to_vec() }
            }
        }
    }
}

/// i.i.d. draws from the latent distribution via `η = μ + L z` where
/// `L L' = Ψ`.
pub fn sample_latents(latent: &LatentDistribution, n: usize, seed: u64) -> Result<LatentDraws> {
    latent.validate()?;
    if n == 0 {
        return Err(Error::InvalidConfig("sample size must be at least 1".into()));
    }
    let d = latent.dimension();
    let root = linalg::sqrt_factor(latent.covariance(), "latent covariance");
    let mean = latent.mean();
    let mut values = vec![0.0; n * d];
    values.par_chunks_mut(d).enumerate().for_each(|(i, row)| {
        let mut rng = row_rng(seed, LATENT_STREAM, i as u64);
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for (t, out) in row.iter_mut().enumerate() {
            *out = mean[t] + (0..d).map(|s| root[(t, s)] * z[s]).sum::<f64>();
        }
    });
    LatentDraws::new(d, values)
}

/// Manifest variables implied by the model at each latent draw.
pub fn simulate_responses(model: &ModelSpec, latents: &LatentDraws, seed: u64) -> Result<Responses> {
    if latents.dimension() != model.dimension() {
        return Err(Error::ShapeMismatch(format!(
            "latent draws have {} columns, model has {} dimensions",
            latents.dimension(),
            model.dimension()
        )));
    }
    let n = latents.len();
    match model {
        ModelSpec::LinearFactor(m) => {
            let p = m.n_items();
            let root = linalg::sqrt_factor(m.unique_covariance(), "unique covariance");
            let loadings = m.loadings();
            let intercepts = m.intercepts();
            let mut values = vec![0.0; n * p];
            if p > 0 {
                values.par_chunks_mut(p).enumerate().for_each(|(i, row)| {
                    let mut rng = row_rng(seed, RESPONSE_STREAM, i as u64);
                    let z: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
                    let eta = latents.row(i);
                    for (j, out) in row.iter_mut().enumerate() {
                        let common: f64 = (0..eta.len()).map(|t| loadings[(j, t)] * eta[t]).sum();
                        let unique: f64 = (0..p).map(|s| root[(j, s)] * z[s]).sum();
                        *out = intercepts[j] + common + unique;
                    }
                });
            }
            Ok(Responses::Continuous { n_items: p, values })
        }
        _ => {
            let items = model.discrete_items().expect("categorical model");
            let m = items.len();
            let mut codes = vec![0u8; n * m];
            if m > 0 {
                codes.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
                    let mut rng = row_rng(seed, RESPONSE_STREAM, i as u64);
                    let eta = latents.row(i);
                    for (j, it) in items.items().iter().enumerate() {
                        let open = it.gate.map_or(true, |parent| row[parent] == 1);
                        if !open {
                            row[j] = MISSING_CODE;
                            continue;
                        }
                        let u: f64 = rng.gen();
                        let code = (1..it.item.categories())
                            .take_while(|&k| u < it.item.cumulative_prob(k, eta))
                            .count();
                        row[j] = code as u8;
                    }
                });
            }
            Ok(Responses::Discrete(PatternMatrix::new(m, codes)?))
        }
    }
}

/// Latent draws and the manifest variables generated from them.
#[derive(Debug, Clone)]
pub struct McSample {
    pub model: ModelSpec,
    pub seed: u64,
    pub latents: LatentDraws,
    pub responses: Responses,
}

impl McSample {
    pub fn generate(model: &ModelSpec, n: usize, seed: u64) -> Result<Self> {
        model.validate()?;
        let latents = sample_latents(model.latent(), n, seed)?;
        let responses = simulate_responses(model, &latents, seed)?;
        Ok(Self { model: model.clone(), seed, latents, responses })
    }

    pub fn len(&self) -> usize {
        self.latents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latents.is_empty()
    }

    /// First `n` rows; equal to a fresh sample of size `n` with the same seed.
    pub fn head(&self, n: usize) -> Self {
        Self {
            model: self.model.clone(),
            seed: self.seed,
            latents: self.latents.head(n),
            responses: self.responses.head(n),
        }
    }

    /// Writes the sample as CSV: `eta_1..eta_d, y_1..y_m`, then one column
    /// per named score. Missing responses are empty fields.
    pub fn write_csv<W: Write>(&self, mut out: W, scores: &[(String, Vec<f64>)]) -> std::io::Result<()> {
        let d = self.latents.dimension();
        let m = self.responses.n_items();
        let mut header: Vec<String> = (1..=d).map(|t| format!("eta_{t}")).collect();
        header.extend((1..=m).map(|j| format!("y_{j}")));
        header.extend(scores.iter().map(|(name, _)| name.clone()));
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut fields: Vec<String> = self.latents.row(i).iter().map(|v| v.to_string()).collect();
            match &self.responses {
                Responses::Discrete(p) => fields.extend(
                    p.row(i)
                        .iter()
                        .map(|&c| if c == MISSING_CODE { String::new() } else { c.to_string() }),
                ),
                Responses::Continuous { n_items, values } => {
                    fields.extend(values[i * n_items..(i + 1) * n_items].iter().map(|v| v.to_string()))
                }
            }
            fields.extend(scores.iter().map(|(_, v)| v[i].to_string()));
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// Observed score of every simulated response vector. EAP scores of
/// categorical models are computed once per distinct pattern; for the
/// linear factor model they use the closed-form regression weights.
pub fn compute_observed_scores(
    model: &ModelSpec,
    responses: &Responses,
    score: ScoreDefinition,
    grid: Option<&QuadratureGrid>,
) -> Result<Vec<f64>> {
    score.check(model)?;
    match (score, responses) {
        (ScoreDefinition::Latent(_), _) => {
            Err(Error::ScoreKind(format!("{score} is a latent score, not an observed score")))
        }
        (ScoreDefinition::Summed, Responses::Discrete(p)) => Ok(p.summed_scores()),
        (ScoreDefinition::Summed, Responses::Continuous { n_items, values }) => {
            Ok(values.chunks_exact((*n_items).max(1)).map(|r| r.iter().sum()).collect())
        }
        (ScoreDefinition::Eap(target), Responses::Continuous { n_items, values }) => {
            let ModelSpec::LinearFactor(m) = model else {
                return Err(Error::Unsupported("continuous responses need a linear factor model".into()));
            };
            let w = linear_eap_weights(m, target)?;
            Ok(values.par_chunks(*n_items).map(|r| w.apply(r)).collect())
        }
        (ScoreDefinition::Eap(target), Responses::Discrete(p)) => {
            let grid = grid.ok_or_else(|| Error::InvalidConfig("EAP scores need a quadrature grid".into()))?;
            eap_by_pattern(model, p, target, grid)
        }
    }
}

fn eap_by_pattern(
    model: &ModelSpec,
    patterns: &PatternMatrix,
    target: LatentScore,
    grid: &QuadratureGrid,
) -> Result<Vec<f64>> {
    let scorer = PatternScorer::new(model, grid)?;
    let values = grid.map_nodes(|eta| latent_score_value(model, target, eta));
    let mut index: HashMap<&[u8], usize> = HashMap::new();
    let mut distinct: Vec<&[u8]> = Vec::new();
    let row_group: Vec<usize> = patterns
        .rows()
        .map(|row| {
            *index.entry(row).or_insert_with(|| {
                distinct.push(row);
                distinct.len() - 1
            })
        })
        .collect();
    let eaps: Vec<f64> = distinct
        .par_iter()
        .map_init(Vec::new, |buf, key| scorer.posterior_mean(key, &values, buf))
        .collect::<Result<_>>()?;
    Ok(row_group.into_iter().map(|g| eaps[g]).collect())
}

/// Latent score of every simulated latent vector.
pub fn compute_latent_scores(model: &ModelSpec, latents: &LatentDraws, target: LatentScore) -> Result<Vec<f64>> {
    ScoreDefinition::Latent(target).check(model)?;
    Ok(match target {
        LatentScore::Component(t) => latents.column(t),
        LatentScore::TrueSummed => latents
            .values
            .par_chunks(latents.dimension)
            .map(|eta| expected_summed_score(model, eta))
            .collect(),
    })
}

/// True score `E(x | η)` of an observed score at every latent draw.
pub fn compute_true_scores(
    model: &ModelSpec,
    latents: &LatentDraws,
    score: ScoreDefinition,
    grid: &QuadratureGrid,
    cap: usize,
) -> Result<Vec<f64>> {
    let curve = TrueScoreCurve::new(model, score, grid, cap)?;
    Ok(latents.values.par_chunks(latents.dimension).map(|eta| curve.eval(eta)).collect())
}
