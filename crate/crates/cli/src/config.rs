//! JSON model configuration files.

use std::path::Path;

use nalgebra::DMatrix;
use precision_core::{
    GradedItem, GradedModel, HurdleIrtreeModel, HurdlePair, LatentDistribution, LinearFactorModel, ModelSpec,
    TwoPlModel,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A vector for one latent dimension, or rows of a matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Matrix {
    Column(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl Matrix {
    fn rows(&self) -> Vec<Vec<f64>> {
        match self {
            Matrix::Column(v) => v.iter().map(|x| vec![*x]).collect(),
            Matrix::Rows(r) => r.clone(),
        }
    }

    fn width(&self) -> Option<usize> {
        match self {
            Matrix::Column(_) => Some(1),
            Matrix::Rows(r) => r.first().map(Vec::len),
        }
    }

    fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        if m.ncols() == 1 {
            Matrix::Column(m.column(0).iter().copied().collect())
        } else {
            Matrix::Rows(m.row_iter().map(|r| r.iter().copied().collect()).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradedItemConfig {
    pub slopes: Vec<f64>,
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HurdlePairConfig {
    pub presence_slope: f64,
    pub presence_threshold: f64,
    pub frequency_slope: f64,
    pub frequency_thresholds: [f64; 2],
}

/// Parsed but not yet validated model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    LinearFactor {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        intercepts: Option<Vec<f64>>,
        loadings: Matrix,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        uniquenesses: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        unique_covariance: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        latent: Option<LatentConfig>,
    },
    TwoPl {
        intercepts: Vec<f64>,
        slopes: Matrix,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        latent: Option<LatentConfig>,
    },
    Graded {
        items: Vec<GradedItemConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        latent: Option<LatentConfig>,
    },
    Hurdle {
        pairs: Vec<HurdlePairConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        latent: Option<LatentConfig>,
    },
}

fn invalid(path: impl Into<String>, err: impl std::fmt::Display) -> CliError {
    CliError::Validation { path: path.into(), message: err.to_string() }
}

fn square(rows: &[Vec<f64>], path: &str) -> Result<DMatrix<f64>, CliError> {
    let k = rows.len();
    if let Some(i) = rows.iter().position(|r| r.len() != k) {
        return Err(invalid(format!("{path}[{i}]"), format!("expected {k} entries, got {}", rows[i].len())));
    }
    Ok(DMatrix::from_row_iterator(k, k, rows.iter().flatten().copied()))
}

fn build_latent(cfg: Option<&LatentConfig>, d: usize) -> Result<LatentDistribution, CliError> {
    let Some(cfg) = cfg else { return Ok(LatentDistribution::standard(d)) };
    if let Some(dim) = cfg.dimension {
        if dim != d {
            return Err(invalid("latent.dimension", format!("model implies {d} latent variables, got {dim}")));
        }
    }
    let mean = cfg.mean.clone().unwrap_or_else(|| vec![0.0; d]);
    if mean.len() != d {
        return Err(invalid("latent.mean", format!("expected {d} entries, got {}", mean.len())));
    }
    let cov = match &cfg.covariance {
        Some(rows) => {
            if rows.len() != d {
                return Err(invalid("latent.covariance", format!("expected {d} rows, got {}", rows.len())));
            }
            square(rows, "latent.covariance")?
        }
        None => DMatrix::identity(d, d),
    };
    LatentDistribution::new(mean, cov).map_err(|e| invalid("latent.covariance", e))
}

fn latent_width(cfg: Option<&LatentConfig>) -> Option<usize> {
    let cfg = cfg?;
    cfg.dimension.or(cfg.mean.as_ref().map(Vec::len)).or(cfg.covariance.as_ref().map(Vec::len))
}

impl ModelConfig {
    /// Builds and validates the model; errors carry the offending field.
    pub fn to_spec(&self) -> Result<ModelSpec, CliError> {
        match self {
            ModelConfig::LinearFactor { intercepts, loadings, uniquenesses, unique_covariance, latent } => {
                let rows = loadings.rows();
                let m = rows.len();
                let d = loadings.width().or(latent_width(latent.as_ref())).unwrap_or(1);
                if m == 0 {
                    return Err(invalid("loadings", "at least one indicator is required"));
                }
                if let Some(i) = rows.iter().position(|r| r.len() != d) {
                    return Err(invalid(format!("loadings[{i}]"), format!("expected {d} entries, got {}", rows[i].len())));
                }
                let intercepts = intercepts.clone().unwrap_or_else(|| vec![0.0; m]);
                if intercepts.len() != m {
                    return Err(invalid("intercepts", format!("expected {m} entries, got {}", intercepts.len())));
                }
                let (theta, theta_path) = match (uniquenesses, unique_covariance) {
                    (Some(_), Some(_)) => {
                        return Err(invalid("unique_covariance", "give either uniquenesses or unique_covariance"))
                    }
                    (None, None) => return Err(invalid("uniquenesses", "missing unique variances")),
                    (Some(u), None) => {
                        if u.len() != m {
                            return Err(invalid("uniquenesses", format!("expected {m} entries, got {}", u.len())));
                        }
                        (DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(u)), "uniquenesses")
                    }
                    (None, Some(rows)) => {
                        if rows.len() != m {
                            return Err(invalid("unique_covariance", format!("expected {m} rows, got {}", rows.len())));
                        }
                        (square(rows, "unique_covariance")?, "unique_covariance")
                    }
                };
                let latent = build_latent(latent.as_ref(), d)?;
                let lambda = DMatrix::from_row_iterator(m, d, rows.iter().flatten().copied());
                LinearFactorModel::new(intercepts, lambda, theta, latent)
                    .map(Into::into)
                    .map_err(|e| invalid(theta_path, e))
            }
            ModelConfig::TwoPl { intercepts, slopes, latent } => {
                let rows = slopes.rows();
                let m = intercepts.len();
                let d = slopes.width().or(latent_width(latent.as_ref())).unwrap_or(1);
                if rows.len() != m {
                    return Err(invalid("slopes", format!("expected {m} rows, got {}", rows.len())));
                }
                if let Some(i) = rows.iter().position(|r| r.len() != d) {
                    return Err(invalid(format!("slopes[{i}]"), format!("expected {d} entries, got {}", rows[i].len())));
                }
                if let Some(j) = intercepts.iter().position(|v| !v.is_finite()) {
                    return Err(invalid(format!("intercepts[{j}]"), "must be finite"));
                }
                let latent = build_latent(latent.as_ref(), d)?;
                let beta = DMatrix::from_row_iterator(m, d, rows.iter().flatten().copied());
                TwoPlModel::new(intercepts.clone(), beta, latent).map(Into::into).map_err(|e| invalid("slopes", e))
            }
            ModelConfig::Graded { items, latent } => {
                let d = items.first().map(|i| i.slopes.len()).or(latent_width(latent.as_ref())).unwrap_or(1);
                let latent = build_latent(latent.as_ref(), d)?;
                let items = items
                    .iter()
                    .enumerate()
                    .map(|(j, it)| {
                        if it.slopes.len() != d {
                            return Err(invalid(
                                format!("items[{j}].slopes"),
                                format!("expected {d} entries, got {}", it.slopes.len()),
                            ));
                        }
                        GradedItem::new(it.slopes.clone(), it.thresholds.clone())
                            .map_err(|e| invalid(format!("items[{j}].thresholds"), e))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                GradedModel::new(items, latent).map(Into::into).map_err(|e| invalid("items", e))
            }
            ModelConfig::Hurdle { pairs, latent } => {
                let latent = build_latent(latent.as_ref(), 2)?;
                let pairs = pairs
                    .iter()
                    .enumerate()
                    .map(|(j, p)| {
                        HurdlePair::new(p.presence_slope, p.presence_threshold, p.frequency_slope, p.frequency_thresholds)
                            .map_err(|e| invalid(format!("pairs[{j}]"), e))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                HurdleIrtreeModel::new(pairs, latent).map(Into::into).map_err(|e| invalid("latent", e))
            }
        }
    }

    /// The configuration that reproduces `spec`.
    pub fn from_spec(spec: &ModelSpec) -> Self {
        let l = spec.latent();
        let latent = Some(LatentConfig {
            dimension: Some(l.dimension()),
            mean: Some(l.mean().iter().copied().collect()),
            covariance: Some(l.covariance().row_iter().map(|r| r.iter().copied().collect()).collect()),
        });
        match spec {
            ModelSpec::LinearFactor(m) => {
                let theta = m.unique_covariance();
                let diagonal = theta.iter().enumerate().all(|(k, v)| k % (theta.nrows() + 1) == 0 || *v == 0.0);
                ModelConfig::LinearFactor {
                    intercepts: Some(m.intercepts().iter().copied().collect()),
                    loadings: Matrix::from_dmatrix(m.loadings()),
                    uniquenesses: diagonal.then(|| theta.diagonal().iter().copied().collect()),
                    unique_covariance: (!diagonal)
                        .then(|| theta.row_iter().map(|r| r.iter().copied().collect()).collect()),
                    latent,
                }
            }
            ModelSpec::TwoPl(m) => ModelConfig::TwoPl {
                intercepts: m.intercepts().to_vec(),
                slopes: Matrix::from_dmatrix(m.slopes()),
                latent,
            },
            ModelSpec::Graded(m) => ModelConfig::Graded {
                items: m
                    .items()
                    .iter()
                    .map(|i| GradedItemConfig { slopes: i.slopes().to_vec(), thresholds: i.thresholds().to_vec() })
                    .collect(),
                latent,
            },
            ModelSpec::Hurdle(m) => ModelConfig::Hurdle {
                pairs: m
                    .pairs()
                    .iter()
                    .map(|p| HurdlePairConfig {
                        presence_slope: p.presence.slopes()[0],
                        presence_threshold: p.presence.thresholds()[0],
                        frequency_slope: p.frequency.slopes()[1],
                        frequency_thresholds: [p.frequency.thresholds()[0], p.frequency.thresholds()[1]],
                    })
                    .collect(),
                latent,
            },
        }
    }
}

/// Parses a model from JSON text.
pub fn parse_model(text: &str) -> Result<ModelSpec, CliError> {
    let cfg: ModelConfig = serde_json::from_str(text)
        .map_err(|e| CliError::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
    cfg.to_spec()
}

/// Reads and validates a model file.
pub fn load_model_config(path: &Path) -> Result<ModelSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read model file {}: {e}", path.display())))?;
    parse_model(&text)
}

/// Pretty-printed JSON for `spec`.
pub fn to_json(spec: &ModelSpec) -> String {
    serde_json::to_string_pretty(&ModelConfig::from_spec(spec)).expect("configs serialize")
}
