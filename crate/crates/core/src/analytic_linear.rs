//! Closed-form reliability and PRMSE for the linear factor model.
//!
//! The one-factor formulas take `Θ⁻¹` directly. For `d > 1` the EAP weights
//! use `ΨΛ'Σ⁻¹` with `Σ = ΛΨΛ' + Θ`, and the reliability of any linear
//! score `w'y` is the variance ratio `w'ΛΨΛ'w / w'Σw`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{LatentScore, LinearFactorModel};

/// Largest condition number accepted when inverting `Θ` or `Σ`.
pub const MAX_CONDITION: f64 = 1e12;

/// Linear observed score `weights'y + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScoreWeights {
    pub weights: Vec<f64>,
    pub offset: f64,
}

impl LinearScoreWeights {
    pub fn apply(&self, y: &[f64]) -> f64 {
        self.offset + self.weights.iter().zip(y).map(|(w, v)| w * v).sum::<f64>()
    }
}

fn require_one_factor(model: &LinearFactorModel) -> Result<()> {
    if model.latent().dimension() != 1 {
        return Err(Error::Unsupported(format!(
            "one-factor formula called on a {}-factor model",
            model.latent().dimension()
        )));
    }
    Ok(())
}

fn theta_inverse(model: &LinearFactorModel) -> Result<DMatrix<f64>> {
    linalg::spd_inverse(model.unique_covariance(), MAX_CONDITION).ok_or(Error::SingularTheta)
}

/// `λ'Θ⁻¹λ`, the test information of the one-factor model.
fn information(model: &LinearFactorModel) -> Result<(f64, DVector<f64>)> {
    require_one_factor(model)?;
    let inv = theta_inverse(model)?;
    let lambda = model.loadings().column(0).into_owned();
    let row = inv * &lambda; // Θ⁻¹λ (Θ symmetric)
    Ok((lambda.dot(&row), row))
}

/// Regression (EAP) factor score weights `λ'Θ⁻¹ / (λ'Θ⁻¹λ + ψ⁻¹)`.
pub fn regression_score_weights(model: &LinearFactorModel) -> Result<LinearScoreWeights> {
    let (info, row) = information(model)?;
    let psi = model.latent().variance(0);
    let denom = info + 1.0 / psi;
    let weights: Vec<f64> = row.iter().map(|v| v / denom).collect();
    let mu = model.latent().mean()[0];
    let lambda = model.loadings().column(0);
    let shrink: f64 = weights.iter().zip(lambda.iter()).map(|(w, l)| w * l).sum();
    let offset = mu * (1.0 - shrink)
        - weights.iter().zip(model.intercepts().iter()).map(|(w, n)| w * n).sum::<f64>();
    Ok(LinearScoreWeights { weights, offset })
}

fn information_ratio(model: &LinearFactorModel) -> Result<f64> {
    let (info, _) = information(model)?;
    let psi = model.latent().variance(0);
    Ok(info / (info + 1.0 / psi))
}

/// Reliability of the regression factor score, `λ'Θ⁻¹λ / (λ'Θ⁻¹λ + ψ⁻¹)`.
pub fn reliability_eap_factor(model: &LinearFactorModel) -> Result<f64> {
    information_ratio(model)
}

/// Slope of the true regression factor score in `η`; the same expression as
/// the reliability.
pub fn true_eap_slope(model: &LinearFactorModel) -> Result<f64> {
    information_ratio(model)
}

/// PRMSE of the factor; coincides with [`reliability_eap_factor`].
pub fn prmse_lv_factor(model: &LinearFactorModel) -> Result<f64> {
    information_ratio(model)
}

/// True-score and error variance of the summed score: `(ψ(1'λ)², 1'Θ1)`.
pub fn summed_score_variance(model: &LinearFactorModel) -> Result<(f64, f64)> {
    require_one_factor(model)?;
    let psi = model.latent().variance(0);
    let sum_lambda: f64 = model.loadings().column(0).sum();
    Ok((psi * sum_lambda * sum_lambda, model.unique_covariance().sum()))
}

/// Coefficient omega: `ψ(1'λ)² / [ψ(1'λ)² + 1'Θ1]` (with diagonal `Θ`
/// the error term is `tr(Θ)`).
pub fn reliability_summed_factor(model: &LinearFactorModel) -> Result<f64> {
    let (true_var, error_var) = summed_score_variance(model)?;
    let total = true_var + error_var;
    if !(total > 0.0) {
        return Err(Error::DegenerateSum);
    }
    Ok(true_var / total)
}

/// Cronbach's alpha from a covariance matrix of the manifest variables.
pub fn coefficient_alpha(covariance: &DMatrix<f64>) -> Result<f64> {
    let m = covariance.nrows();
    if m < 2 {
        return Err(Error::ShapeMismatch(format!("alpha needs at least 2 variables, got {m}")));
    }
    linalg::check_psd(covariance, "covariance")?;
    let total = covariance.sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateSum);
    }
    let k = m as f64;
    Ok(k / (k - 1.0) * (1.0 - covariance.trace() / total))
}

/// EAP of the true summed score from the factor's EAP: `1'(ν + λη̃)`.
pub fn eap_of_true_summed_factor(model: &LinearFactorModel, eta_tilde: f64) -> Result<f64> {
    require_one_factor(model)?;
    Ok(model.intercepts().sum() + model.loadings().column(0).sum() * eta_tilde)
}

fn implied_inverse(model: &LinearFactorModel) -> Result<DMatrix<f64>> {
    linalg::spd_inverse(&model.implied_covariance(), MAX_CONDITION).ok_or(Error::SingularTheta)
}

/// Coefficients `c` with `ξ = c0 + c'η` for a latent score.
fn latent_score_coefficients(model: &LinearFactorModel, target: LatentScore) -> Result<(f64, DVector<f64>)> {
    let d = model.latent().dimension();
    match target {
        LatentScore::Component(t) if t < d => {
            let mut c = DVector::zeros(d);
            c[t] = 1.0;
            Ok((0.0, c))
        }
        LatentScore::Component(t) => Err(Error::ScoreKind(format!("latent component {t} out of range"))),
        LatentScore::TrueSummed => {
            let ones = DVector::from_element(model.n_items(), 1.0);
            Ok((model.intercepts().sum(), model.loadings().transpose() * ones))
        }
    }
}

/// EAP weights `E(ξ | y) = weights'y + offset` for any latent score of a
/// linear factor model of any dimension.
pub fn linear_eap_weights(model: &LinearFactorModel, target: LatentScore) -> Result<LinearScoreWeights> {
    let (c0, c) = latent_score_coefficients(model, target)?;
    let sigma_inv = implied_inverse(model)?;
    // E(η | y) = μ + K (y - ν - Λμ), K = ΨΛ'Σ⁻¹
    let gain = model.latent().covariance() * model.loadings().transpose() * sigma_inv;
    let w = gain.transpose() * &c;
    let mu = model.latent().mean();
    let centre = model.intercepts() + model.loadings() * mu;
    let offset = c0 + c.dot(mu) - w.dot(&centre);
    Ok(LinearScoreWeights { weights: w.iter().cloned().collect(), offset })
}

/// Reliability of an arbitrary linear score `w'y`: `w'ΛΨΛ'w / w'Σw`.
pub fn reliability_linear_score(model: &LinearFactorModel, weights: &[f64]) -> Result<f64> {
    if weights.len() != model.n_items() {
        return Err(Error::ShapeMismatch(format!(
            "{} weights for {} items",
            weights.len(),
            model.n_items()
        )));
    }
    let w = DVector::from_column_slice(weights);
    let common = model.loadings() * model.latent().covariance() * model.loadings().transpose();
    let true_var = w.dot(&(&common * &w));
    let total = w.dot(&(model.implied_covariance() * &w));
    if !(total > 0.0) {
        return Err(Error::DegenerateSum);
    }
    Ok(true_var / total)
}

/// PRMSE of a latent score: `Var(ξ̃) / Var(ξ)`.
pub fn prmse_linear(model: &LinearFactorModel, target: LatentScore) -> Result<f64> {
    let (_, c) = latent_score_coefficients(model, target)?;
    let var_latent = c.dot(&(model.latent().covariance() * &c));
    if !(var_latent > 0.0) {
        return Err(Error::DegenerateOutcome);
    }
    let w = DVector::from_vec(linear_eap_weights(model, target)?.weights);
    let var_eap = w.dot(&(model.implied_covariance() * &w));
    Ok(var_eap / var_latent)
}
