//! Independent reference computations for unidimensional binary models and
//! the one-factor model, written without the library's quadrature code.

#![allow(dead_code)]

/// Composite Simpson nodes and weights for a standard normal on [-10, 10].
pub fn simpson_normal(intervals: usize) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = (-10.0, 10.0);
    let h = (b - a) / intervals as f64;
    let mut x = Vec::with_capacity(intervals + 1);
    let mut w = Vec::with_capacity(intervals + 1);
    for i in 0..=intervals {
        let xi = a + h * i as f64;
        let c = if i == 0 || i == intervals { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        x.push(xi);
        w.push(c * h / 3.0 * (-0.5 * xi * xi).exp() / (2.0 * std::f64::consts::PI).sqrt());
    }
    (x, w)
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Exact pattern-level quantities of a unidimensional 2PL with
/// `P(y_j = 1 | η) = logistic(α_j + β_j η)` and `η ~ N(0, 1)`.
pub struct BinaryOracle {
    /// Patterns in lexicographic order, first item most significant.
    pub patterns: Vec<Vec<u8>>,
    pub probs: Vec<f64>,
    pub eap_eta: Vec<f64>,
    pub eap_true_sum: Vec<f64>,
    pub reliability_eap: f64,
    pub reliability_sum: f64,
    pub prmse_eta: f64,
    pub prmse_true_sum: f64,
    pub var_true_sum: f64,
    pub var_eap_true_sum: f64,
}

fn variance(values: &[f64], weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    let mean: f64 = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
    values.iter().zip(weights).map(|(v, w)| w * (v - mean).powi(2)).sum::<f64>() / total
}

impl BinaryOracle {
    pub fn new(intercepts: &[f64], slopes: &[f64]) -> Self {
        let m = intercepts.len();
        let (x, w) = simpson_normal(4000);
        let p1: Vec<Vec<f64>> =
            x.iter().map(|&e| (0..m).map(|j| logistic(intercepts[j] + slopes[j] * e)).collect()).collect();
        let true_sum: Vec<f64> = p1.iter().map(|p| p.iter().sum()).collect();
        let patterns: Vec<Vec<u8>> =
            (0..1usize << m).map(|code| (0..m).map(|j| ((code >> (m - 1 - j)) & 1) as u8).collect()).collect();
        let mut probs = Vec::new();
        let mut eap_eta = Vec::new();
        let mut eap_true_sum = Vec::new();
        let mut like_by_pattern = Vec::new();
        for y in &patterns {
            let like: Vec<f64> = p1
                .iter()
                .map(|p| y.iter().zip(p).map(|(&v, &q)| if v == 1 { q } else { 1.0 - q }).product())
                .collect();
            let marginal: f64 = like.iter().zip(&w).map(|(l, wi)| l * wi).sum();
            probs.push(marginal);
            eap_eta.push(like.iter().zip(&w).zip(&x).map(|((l, wi), e)| l * wi * e).sum::<f64>() / marginal);
            eap_true_sum
                .push(like.iter().zip(&w).zip(&true_sum).map(|((l, wi), t)| l * wi * t).sum::<f64>() / marginal);
            like_by_pattern.push(like);
        }
        let sums: Vec<f64> = patterns.iter().map(|y| y.iter().map(|&v| f64::from(v)).sum()).collect();
        let true_score = |score: &[f64]| -> Vec<f64> {
            (0..x.len()).map(|i| (0..patterns.len()).map(|k| score[k] * like_by_pattern[k][i]).sum()).collect()
        };
        let eta_var = variance(&x, &w);
        let var_true_sum = variance(&true_sum, &w);
        let var_eap_true_sum = variance(&eap_true_sum, &probs);
        Self {
            reliability_eap: variance(&true_score(&eap_eta), &w) / variance(&eap_eta, &probs),
            reliability_sum: variance(&true_score(&sums), &w) / variance(&sums, &probs),
            prmse_eta: variance(&eap_eta, &probs) / eta_var,
            prmse_true_sum: var_eap_true_sum / var_true_sum,
            var_true_sum,
            var_eap_true_sum,
            patterns,
            probs,
            eap_eta,
            eap_true_sum,
        }
    }
}

/// Closed forms for a one-factor model with diagonal uniquenesses.
pub struct OneFactorOracle {
    pub reliability_eap: f64,
    pub omega: f64,
    pub alpha: f64,
}

impl OneFactorOracle {
    pub fn new(loadings: &[f64], uniquenesses: &[f64], psi: f64) -> Self {
        let info: f64 = loadings.iter().zip(uniquenesses).map(|(l, t)| l * l / t).sum();
        let sum_l: f64 = loadings.iter().sum();
        let sum_t: f64 = uniquenesses.iter().sum();
        let true_var = psi * sum_l * sum_l;
        let m = loadings.len() as f64;
        // Σ_ij = ψ λ_i λ_j + δ_ij θ_i
        let trace: f64 = loadings.iter().zip(uniquenesses).map(|(l, t)| psi * l * l + t).sum();
        let total = true_var + sum_t;
        Self {
            reliability_eap: info / (info + 1.0 / psi),
            omega: true_var / total,
            alpha: m / (m - 1.0) * (1.0 - trace / total),
        }
    }
}

/// Reference values of the 2PL example, rounded to 2 decimals:
/// (pattern, probability, EAP).
pub const REFERENCE_PATTERNS: [([u8; 3], f64, f64); 8] = [
    ([0, 0, 0], 0.19, -0.96),
    ([1, 0, 0], 0.26, -0.41),
    ([0, 1, 0], 0.08, -0.16),
    ([0, 0, 1], 0.01, 0.08),
    ([1, 1, 0], 0.24, 0.31),
    ([1, 0, 1], 0.04, 0.54),
    ([0, 1, 1], 0.02, 0.76),
    ([1, 1, 1], 0.15, 1.22),
];

pub const TWO_PL_INTERCEPTS: [f64; 3] = [1.0, 0.0, -2.0];
pub const TWO_PL_SLOPES: [f64; 3] = [1.0, 1.5, 2.0];
pub const ONE_FACTOR_LOADINGS: [f64; 3] = [0.3, 0.5, 0.7];
pub const ONE_FACTOR_UNIQUENESSES: [f64; 3] = [0.91, 0.75, 0.51];
