//! Example models used by tests, benchmarks and the command-line fixtures.

use crate::model::{HurdleIrtreeModel, HurdlePair, LatentDistribution, LinearFactorModel, ModelSpec, TwoPlModel};

/// One factor, three indicators, standardized: `λ = (.3, .5, .7)`,
/// `Θ = diag(.91, .75, .51)`, `ψ = 1`.
pub fn one_factor_example() -> ModelSpec {
    LinearFactorModel::one_factor(&[0.0; 3], &[0.3, 0.5, 0.7], &[0.91, 0.75, 0.51], 1.0)
        .expect("valid example")
        .into()
}

/// Three-item 2PL with intercepts `(1, 0, −2)` and slopes `(1, 1.5, 2)`.
pub fn two_pl_example() -> ModelSpec {
    TwoPlModel::unidimensional(&[1.0, 0.0, -2.0], &[1.0, 1.5, 2.0]).expect("valid example").into()
}

/// Latent correlation of the synthetic hurdle model.
pub const MHGRM_RHO: f64 = 0.58;

/// Per-symptom parameters of the synthetic hurdle model: presence slope,
/// presence threshold, frequency slope, frequency thresholds.
///
/// Chosen by hand to look like a symptom checklist (presence rates between
/// roughly 15% and 60%, moderately discriminating frequency stages); they
/// are not estimates from any data set.
pub const MHGRM_PAIRS: [(f64, f64, f64, [f64; 2]); 14] = [
    (2.2, 0.4, 1.6, [-0.6, 0.9]),
    (1.9, 0.1, 1.4, [-0.8, 0.7]),
    (2.5, 0.9, 1.8, [-0.3, 1.2]),
    (1.6, -0.3, 1.2, [-1.0, 0.5]),
    (2.0, 0.6, 1.5, [-0.5, 1.0]),
    (1.4, -0.2, 1.1, [-0.9, 0.8]),
    (2.3, 1.2, 1.9, [-0.2, 1.4]),
    (1.8, 0.3, 1.3, [-0.7, 0.6]),
    (1.5, 0.0, 1.0, [-1.1, 0.4]),
    (2.1, 0.8, 1.7, [-0.4, 1.1]),
    (1.7, 0.5, 1.2, [-0.6, 0.9]),
    (2.4, 1.5, 2.0, [0.0, 1.5]),
    (1.3, -0.4, 0.9, [-1.2, 0.3]),
    (1.9, 0.7, 1.5, [-0.5, 1.0]),
];

/// Synthetic multidimensional hurdle graded response model: 14 symptom
/// pairs, susceptibility and severity correlated at `.58`.
pub fn mhgrm_example() -> ModelSpec {
    mhgrm_with_pairs(MHGRM_PAIRS.len())
}

/// The first `k` symptom pairs of [`mhgrm_example`].
pub fn mhgrm_with_pairs(k: usize) -> ModelSpec {
    let pairs = MHGRM_PAIRS[..k]
        .iter()
        .map(|&(a, c, b, t)| HurdlePair::new(a, c, b, t).expect("valid pair"))
        .collect();
    let latent = LatentDistribution::bivariate(MHGRM_RHO).expect("valid correlation");
    HurdleIrtreeModel::new(pairs, latent).expect("valid example").into()
}
