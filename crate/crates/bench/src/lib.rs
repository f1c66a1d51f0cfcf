//! Inputs shared by the benchmarks.

use precision_core::{McSample, ModelSpec};

/// Latent draws stored row-major together with a simulated sample.
pub fn sample_with_latents(model: &ModelSpec, n: usize, seed: u64) -> (McSample, Vec<f64>) {
    let sample = McSample::generate(model, n, seed).expect("example models simulate");
    let eta = sample.latents.rows().flatten().copied().collect();
    (sample, eta)
}
