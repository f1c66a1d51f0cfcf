//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test -p precision-core --test acceptance`

mod common;

use std::time::{Duration, Instant};

use common::*;
use precision_core::analytic_irt::{standard_coefficients, variance_decomposition, StandardCoefficients};
use precision_core::analytic_linear::{
    coefficient_alpha, linear_eap_weights, prmse_linear, reliability_linear_score, reliability_summed_factor,
};
use precision_core::fixtures;
use precision_core::quadrature::{eap_score, marginal_probability};
use precision_core::regression::CoMoments;
use precision_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ETA: LatentScore = LatentScore::Component(0);
const N: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    /// Reported but not counted as a failure.
    Flag,
    Fail,
}

impl From<bool> for Status {
    fn from(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

fn run<S: Into<Status>>(id: &'static str, f: impl FnOnce() -> (S, String)) -> (&'static str, Status) {
    let start = Instant::now();
    let (status, detail) = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
        Ok((s, d)) => (s.into(), d),
        Err(e) => (Status::Fail, format!("panicked: {}", e.downcast_ref::<String>().cloned().unwrap_or_default())),
    };
    let tag = match status {
        Status::Pass => "PASS",
        Status::Flag => "FLAG",
        Status::Fail => "FAIL",
    };
    println!("{tag} criterion {id}: {detail} [{:.1} s]", start.elapsed().as_secs_f64());
    (id, status)
}

fn within_time(ok: bool, elapsed: Duration, limit: Duration) -> bool {
    ok && elapsed <= limit
}

fn grid_for(model: &ModelSpec) -> QuadratureGrid {
    GridConfig::default().build(model.latent()).unwrap()
}

fn analytic(model: &ModelSpec) -> StandardCoefficients {
    analytic_coefficients(model, &GridConfig::default(), DEFAULT_PATTERN_CAP).unwrap()
}

fn pattern_table() -> (bool, String) {
    let start = Instant::now();
    let model = fixtures::two_pl_example();
    let grid = grid_for(&model);
    let mut worst: f64 = 0.0;
    for (pattern, prob, eap) in REFERENCE_PATTERNS {
        let y = ResponsePattern::from_codes(&pattern);
        worst = worst.max((marginal_probability(&model, &y, &grid).unwrap() - prob).abs());
        worst = worst.max((eap_score(&model, &y, ETA, &grid).unwrap() - eap).abs());
    }
    let ok = within_time(worst <= 0.005, start.elapsed(), Duration::from_secs(1));
    (ok, format!("pattern table max deviation {worst:.4} (tol .005)"))
}

fn analytic_reliability() -> (bool, String) {
    let start = Instant::now();
    let lin = analytic(&fixtures::one_factor_example());
    let irt = analytic(&fixtures::two_pl_example());
    let got = [lin.reliability_eap, lin.reliability_summed, irt.reliability_eap, irt.reliability_summed];
    let want = [0.5821, 0.5090, 0.5146, 0.4951];
    let worst = got.iter().zip(want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
    let ok = within_time(worst <= 0.0005, start.elapsed(), Duration::from_secs(1));
    (ok, format!("reliability {got:.4?} vs {want:?}, max deviation {worst:.5} (tol .0005)"))
}

fn analytic_prmse() -> (bool, String) {
    let start = Instant::now();
    let lin = analytic(&fixtures::one_factor_example());
    let model = fixtures::two_pl_example();
    let irt = analytic(&model);
    let got = [lin.prmse_lv, lin.prmse_true_summed, irt.prmse_lv, irt.prmse_true_summed];
    let want = [0.5821, 0.5821, 0.4960, 0.5150];
    let worst = got.iter().zip(want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
    let v = variance_decomposition(&model, LatentScore::TrueSummed, &grid_for(&model), DEFAULT_PATTERN_CAP).unwrap();
    let var_ok = (v.total - 0.46).abs() <= 0.005 && (v.explained - 0.24).abs() <= 0.005;
    let ok = within_time(worst <= 0.0005 && var_ok, start.elapsed(), Duration::from_secs(1));
    (
        ok,
        format!(
            "PRMSE {got:.4?} vs {want:?}, max deviation {worst:.5}; Var(tau_s) {:.4}, Var(EAP tau_s) {:.4}",
            v.total, v.explained
        ),
    )
}

/// Estimates of the eight coefficients for one sample, regressing directly
/// (on the latents or the responses) and via the true or EAP score.
struct McPair {
    direct: [f64; 8],
    via_score: [f64; 8],
}

const MC_SCORES: [ScoreDefinition; 4] = [
    ScoreDefinition::Eap(ETA),
    ScoreDefinition::Summed,
    ScoreDefinition::Latent(ETA),
    ScoreDefinition::Latent(LatentScore::TrueSummed),
];

fn mc_pair(run: &McRun) -> ([f64; 4], [f64; 4]) {
    let mut direct = [0.0; 4];
    let mut via = [0.0; 4];
    for (k, score) in MC_SCORES.into_iter().enumerate() {
        if score.is_observed() {
            direct[k] = run.reliability_with(score, McMethod::Nonparametric).unwrap().value;
            via[k] = run.reliability_with(score, McMethod::SimpleLinear).unwrap().value;
        } else {
            direct[k] = run.prmse_with(score, McMethod::Nonparametric).unwrap().value;
            via[k] = run.prmse_with(score, McMethod::SimpleLinear).unwrap().value;
        }
    }
    (direct, via)
}

fn mc_agreement(seeds: &[u64]) -> (bool, String) {
    let start = Instant::now();
    let models = [fixtures::one_factor_example(), fixtures::two_pl_example()];
    let analytic_values: Vec<f64> = models.iter().flat_map(|m| analytic(m).as_array()).collect();
    let mut sum = McPair { direct: [0.0; 8], via_score: [0.0; 8] };
    let mut worst_gap = 0.0f64;
    for &seed in seeds {
        for (i, model) in models.iter().enumerate() {
            let run = McRun::new(model, &McConfig::with_n(N, seed)).unwrap();
            let (a, b) = mc_pair(&run);
            for k in 0..4 {
                sum.direct[4 * i + k] += a[k];
                sum.via_score[4 * i + k] += b[k];
                worst_gap = worst_gap.max((a[k] - b[k]).abs());
            }
        }
    }
    let s = seeds.len() as f64;
    let mean_direct: Vec<f64> = sum.direct.iter().map(|v| v / s).collect();
    let mean_via: Vec<f64> = sum.via_score.iter().map(|v| v / s).collect();
    let worst_a = mean_direct
        .iter()
        .chain(&mean_via)
        .zip(analytic_values.iter().chain(&analytic_values))
        .map(|(m, a)| (m - a).abs())
        .fold(0.0, f64::max);
    let worst_mean_gap = mean_direct.iter().zip(&mean_via).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ok = within_time(worst_a <= 0.005 && worst_mean_gap <= 0.002, start.elapsed(), Duration::from_secs(120));
    (
        ok,
        format!(
            "seed-averaged MC {mean_direct:.4?}; max |MC - analytic| {worst_a:.4} (tol .005); \
             max |direct - via score| {worst_mean_gap:.4} averaged, {worst_gap:.4} single seed (tol .002)"
        ),
    )
}

fn equivalence_theorem() -> (Status, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_linear = 0.0f64;
    for _ in 0..50 {
        let m = rng.gen_range(3..=8);
        let l: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..0.9)).collect();
        let theta: Vec<f64> = l.iter().map(|v| 1.0 - v * v).collect();
        let model = LinearFactorModel::one_factor(&vec![0.0; m], &l, &theta, 1.0).unwrap();
        let w = linear_eap_weights(&model, ETA).unwrap();
        let rel = reliability_linear_score(&model, &w.weights).unwrap();
        worst_linear = worst_linear.max((rel - prmse_linear(&model, ETA).unwrap()).abs());
    }
    let mut separated = 0;
    for _ in 0..50 {
        let m = rng.gen_range(2..=6);
        let a: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.gen_range(0.3..2.5)).collect();
        let spec: ModelSpec = TwoPlModel::unidimensional(&a, &b).unwrap().into();
        let c = standard_coefficients(&spec, &grid_for(&spec), DEFAULT_PATTERN_CAP).unwrap();
        if (c.reliability_eap - c.prmse_lv).abs() > 1e-4 {
            separated += 1;
        }
    }
    let status = match (worst_linear <= 1e-12, separated >= 45) {
        (false, _) => Status::Fail,
        (true, true) => Status::Pass,
        (true, false) => Status::Flag,
    };
    (
        status,
        format!("linear max |Rel - PRMSE| {worst_linear:.1e} (tol 1e-12); 2PL separated in {separated}/50 (want >= 45)"),
    )
}

fn error_scores(seed: u64) -> (bool, String) {
    let models = [fixtures::one_factor_example(), fixtures::two_pl_example()];
    let mut worst_mean = 0.0f64;
    let mut worst_corr = 0.0f64;
    for model in &models {
        let run = McRun::new(model, &McConfig::with_n(N, seed)).unwrap();
        for score in [ScoreDefinition::Summed, ScoreDefinition::Eap(ETA)] {
            let x = run.observed_scores(score).unwrap();
            let tau = run.true_scores(score).unwrap();
            let err: Vec<f64> = x.iter().zip(tau.iter()).map(|(a, b)| a - b).collect();
            let co = CoMoments::of(&tau, &err);
            let sd_x = precision_core::regression::Moments::of(&x).variance().sqrt();
            worst_mean = worst_mean.max(co.mean_y.abs() / sd_x);
            worst_corr = worst_corr.max(co.correlation().abs());
        }
    }
    (
        worst_mean <= 0.005 && worst_corr <= 0.005,
        format!("max |mean err|/sd(x) {worst_mean:.4}, max |corr(err, tau)| {worst_corr:.4} (tol .005)"),
    )
}

fn lower_bound() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let m = rng.gen_range(2..=10);
        let l: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.5)).collect();
        let theta: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..2.0)).collect();
        let psi = rng.gen_range(0.5..2.0);
        let model = LinearFactorModel::one_factor(&vec![0.0; m], &l, &theta, psi).unwrap();
        let alpha = coefficient_alpha(&model.implied_covariance()).unwrap();
        let omega = reliability_summed_factor(&model).unwrap();
        // the oracle agrees on both coefficients
        let oracle = OneFactorOracle::new(&l, &theta, psi);
        assert!((alpha - oracle.alpha).abs() < 1e-12 && (omega - oracle.omega).abs() < 1e-12);
        worst = worst.max(alpha - omega);
    }
    (worst <= 1e-12, format!("max (alpha - omega) over 100 models {worst:.2e} (tol 1e-12)"))
}

fn hurdle_surrogate() -> (bool, String) {
    let start = Instant::now();
    let model = fixtures::mhgrm_example();
    let scores = [
        ScoreDefinition::Eap(LatentScore::Component(0)),
        ScoreDefinition::Eap(LatentScore::Component(1)),
        ScoreDefinition::Latent(LatentScore::Component(0)),
        ScoreDefinition::Latent(LatentScore::Component(1)),
    ];
    let cfg = McConfig::with_n(N, 11);
    let run = McRun::new(&model, &cfg).unwrap();
    let reports: Vec<PrecisionReport> = scores.iter().map(|&s| run.estimate(s).unwrap()).collect();
    let values: Vec<f64> = reports.iter().map(|r| r.value).collect();
    let in_unit = values.iter().all(|v| *v > 0.0 && *v < 1.0);
    let fallback = reports[2..].iter().all(|r| r.method == ReportMethod::McSimpleLinear);
    let direct = run.reliability_with(ScoreDefinition::Summed, McMethod::Nonparametric).unwrap().value;
    let via = run.reliability_with(ScoreDefinition::Summed, McMethod::SimpleLinear).unwrap().value;
    let small = McConfig::with_n(100_000, 12);
    let first: Vec<PrecisionReport> = scores.iter().map(|&s| McRun::new(&model, &small).unwrap().estimate(s).unwrap()).collect();
    let second: Vec<PrecisionReport> = scores.iter().map(|&s| McRun::new(&model, &small).unwrap().estimate(s).unwrap()).collect();
    let deterministic = first == second;
    let ok = within_time(
        in_unit && fallback && deterministic && (direct - via).abs() <= 0.01,
        start.elapsed(),
        Duration::from_secs(300),
    );
    (
        ok,
        format!(
            "Rel(EAP eta1, EAP eta2), PRMSE(eta1, eta2) = {values:.4?}; EAP-regressor fallback {fallback}; \
             deterministic {deterministic}; summed score direct {direct:.4} vs via true score {via:.4} (tol .01)"
        ),
    )
}

fn brute_force_prmse() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut hits = 0;
    let mut worst = 0.0f64;
    for k in 0..20 {
        let m = rng.gen_range(1..=4);
        let a: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.gen_range(0.3..2.5)).collect();
        let spec: ModelSpec = TwoPlModel::unidimensional(&a, &b).unwrap().into();
        let exact = BinaryOracle::new(&a, &b).prmse_eta;
        let run = McRun::new(&spec, &McConfig::with_n(N, 100 + k)).unwrap();
        let report = run.prmse_with(ScoreDefinition::Latent(ETA), McMethod::Nonparametric).unwrap();
        let diff = (report.value - exact).abs();
        worst = worst.max(diff);
        if diff <= 0.005 {
            hits += 1;
        }
    }
    (hits == 20, format!("{hits}/20 within .005 of the exact pattern-sum PRMSE; max deviation {worst:.4}"))
}

fn main() {
    let outcomes = vec![
        run("1", pattern_table),
        run("2", analytic_reliability),
        run("3", analytic_prmse),
        run("4", || mc_agreement(&[1, 2, 3, 4, 5])),
        run("5", equivalence_theorem),
        run("6", || error_scores(21)),
        run("7", lower_bound),
        run("8", hurdle_surrogate),
        run("9", brute_force_prmse),
    ];
    let failed: Vec<&str> = outcomes.iter().filter(|o| o.1 == Status::Fail).map(|o| o.0).collect();
    let flagged = outcomes.iter().filter(|o| o.1 == Status::Flag).count();
    println!("{} criteria, {} failed, {} flagged", outcomes.len(), failed.len(), flagged);
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
