mod common;

use common::*;
use precision_core::analytic_irt::prmse_discrete;
use precision_core::fixtures;
use precision_core::regression::{fit_pattern_means, fit_simple_linear, fit_spline_surface, Moments};
use precision_core::simulation::Responses;
use precision_core::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const ETA: LatentScore = LatentScore::Component(0);
const N: usize = 1_000_000;

fn two_pl_run(seed: u64) -> McRun {
    McRun::new(&fixtures::two_pl_example(), &McConfig::with_n(N, seed)).unwrap()
}

#[test]
fn two_pl_monte_carlo_near_reference_estimates() {
    let run = two_pl_run(1);
    let oracle = BinaryOracle::new(&TWO_PL_INTERCEPTS, &TWO_PL_SLOPES);

    let sum = run.reliability(ScoreDefinition::Summed).unwrap();
    assert_eq!(sum.method, ReportMethod::McNonparametric);
    // reference MC .4942, analytic .4951
    assert!((sum.value - oracle.reliability_sum).abs() < 0.002, "{}", sum.value);
    assert!((sum.value - 0.4942).abs() < 0.002, "{}", sum.value);

    let Responses::Discrete(patterns) = &run.sample().responses else { unreachable!() };
    let eta = run.latent_scores(ETA).unwrap();
    let fit = fit_pattern_means(&eta, patterns).unwrap();
    assert_eq!(fit.parameters, 8);
    // reference MC .4953, analytic .4960
    assert!((fit.r_squared - 0.4953).abs() < 0.001 + 0.0007, "{}", fit.r_squared);
    assert!((fit.r_squared - oracle.prmse_eta).abs() < 0.002);

    let tau = run.prmse(ScoreDefinition::true_summed()).unwrap();
    // reference MC .5141, analytic .5150
    assert!((tau.value - oracle.prmse_true_sum).abs() < 0.002, "{}", tau.value);
}

#[test]
fn one_factor_monte_carlo() {
    let model = fixtures::one_factor_example();
    let run = McRun::new(&model, &McConfig::with_n(N, 2)).unwrap();
    let oracle = OneFactorOracle::new(&ONE_FACTOR_LOADINGS, &ONE_FACTOR_UNIQUENESSES, 1.0);

    let eap = run.observed_scores(ScoreDefinition::Eap(ETA)).unwrap();
    let eta = run.latent_scores(ETA).unwrap();
    let fit = fit_simple_linear(&eta, &eap).unwrap();
    assert!((fit.slope.unwrap() - 1.0).abs() < 0.01);
    assert!(fit.intercept.unwrap().abs() < 0.01);
    assert!((fit.r_squared - oracle.reliability_eap).abs() < 0.002, "{}", fit.r_squared);

    let rel = run.reliability(ScoreDefinition::Eap(ETA)).unwrap();
    assert!((rel.value - oracle.reliability_eap).abs() < 0.002);
    // spline and straight line agree when the truth is linear
    let line = run.reliability_with(ScoreDefinition::Eap(ETA), McMethod::SimpleLinear).unwrap();
    assert!((rel.value - line.value).abs() < 0.001);

    let omega = run.reliability(ScoreDefinition::Summed).unwrap();
    assert!((omega.value - oracle.omega).abs() < 0.002, "{}", omega.value);

    let on_y = run.prmse_with(ScoreDefinition::Latent(ETA), McMethod::Nonparametric).unwrap();
    let on_eap = run.prmse_with(ScoreDefinition::Latent(ETA), McMethod::SimpleLinear).unwrap();
    assert!((on_y.value - on_eap.value).abs() < 1e-4);
    // Rel(EAP) and PRMSE(η) coincide for the linear model
    assert!((rel.value - on_eap.value).abs() < 0.002);
}

#[test]
fn two_pl_reliability_and_prmse_stay_apart() {
    let run = two_pl_run(3);
    let rel = run.reliability(ScoreDefinition::Eap(ETA)).unwrap().value;
    let prmse = run.prmse(ScoreDefinition::Latent(ETA)).unwrap().value;
    assert!(rel - prmse > 0.01, "{rel} vs {prmse}");
}

#[test]
fn spline_recovers_sine_signal() {
    let n = 400_000;
    let sigma = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let eta: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let y: Vec<f64> = eta.iter().map(|e| e.sin() + sigma * rng.sample::<f64, _>(StandardNormal)).collect();
    // Var(sin η) = (1 − e^{−2}) / 2, checked against Simpson quadrature
    let closed = (1.0 - (-2.0f64).exp()) / 2.0;
    let (x, w) = simpson_normal(4000);
    let numeric: f64 = x.iter().zip(&w).map(|(e, wi)| wi * e.sin().powi(2)).sum();
    assert!((closed - numeric).abs() < 1e-10);
    let truth = closed / (closed + sigma * sigma);
    let (fit, _) = fit_spline_surface(&y, &eta, 1, 8).unwrap();
    assert!((fit.r_squared - truth).abs() < 0.01, "{} vs {truth}", fit.r_squared);
}

#[test]
fn shuffled_outcome_gives_same_r_squared() {
    let run = McRun::new(&fixtures::two_pl_example(), &McConfig::with_n(200_000, 8)).unwrap();
    let s = run.observed_scores(ScoreDefinition::Summed).unwrap();
    let eap = run.observed_scores(ScoreDefinition::Eap(ETA)).unwrap();
    let a = fit_simple_linear(&s, &eap).unwrap();
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let s2: Vec<f64> = idx.iter().map(|&i| s[i]).collect();
    let e2: Vec<f64> = idx.iter().map(|&i| eap[i]).collect();
    let b = fit_simple_linear(&s2, &e2).unwrap();
    assert!((a.r_squared - b.r_squared).abs() < 1e-10);
    let m1 = Moments::of(&s);
    let m2 = Moments::of(&s2);
    assert!((m1.m2 - m2.m2).abs() < 1e-10 * m1.m2);
}

#[test]
fn convergence_against_analytic_value() {
    let model = fixtures::two_pl_example();
    let cfg = McConfig::with_n(N, 4);
    let table = convergence_diagnostic(&model, ScoreDefinition::Summed, &cfg, &[10_000, 100_000, N]).unwrap();
    assert!((table[2].r_squared - 0.4951).abs() < 0.002);
    for w in table.windows(2) {
        let ratio = w[0].half_width / w[1].half_width;
        let expected = (w[1].n as f64 / w[0].n as f64).sqrt();
        assert!(ratio > expected / 2.0 && ratio < expected * 2.0, "{ratio} vs {expected}");
    }
}

#[test]
fn half_width_matches_seed_to_seed_spread() {
    let model = fixtures::two_pl_example();
    let mut values = Vec::new();
    let mut widths = Vec::new();
    for seed in 0..20 {
        let r = estimate_reliability(&model, ScoreDefinition::Summed, &McConfig::with_n(1000, seed)).unwrap();
        values.push(r.value);
        widths.push(r.half_width.unwrap());
    }
    let spread = Moments::of(&values).variance().sqrt();
    let predicted = widths.iter().sum::<f64>() / widths.len() as f64 / 1.96;
    assert!(spread / predicted > 0.5 && spread / predicted < 1.5, "{spread} vs {predicted}");
    let large = estimate_reliability(&model, ScoreDefinition::Summed, &McConfig::with_n(N, 0)).unwrap();
    let ratio = widths[0] / large.half_width.unwrap();
    let expected = 1000f64.sqrt();
    assert!(ratio > 0.5 * expected && ratio < 1.5 * expected, "{ratio}");
}

#[test]
fn pattern_means_match_exact_prmse_for_small_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for k in 0..3 {
        let m = rng.gen_range(1..=4);
        let a: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.gen_range(0.3..2.5)).collect();
        let spec: ModelSpec = TwoPlModel::unidimensional(&a, &b).unwrap().into();
        let grid = GridConfig::default().build(spec.latent()).unwrap();
        let exact = prmse_discrete(&spec, ETA, &grid, DEFAULT_PATTERN_CAP).unwrap();
        let mc = estimate_prmse(&spec, ScoreDefinition::Latent(ETA), &McConfig::with_n(300_000, k)).unwrap();
        assert!((mc.value - exact).abs() < 0.005, "{} vs {exact}", mc.value);
    }
}

#[test]
fn hurdle_prmse_falls_back_to_eap_regressor() {
    let model = fixtures::mhgrm_example();
    let cfg = McConfig::with_n(20_000, 5);
    let run = McRun::new(&model, &cfg).unwrap();
    for t in 0..2 {
        let r = run.prmse(ScoreDefinition::lv_component(t)).unwrap();
        assert_eq!(r.method, ReportMethod::McSimpleLinear);
        assert!(r.value > 0.0 && r.value < 1.0);
    }
    assert!(matches!(
        run.reliability_with(ScoreDefinition::Eap(ETA), McMethod::SimpleLinear),
        Err(Error::PatternSpaceTooLarge { .. })
    ));
}

/// Within Mahalanobis distance 2.5 of the origin under the example's latent
/// correlation; the fit outside that ellipse is extrapolation.
fn supported(x: f64, y: f64) -> bool {
    let rho = fixtures::MHGRM_RHO;
    (x * x - 2.0 * rho * x * y + y * y) / (1.0 - rho * rho) <= 2.5 * 2.5
}

#[test]
fn hurdle_surface_is_monotone_in_both_latents() {
    let model = fixtures::mhgrm_example();
    let run = McRun::new(&model, &McConfig::with_n(200_000, 6)).unwrap();
    let (report, surface) = run.reliability_surface(ScoreDefinition::Summed).unwrap();
    assert!(report.value > 0.0 && report.value < 1.0);
    let lattice = surface.lattice(-3.0, 3.0, 41);
    let at = |a: usize, b: usize| lattice[a * 41 + b].2;
    let supported = |a: usize, b: usize| supported(lattice[a * 41 + b].0, lattice[a * 41 + b].1);
    let mut checked = 0;
    for a in 0..41 {
        for b in 1..41 {
            if supported(a, b) && supported(a, b - 1) {
                assert!(at(a, b) >= at(a, b - 1) - 1e-3, "axis 2 at ({a},{b})");
                checked += 1;
            }
            if supported(b, a) && supported(b - 1, a) {
                assert!(at(b, a) >= at(b - 1, a) - 1e-3, "axis 1 at ({b},{a})");
                checked += 1;
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn surface_flat_along_irrelevant_latent() {
    let model = fixtures::mhgrm_example();
    let run = McRun::new(&model, &McConfig::with_n(200_000, 7)).unwrap();
    // presence items load on the first latent only
    let presence: Vec<f64> = {
        let Responses::Discrete(p) = &run.sample().responses else { unreachable!() };
        p.rows().map(|r| r.iter().step_by(2).map(|&c| f64::from(c)).sum()).collect()
    };
    let eta: Vec<f64> = run.sample().latents.rows().flatten().copied().collect();
    let (_, surface) = fit_spline_surface(&presence, &eta, 2, 8).unwrap();
    let lattice = surface.lattice(-3.0, 3.0, 41);
    let inside: Vec<_> = lattice.iter().filter(|p| supported(p.0, p.1)).collect();
    let overall = inside.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max)
        - inside.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
    for a in 0..41 {
        let row: Vec<f64> = inside.iter().filter(|p| p.0 == lattice[a * 41].0).map(|p| p.2).collect();
        if row.len() < 2 {
            continue;
        }
        let range = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - row.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(range < 0.05 * overall, "row {a}: {range} vs {overall}");
    }
}
