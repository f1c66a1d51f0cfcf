use std::path::PathBuf;

use precision_cli::{load_model_config, parse_model, to_json, CliError};
use precision_core::fixtures;
use precision_core::*;
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn coefficients(spec: &ModelSpec) -> [f64; 4] {
    analytic_coefficients(spec, &GridConfig::default(), DEFAULT_PATTERN_CAP).unwrap().as_array()
}

#[test]
fn fixtures_equal_in_memory_examples() {
    assert_eq!(load_model_config(&fixture("one_factor.json")).unwrap(), fixtures::one_factor_example());
    assert_eq!(load_model_config(&fixture("twopl.json")).unwrap(), fixtures::two_pl_example());
    let hurdle = load_model_config(&fixture("mhgrm.json")).unwrap();
    assert_eq!(hurdle, fixtures::mhgrm_example());
    assert!((hurdle.latent().correlation(0, 1) - 0.58).abs() < 1e-15);
}

#[test]
fn examples_round_trip() {
    let graded: ModelSpec = GradedModel::new(
        vec![
            GradedItem::new(vec![1.2], vec![-1.0, 0.0, 1.5]).unwrap(),
            GradedItem::new(vec![0.8], vec![-0.5, 0.7]).unwrap(),
        ],
        LatentDistribution::new(vec![0.5], nalgebra::DMatrix::from_element(1, 1, 2.0)).unwrap(),
    )
    .unwrap()
    .into();
    let correlated: ModelSpec = LinearFactorModel::new(
        vec![0.1, 0.2, 0.3],
        nalgebra::DMatrix::from_row_slice(3, 1, &[0.6, 0.7, 0.8]),
        nalgebra::DMatrix::from_row_slice(3, 3, &[0.5, 0.1, 0.0, 0.1, 0.4, 0.0, 0.0, 0.0, 0.3]),
        LatentDistribution::standard(1),
    )
    .unwrap()
    .into();
    for spec in [fixtures::one_factor_example(), fixtures::two_pl_example(), graded, correlated] {
        let back = parse_model(&to_json(&spec)).unwrap();
        assert_eq!(back, spec);
        for (a, b) in coefficients(&spec).iter().zip(coefficients(&back)) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
    let hurdle = fixtures::mhgrm_with_pairs(3);
    assert_eq!(parse_model(&to_json(&hurdle)).unwrap(), hurdle);
}

#[test]
fn syntax_errors_report_position() {
    let text = "{\n  \"model_type\": \"two_pl\",\n  \"intercepts\": [1, 0,, -2]\n}";
    match parse_model(text) {
        Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected a parse error, got {other:?}"),
    }
    let unknown = r#"{"model_type": "two_pl", "intercepts": [1], "slopes": [1], "slope": [2]}"#;
    assert!(matches!(parse_model(unknown), Err(CliError::Parse { .. })));
    let family = r#"{"model_type": "rasch", "intercepts": [1]}"#;
    assert!(matches!(parse_model(family), Err(CliError::Parse { .. })));
}

#[test]
fn validation_errors_name_the_field() {
    let cases = [
        (r#"{"model_type": "linear_factor", "loadings": [[0.5], [0.5, 0.1]], "uniquenesses": [1, 1]}"#, "loadings[1]"),
        (r#"{"model_type": "linear_factor", "loadings": [0.5, 0.6], "uniquenesses": [1]}"#, "uniquenesses"),
        (r#"{"model_type": "linear_factor", "loadings": [0.5, 0.6], "uniquenesses": [1, -1]}"#, "uniquenesses"),
        (r#"{"model_type": "two_pl", "intercepts": [1, 0], "slopes": [1]}"#, "slopes"),
        (r#"{"model_type": "two_pl", "intercepts": [1], "slopes": [1], "latent": {"covariance": [[-1]]}}"#, "latent.covariance"),
        (r#"{"model_type": "two_pl", "intercepts": [1], "slopes": [1], "latent": {"dimension": 2}}"#, "latent.dimension"),
        (r#"{"model_type": "graded", "items": [{"slopes": [1], "thresholds": [1, 0]}]}"#, "items[0].thresholds"),
        (
            r#"{"model_type": "hurdle", "pairs": [{"presence_slope": 1, "presence_threshold": 0, "frequency_slope": 1, "frequency_thresholds": [1, -1]}]}"#,
            "pairs[0]",
        ),
    ];
    for (text, want) in cases {
        match parse_model(text) {
            Err(CliError::Validation { path, .. }) => assert_eq!(path, want, "{text}"),
            other => panic!("{text}: expected a validation error, got {other:?}"),
        }
    }
}

#[test]
fn bivariate_latent_from_nested_covariance() {
    let text = r#"{"model_type": "two_pl", "intercepts": [0, 1], "slopes": [[1, 0], [0, 1]],
                   "latent": {"dimension": 2, "mean": [0, 0], "covariance": [[1, 0.58], [0.58, 1]]}}"#;
    let spec = parse_model(text).unwrap();
    assert_eq!(spec.dimension(), 2);
    assert_eq!(spec.latent().covariance()[(0, 1)], 0.58);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_models_round_trip(
        a in prop::collection::vec(-2.0f64..2.0, 1..5),
        seed in prop::collection::vec(0.2f64..0.9, 5),
        psi in 0.3f64..3.0,
    ) {
        let b: Vec<f64> = a.iter().zip(&seed).map(|(_, s)| 3.0 * s).collect();
        let two_pl: ModelSpec = TwoPlModel::unidimensional(&a, &b).unwrap().into();
        let l = &seed[..a.len()];
        let theta: Vec<f64> = l.iter().map(|v| 1.0 - v * v).collect();
        let linear: ModelSpec = LinearFactorModel::one_factor(&a, l, &theta, psi).unwrap().into();
        for spec in [two_pl, linear] {
            let back = parse_model(&to_json(&spec)).unwrap();
            prop_assert_eq!(&back, &spec);
            for (x, y) in coefficients(&spec).iter().zip(coefficients(&back)) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
