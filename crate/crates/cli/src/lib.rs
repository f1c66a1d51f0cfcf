//! Command-line front end for `precision-core`.
//!
//! Commands read a JSON model file (see [`config`]) and write CSV or a
//! plain-text table to standard output or `--out`.

pub mod config;
pub mod error;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use precision_core::quadrature::{eap_score, enumerate_patterns, marginal_probability, TrueScoreCurve};
use precision_core::{
    analytic_reports, convergence_diagnostic, CoefficientKind, Error, GridConfig, LatentScore, McConfig, McMethod,
    McRun, ModelSpec, PrecisionReport, ScoreDefinition, DEFAULT_PATTERN_CAP,
};

pub use config::{load_model_config, parse_model, to_json, ModelConfig};
pub use error::CliError;

/// Smallest accepted Monte Carlo sample size.
pub const MIN_N: usize = 1000;

#[derive(Debug, Parser)]
#[command(name = "precision", version, about = "Reliability and PRMSE for measurement models with known parameters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Marginal probability, EAP scores and summed score of every response pattern
    ScoreTable(ScoreTableArgs),
    /// Closed-form reliability and PRMSE (unidimensional linear, 2PL and graded models)
    Analytic(AnalyticArgs),
    /// Monte Carlo estimate of one coefficient
    Mc(McArgs),
    /// True score as a function of the latent variable
    Curve(CurveArgs),
    /// Fitted regression surface of an observed score on two latent variables
    Surface(SurfaceArgs),
    /// Monte Carlo estimates on nested prefixes of one sample
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Model configuration (JSON)
    #[arg(long)]
    pub model: PathBuf,
    /// Output file; standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Quadrature nodes per latent dimension
    #[arg(long, default_value_t = 61)]
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

#[derive(Debug, Args)]
pub struct ScoreTableArgs {
    #[command(flatten)]
    pub common: Common,
    /// Latent scores to compute EAPs for (eta1, eta2, ..., true_sum); default all latent variables
    #[arg(long, value_delimiter = ',')]
    pub latent: Vec<String>,
}

#[derive(Debug, Args)]
pub struct AnalyticArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    /// Monte Carlo sample size
    #[arg(long, default_value_t = 1_000_000, value_parser = parse_n)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// auto, nonparametric or simple_linear
    #[arg(long, default_value = "auto")]
    pub method: String,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub common: Common,
    /// Score to evaluate (sum, eap_eta1, eap_true_sum, eta1, true_sum, ...)
    #[arg(long)]
    pub score: String,
    /// reliability or prmse; inferred from the score when omitted
    #[arg(long)]
    pub kind: Option<String>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Also write the simulated sample with the score column as CSV
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Observed score whose true score is traced
    #[arg(long, default_value = "sum")]
    pub score: String,
    /// Latent range as LO,HI
    #[arg(long, default_value = "-4,4", allow_hyphen_values = true, value_parser = parse_range)]
    pub range: (f64, f64),
    #[arg(long, default_value_t = 161, value_parser = parse_steps)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    #[command(flatten)]
    pub common: Common,
    /// Observed score regressed on the latent variables
    #[arg(long, default_value = "sum")]
    pub score: String,
    #[arg(long, default_value_t = 1_000_000, value_parser = parse_n)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Lattice range on both axes as LO,HI
    #[arg(long, default_value = "-3,3", allow_hyphen_values = true, value_parser = parse_range)]
    pub range: (f64, f64),
    #[arg(long, default_value_t = 41, value_parser = parse_steps)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub score: String,
    #[arg(long)]
    pub kind: Option<String>,
    /// Ascending sample sizes
    #[arg(long, value_delimiter = ',', default_value = "10000,100000,1000000", value_parser = parse_n)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "auto")]
    pub method: String,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

fn parse_n(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if n < MIN_N {
        return Err(format!("sample size must be at least {MIN_N}"));
    }
    Ok(n)
}

fn parse_steps(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if n < 2 {
        return Err("need at least 2 steps".into());
    }
    Ok(n)
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err("need finite LO < HI".into());
    }
    Ok((lo, hi))
}

fn parse_component(s: &str, d: usize) -> Option<LatentScore> {
    match s {
        "true_sum" => Some(LatentScore::TrueSummed),
        "eta" if d == 1 => Some(LatentScore::Component(0)),
        _ => {
            let t: usize = s.strip_prefix("eta")?.parse().ok()?;
            (1..=d).contains(&t).then(|| LatentScore::Component(t - 1))
        }
    }
}

/// Parses a score selector for a model with `d` latent variables.
pub fn parse_score(s: &str, d: usize) -> Result<ScoreDefinition, CliError> {
    let bad = || {
        CliError::Usage(format!(
            "unknown score {s:?}; expected sum, eap_eta1..eap_eta{d}, eap_true_sum, eta1..eta{d} or true_sum"
        ))
    };
    if s == "sum" {
        return Ok(ScoreDefinition::Summed);
    }
    if s == "eap" && d == 1 {
        return Ok(ScoreDefinition::Eap(LatentScore::Component(0)));
    }
    if let Some(rest) = s.strip_prefix("eap_") {
        return parse_component(rest, d).map(ScoreDefinition::Eap).ok_or_else(bad);
    }
    parse_component(s, d).map(ScoreDefinition::Latent).ok_or_else(bad)
}

fn parse_method(s: &str) -> Result<McMethod, CliError> {
    s.parse().map_err(|e: Error| CliError::Usage(e.to_string()))
}

fn check_kind(kind: Option<&str>, score: ScoreDefinition) -> Result<(), CliError> {
    let Some(kind) = kind else { return Ok(()) };
    let kind: CoefficientKind = kind.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
    match (kind, score.is_observed()) {
        (CoefficientKind::Reliability, false) => {
            Err(CliError::Usage(format!("reliability needs an observed score (sum or eap_*), got {score}")))
        }
        (CoefficientKind::Prmse, true) => {
            Err(CliError::Usage(format!("PRMSE needs a latent score (eta* or true_sum), got {score}")))
        }
        _ => Ok(()),
    }
}

fn open_out<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

fn grid_config(nodes: usize) -> GridConfig {
    GridConfig::with_nodes(nodes)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes precision reports as CSV (full precision) or as a table with
/// values rounded to 4 decimals.
pub fn write_reports(out: &mut dyn Write, reports: &[PrecisionReport], format: Format) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["kind", "score", "value", "method", "n", "seed", "half_width", "regressor", "model_hash"])?;
            for r in reports {
                w.write_record([
                    r.kind.to_string(),
                    r.score.to_string(),
                    r.value.to_string(),
                    r.method.to_string(),
                    opt(r.n),
                    opt(r.seed),
                    opt(r.half_width),
                    r.regressor.clone().unwrap_or_default(),
                    format!("{:016x}", r.model_hash),
                ])?;
            }
            w.flush()?;
        }
        Format::Table => {
            let mc = reports.iter().any(|r| r.n.is_some());
            if mc {
                writeln!(out, "{:<12} {:<14} {:>7} {:>9} {:<18} {:>9} {:>6}", "kind", "score", "value", "+/-", "method", "n", "seed")?;
            } else {
                writeln!(out, "{:<12} {:<14} {:>7}  method", "kind", "score", "value")?;
            }
            for r in reports {
                if mc {
                    writeln!(
                        out,
                        "{:<12} {:<14} {:>7.4} {:>9} {:<18} {:>9} {:>6}",
                        r.kind.to_string(),
                        r.score.to_string(),
                        r.value,
                        r.half_width.map(|h| format!("{h:.4}")).unwrap_or_default(),
                        r.method.to_string(),
                        opt(r.n),
                        opt(r.seed)
                    )?;
                } else {
                    writeln!(out, "{:<12} {:<14} {:>7.4}  {}", r.kind.to_string(), r.score.to_string(), r.value, r.method.to_string())?;
                }
            }
        }
    }
    Ok(())
}

fn score_table(args: &ScoreTableArgs, model: &ModelSpec, out: &mut dyn Write) -> Result<(), CliError> {
    let d = model.dimension();
    let targets: Vec<LatentScore> = if args.latent.is_empty() {
        (0..d).map(LatentScore::Component).collect()
    } else {
        args.latent
            .iter()
            .map(|s| parse_component(s, d).ok_or_else(|| CliError::Usage(format!("unknown latent score {s:?}"))))
            .collect::<Result<_, _>>()?
    };
    let grid = grid_config(args.common.nodes).build(model.latent())?;
    let patterns = enumerate_patterns(model, DEFAULT_PATTERN_CAP)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["pattern".to_string(), "prob".to_string()];
    header.extend(targets.iter().map(|t| match t {
        LatentScore::Component(0) if d == 1 => "eap_eta".to_string(),
        t => format!("eap_{t}"),
    }));
    header.push("s".into());
    w.write_record(&header)?;
    for p in &patterns {
        let mut row = vec![p.to_string(), marginal_probability(model, p, &grid)?.to_string()];
        for t in &targets {
            row.push(eap_score(model, p, *t, &grid)?.to_string());
        }
        row.push(p.summed_score().to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn analytic(args: &AnalyticArgs, model: &ModelSpec, out: &mut dyn Write) -> Result<(), CliError> {
    let reports = match analytic_reports(model, &grid_config(args.common.nodes), DEFAULT_PATTERN_CAP) {
        Err(Error::Unsupported(msg)) => return Err(CliError::UnsupportedAnalytic(msg)),
        r => r?,
    };
    write_reports(out, &reports, args.format)
}

fn mc_config(n: usize, seed: u64, method: &str, nodes: usize) -> Result<McConfig, CliError> {
    Ok(McConfig { method: parse_method(method)?, grid: grid_config(nodes), ..McConfig::with_n(n, seed) })
}

fn mc(args: &McArgs, model: &ModelSpec, out: &mut dyn Write) -> Result<(), CliError> {
    let score = parse_score(&args.score, model.dimension())?;
    check_kind(args.kind.as_deref(), score)?;
    let s = &args.sampling;
    let run = McRun::new(model, &mc_config(s.n, s.seed, &s.method, args.common.nodes)?)?;
    let report = run.estimate(score)?;
    if let Some(path) = &args.dump {
        let values = match score {
            ScoreDefinition::Latent(t) => run.latent_scores(t)?,
            observed => run.observed_scores(observed)?.to_vec(),
        };
        let mut f = BufWriter::new(File::create(path)?);
        run.sample().write_csv(&mut f, &[(score.to_string(), values)])?;
        f.flush()?;
    }
    write_reports(out, &[report], args.format)
}

fn curve(args: &CurveArgs, model: &ModelSpec, out: &mut dyn Write) -> Result<(), CliError> {
    if model.dimension() != 1 {
        return Err(CliError::Usage(format!("curve needs a unidimensional model, got d = {}", model.dimension())));
    }
    let score = parse_score(&args.score, 1)?;
    if !score.is_observed() {
        return Err(CliError::Usage(format!("curve traces an observed score, got {score}")));
    }
    let grid = grid_config(args.common.nodes).build(model.latent())?;
    let tcc = TrueScoreCurve::new(model, score, &grid, DEFAULT_PATTERN_CAP)?;
    let (lo, hi) = args.range;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eta", "true_score"])?;
    for k in 0..args.steps {
        let eta = lo + (hi - lo) * k as f64 / (args.steps - 1) as f64;
        w.write_record([eta.to_string(), tcc.eval(&[eta]).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn surface(args: &SurfaceArgs, model: &ModelSpec, out: &mut dyn Write) -> Result<(), CliError> {
    if model.dimension() != 2 {
        return Err(CliError::Usage(format!("surface needs two latent variables, got d = {}", model.dimension())));
    }
    let score = parse_score(&args.score, 2)?;
    if !score.is_observed() {
        return Err(CliError::Usage(format!("surface regresses an observed score, got {score}")));
    }
    let run = McRun::new(model, &mc_config(args.n, args.seed, "nonparametric", args.common.nodes)?)?;
    let (report, fitted) = run.reliability_surface(score)?;
    writeln!(out, "# R² = {} (score {score}, n = {}, seed = {})", report.value, args.n, args.seed)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eta1", "eta2", "fitted"])?;
    for (a, b, v) in fitted.lattice(args.range.0, args.range.1, args.steps) {
        w.write_record([a.to_string(), b.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn convergence(args: &ConvergenceArgs, model: &ModelSpec, out: &mut dyn Write) -> Result<(), CliError> {
    let score = parse_score(&args.score, model.dimension())?;
    check_kind(args.kind.as_deref(), score)?;
    if args.n.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage("sample sizes must be strictly ascending".into()));
    }
    let largest = *args.n.last().ok_or_else(|| CliError::Usage("no sample sizes given".into()))?;
    let cfg = mc_config(largest, args.seed, &args.method, args.common.nodes)?;
    let points = convergence_diagnostic(model, score, &cfg, &args.n)?;
    match args.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["n", "r_squared", "half_width"])?;
            for p in &points {
                w.write_record([p.n.to_string(), p.r_squared.to_string(), p.half_width.to_string()])?;
            }
            w.flush()?;
        }
        Format::Table => {
            writeln!(out, "{:>10} {:>9} {:>9}", "n", "R²", "+/-")?;
            for p in &points {
                writeln!(out, "{:>10} {:>9.4} {:>9.4}", p.n, p.r_squared, p.half_width)?;
            }
        }
    }
    Ok(())
}

/// Runs one command, writing results to `--out` or `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let common = match &cli.command {
        Command::ScoreTable(a) => &a.common,
        Command::Analytic(a) => &a.common,
        Command::Mc(a) => &a.common,
        Command::Curve(a) => &a.common,
        Command::Surface(a) => &a.common,
        Command::Convergence(a) => &a.common,
    };
    if common.nodes < 2 {
        return Err(CliError::Usage("--nodes must be at least 2".into()));
    }
    let model = load_model_config(&common.model)?;
    let mut out = open_out(common.out.as_deref(), stdout)?;
    match &cli.command {
        Command::ScoreTable(a) => score_table(a, &model, &mut out)?,
        Command::Analytic(a) => analytic(a, &model, &mut out)?,
        Command::Mc(a) => mc(a, &model, &mut out)?,
        Command::Curve(a) => curve(a, &model, &mut out)?,
        Command::Surface(a) => surface(a, &model, &mut out)?,
        Command::Convergence(a) => convergence(a, &model, &mut out)?,
    }
    out.flush()?;
    Ok(())
}
