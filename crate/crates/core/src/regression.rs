//! Least-squares fits whose coefficient of determination estimates
//! reliability or PRMSE.
//!
//! Every fit contains an intercept (explicitly, or implicitly through a
//! saturated grouping or a B-spline basis that sums to one), so
//! `R² = 1 − SSE/SST = Var(fitted)/Var(outcome)`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::PatternMatrix;

/// Condition number of the normal equations above which a basis is
/// rejected.
pub const MAX_BASIS_CONDITION: f64 = 1e12;

const Z_95: f64 = 1.959963984540054;
/// Per-chunk partial sums are merged in chunk order, so results do not
/// depend on the number of threads.
const CHUNK: usize = 1 << 14;

/// Streaming mean and centered sum of squares (Welford, with Chan's merge).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: f64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.n == 0.0 {
            return *other;
        }
        if other.n == 0.0 {
            return *self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Self {
            n,
            mean: self.mean + delta * other.n / n,
            m2: self.m2 + other.m2 + delta * delta * self.n * other.n / n,
        }
    }

    pub fn of(values: &[f64]) -> Self {
        values
            .par_chunks(CHUNK)
            .map(|c| {
                let mut m = Moments::default();
                c.iter().for_each(|&x| m.push(x));
                m
            })
            .collect::<Vec<_>>()
            .iter()
            .fold(Moments::default(), |a, b| a.merge(b))
    }

    /// Sample variance (divisor `n − 1`).
    pub fn variance(&self) -> f64 {
        if self.n > 1.0 {
            self.m2 / (self.n - 1.0)
        } else {
            0.0
        }
    }
}

/// Streaming bivariate moments.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CoMoments {
    pub n: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub m2_x: f64,
    pub m2_y: f64,
    pub c_xy: f64,
}

impl CoMoments {
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        let dx = x - self.mean_x;
        let dy = y - self.mean_y;
        self.mean_x += dx / self.n;
        self.mean_y += dy / self.n;
        self.m2_x += dx * (x - self.mean_x);
        self.m2_y += dy * (y - self.mean_y);
        self.c_xy += dx * (y - self.mean_y);
    }

    pub fn merge(&self, o: &Self) -> Self {
        if self.n == 0.0 {
            return *o;
        }
        if o.n == 0.0 {
            return *self;
        }
        let n = self.n + o.n;
        let dx = o.mean_x - self.mean_x;
        let dy = o.mean_y - self.mean_y;
        let f = self.n * o.n / n;
        Self {
            n,
            mean_x: self.mean_x + dx * o.n / n,
            mean_y: self.mean_y + dy * o.n / n,
            m2_x: self.m2_x + o.m2_x + dx * dx * f,
            m2_y: self.m2_y + o.m2_y + dy * dy * f,
            c_xy: self.c_xy + o.c_xy + dx * dy * f,
        }
    }

    pub fn of(x: &[f64], y: &[f64]) -> Self {
        x.par_chunks(CHUNK)
            .zip(y.par_chunks(CHUNK))
            .map(|(a, b)| {
                let mut m = CoMoments::default();
                a.iter().zip(b).for_each(|(&u, &v)| m.push(u, v));
                m
            })
            .collect::<Vec<_>>()
            .iter()
            .fold(CoMoments::default(), |a, b| a.merge(b))
    }

    pub fn correlation(&self) -> f64 {
        self.c_xy / (self.m2_x * self.m2_y).sqrt()
    }
}

/// Result of one regression.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub r_squared: f64,
    /// Sample variance of the fitted values.
    pub fitted_variance: f64,
    /// Sample variance of the residuals.
    pub residual_variance: f64,
    pub outcome_variance: f64,
    pub n: usize,
    /// Number of regression parameters including the intercept.
    pub parameters: usize,
    pub regressor: String,
    pub intercept: Option<f64>,
    pub slope: Option<f64>,
    /// Half-width of an asymptotic 95% interval for `R²`.
    pub half_width: f64,
}

struct Residuals {
    sse: f64,
    half_width: f64,
}

/// SSE, SST and the delta-method half-width of `R² = 1 − a/b` with
/// `a = mean(e²)` and `b = mean(c²)`:
/// `Var(R̂) ≈ Var(e² − (a/b) c²) / (n b²)`.
fn residual_pass(outcome: &[f64], mean: f64, sse_hint: f64, sst_hint: f64, fitted: impl Fn(usize) -> f64 + Sync) -> Residuals {
    let n = outcome.len() as f64;
    let q = if sst_hint > 0.0 { sse_hint / sst_hint } else { 0.0 };
    let (sse, sst, m) = outcome
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut sse = 0.0;
            let mut sst = 0.0;
            let mut m = Moments::default();
            for (k, &y) in chunk.iter().enumerate() {
                let e2 = (y - fitted(c * CHUNK + k)).powi(2);
                let c2 = (y - mean).powi(2);
                sse += e2;
                sst += c2;
                m.push(e2 - q * c2);
            }
            (sse, sst, m)
        })
        .collect::<Vec<_>>()
        .iter()
        .fold((0.0, 0.0, Moments::default()), |a, b| (a.0 + b.0, a.1 + b.1, a.2.merge(&b.2)));
    let b = sst / n;
    let half_width = if b > 0.0 { Z_95 * (m.m2 / n / n).sqrt() / b } else { 0.0 };
    Residuals { sse, half_width }
}

fn finish(
    outcome_moments: Moments,
    sse: f64,
    parameters: usize,
    regressor: String,
    line: Option<(f64, f64)>,
    half_width: f64,
) -> RegressionFit {
    let sst = outcome_moments.m2;
    let dof = (outcome_moments.n - 1.0).max(1.0);
    let r_squared = (1.0 - sse / sst).clamp(0.0, 1.0);
    RegressionFit {
        r_squared,
        fitted_variance: (sst - sse).max(0.0) / dof,
        residual_variance: sse / dof,
        outcome_variance: sst / dof,
        n: outcome_moments.n as usize,
        parameters,
        regressor,
        intercept: line.map(|l| l.0),
        slope: line.map(|l| l.1),
        half_width,
    }
}

fn outcome_moments(outcome: &[f64], min_n: usize) -> Result<Moments> {
    if outcome.len() < min_n {
        return Err(Error::InvalidConfig(format!("regression needs at least {min_n} rows, got {}", outcome.len())));
    }
    if outcome.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("outcome contains non-finite values".into()));
    }
    let m = Moments::of(outcome);
    if !(m.m2 > 0.0) || m.m2 <= f64::EPSILON * m.n * m.mean * m.mean {
        return Err(Error::DegenerateOutcome);
    }
    Ok(m)
}

/// Saturated regression on response-pattern indicators: each row is
/// predicted by the outcome mean of its pattern.
pub fn fit_pattern_means(outcome: &[f64], patterns: &PatternMatrix) -> Result<RegressionFit> {
    if patterns.n_rows() != outcome.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} outcomes for {} patterns",
            outcome.len(),
            patterns.n_rows()
        )));
    }
    let total = outcome_moments(outcome, 2)?;
    let mut index: HashMap<&[u8], usize> = HashMap::new();
    let mut groups: Vec<Moments> = Vec::new();
    let mut member = Vec::with_capacity(outcome.len());
    for (row, &y) in patterns.rows().zip(outcome) {
        let g = *index.entry(row).or_insert_with(|| {
            groups.push(Moments::default());
            groups.len() - 1
        });
        groups[g].push(y);
        member.push(g);
    }
    if groups.len() < 2 {
        return Err(Error::DegenerateRegressor);
    }
    let sse: f64 = groups.iter().map(|g| g.m2).sum();
    let res = residual_pass(outcome, total.mean, sse, total.m2, |i| groups[member[i]].mean);
    Ok(finish(total, sse, groups.len(), format!("{} response patterns", groups.len()), None, res.half_width))
}

/// Ordinary least squares on one regressor.
pub fn fit_simple_linear(outcome: &[f64], regressor: &[f64]) -> Result<RegressionFit> {
    if regressor.len() != outcome.len() {
        return Err(Error::ShapeMismatch(format!("{} outcomes for {} regressor values", outcome.len(), regressor.len())));
    }
    let total = outcome_moments(outcome, 3)?;
    let co = CoMoments::of(regressor, outcome);
    if !(co.m2_x > 0.0) || !co.m2_x.is_finite() || co.m2_x <= 1e-14 * co.n * co.mean_x * co.mean_x {
        return Err(Error::DegenerateRegressor);
    }
    let slope = co.c_xy / co.m2_x;
    let intercept = co.mean_y - slope * co.mean_x;
    let sse = (co.m2_y - co.c_xy * co.c_xy / co.m2_x).max(0.0);
    let res = residual_pass(outcome, total.mean, sse, total.m2, |i| intercept + slope * regressor[i]);
    Ok(finish(total, sse, 2, "simple linear".into(), Some((intercept, slope)), res.half_width))
}

/// Solves the accumulated normal equations `G b = r`.
fn solve_normal(gram: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    let eig = gram.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= MAX_BASIS_CONDITION) {
        return Err(Error::IllConditionedBasis { condition });
    }
    let chol = gram.cholesky().ok_or(Error::IllConditionedBasis { condition })?;
    Ok(chol.solve(&rhs))
}

/// OLS on `p` regressors stored row-major (`n × p`), with intercept.
pub fn fit_multiple_linear(outcome: &[f64], regressors: &[f64], p: usize) -> Result<RegressionFit> {
    let n = outcome.len();
    if p == 0 || regressors.len() != n * p {
        return Err(Error::ShapeMismatch(format!("{} regressor values for {n} rows of {p}", regressors.len())));
    }
    let total = outcome_moments(outcome, p + 2)?;
    // centre the regressors so the Gram matrix stays well scaled
    let centres: Vec<f64> = (0..p)
        .map(|t| regressors.iter().skip(t).step_by(p).sum::<f64>() / n as f64)
        .collect();
    let k = p + 1;
    let (gram, rhs) = regressors
        .par_chunks(p * CHUNK)
        .zip(outcome.par_chunks(CHUNK))
        .map(|(xs, ys)| {
            let mut g = vec![0.0; k * k];
            let mut r = vec![0.0; k];
            let mut row = vec![1.0; k];
            for (x, &y) in xs.chunks_exact(p).zip(ys) {
                for t in 0..p {
                    row[t + 1] = x[t] - centres[t];
                }
                for a in 0..k {
                    r[a] += row[a] * y;
                    for b in a..k {
                        g[a * k + b] += row[a] * row[b];
                    }
                }
            }
            (g, r)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((vec![0.0; k * k], vec![0.0; k]), add_pairs);
    let gram = DMatrix::from_fn(k, k, |a, b| gram[a.min(b) * k + a.max(b)]);
    let beta = solve_normal(gram, DVector::from_vec(rhs))?;
    let fitted = |i: usize| {
        let x = &regressors[i * p..(i + 1) * p];
        beta[0] + (0..p).map(|t| beta[t + 1] * (x[t] - centres[t])).sum::<f64>()
    };
    let sse_first = residual_pass(outcome, total.mean, 0.0, total.m2, fitted).sse;
    let res = residual_pass(outcome, total.mean, sse_first, total.m2, fitted);
    Ok(finish(total, res.sse, k, format!("linear in {p} variables"), None, res.half_width))
}

fn add_pairs(mut a: (Vec<f64>, Vec<f64>), b: (Vec<f64>, Vec<f64>)) -> (Vec<f64>, Vec<f64>) {
    a.0.iter_mut().zip(&b.0).for_each(|(x, y)| *x += y);
    a.1.iter_mut().zip(&b.1).for_each(|(x, y)| *x += y);
    a
}

/// Clamped cubic B-spline basis on `[lo, hi]` with interior knots.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineBasis {
    knots: Vec<f64>,
}

const ORDER: usize = 4;

impl BSplineBasis {
    /// `df` basis functions with `df − 4` interior knots at empirical
    /// quantiles of `x` and boundary knots at its range.
    pub fn from_quantiles(x: &[f64], df: usize) -> Result<Self> {
        if df < ORDER {
            return Err(Error::InvalidConfig(format!("spline df must be at least {ORDER}, got {df}")));
        }
        let mut sorted = x.to_vec();
        sorted.par_sort_unstable_by(|a, b| a.total_cmp(b));
        let n = sorted.len();
        let (lo, hi) = (sorted[0], sorted[n - 1]);
        if !(hi > lo) {
            return Err(Error::DegenerateRegressor);
        }
        let n_interior = df - ORDER;
        let interior: Vec<f64> = (1..=n_interior)
            .map(|k| {
                let pos = k as f64 / (n_interior + 1) as f64 * (n - 1) as f64;
                let i = pos.floor() as usize;
                let frac = pos - i as f64;
                sorted[i] + frac * (sorted[(i + 1).min(n - 1)] - sorted[i])
            })
            .collect();
        Self::new(lo, hi, &interior)
    }

    pub fn new(lo: f64, hi: f64, interior: &[f64]) -> Result<Self> {
        if !(lo < hi) || interior.windows(2).any(|w| !(w[0] < w[1])) || interior.iter().any(|&k| !(k > lo && k < hi))
        {
            return Err(Error::IllConditionedBasis { condition: f64::INFINITY });
        }
        let mut knots = vec![lo; ORDER];
        knots.extend_from_slice(interior);
        knots.extend(std::iter::repeat(hi).take(ORDER));
        Ok(Self { knots })
    }

    pub fn len(&self) -> usize {
        self.knots.len() - ORDER
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Index of the first nonzero basis function at `x` and the four
    /// nonzero values (Cox–de Boor). `x` is clamped to the knot range.
    pub fn eval(&self, x: f64) -> (usize, [f64; ORDER]) {
        let t = &self.knots;
        let (lo, hi) = self.range();
        let x = x.clamp(lo, hi);
        let last = self.len() - 1;
        // span s with t[s] <= x < t[s+1], s in [3, last]
        let mut span = ORDER - 1 + t[ORDER..=last].partition_point(|&k| k <= x);
        span = span.min(last);
        let mut b = [0.0; ORDER];
        let mut left = [0.0; ORDER];
        let mut right = [0.0; ORDER];
        b[0] = 1.0;
        for j in 1..ORDER {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom > 0.0 { b[r] / denom } else { 0.0 };
                b[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            b[j] = saved;
        }
        (span + 1 - ORDER, b)
    }
}

/// Fitted least-squares spline function of one or two variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineSurface {
    bases: Vec<BSplineBasis>,
    coefficients: Vec<f64>,
}

impl SplineSurface {
    pub fn dimension(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[BSplineBasis] {
        &self.bases
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Nonzero columns at `x` as (column, value); at most 16.
    fn row(&self, x: &[f64], out: &mut Vec<(usize, f64)>) {
        out.clear();
        let (s0, b0) = self.bases[0].eval(x[0]);
        if self.bases.len() == 1 {
            out.extend((0..ORDER).map(|a| (s0 + a, b0[a])));
            return;
        }
        let (s1, b1) = self.bases[1].eval(x[1]);
        let k1 = self.bases[1].len();
        for a in 0..ORDER {
            for c in 0..ORDER {
                out.push(((s0 + a) * k1 + s1 + c, b0[a] * b1[c]));
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut row = Vec::with_capacity(ORDER * ORDER);
        self.row(x, &mut row);
        row.iter().map(|&(j, v)| self.coefficients[j] * v).sum()
    }

    /// Fitted values on a square lattice, row-major with the first
    /// coordinate varying slowest: `(x1, x2, fitted)`.
    pub fn lattice(&self, lo: f64, hi: f64, steps: usize) -> Vec<(f64, f64, f64)> {
        let at = |k: usize| if steps < 2 { lo } else { lo + (hi - lo) * k as f64 / (steps - 1) as f64 };
        let mut out = Vec::with_capacity(steps * steps);
        for a in 0..steps {
            for b in 0..steps {
                let (x1, x2) = (at(a), at(b));
                out.push((x1, x2, self.eval(&[x1, x2])));
            }
        }
        out
    }
}

/// Weight of the difference penalty relative to the trace of the Gram matrix.
const STABILIZER: f64 = 1e-8;
/// A basis function counts as unsupported when its Gram diagonal is below
/// this fraction of the average diagonal.
const SUPPORT: f64 = 1e-3;

/// First-order difference penalty between neighbouring coefficients of a
/// tensor basis (`df` functions per axis, first axis slowest), restricted to
/// pairs that involve an unsupported coefficient. Such coefficients get pulled
/// towards their neighbours, so the fit extends flat into empty regions while
/// well-populated fits are left untouched.
fn sparse_difference_penalty(gram: &DMatrix<f64>, df: usize) -> DMatrix<f64> {
    let k = gram.nrows();
    let threshold = SUPPORT * gram.trace() / k as f64;
    let lambda = STABILIZER * gram.trace();
    let mut penalty = DMatrix::zeros(k, k);
    let mut link = |a: usize, b: usize| {
        if gram[(a, a)].min(gram[(b, b)]) < threshold {
            penalty[(a, a)] += lambda;
            penalty[(b, b)] += lambda;
            penalty[(a, b)] -= lambda;
            penalty[(b, a)] -= lambda;
        }
    };
    for i in 0..df {
        for j in 0..df {
            if j + 1 < df {
                link(i * df + j, i * df + j + 1);
            }
            if i + 1 < df {
                link(i * df + j, (i + 1) * df + j);
            }
        }
    }
    penalty
}

/// Least squares on a cubic B-spline basis with `df` functions
/// per variable (tensor product when there are two regressors). Tensor fits
/// tie coefficients without data to their neighbours. Regressors are stored row-major
/// (`n × d`).
pub fn fit_spline_surface(outcome: &[f64], regressors: &[f64], d: usize, df: usize) -> Result<(RegressionFit, SplineSurface)> {
    if !(1..=2).contains(&d) {
        return Err(Error::Unsupported(format!("spline regression supports 1 or 2 regressors, got {d}")));
    }
    let n = outcome.len();
    if regressors.len() != n * d {
        return Err(Error::ShapeMismatch(format!("{} regressor values for {n} rows of {d}", regressors.len())));
    }
    let k = df.pow(d as u32);
    let total = outcome_moments(outcome, k + 1)?;
    let bases = (0..d)
        .map(|t| {
            let col: Vec<f64> = regressors.iter().skip(t).step_by(d).copied().collect();
            BSplineBasis::from_quantiles(&col, df)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut surface = SplineSurface { bases, coefficients: vec![0.0; k] };
    let (gram, rhs) = regressors
        .par_chunks(d * CHUNK)
        .zip(outcome.par_chunks(CHUNK))
        .map(|(xs, ys)| {
            let mut g = vec![0.0; k * k];
            let mut r = vec![0.0; k];
            let mut row = Vec::with_capacity(ORDER * ORDER);
            for (x, &y) in xs.chunks_exact(d).zip(ys) {
                surface.row(x, &mut row);
                for &(a, va) in &row {
                    r[a] += va * y;
                    for &(b, vb) in &row {
                        g[a * k + b] += va * vb;
                    }
                }
            }
            (g, r)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((vec![0.0; k * k], vec![0.0; k]), add_pairs);
    let mut gram = DMatrix::from_row_slice(k, k, &gram);
    // coefficients of basis functions with no data (e.g. the corners of a
    // tensor product under correlated regressors) are otherwise undetermined
    if d == 2 {
        gram += sparse_difference_penalty(&gram, df);
    }
    let beta = solve_normal(gram, DVector::from_vec(rhs))?;
    surface.coefficients = beta.iter().copied().collect();
    let fitted = |i: usize| surface.eval(&regressors[i * d..(i + 1) * d]);
    let sse_first = residual_pass(outcome, total.mean, 0.0, total.m2, fitted).sse;
    let res = residual_pass(outcome, total.mean, sse_first, total.m2, fitted);
    let fit = finish(total, res.sse, k, format!("cubic B-spline, {df} df per variable"), None, res.half_width);
    Ok((fit, surface))
}
