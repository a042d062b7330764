//! Goodness-of-fit, two-sample and independence tests.

use serde::Serialize;
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

/// Significance level used throughout unless a caller overrides it.
pub const ALPHA: f64 = 0.01;

/// Minimum expected count per chi-square cell after pooling.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GofResult {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    /// Degrees of freedom of chi-square tests.
    pub dof: Option<usize>,
    pub n_samples: u64,
    pub alpha: f64,
    pub passed: bool,
}

impl GofResult {
    fn new(statistic: f64, p_value: f64, n_samples: u64, dof: Option<usize>) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        GofResult {
            name: String::new(),
            statistic,
            p_value,
            dof,
            n_samples,
            alpha: ALPHA,
            passed: p_value >= ALPHA,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn at_level(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self.passed = self.p_value >= alpha;
        self
    }
}

fn degenerate(msg: impl Into<String>) -> Error {
    Error::DegenerateTest(msg.into())
}

/// `P{K > λ}` for the Kolmogorov distribution.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let a = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let jf = f64::from(j);
        let term = sign * 2.0 * (a * jf * jf).exp();
        sum += term;
        if term.abs() <= 1e-12 * sum.abs() || term.abs() < 1e-300 {
            return sum.clamp(0.0, 1.0);
        }
        sign = -sign;
    }
    1.0
}

/// Asymptotic p-value with the usual small-sample correction.
fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let root = effective_n.sqrt();
    kolmogorov_tail((root + 0.12 + 0.11 / root) * d)
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample Kolmogorov-Smirnov test against a continuous cdf.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<GofResult> {
    if sample.is_empty() {
        return Err(degenerate("KS test on an empty sample"));
    }
    let xs = sorted(sample);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Ok(GofResult::new(d, ks_p_value(d, n), xs.len() as u64, None))
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<GofResult> {
    if a.is_empty() || b.is_empty() {
        return Err(degenerate("KS test on an empty sample"));
    }
    let (xa, xb) = (sorted(a), sorted(b));
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    Ok(GofResult::new(d, ks_p_value(d, ne), (xa.len() + xb.len()) as u64, None))
}

fn chi2_p_value(statistic: f64, dof: usize) -> f64 {
    if statistic.is_infinite() {
        0.0
    } else if statistic <= 0.0 {
        1.0
    } else {
        gamma_ur(dof as f64 / 2.0, statistic / 2.0)
    }
}

/// Merges every cell with expected count below 5 into one pooled cell, and
/// that cell into the smallest remaining one if it is still too small.
fn pool(observed: &[f64], expected: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (mut obs, mut exp) = (Vec::new(), Vec::new());
    let (mut pooled_o, mut pooled_e) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        if e >= MIN_EXPECTED {
            obs.push(o);
            exp.push(e);
        } else {
            pooled_o += o;
            pooled_e += e;
        }
    }
    if pooled_e >= MIN_EXPECTED || (pooled_e == 0.0 && pooled_o > 0.0) {
        obs.push(pooled_o);
        exp.push(pooled_e);
    } else if pooled_e > 0.0 || pooled_o > 0.0 {
        match exp.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) {
            Some((i, _)) => {
                obs[i] += pooled_o;
                exp[i] += pooled_e;
            }
            None => {
                obs.push(pooled_o);
                exp.push(pooled_e);
            }
        }
    }
    (obs, exp)
}

fn chi2_statistic(obs: &[f64], exp: &[f64]) -> f64 {
    obs.iter()
        .zip(exp)
        .map(|(&o, &e)| {
            if e == 0.0 {
                if o == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (o - e) * (o - e) / e
            }
        })
        .sum()
}

/// Pearson goodness of fit; `expected` must carry the same total as
/// `observed`.
pub fn chi2_test(observed: &[u64], expected: &[f64]) -> Result<GofResult> {
    chi2_test_ddof(observed, expected, 0)
}

/// As [`chi2_test`], removing `ddof` extra degrees of freedom for fitted
/// parameters.
pub fn chi2_test_ddof(observed: &[u64], expected: &[f64], ddof: usize) -> Result<GofResult> {
    if observed.len() != expected.len() {
        return Err(Error::InvalidParameter("observed and expected differ in length".into()));
    }
    let total: u64 = observed.iter().sum();
    let expected_total: f64 = expected.iter().sum();
    if (total as f64 - expected_total).abs() > 1e-9 * expected_total.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "expected counts sum to {expected_total}, observed to {total}"
        )));
    }
    let obs: Vec<f64> = observed.iter().map(|&o| o as f64).collect();
    let (obs, exp) = pool(&obs, expected);
    if obs.len() < ddof + 2 {
        return Err(degenerate(format!("{} cell(s) left after pooling", obs.len())));
    }
    let dof = obs.len() - 1 - ddof;
    let stat = chi2_statistic(&obs, &exp);
    Ok(GofResult::new(stat, chi2_p_value(stat, dof), total, Some(dof)))
}

/// Chi-square test of homogeneity for two samples tallied on the same cells.
pub fn chi2_two_sample(a: &[u64], b: &[u64]) -> Result<GofResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter("samples are tallied on different cells".into()));
    }
    let table = vec![a.to_vec(), b.to_vec()];
    let (stat, dof, n) = contingency(table, false)?;
    Ok(GofResult::new(stat, chi2_p_value(stat, dof), n, Some(dof)))
}

/// Chi-square test of independence on a contingency table; rows and columns
/// are ordered categories, and sparse ones are merged with a neighbour.
pub fn chi2_independence(table: &[Vec<u64>]) -> Result<GofResult> {
    let (stat, dof, n) = contingency(table.to_vec(), true)?;
    Ok(GofResult::new(stat, chi2_p_value(stat, dof), n, Some(dof)))
}

fn transpose(t: &[Vec<u64>]) -> Vec<Vec<u64>> {
    (0..t[0].len()).map(|c| t.iter().map(|r| r[c]).collect()).collect()
}

/// Merges the sparsest line of `t` into its sparser neighbour.
fn merge_sparsest(t: &mut Vec<Vec<u64>>) {
    let totals: Vec<u64> = t.iter().map(|r| r.iter().sum()).collect();
    let i = (0..t.len()).min_by_key(|&i| totals[i]).expect("nonempty");
    let j = match (i.checked_sub(1), (i + 1 < t.len()).then_some(i + 1)) {
        (Some(l), Some(r)) => {
            if totals[l] <= totals[r] {
                l
            } else {
                r
            }
        }
        (Some(l), None) => l,
        (None, Some(r)) => r,
        (None, None) => return,
    };
    let row = t.remove(i);
    let j = if j > i { j - 1 } else { j };
    for (x, y) in t[j].iter_mut().zip(row) {
        *x += y;
    }
}

/// Pearson statistic of a table after merging sparse columns (and rows, when
/// `merge_rows`) until every expected cell reaches 5.
fn contingency(mut t: Vec<Vec<u64>>, merge_rows: bool) -> Result<(f64, usize, u64)> {
    if t.len() < 2 || t[0].is_empty() || t.iter().any(|r| r.len() != t[0].len()) {
        return Err(degenerate("contingency table needs two rows of equal length"));
    }
    let mut cols = transpose(&t);
    cols.retain(|c| c.iter().sum::<u64>() > 0);
    t.retain(|r| r.iter().sum::<u64>() > 0);
    if cols.is_empty() || t.len() < 2 {
        return Err(degenerate("a sample is empty"));
    }
    t = transpose(&cols);
    loop {
        let n = t.iter().flatten().sum::<u64>() as f64;
        let rows: Vec<f64> = t.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
        let cols: Vec<f64> = transpose(&t).iter().map(|c| c.iter().sum::<u64>() as f64).collect();
        if t.len() < 2 || cols.len() < 2 {
            return Err(degenerate("fewer than two categories left after pooling"));
        }
        let min_row = rows.iter().copied().fold(f64::INFINITY, f64::min);
        let min_col = cols.iter().copied().fold(f64::INFINITY, f64::min);
        let sparse = min_row * min_col / n < MIN_EXPECTED;
        if sparse && merge_rows && min_row < min_col && t.len() > 2 {
            merge_sparsest(&mut t);
        } else if sparse && cols.len() > 2 {
            let mut tc = transpose(&t);
            merge_sparsest(&mut tc);
            t = transpose(&tc);
        } else if sparse && merge_rows && t.len() > 2 {
            merge_sparsest(&mut t);
        } else {
            let mut stat = 0.0;
            for (r, row) in t.iter().enumerate() {
                for (c, &o) in row.iter().enumerate() {
                    let e = rows[r] * cols[c] / n;
                    stat += (o as f64 - e).powi(2) / e;
                }
            }
            return Ok((stat, (t.len() - 1) * (cols.len() - 1), n as u64));
        }
    }
}

/// Lag-1 autocorrelation `ρ̂` with `√n ρ̂` compared to a standard normal.
pub fn lag1_test(xs: &[f64]) -> Result<GofResult> {
    if xs.len() < 3 {
        return Err(degenerate("lag-1 test needs at least three values"));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    if var == 0.0 {
        return Err(degenerate("constant sequence"));
    }
    let cov: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    let rho = cov / var;
    let z = rho * n.sqrt();
    Ok(GofResult::new(
        rho,
        erfc(z.abs() / std::f64::consts::SQRT_2),
        xs.len() as u64,
        None,
    ))
}

/// Welch z-test for equal means of two large samples.
pub fn mean_test(a: &[f64], b: &[f64]) -> Result<GofResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(degenerate("mean test needs two values per sample"));
    }
    let moments = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v / n)
    };
    let ((ma, va), (mb, vb)) = (moments(a), moments(b));
    if va + vb == 0.0 {
        let p = if ma == mb { 1.0 } else { 0.0 };
        return Ok(GofResult::new(0.0, p, (a.len() + b.len()) as u64, None));
    }
    let z = (ma - mb) / (va + vb).sqrt();
    Ok(GofResult::new(
        z,
        erfc(z.abs() / std::f64::consts::SQRT_2),
        (a.len() + b.len()) as u64,
        None,
    ))
}

/// Symmetry of paired counts: each pair is split evenly under the null.
/// Pairs with fewer than 10 observations are added together first.
pub fn symmetry_test(pairs: &[(u64, u64)]) -> Result<GofResult> {
    let mut cells: Vec<(u64, u64)> = Vec::new();
    let mut rest = (0, 0);
    for &(x, y) in pairs {
        if x + y >= 10 {
            cells.push((x, y));
        } else {
            rest = (rest.0 + x, rest.1 + y);
        }
    }
    if rest.0 + rest.1 > 0 {
        cells.push(rest);
    }
    if cells.is_empty() {
        return Err(degenerate("no paired observations"));
    }
    let stat: f64 = cells
        .iter()
        .map(|&(x, y)| (x as f64 - y as f64).powi(2) / (x + y) as f64)
        .sum();
    let n = cells.iter().map(|&(x, y)| x + y).sum();
    Ok(GofResult::new(
        stat,
        chi2_p_value(stat, cells.len()),
        n,
        Some(cells.len()),
    ))
}
