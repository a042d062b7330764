//! Joint output theorem: after burn-in, the departure gaps and the dual marks
//! of a stable queue are i.i.d. with the input laws and mutually independent.

use super::gof::{chi2_independence, chi2_test, ks_test, lag1_test, GofResult};
use super::report::ExperimentReport;
use crate::error::{invalid, Result};
use crate::queue_store::QueueTrace;
use crate::sampling::{sample_input, RateParams, SampledInput, Seed};

pub const BURKE_GAPS: &str = "departure gaps ~ arrival gap law";
pub const BURKE_MARKS: &str = "dual marks ~ service law";
pub const BURKE_INDEPENDENCE: &str = "dual mark independent of departure gap";

/// Number of batches used for batch-means diagnostics.
const BATCHES: usize = 20;

pub fn burke_experiment(params: RateParams, horizon: usize, burn_in: usize, seed: Seed) -> Result<ExperimentReport> {
    params.validate()?;
    if horizon < 2 * BATCHES {
        return Err(invalid(format!("horizon must be at least {}", 2 * BATCHES)));
    }
    let mut report = ExperimentReport::new("burke", serde_json::to_value(params).expect("params serialize"), seed);
    report.burn_in = Some(burn_in as u64);
    report.horizon = Some(horizon as u64);
    let customers = burn_in + horizon + 1;
    let (lambda, mu) = (params.arrival(), params.service());
    let waits = match sample_input(params, customers, seed)? {
        SampledInput::Integer(input) => {
            let trace = QueueTrace::build(input.epochs().to_vec(), input.marks().to_vec(), 0)?;
            let d = &trace.departure_gaps()[burn_in..];
            let r = &trace.dual()[burn_in..];
            report.test(geometric_fit(d, lambda)?.named(BURKE_GAPS));
            report.test(geometric_fit(r, mu)?.named(BURKE_MARKS));
            report.test(integer_independence(d, r)?.named(BURKE_INDEPENDENCE));
            lag_tests(&mut report, &to_f64(d), &to_f64(r))?;
            to_f64(&trace.waits()[burn_in + 1..])
        }
        SampledInput::Real(input) => {
            let trace = QueueTrace::build(input.epochs().to_vec(), input.marks().to_vec(), 0.0)?;
            let d = &trace.departure_gaps()[burn_in..];
            let r = &trace.dual()[burn_in..];
            report.test(ks_test(d, |x| exp_cdf(x, lambda))?.named(BURKE_GAPS));
            report.test(ks_test(r, |x| exp_cdf(x, mu))?.named(BURKE_MARKS));
            report.test(decile_independence(d, r, lambda, mu)?.named(BURKE_INDEPENDENCE));
            lag_tests(&mut report, d, r)?;
            trace.waits()[burn_in + 1..].to_vec()
        }
    };
    burn_in_diagnostics(&mut report, params, burn_in, &waits);
    Ok(report.finish())
}

fn to_f64(xs: &[i64]) -> Vec<f64> {
    xs.iter().map(|&x| x as f64).collect()
}

fn exp_cdf(x: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-rate * x).exp_m1()
    }
}

/// Chi-square fit of values on `{1, 2, ..}` to `P{X = k} = (1-p)^{k-1} p`,
/// with everything above the largest observation in one tail cell.
fn geometric_fit(xs: &[i64], p: f64) -> Result<GofResult> {
    let cap = xs.iter().copied().max().unwrap_or(1).max(1) as usize;
    let mut observed = vec![0u64; cap + 1];
    for &x in xs {
        if x < 1 {
            return Err(invalid(format!("value {x} outside the geometric support")));
        }
        observed[x as usize - 1] += 1;
    }
    let n = xs.len() as f64;
    let mut expected: Vec<f64> = (1..=cap).map(|k| n * p * (1.0 - p).powi(k as i32 - 1)).collect();
    expected.push(n * (1.0 - p).powi(cap as i32));
    let scale = n / expected.iter().sum::<f64>();
    expected.iter_mut().for_each(|e| *e *= scale);
    chi2_test(&observed, &expected)
}

fn integer_independence(d: &[i64], r: &[i64]) -> Result<GofResult> {
    const CAP: usize = 40;
    let mut table = vec![vec![0u64; CAP]; CAP];
    for (&x, &y) in d.iter().zip(r) {
        let i = (x.max(1) as usize).min(CAP) - 1;
        let j = (y.max(1) as usize).min(CAP) - 1;
        table[i][j] += 1;
    }
    chi2_independence(&table)
}

/// Ten-by-ten table on the deciles of the two exponential laws.
fn decile_independence(d: &[f64], r: &[f64], lambda: f64, mu: f64) -> Result<GofResult> {
    let decile = |x: f64, rate: f64| ((exp_cdf(x, rate) * 10.0) as usize).min(9);
    let mut table = vec![vec![0u64; 10]; 10];
    for (&x, &y) in d.iter().zip(r) {
        table[decile(x, lambda)][decile(y, mu)] += 1;
    }
    chi2_independence(&table)
}

fn lag_tests(report: &mut ExperimentReport, d: &[f64], r: &[f64]) -> Result<()> {
    report.test(lag1_test(d)?.named("lag-1 correlation of departure gaps"));
    report.test(lag1_test(r)?.named("lag-1 correlation of dual marks"));
    Ok(())
}

fn burn_in_diagnostics(report: &mut ExperimentReport, params: RateParams, burn_in: usize, waits: &[f64]) {
    let (lambda, mu) = (params.arrival(), params.service());
    let relaxation = 1.0 / (mu.sqrt() - lambda.sqrt()).powi(2);
    report.diagnostic(
        "relaxation time",
        relaxation,
        (burn_in as f64) < 10.0 * relaxation,
        format!("burn-in of {burn_in} customers should exceed ten relaxation times"),
    );
    let size = waits.len() / BATCHES;
    let means: Vec<f64> = waits
        .chunks_exact(size)
        .take(BATCHES)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / BATCHES as f64;
    let sd = (means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (BATCHES - 1) as f64).sqrt();
    let head = means[..5].iter().sum::<f64>() / 5.0;
    let tail = means[BATCHES - 5..].iter().sum::<f64>() / 5.0;
    let drift = if sd > 0.0 {
        (tail - head) / (sd * (2.0f64 / 5.0).sqrt())
    } else {
        0.0
    };
    report.diagnostic(
        "waiting-time drift z",
        drift,
        drift.abs() > 3.0,
        "first versus last quarter of batch means of the waiting time",
    );
    if let RateParams::Mm1 { .. } = params {
        let target = (lambda / mu) / (mu - lambda);
        let z = if sd > 0.0 {
            (grand - target) / (sd / (BATCHES as f64).sqrt())
        } else {
            0.0
        };
        report.diagnostic(
            "mean waiting time z",
            z,
            z.abs() > 3.0,
            format!("batch-means estimate {grand:.4} against the stationary mean {target:.4}"),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_fit_accepts_its_own_law() {
        let xs: Vec<i64> = crate::sampling::sample_geometric(0.3, 50_000, Seed::new(4))
            .unwrap()
            .into_iter()
            .map(|x| x as i64)
            .collect();
        assert!(geometric_fit(&xs, 0.3).unwrap().passed);
        assert!(!geometric_fit(&xs, 0.35).unwrap().passed);
    }

    #[test]
    fn reports_are_reproducible() {
        let params = RateParams::GeomGeom1 {
            arrival: 0.3,
            service: 0.6,
        };
        let a = burke_experiment(params, 2_000, 500, Seed::new(9)).unwrap();
        let b = burke_experiment(params, 2_000, 500, Seed::new(9)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn unstable_parameters_are_rejected() {
        let params = RateParams::Mm1 {
            arrival: 0.8,
            service: 0.7,
        };
        assert!(burke_experiment(params, 1_000, 100, Seed::new(1)).is_err());
    }

    #[test]
    fn near_critical_short_burn_in_is_flagged() {
        let params = RateParams::Mm1 {
            arrival: 0.69,
            service: 0.7,
        };
        let report = burke_experiment(params, 20_000, 100, Seed::new(3)).unwrap();
        assert!(report.flagged().any(|d| d.name == "relaxation time"));
    }
}
