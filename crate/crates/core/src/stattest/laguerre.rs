//! Smallest-eigenvalue check: for an `N x N` matrix of mean-one exponential
//! services, the total store output `R` after `N` slots.

use serde_json::json;

use super::gof::ks_test;
use super::report::{Check, ExperimentReport};
use super::run_batches;
use crate::error::{invalid, Result};
use crate::sampling::{draw_exponential, Seed};
use crate::tandem::{store_flow, ServiceMatrix};

pub const LAGUERRE_KS: &str = "R ~ Exponential(mean K)";
pub const LAGUERRE_MEAN: &str = "sample mean of R in [0.98 K, 1.02 K]";
pub const LAGUERRE_MIN_RATE: &str = "R ~ Exponential(rate K)";

/// `reps` draws of `R` for `K x K` matrices of Exp(1) entries.
pub fn laguerre_sample(k: usize, reps: usize, seed: Seed) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(invalid("K must be at least 1"));
    }
    Ok(run_batches(seed, reps, |rng, size| {
        (0..size)
            .map(|_| {
                let u = ServiceMatrix::from_rows(
                    (0..k)
                        .map(|_| (0..k).map(|_| draw_exponential(rng, 1.0)).collect())
                        .collect(),
                )
                .expect("square");
                store_flow(&u).total()
            })
            .collect()
    }))
}

/// Tests `R` against the exponential law of mean `K`. The exponential law of
/// mean `1/K` is tested alongside, since `R` is then the minimum of the `K`
/// anti-diagonal entries.
pub fn laguerre_check(k: usize, reps: usize, seed: Seed) -> Result<ExperimentReport> {
    let r = laguerre_sample(k, reps, seed)?;
    let kf = k as f64;
    let mut report = ExperimentReport::new("laguerre", json!({ "k": k, "reps": reps }), seed);
    report.test(ks_test(&r, |x| exp_cdf(x, 1.0 / kf))?.named(LAGUERRE_KS));
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    report.check(Check::within(LAGUERRE_MEAN, mean, 0.98 * kf, 1.02 * kf));
    report.diagnostic(
        LAGUERRE_MIN_RATE,
        ks_test(&r, |x| exp_cdf(x, kf))?.p_value,
        false,
        format!("KS p-value against rate {k}; sample mean {mean:.5}"),
    );
    Ok(report.finish())
}

fn exp_cdf(x: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-rate * x).exp_m1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_stage_is_the_entry() {
        let report = laguerre_check(1, 50_000, Seed::new(2)).unwrap();
        assert!(report.verdict, "{}", report.to_json());
    }

    #[test]
    fn square_tandem_output_is_the_anti_diagonal_minimum() {
        let r = laguerre_sample(3, 100_000, Seed::new(4)).unwrap();
        assert!(ks_test(&r, |x| exp_cdf(x, 3.0)).unwrap().passed);
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        assert!((mean - 1.0 / 3.0).abs() < 0.01, "{mean}");
    }
}
