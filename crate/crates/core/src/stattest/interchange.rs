//! Interchangeability of the stages of a saturated tandem: permuting the
//! geometric parameters leaves the law of `(D^(n), R^(n))_n` unchanged.

use serde_json::json;

use super::gof::{chi2_two_sample, mean_test};
use super::report::ExperimentReport;
use super::{align, geometric_matrix, run_batches, tally};
use crate::error::{invalid, Result};
use crate::sampling::Seed;
use crate::schur::WeightVector;
use crate::tandem::tandem_outputs;

pub const INTERCHANGE_JOINT: &str = "joint law of (D, R) after N customers";
pub const INTERCHANGE_PREFIX: &str = "law of the departure sequence D^(1..N)";
pub const INTERCHANGE_MEAN: &str = "mean of D^(N)";

type Outputs = (Vec<u64>, Vec<u64>);

fn sample(q: &WeightVector, n: usize, reps: usize, seed: Seed) -> Vec<Outputs> {
    run_batches(seed, reps, |rng, size| {
        (0..size)
            .map(|_| tandem_outputs(&geometric_matrix(rng, q, n), n).expect("n >= 1"))
            .collect()
    })
}

/// Compares the tandem with weights `q` against the tandem with weights
/// `q[order[0]], q[order[1]], ..`.
pub fn interchange_experiment(
    q: &WeightVector,
    order: &[usize],
    n: usize,
    reps: usize,
    seed: Seed,
) -> Result<ExperimentReport> {
    if n == 0 {
        return Err(invalid("at least one customer is required"));
    }
    let permuted = q.permuted(order)?;
    let base = sample(q, n, reps, seed.with_stream(seed.stream ^ 1));
    let other = sample(&permuted, n, reps, seed.with_stream(seed.stream ^ 2));

    let mut report = ExperimentReport::new(
        "interchange",
        json!({ "q": q, "order": order, "n": n, "reps": reps }),
        seed,
    );
    let last = |s: &[Outputs]| tally(s.iter().map(|(d, r)| (d[n - 1], r[n - 1])));
    let (x, y) = align(&last(&base), &last(&other));
    report.test(chi2_two_sample(&x, &y)?.named(INTERCHANGE_JOINT));
    let prefix = |s: &[Outputs]| tally(s.iter().map(|(d, _)| d.clone()));
    let (x, y) = align(&prefix(&base), &prefix(&other));
    report.test(chi2_two_sample(&x, &y)?.named(INTERCHANGE_PREFIX));
    let means = |s: &[Outputs]| s.iter().map(|(d, _)| d[n - 1] as f64).collect::<Vec<_>>();
    report.test(mean_test(&means(&base), &means(&other))?.named(INTERCHANGE_MEAN));
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_order_passes() {
        let q = WeightVector::new(vec![0.3, 0.6]).unwrap();
        let report = interchange_experiment(&q, &[0, 1], 3, 20_000, Seed::new(3)).unwrap();
        assert!(report.verdict, "{}", report.to_json());
    }

    #[test]
    fn distinct_weights_are_told_apart_from_a_different_tandem() {
        let q = WeightVector::new(vec![0.3, 0.6]).unwrap();
        let base = sample(&q, 3, 20_000, Seed::new(1));
        let other = sample(&WeightVector::new(vec![0.3, 0.5]).unwrap(), 3, 20_000, Seed::new(2));
        let last = |s: &[Outputs]| tally(s.iter().map(|(d, r)| (d[2], r[2])));
        let (x, y) = align(&last(&base), &last(&other));
        assert!(!chi2_two_sample(&x, &y).unwrap().passed);
    }

    #[test]
    fn bad_orders_are_rejected() {
        let q = WeightVector::new(vec![0.3, 0.6]).unwrap();
        assert!(interchange_experiment(&q, &[0, 0], 3, 10, Seed::new(1)).is_err());
    }
}
