//! RSK shapes of random geometric matrices against the Schur-measure law and
//! the interlacing Markov chain it generates.

use std::collections::BTreeMap;

use serde_json::json;

use super::gof::{chi2_test, chi2_test_ddof, chi2_two_sample};
use super::report::ExperimentReport;
use super::{align, geometric_matrix, run_batches, tally};
use crate::error::{invalid, Result};
use crate::rsk::{Partition, Tableau};
use crate::sampling::Seed;
use crate::schur::{interlacing_with_first, partitions_with_first, ShapeLaw, WeightVector};

pub const SHAPE_LAW: &str = "RSK shape ~ a(q)^N s_l(q) s_l(1^N)";
pub const SHAPE_REVERSED: &str = "shape law with reversed weights";
pub const SHAPE_TRANSITIONS: &str = "one-row transitions ~ a(q) s_l(q) / s_m(q)";

/// Shapes after `n` and after `n + 1` rows of one matrix.
fn sample(q: &WeightVector, n: usize, reps: usize, seed: Seed) -> Vec<(Partition, Partition)> {
    let k = q.len();
    run_batches(seed, reps, |rng, size| {
        (0..size)
            .map(|_| {
                let u = geometric_matrix(rng, q, n + 1);
                let mut t = Tableau::default();
                let mut before = Partition::empty();
                for (i, row) in u.rows().enumerate() {
                    if i == n {
                        before = t.shape();
                    }
                    for (j, &count) in row.iter().enumerate().take(k) {
                        (0..count).for_each(|_| t.insert(j as u32 + 1));
                    }
                }
                (before, t.shape())
            })
            .collect()
    })
}

/// Goodness of fit of `observed` shapes: every partition with first part up
/// to the largest observed, plus one cell for the rest.
fn fit_cells(
    observed: &BTreeMap<Partition, u64>,
    candidates: impl Iterator<Item = Partition>,
    prob: impl FnMut(&Partition) -> f64,
    total: f64,
) -> (Vec<u64>, Vec<f64>) {
    let mut prob = prob;
    let (mut obs, mut exp): (Vec<u64>, Vec<f64>) = candidates
        .map(|l| (observed.get(&l).copied().unwrap_or(0), total * prob(&l)))
        .unzip();
    let listed: u64 = obs.iter().sum();
    let mass: f64 = exp.iter().sum();
    obs.push(total as u64 - listed);
    exp.push((total - mass).max(0.0));
    let scale = total / exp.iter().sum::<f64>();
    exp.iter_mut().for_each(|e| *e *= scale);
    (obs, exp)
}

pub fn shape_law_experiment(q: &WeightVector, n: usize, reps: usize, seed: Seed) -> Result<ExperimentReport> {
    if n == 0 {
        return Err(invalid("at least one row is required"));
    }
    let k = q.len();
    let pairs = sample(q, n, reps, seed.with_stream(seed.stream ^ 1));
    let mut report = ExperimentReport::new("shape-law", json!({ "q": q, "n": n, "reps": reps }), seed);
    let mut law = ShapeLaw::from_weights(q, n);

    let shapes = tally(pairs.iter().map(|(m, _)| m.clone()));
    let cap = shapes.keys().map(|l| l.part(1)).max().unwrap_or(0);
    let candidates = (0..=cap).flat_map(|first| partitions_with_first(first, k));
    let (obs, exp) = fit_cells(&shapes, candidates, |l| law.pmf(l), reps as f64);
    report.test(chi2_test(&obs, &exp)?.named(SHAPE_LAW));

    let reversed: Vec<usize> = (0..k).rev().collect();
    let other = sample(&q.permuted(&reversed)?, n, reps, seed.with_stream(seed.stream ^ 2));
    let (x, y) = align(&shapes, &tally(other.into_iter().map(|(m, _)| m)));
    report.test(chi2_two_sample(&x, &y)?.named(SHAPE_REVERSED));

    let mut groups: BTreeMap<Partition, BTreeMap<Partition, u64>> = BTreeMap::new();
    for (m, l) in &pairs {
        *groups.entry(m.clone()).or_default().entry(l.clone()).or_insert(0) += 1;
    }
    let (mut obs, mut exp) = (Vec::new(), Vec::new());
    for (m, next) in &groups {
        let count: u64 = next.values().sum();
        let top = next.keys().map(|l| l.part(1)).max().unwrap_or(0);
        let candidates = (m.part(1)..=top).flat_map(|first| interlacing_with_first(m, k, first));
        let (o, e) = fit_cells(next, candidates, |l| law.transition(m, l), count as f64);
        obs.extend(o);
        exp.extend(e);
    }
    report.test(chi2_test_ddof(&obs, &exp, groups.len() - 1)?.named(SHAPE_TRANSITIONS));
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_stage_shape_is_the_row_sum() {
        let q = WeightVector::new(vec![0.4]).unwrap();
        for (m, l) in sample(&q, 3, 200, Seed::new(1)) {
            assert!(m.length() <= 1 && l.length() <= 1);
            assert!(l.part(1) >= m.part(1));
        }
        let report = shape_law_experiment(&q, 3, 30_000, Seed::new(2)).unwrap();
        assert!(report.verdict, "{}", report.to_json());
    }

    #[test]
    fn small_two_stage_run_passes() {
        let q = WeightVector::new(vec![0.3, 0.5]).unwrap();
        let report = shape_law_experiment(&q, 2, 20_000, Seed::new(6)).unwrap();
        assert!(report.verdict, "{}", report.to_json());
    }
}
