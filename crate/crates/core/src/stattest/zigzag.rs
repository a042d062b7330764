//! Law of the zigzag trajectory of a busy period in the geometric model.
//!
//! A trajectory with total rise `L` and `k` rises has probability
//! `(1-q)^{L-k} q^k (1-p)^{L-k} p^{k-1}` for Bernoulli(`p`) arrivals and
//! Geom(`q`) services, so it depends on the run lengths only through `(L, k)`.
//! The weight with the exponents of `p` and `q` exchanged,
//! `(1-p)^{L-k} p^k (1-q)^{L-k} q^{k-1}`, is that law times `p/q`, hence
//! identical to it after conditioning on any set of trajectories.

use std::collections::BTreeMap;

use serde_json::json;

use super::gof::{chi2_test, chi2_test_ddof, symmetry_test};
use super::report::ExperimentReport;
use super::{collect_until, tally};
use crate::error::Result;
use crate::queue_store::QueueTrace;
use crate::sampling::{draw_input, RateParams, SampledInput, Seed};

pub const ZIGZAG_RELATIVE: &str = "zigzag frequencies given L <= 4 ~ trajectory weight";
pub const ZIGZAG_ABSOLUTE: &str = "zigzag frequencies ~ exact trajectory law";

/// Largest total rise whose trajectories are tabulated one by one.
const MAX_RISE: i64 = 4;

/// Customers simulated per batch.
const BATCH_CUSTOMERS: usize = 20_000;

/// Every run-length vector `(u_1, d_1, .., u_k, d_k)` of a busy period with
/// total rise `rise`: positive runs, workload positive until the last run.
pub fn enumerate_zigzags(rise: i64) -> Vec<Vec<i64>> {
    fn grow(level: i64, left: i64, runs: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        for up in 1..=left {
            let level = level + up;
            runs.push(up);
            if up == left {
                runs.push(level);
                out.push(runs.clone());
                runs.pop();
            } else {
                for down in 1..level {
                    runs.push(down);
                    grow(level - down, left - up, runs, out);
                    runs.pop();
                }
            }
            runs.pop();
        }
    }
    let mut out = Vec::new();
    if rise > 0 {
        grow(0, rise, &mut Vec::new(), &mut out);
    }
    out
}

/// `(L, k)` of a run-length vector.
fn class(runs: &[i64]) -> (i64, usize) {
    (runs.iter().step_by(2).sum(), runs.len() / 2)
}

fn exact_probability(p: f64, q: f64, (rise, k): (i64, usize)) -> f64 {
    let flat = (rise - k as i64) as i32;
    ((1.0 - q) * (1.0 - p)).powi(flat) * q.powi(k as i32) * p.powi(k as i32 - 1)
}

fn swapped_weight(p: f64, q: f64, (rise, k): (i64, usize)) -> f64 {
    let flat = (rise - k as i64) as i32;
    ((1.0 - p) * (1.0 - q)).powi(flat) * p.powi(k as i32) * q.powi(k as i32 - 1)
}

/// Samples `busy_periods` complete busy periods of the Bernoulli(`p`) /
/// Geom(`q`) queue and tests their zigzag law; trajectories with rise above 4
/// are only counted.
pub fn zigzag_law_experiment(p: f64, q: f64, busy_periods: usize, seed: Seed) -> Result<ExperimentReport> {
    let params = RateParams::GeomGeom1 { arrival: p, service: q };
    params.validate()?;
    let samples: Vec<Option<Vec<i64>>> = collect_until(
        seed,
        busy_periods,
        |rng| {
            let SampledInput::Integer(input) = draw_input(rng, params, BATCH_CUSTOMERS).expect("validated") else {
                unreachable!("geometric input is integer-valued")
            };
            let trace = QueueTrace::build(input.epochs().to_vec(), input.marks().to_vec(), 0).expect("valid input");
            let mut zz = trace.zigzags();
            zz.pop();
            zz.into_iter()
                .map(|z| (z.total() <= MAX_RISE).then_some(z.run_lengths))
                .collect()
        },
        |_, _| Ok(()),
    )?;

    let mut report = ExperimentReport::new(
        "zigzag-law",
        json!({ "p": p, "q": q, "busy_periods": busy_periods }),
        seed,
    );
    let counts = tally(samples.iter().flatten().cloned());
    let trajectories: Vec<Vec<i64>> = (1..=MAX_RISE).flat_map(enumerate_zigzags).collect();
    let observed: Vec<u64> = trajectories
        .iter()
        .map(|t| counts.get(t).copied().unwrap_or(0))
        .collect();
    let small: u64 = observed.iter().sum();
    let total = samples.len() as f64;

    let weights: Vec<f64> = trajectories.iter().map(|t| swapped_weight(p, q, class(t))).collect();
    let weight_sum: f64 = weights.iter().sum();
    let expected: Vec<f64> = weights.iter().map(|w| small as f64 * w / weight_sum).collect();
    report.test(chi2_test(&observed, &expected)?.named(ZIGZAG_RELATIVE));

    let exact: Vec<f64> = trajectories.iter().map(|t| exact_probability(p, q, class(t))).collect();
    let exact_small: f64 = exact.iter().sum();
    let mut observed_all = observed.clone();
    observed_all.push(samples.len() as u64 - small);
    let mut expected_all: Vec<f64> = exact.iter().map(|e| total * e).collect();
    expected_all.push(total * (1.0 - exact_small));
    report.test(chi2_test(&observed_all, &expected_all)?.named(ZIGZAG_ABSOLUTE));

    let mut classes: BTreeMap<(i64, usize), (u64, usize)> = BTreeMap::new();
    for (t, &o) in trajectories.iter().zip(&observed) {
        let entry = classes.entry(class(t)).or_default();
        entry.0 += o;
        entry.1 += 1;
    }
    let uniform: Vec<f64> = trajectories
        .iter()
        .map(|t| {
            let (n, size) = classes[&class(t)];
            n as f64 / size as f64
        })
        .collect();
    report.test(chi2_test_ddof(&observed, &uniform, classes.len() - 1)?.named("equiprobability within (L, k) classes"));

    let pairs: Vec<(u64, u64)> = trajectories
        .iter()
        .filter_map(|t| {
            let rev: Vec<i64> = t.iter().rev().copied().collect();
            (*t < rev).then(|| {
                (
                    counts.get(t).copied().unwrap_or(0),
                    counts.get(&rev).copied().unwrap_or(0),
                )
            })
        })
        .collect();
    report.test(symmetry_test(&pairs)?.named("time-reversal symmetry"));

    let empirical = small as f64 / total;
    let swapped: f64 = weights.iter().sum();
    let se = (exact_small * (1.0 - exact_small) / total).sqrt();
    report.diagnostic(
        "mass of L <= 4 under the swapped weight",
        swapped,
        (empirical - swapped).abs() > 4.0 * se,
        format!("empirical {empirical:.5}, exact law {exact_small:.5}; the swapped weight sums to p/q overall"),
    );
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::queue_store::zigzag;
    use std::collections::BTreeSet;

    fn compositions(total: i64, parts: usize) -> Vec<Vec<i64>> {
        if parts == 1 {
            return vec![vec![total]];
        }
        (1..total)
            .flat_map(|first| {
                compositions(total - first, parts - 1).into_iter().map(move |mut rest| {
                    rest.insert(0, first);
                    rest
                })
            })
            .collect()
    }

    fn brute_force(rise: i64) -> BTreeSet<Vec<i64>> {
        let mut out = BTreeSet::new();
        for k in 1..=rise as usize {
            for s in compositions(rise, k) {
                let mut gaps = vec![1i64; k - 1];
                loop {
                    if let Ok(z) = zigzag(&s, &gaps) {
                        out.insert(z.run_lengths);
                    }
                    match gaps.iter().position(|&g| g < rise) {
                        Some(i) => {
                            gaps[i] += 1;
                            gaps[..i].iter_mut().for_each(|g| *g = 1);
                        }
                        None => break,
                    }
                }
            }
        }
        out
    }

    #[test]
    fn enumeration_matches_brute_force() {
        assert_eq!(enumerate_zigzags(1), vec![vec![1, 1]]);
        assert_eq!(enumerate_zigzags(2), vec![vec![2, 2]]);
        assert_eq!(enumerate_zigzags(3), vec![vec![2, 1, 1, 2], vec![3, 3]]);
        for rise in 1..=6 {
            let listed: BTreeSet<Vec<i64>> = enumerate_zigzags(rise).into_iter().collect();
            assert_eq!(listed, brute_force(rise), "rise {rise}");
        }
    }

    /// Number of trajectories with total rise `rise` and `k` rises, by `k`.
    fn class_sizes(rise: i64, memo: &mut BTreeMap<(i64, i64), Vec<f64>>) -> Vec<f64> {
        fn count(level: i64, left: i64, memo: &mut BTreeMap<(i64, i64), Vec<f64>>) -> Vec<f64> {
            if left == 0 {
                return vec![1.0];
            }
            if let Some(v) = memo.get(&(level, left)) {
                return v.clone();
            }
            let mut out = vec![0.0; left as usize + 1];
            for up in 1..=left {
                let top = level + up;
                let rest: Vec<Vec<f64>> = if up == left {
                    vec![count(0, 0, memo)]
                } else {
                    (1..top).map(|down| count(top - down, left - up, memo)).collect()
                };
                for v in rest {
                    for (k, c) in v.iter().enumerate() {
                        out[k + 1] += c;
                    }
                }
            }
            memo.insert((level, left), out.clone());
            out
        }
        count(0, rise, memo)
    }

    #[test]
    fn class_sizes_match_enumeration() {
        for rise in 1..=7 {
            let mut sizes = vec![0.0; rise as usize + 1];
            enumerate_zigzags(rise).iter().for_each(|t| sizes[class(t).1] += 1.0);
            assert_eq!(sizes, class_sizes(rise, &mut BTreeMap::new()));
        }
    }

    #[test]
    fn exact_law_sums_to_one_and_swapped_weight_to_p_over_q() {
        let (p, q) = (0.3, 0.7);
        let (mut exact, mut swapped) = (0.0, 0.0);
        let mut memo = BTreeMap::new();
        for rise in 1..=130 {
            for (k, size) in class_sizes(rise, &mut memo).into_iter().enumerate().skip(1) {
                exact += size * exact_probability(p, q, (rise, k));
                swapped += size * swapped_weight(p, q, (rise, k));
            }
        }
        assert!((exact - 1.0).abs() < 1e-9, "{exact}");
        assert!((swapped - p / q).abs() < 1e-9, "{swapped}");
    }

    #[test]
    fn single_customer_class() {
        assert!((exact_probability(0.3, 0.7, (1, 1)) - 0.7).abs() < 1e-15);
    }
}
