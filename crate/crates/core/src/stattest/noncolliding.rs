//! Non-colliding representation: conditioned on the arrival walk staying
//! strictly ahead of the shifted service walk, the pair of partial sums has
//! the unconditional law of the max / min prefix functionals.

use rand::Rng;
use serde_json::json;

use super::gof::chi2_two_sample;
use super::report::ExperimentReport;
use super::{align, collect_until, tally};
use crate::error::{invalid, Error, Result};
use crate::queue_store::representation;
use crate::sampling::{draw_exponential, draw_geometric, RateParams, Seed};

pub const NONCOLLIDING_JOINT: &str = "conditional partial sums ~ prefix functionals";

/// Conditioning attempts per batch.
const ATTEMPTS: usize = 4096;
const MIN_ACCEPTANCE: f64 = 1e-4;
const MIN_ATTEMPTS: u64 = 1_000_000;
/// Bins per coordinate for the continuous model.
const QUANTILE_BINS: usize = 6;

fn draw_pair<R: Rng + ?Sized>(rng: &mut R, params: RateParams) -> (f64, f64) {
    match params {
        RateParams::Mm1 { arrival, service } => (draw_exponential(rng, arrival), draw_exponential(rng, service)),
        RateParams::GeomGeom1 { arrival, service } => {
            (draw_geometric(rng, arrival) as f64, draw_geometric(rng, service) as f64)
        }
    }
}

/// One attempt: draws `a_1..a_trunc`, `s_1..s_{trunc+1}` and, if
/// `a_1 + .. + a_k > s_2 + .. + s_{k+1}` for every `k <= trunc`, returns
/// `(a_1 + .. + a_n, s_2 + .. + s_n)`.
pub fn conditional_sample<R: Rng + ?Sized>(
    rng: &mut R,
    params: RateParams,
    n: usize,
    trunc: usize,
) -> Option<(f64, f64)> {
    let mut ahead = 0.0;
    let mut sums = (0.0, 0.0);
    let mut accepted = true;
    draw_pair(rng, params);
    for k in 1..=trunc {
        let (a, s) = draw_pair(rng, params);
        ahead += a - s;
        if k <= n {
            sums.0 += a;
        }
        if k < n {
            sums.1 += s;
        }
        accepted &= ahead > 0.0;
    }
    accepted.then_some(sums)
}

fn acceptance_guard(attempts: u64, accepted: usize) -> Result<()> {
    let rate = accepted as f64 / attempts as f64;
    if attempts >= MIN_ATTEMPTS && rate < MIN_ACCEPTANCE {
        Err(Error::Infeasible { rate, attempts })
    } else {
        Ok(())
    }
}

/// The unconditional pair `(max_j .., min_j ..)` of order `n`.
pub fn representation_sample<R: Rng + ?Sized>(rng: &mut R, params: RateParams, n: usize) -> (f64, f64) {
    let (a, s): (Vec<f64>, Vec<f64>) = (0..=n).map(|_| draw_pair(rng, params)).unzip();
    representation(&a[..n], &s, n).expect("enough terms")
}

pub fn noncolliding_experiment(
    params: RateParams,
    n: usize,
    trunc: usize,
    reps: usize,
    seed: Seed,
) -> Result<ExperimentReport> {
    params.validate()?;
    if n == 0 || trunc < n {
        return Err(invalid(format!("need 1 <= n <= trunc, got n = {n}, trunc = {trunc}")));
    }
    let mut seen = (0, 0);
    let conditional = collect_until(
        seed,
        reps,
        |rng| {
            (0..ATTEMPTS)
                .filter_map(|_| conditional_sample(rng, params, n, trunc))
                .collect()
        },
        |batches, accepted| {
            seen = (batches * ATTEMPTS as u64, accepted);
            acceptance_guard(seen.0, accepted)
        },
    )?;
    let acceptance = seen.1 as f64 / seen.0 as f64;
    let unconditional = collect_until(
        seed.with_stream(seed.stream ^ (1 << 63)),
        reps,
        |rng| (0..ATTEMPTS).map(|_| representation_sample(rng, params, n)).collect(),
        |_, _| Ok(()),
    )?;

    let mut report = ExperimentReport::new(
        "noncolliding",
        json!({ "input": params, "n": n, "trunc": trunc, "reps": reps }),
        seed,
    );
    let (x, y) = match params {
        RateParams::GeomGeom1 { .. } => {
            let key = |&(a, s): &(f64, f64)| (a as i64, s as i64);
            align(
                &tally(conditional.iter().map(key)),
                &tally(unconditional.iter().map(key)),
            )
        }
        RateParams::Mm1 { .. } => {
            let bin = QuantileGrid::new(&conditional, &unconditional);
            align(
                &tally(conditional.iter().map(|v| bin.cell(v))),
                &tally(unconditional.iter().map(|v| bin.cell(v))),
            )
        }
    };
    report.test(chi2_two_sample(&x, &y)?.named(NONCOLLIDING_JOINT));
    report.diagnostic(
        "acceptance rate",
        acceptance,
        acceptance < MIN_ACCEPTANCE,
        format!("{} accepted out of {} attempts", seen.1, seen.0),
    );
    Ok(report.finish())
}

/// Product grid of pooled quantiles of the two coordinates.
struct QuantileGrid {
    cuts: [Vec<f64>; 2],
}

impl QuantileGrid {
    fn new(a: &[(f64, f64)], b: &[(f64, f64)]) -> Self {
        let cuts = |coord: fn(&(f64, f64)) -> f64| {
            let mut v: Vec<f64> = a.iter().chain(b).map(coord).collect();
            v.sort_by(f64::total_cmp);
            let mut c: Vec<f64> = (1..QUANTILE_BINS).map(|i| v[i * v.len() / QUANTILE_BINS]).collect();
            c.dedup();
            c
        };
        QuantileGrid {
            cuts: [cuts(|p| p.0), cuts(|p| p.1)],
        }
    }

    fn cell(&self, &(x, y): &(f64, f64)) -> (usize, usize) {
        let find = |cuts: &[f64], v: f64| cuts.partition_point(|&c| c <= v);
        (find(&self.cuts[0], x), find(&self.cuts[1], y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    const GEOM: RateParams = RateParams::GeomGeom1 {
        arrival: 0.3,
        service: 0.7,
    };

    #[test]
    fn order_one_is_a_single_term() {
        let mut rng = Seed::new(2).rng();
        for _ in 0..1000 {
            let (a, s): (Vec<f64>, Vec<f64>) = (0..2).map(|_| draw_pair(&mut rng, GEOM)).unzip();
            assert_eq!(representation(&a[..1], &s, 1).unwrap(), (a[0] + s[1], 0.0));
        }
    }

    #[test]
    fn truncation_is_stable() {
        let tallies: Vec<BTreeMap<(i64, i64), u64>> = [25, 50]
            .iter()
            .map(|&trunc| {
                let xs = collect_until(
                    Seed::new(8).with_stream(trunc as u64),
                    40_000,
                    |rng| {
                        (0..ATTEMPTS)
                            .filter_map(|_| conditional_sample(rng, GEOM, 3, trunc))
                            .collect()
                    },
                    |_, _| Ok(()),
                )
                .unwrap();
                tally(xs.iter().map(|&(a, s)| (a as i64, s as i64)))
            })
            .collect();
        let (x, y) = align(&tallies[0], &tallies[1]);
        assert!(chi2_two_sample(&x, &y).unwrap().passed);
    }

    #[test]
    fn rare_events_are_infeasible() {
        assert!(acceptance_guard(999_424, 10).is_ok());
        assert!(acceptance_guard(1_003_520, 101).is_ok());
        let err = acceptance_guard(1_003_520, 99).unwrap_err();
        assert!(
            matches!(
                err,
                Error::Infeasible {
                    attempts: 1_003_520,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn small_geometric_run_passes() {
        let report = noncolliding_experiment(GEOM, 3, 50, 20_000, Seed::new(5)).unwrap();
        assert!(report.verdict, "{}", report.to_json());
    }
}
