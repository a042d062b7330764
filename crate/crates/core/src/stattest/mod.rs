//! Statistical tests and the Monte Carlo experiments built on them.
//!
//! Every experiment is a pure function of its parameters and a [`Seed`]:
//! replications run in batches, batch `i` draws from [`Seed::batch_rng`]`(i)`,
//! and results are reduced in batch order, so reports do not depend on the
//! number of threads.

mod burke;
mod gof;
mod interchange;
mod laguerre;
mod noncolliding;
mod report;
mod shape;
mod zigzag;

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::sampling::{draw_geometric0, Seed};
use crate::schur::WeightVector;
use crate::tandem::ServiceMatrix;

pub use burke::{burke_experiment, BURKE_GAPS, BURKE_INDEPENDENCE, BURKE_MARKS};
pub use gof::{
    chi2_independence, chi2_test, chi2_test_ddof, chi2_two_sample, ks_test, ks_two_sample, lag1_test, mean_test,
    symmetry_test, GofResult, ALPHA,
};
pub use interchange::{interchange_experiment, INTERCHANGE_JOINT, INTERCHANGE_MEAN, INTERCHANGE_PREFIX};
pub use laguerre::{laguerre_check, laguerre_sample, LAGUERRE_KS, LAGUERRE_MEAN, LAGUERRE_MIN_RATE};
pub use noncolliding::{conditional_sample, noncolliding_experiment, representation_sample, NONCOLLIDING_JOINT};
pub use report::{Check, Diagnostic, ExperimentReport};
pub use shape::{shape_law_experiment, SHAPE_LAW, SHAPE_REVERSED, SHAPE_TRANSITIONS};
pub use zigzag::{enumerate_zigzags, zigzag_law_experiment, ZIGZAG_ABSOLUTE, ZIGZAG_RELATIVE};

/// Replications per batch of [`run_batches`].
const BATCH: usize = 8192;

/// Runs `total` replications in fixed batches; `work(rng, size)` produces the
/// items of one batch. Items come back in batch order.
pub(crate) fn run_batches<T, F>(seed: Seed, total: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> Vec<T> + Sync,
{
    let batches = total.div_ceil(BATCH) as u64;
    let parts: Vec<Vec<T>> = (0..batches)
        .into_par_iter()
        .map(|i| {
            let size = BATCH.min(total - i as usize * BATCH);
            work(&mut seed.batch_rng(i), size)
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Batches per round of [`collect_until`].
const ROUND: u64 = 16;

/// Runs batches `0, 1, ..` in parallel rounds until at least `target` items
/// have been produced, then returns the first `target` in batch order.
/// `guard(batches_done, collected)` runs after every round and may abort.
pub(crate) fn collect_until<T, F, G>(seed: Seed, target: usize, work: F, mut guard: G) -> crate::Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Vec<T> + Sync,
    G: FnMut(u64, usize) -> crate::Result<()>,
{
    let mut items = Vec::with_capacity(target);
    let mut done = 0;
    while items.len() < target {
        let round: Vec<Vec<T>> = (done..done + ROUND)
            .into_par_iter()
            .map(|i| work(&mut seed.batch_rng(i)))
            .collect();
        done += ROUND;
        items.extend(round.into_iter().flatten());
        guard(done, items.len())?;
    }
    items.truncate(target);
    Ok(items)
}

/// `rows x K` matrix with independent entries `P{u(i,j) = n} = (1-q_j) q_j^n`.
pub(crate) fn geometric_matrix<R: rand::Rng + ?Sized>(
    rng: &mut R,
    q: &WeightVector,
    rows: usize,
) -> ServiceMatrix<u64> {
    let rows = (0..rows)
        .map(|_| q.as_slice().iter().map(|&qj| draw_geometric0(rng, qj)).collect())
        .collect();
    ServiceMatrix::from_rows(rows).expect("rectangular")
}

/// Aligns two tallies on the union of their keys.
pub(crate) fn align<K: Ord + Clone>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> (Vec<u64>, Vec<u64>) {
    let keys: std::collections::BTreeSet<&K> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .map(|k| (a.get(k).copied().unwrap_or(0), b.get(k).copied().unwrap_or(0)))
        .unzip()
}

pub(crate) fn tally<K: Ord, I: IntoIterator<Item = K>>(items: I) -> BTreeMap<K, u64> {
    let mut map = BTreeMap::new();
    for k in items {
        *map.entry(k).or_insert(0) += 1;
    }
    map
}
