//! RSK row insertion and the two readings of the extreme rows of the shape.
//!
//! The first row of the tableau built from the word of a service matrix is
//! the last departure epoch of the tandem of queues; the `K`-th row is the
//! cumulative output of the tandem of stores. Both are checked against
//! max-plus / min-plus operator chains and brute-force lattice paths.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sampling::Seed;
use crate::tandem::{queue_departures, store_flow, ServiceMatrix};

/// Largest `N + K` accepted by the exhaustive path oracles (3432 paths).
pub const PATH_SIZE_LIMIT: usize = 16;

/// Weakly decreasing sequence of parts; trailing zeros are dropped, so
/// partitions differing only by zeros compare equal.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct Partition(Vec<u64>);

impl Partition {
    pub fn new(mut parts: Vec<u64>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Domain(format!("{parts:?} is not weakly decreasing")));
        }
        while parts.last() == Some(&0) {
            parts.pop();
        }
        Ok(Partition(parts))
    }

    pub fn empty() -> Self {
        Partition(Vec::new())
    }

    /// Nonzero parts.
    pub fn parts(&self) -> &[u64] {
        &self.0
    }

    /// `i`-th part counted from 1, zero past the end.
    pub fn part(&self, i: usize) -> u64 {
        self.0.get(i - 1).copied().unwrap_or(0)
    }

    /// Number of nonzero parts.
    pub fn length(&self) -> usize {
        self.0.len()
    }

    /// Number of boxes.
    pub fn size(&self) -> u64 {
        self.0.iter().sum()
    }

    /// The first `k` parts, zero padded.
    pub fn padded(&self, k: usize) -> Vec<u64> {
        (1..=k).map(|i| self.part(i)).collect()
    }
}

impl TryFrom<Vec<u64>> for Partition {
    type Error = Error;

    fn try_from(parts: Vec<u64>) -> Result<Self> {
        Partition::new(parts)
    }
}

impl From<Partition> for Vec<u64> {
    fn from(p: Partition) -> Self {
        p.0
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Semistandard Young tableau over labels `1, 2, ..`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Tableau {
    rows: Vec<Vec<u32>>,
}

impl Tableau {
    pub fn new(rows: Vec<Vec<u32>>) -> Result<Self> {
        let t = Tableau { rows };
        if t.rows.iter().any(Vec::is_empty) {
            return Err(invalid("tableau rows must be nonempty"));
        }
        if t.rows.iter().flatten().any(|&x| x == 0) {
            return Err(invalid("labels start at 1"));
        }
        if !t.is_valid() {
            return Err(Error::Domain(format!("{:?} is not semistandard", t.rows)));
        }
        Ok(t)
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn boxes(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Rows weakly increasing, columns strictly increasing, row lengths weakly
    /// decreasing.
    pub fn is_valid(&self) -> bool {
        let rows_ok = self.rows.iter().all(|r| r.windows(2).all(|w| w[0] <= w[1]));
        let shape_ok = self.rows.windows(2).all(|w| w[0].len() >= w[1].len());
        let cols_ok = self
            .rows
            .windows(2)
            .all(|w| w[1].iter().zip(&w[0]).all(|(below, above)| below > above));
        rows_ok && shape_ok && cols_ok
    }

    /// Row insertion: the label bumps the leftmost strictly larger entry of
    /// the first row, which is inserted into the next row, and so on.
    pub fn insert(&mut self, label: u32) {
        let mut carry = label;
        for row in &mut self.rows {
            let pos = row.partition_point(|&x| x <= carry);
            if pos == row.len() {
                row.push(carry);
                return;
            }
            carry = std::mem::replace(&mut row[pos], carry);
        }
        self.rows.push(vec![carry]);
    }

    pub fn shape(&self) -> Partition {
        Partition(self.rows.iter().map(|r| r.len() as u64).collect())
    }
}

impl fmt::Display for Tableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let labels: Vec<String> = row.iter().map(u32::to_string).collect();
            write!(f, "{}", labels.join(" "))?;
        }
        Ok(())
    }
}

/// `insert` as a pure function.
pub fn insert(t: &Tableau, label: u32) -> Tableau {
    let mut out = t.clone();
    out.insert(label);
    out
}

pub fn shape(t: &Tableau) -> Partition {
    t.shape()
}

/// Word over the alphabet `1..=K`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Word {
    letters: Vec<u32>,
    alphabet: u32,
}

impl Word {
    pub fn new(letters: Vec<u32>, alphabet: u32) -> Result<Self> {
        if letters.iter().any(|&l| l == 0 || l > alphabet) {
            return Err(Error::Domain(format!("letters must lie in 1..={alphabet}")));
        }
        Ok(Word { letters, alphabet })
    }

    pub fn letters(&self) -> &[u32] {
        &self.letters
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// `x_i(n)` for `n = 0..=M`: occurrences of letter `i` among the first `n`.
    pub fn counting(&self, letter: u32) -> Vec<i64> {
        std::iter::once(0)
            .chain(self.letters.iter().scan(0i64, |acc, &l| {
                *acc += i64::from(l == letter);
                Some(*acc)
            }))
            .collect()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letters: Vec<String> = self.letters.iter().map(u32::to_string).collect();
        write!(f, "{}", letters.join(" "))
    }
}

/// Row `i` contributes `1^{u(i,1)} 2^{u(i,2)} .. K^{u(i,K)}`, rows in order.
pub fn word_of(u: &ServiceMatrix<u64>) -> Word {
    let letters = u
        .rows()
        .flat_map(|row| {
            row.iter()
                .enumerate()
                .flat_map(|(j, &count)| std::iter::repeat_n(j as u32 + 1, count as usize))
        })
        .collect();
    Word {
        letters,
        alphabet: u.stages() as u32,
    }
}

pub fn tableau_of(w: &Word) -> Tableau {
    let mut t = Tableau::default();
    for &l in &w.letters {
        t.insert(l);
    }
    t
}

/// `(f ▽ g)(n) = max_{0<=m<=n} [f(m) + g(n) - g(m)]`.
fn nabla(f: &[i64], g: &[i64]) -> Vec<i64> {
    let mut best = i64::MIN;
    f.iter()
        .zip(g)
        .map(|(&fm, &gm)| {
            best = best.max(fm - gm);
            best + gm
        })
        .collect()
}

/// `(f △ g)(n) = min_{0<=m<=n} [f(m) + g(n) - g(m)]`.
fn triangle(f: &[i64], g: &[i64]) -> Vec<i64> {
    let mut best = i64::MAX;
    f.iter()
        .zip(g)
        .map(|(&fm, &gm)| {
            best = best.min(fm - gm);
            best + gm
        })
        .collect()
}

/// `(x_1 ▽ x_2 ▽ .. ▽ x_K)(M)` and `(x_K △ .. △ x_2 △ x_1)(M)`, both chains
/// evaluated left to right.
pub fn lambda_operators(u: &ServiceMatrix<u64>) -> (u64, u64) {
    let w = word_of(u);
    let k = w.alphabet;
    let first = (2..=k).fold(w.counting(1), |acc, i| nabla(&acc, &w.counting(i)));
    let last = (1..k)
        .rev()
        .fold(w.counting(k), |acc, i| triangle(&acc, &w.counting(i)));
    let m = w.len();
    (first[m] as u64, last[m] as u64)
}

fn check_size(u: &ServiceMatrix<u64>, limit: usize) -> Result<()> {
    let size = u.customers() + u.stages();
    if size > limit {
        return Err(Error::TooLarge { size, limit });
    }
    Ok(())
}

/// Visits every strictly increasing `len`-subset of `1..=n`.
fn for_each_subset(n: usize, len: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, len: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if cur.len() == len {
            visit(cur);
            return;
        }
        for x in start..=n {
            if n - x + 1 < len - cur.len() {
                break;
            }
            cur.push(x);
            rec(x + 1, n, len, cur, visit);
            cur.pop();
        }
    }
    rec(1, n, len, &mut Vec::with_capacity(len), &mut visit);
}

/// Maximum of `Σ u` over up-right lattice paths from `(1, 1)` to `(N, K)`.
pub fn path_max(u: &ServiceMatrix<u64>) -> Result<u64> {
    path_max_with_limit(u, PATH_SIZE_LIMIT)
}

pub fn path_max_with_limit(u: &ServiceMatrix<u64>, limit: usize) -> Result<u64> {
    check_size(u, limit)?;
    let (n, k) = (u.customers(), u.stages());
    // A path is fixed by the steps (out of N + K - 2) that move to the next customer.
    let mut best = 0;
    for_each_subset(n + k - 2, n - 1, |down| {
        let (mut i, mut j) = (0, 0);
        let mut total = u[(0, 0)];
        for step in 1..=n + k - 2 {
            if down.binary_search(&step).is_ok() {
                i += 1;
            } else {
                j += 1;
            }
            total += u[(i, j)];
        }
        best = best.max(total);
    });
    Ok(best)
}

/// Minimum of `Σ u` over the down-right paths with `N - K + 1` nodes; zero when
/// `N < K`, where there is no such path.
///
/// A path is given by rows `i_{K-1} < .. < i_1` in `1..=N`: column `K - c`
/// collects the rows strictly between the `c`-th and `(c+1)`-th cut.
pub fn path_min(u: &ServiceMatrix<u64>) -> Result<u64> {
    path_min_with_limit(u, PATH_SIZE_LIMIT)
}

pub fn path_min_with_limit(u: &ServiceMatrix<u64>, limit: usize) -> Result<u64> {
    check_size(u, limit)?;
    let (n, k) = (u.customers(), u.stages());
    if n < k {
        return Ok(0);
    }
    let mut best = u64::MAX;
    for_each_subset(n, k - 1, |cuts| {
        let bounds: Vec<usize> = std::iter::once(0).chain(cuts.iter().copied()).chain([n + 1]).collect();
        let total: u64 = bounds
            .windows(2)
            .enumerate()
            .flat_map(|(c, w)| (w[0] + 1..w[1]).map(move |row| (row, k - c)))
            .map(|(row, col)| u[(row - 1, col - 1)])
            .sum();
        best = best.min(total);
    });
    Ok(best)
}

/// The six readings of the extreme rows of the shape.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RowQueueReport {
    pub first_row: u64,
    pub first_row_nabla: u64,
    pub path_max: u64,
    pub last_departure: u64,
    pub last_row: u64,
    pub last_row_triangle: u64,
    pub path_min: u64,
    pub store_output: u64,
}

impl RowQueueReport {
    pub fn holds(&self) -> bool {
        let firsts = [self.first_row_nabla, self.path_max, self.last_departure];
        let lasts = [self.last_row_triangle, self.path_min, self.store_output];
        firsts.iter().all(|&x| x == self.first_row) && lasts.iter().all(|&x| x == self.last_row)
    }
}

/// Computes every reading; errors only on the size guard.
pub fn row_queue_report(u: &ServiceMatrix<u64>) -> Result<RowQueueReport> {
    let shape = tableau_of(&word_of(u)).shape();
    let (nab, tri) = lambda_operators(u);
    Ok(RowQueueReport {
        first_row: shape.part(1),
        first_row_nabla: nab,
        path_max: path_max(u)?,
        last_departure: queue_departures(u).last(),
        last_row: shape.part(u.stages()),
        last_row_triangle: tri,
        path_min: path_min(u)?,
        store_output: store_flow(u).total(),
    })
}

/// Like [`row_queue_report`], turning any disagreement into an error.
pub fn verify_row_queue(u: &ServiceMatrix<u64>) -> Result<RowQueueReport> {
    let report = row_queue_report(u)?;
    if !report.holds() {
        return Err(Error::Domain(format!("row/queue identity violated: {report:?}")));
    }
    Ok(report)
}

/// Outcome of [`identity_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentitySweep {
    pub cases: usize,
    pub failures: usize,
    /// Rows of the first matrix that broke an identity, with its readings.
    pub first_failure: Option<(Vec<Vec<u64>>, RowQueueReport)>,
}

/// Checks every reading of [`row_queue_report`] on `cases` random `n x k`
/// matrices with entries uniform on `0..=max_entry`.
pub fn identity_sweep(n: usize, k: usize, max_entry: u64, cases: usize, seed: Seed) -> Result<IdentitySweep> {
    let mut rng = seed.rng();
    let mut sweep = IdentitySweep {
        cases,
        failures: 0,
        first_failure: None,
    };
    for _ in 0..cases {
        let u = ServiceMatrix::from_fn(n, k, |_, _| rng.random_range(0..=max_entry))?;
        let report = row_queue_report(&u)?;
        if !report.holds() {
            sweep.failures += 1;
            sweep
                .first_failure
                .get_or_insert_with(|| (u.rows().map(<[u64]>::to_vec).collect(), report));
        }
    }
    Ok(sweep)
}
