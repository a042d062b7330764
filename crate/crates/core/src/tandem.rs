//! Saturated tandems of `K` queues and of `K` stores, both driven by one
//! service matrix.
//!
//! Row `i` of the matrix is customer `i` (or time slot `i`), column `j` is
//! queue `j`. The same entry is the request at slot `i` in store `K + 1 - j`,
//! so store 1 faces the last column and store `K` the first.

use std::io::{Read, Write};
use std::ops::Index;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::quantity::Quantity;

/// `N x K` matrix of nonnegative services, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ServiceMatrix<T> {
    n: usize,
    k: usize,
    entries: Vec<T>,
}

impl<T: Quantity> ServiceMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if n == 0 || k == 0 {
            return Err(invalid("a service matrix needs at least one row and one column"));
        }
        if rows.iter().any(|r| r.len() != k) {
            return Err(invalid("rows of a service matrix must have equal length"));
        }
        let entries: Vec<T> = rows.into_iter().flatten().collect();
        if entries.iter().any(|&x| x < T::ZERO || !x.is_finite()) {
            return Err(invalid("service matrix entries must be finite and nonnegative"));
        }
        Ok(ServiceMatrix { n, k, entries })
    }

    /// Builds the matrix entry by entry; `f(i, j)` is zero-based.
    pub fn from_fn(n: usize, k: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let rows = (0..n).map(|i| (0..k).map(|j| f(i, j)).collect()).collect();
        Self::from_rows(rows)
    }

    /// Number of customers (slots).
    pub fn customers(&self) -> usize {
        self.n
    }

    /// Number of stages.
    pub fn stages(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.entries.chunks(self.k)
    }

    /// The first `n` rows.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n {
            return Err(invalid(format!("prefix {n} out of range 1..={}", self.n)));
        }
        Ok(ServiceMatrix {
            n,
            k: self.k,
            entries: self.entries[..n * self.k].to_vec(),
        })
    }

    /// Same matrix with the columns reordered: column `j` of the result is
    /// column `order[j]` of `self`.
    pub fn permute_columns(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.k];
        if order.len() != self.k
            || order
                .iter()
                .any(|&j| j >= self.k || std::mem::replace(&mut seen[j], true))
        {
            return Err(invalid("column order must be a permutation"));
        }
        Self::from_fn(self.n, self.k, |i, j| self[(i, order[j])])
    }

    pub fn total(&self) -> T {
        crate::quantity::sum(&self.entries)
    }

    /// Headerless CSV, one customer per record.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| f.parse::<T>().map_err(|_| invalid(format!("bad matrix entry {f:?}"))))
                .collect::<Result<Vec<T>>>()?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for row in self.rows() {
            wtr.write_record(row.iter().map(T::to_string))?;
        }
        wtr.flush().map_err(Error::from)
    }
}

impl<T> Index<(usize, usize)> for ServiceMatrix<T> {
    type Output = T;

    /// Zero-based `(customer, stage)`.
    fn index(&self, (i, j): (usize, usize)) -> &T {
        assert!(i < self.n && j < self.k, "index ({i}, {j}) out of bounds");
        &self.entries[i * self.k + j]
    }
}

/// Departure epochs `D(n, k)` of the tandem of queues, with `D(0, .) = D(., 0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepartureMatrix<T> {
    n: usize,
    k: usize,
    values: Vec<T>,
}

impl<T: Quantity> DepartureMatrix<T> {
    /// Departure of customer `n` from queue `k`, both counted from 1; zero on
    /// the boundary.
    pub fn at(&self, n: usize, k: usize) -> T {
        self.values[n * (self.k + 1) + k]
    }

    /// `D(N, K)`.
    pub fn last(&self) -> T {
        self.at(self.n, self.k)
    }
}

pub fn queue_departures<T: Quantity>(u: &ServiceMatrix<T>) -> DepartureMatrix<T> {
    let (n, k) = (u.n, u.k);
    let mut values = vec![T::ZERO; (n + 1) * (k + 1)];
    for i in 1..=n {
        for j in 1..=k {
            let above = values[(i - 1) * (k + 1) + j];
            let left = values[i * (k + 1) + j - 1];
            values[i * (k + 1) + j] = above.max(left) + u[(i - 1, j - 1)];
        }
    }
    DepartureMatrix { n, k, values }
}

/// Flow through the tandem of stores.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StoreFlow<T> {
    k: usize,
    /// `departures[n-1][k-1]` is `r(n, k)`.
    departures: Vec<Vec<T>>,
    /// `stocks[n-1][k-1]` is `w(n, k)`, the stock of store `k` at the start of
    /// slot `n`, for `n = 1..=N+1`.
    stocks: Vec<Vec<T>>,
    cumulative: Vec<T>,
}

impl<T: Quantity> StoreFlow<T> {
    /// `r(n, k)`, one-based.
    pub fn departure(&self, n: usize, k: usize) -> T {
        self.departures[n - 1][k - 1]
    }

    /// `w(n, k)`, one-based, `n` up to `N + 1`.
    pub fn stock(&self, n: usize, k: usize) -> T {
        self.stocks[n - 1][k - 1]
    }

    /// `R^(1), .., R^(N)`: cumulative departures from store `K`.
    pub fn cumulative(&self) -> &[T] {
        &self.cumulative
    }

    /// `R^(N)`.
    pub fn total(&self) -> T {
        *self.cumulative.last().expect("at least one slot")
    }

    pub fn stages(&self) -> usize {
        self.k
    }

    pub fn slots(&self) -> usize {
        self.departures.len()
    }
}

/// Runs the tandem of stores.
///
/// Store 1 has unlimited stock and sells its whole request `u(n, K)`. Store
/// `k > 1` receives at slot `n` what store `k - 1` sold at slot `n - 1`, and
/// sells `min(stock + supply, u(n, K + 1 - k))`; unmet requests are lost.
pub fn store_flow<T: Quantity>(u: &ServiceMatrix<T>) -> StoreFlow<T> {
    let (n, k) = (u.n, u.k);
    let mut departures: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut stocks = vec![vec![T::ZERO; k]];
    let mut cumulative = Vec::with_capacity(n);
    let mut total = T::ZERO;
    for slot in 0..n {
        let stock = stocks[slot].clone();
        let mut sold = vec![T::ZERO; k];
        let mut next = vec![T::ZERO; k];
        sold[0] = u[(slot, k - 1)];
        for store in 1..k {
            let supply = if slot == 0 {
                T::ZERO
            } else {
                departures[slot - 1][store - 1]
            };
            let available = stock[store] + supply;
            let request = u[(slot, k - 1 - store)];
            sold[store] = available.min(request);
            next[store] = available.sub_pos(request);
        }
        total = total + sold[k - 1];
        cumulative.push(total);
        departures.push(sold);
        stocks.push(next);
    }
    StoreFlow {
        k,
        departures,
        stocks,
        cumulative,
    }
}

/// `(D^(n), R^(n))` for `n = 1..=upto`, where `D^(n) = D(n, K)`.
pub fn tandem_outputs<T: Quantity>(u: &ServiceMatrix<T>, upto: usize) -> Result<(Vec<T>, Vec<T>)> {
    if upto == 0 || upto > u.n {
        return Err(invalid(format!("upto must lie in 1..={}", u.n)));
    }
    let dmat = queue_departures(u);
    let flow = store_flow(u);
    let d = (1..=upto).map(|i| dmat.at(i, u.k)).collect();
    Ok((d, flow.cumulative[..upto].to_vec()))
}
