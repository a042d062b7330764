//! Pathwise dynamics of the single queue / single store.
//!
//! One input `(A, s)` produces one output `(D, r)`. Read as a FIFO queue,
//! `A` are arrivals, `s` services and `D` departures; read as a slotted store,
//! `s` are supplies, `a` the requests and `r` the amounts sold. Only the first
//! `N` customers of a window are represented, so `r_n` and `d_n` exist for
//! `n < N` only.

use std::io::Write;
use std::ops::Range;

use serde::Serialize;

use crate::error::{domain, invalid, Result};
use crate::quantity::{sum, Quantity};
use crate::sampling::MarkedSequence;

/// Waiting times from `w_{n+1} = (w_n + s_n - a_n)^+`.
///
/// `a` and `s` must have the same length; the result has one more entry.
pub fn lindley_forward<T: Quantity>(w1: T, a: &[T], s: &[T]) -> Result<Vec<T>> {
    if a.len() != s.len() {
        return Err(invalid(format!("{} gaps but {} marks", a.len(), s.len())));
    }
    if w1 < T::ZERO || a.iter().chain(s).any(|&x| x < T::ZERO || !x.is_finite()) {
        return Err(domain("Lindley inputs must be finite and nonnegative"));
    }
    let mut w = Vec::with_capacity(a.len() + 1);
    w.push(w1);
    let mut cur = w1;
    for (&an, &sn) in a.iter().zip(s) {
        cur = (cur + sn).sub_pos(an);
        w.push(cur);
    }
    Ok(w)
}

/// Output of the model on a window of `N` customers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueueTrace<T> {
    arrivals: Vec<T>,
    services: Vec<T>,
    departures: Vec<T>,
    /// `r_n = min(D_n, A_{n+1}) - A_n`, `n < N`.
    dual: Vec<T>,
    waits: Vec<T>,
    departure_gaps: Vec<T>,
    arrival_gaps: Vec<T>,
}

/// Builds the trace of a marked sequence with initial waiting time `w1`.
pub fn transform<T: Quantity>(input: &MarkedSequence<T>, w1: T) -> Result<QueueTrace<T>> {
    QueueTrace::build(input.epochs().to_vec(), input.marks().to_vec(), w1)
}

impl<T: Quantity> QueueTrace<T> {
    /// Like [`transform`] but only requires nonnegative marks, so zero
    /// services (a phantom first customer, say) are allowed.
    pub fn build(arrivals: Vec<T>, services: Vec<T>, w1: T) -> Result<Self> {
        if arrivals.is_empty() {
            return Err(invalid("the input must contain at least one customer"));
        }
        if arrivals.len() != services.len() {
            return Err(invalid("arrivals and services differ in length"));
        }
        if arrivals.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("arrival epochs must be strictly increasing"));
        }
        if w1 < T::ZERO || services.iter().any(|&s| s < T::ZERO || !s.is_finite()) {
            return Err(domain("services and w1 must be nonnegative"));
        }
        let n = arrivals.len();
        let mut departures = Vec::with_capacity(n);
        departures.push(arrivals[0] + w1 + services[0]);
        for k in 1..n {
            let prev = departures[k - 1];
            departures.push(prev.max(arrivals[k]) + services[k]);
        }
        let waits: Vec<T> = (0..n)
            .map(|k| {
                if k == 0 {
                    w1
                } else {
                    departures[k - 1].sub_pos(arrivals[k])
                }
            })
            .collect();
        let dual = (0..n - 1)
            .map(|k| departures[k].min(arrivals[k + 1]) - arrivals[k])
            .collect();
        let departure_gaps = departures.windows(2).map(|w| w[1] - w[0]).collect();
        let arrival_gaps = arrivals.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(QueueTrace {
            arrivals,
            services,
            departures,
            dual,
            waits,
            departure_gaps,
            arrival_gaps,
        })
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    pub fn arrivals(&self) -> &[T] {
        &self.arrivals
    }

    pub fn services(&self) -> &[T] {
        &self.services
    }

    pub fn departures(&self) -> &[T] {
        &self.departures
    }

    pub fn dual(&self) -> &[T] {
        &self.dual
    }

    pub fn waits(&self) -> &[T] {
        &self.waits
    }

    pub fn departure_gaps(&self) -> &[T] {
        &self.departure_gaps
    }

    pub fn arrival_gaps(&self) -> &[T] {
        &self.arrival_gaps
    }

    /// Checks every pathwise identity the trace must satisfy and returns the
    /// first violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let n = self.len();
        let scale = self.departures[n - 1].max(T::ZERO);
        for k in 0..n {
            if self.waits[k] < T::ZERO {
                return Err(format!("w_{} < 0", k + 1));
            }
            let d = self.arrivals[k] + self.waits[k] + self.services[k];
            if !d.approx_eq(self.departures[k], scale) {
                return Err(format!("D_{0} != A_{0} + w_{0} + s_{0}", k + 1));
            }
        }
        for k in 0..n - 1 {
            let r = self.dual[k];
            let via_waits = (self.services[k] + self.waits[k]) - self.waits[k + 1];
            if !r.approx_eq(via_waits, scale) {
                return Err(format!("r_{0} != s_{0} + w_{0} - w_{1}", k + 1, k + 2));
            }
            let lhs = r + self.departure_gaps[k];
            let rhs = self.arrival_gaps[k] + self.services[k + 1];
            if !lhs.approx_eq(rhs, scale) {
                return Err(format!("conservation fails at n = {}", k + 1));
            }
        }
        backward_check(self).map_err(|v| v.to_string())
    }

    /// Right-continuous queue length `Q(t) = #{n : A_n <= t < D_n}`.
    pub fn queue_length_at(&self, t: T) -> usize {
        self.arrivals
            .iter()
            .zip(&self.departures)
            .filter(|(&a, &d)| a <= t && t < d)
            .count()
    }

    /// Net jump of `Q` at `t`: `Q(t) - Q(t-)`.
    pub fn queue_jump_at(&self, t: T) -> i64 {
        let up = self
            .arrivals
            .iter()
            .zip(&self.departures)
            .filter(|(&a, &d)| a == t && d > t)
            .count();
        let down = self
            .arrivals
            .iter()
            .zip(&self.departures)
            .filter(|(&a, &d)| d == t && a < t)
            .count();
        up as i64 - down as i64
    }

    /// Instants where `Q` jumps up and where it jumps down, in time order.
    ///
    /// An arrival and a departure at the same instant cancel out and produce
    /// no jump, which can only happen in the integer model.
    pub fn queue_jumps(&self) -> (Vec<T>, Vec<T>) {
        let mut instants: Vec<T> = self.arrivals.iter().chain(&self.departures).copied().collect();
        instants.sort_by(|a, b| a.partial_cmp(b).expect("finite epochs"));
        instants.dedup();
        let mut ups = Vec::new();
        let mut downs = Vec::new();
        for t in instants {
            let jump = self.queue_jump_at(t);
            for _ in 0..jump.clamp(0, i64::MAX) {
                ups.push(t);
            }
            for _ in 0..(-jump).clamp(0, i64::MAX) {
                downs.push(t);
            }
        }
        (ups, downs)
    }

    /// Busy periods, split at every instant where the workload returns to 0.
    ///
    /// A customer arriving exactly when the previous one leaves opens a new
    /// period (idle time 0), so inside a period every waiting time but the
    /// first is strictly positive.
    pub fn busy_periods(&self) -> Vec<BusyPeriod<T>> {
        let n = self.len();
        let mut periods = Vec::new();
        let mut start = 0;
        for k in 0..n {
            let closes = k + 1 == n || self.arrivals[k + 1] >= self.departures[k];
            if closes {
                periods.push(BusyPeriod {
                    start: self.arrivals[start],
                    end: self.departures[k],
                    customers: start..k + 1,
                });
                start = k + 1;
            }
        }
        periods
    }

    /// Zigzag trajectory of every busy period, in order.
    pub fn zigzags(&self) -> Vec<ZigzagTrajectory<T>> {
        self.busy_periods()
            .iter()
            .map(|bp| {
                let r = bp.customers.clone();
                let gaps_end = r.end.min(self.arrival_gaps.len());
                zigzag(&self.services[r.clone()], &self.arrival_gaps[r.start..gaps_end])
                    .expect("busy periods of a trace are valid")
            })
            .collect()
    }

    /// Writes `n, A, s, D, r, w` with `n` counted from 1; `r` is empty for the
    /// last customer.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["n", "A", "s", "D", "r", "w"])?;
        for k in 0..self.len() {
            let r = self.dual.get(k).map(|r| r.to_string()).unwrap_or_default();
            wtr.write_record([
                (k + 1).to_string(),
                self.arrivals[k].to_string(),
                self.services[k].to_string(),
                self.departures[k].to_string(),
                r,
                self.waits[k].to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Queue length on a grid of instants.
pub fn queue_length<T: Quantity>(trace: &QueueTrace<T>, t_grid: &[T]) -> Vec<usize> {
    t_grid.iter().map(|&t| trace.queue_length_at(t)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BusyPeriod<T> {
    pub start: T,
    pub end: T,
    /// Zero-based customer indices.
    pub customers: Range<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Slope {
    Down,
    Flat,
    Up,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Segment<T> {
    pub start: T,
    pub value: T,
    pub slope: Slope,
}

/// Right-continuous function made of unit-slope pieces.
///
/// Segment `i` covers `[start_i, start_{i+1})`; the function is 0 before the
/// first segment and the last segment extends forever.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PiecewiseLinear<T> {
    segments: Vec<Segment<T>>,
}

impl<T: Quantity> PiecewiseLinear<T> {
    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    fn value_in(seg: &Segment<T>, t: T) -> T {
        match seg.slope {
            Slope::Up => seg.value + (t - seg.start),
            Slope::Down => seg.value - (t - seg.start),
            Slope::Flat => seg.value,
        }
    }

    pub fn eval(&self, t: T) -> T {
        let idx = self.segments.partition_point(|s| s.start <= t);
        if idx == 0 {
            T::ZERO
        } else {
            Self::value_in(&self.segments[idx - 1], t)
        }
    }

    pub fn left_limit(&self, t: T) -> T {
        let idx = self.segments.partition_point(|s| s.start < t);
        if idx == 0 {
            T::ZERO
        } else {
            Self::value_in(&self.segments[idx - 1], t)
        }
    }

    fn push(&mut self, start: T, value: T, slope: Slope) {
        match self.segments.last_mut() {
            Some(last) if last.start == start => *last = Segment { start, value, slope },
            _ => self.segments.push(Segment { start, value, slope }),
        }
    }
}

/// Workload `W = sup_n f_n` and its dual `W̄ = sup_n g_n`.
///
/// `W` jumps by `s_n` at `A_n` and decreases at unit rate; `W̄` is the time
/// elapsed since the arrival of the customer in service. `g_n` is taken
/// right-continuous, i.e. vanishing from `D_n` on.
pub fn workload_pair<T: Quantity>(trace: &QueueTrace<T>) -> (PiecewiseLinear<T>, PiecewiseLinear<T>) {
    let mut w = PiecewiseLinear { segments: Vec::new() };
    let mut wbar = PiecewiseLinear { segments: Vec::new() };
    for bp in trace.busy_periods() {
        let first = bp.customers.start;
        wbar.push(trace.arrivals[first], T::ZERO, Slope::Up);
        for k in bp.customers.clone() {
            w.push(trace.arrivals[k], trace.departures[k] - trace.arrivals[k], Slope::Down);
            if k + 1 < bp.customers.end {
                let next = trace.arrivals[k + 1];
                wbar.push(trace.departures[k], trace.departures[k] - next, Slope::Up);
            }
        }
        w.push(bp.end, T::ZERO, Slope::Flat);
        wbar.push(bp.end, T::ZERO, Slope::Flat);
    }
    (w, wbar)
}

/// Lengths of the alternating increase / decrease runs of the zigzag process
/// over one busy period.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ZigzagTrajectory<T> {
    pub run_lengths: Vec<T>,
}

impl<T: Quantity> ZigzagTrajectory<T> {
    /// Number of increase runs.
    pub fn k(&self) -> usize {
        self.run_lengths.len() / 2
    }

    /// Total increase, which equals the total decrease.
    pub fn total(&self) -> T {
        self.run_lengths.iter().step_by(2).fold(T::ZERO, |acc, &x| acc + x)
    }

    pub fn is_balanced(&self) -> bool {
        let down = self
            .run_lengths
            .iter()
            .skip(1)
            .step_by(2)
            .fold(T::ZERO, |acc, &x| acc + x);
        self.total().approx_eq(down, self.total())
    }

    pub fn reversed(&self) -> Self {
        ZigzagTrajectory {
            run_lengths: self.run_lengths.iter().rev().copied().collect(),
        }
    }
}

/// Zigzag of one busy period from its services `s_1..s_k` and the gaps
/// `a_1..a_{k-1}` (optionally followed by `a_k`, the gap to the next arrival).
///
/// Increase runs are the services, intermediate decrease runs the gaps, and
/// the last decrease run drains the remaining workload `w_k + s_k`.
pub fn zigzag<T: Quantity>(s: &[T], a: &[T]) -> Result<ZigzagTrajectory<T>> {
    let k = s.len();
    if k == 0 {
        return Err(domain("a busy period serves at least one customer"));
    }
    if a.len() + 1 != k && a.len() != k {
        return Err(invalid(format!("{k} services need {} or {k} gaps", k - 1)));
    }
    if s.iter().chain(a).any(|&x| x <= T::ZERO) {
        return Err(domain("zigzag runs must be positive"));
    }
    let mut runs = Vec::with_capacity(2 * k);
    let mut level = T::ZERO;
    for n in 0..k {
        level = level + s[n];
        runs.push(s[n]);
        if n + 1 < k {
            if a[n] >= level {
                return Err(domain(format!(
                    "workload empties before customer {} arrives: not a single busy period",
                    n + 2
                )));
            }
            level = level - a[n];
            runs.push(a[n]);
        }
    }
    if a.len() == k && a[k - 1] < level {
        return Err(domain("next customer arrives inside the busy period"));
    }
    runs.push(level);
    Ok(ZigzagTrajectory { run_lengths: runs })
}

/// First index where a backward identity fails.
#[derive(Clone, Debug, PartialEq)]
pub struct BackwardViolation {
    /// One-based customer index.
    pub n: usize,
    pub identity: &'static str,
}

impl std::fmt::Display for BackwardViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} fails at n = {}", self.identity, self.n)
    }
}

/// Verifies `w_n = (w_{n+1} + r_n - d_{n-1})^+` and `w_n + s_n = w_{n+1} + r_n`
/// wherever both sides are defined.
pub fn backward_check<T: Quantity>(trace: &QueueTrace<T>) -> std::result::Result<(), BackwardViolation> {
    let n = trace.len();
    let scale = trace.departures[n - 1].max(T::ZERO);
    for k in 0..n.saturating_sub(1) {
        let v = trace.waits[k] + trace.services[k];
        if !v.approx_eq(trace.waits[k + 1] + trace.dual[k], scale) {
            return Err(BackwardViolation {
                n: k + 1,
                identity: "sojourn time v_n = w_n + s_n = w_{n+1} + r_n",
            });
        }
    }
    for k in 1..n.saturating_sub(1) {
        let back = (trace.waits[k + 1] + trace.dual[k]).sub_pos(trace.departure_gaps[k - 1]);
        if !back.approx_eq(trace.waits[k], scale) {
            return Err(BackwardViolation {
                n: k + 1,
                identity: "backward Lindley w_n = (w_{n+1} + r_n - d_{n-1})^+",
            });
        }
    }
    Ok(())
}

/// The two prefix functionals of the non-colliding representation:
///
/// `max_{1<=j<=n} { a_1 + .. + a_j + s_{j+1} + .. + s_{n+1} }` and
/// `min_{1<=j<=n} { s_2 + .. + s_j + a_{j+1} + .. + a_n }`,
///
/// with `a` and `s` indexed from 1 (`a[0]` is `a_1`). Needs `a.len() >= n` and
/// `s.len() >= n + 1`.
pub fn representation<T: Quantity>(a: &[T], s: &[T], n: usize) -> Result<(T, T)> {
    if n == 0 || a.len() < n || s.len() < n + 1 {
        return Err(invalid(format!(
            "representation of order {n} needs {n} gaps and {} marks",
            n + 1
        )));
    }
    let mut best_max: Option<T> = None;
    let mut best_min: Option<T> = None;
    for j in 1..=n {
        let up = sum(&a[..j]) + sum(&s[j..=n]);
        let down = sum(&s[1..j]) + sum(&a[j..n]);
        best_max = Some(best_max.map_or(up, |m| m.max(up)));
        best_min = Some(best_min.map_or(down, |m| m.min(down)));
    }
    Ok((best_max.unwrap(), best_min.unwrap()))
}
