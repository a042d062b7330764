//! Seeded generation of the input laws.
//!
//! Every sampler is a pure function of its parameters and a [`Seed`]. A seed
//! names a ChaCha8 key (`master`) and one of its 2^64 independent streams
//! (`stream`), so parallel replications can each own a stream and the result
//! never depends on how work is scheduled.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quantity::Quantity;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub stream: u64,
}

impl Seed {
    pub fn new(master: u64) -> Self {
        Seed { master, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Seed { stream, ..self }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }

    /// Generator for batch `index` of a parallel run: the stream of this seed
    /// cut into disjoint blocks of 2^40 words.
    pub fn batch_rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.rng();
        rng.set_word_pos(u128::from(index) << 40);
        rng
    }
}

/// Uniform on `(0, 1]`, so that `ln` is always finite.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

fn check_probability(name: &str, p: f64, allow_one: bool) -> Result<()> {
    let upper_ok = if allow_one { p <= 1.0 } else { p < 1.0 };
    if p > 0.0 && upper_ok {
        Ok(())
    } else {
        Err(invalid(format!(
            "{name} = {p} outside {}",
            if allow_one { "(0, 1]" } else { "(0, 1)" }
        )))
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if rate > 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("rate = {rate} must be positive and finite")))
    }
}

/// One draw of `P{X = k} = (1-p)^{k-1} p`, `k >= 1`, by inversion.
pub fn draw_geometric<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u64 {
    if p >= 1.0 {
        return 1;
    }
    let u = open_unit(rng);
    1 + (u.ln() / (-p).ln_1p()).floor() as u64
}

/// One draw of `P{X = k} = (1-q) q^k`, `k >= 0`, by inversion.
pub fn draw_geometric0<R: Rng + ?Sized>(rng: &mut R, q: f64) -> u64 {
    let u = open_unit(rng);
    (u.ln() / q.ln()).floor() as u64
}

pub fn draw_exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -open_unit(rng).ln() / rate
}

/// `n` i.i.d. draws on `{1, 2, ...}` with `P{X = k} = (1-p)^{k-1} p`.
pub fn sample_geometric(p: f64, n: usize, seed: Seed) -> Result<Vec<u64>> {
    check_probability("p", p, true)?;
    let mut rng = seed.rng();
    Ok((0..n).map(|_| draw_geometric(&mut rng, p)).collect())
}

/// `n` i.i.d. draws on `{0, 1, ...}` with `P{X = k} = (1-q) q^k`.
///
/// This is the entry law of the random service matrices whose RSK shape has
/// the Schur-measure law.
pub fn sample_geometric0(q: f64, n: usize, seed: Seed) -> Result<Vec<u64>> {
    check_probability("q", q, false)?;
    let mut rng = seed.rng();
    Ok((0..n).map(|_| draw_geometric0(&mut rng, q)).collect())
}

pub fn sample_exponential(rate: f64, n: usize, seed: Seed) -> Result<Vec<f64>> {
    check_rate(rate)?;
    let mut rng = seed.rng();
    Ok((0..n).map(|_| draw_exponential(&mut rng, rate)).collect())
}

/// A finite window of marked epochs `(A_n, s_n)` on `[0, window_end]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkedSequence<T> {
    epochs: Vec<T>,
    marks: Vec<T>,
    window_end: T,
}

impl<T: Quantity> MarkedSequence<T> {
    pub fn new(epochs: Vec<T>, marks: Vec<T>, window_end: T) -> Result<Self> {
        if epochs.len() != marks.len() {
            return Err(invalid(format!("{} epochs but {} marks", epochs.len(), marks.len())));
        }
        if epochs.iter().chain(&marks).any(|x| !x.is_finite()) || !window_end.is_finite() {
            return Err(invalid("non-finite epoch or mark"));
        }
        if epochs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("epochs must be strictly increasing"));
        }
        if marks.iter().any(|&m| m <= T::ZERO) {
            return Err(invalid("marks must be positive"));
        }
        if let (Some(&first), Some(&last)) = (epochs.first(), epochs.last()) {
            if first < T::ZERO || last > window_end {
                return Err(invalid("epochs must lie in [0, window_end]"));
            }
        }
        Ok(MarkedSequence {
            epochs,
            marks,
            window_end,
        })
    }

    pub fn epochs(&self) -> &[T] {
        &self.epochs
    }

    pub fn marks(&self) -> &[T] {
        &self.marks
    }

    pub fn window_end(&self) -> T {
        self.window_end
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    /// Inter-epoch gaps `a_n = A_{n+1} - A_n`, one fewer than the epochs.
    pub fn gaps(&self) -> Vec<T> {
        self.epochs.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Time reversal about the window: epoch `t` maps to `window_end - t` and
    /// each mark keeps riding its epoch.
    pub fn reverse(&self) -> Self {
        MarkedSequence {
            epochs: self.epochs.iter().rev().map(|&t| self.window_end - t).collect(),
            marks: self.marks.iter().rev().copied().collect(),
            window_end: self.window_end,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum RateParams {
    /// Poisson arrivals of intensity `arrival`, exponential services of rate `service`.
    Mm1 { arrival: f64, service: f64 },
    /// Bernoulli arrivals with parameter `arrival`, geometric services with parameter `service`.
    GeomGeom1 { arrival: f64, service: f64 },
}

impl RateParams {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RateParams::Mm1 { arrival, service } => {
                check_rate(arrival)?;
                check_rate(service)?;
                if arrival >= service {
                    return Err(invalid(format!(
                        "unstable M/M/1: arrival {arrival} must be below service {service}"
                    )));
                }
            }
            RateParams::GeomGeom1 { arrival, service } => {
                check_probability("p", arrival, false)?;
                check_probability("q", service, false)?;
                if arrival >= service {
                    return Err(invalid(format!(
                        "unstable Geom/Geom/1: p = {arrival} must be below q = {service}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn arrival(&self) -> f64 {
        match *self {
            RateParams::Mm1 { arrival, .. } | RateParams::GeomGeom1 { arrival, .. } => arrival,
        }
    }

    pub fn service(&self) -> f64 {
        match *self {
            RateParams::Mm1 { service, .. } | RateParams::GeomGeom1 { service, .. } => service,
        }
    }
}

/// Input drawn for one of the two models; the geometric one stays on integers.
#[derive(Clone, Debug, PartialEq)]
pub enum SampledInput {
    Real(MarkedSequence<f64>),
    Integer(MarkedSequence<i64>),
}

impl SampledInput {
    pub fn len(&self) -> usize {
        match self {
            SampledInput::Real(m) => m.len(),
            SampledInput::Integer(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Draws the first `horizon` customers: epochs are cumulative sums of i.i.d.
/// gaps, each epoch carrying an independent mark. The window ends at the last
/// epoch.
pub fn sample_input(params: RateParams, horizon: usize, seed: Seed) -> Result<SampledInput> {
    draw_input(&mut seed.rng(), params, horizon)
}

/// [`sample_input`] on a caller-supplied generator.
pub fn draw_input<R: Rng + ?Sized>(rng: &mut R, params: RateParams, horizon: usize) -> Result<SampledInput> {
    params.validate()?;
    if horizon == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    Ok(match params {
        RateParams::Mm1 { arrival, service } => {
            let mut t = 0.0;
            let mut epochs = Vec::with_capacity(horizon);
            let mut marks = Vec::with_capacity(horizon);
            for _ in 0..horizon {
                t += draw_exponential(rng, arrival);
                epochs.push(t);
                marks.push(draw_exponential(rng, service));
            }
            SampledInput::Real(MarkedSequence::new(epochs, marks, t)?)
        }
        RateParams::GeomGeom1 { arrival, service } => {
            let mut t = 0i64;
            let mut epochs = Vec::with_capacity(horizon);
            let mut marks = Vec::with_capacity(horizon);
            for _ in 0..horizon {
                t += draw_geometric(rng, arrival) as i64;
                epochs.push(t);
                marks.push(draw_geometric(rng, service) as i64);
            }
            SampledInput::Integer(MarkedSequence::new(epochs, marks, t)?)
        }
    })
}
