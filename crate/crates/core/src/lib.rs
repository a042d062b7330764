//! Queue/store duality of the single-server system, its saturated tandems,
//! and the RSK tableau identities that connect them.
//!
//! The crate is organised bottom-up:
//!
//! * [`sampling`] seeded input laws and sequence reversal;
//! * [`queue_store`] pathwise dynamics of one queue read as a store;
//! * [`tandem`] saturated tandems of queues and of stores;
//! * [`rsk`] row insertion, operator chains and lattice-path oracles;
//! * [`schur`] Schur functions, the shape law and the partition chain;
//! * [`particles`] zero-range, bus-stop and exclusion encodings;
//! * [`stattest`] goodness-of-fit tests and Monte Carlo experiments.

pub mod error;
pub mod particles;
pub mod quantity;
pub mod queue_store;
pub mod rsk;
pub mod sampling;
pub mod schur;
pub mod stattest;
pub mod tandem;

pub use error::{Error, Result};
pub use quantity::Quantity;
