//! Particle-system pictures of the two saturated tandems.
//!
//! * Zero-range: sites `1..=K`, particles enter at site 1 from an unbounded
//!   reservoir and move right; the front particle of site `j` carries a clock
//!   started at `u(n, j)`. Particle `n` leaves site `j` at `D(n, j)`.
//! * Bus-stop: sites `1..=K`, site `K` is the reservoir and particles move
//!   left; at every slot a bus of size `u(n, j)` takes what it can from site
//!   `j`. Site `j` plays store `K + 1 - j`.
//! * Exclusion: a configuration of counts, listed from the exit upstream, is
//!   written as blocks `1 0^m`; moving particles downstream moves block heads
//!   to the right.

use std::collections::VecDeque;
use std::io::Write;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::tandem::ServiceMatrix;

/// Particle `particle` (from 1) left `site` at `slot`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Jump {
    pub particle: usize,
    pub site: usize,
    pub slot: u64,
}

/// `amount` particles left `site` at `slot`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Transport {
    pub site: usize,
    pub slot: u64,
    pub amount: u64,
}

/// Site counts at the end of a slot; `absorbed` counts particles that left
/// the last site.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Snapshot {
    pub slot: u64,
    pub counts: Vec<u64>,
    pub absorbed: u64,
}

/// Zero-range state; the reservoir at site 1 is truncated to the particles
/// that will ever be served.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroRangeState {
    queues: Vec<VecDeque<usize>>,
    clocks: Vec<Option<u64>>,
    exited: u64,
}

impl ZeroRangeState {
    /// `particles` waiting at site 1, other sites empty.
    pub fn saturated(particles: usize, sites: usize) -> Self {
        let mut queues = vec![VecDeque::new(); sites];
        queues[0] = (0..particles).collect();
        ZeroRangeState {
            queues,
            clocks: vec![None; sites],
            exited: 0,
        }
    }

    pub fn counts(&self) -> Vec<u64> {
        self.queues.iter().map(|q| q.len() as u64).collect()
    }

    /// Clock of the front particle of each site.
    pub fn clocks(&self) -> &[Option<u64>] {
        &self.clocks
    }

    pub fn exited(&self) -> u64 {
        self.exited
    }

    fn snapshot(&self, slot: u64) -> Snapshot {
        Snapshot {
            slot,
            counts: self.counts(),
            absorbed: self.exited,
        }
    }

    /// Starts clocks of fronts that have none, then fires every expired clock,
    /// sites in order so a particle can cross several sites in one slot.
    fn resolve(&mut self, u: &ServiceMatrix<u64>, slot: u64, log: &mut Vec<Jump>) {
        let k = self.queues.len();
        for site in 0..k {
            loop {
                if self.clocks[site].is_none() {
                    match self.queues[site].front() {
                        Some(&front) => self.clocks[site] = Some(u[(front, site)]),
                        None => break,
                    }
                }
                if self.clocks[site] != Some(0) {
                    break;
                }
                let particle = self.queues[site].pop_front().expect("a clock needs a particle");
                self.clocks[site] = None;
                log.push(Jump {
                    particle: particle + 1,
                    site: site + 1,
                    slot,
                });
                if site + 1 < k {
                    self.queues[site + 1].push_back(particle);
                } else {
                    self.exited += 1;
                }
            }
        }
    }

    fn tick(&mut self) {
        for c in self.clocks.iter_mut().flatten() {
            *c -= 1;
        }
    }
}

impl From<&ZeroRangeState> for Counts {
    fn from(s: &ZeroRangeState) -> Self {
        Counts {
            sink: s.exited,
            sites: s.counts().into_iter().rev().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroRangeRun {
    pub jumps: Vec<Jump>,
    pub snapshots: Vec<Snapshot>,
}

impl ZeroRangeRun {
    /// Slot at which `particle` left `site`, both from 1.
    pub fn departure(&self, particle: usize, site: usize) -> Option<u64> {
        self.jumps
            .iter()
            .find(|j| j.particle == particle && j.site == site)
            .map(|j| j.slot)
    }
}

pub fn zero_range_run(u: &ServiceMatrix<u64>) -> ZeroRangeRun {
    let (n, k) = (u.customers(), u.stages());
    let mut state = ZeroRangeState::saturated(n, k);
    let mut jumps = Vec::with_capacity(n * k);
    state.resolve(u, 0, &mut jumps);
    let mut snapshots = vec![state.snapshot(0)];
    let mut slot = 0;
    while state.exited < n as u64 {
        slot += 1;
        state.tick();
        state.resolve(u, slot, &mut jumps);
        snapshots.push(state.snapshot(slot));
    }
    ZeroRangeRun { jumps, snapshots }
}

/// Bus-stop state; the reservoir at site `K` holds a finite stock large
/// enough for every bus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BusStopState {
    counts: Vec<u64>,
    delivered: u64,
}

impl BusStopState {
    pub fn saturated(reservoir: u64, sites: usize) -> Self {
        let mut counts = vec![0; sites];
        counts[sites - 1] = reservoir;
        BusStopState { counts, delivered: 0 }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    /// One slot with the given bus sizes; returns the amount moved per site.
    pub fn step(&mut self, buses: &[u64]) -> Vec<u64> {
        let moved: Vec<u64> = self.counts.iter().zip(buses).map(|(&c, &b)| c.min(b)).collect();
        for (site, &m) in moved.iter().enumerate() {
            self.counts[site] -= m;
            if site == 0 {
                self.delivered += m;
            } else {
                self.counts[site - 1] += m;
            }
        }
        moved
    }
}

impl From<&BusStopState> for Counts {
    fn from(s: &BusStopState) -> Self {
        Counts {
            sink: s.delivered,
            sites: s.counts.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BusStopRun {
    pub transports: Vec<Transport>,
    pub snapshots: Vec<Snapshot>,
}

impl BusStopRun {
    pub fn amount(&self, site: usize, slot: u64) -> Option<u64> {
        self.transports
            .iter()
            .find(|t| t.site == site && t.slot == slot)
            .map(|t| t.amount)
    }

    /// Particles delivered from site 1 over all slots.
    pub fn delivered(&self) -> u64 {
        self.snapshots.last().map_or(0, |s| s.absorbed)
    }
}

pub fn bus_stop_run(u: &ServiceMatrix<u64>) -> BusStopRun {
    let (n, k) = (u.customers(), u.stages());
    let reservoir: u64 = (0..n).map(|i| u[(i, k - 1)]).sum();
    let mut state = BusStopState::saturated(reservoir, k);
    let mut transports = Vec::with_capacity(n * k);
    let mut snapshots = vec![Snapshot {
        slot: 0,
        counts: state.counts.clone(),
        absorbed: 0,
    }];
    for (i, buses) in u.rows().enumerate() {
        let slot = i as u64 + 1;
        let moved = state.step(buses);
        transports.extend(moved.iter().enumerate().map(|(site, &amount)| Transport {
            site: site + 1,
            slot,
            amount,
        }));
        snapshots.push(Snapshot {
            slot,
            counts: state.counts.clone(),
            absorbed: state.delivered,
        });
    }
    BusStopRun { transports, snapshots }
}

/// Counts listed from the exit upstream: `sink` holds absorbed particles,
/// `sites[0]` is the site next to the exit and the last entry is the
/// (truncated) reservoir.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub sink: u64,
    pub sites: Vec<u64>,
}

impl Counts {
    /// Moves `min(capacity, count)` from every site one step downstream, all
    /// amounts computed from the counts at the start of the step.
    pub fn step(&self, capacities: &[u64]) -> Result<Counts> {
        if capacities.len() != self.sites.len() {
            return Err(invalid("one capacity per site is required"));
        }
        let mut next = self.clone();
        for (i, (&c, &cap)) in self.sites.iter().zip(capacities).enumerate() {
            let moved = c.min(cap);
            next.sites[i] -= moved;
            if i == 0 {
                next.sink += moved;
            } else {
                next.sites[i - 1] += moved;
            }
        }
        Ok(next)
    }
}

/// 0/1 occupancy of the exclusion picture.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Occupancy(Vec<bool>);

impl Occupancy {
    pub fn cells(&self) -> &[bool] {
        &self.0
    }

    fn heads(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }

    /// Exclusion step: heads other than the sink's jump right, in order from
    /// left to right, by `min(capacity, free cells ahead)`.
    pub fn step(&self, capacities: &[u64]) -> Result<Occupancy> {
        let heads = self.heads();
        if heads.first() != Some(&0) {
            return Err(Error::Domain("an occupancy must start with the sink head".into()));
        }
        if capacities.len() + 1 != heads.len() {
            return Err(invalid("one capacity per movable head is required"));
        }
        let mut cells = self.0.clone();
        for (h, &cap) in capacities.iter().enumerate() {
            let pos = heads[h + 1];
            let free = cells[pos + 1..].iter().take_while(|&&b| !b).count() as u64;
            let jump = cap.min(free) as usize;
            cells[pos] = false;
            cells[pos + jump] = true;
        }
        Ok(Occupancy(cells))
    }
}

impl std::fmt::Display for Occupancy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.0 {
            write!(f, "{}", u8::from(b))?;
        }
        Ok(())
    }
}

/// Each block is a head followed by as many empty cells as the block holds
/// particles: sink first, then the sites from the exit upstream.
pub fn to_exclusion(c: &Counts) -> Occupancy {
    let mut cells = Vec::new();
    for &m in std::iter::once(&c.sink).chain(&c.sites) {
        cells.push(true);
        cells.extend(std::iter::repeat_n(false, m as usize));
    }
    Occupancy(cells)
}

pub fn from_exclusion(o: &Occupancy) -> Result<Counts> {
    if o.0.first() != Some(&true) {
        return Err(Error::Domain("an occupancy must start with the sink head".into()));
    }
    let mut blocks = Vec::new();
    for &b in &o.0 {
        if b {
            blocks.push(0u64);
        } else {
            *blocks.last_mut().expect("starts with a head") += 1;
        }
    }
    Ok(Counts {
        sink: blocks[0],
        sites: blocks[1..].to_vec(),
    })
}

/// `slot, site, count` rows; site 0 holds the absorbed particles.
pub fn write_snapshots_csv<W: Write>(snapshots: &[Snapshot], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["slot", "site", "count"])?;
    for s in snapshots {
        wtr.write_record([s.slot.to_string(), "0".into(), s.absorbed.to_string()])?;
        for (site, c) in s.counts.iter().enumerate() {
            wtr.write_record([s.slot.to_string(), (site + 1).to_string(), c.to_string()])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tandem::{queue_departures, store_flow};
    use proptest::prelude::*;

    fn example() -> ServiceMatrix<u64> {
        ServiceMatrix::from_rows(vec![vec![1, 2], vec![3, 4]]).unwrap()
    }

    fn matrix() -> impl Strategy<Value = ServiceMatrix<u64>> {
        (1usize..=5, 1usize..=5).prop_flat_map(|(n, k)| {
            proptest::collection::vec(proptest::collection::vec(0u64..=5, k), n)
                .prop_map(|rows| ServiceMatrix::from_rows(rows).unwrap())
        })
    }

    #[test]
    fn single_site_jumps_at_partial_sums() {
        let u = ServiceMatrix::from_rows(vec![vec![2u64], vec![3], vec![1]]).unwrap();
        let run = zero_range_run(&u);
        let slots: Vec<u64> = (1..=3).map(|n| run.departure(n, 1).unwrap()).collect();
        assert_eq!(slots, vec![2, 5, 6]);
    }

    #[test]
    fn zero_range_example() {
        let run = zero_range_run(&example());
        assert_eq!(run.departure(2, 2), Some(8));
        assert_eq!(run.departure(1, 1), Some(1));
        let last = run.snapshots.last().unwrap();
        assert_eq!((last.slot, last.absorbed, last.counts.clone()), (8, 2, vec![0, 0]));
    }

    #[test]
    fn zero_services_cross_in_one_slot() {
        let u = ServiceMatrix::from_rows(vec![vec![0u64, 0, 0], vec![1, 0, 2]]).unwrap();
        let run = zero_range_run(&u);
        assert!((1..=3).all(|j| run.departure(1, j) == Some(0)));
        assert_eq!(run.departure(2, 3), Some(3));
    }

    #[test]
    fn bus_stop_examples() {
        let u = ServiceMatrix::from_rows(vec![vec![4u64], vec![0], vec![2]]).unwrap();
        let run = bus_stop_run(&u);
        assert_eq!(
            (1..=3).map(|n| run.amount(1, n).unwrap()).collect::<Vec<_>>(),
            vec![4, 0, 2]
        );
        assert_eq!(bus_stop_run(&example()).delivered(), 2);
    }

    #[test]
    fn exclusion_boundary_pattern() {
        let c = Counts {
            sink: 0,
            sites: vec![0, 0, 3],
        };
        assert_eq!(to_exclusion(&c).to_string(), "1111000");
        let c = Counts {
            sink: 2,
            sites: vec![1, 0],
        };
        assert_eq!(to_exclusion(&c).to_string(), "100101");
        assert!(from_exclusion(&Occupancy(vec![false, true])).is_err());
    }

    #[test]
    fn exclusion_step_is_left_to_right() {
        // the downstream head moves first into the holes of its own block
        let o = to_exclusion(&Counts {
            sink: 0,
            sites: vec![1, 2],
        });
        assert_eq!(o.to_string(), "110100");
        let next = o.step(&[5, 1]).unwrap();
        assert_eq!(next.to_string(), "101010");
        assert_eq!(
            from_exclusion(&next).unwrap(),
            Counts {
                sink: 1,
                sites: vec![1, 1]
            }
        );
    }

    #[test]
    fn snapshot_csv() {
        let run = zero_range_run(&ServiceMatrix::from_rows(vec![vec![1u64]]).unwrap());
        let mut buf = Vec::new();
        write_snapshots_csv(&run.snapshots, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "slot,site,count\n0,0,0\n0,1,1\n1,0,1\n1,1,0\n"
        );
    }

    fn counts() -> impl Strategy<Value = (Counts, Vec<u64>)> {
        (1usize..=6).prop_flat_map(|k| {
            (
                0u64..=4,
                proptest::collection::vec(0u64..=4, k),
                proptest::collection::vec(0u64..=5, k),
            )
                .prop_map(|(sink, sites, caps)| (Counts { sink, sites }, caps))
        })
    }

    proptest! {
        #[test]
        fn zero_range_matches_departures(u in matrix()) {
            let run = zero_range_run(&u);
            let d = queue_departures(&u);
            prop_assert_eq!(run.jumps.len(), u.customers() * u.stages());
            for j in &run.jumps {
                prop_assert_eq!(j.slot, d.at(j.particle, j.site));
            }
            let total = u.customers() as u64;
            prop_assert!(run.snapshots.iter().all(|s| s.counts.iter().sum::<u64>() + s.absorbed == total));
        }

        #[test]
        fn bus_stop_matches_store_flow(u in matrix()) {
            let run = bus_stop_run(&u);
            let flow = store_flow(&u);
            let k = u.stages();
            for t in &run.transports {
                prop_assert_eq!(t.amount, flow.departure(t.slot as usize, k + 1 - t.site));
            }
            prop_assert_eq!(run.delivered(), flow.total());
            let start: u64 = run.snapshots[0].counts.iter().sum();
            prop_assert!(run.snapshots.iter().all(|s| s.counts.iter().sum::<u64>() + s.absorbed == start));
        }

        #[test]
        fn exclusion_round_trip((c, _) in counts()) {
            prop_assert_eq!(from_exclusion(&to_exclusion(&c)).unwrap(), c);
        }

        #[test]
        fn exclusion_step_commutes((c, caps) in counts()) {
            let via_counts = to_exclusion(&c.step(&caps).unwrap());
            let via_cells = to_exclusion(&c).step(&caps).unwrap();
            prop_assert_eq!(via_cells, via_counts);
        }
    }
}
