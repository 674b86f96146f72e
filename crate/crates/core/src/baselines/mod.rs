//! Reference dispatchers: per-slot minimum total pickup time (MD), uniform random choice, and the
//! unconstrained trainer ablation.

mod hungarian;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use hungarian::solve_assignment;

use crate::city::{DriverId, WorldState};
use crate::episode::{Dispatcher, Episode};
use crate::error::{Error, Result};
use crate::habic::TrainConfig;

/// Default size limit for the exact solver; larger slots use greedy nearest pairs.
pub const ASSIGNMENT_EXACT_CAP: usize = 64;

/// Order-index / driver pairs for one slot.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    pub pairs: Vec<(usize, DriverId)>,
}

impl Assignment {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Every order and driver at most once, and every pair a valid candidate pair in `world`.
    pub fn validate(&self, world: &WorldState) -> Result<()> {
        let mut orders = BTreeSet::new();
        let mut drivers = BTreeSet::new();
        for &(o, d) in &self.pairs {
            if !orders.insert(o) || !drivers.insert(d) {
                return Err(Error::InvalidDispatch(format!("pair ({o}, {d}) repeats an order or driver")));
            }
            if !world.candidate_set(o).contains(&d) {
                return Err(Error::InvalidDispatch(format!("driver {d} is not a candidate for order index {o}")));
            }
        }
        Ok(())
    }

    /// Sum of straight-line pickup distances in km.
    pub fn total_pickup_km(&self, world: &WorldState) -> f64 {
        self.pairs.iter().map(|&(o, d)| world.drivers()[d].position.distance(world.orders()[o].origin)).sum()
    }
}

/// Matches open orders to candidate drivers, first maximizing the number of matched orders and
/// then minimizing total pickup travel time. Exact when the smaller side has at most
/// `exact_cap` participants, greedy nearest-pair otherwise.
pub fn md_dispatch(world: &WorldState, exact_cap: usize) -> Assignment {
    let open = world.open_orders();
    let candidates: Vec<Vec<DriverId>> = open.iter().map(|&o| world.candidate_set(o)).collect();
    let drivers: Vec<DriverId> = candidates.iter().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if drivers.is_empty() {
        return Assignment::default();
    }
    let seconds_per_km = 3600.0 / world.params().speed_kmh;
    let pickup = |o: usize, d: DriverId| world.drivers()[d].position.distance(world.orders()[o].origin) * seconds_per_km;
    let (n, m) = (open.len(), drivers.len());
    let column: std::collections::BTreeMap<DriverId, usize> = drivers.iter().enumerate().map(|(j, &d)| (d, j)).collect();

    if n.min(m) > exact_cap {
        let mut pairs: Vec<(f64, DriverId, usize)> = Vec::new();
        for (i, cands) in candidates.iter().enumerate() {
            pairs.extend(cands.iter().map(|&d| (pickup(open[i], d), d, i)));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut used_o = vec![false; n];
        let mut used_d = BTreeSet::new();
        let mut chosen = Vec::new();
        for (_, d, i) in pairs {
            if !used_o[i] && !used_d.contains(&d) {
                used_o[i] = true;
                used_d.insert(d);
                chosen.push((i, d));
            }
        }
        chosen.sort_unstable();
        return Assignment { pairs: chosen.into_iter().map(|(i, d)| (open[i], d)).collect() };
    }

    let mut feasible = vec![false; n * m];
    let mut cost = vec![0.0; n * m];
    let mut max_cost: f64 = 0.0;
    for (i, cands) in candidates.iter().enumerate() {
        for &d in cands {
            let j = column[&d];
            feasible[i * m + j] = true;
            cost[i * m + j] = pickup(open[i], d);
            max_cost = max_cost.max(cost[i * m + j]);
        }
    }
    // an infeasible pair costs more than any full set of feasible ones, so cardinality comes first
    let big = (n.min(m) as f64 + 1.0) * (max_cost + 1.0);
    for (c, f) in cost.iter_mut().zip(&feasible) {
        if !f {
            *c = big;
        }
    }
    let solved = solve_assignment(&cost, n, m).expect("finite square-compatible cost matrix");
    let pairs = solved
        .into_iter()
        .enumerate()
        .filter_map(|(i, j)| j.filter(|&j| feasible[i * m + j]).map(|j| (open[i], drivers[j])))
        .collect();
    Assignment { pairs }
}

/// Orders in creation order each take a uniformly random still-free candidate.
pub fn random_dispatch<R: Rng + ?Sized>(world: &WorldState, rng: &mut R) -> Assignment {
    let mut taken = BTreeSet::new();
    let mut pairs = Vec::new();
    for &o in world.open_orders() {
        let free: Vec<DriverId> = world.candidate_set(o).into_iter().filter(|d| !taken.contains(d)).collect();
        if free.is_empty() {
            continue;
        }
        let d = free[rng.random_range(0..free.len())];
        taken.insert(d);
        pairs.push((o, d));
    }
    Assignment { pairs }
}

/// The trainer with the multiplier frozen at zero and the cost critic switched off.
pub fn unconstrained_ablation(config: &TrainConfig) -> TrainConfig {
    TrainConfig { constrained: false, initial_lambda: 0.0, ..config.clone() }
}

fn commit(episode: &mut Episode<'_>, assignment: &Assignment) -> Result<()> {
    for &(o, d) in &assignment.pairs {
        episode.commit(o, d)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct MdDispatcher {
    pub exact_cap: usize,
}

impl Default for MdDispatcher {
    fn default() -> Self {
        MdDispatcher { exact_cap: ASSIGNMENT_EXACT_CAP }
    }
}

impl Dispatcher for MdDispatcher {
    fn dispatch(&mut self, episode: &mut Episode<'_>) -> Result<()> {
        let a = md_dispatch(episode.world(), self.exact_cap);
        commit(episode, &a)
    }
}

#[derive(Debug, Clone)]
pub struct RandomDispatcher {
    rng: ChaCha8Rng,
}

impl RandomDispatcher {
    pub fn new(seed: u64) -> Self {
        RandomDispatcher { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Dispatcher for RandomDispatcher {
    fn dispatch(&mut self, episode: &mut Episode<'_>) -> Result<()> {
        let a = random_dispatch(episode.world(), &mut self.rng);
        commit(episode, &a)
    }
}

/// Dispatch method selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Md,
    Random,
    Habic,
    HabicUnconstrained,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Md, Method::Random, Method::Habic, Method::HabicUnconstrained];

    pub fn name(self) -> &'static str {
        match self {
            Method::Md => "md",
            Method::Random => "random",
            Method::Habic => "habic",
            Method::HabicUnconstrained => "habic_unconstrained",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}; expected md, random, habic or habic_unconstrained")))
    }
}
