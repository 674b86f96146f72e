//! Episode runner: owns one world, executes dispatch decisions, scores them, and hands the
//! finished episode to the metric code.

use std::sync::Arc;

use crate::city::{Arrivals, City, DispatchOutcome, DriverId, Point, SimParams, SlotReport, TraceOrder, WorldState};
use crate::error::{Error, Result};
use crate::human::{
    compute_metrics, dispatch_cost, order_reward, region_mean_waits, DispatchRecord, FairnessBenchmark, MetricsReport,
    PreferenceProfile,
};

/// Independent random streams derived from one episode seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Placement = 1,
    Arrivals = 2,
    Policy = 3,
    ActorShuffle = 4,
    RewardCritic = 5,
    CostCritic = 6,
    ActorInit = 7,
    RewardCriticInit = 8,
    CostCriticInit = 9,
}

/// SplitMix64 finalizer over `(seed, stream)`.
pub fn stream_seed(seed: u64, stream: Stream) -> u64 {
    let mut z = seed ^ (stream as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub enum OrderSource {
    Poisson,
    Trace(Arc<Vec<TraceOrder>>),
}

/// Everything needed to start an episode: the city, simulator settings, driver profiles, the
/// fairness benchmark and the reward mix.
#[derive(Debug, Clone)]
pub struct Environment {
    pub city: Arc<City>,
    pub params: SimParams,
    pub profiles: Arc<Vec<PreferenceProfile>>,
    pub benchmark: Arc<FairnessBenchmark>,
    pub alpha: f64,
    pub source: OrderSource,
}

impl Environment {
    pub fn new(
        city: City,
        params: SimParams,
        profiles: Vec<PreferenceProfile>,
        benchmark: FairnessBenchmark,
        alpha: f64,
        source: OrderSource,
    ) -> Result<Self> {
        params.validate()?;
        if profiles.is_empty() {
            return Err(Error::InvalidScenario("empty driver roster".into()));
        }
        if benchmark.num_regions() != city.num_regions() {
            return Err(Error::InvalidScenario(format!(
                "benchmark covers {} regions, city has {}",
                benchmark.num_regions(),
                city.num_regions()
            )));
        }
        if let Some(p) = profiles.iter().find(|p| p.frequency.len() != city.num_regions()) {
            return Err(Error::InvalidScenario(format!("profile of driver {} has the wrong region count", p.driver)));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidConfig { key: "alpha".into(), reason: format!("{alpha} not in [0, 1]") });
        }
        Ok(Environment {
            city: Arc::new(city),
            params,
            profiles: Arc::new(profiles),
            benchmark: Arc::new(benchmark),
            alpha,
            source,
        })
    }

    pub fn n_drivers(&self) -> usize {
        self.profiles.len()
    }

    /// Fresh world at slot 0, seeded from `seed`.
    pub fn episode(&self, seed: u64) -> Result<Episode<'_>> {
        let mut world =
            WorldState::init(Arc::clone(&self.city), self.params, self.n_drivers(), stream_seed(seed, Stream::Placement))?;
        let grid = &self.city.grid;
        let targets: Vec<Vec<Point>> =
            self.profiles.iter().map(|p| p.positive().iter().map(|&u| grid.center(u)).collect()).collect();
        world.set_cruise_targets(targets)?;
        let arrivals = match &self.source {
            OrderSource::Poisson => Arrivals::poisson(&self.city, stream_seed(seed, Stream::Arrivals)),
            OrderSource::Trace(orders) => Arrivals::trace(orders.as_ref().clone()),
        };
        Ok(Episode { env: self, world, arrivals, records: Vec::new() })
    }
}

/// One running episode.
pub struct Episode<'e> {
    env: &'e Environment,
    world: WorldState,
    arrivals: Arrivals,
    records: Vec<DispatchRecord>,
}

impl<'e> Episode<'e> {
    pub fn env(&self) -> &'e Environment {
        self.env
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn records(&self) -> &[DispatchRecord] {
        &self.records
    }

    pub fn is_done(&self) -> bool {
        self.world.clock.is_over()
    }

    /// Executes a dispatch and scores it with the order reward and the driver's preference cost.
    pub fn commit(&mut self, order: usize, driver: DriverId) -> Result<DispatchRecord> {
        let DispatchOutcome { wait_seconds, .. } = self.world.apply_dispatch(order, driver)?;
        let o = &self.world.orders()[order];
        let period = o.period(self.env.params.slot_seconds);
        let cell = self.world.wait_stats.cell(o.origin_region, period).expect("wait recorded by dispatch");
        let reward = order_reward(wait_seconds, cell, self.env.benchmark.wt_c(o.origin_region, period), self.env.alpha)?;
        let cost = dispatch_cost(&self.env.profiles[driver], o.dest_region, &self.env.city.grid);
        let record = DispatchRecord {
            slot: self.world.clock.slot,
            order,
            driver,
            origin_region: o.origin_region,
            dest_region: o.dest_region,
            period,
            wait_seconds,
            reward,
            cost,
        };
        self.records.push(record.clone());
        Ok(record)
    }

    pub fn advance(&mut self) -> Result<SlotReport> {
        self.world.advance_slot(&mut self.arrivals)
    }

    pub fn finish(self) -> Result<EpisodeOutcome> {
        let p = &self.env.params;
        let metrics = compute_metrics(
            self.world.orders(),
            &self.records,
            &self.env.profiles,
            &self.env.benchmark,
            p.slot_seconds,
            p.max_wait_slots,
        )?;
        let region_waits =
            region_mean_waits(self.world.orders(), self.env.city.num_regions(), p.slot_seconds, p.max_wait_slots);
        Ok(EpisodeOutcome { metrics, region_waits, records: self.records })
    }
}

/// A finished episode: metrics, per-region mean waits (seconds) and the dispatch log.
#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub metrics: MetricsReport,
    pub region_waits: Vec<Option<f64>>,
    pub records: Vec<DispatchRecord>,
}

impl EpisodeOutcome {
    pub fn total_reward(&self) -> f64 {
        self.records.iter().map(|r| r.reward).sum()
    }

    pub fn total_cost(&self) -> f64 {
        self.records.iter().map(|r| r.cost).sum()
    }
}

/// Per-slot decision maker. Called once at the start of every slot, before the world advances.
pub trait Dispatcher {
    fn dispatch(&mut self, episode: &mut Episode<'_>) -> Result<()>;
}

pub fn run_episode(env: &Environment, seed: u64, dispatcher: &mut dyn Dispatcher) -> Result<EpisodeOutcome> {
    let mut episode = env.episode(seed)?;
    while !episode.is_done() {
        dispatcher.dispatch(&mut episode)?;
        episode.advance()?;
    }
    episode.finish()
}
