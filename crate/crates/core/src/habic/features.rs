//! Fixed-width encodings of (driver, order) pairs for the actor and of decision points for the
//! critics. Every component lies in [−1, 1].

use std::f64::consts::TAU;

use crate::city::{DriverId, Grid, WorldState, PERIODS};
use crate::episode::Environment;
use crate::human::{PreferenceProfile, RegionClass};

/// Number of components in a matching feature.
pub const MATCHING_DIM: usize = 24;
/// Number of components in a critic state.
pub const STATE_DIM: usize = 16;

/// Neighbourhood counts are divided by this before clipping.
const COUNT_SCALE: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct FeatureEncoder {
    grid: Grid,
    diameter_km: f64,
    radius_km: f64,
    n_drivers: f64,
    episode_slots: f64,
    slot_seconds: u32,
    max_pickup_slots: f64,
    base_wait_seconds: f64,
    negative_share: Vec<f64>,
}

fn clip(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Maps `[0, span]` onto `[−1, 1]`.
fn centered(x: f64, span: f64) -> f64 {
    if span > 0.0 {
        clip(2.0 * x / span - 1.0)
    } else {
        0.0
    }
}

fn count(n: usize) -> f64 {
    (n as f64 / COUNT_SCALE).min(1.0)
}

impl FeatureEncoder {
    pub fn new(env: &Environment) -> Self {
        let grid = env.city.grid;
        let step = env.params.step_km();
        let negative_share = env
            .profiles
            .iter()
            .map(|p: &PreferenceProfile| {
                p.classes().iter().filter(|c| **c == RegionClass::Negative).count() as f64 / grid.num_regions() as f64
            })
            .collect();
        FeatureEncoder {
            diameter_km: grid.diameter_km(),
            radius_km: env.params.pickup_radius_km,
            n_drivers: env.n_drivers() as f64,
            episode_slots: env.params.episode_slots as f64,
            slot_seconds: env.params.slot_seconds,
            max_pickup_slots: (env.params.pickup_radius_km / step).ceil().max(1.0),
            base_wait_seconds: env.benchmark.base_wait_seconds,
            negative_share,
            grid,
        }
    }

    pub fn matching_dim(&self) -> usize {
        MATCHING_DIM
    }

    pub fn state_dim(&self) -> usize {
        STATE_DIM
    }

    fn xy(&self, x: f64, y: f64) -> [f64; 2] {
        [centered(x, self.grid.width_km()), centered(y, self.grid.height_km())]
    }

    /// Appends one matching feature per candidate to `out`, candidates in the given order.
    pub fn matching_features(
        &self,
        world: &WorldState,
        env: &Environment,
        order: usize,
        candidates: &[DriverId],
        out: &mut Vec<f64>,
    ) {
        let o = &world.orders()[order];
        let period = o.period(self.slot_seconds);
        let angle = TAU * period as f64 / PERIODS as f64;
        let (row, col) = self.grid.row_col(o.origin_region);
        let global_idle = world.available_count() as f64 / self.n_drivers;
        let global_open = (world.open_orders().len() as f64 / self.n_drivers).min(1.0);
        let trip = o.origin.distance(o.destination) / self.diameter_km;
        let origin = self.xy(o.origin.x, o.origin.y);
        let dest = self.xy(o.destination.x, o.destination.y);
        for &k in candidates {
            let d = &world.drivers()[k];
            let profile = &env.profiles[k];
            let class = profile.class(o.dest_region);
            let to_home = |u| profile.distance_to_positive(&self.grid, u).map_or(0.0, |x| x / self.diameter_km);
            let (near_drivers, near_orders) = world.local_counts(d.position, self.radius_km);
            let pickup_km = d.position.distance(o.origin);
            let pickup_slots = world.travel_slots(d.position, o.origin).unwrap_or(0) as f64;
            let pos = self.xy(d.position.x, d.position.y);
            out.extend_from_slice(&[
                pos[0],
                pos[1],
                angle.sin(),
                angle.cos(),
                f64::from(u8::from(class == RegionClass::Positive)),
                f64::from(u8::from(class == RegionClass::Neutral)),
                f64::from(u8::from(class == RegionClass::Negative)),
                clip(to_home(o.dest_region)),
                clip(to_home(d.region)),
                self.negative_share[k],
                count(near_drivers),
                count(near_orders),
                global_idle,
                global_open,
                origin[0],
                origin[1],
                dest[0],
                dest[1],
                centered(row as f64, (self.grid.rows - 1) as f64),
                centered(col as f64, (self.grid.cols - 1) as f64),
                centered(period as f64, (PERIODS - 1) as f64),
                centered(pickup_km, self.radius_km),
                centered(pickup_slots, self.max_pickup_slots),
                clip(trip),
            ]);
        }
    }

    /// Appends the critic input for the decision about `order`, taken before the dispatch.
    pub fn state_features(
        &self,
        world: &WorldState,
        env: &Environment,
        order: usize,
        n_candidates: usize,
        out: &mut Vec<f64>,
    ) {
        let o = &world.orders()[order];
        let period = o.period(self.slot_seconds);
        let angle = TAU * period as f64 / PERIODS as f64;
        let (near_drivers, near_orders) = world.local_counts(o.origin, self.radius_km);
        let wt_c = env.benchmark.wt_c(o.origin_region, period);
        let cell = world.wait_stats.cell(o.origin_region, period);
        let (k, gap, msd) = match cell {
            Some(c) if c.count() > 0 => (
                c.count(),
                (c.mean().unwrap_or(wt_c) - wt_c) / 300.0,
                c.mean_sq_deviation(wt_c).unwrap_or(0.0) / 3600.0 / 25.0,
            ),
            _ => (0, 0.0, 0.0),
        };
        let origin = self.xy(o.origin.x, o.origin.y);
        let dest = self.xy(o.destination.x, o.destination.y);
        out.extend_from_slice(&[
            centered(world.clock.slot as f64, self.episode_slots),
            angle.sin(),
            angle.cos(),
            world.available_count() as f64 / self.n_drivers,
            (world.open_orders().len() as f64 / self.n_drivers).min(1.0),
            origin[0],
            origin[1],
            dest[0],
            dest[1],
            count(near_drivers),
            count(near_orders),
            count(n_candidates),
            msd.tanh(),
            (k as f64 / 20.0).tanh(),
            gap.tanh(),
            centered(wt_c, 2.0 * self.base_wait_seconds),
        ]);
    }
}
