use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::geometry::{Grid, Point, RegionId};
use super::types::{City, SimClock, PERIODS};

/// One order as it enters the city, either sampled or replayed from a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceOrder {
    pub order_id: u64,
    pub creation_slot: usize,
    pub origin_region: RegionId,
    pub dest_region: RegionId,
    pub origin_x: f64,
    pub origin_y: f64,
    pub dest_x: f64,
    pub dest_y: f64,
}

impl TraceOrder {
    pub fn origin(&self) -> Point {
        Point::new(self.origin_x, self.origin_y)
    }

    pub fn destination(&self) -> Point {
        Point::new(self.dest_x, self.dest_y)
    }
}

/// Source of new orders; owns its own random stream so arrivals never depend on dispatch decisions.
#[derive(Debug, Clone)]
pub enum Arrivals {
    Poisson(PoissonArrivals),
    Trace { orders: Vec<TraceOrder>, cursor: usize },
}

#[derive(Debug, Clone)]
pub struct PoissonArrivals {
    rng: ChaCha8Rng,
    /// `counts[u * 24 + v]`, `None` when the intensity is zero.
    counts: Vec<Option<Poisson<f64>>>,
    destinations: Vec<WeightedIndex<f64>>,
    next_id: u64,
}

impl Arrivals {
    /// Poisson arrivals per region and period, destinations from a gravity model
    /// `P(w | u, v) ∝ (λ(w, v) + floor) · exp(−dist(u, w) / trip_length)`.
    pub fn poisson(city: &City, seed: u64) -> Self {
        let n = city.num_regions();
        let mut counts = Vec::with_capacity(n * PERIODS);
        for u in 0..n {
            for v in 0..PERIODS {
                let lambda = city.intensity(u, v);
                counts.push(if lambda > 0.0 { Poisson::new(lambda).ok() } else { None });
            }
        }
        let mut destinations = Vec::with_capacity(n * PERIODS);
        for u in 0..n {
            for v in 0..PERIODS {
                let mean = (0..n).map(|w| city.intensity(w, v)).sum::<f64>() / n as f64;
                let floor = 0.05 * mean + 1e-9;
                let weights: Vec<f64> = (0..n)
                    .map(|w| {
                        let d = city.grid.region_distance(u, w);
                        (city.intensity(w, v) + floor) * (-d / city.trip_length_km).exp()
                    })
                    .collect();
                destinations.push(WeightedIndex::new(weights).expect("strictly positive weights"));
            }
        }
        Arrivals::Poisson(PoissonArrivals { rng: ChaCha8Rng::seed_from_u64(seed), counts, destinations, next_id: 0 })
    }

    /// Replays a trace; orders are taken in `(creation_slot, order_id)` order.
    pub fn trace(mut orders: Vec<TraceOrder>) -> Self {
        orders.sort_by_key(|o| (o.creation_slot, o.order_id));
        Arrivals::Trace { orders, cursor: 0 }
    }

    /// Orders created during `slot`.
    pub(crate) fn sample(&mut self, city: &City, slot: usize, slot_seconds: u32) -> Vec<TraceOrder> {
        match self {
            Arrivals::Poisson(p) => p.sample(city, slot, slot_seconds),
            Arrivals::Trace { orders, cursor } => {
                while *cursor < orders.len() && orders[*cursor].creation_slot < slot {
                    *cursor += 1;
                }
                let start = *cursor;
                while *cursor < orders.len() && orders[*cursor].creation_slot == slot {
                    *cursor += 1;
                }
                orders[start..*cursor].to_vec()
            }
        }
    }
}

impl PoissonArrivals {
    fn sample(&mut self, city: &City, slot: usize, slot_seconds: u32) -> Vec<TraceOrder> {
        let v = SimClock::period_of(slot, slot_seconds);
        let mut out = Vec::new();
        for u in 0..city.num_regions() {
            let Some(dist) = &self.counts[u * PERIODS + v] else { continue };
            let k = dist.sample(&mut self.rng) as usize;
            for _ in 0..k {
                let w = self.destinations[u * PERIODS + v].sample(&mut self.rng);
                let origin = point_in_cell(&city.grid, u, &mut self.rng);
                let dest = point_in_cell(&city.grid, w, &mut self.rng);
                out.push(TraceOrder {
                    order_id: self.next_id,
                    creation_slot: slot,
                    origin_region: u,
                    dest_region: w,
                    origin_x: origin.x,
                    origin_y: origin.y,
                    dest_x: dest.x,
                    dest_y: dest.y,
                });
                self.next_id += 1;
            }
        }
        out
    }
}

/// Uniform point inside a grid cell.
pub(crate) fn point_in_cell<R: Rng + ?Sized>(grid: &Grid, region: RegionId, rng: &mut R) -> Point {
    let (row, col) = grid.row_col(region);
    let x = (col as f64 + rng.random::<f64>()) * grid.cell_km;
    let y = (row as f64 + rng.random::<f64>()) * grid.cell_km;
    Point::new(x, y)
}
