use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use super::arrivals::{point_in_cell, Arrivals};
use super::geometry::{travel_time, Point};
use super::types::{City, DriverId, DriverState, DriverStatus, Order, OrderStatus, SimClock, SimParams};
use crate::error::{Error, Result};
use crate::human::WaitStats;

/// Full simulator snapshot.
#[derive(Debug, Clone)]
pub struct WorldState {
    city: Arc<City>,
    params: SimParams,
    pub clock: SimClock,
    drivers: Vec<DriverState>,
    orders: Vec<Order>,
    /// Indices of open orders in creation order.
    open: Vec<usize>,
    pub wait_stats: WaitStats,
    /// Centres of each driver's positive regions, the targets of the home-biased cruise.
    cruise_targets: Vec<Vec<Point>>,
    cruise_rng: ChaCha8Rng,
}

/// Result of executing one dispatch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispatchOutcome {
    pub order: usize,
    pub driver: DriverId,
    pub pickup_slot: usize,
    pub completion_slot: usize,
    pub wait_slots: usize,
    pub wait_seconds: f64,
}

/// What happened during one [`WorldState::advance_slot`] call. All entries are order indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlotReport {
    pub created: Vec<usize>,
    pub picked_up: Vec<usize>,
    pub completed: Vec<usize>,
    pub expired: Vec<usize>,
}

impl WorldState {
    /// Places `n_drivers` by sampling regions from the city's placement weights, uniformly inside
    /// the sampled cell. Deterministic in `seed`.
    pub fn init(city: Arc<City>, params: SimParams, n_drivers: usize, seed: u64) -> Result<Self> {
        params.validate()?;
        if city.num_regions() == 0 {
            return Err(Error::InvalidScenario("empty region set".into()));
        }
        if n_drivers == 0 {
            return Err(Error::InvalidScenario("no drivers".into()));
        }
        let sampler = WeightedIndex::new(&city.placement)
            .map_err(|e| Error::InvalidScenario(format!("placement weights: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let drivers = (0..n_drivers)
            .map(|id| {
                let region = sampler.sample(&mut rng);
                let position = point_in_cell(&city.grid, region, &mut rng);
                DriverState {
                    id,
                    position,
                    region,
                    status: DriverStatus::Idle,
                    busy_until_slot: None,
                    assigned_order: None,
                }
            })
            .collect();
        let cruise_rng = ChaCha8Rng::seed_from_u64(rng.random());
        Ok(WorldState {
            clock: SimClock { slot: 0, slot_seconds: params.slot_seconds, episode_slots: params.episode_slots },
            city,
            params,
            drivers,
            orders: Vec::new(),
            open: Vec::new(),
            wait_stats: WaitStats::new(),
            cruise_targets: vec![Vec::new(); n_drivers],
            cruise_rng,
        })
    }

    /// World with one idle driver at each of `positions`, each cruising back to its own start.
    /// With `p_home = 1` the drivers stay put between dispatches.
    pub fn with_drivers_at(city: Arc<City>, params: SimParams, positions: &[Point]) -> Result<Self> {
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteCoordinate("driver position"));
        }
        let mut w = WorldState::init(city, params, positions.len(), 0)?;
        for (d, p) in w.drivers.iter_mut().zip(positions) {
            d.position = *p;
            d.region = w.city.grid.region_of(*p);
        }
        w.set_cruise_targets(positions.iter().map(|p| vec![*p]).collect())?;
        Ok(w)
    }

    pub fn set_cruise_targets(&mut self, targets: Vec<Vec<Point>>) -> Result<()> {
        if targets.len() != self.drivers.len() {
            return Err(Error::ShapeMismatch { expected: self.drivers.len(), actual: targets.len() });
        }
        self.cruise_targets = targets;
        Ok(())
    }

    pub fn city(&self) -> &City {
        &self.city
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn drivers(&self) -> &[DriverState] {
        &self.drivers
    }

    pub fn driver(&self, id: DriverId) -> Option<&DriverState> {
        self.drivers.get(id)
    }

    pub fn orders(&self) -> &[Order] {
        &self.orders
    }

    pub fn order(&self, index: usize) -> Option<&Order> {
        self.orders.get(index)
    }

    /// Open order indices in creation order.
    pub fn open_orders(&self) -> &[usize] {
        &self.open
    }

    pub fn available_drivers(&self) -> impl Iterator<Item = &DriverState> {
        self.drivers.iter().filter(|d| d.status.is_available())
    }

    pub fn available_count(&self) -> usize {
        self.available_drivers().count()
    }

    /// Available drivers and open orders within `radius_km` of `p`.
    pub fn local_counts(&self, p: Point, radius_km: f64) -> (usize, usize) {
        let drivers = self.available_drivers().filter(|d| d.position.distance(p) <= radius_km).count();
        let orders = self.open.iter().filter(|&&i| self.orders[i].origin.distance(p) <= radius_km).count();
        (drivers, orders)
    }

    pub fn travel_slots(&self, from: Point, to: Point) -> Result<usize> {
        travel_time(from, to, self.params.speed_kmh, f64::from(self.params.slot_seconds))
    }

    /// Idle or cruising drivers within the pickup radius of the order's origin, by ascending id.
    pub fn candidate_set(&self, order: usize) -> Vec<DriverId> {
        self.candidates_within(order, self.params.pickup_radius_km)
    }

    pub fn candidates_within(&self, order: usize, radius_km: f64) -> Vec<DriverId> {
        let Some(o) = self.orders.get(order) else { return Vec::new() };
        if o.status != OrderStatus::Open {
            return Vec::new();
        }
        self.drivers
            .iter()
            .filter(|d| d.status.is_available() && d.position.distance(o.origin) <= radius_km)
            .map(|d| d.id)
            .collect()
    }

    /// Sends `driver` to pick up `order`. The pickup slot is known immediately, so the order's
    /// waiting time is recorded into the wait statistics here.
    pub fn apply_dispatch(&mut self, order: usize, driver: DriverId) -> Result<DispatchOutcome> {
        let now = self.clock.slot;
        let o = self.orders.get(order).ok_or_else(|| Error::InvalidDispatch(format!("unknown order index {order}")))?;
        if o.status != OrderStatus::Open {
            return Err(Error::InvalidDispatch(format!("order {} is {:?}, not open", o.id, o.status)));
        }
        let d = self.drivers.get(driver).ok_or_else(|| Error::InvalidDispatch(format!("unknown driver {driver}")))?;
        if !d.status.is_available() || d.position.distance(o.origin) > self.params.pickup_radius_km {
            return Err(Error::InvalidDispatch(format!("driver {driver} is not a candidate for order {}", o.id)));
        }
        let to_pickup = self.travel_slots(d.position, o.origin)?;
        let trip = self.travel_slots(o.origin, o.destination)?;
        let pickup_slot = now + to_pickup;
        let completion_slot = pickup_slot + trip;
        let wait_slots = pickup_slot - o.creation_slot;
        let wait_seconds = (wait_slots as f64) * f64::from(self.params.slot_seconds);
        let (origin, origin_region) = (o.origin, o.origin_region);
        let period = o.period(self.params.slot_seconds);

        let o = &mut self.orders[order];
        o.status = OrderStatus::Assigned;
        o.pickup_slot = Some(pickup_slot);
        o.completion_slot = Some(completion_slot);
        o.driver = Some(driver);
        let d = &mut self.drivers[driver];
        d.status = DriverStatus::EnroutePickup;
        d.busy_until_slot = Some(completion_slot);
        d.assigned_order = Some(order);
        if pickup_slot == now {
            d.status = DriverStatus::Occupied;
            d.position = origin;
            d.region = origin_region;
            self.orders[order].status = OrderStatus::PickedUp;
        }
        self.open.retain(|&i| i != order);
        self.wait_stats.record(origin_region, period, wait_seconds);
        Ok(DispatchOutcome { order, driver, pickup_slot, completion_slot, wait_slots, wait_seconds })
    }

    /// Moves an idle driver one slot's distance: towards its nearest positive-region centre with
    /// probability `p_home`, otherwise towards a uniformly chosen neighbouring region centre.
    pub fn cruise_step<R: Rng + ?Sized>(&mut self, driver: DriverId, rng: &mut R) -> Result<Point> {
        let d = self.drivers.get(driver).ok_or_else(|| Error::InvalidArgument(format!("unknown driver {driver}")))?;
        if !d.status.is_available() {
            return Err(Error::InvalidArgument(format!("driver {driver} is busy and cannot cruise")));
        }
        let target = self.cruise_target(driver, rng);
        let d = &mut self.drivers[driver];
        let next = d.position.step_towards(target, self.params.step_km());
        d.status = if next == d.position { DriverStatus::Idle } else { DriverStatus::Cruising };
        d.position = next;
        d.region = self.city.grid.region_of(next);
        Ok(next)
    }

    fn cruise_target<R: Rng + ?Sized>(&self, driver: DriverId, rng: &mut R) -> Point {
        let d = &self.drivers[driver];
        let homes = &self.cruise_targets[driver];
        if !homes.is_empty() && rng.random::<f64>() < self.params.p_home {
            return *homes
                .iter()
                .min_by(|a, b| a.distance(d.position).total_cmp(&b.distance(d.position)))
                .expect("non-empty");
        }
        let neighbors = self.city.grid.neighbors(d.region);
        if neighbors.is_empty() {
            return self.city.grid.center(d.region);
        }
        let pick = neighbors[rng.random_range(0..neighbors.len())];
        self.city.grid.center(pick)
    }

    /// Advances one slot: samples the slot's arrivals, cruises idle drivers, moves the clock,
    /// finalizes due pickups and completions, then expires orders open for `max_wait_slots`.
    pub fn advance_slot(&mut self, arrivals: &mut Arrivals) -> Result<SlotReport> {
        if self.clock.is_over() {
            return Err(Error::EpisodeOver(self.clock.episode_slots));
        }
        let mut report = SlotReport::default();
        let t = self.clock.slot;
        for new in arrivals.sample(&self.city, t, self.params.slot_seconds) {
            let grid = &self.city.grid;
            if !grid.contains(new.origin_region) || !grid.contains(new.dest_region) {
                return Err(Error::InvalidScenario(format!("order {} references a region outside the grid", new.order_id)));
            }
            let index = self.orders.len();
            self.orders.push(Order {
                id: new.order_id,
                creation_slot: t,
                origin: new.origin(),
                origin_region: new.origin_region,
                destination: new.destination(),
                dest_region: new.dest_region,
                status: OrderStatus::Open,
                pickup_slot: None,
                completion_slot: None,
                driver: None,
            });
            self.open.push(index);
            report.created.push(index);
        }

        let mut rng = std::mem::replace(&mut self.cruise_rng, ChaCha8Rng::seed_from_u64(0));
        for id in 0..self.drivers.len() {
            if self.drivers[id].status.is_available() {
                self.cruise_step(id, &mut rng)?;
            }
        }
        self.cruise_rng = rng;

        self.clock.slot += 1;
        let now = self.clock.slot;

        for d in &mut self.drivers {
            let Some(oi) = d.assigned_order else { continue };
            let o = &mut self.orders[oi];
            if d.status == DriverStatus::EnroutePickup && o.pickup_slot.is_some_and(|p| p <= now) {
                d.status = DriverStatus::Occupied;
                d.position = o.origin;
                d.region = o.origin_region;
                o.status = OrderStatus::PickedUp;
                report.picked_up.push(oi);
            }
            if d.status == DriverStatus::Occupied && o.completion_slot.is_some_and(|c| c <= now) {
                d.status = DriverStatus::Idle;
                d.position = o.destination;
                d.region = o.dest_region;
                d.busy_until_slot = None;
                d.assigned_order = None;
                o.status = OrderStatus::Completed;
                report.completed.push(oi);
            }
        }

        let max_wait = self.params.max_wait_slots;
        let slot_seconds = self.params.slot_seconds;
        let mut still_open = Vec::with_capacity(self.open.len());
        for &oi in &self.open {
            let o = &mut self.orders[oi];
            if now - o.creation_slot >= max_wait {
                o.status = OrderStatus::Expired;
                self.wait_stats.record(
                    o.origin_region,
                    o.period(slot_seconds),
                    max_wait as f64 * f64::from(slot_seconds),
                );
                report.expired.push(oi);
            } else {
                still_open.push(oi);
            }
        }
        self.open = still_open;
        Ok(report)
    }

    /// Checks the structural invariants: order/driver cross references and status consistency.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidDispatch(m));
        for d in &self.drivers {
            match (d.status.is_available(), d.assigned_order) {
                (true, Some(o)) => return fail(format!("available driver {} holds order {o}", d.id)),
                (false, None) => return fail(format!("busy driver {} has no order", d.id)),
                (false, Some(oi)) => {
                    if self.orders[oi].driver != Some(d.id) {
                        return fail(format!("driver {} and order {oi} disagree", d.id));
                    }
                }
                (true, None) => {}
            }
        }
        for (oi, o) in self.orders.iter().enumerate() {
            let active = matches!(o.status, OrderStatus::Assigned | OrderStatus::PickedUp);
            if active {
                let Some(k) = o.driver else { return fail(format!("active order {oi} has no driver")) };
                if self.drivers[k].assigned_order != Some(oi) {
                    return fail(format!("order {oi} points at driver {k} which does not hold it"));
                }
            }
            if let Some(p) = o.pickup_slot {
                if p < o.creation_slot {
                    return fail(format!("order {oi} picked up before creation"));
                }
            }
        }
        Ok(())
    }
}
