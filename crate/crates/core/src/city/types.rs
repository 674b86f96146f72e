use serde::{Deserialize, Serialize};

use super::geometry::{Grid, Point, RegionId};
use crate::error::{Error, Result};

pub type DriverId = usize;

/// Number of one-hour periods per day.
pub const PERIODS: usize = 24;

/// A grid cell with its per-period demand intensity (expected orders per slot).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: RegionId,
    pub center: Point,
    pub intensity: Vec<f64>,
}

/// Static city description shared by every episode.
#[derive(Debug, Clone, PartialEq)]
pub struct City {
    pub grid: Grid,
    pub regions: Vec<Region>,
    /// Initial driver placement weights per region.
    pub placement: Vec<f64>,
    /// Length scale of the destination gravity model.
    pub trip_length_km: f64,
}

impl City {
    /// `intensity[u][v]` is the expected arrivals per slot in region `u` during period `v`.
    pub fn new(grid: Grid, intensity: Vec<Vec<f64>>, placement: Vec<f64>, trip_length_km: f64) -> Result<Self> {
        let n = grid.num_regions();
        if intensity.len() != n {
            return Err(Error::InvalidScenario(format!("demand matrix has {} regions, grid has {n}", intensity.len())));
        }
        if placement.len() != n {
            return Err(Error::InvalidScenario(format!("placement has {} weights, grid has {n}", placement.len())));
        }
        if placement.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidScenario("placement weights must be finite and non-negative".into()));
        }
        if placement.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidScenario("placement weights sum to zero".into()));
        }
        if !(trip_length_km > 0.0 && trip_length_km.is_finite()) {
            return Err(Error::InvalidScenario(format!("trip length {trip_length_km} km must be positive")));
        }
        let regions = intensity
            .into_iter()
            .enumerate()
            .map(|(id, row)| {
                if row.len() != PERIODS {
                    return Err(Error::InvalidScenario(format!(
                        "region {id} has {} periods, expected {PERIODS}",
                        row.len()
                    )));
                }
                if row.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::InvalidScenario(format!("region {id} has a negative or non-finite intensity")));
                }
                Ok(Region { id, center: grid.center(id), intensity: row })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(City { grid, regions, placement, trip_length_km })
    }

    pub fn num_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn intensity(&self, region: RegionId, period: usize) -> f64 {
        self.regions[region].intensity[period % PERIODS]
    }

    /// Expected orders in one day.
    pub fn expected_daily_orders(&self, slot_seconds: u32) -> f64 {
        let slots_per_period = 3600.0 / f64::from(slot_seconds);
        self.regions.iter().map(|r| r.intensity.iter().sum::<f64>() * slots_per_period).sum()
    }
}

/// Simulation parameters that are not part of the city layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub slot_seconds: u32,
    pub episode_slots: usize,
    pub speed_kmh: f64,
    pub pickup_radius_km: f64,
    pub max_wait_slots: usize,
    pub p_home: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            slot_seconds: 60,
            episode_slots: 1440,
            speed_kmh: 30.0,
            pickup_radius_km: 2.0,
            max_wait_slots: 30,
            p_home: 0.7,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: &str| Err(Error::InvalidConfig { key: key.into(), reason: reason.into() });
        if self.slot_seconds == 0 {
            return bad("slot_seconds", "must be positive");
        }
        if self.episode_slots == 0 {
            return bad("episode_slots", "must be positive");
        }
        if !(self.speed_kmh > 0.0 && self.speed_kmh.is_finite()) {
            return bad("speed_kmh", "must be positive");
        }
        if !(self.pickup_radius_km >= 0.0 && self.pickup_radius_km.is_finite()) {
            return bad("pickup_radius_km", "must be non-negative");
        }
        if self.max_wait_slots == 0 {
            return bad("max_wait_slots", "must be positive");
        }
        if !(0.0..=1.0).contains(&self.p_home) {
            return bad("p_home", "must lie in [0, 1]");
        }
        Ok(())
    }

    /// Distance covered in one slot.
    pub fn step_km(&self) -> f64 {
        self.speed_kmh * f64::from(self.slot_seconds) / 3600.0
    }
}

/// Simulation clock. The period is always derived from the slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimClock {
    pub slot: usize,
    pub slot_seconds: u32,
    pub episode_slots: usize,
}

impl SimClock {
    /// One-hour period of the current slot, wrapped to the day.
    pub fn period(&self) -> usize {
        Self::period_of(self.slot, self.slot_seconds)
    }

    pub fn period_of(slot: usize, slot_seconds: u32) -> usize {
        (slot * slot_seconds as usize / 3600) % PERIODS
    }

    pub fn is_over(&self) -> bool {
        self.slot >= self.episode_slots
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderStatus {
    Open,
    Assigned,
    PickedUp,
    Completed,
    Expired,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Order {
    pub id: u64,
    pub creation_slot: usize,
    pub origin: Point,
    pub origin_region: RegionId,
    pub destination: Point,
    pub dest_region: RegionId,
    pub status: OrderStatus,
    pub pickup_slot: Option<usize>,
    pub completion_slot: Option<usize>,
    pub driver: Option<DriverId>,
}

impl Order {
    /// Fairness period of the order (period of its creation slot).
    pub fn period(&self, slot_seconds: u32) -> usize {
        SimClock::period_of(self.creation_slot, slot_seconds)
    }

    /// Final waiting time in slots: pickup delay for served orders, the cap for expired ones.
    pub fn wait_slots(&self, max_wait_slots: usize) -> Option<usize> {
        match self.status {
            OrderStatus::Expired => Some(max_wait_slots),
            _ => self.pickup_slot.map(|p| p - self.creation_slot),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverStatus {
    Idle,
    EnroutePickup,
    Occupied,
    Cruising,
}

impl DriverStatus {
    /// Idle and cruising drivers are active agents that may compete for orders.
    pub fn is_available(self) -> bool {
        matches!(self, DriverStatus::Idle | DriverStatus::Cruising)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriverState {
    pub id: DriverId,
    pub position: Point,
    pub region: RegionId,
    pub status: DriverStatus,
    pub busy_until_slot: Option<usize>,
    /// Index into the world's order table.
    pub assigned_order: Option<usize>,
}
