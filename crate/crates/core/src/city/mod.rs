//! Discrete-time city: regions, drivers, order arrivals, movement and dispatch execution.

mod arrivals;
mod geometry;
mod types;
mod world;

pub use arrivals::{Arrivals, TraceOrder};
pub use geometry::{travel_time, Grid, Point, RegionId};
pub use types::{PERIODS, City, DriverId, DriverState, DriverStatus, Order, OrderStatus, Region, SimClock, SimParams};
pub use world::{DispatchOutcome, SlotReport, WorldState};
