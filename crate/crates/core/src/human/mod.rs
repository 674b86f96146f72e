//! Passenger fairness benchmarks, driver preference profiles, per-order reward and cost, and the
//! evaluation metrics.

mod benchmark;
mod metrics;
mod preference;
mod reward;
mod wait_stats;

pub use benchmark::{build_fairness_benchmark, driver_supply, FairnessBenchmark};
pub use metrics::{
    compute_metrics, decreased_ratio, percentile_spread, region_mean_waits, DecreasedRatio, DispatchRecord,
    MetricsReport,
};
pub use preference::{build_preference_profile, NeutralQuantifier, PreferenceProfile, RegionClass};
pub use reward::{dispatch_cost, order_reward};
pub use wait_stats::{CellWaits, WaitStats};
