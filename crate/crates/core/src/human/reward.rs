use crate::city::{Grid, RegionId};
use crate::error::{Error, Result};
use crate::human::{CellWaits, PreferenceProfile, RegionClass};

/// Fairness-aware reward for one served order, with waits in minutes:
///
/// `r = −(1 − α) · w_i − α · (1/K) Σ_k (w_k − WT_c)²`
///
/// `cell` holds every wait recorded so far in the order's (region, period), including `w_i`.
pub fn order_reward(wait_seconds: f64, cell: &CellWaits, wt_c_seconds: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig { key: "alpha".into(), reason: format!("{alpha} not in [0, 1]") });
    }
    if cell.count() == 0 {
        return Err(Error::Empty("wait statistics for the order's cell"));
    }
    let efficiency = wait_seconds / 60.0;
    // moments are kept in seconds²
    let fairness = if alpha == 0.0 {
        0.0
    } else {
        cell.mean_sq_deviation(wt_c_seconds).expect("non-empty cell") / 3600.0
    };
    Ok(-(1.0 - alpha) * efficiency - alpha * fairness)
}

/// Preference cost of sending a driver to `dest`: zero unless the destination is in the driver's
/// negative set, then the distance to the nearest positive-region centre over the city diameter.
pub fn dispatch_cost(profile: &PreferenceProfile, dest: RegionId, grid: &Grid) -> f64 {
    if profile.class(dest) != RegionClass::Negative {
        return 0.0;
    }
    profile.distance_to_positive(grid, dest).map_or(0.0, |d| d / grid.diameter_km())
}
