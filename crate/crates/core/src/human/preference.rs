use serde::{Deserialize, Serialize};

use crate::city::{DriverId, Grid, RegionId};
use crate::error::{Error, Result};

/// How a non-positive region qualifies as neutral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeutralQuantifier {
    /// Inside the influence radius of at least one positive region.
    #[default]
    Exists,
    /// Inside the influence radius of every positive region.
    ForAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionClass {
    Positive,
    Neutral,
    Negative,
}

/// A driver's visitation frequencies and the derived positive / neutral / negative region sets.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceProfile {
    pub driver: DriverId,
    pub frequency: Vec<f64>,
    pub threshold: f64,
    pub kappa_km: f64,
    classes: Vec<RegionClass>,
    positive: Vec<RegionId>,
}

impl PreferenceProfile {
    pub fn class(&self, region: RegionId) -> RegionClass {
        self.classes[region]
    }

    pub fn classes(&self) -> &[RegionClass] {
        &self.classes
    }

    /// Positive regions in ascending id order.
    pub fn positive(&self) -> &[RegionId] {
        &self.positive
    }

    pub fn regions_in(&self, class: RegionClass) -> Vec<RegionId> {
        (0..self.classes.len()).filter(|&u| self.classes[u] == class).collect()
    }

    pub fn is_negative(&self, region: RegionId) -> bool {
        self.classes[region] == RegionClass::Negative
    }

    /// Distance from `region`'s centre to the nearest positive-region centre.
    pub fn distance_to_positive(&self, grid: &Grid, region: RegionId) -> Option<f64> {
        self.positive.iter().map(|&p| grid.region_distance(region, p)).min_by(f64::total_cmp)
    }

    /// Shannon entropy (nats) of the visitation frequencies.
    pub fn entropy(&self) -> f64 {
        -self.frequency.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
    }
}

/// Builds a driver's region sets from raw visit counts.
///
/// `V(u)` is the normalized count; `H⁺ = {u : V(u) > d}`; a non-positive `u` is neutral when its
/// centre lies strictly within `κ · V(u₁)` of a positive region `u₁` (of every one, under
/// [`NeutralQuantifier::ForAll`]); the rest is negative. With no positive region every region is
/// neutral.
pub fn build_preference_profile(
    driver: DriverId,
    visit_counts: &[f64],
    threshold: f64,
    kappa_km: f64,
    grid: &Grid,
    quantifier: NeutralQuantifier,
) -> Result<PreferenceProfile> {
    if visit_counts.len() != grid.num_regions() {
        return Err(Error::ShapeMismatch { expected: grid.num_regions(), actual: visit_counts.len() });
    }
    if visit_counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::InvalidArgument(format!("driver {driver}: visit counts must be finite and non-negative")));
    }
    let total: f64 = visit_counts.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument(format!("driver {driver}: zero total visit count")));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidConfig { key: "pref_threshold".into(), reason: format!("{threshold} not in (0, 1)") });
    }
    if !(kappa_km > 0.0 && kappa_km.is_finite()) {
        return Err(Error::InvalidConfig { key: "pref_kappa_km".into(), reason: format!("{kappa_km} must be positive") });
    }
    let frequency: Vec<f64> = visit_counts.iter().map(|c| c / total).collect();
    let positive: Vec<RegionId> = (0..frequency.len()).filter(|&u| frequency[u] > threshold).collect();
    let classes = (0..frequency.len())
        .map(|u| {
            if frequency[u] > threshold {
                return RegionClass::Positive;
            }
            if positive.is_empty() {
                return RegionClass::Neutral;
            }
            let within = |&p: &RegionId| grid.region_distance(u, p) < kappa_km * frequency[p];
            let neutral = match quantifier {
                NeutralQuantifier::Exists => positive.iter().any(within),
                NeutralQuantifier::ForAll => positive.iter().all(within),
            };
            if neutral {
                RegionClass::Neutral
            } else {
                RegionClass::Negative
            }
        })
        .collect();
    Ok(PreferenceProfile { driver, frequency, threshold, kappa_km, classes, positive })
}
