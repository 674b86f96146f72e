use crate::city::{RegionId, PERIODS};
use crate::error::{Error, Result};
use crate::human::PreferenceProfile;

/// Expected wait `WT_c(u, v)` per region and period, in seconds.
///
/// Benchmarks are proportional to the region's weighted demand/supply ratio
/// `|C_u| = β_u · N_passenger(u, v) / N_driver(u)`, scaled so that the mean over regions equals
/// `base_wait_seconds` in every period with demand.
#[derive(Debug, Clone, PartialEq)]
pub struct FairnessBenchmark {
    wt_c: Vec<[f64; PERIODS]>,
    pub beta: Vec<f64>,
    pub base_wait_seconds: f64,
    pub n_passenger: Vec<[f64; PERIODS]>,
    /// Supply after flooring at one driver.
    pub n_driver: Vec<f64>,
}

impl FairnessBenchmark {
    pub fn wt_c(&self, region: RegionId, period: usize) -> f64 {
        self.wt_c[region][period % PERIODS]
    }

    pub fn num_regions(&self) -> usize {
        self.wt_c.len()
    }

    /// `|C_u|(v)`.
    pub fn ratio(&self, region: RegionId, period: usize) -> f64 {
        self.beta[region] * self.n_passenger[region][period % PERIODS] / self.n_driver[region]
    }

    /// Rows `(region, period, wt_c_seconds)` in region-major order.
    pub fn rows(&self) -> impl Iterator<Item = (RegionId, usize, f64)> + '_ {
        self.wt_c.iter().enumerate().flat_map(|(u, row)| row.iter().enumerate().map(move |(v, w)| (u, v, *w)))
    }
}

/// Number of drivers with each region in their positive set.
pub fn driver_supply(profiles: &[PreferenceProfile], num_regions: usize) -> Vec<f64> {
    let mut supply = vec![0.0; num_regions];
    for p in profiles {
        for &u in p.positive() {
            supply[u] += 1.0;
        }
    }
    supply
}

/// `n_passenger[u][v]` is historical demand; `n_driver[u]` is raw supply, floored at one here.
pub fn build_fairness_benchmark(
    n_passenger: &[[f64; PERIODS]],
    n_driver: &[f64],
    beta: &[f64],
    base_wait_seconds: f64,
) -> Result<FairnessBenchmark> {
    let n = n_passenger.len();
    if n == 0 {
        return Err(Error::Empty("benchmark regions"));
    }
    if n_driver.len() != n {
        return Err(Error::ShapeMismatch { expected: n, actual: n_driver.len() });
    }
    if beta.len() != n {
        return Err(Error::ShapeMismatch { expected: n, actual: beta.len() });
    }
    if beta.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(Error::InvalidConfig { key: "beta".into(), reason: "region weights must be positive".into() });
    }
    if !(base_wait_seconds.is_finite() && base_wait_seconds > 0.0) {
        return Err(Error::InvalidConfig { key: "base_wait_seconds".into(), reason: "must be positive".into() });
    }
    if n_passenger.iter().flatten().chain(n_driver).any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidArgument("demand and supply counts must be finite and non-negative".into()));
    }
    let supply: Vec<f64> = n_driver.iter().map(|d| d.max(1.0)).collect();
    let mut wt_c = vec![[0.0; PERIODS]; n];
    for v in 0..PERIODS {
        let ratios: Vec<f64> = (0..n).map(|u| beta[u] * n_passenger[u][v] / supply[u]).collect();
        let mean = ratios.iter().sum::<f64>() / n as f64;
        for u in 0..n {
            wt_c[u][v] = if mean > 0.0 { base_wait_seconds * ratios[u] / mean } else { base_wait_seconds };
        }
    }
    Ok(FairnessBenchmark {
        wt_c,
        beta: beta.to_vec(),
        base_wait_seconds,
        n_passenger: n_passenger.to_vec(),
        n_driver: supply,
    })
}
