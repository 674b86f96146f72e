use serde::{Deserialize, Serialize};

use crate::city::{DriverId, Order, OrderStatus, RegionId, PERIODS};
use crate::error::{Error, Result};
use crate::human::{FairnessBenchmark, PreferenceProfile};

/// One executed dispatch, as logged by the episode runner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchRecord {
    pub slot: usize,
    pub order: usize,
    pub driver: DriverId,
    pub origin_region: RegionId,
    pub dest_region: RegionId,
    pub period: usize,
    pub wait_seconds: f64,
    pub reward: f64,
    pub cost: f64,
}

/// Episode-level evaluation metrics. Waits are in seconds for APWT and in minutes² for the two
/// variance-based fairness metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub apwt: f64,
    pub pf_inter: f64,
    pub pf_intra: f64,
    pub pvr: f64,
    pub mean_cost: f64,
    pub lambda: f64,
    pub dispatches: usize,
    pub expired: usize,
}

/// Percent decrease of each metric relative to a reference: `100 · (ref − val) / ref`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecreasedRatio {
    pub dapwt: f64,
    pub dpf_inter: f64,
    pub dpf_intra: f64,
    pub dpvr: f64,
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// Scores a finished episode.
///
/// Every order with a known wait counts: dispatched orders with their pickup delay and expired
/// orders at the cap. Orders still open at the end of the episode are ignored.
pub fn compute_metrics(
    orders: &[Order],
    dispatches: &[DispatchRecord],
    profiles: &[PreferenceProfile],
    benchmark: &FairnessBenchmark,
    slot_seconds: u32,
    max_wait_slots: usize,
) -> Result<MetricsReport> {
    let n_regions = benchmark.num_regions();
    let mut cells: Vec<Vec<f64>> = vec![Vec::new(); n_regions * PERIODS];
    let mut total = 0.0;
    let mut count = 0usize;
    let mut expired = 0usize;
    for o in orders {
        let Some(slots) = o.wait_slots(max_wait_slots) else { continue };
        if o.status == OrderStatus::Open {
            continue;
        }
        if o.status == OrderStatus::Expired {
            expired += 1;
        }
        let seconds = slots as f64 * f64::from(slot_seconds);
        total += seconds;
        count += 1;
        cells[o.origin_region * PERIODS + o.period(slot_seconds)].push(seconds / 60.0);
    }
    if count == 0 {
        return Err(Error::NoCompletedOrders);
    }
    let apwt = total / count as f64;

    let intra: Vec<f64> = cells.iter().filter(|c| c.len() >= 2).map(|c| variance(c)).collect();
    let pf_intra = if intra.is_empty() { 0.0 } else { intra.iter().sum::<f64>() / intra.len() as f64 };

    let mut inter = Vec::new();
    for v in 0..PERIODS {
        let gaps: Vec<f64> = (0..n_regions)
            .filter_map(|u| {
                let c = &cells[u * PERIODS + v];
                (!c.is_empty()).then(|| c.iter().sum::<f64>() / c.len() as f64 - benchmark.wt_c(u, v) / 60.0)
            })
            .collect();
        if gaps.len() >= 2 {
            inter.push(variance(&gaps));
        }
    }
    let pf_inter = if inter.is_empty() { 0.0 } else { inter.iter().sum::<f64>() / inter.len() as f64 };

    let violations = dispatches.iter().filter(|d| profiles[d.driver].is_negative(d.dest_region)).count();
    let (pvr, mean_cost) = if dispatches.is_empty() {
        (0.0, 0.0)
    } else {
        let n = dispatches.len() as f64;
        (violations as f64 / n, dispatches.iter().map(|d| d.cost).sum::<f64>() / n)
    };
    Ok(MetricsReport { apwt, pf_inter, pf_intra, pvr, mean_cost, lambda: 0.0, dispatches: dispatches.len(), expired })
}

pub fn decreased_ratio(report: &MetricsReport, reference: &MetricsReport) -> Result<DecreasedRatio> {
    let pct = |name: &str, val: f64, r: f64| {
        if r <= 0.0 || !r.is_finite() {
            Err(Error::InvalidArgument(format!("reference {name} is {r}; decreased ratio undefined")))
        } else {
            Ok(100.0 * (r - val) / r)
        }
    };
    Ok(DecreasedRatio {
        dapwt: pct("apwt", report.apwt, reference.apwt)?,
        dpf_inter: pct("pf_inter", report.pf_inter, reference.pf_inter)?,
        dpf_intra: pct("pf_intra", report.pf_intra, reference.pf_intra)?,
        dpvr: pct("pvr", report.pvr, reference.pvr)?,
    })
}

/// Mean wait in seconds per origin region (`None` for regions without scored orders).
pub fn region_mean_waits(orders: &[Order], n_regions: usize, slot_seconds: u32, max_wait_slots: usize) -> Vec<Option<f64>> {
    let mut sums = vec![(0.0, 0usize); n_regions];
    for o in orders {
        if o.status == OrderStatus::Open {
            continue;
        }
        if let Some(slots) = o.wait_slots(max_wait_slots) {
            let e = &mut sums[o.origin_region];
            e.0 += slots as f64 * f64::from(slot_seconds);
            e.1 += 1;
        }
    }
    sums.into_iter().map(|(s, n)| (n > 0).then(|| s / n as f64)).collect()
}

/// Difference between the `hi` and `lo` quantiles (linear interpolation) of the defined values.
pub fn percentile_spread(values: &[Option<f64>], lo: f64, hi: f64) -> Option<f64> {
    let mut xs: Vec<f64> = values.iter().flatten().copied().collect();
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (xs.len() - 1) as f64;
        let (i, f) = (pos.floor() as usize, pos.fract());
        if i + 1 < xs.len() {
            xs[i] * (1.0 - f) + xs[i + 1] * f
        } else {
            xs[i]
        }
    };
    Some(q(hi) - q(lo))
}
