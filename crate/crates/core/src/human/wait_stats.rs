use std::collections::BTreeMap;

use crate::city::RegionId;

/// Realized waits per (region, period) cell, in seconds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WaitStats {
    cells: BTreeMap<(RegionId, usize), CellWaits>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellWaits {
    waits: Vec<f64>,
    sum: f64,
    sum_sq: f64,
}

impl CellWaits {
    pub fn count(&self) -> usize {
        self.waits.len()
    }

    pub fn waits(&self) -> &[f64] {
        &self.waits
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.waits.is_empty()).then(|| self.sum / self.waits.len() as f64)
    }

    /// Population variance of the recorded waits.
    pub fn variance(&self) -> Option<f64> {
        let mean = self.mean()?;
        Some(self.waits.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / self.waits.len() as f64)
    }

    /// `(1/K) Σ (w_k − target)²`, from the running moments.
    pub fn mean_sq_deviation(&self, target: f64) -> Option<f64> {
        let k = self.waits.len() as f64;
        if k == 0.0 {
            return None;
        }
        let v = (self.sum_sq - 2.0 * target * self.sum + k * target * target) / k;
        Some(v.max(0.0))
    }

    fn push(&mut self, wait: f64) {
        self.waits.push(wait);
        self.sum += wait;
        self.sum_sq += wait * wait;
    }
}

impl WaitStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, region: RegionId, period: usize, wait_seconds: f64) {
        self.cells.entry((region, period)).or_default().push(wait_seconds);
    }

    pub fn cell(&self, region: RegionId, period: usize) -> Option<&CellWaits> {
        self.cells.get(&(region, period))
    }

    pub fn count(&self, region: RegionId, period: usize) -> usize {
        self.cell(region, period).map_or(0, CellWaits::count)
    }

    /// Cells in ascending (region, period) order.
    pub fn iter(&self) -> impl Iterator<Item = (&(RegionId, usize), &CellWaits)> {
        self.cells.iter()
    }

    pub fn total(&self) -> usize {
        self.cells.values().map(CellWaits::count).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_agree_with_list() {
        let mut s = WaitStats::new();
        for w in [120.0, 240.0, 60.0, 300.0] {
            s.record(3, 8, w);
        }
        let c = s.cell(3, 8).unwrap();
        assert_eq!(c.count(), 4);
        assert_eq!(s.total(), 4);
        let target = 200.0;
        let direct = c.waits().iter().map(|w| (w - target).powi(2)).sum::<f64>() / 4.0;
        assert!((c.mean_sq_deviation(target).unwrap() - direct).abs() < 1e-9);
        assert!((c.mean().unwrap() - 180.0).abs() < 1e-12);
        assert!(s.cell(0, 0).is_none());
    }
}
