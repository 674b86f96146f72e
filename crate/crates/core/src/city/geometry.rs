use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planar position in kilometres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Moves at most `step` towards `target`, never overshooting.
    pub fn step_towards(self, target: Point, step: f64) -> Point {
        let d = self.distance(target);
        if d <= step || d == 0.0 {
            target
        } else {
            let f = step / d;
            Point::new(self.x + (target.x - self.x) * f, self.y + (target.y - self.y) * f)
        }
    }
}

pub type RegionId = usize;

/// Rectangular grid of square cells; region id is `row * cols + col`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    pub cell_km: f64,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, cell_km: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidScenario(format!("grid {rows}x{cols} has no regions")));
        }
        if !(cell_km.is_finite() && cell_km > 0.0) {
            return Err(Error::InvalidScenario(format!("cell size {cell_km} km must be positive")));
        }
        Ok(Grid { rows, cols, cell_km })
    }

    pub fn num_regions(&self) -> usize {
        self.rows * self.cols
    }

    pub fn width_km(&self) -> f64 {
        self.cols as f64 * self.cell_km
    }

    pub fn height_km(&self) -> f64 {
        self.rows as f64 * self.cell_km
    }

    /// Length of the city's diagonal.
    pub fn diameter_km(&self) -> f64 {
        self.width_km().hypot(self.height_km())
    }

    pub fn center(&self, region: RegionId) -> Point {
        let (row, col) = (region / self.cols, region % self.cols);
        Point::new((col as f64 + 0.5) * self.cell_km, (row as f64 + 0.5) * self.cell_km)
    }

    pub fn row_col(&self, region: RegionId) -> (usize, usize) {
        (region / self.cols, region % self.cols)
    }

    /// Region containing `p`; points outside the city clamp to the border cells.
    pub fn region_of(&self, p: Point) -> RegionId {
        let col = ((p.x / self.cell_km).floor().max(0.0) as usize).min(self.cols - 1);
        let row = ((p.y / self.cell_km).floor().max(0.0) as usize).min(self.rows - 1);
        row * self.cols + col
    }

    /// 4-neighbourhood inside the grid, in ascending id order.
    pub fn neighbors(&self, region: RegionId) -> Vec<RegionId> {
        let (row, col) = self.row_col(region);
        let mut out = Vec::with_capacity(4);
        if row > 0 {
            out.push(region - self.cols);
        }
        if col > 0 {
            out.push(region - 1);
        }
        if col + 1 < self.cols {
            out.push(region + 1);
        }
        if row + 1 < self.rows {
            out.push(region + self.cols);
        }
        out
    }

    pub fn contains(&self, region: RegionId) -> bool {
        region < self.num_regions()
    }

    pub fn region_distance(&self, a: RegionId, b: RegionId) -> f64 {
        self.center(a).distance(self.center(b))
    }
}

/// Travel time in whole slots at constant speed: `ceil(km / speed · 3600 / slot_seconds)`.
pub fn travel_time(from: Point, to: Point, speed_kmh: f64, slot_seconds: f64) -> Result<usize> {
    if !from.is_finite() || !to.is_finite() {
        return Err(Error::NonFiniteCoordinate("travel_time"));
    }
    if !(speed_kmh > 0.0 && speed_kmh.is_finite()) {
        return Err(Error::InvalidArgument(format!("speed {speed_kmh} km/h must be positive")));
    }
    let km = from.distance(to);
    if km == 0.0 {
        return Ok(0);
    }
    let seconds = km / speed_kmh * 3600.0;
    Ok((seconds / slot_seconds - 1e-9).ceil().max(1.0) as usize)
}
