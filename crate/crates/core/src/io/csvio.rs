//! Fixed-header CSV readers and writers. Readers report the offending line number; writers are
//! byte-deterministic and print floats in shortest round-trip form.

use std::collections::BTreeSet;
use std::path::Path;
use std::str::FromStr;

use crate::city::{TraceOrder, PERIODS};
use crate::error::{Error, Result};
use crate::human::FairnessBenchmark;

pub const ORDERS_HEADER: [&str; 8] =
    ["order_id", "creation_slot", "origin_region", "dest_region", "origin_x", "origin_y", "dest_x", "dest_y"];
pub const HISTORY_HEADER: [&str; 3] = ["driver_id", "region_id", "visit_count"];
pub const DEMAND_HEADER: [&str; 3] = ["region_id", "period", "intensity"];
pub const BENCHMARK_HEADER: [&str; 3] = ["region_id", "period", "wt_c_seconds"];

struct Rows {
    path: std::path::PathBuf,
    reader: csv::Reader<std::fs::File>,
}

fn open(path: &Path, header: &[&str]) -> Result<Rows> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let got = reader.headers().map_err(|e| Error::data(path, 1, e.to_string()))?.clone();
    let got: Vec<&str> = got.iter().collect();
    if got != header {
        let missing: Vec<&str> = header.iter().copied().filter(|h| !got.contains(h)).collect();
        let reason = if missing.is_empty() {
            format!("header must be exactly `{}`", header.join(","))
        } else {
            format!("missing column(s) {}; header must be exactly `{}`", missing.join(", "), header.join(","))
        };
        return Err(Error::data(path, 1, reason));
    }
    Ok(Rows { path: path.to_path_buf(), reader })
}

impl Rows {
    /// Calls `f(line, record)` for each data row.
    fn each(mut self, mut f: impl FnMut(u64, &csv::StringRecord) -> Result<()>) -> Result<()> {
        let mut record = csv::StringRecord::new();
        loop {
            let more = self.reader.read_record(&mut record).map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                Error::data(&self.path, line, e.to_string())
            })?;
            if !more {
                return Ok(());
            }
            let line = record.position().map_or(0, |p| p.line());
            f(line, &record)?;
        }
    }
}

fn field<T: FromStr>(path: &Path, line: u64, record: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let raw = record.get(i).ok_or_else(|| Error::data(path, line, format!("missing field `{name}`")))?;
    raw.parse().map_err(|_| Error::data(path, line, format!("field `{name}` has non-numeric value {raw:?}")))
}

fn finite(path: &Path, line: u64, name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::data(path, line, format!("field `{name}` is not finite")))
    }
}

fn region(path: &Path, line: u64, name: &str, u: usize, n_regions: usize) -> Result<usize> {
    if u < n_regions {
        Ok(u)
    } else {
        Err(Error::data(path, line, format!("field `{name}` = {u} is outside 0..{n_regions}")))
    }
}

/// Reads an order trace, sorted by `(creation_slot, order_id)`. Region ids must be below
/// `n_regions`; duplicate order ids are rejected.
pub fn load_orders(path: &Path, n_regions: usize) -> Result<Vec<TraceOrder>> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    open(path, &ORDERS_HEADER)?.each(|line, r| {
        let f64_at = |i: usize| -> Result<f64> {
            let name = ORDERS_HEADER[i];
            finite(path, line, name, field(path, line, r, i, name)?)
        };
        let o = TraceOrder {
            order_id: field(path, line, r, 0, "order_id")?,
            creation_slot: field(path, line, r, 1, "creation_slot")?,
            origin_region: region(path, line, "origin_region", field(path, line, r, 2, "origin_region")?, n_regions)?,
            dest_region: region(path, line, "dest_region", field(path, line, r, 3, "dest_region")?, n_regions)?,
            origin_x: f64_at(4)?,
            origin_y: f64_at(5)?,
            dest_x: f64_at(6)?,
            dest_y: f64_at(7)?,
        };
        if !ids.insert(o.order_id) {
            return Err(Error::data(path, line, format!("duplicate order_id {}", o.order_id)));
        }
        out.push(o);
        Ok(())
    })?;
    out.sort_by_key(|o| (o.creation_slot, o.order_id));
    Ok(out)
}

/// Reads per-driver visit counts. Driver ids must be dense `0..K`; absent (driver, region) pairs
/// count zero and repeated pairs are rejected.
pub fn load_history(path: &Path, n_regions: usize) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<(u64, usize, usize, f64)> = Vec::new();
    let mut seen = BTreeSet::new();
    open(path, &HISTORY_HEADER)?.each(|line, r| {
        let driver: usize = field(path, line, r, 0, "driver_id")?;
        let u = region(path, line, "region_id", field(path, line, r, 1, "region_id")?, n_regions)?;
        let count: f64 = finite(path, line, "visit_count", field(path, line, r, 2, "visit_count")?)?;
        if count < 0.0 {
            return Err(Error::data(path, line, "field `visit_count` is negative"));
        }
        if !seen.insert((driver, u)) {
            return Err(Error::data(path, line, format!("duplicate row for driver {driver}, region {u}")));
        }
        rows.push((line, driver, u, count));
        Ok(())
    })?;
    let n_drivers = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
    let mut counts = vec![vec![0.0; n_regions]; n_drivers];
    let mut present = vec![false; n_drivers];
    for (_, d, u, c) in rows {
        counts[d][u] = c;
        present[d] = true;
    }
    if let Some(d) = present.iter().position(|p| !p) {
        return Err(Error::data(path, 0, format!("driver ids must be dense: driver {d} has no rows")));
    }
    Ok(counts)
}

/// Reads the demand matrix `intensity[region][period]`; absent cells are zero.
pub fn load_demand(path: &Path, n_regions: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![vec![0.0; PERIODS]; n_regions];
    let mut seen = BTreeSet::new();
    open(path, &DEMAND_HEADER)?.each(|line, r| {
        let u = region(path, line, "region_id", field(path, line, r, 0, "region_id")?, n_regions)?;
        let v: usize = field(path, line, r, 1, "period")?;
        if v >= PERIODS {
            return Err(Error::data(path, line, format!("field `period` = {v} is outside 0..{PERIODS}")));
        }
        let x: f64 = finite(path, line, "intensity", field(path, line, r, 2, "intensity")?)?;
        if x < 0.0 {
            return Err(Error::data(path, line, "field `intensity` is negative"));
        }
        if !seen.insert((u, v)) {
            return Err(Error::data(path, line, format!("duplicate row for region {u}, period {v}")));
        }
        out[u][v] = x;
        Ok(())
    })?;
    Ok(out)
}

pub(crate) fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(header).map_err(|e| csv_io(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::data(path, 0, format!("{other:?}")),
    }
}

pub fn write_orders(path: &Path, orders: &[TraceOrder]) -> Result<()> {
    write_rows(
        path,
        &ORDERS_HEADER,
        orders.iter().map(|o| {
            vec![
                o.order_id.to_string(),
                o.creation_slot.to_string(),
                o.origin_region.to_string(),
                o.dest_region.to_string(),
                o.origin_x.to_string(),
                o.origin_y.to_string(),
                o.dest_x.to_string(),
                o.dest_y.to_string(),
            ]
        }),
    )
}

/// Writes the non-zero visit counts of every driver.
pub fn write_history(path: &Path, counts: &[Vec<f64>]) -> Result<()> {
    let rows = counts.iter().enumerate().flat_map(|(d, row)| {
        row.iter()
            .enumerate()
            .filter(|(_, c)| **c > 0.0)
            .map(move |(u, c)| vec![d.to_string(), u.to_string(), c.to_string()])
    });
    write_rows(path, &HISTORY_HEADER, rows)
}

pub fn write_demand(path: &Path, intensity: &[Vec<f64>]) -> Result<()> {
    let rows = intensity
        .iter()
        .enumerate()
        .flat_map(|(u, row)| row.iter().enumerate().map(move |(v, x)| vec![u.to_string(), v.to_string(), x.to_string()]));
    write_rows(path, &DEMAND_HEADER, rows)
}

pub fn write_benchmark(path: &Path, benchmark: &FairnessBenchmark) -> Result<()> {
    write_rows(path, &BENCHMARK_HEADER, benchmark.rows().map(|(u, v, w)| vec![u.to_string(), v.to_string(), w.to_string()]))
}
