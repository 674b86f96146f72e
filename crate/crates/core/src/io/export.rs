use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::csvio::write_rows;
use crate::error::{Error, Result};
use crate::human::DecreasedRatio;

pub const REGION_WAITS_HEADER: [&str; 3] = ["episode", "region_id", "mean_wait_seconds"];
pub const RATIO_HEADER: [&str; 5] = ["method", "dapwt", "dpf_inter", "dpf_intra", "dpvr"];

/// One JSON document per line.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::data(path, i as u64 + 1, e.to_string()))?);
    }
    Ok(out)
}

/// Long-format per-episode regional mean waits; regions without scored orders have an empty
/// wait field.
pub fn write_region_waits(path: &Path, rows: &[(u64, Vec<Option<f64>>)]) -> Result<()> {
    let records = rows.iter().flat_map(|(ep, waits)| {
        waits.iter().enumerate().map(move |(u, w)| vec![ep.to_string(), u.to_string(), w.map_or(String::new(), |w| w.to_string())])
    });
    write_rows(path, &REGION_WAITS_HEADER, records)
}

pub fn read_region_waits(path: &Path) -> Result<Vec<(u64, Vec<Option<f64>>)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::data(path, 0, e.to_string()))?;
    let headers = reader.headers().map_err(|e| Error::data(path, 1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != REGION_WAITS_HEADER {
        return Err(Error::data(path, 1, format!("header must be exactly `{}`", REGION_WAITS_HEADER.join(","))));
    }
    let mut out: Vec<(u64, Vec<Option<f64>>)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::data(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |what: &str| Error::data(path, line, format!("bad {what}"));
        let ep: u64 = rec[0].parse().map_err(|_| bad("episode"))?;
        let u: usize = rec[1].parse().map_err(|_| bad("region_id"))?;
        let w = if rec[2].is_empty() { None } else { Some(rec[2].parse::<f64>().map_err(|_| bad("mean_wait_seconds"))?) };
        if out.last().is_none_or(|(e, _)| *e != ep) {
            out.push((ep, Vec::new()));
        }
        let waits = &mut out.last_mut().expect("pushed").1;
        if u != waits.len() {
            return Err(Error::data(path, line, format!("region {u} out of sequence")));
        }
        waits.push(w);
    }
    Ok(out)
}

/// Writes `results.jsonl` and `region_waits.csv` into `dir`.
pub fn export_results<T: Serialize>(dir: &Path, reports: &[T], region_waits: &[(u64, Vec<Option<f64>>)]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let results = dir.join("results.jsonl");
    write_jsonl(&results, reports)?;
    let waits = dir.join("region_waits.csv");
    write_region_waits(&waits, region_waits)?;
    Ok(vec![results, waits])
}

/// One row per method with the four decreased-ratio columns, in percent.
pub fn write_ratio_table(path: &Path, rows: &[(String, DecreasedRatio)]) -> Result<()> {
    write_rows(
        path,
        &RATIO_HEADER,
        rows.iter().map(|(m, r)| {
            vec![m.clone(), r.dapwt.to_string(), r.dpf_inter.to_string(), r.dpf_intra.to_string(), r.dpvr.to_string()]
        }),
    )
}

pub fn render_ratio_table(rows: &[(String, DecreasedRatio)]) -> String {
    let width = rows.iter().map(|(m, _)| m.len()).chain([RATIO_HEADER[0].len()]).max().unwrap_or(6);
    let mut out = format!("{:<width$}", RATIO_HEADER[0]);
    for h in &RATIO_HEADER[1..] {
        out.push_str(&format!(" {h:>10}"));
    }
    out.push('\n');
    for (m, r) in rows {
        out.push_str(&format!(
            "{m:<width$} {:>9.2}% {:>9.2}% {:>9.2}% {:>9.2}%\n",
            r.dapwt, r.dpf_inter, r.dpf_intra, r.dpvr
        ));
    }
    out
}
