//! CSV and JSON artifact writers. CSV columns are fixed: paths are
//! `(t, value)`, discrete processes `(index, value)`, lattice paths
//! `(index, position)`, ensembles wide matrices with a header row of
//! times, measure draws `(cell_index, draw)`. JSON reports embed the
//! config hash and seed, and serialize deterministically.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenery::RewardPath;
use crate::walks::{LatticePath, RealPath};

pub fn write_real_path_csv(path: &RealPath, file: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(file)?);
    writeln!(out, "t,value")?;
    for (t, v) in path.times().zip(path.values()) {
        writeln!(out, "{t},{v}")?;
    }
    Ok(())
}

pub fn write_reward_path_csv(path: &RewardPath, file: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(file)?);
    writeln!(out, "index,value")?;
    for (k, v) in path.values().iter().enumerate() {
        writeln!(out, "{k},{v}")?;
    }
    Ok(())
}

pub fn write_lattice_path_csv(path: &LatticePath, file: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(file)?);
    writeln!(out, "index,position")?;
    for (k, p) in path.positions().iter().enumerate() {
        writeln!(out, "{k},{p}")?;
    }
    Ok(())
}

/// Wide matrix: header row of times, one row per replicate.
pub fn write_ensemble_csv(times: &[f64], rows: &[Vec<f64>], file: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(file)?);
    let header: Vec<String> = times.iter().map(|t| format!("t_{t}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_measure_draws_csv(draws: &[f64], file: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(file)?);
    writeln!(out, "cell_index,draw")?;
    for (k, d) in draws.iter().enumerate() {
        writeln!(out, "{k},{d}")?;
    }
    Ok(())
}

/// Envelope adding provenance (seed + config hash) to any report body.
#[derive(Clone, Debug, Serialize)]
pub struct ProvenancedReport<T: Serialize> {
    pub seed: u64,
    pub config_hash: String,
    pub report: T,
}

/// Deterministic pretty JSON (sorted maps, ryu floats, trailing newline).
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize>(value: &T, file: &Path) -> Result<()> {
    std::fs::write(file, to_json_bytes(value)?)?;
    Ok(())
}
