//! CSV records, JSON manifests and segment dumps.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{run_experiment, ExperimentConfig, ExperimentOutput, RealizationRecord};
use crate::error::{Error, Result};
use crate::field::RNG_ALGORITHM;

pub const CSV_HEADER: [&str; 10] = [
    "master_seed",
    "replicate_index",
    "ell",
    "r",
    "grid_n",
    "z_local",
    "m_local",
    "z_global",
    "proj2",
    "wall_time_ms",
];

/// Everything needed to regenerate a CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub rng_algorithm: String,
    pub library_version: String,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    pub csv: String,
    pub n_records: usize,
}

pub fn write_records_csv<W: Write>(w: W, records: &[RealizationRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    let mut sorted: Vec<&RealizationRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.replicate_index);
    for r in sorted {
        wtr.write_record([
            r.master_seed.to_string(),
            r.replicate_index.to_string(),
            r.ell.to_string(),
            r.r.to_string(),
            r.grid_n.to_string(),
            r.z_local.to_string(),
            r.m_local.to_string(),
            r.z_global.map(|v| v.to_string()).unwrap_or_default(),
            r.proj2.to_string(),
            format!("{:.3}", r.wall_time_ms),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_records_csv(path: &Path) -> Result<Vec<RealizationRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header in {}: {header:?}", path.display())));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let num = |i: usize| -> Result<f64> {
            row[i].parse().map_err(|_| Error::Config(format!("column {} is not a number: {:?}", CSV_HEADER[i], &row[i])))
        };
        let int = |i: usize| -> Result<u64> {
            row[i].parse().map_err(|_| Error::Config(format!("column {} is not an integer: {:?}", CSV_HEADER[i], &row[i])))
        };
        out.push(RealizationRecord {
            master_seed: int(0)?,
            replicate_index: int(1)?,
            ell: int(2)? as u32,
            r: num(3)?,
            grid_n: int(4)? as usize,
            z_local: num(5)?,
            m_local: num(6)?,
            z_global: if row[7].is_empty() { None } else { Some(num(7)?) },
            proj2: num(8)?,
            wall_time_ms: num(9)?,
        });
    }
    Ok(out)
}

/// `run.csv` -> `run.manifest.json`.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("manifest.json")
}

/// Writes the CSV at `csv_path` and its manifest next to it; returns the manifest path.
pub fn write_run(out: &ExperimentOutput, csv_path: &Path) -> Result<PathBuf> {
    write_records_csv(BufWriter::new(File::create(csv_path)?), &out.records)?;
    let manifest = Manifest {
        config: out.config.clone(),
        rng_algorithm: RNG_ALGORITHM.to_string(),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        started: out.started,
        finished: out.finished,
        csv: csv_path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        n_records: out.records.len(),
    };
    let mpath = manifest_path(csv_path);
    write_json(&mpath, &manifest)?;
    Ok(mpath)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Rerun the experiment described by a manifest.
pub fn reproduce(manifest: &Manifest) -> Result<ExperimentOutput> {
    if manifest.rng_algorithm != RNG_ALGORITHM {
        return Err(Error::Config(format!(
            "manifest was produced with generator {:?}, this build uses {:?}",
            manifest.rng_algorithm, RNG_ALGORITHM
        )));
    }
    run_experiment(&manifest.config)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Reads a JSON experiment config; unknown keys are rejected.
pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    serde_json::from_reader(BufReader::new(File::open(path)?))
        .map_err(|e| if e.is_io() { Error::Json(e) } else { Error::Config(e.to_string()) })
}
