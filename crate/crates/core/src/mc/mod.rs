//! Monte Carlo harness: independent realizations, estimators and persistence.
//!
//! Replicate `i` of a run with master seed `s` uses the field drawn from
//! stream `i` of the generator seeded by `s`, so a record depends only on
//! `(s, i)` and the configuration, never on thread scheduling.

pub mod estimate;
pub mod io;
pub mod normality;
pub mod sweep;

use std::f64::consts::PI;
use std::time::Instant;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaos::{local_trispectrum_m, second_chaos_projection};
use crate::error::{Error, Result};
use crate::field::sample_field_stream;
use crate::nodal::{
    default_grid_n, nodal_length_cap_extrapolated, nodal_length_cap_value, nodal_length_global_extrapolated,
    nodal_length_global_value, CapDomain, GLOBAL_SEAM, MIN_GRID,
};

pub use estimate::{Column, EstimateSet};
pub use normality::{clt_check, standardize, KsResult};
pub use sweep::{sweep, RRule, SweepRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ell: u32,
    /// Cap radius in radians.
    pub radius: f64,
    pub reps: usize,
    pub seed: u64,
    /// Cap grid size; `None` picks [`default_grid_n`].
    pub grid_n: Option<usize>,
    /// Richardson-extrapolate lengths from grids `n` and `n / 2`.
    pub extrapolate: bool,
    pub with_global: bool,
    /// North-chart grid for the global length; `None` picks the default.
    pub global_grid_n: Option<usize>,
    /// Gauss-Legendre nodes for the trispectrum.
    pub quad_n: Option<usize>,
    /// Boundary nodes for the second-chaos projection.
    pub n_nodes: Option<usize>,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ell: 50,
            radius: 0.4,
            reps: 100,
            seed: 1,
            grid_n: None,
            extrapolate: false,
            with_global: false,
            global_grid_n: None,
            quad_n: None,
            n_nodes: None,
            threads: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ell < 1 {
            return Err(Error::Config("ell must be at least 1".into()));
        }
        if !(self.radius > 0.0 && self.radius < PI) {
            return Err(Error::Config("radius must lie in (0, π)".into()));
        }
        if self.reps < 1 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        for (name, v) in [("grid_n", self.grid_n), ("global_grid_n", self.global_grid_n)] {
            if let Some(n) = v {
                if n < MIN_GRID {
                    return Err(Error::Config(format!("{name} must be at least {MIN_GRID}, got {n}")));
                }
            }
        }
        if self.extrapolate {
            for (name, v) in [("grid_n", self.grid_n), ("global_grid_n", self.global_grid_n)] {
                if v.is_some_and(|n| n < 2 * MIN_GRID) {
                    return Err(Error::Config(format!("{name} must be at least {} when extrapolating", 2 * MIN_GRID)));
                }
            }
        }
        if let Some(q) = self.quad_n.filter(|&q| q < 64) {
            return Err(Error::Config(format!("quad_n must be at least 64, got {q}")));
        }
        if let Some(q) = self.n_nodes.filter(|&q| q < 128) {
            return Err(Error::Config(format!("n_nodes must be at least 128, got {q}")));
        }
        if self.radius * (self.ell as f64) < 10.0 {
            log::warn!(
                "r * ell = {:.2} < 10: the cap holds few wavelengths and the asymptotic predictions are not expected to apply",
                self.radius * self.ell as f64
            );
        }
        Ok(())
    }

    pub fn effective_grid_n(&self) -> usize {
        self.grid_n.unwrap_or_else(|| default_grid_n(self.ell, self.radius))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub master_seed: u64,
    pub replicate_index: u64,
    pub ell: u32,
    pub r: f64,
    pub grid_n: usize,
    pub z_local: f64,
    pub m_local: f64,
    pub z_global: Option<f64>,
    pub proj2: f64,
    pub wall_time_ms: f64,
}

/// Compute one replicate.
pub fn realize(cfg: &ExperimentConfig, replicate_index: u64) -> Result<RealizationRecord> {
    let start = Instant::now();
    let f = sample_field_stream(cfg.ell, cfg.seed, replicate_index)?;
    let cap = CapDomain::new(cfg.radius)?;
    let grid_n = cfg.effective_grid_n();
    let z_local = if cfg.extrapolate {
        nodal_length_cap_extrapolated(&f, &cap, grid_n)?
    } else {
        nodal_length_cap_value(&f, &cap, Some(grid_n))?
    };
    let m_local = local_trispectrum_m(&f, &cap, cfg.quad_n)?;
    let proj2 = second_chaos_projection(&f, &cap, cfg.n_nodes)?;
    let z_global = match (cfg.with_global, cfg.extrapolate) {
        (false, _) => None,
        (true, false) => Some(nodal_length_global_value(&f, cfg.global_grid_n)?),
        (true, true) => {
            let n = cfg.global_grid_n.unwrap_or_else(|| default_grid_n(cfg.ell, GLOBAL_SEAM));
            Some(nodal_length_global_extrapolated(&f, n)?)
        }
    };
    Ok(RealizationRecord {
        master_seed: cfg.seed,
        replicate_index,
        ell: cfg.ell,
        r: cfg.radius,
        grid_n,
        z_local,
        m_local,
        z_global,
        proj2,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub records: Vec<RealizationRecord>,
    pub estimates: EstimateSet,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
}

/// Run `cfg.reps` replicates in parallel; records come back sorted by index.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let started = Utc::now();
    let work = || -> Result<Vec<RealizationRecord>> {
        (0..cfg.reps as u64).into_par_iter().map(|i| realize(cfg, i)).collect()
    };
    let mut records = if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?
    } else {
        work()?
    };
    records.sort_by_key(|r| r.replicate_index);
    let estimates = EstimateSet::from_records(&records);
    Ok(ExperimentOutput { config: cfg.clone(), records, estimates, started, finished: Utc::now() })
}
