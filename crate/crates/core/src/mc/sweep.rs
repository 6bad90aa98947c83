//! Trend tables over increasing degree.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{run_experiment, Column, EstimateSet, ExperimentConfig};
use crate::error::{Error, Result};
use crate::theory::{predict_mean_local, predict_var_local};

/// Cap radius as a function of degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RRule {
    Fixed { r: f64 },
    /// `r = c ell^(-alpha)` with `alpha < 1`, so that `r ell` still grows.
    Power { c: f64, alpha: f64 },
}

impl RRule {
    pub fn radius(&self, ell: u32) -> f64 {
        match *self {
            RRule::Fixed { r } => r,
            RRule::Power { c, alpha } => c * (ell as f64).powf(-alpha),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            RRule::Fixed { r } if !(r > 0.0 && r < PI) => Err(Error::Config("radius must lie in (0, π)".into())),
            RRule::Power { c, .. } if c <= 0.0 => Err(Error::Config("r_rule: c must be positive".into())),
            RRule::Power { alpha, .. } if !(alpha < 1.0) => Err(Error::Config("r_rule: alpha must be below 1".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub ell: u32,
    pub r: f64,
    pub estimates: EstimateSet,
    pub mean_local_pred: f64,
    pub var_local_asym: f64,
    /// `Var(z_local) / var_local_asym`.
    pub var_ratio: f64,
    pub corr_z_m: f64,
    /// `Var(proj2) / Var(z_local)`.
    pub proj2_ratio: f64,
}

impl SweepRow {
    pub fn csv_header() -> &'static str {
        "ell,r,n,mean_z_local,mean_local_pred,var_z_local,var_z_local_se,var_local_asym,var_ratio,\
         corr_z_m,corr_z_m_se,var_proj2,proj2_ratio,k4_m_local,k4_m_local_se"
    }

    pub fn csv_row(&self) -> String {
        let e = &self.estimates;
        let z = e.column(Column::ZLocal).expect("z_local always present");
        let p = e.column(Column::Proj2).expect("proj2 always present");
        let c = e.correlation(Column::ZLocal, Column::MLocal).expect("z_local/m_local pair");
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.ell,
            self.r,
            e.n,
            z.mean.value,
            self.mean_local_pred,
            z.variance.value,
            z.variance.se,
            self.var_local_asym,
            self.var_ratio,
            c.value,
            c.se,
            p.variance.value,
            self.proj2_ratio,
            e.k4_m_local.value,
            e.k4_m_local.se
        )
    }
}

/// One experiment per degree with the shared settings of `base`; `ell` and
/// `radius` in `base` are overridden.
pub fn sweep(ells: &[u32], r_rule: RRule, base: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    if ells.is_empty() {
        return Err(Error::Config("ell list is empty".into()));
    }
    if ells.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("ell list must be strictly increasing".into()));
    }
    r_rule.validate()?;
    ells.iter()
        .map(|&ell| {
            let cfg = ExperimentConfig { ell, radius: r_rule.radius(ell), ..base.clone() };
            let out = run_experiment(&cfg)?;
            row(ell, cfg.radius, out.estimates)
        })
        .collect()
}

fn row(ell: u32, r: f64, estimates: EstimateSet) -> Result<SweepRow> {
    let var_z = estimates.column(Column::ZLocal).map(|c| c.variance.value).unwrap_or(f64::NAN);
    let var_p = estimates.column(Column::Proj2).map(|c| c.variance.value).unwrap_or(f64::NAN);
    let corr = estimates.correlation(Column::ZLocal, Column::MLocal).map(|c| c.value).unwrap_or(f64::NAN);
    let asym = predict_var_local(ell, r)?;
    Ok(SweepRow {
        ell,
        r,
        mean_local_pred: predict_mean_local(ell, r)?,
        var_local_asym: asym,
        var_ratio: var_z / asym,
        corr_z_m: corr,
        proj2_ratio: var_p / var_z,
        estimates,
    })
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{}", SweepRow::csv_header())?;
    for r in rows {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}
