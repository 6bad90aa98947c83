//! Wiener-chaos quantities of a realization: the fourth-order local
//! trispectrum term and the second-order boundary projection.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{HarmonicField, RingSynth};
use crate::nodal::{boundary_trace, check_radius, CapDomain, Pole};
use crate::quad::GaussLegendre;

/// Probabilists' Hermite polynomial `H_q(x)`.
pub fn hermite(q: u32, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, x);
    if q == 0 {
        return h0;
    }
    for n in 1..q {
        let h2 = x * h1 - n as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Unbiased fourth cumulant (k-statistic `k_4`).
pub fn cumulant4(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 4 {
        return Err(Error::InsufficientSamples { need: 4, got: n });
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in samples {
        let d2 = (x - mean).powi(2);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m4 /= nf;
    Ok(nf * nf * ((nf + 1.0) * m4 - 3.0 * (nf - 1.0) * m2 * m2) / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0)))
}

/// `k_4 / k_2^2`: the fourth cumulant of the standardized sample.
pub fn standardized_cumulant4(samples: &[f64]) -> Result<f64> {
    let k4 = cumulant4(samples)?;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let k2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(k4 / (k2 * k2))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChaosStats {
    /// `int_{B_r} H_4(T)`.
    pub h4: f64,
    /// `-(1/4) sqrt(lambda/2) (1/4!) h4`.
    pub m_local: f64,
}

/// Default number of Gauss-Legendre nodes in `theta` for a cap of radius `r`.
pub fn default_quad_n(ell: u32, r: f64) -> usize {
    ((2.5 * ell as f64 * r).ceil() as usize + 32).max(64)
}

/// Local trispectrum term `M` and `h4` over the cap.
///
/// Gauss-Legendre in `theta` (weight `sin theta`) and the trapezoid rule in
/// `phi` with enough nodes to integrate `H_4(T)` exactly in `phi`.
pub fn local_trispectrum(f: &HarmonicField, cap: &CapDomain, quad_n: Option<usize>) -> Result<ChaosStats> {
    check_radius(cap.radius)?;
    let ell = f.ell();
    let n_theta = quad_n.unwrap_or_else(|| default_quad_n(ell, cap.radius));
    if n_theta < 64 {
        return Err(Error::Range(format!("quad_n = {n_theta} is below 64")));
    }
    let n_phi = (4 * ell as usize + 2).max(n_theta).div_ceil(64) * 64;
    let spec = match cap.pole {
        Pole::North => f.spectrum().clone(),
        Pole::South => f.spectrum().reflected(),
    };
    let ring = RingSynth::new(n_phi);
    let gl = GaussLegendre::new(n_theta);
    let mut q = vec![0.0; ell as usize + 1];
    let mut h4 = 0.0;
    for (theta, w) in gl.mapped(0.0, cap.radius) {
        f.table().row(theta, &mut q);
        let (vals, _) = ring.synth(&spec, &q, false);
        let row: f64 = vals.iter().map(|&t| hermite(4, t)).sum();
        h4 += w * theta.sin() * row;
    }
    h4 *= 2.0 * PI / n_phi as f64;
    let lam = ell as f64 * (ell as f64 + 1.0);
    Ok(ChaosStats { h4, m_local: -0.25 * (lam / 2.0).sqrt() / 24.0 * h4 })
}

/// `M` alone; see [`local_trispectrum`].
pub fn local_trispectrum_m(f: &HarmonicField, cap: &CapDomain, quad_n: Option<usize>) -> Result<f64> {
    Ok(local_trispectrum(f, cap, quad_n)?.m_local)
}

/// Hermite coefficient `alpha_{0,2}` in the chaos expansion of the gradient norm.
pub const ALPHA_02: f64 = 0.626_657_068_657_750_1; // sqrt(pi/2) / 2
/// Coefficient `beta_0`, the standard normal density at zero.
pub const BETA_0: f64 = 0.398_942_280_401_432_7; // 1 / sqrt(2 pi)

/// Default boundary resolution: enough nodes to integrate degree-`2 ell` trigonometric data exactly.
pub fn default_trace_nodes(ell: u32) -> usize {
    (4 * ell as usize + 4).max(128)
}

/// Second-chaos boundary projection
/// `(1/2) sqrt(2/lambda) alpha_02 beta_0 oint T (d_1 T + d_2 T) ds`
/// by the trapezoid rule on the boundary circle.
pub fn second_chaos_projection(f: &HarmonicField, cap: &CapDomain, n_nodes: Option<usize>) -> Result<f64> {
    let n = n_nodes.unwrap_or_else(|| default_trace_nodes(f.ell()));
    if n < 128 {
        return Err(Error::Range(format!("n_nodes = {n} is below 128")));
    }
    let trace = boundary_trace(f, cap, n)?;
    let ds = 2.0 * PI * cap.radius.sin() / n as f64;
    let integral: f64 = trace.iter().map(|t| t.value * (t.gradient[0] + t.gradient[1])).sum::<f64>() * ds;
    let lam = f.ell() as f64 * (f.ell() as f64 + 1.0);
    Ok(0.5 * (2.0 / lam).sqrt() * ALPHA_02 * BETA_0 * integral)
}
