//! Closed-form predictions and Kac-Rice quantities for nodal length.
//!
//! Angles at the wavelength scale are written `psi = L rho` with `L = ell + 1/2`,
//! where `rho` is the geodesic distance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::legendre::{eval_legendre, one_minus_legendre_cos};
use crate::nodal::check_radius;
use crate::quad::integrate_adaptive;

pub fn lambda(ell: u32) -> f64 {
    ell as f64 * (ell as f64 + 1.0)
}

fn big_l(ell: u32) -> f64 {
    ell as f64 + 0.5
}

fn check_ell(ell: u32) -> Result<()> {
    if ell < 1 {
        return Err(Error::Range("ell must be at least 1".into()));
    }
    Ok(())
}

/// Kac-Rice mean of the nodal length in a cap: `sqrt(lambda/2) pi (1 - cos r)`.
pub fn predict_mean_local(ell: u32, r: f64) -> Result<f64> {
    check_ell(ell)?;
    check_radius(r)?;
    Ok((lambda(ell) / 2.0).sqrt() * PI * (1.0 - r.cos()))
}

/// Mean nodal length of the whole sphere: `pi sqrt(2 lambda)`.
pub fn predict_mean_global(ell: u32) -> Result<f64> {
    check_ell(ell)?;
    Ok(PI * (2.0 * lambda(ell)).sqrt())
}

/// Leading variance of the cap nodal length, `r^2 log(r ell) / 256`.
///
/// Returns zero (with a warning) when `r ell <= 1`, where the asymptotic is void.
pub fn predict_var_local(ell: u32, r: f64) -> Result<f64> {
    check_ell(ell)?;
    check_radius(r)?;
    let x = r * ell as f64;
    if x <= 1.0 {
        log::warn!("r * ell = {x} is not large; the variance asymptotic does not apply");
        return Ok(0.0);
    }
    if x < std::f64::consts::E {
        log::warn!("log(r * ell) = {:.3} is below 1; the variance asymptotic is unreliable", x.ln());
    }
    Ok(r * r * x.ln() / 256.0)
}

/// Leading variance of the global nodal length, `log(ell) / 32`.
pub fn predict_var_global(ell: u32) -> Result<f64> {
    check_ell(ell)?;
    Ok((ell as f64).ln() / 32.0)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Identities {
    /// `Cov(Z_local, Z_global) = ((1 - cos r)/2) Var(Z_global)`.
    pub cov_local_global: f64,
    /// Leading `Var(M)`, equal to the leading `Var(Z_local)`.
    pub var_m_asym: f64,
    /// Leading `Cov(Z_local, M)`.
    pub cov_z_m_asym: f64,
    /// Order of `Corr(Z_local, Z_global)`: `r sqrt(log ell / log(r ell))`.
    pub corr_local_global_bound: f64,
}

/// Exact and leading-order relations between local, global and chaos terms.
pub fn predict_identities(ell: u32, r: f64, var_global: f64) -> Result<Identities> {
    check_ell(ell)?;
    check_radius(r)?;
    if !(var_global >= 0.0) {
        return Err(Error::Range(format!("var_global = {var_global} must be nonnegative")));
    }
    let v = predict_var_local(ell, r)?;
    let x = r * ell as f64;
    let bound = if x > 1.0 { r * ((ell as f64).ln() / x.ln()).sqrt() } else { f64::INFINITY };
    Ok(Identities {
        cov_local_global: (1.0 - r.cos()) / 2.0 * var_global,
        var_m_asym: v,
        cov_z_m_asym: v,
        corr_local_global_bound: bound,
    })
}

/// Conditional covariance of the normalized gradients at two points at
/// distance `psi / L`, given that the field vanishes at both.
///
/// With the first gradient component along the connecting geodesic, the
/// pairs `(w11, w21)` and `(w12, w22)` are independent with covariances
/// `[[1 + 2a, 2b], [2b, 1 + 2a]]` and `[[1, 2c], [2c, 1]]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct TwoPointMatrix {
    pub psi: f64,
    pub p: f64,
    /// `1 - P^2`, computed without cancellation.
    pub one_minus_p2: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TwoPointMatrix {
    pub fn new(ell: u32, psi: f64) -> Result<Self> {
        check_ell(ell)?;
        let rho = psi / big_l(ell);
        if !(rho > 0.0 && rho < PI) {
            return Err(Error::SingularCovariance { psi });
        }
        let e = eval_legendre(ell, rho.cos())?;
        let om = one_minus_legendre_cos(ell, rho);
        let omp2 = om * (2.0 - om);
        if !(omp2 > 0.0) {
            return Err(Error::SingularCovariance { psi });
        }
        let lam = lambda(ell);
        let (s, t) = rho.sin_cos();
        let (p, d1, d2) = (e.value, e.d1, e.d2);
        let a = -d1 * d1 * s * s / (lam * omp2);
        let b = (d1 * t - d2 * s * s - p * d1 * d1 * s * s / omp2) / lam;
        let c = d1 / lam;
        Ok(Self { psi, p, one_minus_p2: omp2, a, b, c })
    }

    /// `(variance, covariance)` of the along-geodesic and transverse blocks,
    /// with covariances clipped to the variances against rounding near the diagonal.
    pub fn blocks(&self) -> [(f64, f64); 2] {
        let clip = |v: f64, k: f64| (v, k.clamp(-v, v));
        [clip(1.0 + 2.0 * self.a, 2.0 * self.b), clip(1.0, 2.0 * self.c)]
    }
}

const K_RANGE: f64 = 60.0;
const K_TOL: f64 = 1e-6;

/// `E[|w1| |w2|]` for `w1 = (x1, y1)`, `w2 = (x2, y2)` with `(x1, x2)` and
/// `(y1, y2)` independent centred pairs of covariance `[[v, k], [k, v]]`.
///
/// Uses `sqrt(u) = (1 / (2 sqrt(pi))) int_0^inf (1 - e^{-s u}) s^{-3/2} ds`, which
/// turns the expectation into a 2-D integral of Laplace transforms, integrated
/// by the trapezoid rule in `log s`, `log t` with step halving.
pub fn expected_norm_product(blocks: [(f64, f64); 2]) -> Result<f64> {
    for &(v, k) in &blocks {
        if !(v >= 0.0 && k.abs() <= v * (1.0 + 1e-4)) {
            return Err(Error::Range(format!("block ({v}, {k}) is not positive semidefinite")));
        }
    }
    let mut prev = norm_product_trapezoid(&blocks, 1.0);
    let mut h = 0.5;
    while h >= 1.0 / 32.0 {
        let cur = norm_product_trapezoid(&blocks, h);
        let change = (cur - prev).abs() / cur.abs();
        // exponential convergence: the error of `cur` is about change^2
        if change * change < K_TOL * 1e-3 || change < 1e-12 {
            return Ok(cur);
        }
        prev = cur;
        h *= 0.5;
    }
    Err(Error::Quadrature("norm-product integral did not converge".into()))
}

fn norm_product_trapezoid(blocks: &[(f64, f64); 2], h: f64) -> f64 {
    let n = (2.0 * K_RANGE / h).round() as usize + 1;
    let xs: Vec<f64> = (0..n).map(|i| -K_RANGE + i as f64 * h).collect();
    // per-node data: s, s^{-1/2}, F(s, 0), 1 - F(s, 0), 1/(1 + 2 s v_i)
    struct Node {
        s: f64,
        w: f64,
        f: f64,
        omf: f64,
        inv: [f64; 2],
    }
    let nodes: Vec<Node> = xs
        .iter()
        .map(|&x| {
            let s = x.exp();
            let l: f64 = blocks.iter().map(|(v, _)| (2.0 * s * v).ln_1p()).sum();
            Node {
                s,
                w: (-0.5 * x).exp(),
                f: (-0.5 * l).exp(),
                omf: -(-0.5 * l).exp_m1(),
                inv: [1.0 / (1.0 + 2.0 * s * blocks[0].0), 1.0 / (1.0 + 2.0 * s * blocks[1].0)],
            }
        })
        .collect();
    let k2 = [4.0 * blocks[0].1 * blocks[0].1, 4.0 * blocks[1].1 * blocks[1].1];
    // v^2 - k^2 >= 0, clamped against rounding
    let dets = [
        (blocks[0].0 - blocks[0].1.abs()).max(0.0) * (blocks[0].0 + blocks[0].1.abs()),
        (blocks[1].0 - blocks[1].1.abs()).max(0.0) * (blocks[1].0 + blocks[1].1.abs()),
    ];
    // log(1 - q) with q = 4 s t k^2 / ((1 + 2 s v)(1 + 2 t v))
    let log_one_minus_q = |k: usize, a: &Node, b: &Node| {
        let q = k2[k] * a.s * b.s * a.inv[k] * b.inv[k];
        if q < 0.5 {
            (-q).ln_1p()
        } else {
            let v = blocks[k].0;
            let num = 1.0 + 2.0 * v * (a.s + b.s) + 4.0 * a.s * b.s * dets[k];
            num.ln() + a.inv[k].ln() + b.inv[k].ln()
        }
    };
    let bracket = |a: &Node, b: &Node| {
        let rm1 = (-0.5 * (log_one_minus_q(0, a, b) + log_one_minus_q(1, a, b))).exp_m1();
        a.omf * b.omf + a.f * b.f * rm1
    };
    // symmetric in (s, t): off-diagonal pairs counted twice
    let mut total = 0.0;
    for (i, a) in nodes.iter().enumerate() {
        let row: f64 = nodes[..i].iter().map(|b| b.w * bracket(a, b)).sum();
        total += a.w * (2.0 * row + a.w * bracket(a, a));
    }
    total * h * h / (4.0 * PI)
}

/// Two-point function `K(psi) = E[|grad T(x)| |grad T(y)| | T(x) = T(y) = 0] p(0, 0)`
/// in gradient units normalized by `sqrt(lambda/2)`; tends to `1/4` for large `psi`.
pub fn k_exact(ell: u32, psi: f64) -> Result<f64> {
    let m = TwoPointMatrix::new(ell, psi)?;
    k_from_matrix(&m)
}

/// `K` for a given conditional covariance.
pub fn k_from_matrix(m: &TwoPointMatrix) -> Result<f64> {
    let e = expected_norm_product(m.blocks())?;
    Ok(e / (2.0 * PI * m.one_minus_p2.sqrt()))
}

/// Five-term expansion of `K`, for `1 <= psi < pi L / 2`.
pub fn k_expansion(ell: u32, psi: f64) -> Result<f64> {
    check_ell(ell)?;
    let bl = big_l(ell);
    if !(psi >= 1.0 && psi < PI * bl / 2.0) {
        return Err(Error::Domain { what: "psi", value: psi, domain: "[1, pi L / 2)" });
    }
    let l = ell as f64;
    let s = (psi / bl).sin();
    let (s2, c2, c4) = ((2.0 * psi).sin(), (2.0 * psi).cos(), (4.0 * psi).cos());
    Ok(0.25 + 0.5 * s2 / (PI * l * s)
        + (1.0 / 256.0) / (PI * PI * l * s * psi)
        + (9.0 / 32.0) * c2 / (PI * l * psi * s)
        + ((27.0 / 64.0) * s2 - (75.0 / 256.0) * c4) / (PI * PI * l * psi * s))
}

/// Lower end of the range of [`j_expansion`].
pub const J_EXPANSION_MIN_PSI: f64 = 2.0;

/// Expansion of the kernel `J` of the variance integral, for `2 < psi < pi L / 2`.
pub fn j_expansion(ell: u32, psi: f64) -> Result<f64> {
    check_ell(ell)?;
    let bl = big_l(ell);
    if !(psi > J_EXPANSION_MIN_PSI && psi < PI * bl / 2.0) {
        return Err(Error::Domain { what: "psi", value: psi, domain: "(2, pi L / 2)" });
    }
    let d = psi * (psi / bl).sin();
    Ok((1.0 / 64.0) / d + (5.0 / 64.0) * (4.0 * psi).cos() / d - (3.0 / 16.0) * (2.0 * psi).sin() / d)
}

/// Area of the intersection of two unit discs whose centres are `rho` apart.
fn lens_area(rho: f64) -> f64 {
    if rho >= 2.0 {
        return 0.0;
    }
    let h = 0.5 * rho;
    2.0 * h.acos() - h * (4.0 - rho * rho).sqrt()
}

/// Planar kernel `W0(rho)`: measure of `(x, theta)` with `x` and `x + rho e_theta`
/// in the unit disc.
pub fn w_planar0(rho: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::Domain { what: "rho", value: rho, domain: "[0, inf)" });
    }
    Ok(2.0 * PI * lens_area(rho))
}

/// Planar kernel `W1(rho) = rho W0(rho) / (8 pi^2)`, the small-cap limit of `W_r(r rho) / r^3`.
pub fn w_planar1(rho: f64) -> Result<f64> {
    Ok(rho * w_planar0(rho)? / (8.0 * PI * PI))
}

/// Distance kernel of a cap: `8 pi^2 W_r(rho) d rho` is the measure of pairs
/// `(x, y)` in the cap at distance in `[rho, rho + d rho]`.
pub fn w_cap(r: f64, rho: f64) -> Result<f64> {
    check_radius(r)?;
    if !(0.0..=PI).contains(&rho) {
        return Err(Error::Domain { what: "rho", value: rho, domain: "[0, pi]" });
    }
    if rho == 0.0 || rho >= 2.0 * r {
        return Ok(0.0);
    }
    let (sr, cr) = rho.sin_cos();
    let cos_r = r.cos();
    let integrand = |tx: f64| {
        let (st, ct) = tx.sin_cos();
        let den = st * sr;
        let beta = if den <= 0.0 {
            if cr >= cos_r { PI } else { 0.0 }
        } else {
            ((cos_r - ct * cr) / den).clamp(-1.0, 1.0).acos()
        };
        2.0 * PI * st * 2.0 * sr * beta
    };
    let mut cuts = vec![0.0, r];
    for c in [r - rho, rho - r] {
        if c > 0.0 && c < r {
            cuts.push(c);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        acc += integrate_adaptive(integrand, w[0], w[1], 1e-15, 1e-11)?;
    }
    Ok(acc / (8.0 * PI * PI))
}

const KR_REL_TOL: f64 = 1e-7;
const PSI_FLOOR: f64 = 1e-5;

/// `E[Z_local^2] = 8 pi^2 int_0^{2r} (lambda/2) K(L rho) W_r(rho) d rho`.
pub fn kac_rice_second_moment(ell: u32, r: f64) -> Result<f64> {
    let mean = predict_mean_local(ell, r)?;
    Ok(kac_rice_variance(ell, r)? + mean * mean)
}

/// `Var(Z_local)` by the same integral with `K - 1/4` in place of `K`.
pub fn kac_rice_variance(ell: u32, r: f64) -> Result<f64> {
    check_ell(ell)?;
    check_radius(r)?;
    if 2.0 * r >= PI {
        return Err(Error::Range(format!("kac_rice_variance needs r < pi/2, got {r}")));
    }
    let bl = big_l(ell);
    let lam = lambda(ell);
    let top = 2.0 * r * bl;
    let mut err = None;
    let mut g = |psi: f64| -> f64 {
        let kk = match k_exact(ell, psi) {
            Ok(v) => v - 0.25,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        };
        let w = match w_cap(r, psi / bl) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        };
        kk * w
    };
    // graded panels towards the diagonal, unit panels elsewhere, a break at r L
    let mut edges = vec![PSI_FLOOR];
    let mut x = PSI_FLOOR;
    while x < 0.5 {
        x = (x * 8.0).min(0.5);
        edges.push(x);
    }
    let mut x = 0.5;
    while x + 1.0 < top {
        x += 1.0;
        edges.push(x);
    }
    edges.push(top);
    edges.push(r * bl);
    edges.retain(|&e| e <= top);
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    // integrand is bounded at 0: take the first sliver as a rectangle
    let mut total = PSI_FLOOR * g(PSI_FLOOR);
    for w in edges.windows(2) {
        total += integrate_adaptive(&mut g, w[0], w[1], 1e-14, KR_REL_TOL)?;
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok(8.0 * PI * PI * lam / 2.0 * total / bl)
}

/// `int_B int_B g(d(x, y)) dx dy = 8 pi^2 int_0^{2r} g(rho) W_r(rho) d rho`
/// for `g` built from `P_ell`, on panels of one wavelength.
fn cap_pair_integral(ell: u32, r: f64, g: impl Fn(f64, &crate::legendre::LegendreEval) -> f64) -> Result<f64> {
    check_ell(ell)?;
    check_radius(r)?;
    if 2.0 * r >= PI {
        return Err(Error::Range(format!("pair integral needs r < pi/2, got {r}")));
    }
    let n = (2.0 * r * big_l(ell)).ceil().max(1.0) as usize;
    let mut err = None;
    let mut h = |rho: f64| match (eval_legendre(ell, rho.cos()), w_cap(r, rho)) {
        (Ok(e), Ok(w)) => g(rho, &e) * w,
        (Err(e), _) | (_, Err(e)) => {
            err.get_or_insert(e);
            0.0
        }
    };
    let mut total = 0.0;
    for k in 0..n {
        let (a, b) = (2.0 * r * k as f64 / n as f64, 2.0 * r * (k + 1) as f64 / n as f64);
        total += integrate_adaptive(&mut h, a, b, 1e-18, 1e-9)?;
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok(8.0 * PI * PI * total)
}

/// Exact `Var(M)` for the local trispectrum term:
/// `(lambda/2) / 384 * int_B int_B P_ell(cos d)^4`.
pub fn trispectrum_variance(ell: u32, r: f64) -> Result<f64> {
    let i = cap_pair_integral(ell, r, |_, e| e.value.powi(4))?;
    Ok(lambda(ell) / 2.0 / 384.0 * i)
}

/// Exact `Cov(Z_local, M)` by the one-point Kac-Rice formula.
///
/// Given `T(x) = 0` and the normalized gradient `w` at `x`, `T(y)` has
/// regression vector `A = (P, a, 0)` with `a = P' sin d / sqrt(lambda/2)`, and
/// `E[H_4(T(y)) | w] = |A|^4 H_4(a w_1 / |A|)`. Averaging against `|w|` gives
/// `sqrt(pi/2) (45/8 a^4 - 9 s a^2 + 3 s^2)` with `s = P^2 + a^2`.
pub fn kac_rice_cov_z_m(ell: u32, r: f64) -> Result<f64> {
    let half_lam = lambda(ell) / 2.0;
    let i = cap_pair_integral(ell, r, |rho, e| {
        let a = e.d1 * rho.sin() / half_lam.sqrt();
        let s = e.value * e.value + a * a;
        45.0 / 8.0 * a.powi(4) - 9.0 * s * a * a + 3.0 * s * s
    })?;
    // density of T(x) at 0 times sqrt(pi/2) is 1/2
    let cov_z_h4 = 0.5 * half_lam.sqrt() * i;
    Ok(-0.25 * half_lam.sqrt() / 24.0 * cov_z_h4)
}

/// Predictions for one `(ell, r)`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TheoryReport {
    pub ell: u32,
    pub r: f64,
    pub lambda: f64,
    pub mean_local: f64,
    pub var_local_asym: f64,
    pub mean_global: f64,
    pub var_global_asym: f64,
    /// `Var(Z_global)` used in the identities: supplied or asymptotic.
    pub var_global_used: f64,
    pub cov_local_global: f64,
    pub var_m_asym: f64,
    pub cov_z_m_asym: f64,
    pub corr_local_global_bound: f64,
    /// Kac-Rice `E[Z_local^2]` by quadrature, when requested.
    pub second_moment: Option<f64>,
    /// Kac-Rice `Var(Z_local)` by quadrature, when requested.
    pub var_local_quadrature: Option<f64>,
    /// Exact `Var(M)`, when quadrature is requested.
    pub var_m_quadrature: Option<f64>,
    /// Kac-Rice `Cov(Z_local, M)`, when quadrature is requested.
    pub cov_z_m_quadrature: Option<f64>,
}

impl TheoryReport {
    pub fn csv_header() -> &'static str {
        "ell,r,lambda,mean_local,var_local_asym,mean_global,var_global_asym,var_global_used,\
         cov_local_global,var_m_asym,cov_z_m_asym,corr_local_global_bound,second_moment,var_local_quadrature,\
         var_m_quadrature,cov_z_m_quadrature"
    }

    pub fn csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{},{},{}",
            self.ell,
            self.r,
            self.lambda,
            self.mean_local,
            self.var_local_asym,
            self.mean_global,
            self.var_global_asym,
            self.var_global_used,
            self.cov_local_global,
            self.var_m_asym,
            self.cov_z_m_asym,
            self.corr_local_global_bound,
            opt(self.second_moment),
            opt(self.var_local_quadrature),
            opt(self.var_m_quadrature),
            opt(self.cov_z_m_quadrature)
        )
    }
}

/// Builds a [`TheoryReport`]; the Kac-Rice quadrature runs only when `with_quadrature`.
pub fn theory_report(ell: u32, r: f64, var_global: Option<f64>, with_quadrature: bool) -> Result<TheoryReport> {
    let var_global_asym = predict_var_global(ell)?;
    let var_global_used = var_global.unwrap_or(var_global_asym);
    let ids = predict_identities(ell, r, var_global_used)?;
    let (second_moment, var_q, var_m, cov_zm) = if with_quadrature {
        let v = kac_rice_variance(ell, r)?;
        let m = predict_mean_local(ell, r)?;
        (Some(v + m * m), Some(v), Some(trispectrum_variance(ell, r)?), Some(kac_rice_cov_z_m(ell, r)?))
    } else {
        (None, None, None, None)
    };
    Ok(TheoryReport {
        ell,
        r,
        lambda: lambda(ell),
        mean_local: predict_mean_local(ell, r)?,
        var_local_asym: predict_var_local(ell, r)?,
        mean_global: predict_mean_global(ell)?,
        var_global_asym,
        var_global_used,
        cov_local_global: ids.cov_local_global,
        var_m_asym: ids.var_m_asym,
        cov_z_m_asym: ids.cov_z_m_asym,
        corr_local_global_bound: ids.corr_local_global_bound,
        second_moment,
        var_local_quadrature: var_q,
        var_m_quadrature: var_m,
        cov_z_m_quadrature: cov_zm,
    })
}
