//! Gaussian random spherical harmonics of a fixed degree and fast evaluation.
//!
//! A field of degree `ell` is `T = sqrt(4 pi / (2 ell + 1)) sum_m c_m Ytilde_{ell m}`
//! with i.i.d. standard normal `c_m`, so `E[T^2] = 1` and
//! `E[T(x) T(y)] = P_ell(cos d(x, y))`.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::legendre::{AssocLegendre, DownwardSink, POLE_GUARD};

/// Name of the generator behind [`sample_field`], recorded in run manifests.
pub const RNG_ALGORITHM: &str =
    "rand_chacha::ChaCha8Rng seed_from_u64(master_seed) with stream = replicate_index; \
     rand_distr::StandardNormal coefficients in order m = -ell..=ell";

/// A point on the unit sphere, colatitude `theta` in `[0, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    pub theta: f64,
    pub phi: f64,
}

impl SphericalPoint {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn to_unit(self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    fn check(self) -> Result<Self> {
        if !(0.0..=PI).contains(&self.theta) || !self.phi.is_finite() {
            return Err(Error::Domain {
                what: "theta",
                value: self.theta,
                domain: "[0, pi] with finite phi",
            });
        }
        Ok(self)
    }
}

/// Great-circle distance between two points.
pub fn geodesic_distance(a: SphericalPoint, b: SphericalPoint) -> f64 {
    unit_distance(a.to_unit(), b.to_unit())
}

/// Great-circle distance between unit vectors, accurate at all separations.
pub fn unit_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let s = (cross[0].powi(2) + cross[1].powi(2) + cross[2].powi(2)).sqrt();
    let c = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    s.atan2(c)
}

/// Cosine and sine coefficients of a field: `T = sum_m Qbar^m (a_m cos m phi + b_m sin m phi)`.
#[derive(Debug, Clone)]
pub(crate) struct Spectrum {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Spectrum {
    /// Spectrum of `T(pi - theta, phi)`, used for charts centred at the south pole.
    pub fn reflected(&self) -> Self {
        let ell = self.a.len() - 1;
        let flip = |m: usize| if (ell + m).is_multiple_of(2) { 1.0 } else { -1.0 };
        Self {
            a: self.a.iter().enumerate().map(|(m, v)| flip(m) * v).collect(),
            b: self.b.iter().enumerate().map(|(m, v)| flip(m) * v).collect(),
        }
    }
}

/// A degree-`ell` Gaussian field realization.
#[derive(Debug, Clone)]
pub struct HarmonicField {
    ell: u32,
    coeffs: Vec<f64>,
    seed: u64,
    stream: u64,
    table: Arc<AssocLegendre>,
    spec: Spectrum,
}

impl HarmonicField {
    /// Builds a field from `2 ell + 1` coefficients ordered `m = -ell..=ell`.
    pub fn from_coefficients(ell: u32, coeffs: Vec<f64>) -> Result<Self> {
        Self::build(ell, coeffs, 0, 0)
    }

    fn build(ell: u32, coeffs: Vec<f64>, seed: u64, stream: u64) -> Result<Self> {
        if ell < 1 {
            return Err(Error::Range("ell must be at least 1".into()));
        }
        if coeffs.len() != 2 * ell as usize + 1 {
            return Err(Error::Range(format!(
                "expected {} coefficients, got {}",
                2 * ell + 1,
                coeffs.len()
            )));
        }
        let l = ell as usize;
        let mut a = vec![0.0; l + 1];
        let mut b = vec![0.0; l + 1];
        a[0] = coeffs[l];
        for m in 1..=l {
            a[m] = SQRT_2 * coeffs[l + m];
            b[m] = SQRT_2 * coeffs[l - m];
        }
        Ok(Self {
            ell,
            coeffs,
            seed,
            stream,
            table: Arc::new(AssocLegendre::new(ell)),
            spec: Spectrum { a, b },
        })
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// Coefficients ordered `m = -ell..=ell`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// `(seed, stream)` used to draw the coefficients.
    pub fn seed_tag(&self) -> (u64, u64) {
        (self.seed, self.stream)
    }

    pub(crate) fn table(&self) -> &AssocLegendre {
        &self.table
    }

    pub(crate) fn spectrum(&self) -> &Spectrum {
        &self.spec
    }

    pub fn eval(&self, p: SphericalPoint) -> Result<f64> {
        let p = p.check()?;
        Ok(eval_spectrum(&self.table, &self.spec, p.theta, p.phi))
    }

    /// Gradient components in the orthonormal frame `(e_theta, e_phi)`.
    pub fn gradient(&self, p: SphericalPoint) -> Result<[f64; 2]> {
        let p = p.check()?;
        let n = self.ell as usize + 1;
        let (mut q, mut dq) = (vec![0.0; n], vec![0.0; n]);
        self.table.row_with_derivative(p.theta, &mut q, &mut dq);
        let s = p.theta.sin();
        let pole = s.abs() < POLE_GUARD;
        let (mut gt, mut gp) = (0.0, 0.0);
        for m in 0..n {
            let (sm, cm) = (m as f64 * p.phi).sin_cos();
            let (a, b) = (self.spec.a[m], self.spec.b[m]);
            gt += dq[m] * (a * cm + b * sm);
            // Qbar^m / sin(theta) tends to the slope of Qbar^1 at a pole.
            let q_over_s = if pole { dq[m] * p.theta.cos().signum() } else { q[m] / s };
            gp += m as f64 * q_over_s * (b * cm - a * sm);
        }
        Ok([gt, gp])
    }
}

/// Draws a field with the coefficient stream `(seed, 0)`.
pub fn sample_field(ell: u32, seed: u64) -> Result<HarmonicField> {
    sample_field_stream(ell, seed, 0)
}

/// Draws a field from the independent stream `stream` of generator `seed`.
pub fn sample_field_stream(ell: u32, seed: u64, stream: u64) -> Result<HarmonicField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let coeffs = (0..2 * ell as usize + 1)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    HarmonicField::build(ell, coeffs, seed, stream)
}

pub fn eval_field(f: &HarmonicField, p: SphericalPoint) -> Result<f64> {
    f.eval(p)
}

pub fn eval_gradient(f: &HarmonicField, p: SphericalPoint) -> Result<[f64; 2]> {
    f.gradient(p)
}

struct PointSink<'a> {
    spec: &'a Spectrum,
    c: f64,
    s: f64,
    cos1: f64,
    sin1: f64,
    acc: f64,
}

impl DownwardSink for PointSink<'_> {
    #[inline]
    fn push(&mut self, m: u32, v: f64) {
        let i = m as usize;
        self.acc += v * (self.spec.a[i] * self.c + self.spec.b[i] * self.s);
        // step the angle down from m to m - 1
        let c = self.c * self.cos1 + self.s * self.sin1;
        self.s = self.s * self.cos1 - self.c * self.sin1;
        self.c = c;
    }
    fn rescale(&mut self, factor: f64) {
        self.acc *= factor;
    }
}

pub(crate) fn eval_spectrum(table: &AssocLegendre, spec: &Spectrum, theta: f64, phi: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    if s.abs() < POLE_GUARD {
        let sign = if c > 0.0 || table.ell().is_multiple_of(2) { 1.0 } else { -1.0 };
        return sign * spec.a[0];
    }
    let ell = table.ell() as f64;
    let (sin1, cos1) = phi.sin_cos();
    let (s_top, c_top) = (ell * phi).sin_cos();
    let mut sink = PointSink { spec, c: c_top, s: s_top, cos1, sin1, acc: 0.0 };
    let log_scale = table.downward(s, c, &mut sink);
    sink.acc * log_scale.exp()
}

/// Accumulates the 16 partial sums that serve all eight dihedral images of a
/// chart point, grouped by `m mod 4`.
struct OctantSink<'a> {
    spec: &'a Spectrum,
    c: f64,
    s: f64,
    cos1: f64,
    sin1: f64,
    ac: [f64; 4],
    asn: [f64; 4],
    bc: [f64; 4],
    bs: [f64; 4],
}

impl DownwardSink for OctantSink<'_> {
    #[inline]
    fn push(&mut self, m: u32, v: f64) {
        let i = m as usize;
        let j = i & 3;
        let (vc, vs) = (v * self.c, v * self.s);
        let (a, b) = (self.spec.a[i], self.spec.b[i]);
        self.ac[j] += a * vc;
        self.asn[j] += a * vs;
        self.bc[j] += b * vc;
        self.bs[j] += b * vs;
        let c = self.c * self.cos1 + self.s * self.sin1;
        self.s = self.s * self.cos1 - self.c * self.sin1;
        self.c = c;
    }
    fn rescale(&mut self, factor: f64) {
        for k in 0..4 {
            self.ac[k] *= factor;
            self.asn[k] *= factor;
            self.bc[k] *= factor;
            self.bs[k] *= factor;
        }
    }
}

const QUARTER: [(f64, f64); 4] = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];

/// Square grid on an azimuthal-equidistant chart: node `(i, j)` sits at
/// `x = (i - n/2) h`, `y = (j - n/2) h` with `h = 2 half_width / n`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ChartGrid {
    pub n: usize,
    pub h: f64,
}

impl ChartGrid {
    pub fn new(n: usize, half_width: f64) -> Self {
        assert!(n.is_multiple_of(2) && n >= 2);
        Self { n, h: 2.0 * half_width / n as f64 }
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.h
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    /// Field values at every node within chart radius `rho_max`; NaN elsewhere.
    pub fn evaluate(&self, table: &AssocLegendre, spec: &Spectrum, rho_max: f64) -> Vec<f64> {
        let n = self.n;
        let c = (n / 2) as isize;
        let mut out = vec![f64::NAN; (n + 1) * (n + 1)];
        let ell = table.ell() as f64;
        let put = |out: &mut Vec<f64>, x: isize, y: isize, v: f64| {
            out[((c + y) as usize) * (n + 1) + (c + x) as usize] = v;
        };
        for u in 0..=c {
            for v in 0..=u {
                let (x, y) = (u as f64 * self.h, v as f64 * self.h);
                let rho = x.hypot(y);
                if rho > rho_max {
                    continue;
                }
                if rho.sin().abs() < POLE_GUARD {
                    let val = eval_spectrum(table, spec, rho, 0.0);
                    put(&mut out, u, v, val);
                    continue;
                }
                let phi = y.atan2(x);
                let (sin1, cos1) = phi.sin_cos();
                let (s_top, c_top) = (ell * phi).sin_cos();
                let mut sink = OctantSink {
                    spec,
                    c: c_top,
                    s: s_top,
                    cos1,
                    sin1,
                    ac: [0.0; 4],
                    asn: [0.0; 4],
                    bc: [0.0; 4],
                    bs: [0.0; 4],
                };
                let (st, ct) = rho.sin_cos();
                let scale = table.downward(st, ct, &mut sink).exp();
                let image = |sigma: f64, k: usize| {
                    let mut t = 0.0;
                    for j in 0..4 {
                        let (cs, sn) = QUARTER[(j * k) & 3];
                        t += cs * (sink.ac[j] + sigma * sink.bs[j]) + sn * (sink.bc[j] - sigma * sink.asn[j]);
                    }
                    t * scale
                };
                put(&mut out, u, v, image(1.0, 0));
                put(&mut out, v, u, image(-1.0, 1));
                put(&mut out, -v, u, image(1.0, 1));
                put(&mut out, -u, v, image(-1.0, 2));
                put(&mut out, -u, -v, image(1.0, 2));
                put(&mut out, -v, -u, image(-1.0, 3));
                put(&mut out, v, -u, image(1.0, 3));
                put(&mut out, u, -v, image(-1.0, 0));
            }
        }
        out
    }
}

/// Equispaced azimuthal synthesis on a colatitude ring via FFT.
pub(crate) struct RingSynth {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl RingSynth {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_inverse(n);
        Self { n, fft }
    }

    /// Values `sum_m q_m (a_m cos m phi_j + b_m sin m phi_j)` at `phi_j = 2 pi j / n`,
    /// optionally with the `phi`-derivative.
    pub fn synth(&self, spec: &Spectrum, q: &[f64], with_dphi: bool) -> (Vec<f64>, Option<Vec<f64>>) {
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut dbuf = if with_dphi { vec![Complex64::new(0.0, 0.0); n] } else { Vec::new() };
        for (m, &qm) in q.iter().enumerate() {
            let z = Complex64::new(spec.a[m], -spec.b[m]) * qm;
            buf[m % n] += z;
            if with_dphi {
                dbuf[m % n] += z * Complex64::new(0.0, m as f64);
            }
        }
        self.fft.process(&mut buf);
        let vals = buf.iter().map(|z| z.re).collect();
        let d = with_dphi.then(|| {
            self.fft.process(&mut dbuf);
            dbuf.iter().map(|z| z.re).collect()
        });
        (vals, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::{eval_assoc_basis, eval_legendre};

    fn direct_eval(f: &HarmonicField, p: SphericalPoint) -> f64 {
        let ell = f.ell();
        let norm = (4.0 * PI / (2.0 * ell as f64 + 1.0)).sqrt();
        (-(ell as i32)..=ell as i32)
            .map(|m| f.coefficients()[(m + ell as i32) as usize] * eval_assoc_basis(ell, m, p.theta, p.phi).unwrap())
            .sum::<f64>()
            * norm
    }

    #[test]
    fn fused_evaluation_matches_basis_sum() {
        let f = sample_field(30, 9).unwrap();
        for &(t, p) in &[(0.3, 1.0), (1.5, -2.0), (2.9, 0.1), (0.0, 0.7), (PI, 0.0)] {
            let p = SphericalPoint::new(t, p);
            assert!((f.eval(p).unwrap() - direct_eval(&f, p)).abs() < 1e-11);
        }
    }

    #[test]
    fn ell_one_dipole() {
        // coefficient on m = +1 only: T = sqrt(3) sin(theta) cos(phi) * sqrt(4pi/3) * norm
        let f = HarmonicField::from_coefficients(1, vec![0.0, 0.0, 1.0]).unwrap();
        let at = |p| f.eval(SphericalPoint::new(PI / 2.0, p)).unwrap().abs();
        assert!(at(0.0) > at(PI / 2.0) + 0.5);
        assert!((at(0.0) - at(PI)).abs() < 1e-14);
        assert!(at(PI / 2.0) < 1e-15);
    }

    #[test]
    fn rejects_bad_points() {
        let f = sample_field(3, 1).unwrap();
        assert!(f.eval(SphericalPoint::new(-0.1, 0.0)).is_err());
        assert!(f.eval(SphericalPoint::new(0.1, f64::NAN)).is_err());
        assert!(sample_field(0, 1).is_err());
    }

    #[test]
    fn same_seed_same_field() {
        let a = sample_field_stream(20, 5, 3).unwrap();
        let b = sample_field_stream(20, 5, 3).unwrap();
        let c = sample_field_stream(20, 5, 4).unwrap();
        assert_eq!(a.coefficients(), b.coefficients());
        assert_ne!(a.coefficients(), c.coefficients());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f = sample_field(40, 2).unwrap();
        for &(t, p) in &[(0.2, 0.3), (1.0, 2.0), (2.5, -1.0)] {
            let h = 1e-6;
            let g = f.gradient(SphericalPoint::new(t, p)).unwrap();
            let e = |t, p| f.eval(SphericalPoint::new(t, p)).unwrap();
            let dt = (e(t + h, p) - e(t - h, p)) / (2.0 * h);
            let dp = (e(t, p + h) - e(t, p - h)) / (2.0 * h) / t.sin();
            assert!((g[0] - dt).abs() < 1e-6 * 40.0, "{g:?} vs {dt}");
            assert!((g[1] - dp).abs() < 1e-6 * 40.0, "{g:?} vs {dp}");
        }
    }

    #[test]
    fn gradient_at_pole_is_continuous() {
        let f = sample_field(12, 4).unwrap();
        for &(t0, sgn) in &[(0.0, 1.0), (PI, -1.0)] {
            let g0 = f.gradient(SphericalPoint::new(t0, 0.4)).unwrap();
            let g1 = f.gradient(SphericalPoint::new(t0 + sgn * 1e-6, 0.4)).unwrap();
            assert!((g0[0] - g1[0]).abs() < 1e-4 && (g0[1] - g1[1]).abs() < 1e-4, "{g0:?} {g1:?}");
        }
    }

    #[test]
    fn grid_evaluation_matches_pointwise() {
        let f = sample_field(25, 11).unwrap();
        let grid = ChartGrid::new(16, 0.6);
        for spec in [f.spectrum().clone(), f.spectrum().reflected()] {
            let vals = grid.evaluate(f.table(), &spec, 10.0);
            for j in 0..=16 {
                for i in 0..=16 {
                    let (x, y) = (grid.coord(i), grid.coord(j));
                    let want = eval_spectrum(f.table(), &spec, x.hypot(y), y.atan2(x));
                    assert!((vals[grid.index(i, j)] - want).abs() < 1e-12, "({i},{j})");
                }
            }
        }
    }

    #[test]
    fn reflected_spectrum_is_the_antipodal_reflection() {
        let f = sample_field(9, 3).unwrap();
        let r = f.spectrum().reflected();
        let (t, p) = (0.8, 1.3);
        let want = f.eval(SphericalPoint::new(PI - t, p)).unwrap();
        assert!((eval_spectrum(f.table(), &r, t, p) - want).abs() < 1e-13);
    }

    #[test]
    fn ring_synthesis_matches_pointwise() {
        let f = sample_field(20, 8).unwrap();
        let theta = 0.7;
        let mut q = vec![0.0; 21];
        f.table().row(theta, &mut q);
        for n in [8usize, 64] {
            let ring = RingSynth::new(n);
            let (v, d) = ring.synth(f.spectrum(), &q, true);
            let d = d.unwrap();
            for j in 0..n {
                let phi = 2.0 * PI * j as f64 / n as f64;
                let p = SphericalPoint::new(theta, phi);
                assert!((v[j] - f.eval(p).unwrap()).abs() < 1e-11);
                let g = f.gradient(p).unwrap();
                assert!((d[j] / theta.sin() - g[1]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn empirical_covariance_matches_legendre() {
        // two points at distance d; covariance over many draws
        let ell = 8;
        let (a, b) = (SphericalPoint::new(0.4, 0.0), SphericalPoint::new(0.9, 0.5));
        let d = geodesic_distance(a, b);
        let n = 4000;
        let (mut sab, mut saa) = (0.0, 0.0);
        for s in 0..n {
            let f = sample_field_stream(ell, 77, s).unwrap();
            let (x, y) = (f.eval(a).unwrap(), f.eval(b).unwrap());
            sab += x * y;
            saa += x * x;
        }
        let want = eval_legendre(ell, d.cos()).unwrap().value;
        // sd of a product of unit normals is at most sqrt(2)
        assert!((sab / n as f64 - want).abs() < 4.0 * 2f64.sqrt() / (n as f64).sqrt());
        assert!((saa / n as f64 - 1.0).abs() < 4.0 * 2f64.sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn theta_derivative_variance() {
        // Var(d_theta T) = lambda / 2
        let ell = 10;
        let n = 5000;
        let p = SphericalPoint::new(1.1, 0.3);
        let xs: Vec<f64> = (0..n)
            .map(|s| sample_field_stream(ell, 5, s).unwrap().gradient(p).unwrap()[0].powi(2))
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!((mean - 55.0).abs() < 3.0 * se, "{mean} +- {se}");
    }

    #[test]
    fn geodesic_distance_small_and_antipodal() {
        let a = SphericalPoint::new(1.0, 0.2);
        let b = SphericalPoint::new(1.0 + 1e-9, 0.2);
        assert!((geodesic_distance(a, b) / 1e-9 - 1.0).abs() < 1e-6);
        let c = SphericalPoint::new(PI - 1.0, 0.2 + PI);
        assert!((geodesic_distance(a, c) - PI).abs() < 1e-12);
    }
}
