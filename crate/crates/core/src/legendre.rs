//! Legendre polynomials, normalized associated Legendre functions and the
//! high-degree asymptotics of `P_ell^4`.
//!
//! The associated functions are normalized as
//! `Qbar_ell^m = sqrt((ell-m)!/(ell+m)!) Q_ell^m` with no Condon-Shortley phase,
//! so `Qbar_ell^0 = P_ell`. They are generated by a downward recurrence in `m`
//! at fixed `ell`, which costs O(ell) per angle.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `P_ell(t)` together with its first two derivatives in `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreEval {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

const T_SLACK: f64 = 1e-12;

/// Evaluates `P_ell`, `P_ell'` and `P_ell''` at `t` by the Bonnet recurrence.
pub fn eval_legendre(ell: u32, t: f64) -> Result<LegendreEval> {
    if !(t.abs() <= 1.0 + T_SLACK) {
        return Err(Error::Domain {
            what: "t",
            value: t,
            domain: "[-1, 1]",
        });
    }
    let t = t.clamp(-1.0, 1.0);
    if ell == 0 {
        return Ok(LegendreEval { value: 1.0, d1: 0.0, d2: 0.0 });
    }
    let mut p0 = 1.0;
    let (mut p1, mut d1, mut s1) = (t, 1.0, 0.0);
    for n in 1..ell {
        let nf = n as f64;
        let p2 = ((2.0 * nf + 1.0) * t * p1 - nf * p0) / (nf + 1.0);
        s1 = t * s1 + (nf + 2.0) * d1;
        d1 = t * d1 + (nf + 1.0) * p1;
        p0 = p1;
        p1 = p2;
    }
    Ok(LegendreEval { value: p1, d1, d2: s1 })
}

/// `1 - P_ell(cos rho)` without cancellation for small `ell * rho`.
pub fn one_minus_legendre_cos(ell: u32, rho: f64) -> f64 {
    let lam = ell as f64 * (ell as f64 + 1.0);
    let x = (0.5 * rho).sin().powi(2);
    if lam * x > 0.5 {
        let p = eval_legendre(ell, rho.cos()).map(|e| e.value).unwrap_or(f64::NAN);
        return 1.0 - p;
    }
    // P_ell(cos rho) = 2F1(-ell, ell+1; 1; sin^2(rho/2))
    let l = ell as f64;
    let mut term = 1.0;
    let mut acc = 0.0;
    for k in 0..ell {
        let kf = k as f64;
        term *= (kf - l) * (kf + l + 1.0) / ((kf + 1.0) * (kf + 1.0)) * x;
        acc += term;
        if term.abs() < 1e-18 * acc.abs() {
            break;
        }
    }
    -acc
}

/// Precomputed recurrence coefficients for `Qbar_ell^m`, `m = 0..=ell`.
#[derive(Debug, Clone)]
pub struct AssocLegendre {
    ell: u32,
    /// `g[m] = sqrt((ell+m)(ell-m+1))`, with `g[ell+1] = 0`.
    g: Vec<f64>,
    inv_g: Vec<f64>,
    /// `log sqrt(prod_{k<=ell} (2k-1)/(2k))`.
    log_top: f64,
}

const RESCALE_AT: f64 = 1e150;
const RESCALE_BY: f64 = 1e-150;
const LOG_RESCALE: f64 = 345.387_763_949_107; // ln(1e150)
/// Below this `sin(theta)` the angle is treated as a pole.
pub const POLE_GUARD: f64 = 1e-8;

/// Receives `Qbar^m` values (in a running scale) as `m` decreases.
pub trait DownwardSink {
    fn push(&mut self, m: u32, v: f64);
    /// All values pushed so far are multiplied by `factor`.
    fn rescale(&mut self, factor: f64);
}

impl AssocLegendre {
    pub fn new(ell: u32) -> Self {
        let l = ell as f64;
        let mut g = vec![0.0; ell as usize + 2];
        let mut inv_g = vec![0.0; ell as usize + 2];
        for m in 1..=ell as usize {
            let mf = m as f64;
            g[m] = ((l + mf) * (l - mf + 1.0)).sqrt();
            inv_g[m] = 1.0 / g[m];
        }
        let log_top = 0.5
            * (1..=ell)
                .map(|k| ((2.0 * k as f64 - 1.0) / (2.0 * k as f64)).ln())
                .sum::<f64>();
        Self { ell, g, inv_g, log_top }
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// `sqrt((ell+m)(ell-m+1))`.
    #[inline]
    pub fn g(&self, m: u32) -> f64 {
        self.g[m as usize]
    }

    /// Runs the downward recurrence at angle `theta` (with `sin theta > 0`),
    /// feeding scaled values to `sink`. Returns the log of the common scale:
    /// true values are `pushed * exp(returned)` after all rescales.
    pub fn downward<S: DownwardSink>(&self, sin_t: f64, cos_t: f64, sink: &mut S) -> f64 {
        let ell = self.ell;
        let mut log_scale = self.log_top + ell as f64 * sin_t.ln();
        let cot = cos_t / sin_t;
        let mut v_up = 0.0;
        let mut v = 1.0;
        sink.push(ell, v);
        for m in (1..=ell).rev() {
            let i = m as usize;
            let v_next = (2.0 * m as f64 * cot * v - self.g[i + 1] * v_up) * self.inv_g[i];
            v_up = v;
            v = v_next;
            if v.abs() > RESCALE_AT {
                v *= RESCALE_BY;
                v_up *= RESCALE_BY;
                sink.rescale(RESCALE_BY);
                log_scale += LOG_RESCALE;
            }
            sink.push(m - 1, v);
        }
        log_scale
    }

    /// Fills `out[m] = Qbar_ell^m(cos theta)` for `m = 0..=ell`.
    pub fn row(&self, theta: f64, out: &mut [f64]) {
        assert!(out.len() > self.ell as usize);
        let (s, c) = theta.sin_cos();
        if s.abs() < POLE_GUARD {
            out.iter_mut().for_each(|x| *x = 0.0);
            out[0] = if c > 0.0 || self.ell.is_multiple_of(2) { 1.0 } else { -1.0 };
            return;
        }
        struct Fill<'a>(&'a mut [f64], usize);
        impl DownwardSink for Fill<'_> {
            fn push(&mut self, m: u32, v: f64) {
                self.0[m as usize] = v;
            }
            fn rescale(&mut self, factor: f64) {
                let n = self.1;
                self.0[..=n].iter_mut().for_each(|x| *x *= factor);
            }
        }
        let n = self.ell as usize;
        let log_scale = self.downward(s, c, &mut Fill(out, n));
        let scale = log_scale.exp();
        out[..=n].iter_mut().for_each(|x| *x *= scale);
    }

    /// Fills `q` with `Qbar^m(cos theta)` and `dq` with its `theta`-derivative.
    pub fn row_with_derivative(&self, theta: f64, q: &mut [f64], dq: &mut [f64]) {
        let n = self.ell as usize;
        self.row(theta, q);
        if n == 0 {
            dq[0] = 0.0;
            return;
        }
        let (s, c) = theta.sin_cos();
        if s.abs() < POLE_GUARD {
            // Only m = 1 has a nonzero slope at a pole.
            dq[..=n].iter_mut().for_each(|x| *x = 0.0);
            let half = 0.5 * self.g[1];
            dq[1] = if c > 0.0 || self.ell.is_multiple_of(2) { half } else { -half };
            return;
        }
        dq[0] = -self.g[1] * q[1];
        for m in 1..=n {
            let up = if m < n { q[m + 1] } else { 0.0 };
            dq[m] = 0.5 * (self.g[m] * q[m - 1] - self.g[m + 1] * up);
        }
    }
}

/// Real orthonormal spherical harmonic `Ytilde_{ell m}(theta, phi)`.
///
/// `m > 0` pairs with `sqrt(2) cos(m phi)`, `m < 0` with `sqrt(2) sin(|m| phi)`.
pub fn eval_assoc_basis(ell: u32, m: i32, theta: f64, phi: f64) -> Result<f64> {
    if m.unsigned_abs() > ell {
        return Err(Error::Range(format!("|m| = {} exceeds ell = {ell}", m.abs())));
    }
    let table = AssocLegendre::new(ell);
    let mut row = vec![0.0; ell as usize + 1];
    table.row(theta, &mut row);
    let norm = ((2.0 * ell as f64 + 1.0) / (4.0 * PI)).sqrt();
    let q = row[m.unsigned_abs() as usize];
    let ang = match m.signum() {
        0 => 1.0,
        1 => std::f64::consts::SQRT_2 * (m as f64 * phi).cos(),
        _ => std::f64::consts::SQRT_2 * ((-m) as f64 * phi).sin(),
    };
    Ok(norm * q * ang)
}

/// Sign in front of `2 sin(2 psi)` in the fourth-power expansion, fixed by
/// comparison with exact `P_ell^4` (see tests).
pub const PL4_SIN_SIGN: f64 = 1.0;

/// Leading asymptotic of `P_ell(cos(psi/L))^4`, `L = ell + 1/2`, valid for
/// `0 < psi < pi L / 2`.
pub fn pl4_expansion(ell: u32, psi: f64) -> Result<f64> {
    pl4_expansion_signed(ell, psi, PL4_SIN_SIGN)
}

/// [`pl4_expansion`] with an explicit sign for the `sin(2 psi)` term.
pub fn pl4_expansion_signed(ell: u32, psi: f64, sign: f64) -> Result<f64> {
    let big_l = ell as f64 + 0.5;
    if ell == 0 || !(psi > 0.0 && psi < PI * big_l / 2.0) {
        return Err(Error::Domain {
            what: "psi",
            value: psi,
            domain: "(0, pi (ell + 1/2) / 2)",
        });
    }
    let l = ell as f64;
    let s = (psi / big_l).sin();
    Ok((1.5 + sign * 2.0 * (2.0 * psi).sin() - 0.5 * (4.0 * psi).cos()) / (PI * PI * l * l * s * s))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Laplace's first integral: `P_n(x) = (1/pi) int_0^pi (x + i sqrt(1-x^2) cos u)^n du`,
    /// integrated exactly by the trapezoid rule on enough nodes.
    fn laplace_integral(n: u32, x: f64) -> f64 {
        let y = (1.0 - x * x).max(0.0).sqrt();
        let k = 2 * n as usize + 4;
        let mut acc = 0.0;
        for j in 0..k {
            let u = 2.0 * PI * (j as f64 + 0.5) / k as f64;
            let (re, im) = (x, y * u.cos());
            let r = (re * re + im * im).sqrt();
            let a = im.atan2(re);
            acc += r.powi(n as i32) * (n as f64 * a).cos();
        }
        acc / k as f64
    }

    /// Upward-in-ell column recurrence for `Qbar_ell^m`.
    fn column_reference(ell: u32, m: u32, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let mut pmm = 1.0;
        for k in 1..=m {
            pmm *= ((2.0 * k as f64 - 1.0) / (2.0 * k as f64)).sqrt() * s;
        }
        if ell == m {
            return pmm;
        }
        let mut p0 = pmm;
        let mut p1 = (2.0 * m as f64 + 1.0).sqrt() * c * pmm;
        let mf = m as f64;
        for l in (m + 2)..=ell {
            let lf = l as f64;
            let a = (2.0 * lf - 1.0) / (lf * lf - mf * mf).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (lf * lf - mf * mf)).sqrt();
            let p2 = a * c * p1 - b * p0;
            p0 = p1;
            p1 = p2;
        }
        p1
    }

    #[test]
    fn small_degree_values() {
        let e = eval_legendre(3, 0.5).unwrap();
        assert!((e.value + 0.4375).abs() < 1e-15);
        // P_3' = (15 t^2 - 3) / 2, P_3'' = 15 t
        assert!((e.d1 - 0.375).abs() < 1e-14);
        assert!((e.d2 - 7.5).abs() < 1e-14);
        let e = eval_legendre(10, 1.0).unwrap();
        assert_eq!(e.value, 1.0);
        assert!((e.d1 - 55.0).abs() < 1e-12);
        // P''(1) = (ell-1) ell (ell+1) (ell+2) / 8
        assert!((e.d2 - 9.0 * 10.0 * 11.0 * 12.0 / 8.0).abs() < 1e-9);
    }

    #[test]
    fn out_of_domain_is_rejected() {
        assert!(matches!(eval_legendre(4, 1.5), Err(Error::Domain { .. })));
        assert!(eval_legendre(4, 1.0 + 1e-13).is_ok());
    }

    #[test]
    fn bonnet_matches_laplace_integral() {
        for &ell in &[1u32, 2, 7, 40, 150, 500] {
            for i in 0..41 {
                let t = -1.0 + 2.0 * i as f64 / 40.0;
                let want = laplace_integral(ell, t);
                let got = eval_legendre(ell, t).unwrap().value;
                assert!((got - want).abs() < 1e-12, "ell={ell} t={t}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for &ell in &[5u32, 60, 300] {
            for &t in &[-0.9, -0.3, 0.1, 0.77] {
                let h = 1e-6;
                let e = eval_legendre(ell, t).unwrap();
                let p = |x| eval_legendre(ell, x).unwrap();
                let fd1 = (p(t + h).value - p(t - h).value) / (2.0 * h);
                let fd2 = (p(t + h).d1 - p(t - h).d1) / (2.0 * h);
                let scale1 = e.d1.abs().max(ell as f64);
                let scale2 = e.d2.abs().max((ell * ell) as f64);
                assert!((fd1 - e.d1).abs() < 1e-6 * scale1);
                assert!((fd2 - e.d2).abs() < 1e-6 * scale2);
            }
        }
    }

    #[test]
    fn one_minus_series_agrees_with_direct() {
        for &ell in &[3u32, 50, 200] {
            for &psi in &[0.05, 0.3, 0.9] {
                let rho = psi / (ell as f64 + 0.5);
                let direct = 1.0 - eval_legendre(ell, rho.cos()).unwrap().value;
                let series = one_minus_legendre_cos(ell, rho);
                assert!((series - direct).abs() < 1e-12 + 1e-9 * direct.abs());
            }
        }
        // leading term lambda sin^2(rho/2)
        let rho = 1e-7;
        let want = 200.0 * 201.0 * (0.5f64 * rho).sin().powi(2);
        assert!((one_minus_legendre_cos(200, rho) / want - 1.0).abs() < 1e-8);
    }

    #[test]
    fn downward_rows_match_column_recurrence() {
        for &ell in &[0u32, 1, 4, 33, 200, 1000] {
            let table = AssocLegendre::new(ell);
            let mut row = vec![0.0; ell as usize + 1];
            for &theta in &[1e-3, 0.05, 0.4, 1.2, PI / 2.0, 2.0, 3.1] {
                table.row(theta, &mut row);
                let mut max_err: f64 = 0.0;
                for m in 0..=ell {
                    let want = column_reference(ell, m, theta);
                    max_err = max_err.max((row[m as usize] - want).abs());
                }
                assert!(max_err < 1e-11, "ell={ell} theta={theta} err={max_err}");
                let p = eval_legendre(ell, theta.cos()).unwrap().value;
                assert!((row[0] - p).abs() < 1e-11, "ell={ell} theta={theta}: {} vs {p}", row[0]);
            }
        }
    }

    #[test]
    fn derivative_rows_match_finite_differences() {
        let ell = 37;
        let table = AssocLegendre::new(ell);
        let n = ell as usize + 1;
        let (mut q, mut dq, mut qp, mut qm) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for &theta in &[0.01, 0.7, 1.9, 3.0] {
            let h = 1e-6;
            table.row_with_derivative(theta, &mut q, &mut dq);
            table.row(theta + h, &mut qp);
            table.row(theta - h, &mut qm);
            for m in 0..n {
                let fd = (qp[m] - qm[m]) / (2.0 * h);
                assert!((fd - dq[m]).abs() < 1e-6 * (ell as f64), "m={m} theta={theta}");
            }
        }
    }

    #[test]
    fn pole_rows() {
        let table = AssocLegendre::new(6);
        let n = 7;
        let (mut q, mut dq) = (vec![0.0; n], vec![0.0; n]);
        table.row_with_derivative(0.0, &mut q, &mut dq);
        assert_eq!(q[0], 1.0);
        assert!(q[1..].iter().all(|&x| x == 0.0));
        assert!((dq[1] - 0.5 * 42f64.sqrt()).abs() < 1e-14);
        // near-pole derivative agrees with the pole limit
        table.row_with_derivative(1e-5, &mut q, &mut dq);
        assert!((dq[1] - 0.5 * 42f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn addition_theorem() {
        let ell = 25;
        let (t1, p1, t2, p2) = (0.7, 1.1, 2.2, -0.4);
        let sum: f64 = (-(ell as i32)..=ell as i32)
            .map(|m| eval_assoc_basis(ell, m, t1, p1).unwrap() * eval_assoc_basis(ell, m, t2, p2).unwrap())
            .sum();
        let cosd = t1.cos() * t2.cos() + t1.sin() * t2.sin() * (p1 - p2).cos();
        let want = (2.0 * ell as f64 + 1.0) / (4.0 * PI) * eval_legendre(ell, cosd).unwrap().value;
        assert!((sum - want).abs() < 1e-12);
    }

    #[test]
    fn basis_rejects_large_order() {
        assert!(eval_assoc_basis(3, 4, 0.1, 0.2).is_err());
    }

    #[test]
    fn pl4_sign_is_resolved_by_exact_values() {
        // Mean absolute error of each sign choice against exact P^4.
        let mut err = [0.0f64; 2];
        for &ell in &[50u32, 100, 200] {
            let big_l = ell as f64 + 0.5;
            let top = (PI * big_l / 2.0 - 1e-9).min(100.0);
            for i in 0..400 {
                let psi = 5.0 + (top - 5.0) * i as f64 / 399.0;
                let exact = eval_legendre(ell, (psi / big_l).cos()).unwrap().value.powi(4);
                for (k, sign) in [1.0, -1.0].iter().enumerate() {
                    err[k] += (pl4_expansion_signed(ell, psi, *sign).unwrap() - exact).abs();
                }
            }
        }
        assert!(err[0] < 0.2 * err[1], "{err:?}");
        assert_eq!(PL4_SIN_SIGN, 1.0);
    }

    #[test]
    fn pl4_error_decays() {
        let ell = 100;
        let big_l = 100.5;
        let exact = |psi: f64| eval_legendre(ell, (psi / big_l).cos()).unwrap().value.powi(4);
        let e20 = (pl4_expansion(ell, 20.0).unwrap() - exact(20.0)).abs();
        assert!(e20 < 10.0 / 20f64.powi(3));
        // compare envelopes over a period rather than single points
        let env = |c: f64| {
            (0..64)
                .map(|i| {
                    let psi = c + PI * i as f64 / 64.0;
                    (pl4_expansion(ell, psi).unwrap() - exact(psi)).abs()
                })
                .fold(0.0, f64::max)
        };
        assert!(env(40.0) < env(20.0));
    }

    #[test]
    fn pl4_domain() {
        assert!(pl4_expansion(10, 0.0).is_err());
        assert!(pl4_expansion(10, PI * 10.5 / 2.0).is_err());
    }

    #[test]
    fn hilb_envelope() {
        // |P_ell(cos(psi/L))| sqrt(psi) stays bounded by a modest constant
        let mut c: f64 = 0.0;
        for &ell in &[50u32, 200, 800] {
            let big_l = ell as f64 + 0.5;
            for i in 1..2000 {
                let psi = 1.0 + (PI * big_l / 2.0 - 1.0) * i as f64 / 2000.0;
                let p = eval_legendre(ell, (psi / big_l).cos()).unwrap().value;
                c = c.max(p.abs() * psi.sqrt());
            }
        }
        assert!(c <= 2.0, "c = {c}");
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn legendre_bounded_and_symmetric(ell in 0u32..400, t in -1.0f64..1.0) {
            let a = eval_legendre(ell, t).unwrap();
            let b = eval_legendre(ell, -t).unwrap();
            prop_assert!(a.value.abs() <= 1.0 + 1e-12);
            let parity = if ell % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((a.value - parity * b.value).abs() < 1e-12);
        }

        #[test]
        fn bonnet_rederivation(ell in 2u32..300, t in -1.0f64..1.0) {
            let l = ell as f64;
            let p = |n| eval_legendre(n, t).unwrap().value;
            let lhs = l * p(ell);
            let rhs = (2.0 * l - 1.0) * t * p(ell - 1) - (l - 1.0) * p(ell - 2);
            prop_assert!((lhs - rhs).abs() < 1e-10 * l);
        }

        #[test]
        fn addition_theorem_random(ell in 0u32..60, t1 in 0.0f64..PI, t2 in 0.0f64..PI, p1 in -PI..PI, p2 in -PI..PI) {
            let sum: f64 = (-(ell as i32)..=ell as i32)
                .map(|m| eval_assoc_basis(ell, m, t1, p1).unwrap() * eval_assoc_basis(ell, m, t2, p2).unwrap())
                .sum();
            let cosd = (t1.cos() * t2.cos() + t1.sin() * t2.sin() * (p1 - p2).cos()).clamp(-1.0, 1.0);
            let want = (2.0 * ell as f64 + 1.0) / (4.0 * PI) * eval_legendre(ell, cosd).unwrap().value;
            prop_assert!((sum - want).abs() < 1e-9);
        }
    }
}
