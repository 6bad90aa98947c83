//! Nodal length of a field inside a polar cap and on the whole sphere.
//!
//! Lengths are measured by marching squares on an azimuthal-equidistant chart
//! centred at the cap's pole. Crossing points come from linear interpolation
//! along cell edges; each segment contributes the great-circle distance
//! between its endpoints mapped back to the sphere.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{eval_spectrum, unit_distance, ChartGrid, HarmonicField, RingSynth, SphericalPoint, Spectrum};
use crate::legendre::AssocLegendre;

/// Replacement for vertex values that are exactly zero.
pub const ZERO_VERTEX: f64 = 1e-300;
/// Default resolution of the chart grid, in cells per wavelength `2 pi / ell`.
pub const CELLS_PER_WAVELENGTH: f64 = 20.0;
/// Smallest grid accepted by the cap routines.
pub const MIN_GRID: usize = 32;
/// Colatitude at which the global computation hands over from the north
/// chart to the south chart. Kept off the equator so that no great circle,
/// and no nodal circle of a zonal harmonic of moderate degree, runs along it.
pub const GLOBAL_SEAM: f64 = PI / 2.0 + 0.0731;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Pole {
    #[default]
    North,
    South,
}

/// Geodesic ball of radius `radius` about a pole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapDomain {
    pub pole: Pole,
    pub radius: f64,
}

impl CapDomain {
    pub fn new(radius: f64) -> Result<Self> {
        Self::at(Pole::North, radius)
    }

    pub fn at(pole: Pole, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(Self { pole, radius })
    }

    /// Spherical area `2 pi (1 - cos r)`.
    pub fn area(&self) -> f64 {
        2.0 * PI * (1.0 - self.radius.cos())
    }
}

pub(crate) fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r < PI) {
        return Err(Error::Domain { what: "radius", value: r, domain: "(0, π)" });
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodalResult {
    /// Polylines of the nodal set (empty unless requested).
    pub segments: Vec<Vec<SphericalPoint>>,
    pub total_length: f64,
    pub grid_n_used: usize,
}

/// Default grid size for a chart of half-width `half_width` at degree `ell`.
pub fn default_grid_n(ell: u32, half_width: f64) -> usize {
    let n = (CELLS_PER_WAVELENGTH * ell as f64 * half_width / PI).ceil() as usize;
    even(n.max(MIN_GRID))
}

fn even(n: usize) -> usize {
    n + n % 2
}

fn checked_grid(grid_n: Option<usize>, ell: u32, half_width: f64) -> Result<usize> {
    match grid_n {
        None => Ok(default_grid_n(ell, half_width)),
        Some(n) if n < MIN_GRID => Err(Error::Range(format!("grid_n = {n} is below the minimum {MIN_GRID}"))),
        Some(n) => Ok(even(n)),
    }
}

/// Nodal length of `f` inside `cap`, with polylines.
pub fn nodal_length_cap(f: &HarmonicField, cap: &CapDomain, grid_n: Option<usize>) -> Result<NodalResult> {
    cap_length(f, cap, grid_n, true)
}

/// Nodal length of `f` inside `cap`, without building polylines.
pub fn nodal_length_cap_value(f: &HarmonicField, cap: &CapDomain, grid_n: Option<usize>) -> Result<f64> {
    Ok(cap_length(f, cap, grid_n, false)?.total_length)
}

fn cap_length(f: &HarmonicField, cap: &CapDomain, grid_n: Option<usize>, collect: bool) -> Result<NodalResult> {
    check_radius(cap.radius)?;
    let n = checked_grid(grid_n, f.ell(), cap.radius)?;
    let spec = match cap.pole {
        Pole::North => f.spectrum().clone(),
        Pole::South => f.spectrum().reflected(),
    };
    let chart = Chart { table: f.table(), spec: &spec, pole: cap.pole };
    let out = chart.march(n, cap.radius, cap.radius, collect);
    Ok(NodalResult { segments: out.polylines, total_length: out.length, grid_n_used: n })
}

/// Richardson-extrapolated cap length from grids `n` and `n / 2`, assuming
/// the leading discretization error is quadratic in the cell size.
pub fn nodal_length_cap_extrapolated(f: &HarmonicField, cap: &CapDomain, grid_n: usize) -> Result<f64> {
    let fine = nodal_length_cap_value(f, cap, Some(grid_n))?;
    let coarse = nodal_length_cap_value(f, cap, Some(even(grid_n / 2).max(MIN_GRID)))?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Cap length at `grid_n` together with the relative change against `grid_n / 2`;
/// logs a warning when the change exceeds 1% of the mean length.
pub fn nodal_length_cap_checked(f: &HarmonicField, cap: &CapDomain, grid_n: Option<usize>) -> Result<(f64, f64)> {
    let n = checked_grid(grid_n, f.ell(), cap.radius)?;
    let fine = nodal_length_cap_value(f, cap, Some(n))?;
    let coarse = nodal_length_cap_value(f, cap, Some(even(n / 2).max(MIN_GRID)))?;
    let lam = f.ell() as f64 * (f.ell() as f64 + 1.0);
    let mean = (lam / 2.0).sqrt() * cap.area() / 2.0;
    // with quadratic convergence the fine-grid error is a third of the change
    let est = (fine - coarse).abs() / 3.0 / mean;
    if est > 0.01 {
        log::warn!("estimated discretization error {:.2}% of the mean length at grid_n = {n}", 100.0 * est);
    }
    Ok((fine, est))
}

/// Nodal length over the whole sphere from two polar charts meeting at
/// colatitude [`GLOBAL_SEAM`].
pub fn nodal_length_global(f: &HarmonicField, grid_n: Option<usize>) -> Result<NodalResult> {
    global_length(f, grid_n, true)
}

/// [`nodal_length_global`] without polylines.
pub fn nodal_length_global_value(f: &HarmonicField, grid_n: Option<usize>) -> Result<f64> {
    Ok(global_length(f, grid_n, false)?.total_length)
}

/// Richardson-extrapolated global length from north-chart grids `n` and `n / 2`.
pub fn nodal_length_global_extrapolated(f: &HarmonicField, grid_n: usize) -> Result<f64> {
    let fine = nodal_length_global_value(f, Some(grid_n))?;
    let coarse = nodal_length_global_value(f, Some(even(grid_n / 2).max(MIN_GRID)))?;
    Ok((4.0 * fine - coarse) / 3.0)
}

fn global_length(f: &HarmonicField, grid_n: Option<usize>, collect: bool) -> Result<NodalResult> {
    let north_r = GLOBAL_SEAM;
    let south_r = PI - GLOBAL_SEAM;
    // Both charts share one cell size; grid_n refers to the north chart.
    let n_north = checked_grid(grid_n, f.ell(), north_r)?;
    let h = 2.0 * north_r / n_north as f64;
    let n_south = even((2.0 * south_r / h).ceil() as usize).max(MIN_GRID);
    let north_spec = f.spectrum().clone();
    let south_spec = f.spectrum().reflected();
    let north = Chart { table: f.table(), spec: &north_spec, pole: Pole::North }.march(n_north, north_r, north_r, collect);
    let south = Chart { table: f.table(), spec: &south_spec, pole: Pole::South }.march(n_south, south_r, south_r, collect);
    let mut segments = north.polylines;
    segments.extend(south.polylines);
    Ok(NodalResult { segments, total_length: north.length + south.length, grid_n_used: n_north })
}

struct Chart<'a> {
    table: &'a AssocLegendre,
    spec: &'a Spectrum,
    pole: Pole,
}

struct MarchOutput {
    length: f64,
    polylines: Vec<Vec<SphericalPoint>>,
}

/// Endpoint of a cell segment: an edge crossing shared with the neighbour
/// cell, or a point where the segment was clipped.
#[derive(Debug, Clone, Copy)]
struct End {
    key: Option<usize>,
    p: [f64; 2],
}

impl Chart<'_> {
    fn unit(&self, p: [f64; 2]) -> [f64; 3] {
        let rho = p[0].hypot(p[1]);
        let sinc = if rho < 1e-8 { 1.0 - rho * rho / 6.0 } else { rho.sin() / rho };
        let z = rho.cos();
        match self.pole {
            Pole::North => [sinc * p[0], sinc * p[1], z],
            Pole::South => [sinc * p[0], sinc * p[1], -z],
        }
    }

    fn sphere_point(&self, p: [f64; 2]) -> SphericalPoint {
        let rho = p[0].hypot(p[1]);
        let phi = p[1].atan2(p[0]);
        match self.pole {
            Pole::North => SphericalPoint::new(rho, phi),
            Pole::South => SphericalPoint::new(PI - rho, phi),
        }
    }

    fn value_at(&self, p: [f64; 2]) -> f64 {
        eval_spectrum(self.table, self.spec, p[0].hypot(p[1]), p[1].atan2(p[0]))
    }

    /// Marches the grid of half-width `half` and keeps the part of the nodal
    /// set within chart radius `clip`.
    fn march(&self, n: usize, half: f64, clip: f64, collect: bool) -> MarchOutput {
        let grid = ChartGrid::new(n, half);
        let h = grid.h;
        let mut vals = grid.evaluate(self.table, self.spec, clip + 1.5 * h);
        for v in vals.iter_mut() {
            if *v == 0.0 {
                *v = ZERO_VERTEX;
            }
        }
        let mut length = 0.0;
        let mut pieces: Vec<(End, End)> = Vec::new();
        let clip2 = clip * clip;
        let w = n + 1;
        for j in 0..n {
            let (y0, y1) = (grid.coord(j), grid.coord(j + 1));
            let ny = nearest(y0, y1);
            for i in 0..n {
                let (x0, x1) = (grid.coord(i), grid.coord(i + 1));
                let nx = nearest(x0, x1);
                if nx * nx + ny * ny > clip2 {
                    continue;
                }
                let v = [
                    vals[grid.index(i, j)],
                    vals[grid.index(i + 1, j)],
                    vals[grid.index(i + 1, j + 1)],
                    vals[grid.index(i, j + 1)],
                ];
                let pos = [v[0] > 0.0, v[1] > 0.0, v[2] > 0.0, v[3] > 0.0];
                if pos.iter().all(|&b| b == pos[0]) {
                    continue;
                }
                let corner = [[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
                // edges: bottom, right, top, left as (corner a, corner b, edge key)
                let hkey = |ii: usize, jj: usize| 2 * (jj * w + ii);
                let vkey = |ii: usize, jj: usize| 2 * (jj * w + ii) + 1;
                let edges = [(0, 1, hkey(i, j)), (1, 2, vkey(i + 1, j)), (3, 2, hkey(i, j + 1)), (0, 3, vkey(i, j))];
                let cross = |e: usize| -> End {
                    let (a, b, key) = edges[e];
                    let t = v[a] / (v[a] - v[b]);
                    let p = [
                        corner[a][0] + t * (corner[b][0] - corner[a][0]),
                        corner[a][1] + t * (corner[b][1] - corner[a][1]),
                    ];
                    End { key: Some(key), p }
                };
                let crossing: Vec<usize> = (0..4).filter(|&e| pos[edges[e].0] != pos[edges[e].1]).collect();
                let mut emit = |a: End, b: End| {
                    if let Some((a, b)) = clip_segment(a, b, clip) {
                        length += unit_distance(self.unit(a.p), self.unit(b.p));
                        if collect {
                            pieces.push((a, b));
                        }
                    }
                };
                if crossing.len() == 2 {
                    emit(cross(crossing[0]), cross(crossing[1]));
                } else {
                    let centre = self.value_at([0.5 * (x0 + x1), 0.5 * (y0 + y1)]);
                    if (centre > 0.0) != pos[0] {
                        emit(cross(0), cross(3));
                        emit(cross(1), cross(2));
                    } else {
                        emit(cross(0), cross(1));
                        emit(cross(2), cross(3));
                    }
                }
            }
        }
        let polylines = if collect {
            stitch(&pieces).into_iter().map(|line| line.into_iter().map(|p| self.sphere_point(p)).collect()).collect()
        } else {
            Vec::new()
        };
        MarchOutput { length, polylines }
    }
}

/// Coordinate in `[a, b]` closest to zero.
#[inline]
fn nearest(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        a
    } else if b < 0.0 {
        b
    } else {
        0.0
    }
}

/// Part of segment `ab` inside the disc of radius `r`, if any.
fn clip_segment(a: End, b: End, r: f64) -> Option<(End, End)> {
    let r2 = r * r;
    let na = a.p[0] * a.p[0] + a.p[1] * a.p[1];
    let nb = b.p[0] * b.p[0] + b.p[1] * b.p[1];
    if na <= r2 && nb <= r2 {
        return Some((a, b));
    }
    let d = [b.p[0] - a.p[0], b.p[1] - a.p[1]];
    let qa = d[0] * d[0] + d[1] * d[1];
    if qa == 0.0 {
        return None;
    }
    let qb = a.p[0] * d[0] + a.p[1] * d[1];
    let qc = na - r2;
    let disc = qb * qb - qa * qc;
    if disc <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = ((-qb - sq) / qa).max(0.0);
    let t1 = ((-qb + sq) / qa).min(1.0);
    if t0 >= t1 {
        return None;
    }
    let at = |t: f64| [a.p[0] + t * d[0], a.p[1] + t * d[1]];
    let a2 = if t0 > 0.0 { End { key: None, p: at(t0) } } else { a };
    let b2 = if t1 < 1.0 { End { key: None, p: at(t1) } } else { b };
    Some((a2, b2))
}

/// Joins cell segments that share edge crossings into polylines.
fn stitch(pieces: &[(End, End)]) -> Vec<Vec<[f64; 2]>> {
    let mut by_key: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in pieces.iter().enumerate() {
        for e in [a, b] {
            if let Some(key) = e.key {
                by_key.entry(key).or_default().push(k);
            }
        }
    }
    let mut used = vec![false; pieces.len()];
    let mut lines = Vec::new();
    let next = |used: &[bool], key: Option<usize>| -> Option<usize> {
        key.and_then(|k| by_key.get(&k)).and_then(|v| v.iter().copied().find(|&s| !used[s]))
    };
    for start in 0..pieces.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = pieces[start];
        let mut fwd = vec![a.p, b.p];
        let mut tail = b;
        while let Some(s) = next(&used, tail.key) {
            used[s] = true;
            let (c, d) = pieces[s];
            tail = if c.key == tail.key { d } else { c };
            fwd.push(tail.p);
        }
        let mut head = a;
        let mut back = Vec::new();
        while let Some(s) = next(&used, head.key) {
            used[s] = true;
            let (c, d) = pieces[s];
            head = if c.key == head.key { d } else { c };
            back.push(head.p);
        }
        back.reverse();
        back.extend(fwd);
        lines.push(back);
    }
    lines
}

/// Field value and gradient at one node of the cap boundary.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TraceNode {
    pub point: SphericalPoint,
    pub value: f64,
    /// Gradient in the `(e_theta, e_phi)` frame.
    pub gradient: [f64; 2],
}

/// `n_nodes` equispaced samples of `f` and its gradient on the boundary circle of `cap`.
pub fn boundary_trace(f: &HarmonicField, cap: &CapDomain, n_nodes: usize) -> Result<Vec<TraceNode>> {
    check_radius(cap.radius)?;
    if n_nodes < 3 {
        return Err(Error::Range(format!("n_nodes = {n_nodes} is below 3")));
    }
    let theta = match cap.pole {
        Pole::North => cap.radius,
        Pole::South => PI - cap.radius,
    };
    let ell = f.ell() as usize;
    let (mut q, mut dq) = (vec![0.0; ell + 1], vec![0.0; ell + 1]);
    f.table().row_with_derivative(theta, &mut q, &mut dq);
    let ring = RingSynth::new(n_nodes);
    let (vals, dphi) = ring.synth(f.spectrum(), &q, true);
    let (dtheta, _) = ring.synth(f.spectrum(), &dq, false);
    let dphi = dphi.expect("requested");
    let s = theta.sin();
    Ok((0..n_nodes)
        .map(|j| TraceNode {
            point: SphericalPoint::new(theta, 2.0 * PI * j as f64 / n_nodes as f64),
            value: vals[j],
            gradient: [dtheta[j], dphi[j] / s],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{sample_field, sample_field_stream};

    fn dipole(coeffs: [f64; 3]) -> HarmonicField {
        HarmonicField::from_coefficients(1, coeffs.to_vec()).unwrap()
    }

    #[test]
    fn meridian_through_the_pole() {
        // T ∝ sin(theta) cos(phi): nodal set is the great circle phi = ±pi/2
        let f = dipole([0.0, 0.0, 1.0]);
        for r in [0.5, 1.0, 2.0] {
            let cap = CapDomain::new(r).unwrap();
            let res = nodal_length_cap(&f, &cap, Some(64)).unwrap();
            assert!((res.total_length - 2.0 * r).abs() < 1e-9, "r={r}: {}", res.total_length);
            assert_eq!(res.segments.len(), 1);
        }
    }

    #[test]
    fn tilted_great_circles_have_length_two_pi() {
        for seed in 0..6 {
            let f = sample_field(1, seed).unwrap();
            let res = nodal_length_global(&f, Some(96)).unwrap();
            assert!((res.total_length - 2.0 * PI).abs() < 1e-2, "seed {seed}: {}", res.total_length);
        }
        // the equator, which is not on the seam
        let f = dipole([0.0, 1.0, 0.0]);
        let res = nodal_length_global(&f, Some(96)).unwrap();
        assert!((res.total_length - 2.0 * PI).abs() < 1e-2, "{}", res.total_length);
    }

    #[test]
    fn zonal_circles() {
        // zeros of P_3 at cos(theta) in {0, ±sqrt(3/5)}
        let mut c = vec![0.0; 7];
        c[3] = 1.0;
        let f = HarmonicField::from_coefficients(3, c).unwrap();
        let t0 = (0.6f64).sqrt().acos();
        let want = 2.0 * PI * (2.0 * t0.sin() + 1.0);
        let got = nodal_length_global(&f, Some(200)).unwrap().total_length;
        assert!((got - want).abs() < 1e-3 * want, "{got} vs {want}");
        // cap containing only the first circle
        let cap = CapDomain::new(1.0).unwrap();
        let got = nodal_length_cap_value(&f, &cap, Some(200)).unwrap();
        assert!((got - 2.0 * PI * t0.sin()).abs() < 1e-3, "{got}");
    }

    #[test]
    fn north_and_south_caps_partition_the_sphere() {
        let f = sample_field(12, 3).unwrap();
        let north = nodal_length_cap_value(&f, &CapDomain::at(Pole::North, 1.3).unwrap(), Some(400)).unwrap();
        let south = nodal_length_cap_value(&f, &CapDomain::at(Pole::South, PI - 1.3).unwrap(), Some(400)).unwrap();
        let global = nodal_length_global_value(&f, Some(600)).unwrap();
        assert!((north + south - global).abs() < 2e-3 * global, "{north} + {south} vs {global}");
    }

    #[test]
    fn polylines_reproduce_the_length() {
        let f = sample_field(15, 8).unwrap();
        let cap = CapDomain::new(0.8).unwrap();
        let res = nodal_length_cap(&f, &cap, Some(128)).unwrap();
        let sum: f64 = res
            .segments
            .iter()
            .map(|l| l.windows(2).map(|w| crate::field::geodesic_distance(w[0], w[1])).sum::<f64>())
            .sum();
        assert!((sum - res.total_length).abs() < 1e-9 * res.total_length);
        assert!(res.segments.iter().flatten().all(|p| p.theta <= 0.8 + 1e-12));
        // fewer polylines than segments
        let nseg: usize = res.segments.iter().map(|l| l.len() - 1).sum();
        assert!(res.segments.len() * 4 < nseg);
    }

    #[test]
    fn mean_length_matches_kac_rice() {
        let (ell, r) = (50u32, 0.4);
        let cap = CapDomain::new(r).unwrap();
        let n = 400;
        let xs: Vec<f64> = (0..n)
            .map(|i| nodal_length_cap_extrapolated(&sample_field_stream(ell, 2024, i).unwrap(), &cap, 96).unwrap())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        let want = (ell as f64 * (ell as f64 + 1.0) / 2.0).sqrt() * PI * (1.0 - r.cos());
        assert!((mean - want).abs() < 3.0 * sd / (n as f64).sqrt(), "{mean} vs {want} (sd {sd})");
    }

    #[test]
    fn refinement_converges() {
        let f = sample_field(30, 5).unwrap();
        let cap = CapDomain::new(0.6).unwrap();
        let l = |n| nodal_length_cap_value(&f, &cap, Some(n)).unwrap();
        let (a, b, c) = (l(64), l(128), l(256));
        assert!((c - b).abs() < 0.5 * (b - a).abs());
        let (val, est) = nodal_length_cap_checked(&f, &cap, Some(256)).unwrap();
        assert_eq!(val, c);
        assert!(est < 0.01);
    }

    #[test]
    fn bad_inputs() {
        let f = sample_field(5, 1).unwrap();
        assert!(CapDomain::new(0.0).is_err());
        assert!(CapDomain::new(4.0).is_err());
        let cap = CapDomain::new(0.5).unwrap();
        assert!(nodal_length_cap(&f, &cap, Some(8)).is_err());
        assert!(boundary_trace(&f, &cap, 2).is_err());
    }

    #[test]
    fn boundary_trace_matches_pointwise() {
        let f = sample_field(10, 2).unwrap();
        let cap = CapDomain::new(0.5).unwrap();
        let tr = boundary_trace(&f, &cap, 128).unwrap();
        for node in tr.iter().step_by(13) {
            assert!((node.value - f.eval(node.point).unwrap()).abs() < 1e-12);
            let g = f.gradient(node.point).unwrap();
            assert!((node.gradient[0] - g[0]).abs() < 1e-11 && (node.gradient[1] - g[1]).abs() < 1e-11);
        }
        // trapezoid integral of T along the trace is exact once n exceeds ell
        let integral = |n| {
            let t = boundary_trace(&f, &cap, n).unwrap();
            t.iter().map(|x| x.value).sum::<f64>() * 2.0 * PI / n as f64
        };
        assert!((integral(128) - integral(256)).abs() < 1e-8);
    }

    #[test]
    fn clipping_geometry() {
        let e = |x: f64, y: f64| End { key: None, p: [x, y] };
        let (a, b) = clip_segment(e(-2.0, 0.0), e(2.0, 0.0), 1.0).unwrap();
        assert!((a.p[0] + 1.0).abs() < 1e-15 && (b.p[0] - 1.0).abs() < 1e-15);
        assert!(clip_segment(e(-2.0, 1.5), e(2.0, 1.5), 1.0).is_none());
        let (a, b) = clip_segment(e(0.0, 0.0), e(0.5, 0.0), 1.0).unwrap();
        assert_eq!((a.p, b.p), ([0.0, 0.0], [0.5, 0.0]));
    }

    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn sign_flip_invariance(seed in 0u64..10_000, r in 0.1f64..1.5) {
            let f = sample_field(20, seed).unwrap();
            let neg = HarmonicField::from_coefficients(20, f.coefficients().iter().map(|c| -c).collect()).unwrap();
            let cap = CapDomain::new(r).unwrap();
            let a = nodal_length_cap_value(&f, &cap, Some(96)).unwrap();
            let b = nodal_length_cap_value(&neg, &cap, Some(96)).unwrap();
            // only saddle resolution can differ
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0) + 0.01 * a);
        }

        #[test]
        fn monotone_in_radius(seed in 0u64..10_000, r1 in 0.1f64..1.0, dr in 0.0f64..0.5) {
            let f = sample_field(20, seed).unwrap();
            let small = nodal_length_cap_value(&f, &CapDomain::new(r1).unwrap(), Some(128)).unwrap();
            let large_cap = CapDomain::new(r1 + dr).unwrap();
            // same cell size so the nodal approximations coincide inside the small cap
            let n = even((128.0 * (r1 + dr) / r1).round() as usize);
            let large = nodal_length_cap_value(&f, &large_cap, Some(n)).unwrap();
            prop_assert!(large >= small * (1.0 - 1e-2) - 1e-9);
        }
    }
}
