//! Sample estimators with delete-1 jackknife standard errors.
//!
//! Every statistic here is a smooth function of a few power sums, so the
//! leave-one-out replicates are formed by subtracting one observation from
//! the full sums instead of recomputing from scratch. Data are centred on
//! the full-sample mean first to keep the sums well conditioned.

use serde::{Deserialize, Serialize};

use super::RealizationRecord;

/// A record column that estimators can be computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    ZLocal,
    MLocal,
    ZGlobal,
    Proj2,
}

impl Column {
    pub const ALL: [Column; 4] = [Column::ZLocal, Column::MLocal, Column::ZGlobal, Column::Proj2];

    pub fn name(self) -> &'static str {
        match self {
            Column::ZLocal => "z_local",
            Column::MLocal => "m_local",
            Column::ZGlobal => "z_global",
            Column::Proj2 => "proj2",
        }
    }

    pub fn get(self, rec: &RealizationRecord) -> Option<f64> {
        match self {
            Column::ZLocal => Some(rec.z_local),
            Column::MLocal => Some(rec.m_local),
            Column::ZGlobal => rec.z_global,
            Column::Proj2 => Some(rec.proj2),
        }
    }
}

/// A point estimate with its jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub column: Column,
    pub mean: Estimate,
    /// Unbiased sample variance.
    pub variance: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub x: Column,
    pub y: Column,
    pub covariance: Estimate,
    pub correlation: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSet {
    pub n: usize,
    pub columns: Vec<ColumnSummary>,
    pub pairs: Vec<PairSummary>,
    /// Standardized fourth k-statistic `k4 / k2^2` of `z_local`.
    pub k4_z_local: Estimate,
    /// Same for `m_local`.
    pub k4_m_local: Estimate,
}

impl EstimateSet {
    /// Estimates over all columns present in every record.
    pub fn from_records(records: &[RealizationRecord]) -> Self {
        let present: Vec<Column> = Column::ALL
            .into_iter()
            .filter(|c| !records.is_empty() && records.iter().all(|r| c.get(r).is_some()))
            .collect();
        let data: Vec<(Column, Vec<f64>)> = present
            .iter()
            .map(|&c| (c, records.iter().map(|r| c.get(r).unwrap()).collect()))
            .collect();
        let columns = data
            .iter()
            .map(|(c, xs)| ColumnSummary { column: *c, mean: mean(xs), variance: variance(xs) })
            .collect();
        let mut pairs = Vec::new();
        for i in 0..data.len() {
            for j in i + 1..data.len() {
                let (x, y) = (&data[i].1, &data[j].1);
                pairs.push(PairSummary {
                    x: data[i].0,
                    y: data[j].0,
                    covariance: covariance(x, y),
                    correlation: correlation(x, y),
                });
            }
        }
        let col = |c: Column| records.iter().filter_map(|r| c.get(r)).collect::<Vec<_>>();
        Self {
            n: records.len(),
            columns,
            pairs,
            k4_z_local: standardized_k4(&col(Column::ZLocal)),
            k4_m_local: standardized_k4(&col(Column::MLocal)),
        }
    }

    pub fn column(&self, c: Column) -> Option<&ColumnSummary> {
        self.columns.iter().find(|s| s.column == c)
    }

    /// Summary of the pair `(x, y)` in either order.
    pub fn pair(&self, x: Column, y: Column) -> Option<&PairSummary> {
        self.pairs.iter().find(|p| (p.x == x && p.y == y) || (p.x == y && p.y == x))
    }

    pub fn correlation(&self, x: Column, y: Column) -> Option<Estimate> {
        self.pair(x, y).map(|p| p.correlation)
    }
}

/// Power sums of centred data up to order four.
#[derive(Debug, Clone, Copy)]
struct Sums {
    n: f64,
    s: [f64; 5],
}

impl Sums {
    fn new(xs: &[f64], shift: f64) -> Self {
        let mut s = [0.0; 5];
        for &x in xs {
            let d = x - shift;
            let mut p = 1.0;
            for v in s.iter_mut() {
                *v += p;
                p *= d;
            }
        }
        Self { n: xs.len() as f64, s }
    }

    fn without(&self, d: f64) -> Self {
        let mut s = self.s;
        let mut p = 1.0;
        for v in s.iter_mut() {
            *v -= p;
            p *= d;
        }
        Self { n: self.n - 1.0, s }
    }

    fn mean(&self) -> f64 {
        self.s[1] / self.n
    }

    fn k2(&self) -> f64 {
        (self.s[2] - self.s[1] * self.s[1] / self.n) / (self.n - 1.0)
    }

    /// Fourth k-statistic from power sums.
    fn k4(&self) -> f64 {
        let n = self.n;
        let [_, s1, s2, s3, s4] = self.s;
        let num = -6.0 * s1.powi(4) + 12.0 * n * s1 * s1 * s2 - 3.0 * n * (n - 1.0) * s2 * s2
            - 4.0 * n * (n + 1.0) * s1 * s3
            + n * n * (n + 1.0) * s4;
        num / (n * (n - 1.0) * (n - 2.0) * (n - 3.0))
    }
}

/// Delete-1 jackknife: `full` statistic plus SE from the leave-one-out values.
pub fn jackknife(full: f64, loo: impl ExactSizeIterator<Item = f64>) -> Estimate {
    let n = loo.len();
    if n < 2 {
        return Estimate { value: full, se: f64::NAN };
    }
    let vals: Vec<f64> = loo.collect();
    let m = vals.iter().sum::<f64>() / n as f64;
    let ss: f64 = vals.iter().map(|v| (v - m) * (v - m)).sum();
    Estimate { value: full, se: ((n as f64 - 1.0) / n as f64 * ss).sqrt() }
}

fn shift(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

pub fn mean(xs: &[f64]) -> Estimate {
    let c = shift(xs);
    let s = Sums::new(xs, c);
    jackknife(c + s.mean(), xs.iter().map(|&x| c + s.without(x - c).mean()))
}

pub fn variance(xs: &[f64]) -> Estimate {
    let c = shift(xs);
    let s = Sums::new(xs, c);
    jackknife(s.k2(), xs.iter().map(|&x| s.without(x - c).k2()))
}

/// Standardized fourth cumulant `k4 / k2^2`; zero excess kurtosis for Gaussian data.
pub fn standardized_k4(xs: &[f64]) -> Estimate {
    if xs.len() < 5 {
        return Estimate { value: f64::NAN, se: f64::NAN };
    }
    let c = shift(xs);
    let s = Sums::new(xs, c);
    let stat = |s: &Sums| s.k4() / (s.k2() * s.k2());
    jackknife(stat(&s), xs.iter().map(|&x| stat(&s.without(x - c))))
}

#[derive(Debug, Clone, Copy)]
struct Cross {
    x: Sums,
    y: Sums,
    sxy: f64,
}

impl Cross {
    fn new(xs: &[f64], ys: &[f64], cx: f64, cy: f64) -> Self {
        let sxy = xs.iter().zip(ys).map(|(x, y)| (x - cx) * (y - cy)).sum();
        Self { x: Sums::new(xs, cx), y: Sums::new(ys, cy), sxy }
    }

    fn without(&self, dx: f64, dy: f64) -> Self {
        Self { x: self.x.without(dx), y: self.y.without(dy), sxy: self.sxy - dx * dy }
    }

    fn cov(&self) -> f64 {
        let n = self.x.n;
        (self.sxy - self.x.s[1] * self.y.s[1] / n) / (n - 1.0)
    }

    fn corr(&self) -> f64 {
        let d = (self.x.k2() * self.y.k2()).sqrt();
        if d > 0.0 {
            (self.cov() / d).clamp(-1.0, 1.0)
        } else {
            f64::NAN
        }
    }
}

fn cross_stat(xs: &[f64], ys: &[f64], stat: impl Fn(&Cross) -> f64) -> Estimate {
    assert_eq!(xs.len(), ys.len(), "paired samples must have equal length");
    let (cx, cy) = (shift(xs), shift(ys));
    let c = Cross::new(xs, ys, cx, cy);
    jackknife(stat(&c), xs.iter().zip(ys).map(|(&x, &y)| stat(&c.without(x - cx, y - cy))))
}

pub fn covariance(xs: &[f64], ys: &[f64]) -> Estimate {
    cross_stat(xs, ys, Cross::cov)
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> Estimate {
    cross_stat(xs, ys, Cross::corr)
}

/// `Cov(x, y) - k Var(y)` with its jackknife SE.
pub fn covariance_minus_scaled_variance(xs: &[f64], ys: &[f64], k: f64) -> Estimate {
    cross_stat(xs, ys, |c| c.cov() - k * c.y.k2())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_jackknife(xs: &[f64], stat: impl Fn(&[f64]) -> f64) -> Estimate {
        let n = xs.len();
        let loo: Vec<f64> = (0..n)
            .map(|i| {
                let rest: Vec<f64> = xs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &x)| x).collect();
                stat(&rest)
            })
            .collect();
        let m = loo.iter().sum::<f64>() / n as f64;
        let se = ((n as f64 - 1.0) / n as f64 * loo.iter().map(|v| (v - m).powi(2)).sum::<f64>()).sqrt();
        Estimate { value: stat(xs), se }
    }

    fn naive_var(xs: &[f64]) -> f64 {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
    }

    fn data(n: usize, off: f64) -> Vec<f64> {
        (0..n).map(|i| off + ((i * 7919) % 101) as f64 / 17.0 + (i as f64 * 0.37).sin()).collect()
    }

    #[test]
    fn leave_one_out_sums_match_recomputation() {
        let xs = data(40, 1e4);
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| 0.3 * x + (i as f64).cos()).collect();
        let close = |a: Estimate, b: Estimate| {
            assert!((a.value - b.value).abs() <= 1e-9 * b.value.abs().max(1.0), "{a:?} {b:?}");
            assert!((a.se - b.se).abs() <= 1e-6 * b.se.abs().max(1e-12), "{a:?} {b:?}");
        };
        close(variance(&xs), brute_jackknife(&xs, naive_var));
        close(mean(&xs), brute_jackknife(&xs, |v| v.iter().sum::<f64>() / v.len() as f64));
        let k4 = |v: &[f64]| crate::chaos::standardized_cumulant4(v).unwrap();
        close(standardized_k4(&xs), brute_jackknife(&xs, k4));

        let idx: Vec<f64> = (0..xs.len()).map(|i| i as f64).collect();
        let pair_cov = |ii: &[f64]| {
            let a: Vec<f64> = ii.iter().map(|&i| xs[i as usize]).collect();
            let b: Vec<f64> = ii.iter().map(|&i| ys[i as usize]).collect();
            let (ma, mb) = (a.iter().sum::<f64>() / a.len() as f64, b.iter().sum::<f64>() / b.len() as f64);
            let c = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() as f64 - 1.0);
            (c, naive_var(&a), naive_var(&b))
        };
        close(covariance(&xs, &ys), brute_jackknife(&idx, |ii| pair_cov(ii).0));
        close(correlation(&xs, &ys), brute_jackknife(&idx, |ii| {
            let (c, va, vb) = pair_cov(ii);
            c / (va * vb).sqrt()
        }));
        close(covariance_minus_scaled_variance(&xs, &ys, 0.2), brute_jackknife(&idx, |ii| {
            let (c, _, vb) = pair_cov(ii);
            c - 0.2 * vb
        }));
    }

    #[test]
    fn jackknife_se_of_mean_is_standard_error() {
        let xs = data(50, 0.0);
        let se = (naive_var(&xs) / 50.0).sqrt();
        assert!((mean(&xs).se - se).abs() < 1e-12);
    }

    #[test]
    fn correlation_of_affine_copy_is_one() {
        let xs = data(30, 2.0);
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        assert!((correlation(&xs, &ys).value + 1.0).abs() < 1e-12);
    }
}
