//! Goodness-of-fit statistics used by the audits and tests.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::distcore::RandomStream;
use crate::error::{Error, Result};

/// Asymptotic Kolmogorov critical constant `c(α) = sqrt(−ln(α/2)/2)`.
pub fn ks_constant(level: f64) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub critical: f64,
}

impl KsOutcome {
    pub fn accepts(&self) -> bool {
        self.statistic <= self.critical
    }
}

/// One-sample KS statistic `sup |F_n − F|` against a continuous cdf.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64, level: f64) -> Result<KsOutcome> {
    if samples.is_empty() {
        return Err(Error::param("KS test needs samples"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(KsOutcome {
        statistic: d,
        critical: ks_constant(level) / n.sqrt(),
    })
}

/// Two-sample KS statistic `sup |F_n − G_m|`.
pub fn ks_two_sample(a: &[f64], b: &[f64], level: f64) -> Result<KsOutcome> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::param("KS test needs samples on both sides"));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(KsOutcome {
        statistic: d,
        critical: ks_constant(level) * ((n + m) / (n * m)).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson χ² of observed bin counts against bin probabilities.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> Result<ChiSquareOutcome> {
    if observed.len() != probs.len() || observed.len() < 2 {
        return Err(Error::param("χ² needs matching bins, at least two"));
    }
    let total: u64 = observed.iter().sum();
    let psum: f64 = probs.iter().sum();
    let mut stat = 0.0;
    for (&o, &p) in observed.iter().zip(probs) {
        let e = total as f64 * p / psum;
        if e <= 0.0 {
            return Err(Error::param("χ² bin with zero expected count"));
        }
        stat += (o as f64 - e).powi(2) / e;
    }
    let dof = observed.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Internal(e.to_string()))?;
    Ok(ChiSquareOutcome {
        statistic: stat,
        dof,
        p_value: dist.sf(stat),
    })
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Energy statistic `2E|X−Y| − E|X−X'| − E|Y−Y'|` from a precomputed
/// pooled distance matrix and a labelling (first `n` in `idx` are X).
fn energy_from(dist: &[f64], total: usize, idx: &[usize], n: usize) -> f64 {
    let m = total - n;
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate().skip(a + 1) {
            let d = dist[i * total + j];
            match (a < n, b < n) {
                (true, true) => xx += d,
                (false, false) => yy += d,
                _ => xy += d,
            }
        }
    }
    2.0 * xy / (n * m) as f64 - 2.0 * xx / (n * n) as f64 - 2.0 * yy / (m * m) as f64
}

/// Energy distance between two point clouds of dimension `dim` (flat storage).
pub fn energy_distance(x: &[f64], y: &[f64], dim: usize) -> Result<f64> {
    let (pooled, n, total) = pool(x, y, dim)?;
    let dist = distance_matrix(&pooled, dim, total);
    let idx: Vec<usize> = (0..total).collect();
    Ok(energy_from(&dist, total, &idx, n))
}

fn pool(x: &[f64], y: &[f64], dim: usize) -> Result<(Vec<f64>, usize, usize)> {
    if dim == 0 || !x.len().is_multiple_of(dim) || !y.len().is_multiple_of(dim) || x.is_empty() || y.is_empty() {
        return Err(Error::param("energy distance needs nonempty clouds of matching dimension"));
    }
    let mut pooled = x.to_vec();
    pooled.extend_from_slice(y);
    Ok((pooled, x.len() / dim, (x.len() + y.len()) / dim))
}

fn distance_matrix(pooled: &[f64], dim: usize, total: usize) -> Vec<f64> {
    let mut dist = vec![0.0; total * total];
    for i in 0..total {
        for j in (i + 1)..total {
            let d = euclid(&pooled[i * dim..(i + 1) * dim], &pooled[j * dim..(j + 1) * dim]);
            dist[i * total + j] = d;
            dist[j * total + i] = d;
        }
    }
    dist
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

/// Permutation test of equal laws based on the energy distance.
pub fn energy_test(
    x: &[f64],
    y: &[f64],
    dim: usize,
    permutations: usize,
    rng: &mut RandomStream,
) -> Result<PermutationOutcome> {
    let (pooled, n, total) = pool(x, y, dim)?;
    let dist = distance_matrix(&pooled, dim, total);
    let mut idx: Vec<usize> = (0..total).collect();
    let observed = energy_from(&dist, total, &idx, n);
    let mut exceed = 0usize;
    for _ in 0..permutations {
        for i in (1..total).rev() {
            let j = (rng.uniform() * (i + 1) as f64) as usize;
            idx.swap(i, j.min(i));
        }
        if energy_from(&dist, total, &idx, n) >= observed {
            exceed += 1;
        }
    }
    Ok(PermutationOutcome {
        statistic: observed,
        p_value: (exceed + 1) as f64 / (permutations + 1) as f64,
    })
}

/// Unbiased sample covariance of points of dimension `dim` (flat storage),
/// row-major `dim × dim`.
pub fn sample_covariance(points: &[f64], dim: usize) -> Result<Vec<f64>> {
    if dim == 0 || !points.len().is_multiple_of(dim) || points.len() < 2 * dim {
        return Err(Error::param("covariance needs at least two points"));
    }
    let n = points.len() / dim;
    let mut mean = vec![0.0; dim];
    for row in points.chunks_exact(dim) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![0.0; dim * dim];
    for row in points.chunks_exact(dim) {
        for i in 0..dim {
            let di = row[i] - mean[i];
            for j in 0..dim {
                cov[i * dim + j] += di * (row[j] - mean[j]);
            }
        }
    }
    cov.iter_mut().for_each(|c| *c /= (n - 1) as f64);
    Ok(cov)
}
