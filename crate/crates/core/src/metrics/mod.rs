//! Distances between finite discrete probability measures on ℝ^k.
//!
//! [`lp_distance`] is the exact Lévy–Prokhorov distance. By Strassen's
//! theorem `ρ_LP(μ, ν) ≤ ε` iff some coupling puts mass at least `1 − ε` on
//! pairs at Euclidean distance `≤ ε`. The maximal such mass `φ(ε)` is a
//! max-flow value and is a right-continuous step function with jumps at the
//! pairwise distances, so
//!
//! ```text
//! ρ_LP = min(1, min_i max(d_i, 1 − φ(d_i)))
//! ```
//!
//! over the sorted distinct distances `d_i`. Since `d_i` increases and
//! `1 − φ(d_i)` decreases, the minimum sits at their crossing and is found by
//! bisection with O(log M) flow solves.

pub mod assignment;
pub mod flow;

use crate::error::{Error, Result};

use self::flow::Bipartite;

/// Weighted atoms in ℝ^dim; weights are positive and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    uniform: bool,
}

const MASS_TOL: f64 = 1e-12;

impl DiscreteMeasure {
    /// `points` is row-major, one atom of length `dim` per row.
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("measure dimension must be >= 1"));
        }
        if weights.is_empty() || points.len() != dim * weights.len() {
            return Err(Error::param(format!(
                "{} coordinates do not form {} atoms of dimension {dim}",
                points.len(),
                weights.len()
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("atom coordinates must be finite"));
        }
        if weights.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return Err(Error::param("atom weights must be positive"));
        }
        let total = neumaier_sum(&weights);
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::param(format!("weights sum to {total}, not 1")));
        }
        let uniform = weights.iter().all(|&w| w == weights[0]);
        Ok(DiscreteMeasure {
            dim,
            points,
            weights,
            uniform,
        })
    }

    /// Empirical measure with weight `1/m` on each of the `m` rows.
    pub fn uniform(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.is_empty() || !points.len().is_multiple_of(dim) {
            return Err(Error::param("points do not form a nonempty list of atoms"));
        }
        let m = points.len() / dim;
        Self::new(dim, points, vec![1.0 / m as f64; m])
    }

    pub fn from_atoms(atoms: &[Vec<f64>], weights: Vec<f64>) -> Result<Self> {
        let dim = atoms.first().map_or(0, Vec::len);
        if atoms.iter().any(|a| a.len() != dim) {
            return Err(Error::param("atoms have inconsistent dimensions"));
        }
        Self::new(dim, atoms.concat(), weights)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn atoms(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }
}

fn neumaier_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn same_dim(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    if mu.dim != nu.dim {
        return Err(Error::param(format!(
            "measures live in different dimensions ({} vs {})",
            mu.dim, nu.dim
        )));
    }
    Ok(())
}

#[inline]
fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Pairwise distances, row-major `|μ| × |ν|`.
fn distance_matrix(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Vec<f64> {
    let mut d = Vec::with_capacity(mu.len() * nu.len());
    for a in mu.atoms() {
        d.extend(nu.atoms().map(|b| euclid(a, b)));
    }
    d
}

struct CloseGraph<'a> {
    mu: &'a DiscreteMeasure,
    nu: &'a DiscreteMeasure,
    dist: Vec<f64>,
}

impl CloseGraph<'_> {
    fn graph(&self, eps: f64) -> Bipartite {
        let nr = self.nu.len();
        let mut offsets = Vec::with_capacity(self.mu.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for row in self.dist.chunks_exact(nr) {
            targets.extend(
                row.iter()
                    .enumerate()
                    .filter(|(_, &d)| d <= eps)
                    .map(|(j, _)| j as u32),
            );
            offsets.push(targets.len());
        }
        Bipartite {
            offsets,
            targets,
            right: nr,
        }
    }

    /// `1 − φ(ε)`: mass that cannot be coupled within distance `ε`.
    fn unmatched(&self, eps: f64) -> f64 {
        let g = self.graph(eps);
        if self.mu.is_uniform() && self.nu.is_uniform() && self.mu.len() == self.nu.len() {
            let m = self.mu.len();
            (m - flow::max_matching(&g)) as f64 / m as f64
        } else {
            let f = flow::max_transport(&g, &self.mu.weights, &self.nu.weights);
            (1.0 - f).max(0.0)
        }
    }
}

const CROSS_TOL: f64 = 1e-12;

/// Exact Lévy–Prokhorov distance under the Euclidean metric.
pub fn lp_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    same_dim(mu, nu)?;
    let dist = distance_matrix(mu, nu);
    // only distances below 1 can improve on the trivial bound ρ ≤ 1
    let mut cand: Vec<f64> = dist.iter().copied().filter(|&d| d < 1.0).collect();
    cand.sort_unstable_by(f64::total_cmp);
    cand.dedup();
    if cand.is_empty() {
        return Ok(1.0);
    }
    let cg = CloseGraph { mu, nu, dist };

    let last = cand.len() - 1;
    let g_last = cg.unmatched(cand[last]);
    if g_last > cand[last] + CROSS_TOL {
        return Ok(g_last.min(1.0));
    }
    // smallest index with g(d_i) <= d_i
    let (mut lo, mut hi) = (0usize, last);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if cg.unmatched(cand[mid]) <= cand[mid] + CROSS_TOL {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let mut best = cand[lo];
    if lo > 0 {
        // on [d_{lo-1}, d_lo) the shortfall exceeds ε, so the candidate is the shortfall
        best = best.min(cg.unmatched(cand[lo - 1]).max(cand[lo - 1]));
    }
    Ok(best.min(1.0))
}

/// Exact W₁ on the line: `∫ |F_μ − F_ν|`.
pub fn w1_1d(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if mu.dim != 1 || nu.dim != 1 {
        return Err(Error::param("w1_1d needs one-dimensional measures"));
    }
    let mut events: Vec<(f64, f64)> = mu
        .points
        .iter()
        .zip(&mu.weights)
        .map(|(&x, &w)| (x, w))
        .chain(nu.points.iter().zip(&nu.weights).map(|(&x, &w)| (x, -w)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cdf_gap = 0.0;
    let mut total = 0.0;
    for pair in events.windows(2) {
        cdf_gap += pair[0].1;
        total += cdf_gap.abs() * (pair[1].0 - pair[0].0);
    }
    Ok(total)
}

/// Exact W₁ between two uniform measures with the same number of atoms, via
/// a min-cost perfect matching under Euclidean cost.
pub fn w1_matching(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    same_dim(mu, nu)?;
    if mu.len() != nu.len() {
        return Err(Error::param(format!(
            "matching W1 needs equal atom counts ({} vs {})",
            mu.len(),
            nu.len()
        )));
    }
    if !(mu.is_uniform() && nu.is_uniform()) {
        return Err(Error::param("matching W1 needs uniform weights"));
    }
    let m = mu.len();
    let cost = distance_matrix(mu, nu);
    let (total, _) = assignment::min_cost_assignment(&cost, m);
    Ok(total / m as f64)
}

/// W₁ by whichever exact route applies.
pub fn w1(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if mu.dim == 1 && nu.dim == 1 {
        w1_1d(mu, nu)
    } else {
        w1_matching(mu, nu)
    }
}

/// `√W₁`, an upper bound on `ρ_LP`: Markov's inequality on an optimal W₁
/// coupling gives `P(d > √W₁) ≤ √W₁`.
pub fn lp_upper_bound(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    Ok(w1(mu, nu)?.sqrt())
}
