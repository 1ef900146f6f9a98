#![allow(dead_code)]

use pradial::distcore::RandomStream;
use pradial::metrics::DiscreteMeasure;

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `∫_0^∞ f` split at `1, 2, 4, …` up to `upper`.
pub fn simpson_half_line(f: &dyn Fn(f64) -> f64, upper: f64, tol: f64) -> f64 {
    let mut total = simpson(f, 0.0, 1.0, tol);
    let mut a = 1.0;
    while a < upper {
        total += simpson(f, a, 2.0 * a, tol);
        a *= 2.0;
    }
    total
}

/// Columns of a flat `dim`-dimensional point cloud.
pub fn column(points: &[f64], dim: usize, i: usize) -> Vec<f64> {
    points.iter().skip(i).step_by(dim).copied().collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `max_A μ(A) − ν(A^ε)` over all subsets of the support of μ, closed
/// neighbourhoods.
pub fn shortfall(mu: &DiscreteMeasure, nu: &DiscreteMeasure, eps: f64) -> f64 {
    let (m, n) = (mu.len(), nu.len());
    let mut worst = 0.0f64;
    for mask in 1u32..(1 << m) {
        let mass_a: f64 = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| mu.weights()[i]).sum();
        let mass_nb: f64 = (0..n)
            .filter(|&j| (0..m).any(|i| mask >> i & 1 == 1 && dist(mu.atom(i), nu.atom(j)) <= eps))
            .map(|j| nu.weights()[j])
            .sum();
        worst = worst.max(mass_a - mass_nb);
    }
    worst
}

/// `inf{ε : shortfall(ε) ≤ ε}` by scanning the intervals between jump points.
pub fn lp_oracle(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let mut t: Vec<f64> = vec![0.0];
    for a in mu.atoms() {
        t.extend(nu.atoms().map(|b| dist(a, b)));
    }
    t.sort_by(f64::total_cmp);
    t.dedup();
    t.push(f64::INFINITY);
    let mut best = 1.0f64;
    for w in t.windows(2) {
        let h = shortfall(mu, nu, w[0]);
        let cand = w[0].max(h);
        if cand < w[1] {
            best = best.min(cand);
        }
    }
    best
}

pub fn random_measure(rng: &mut RandomStream, atoms: usize, dim: usize, spread: f64, uniform: bool) -> DiscreteMeasure {
    let pts: Vec<f64> = (0..atoms * dim).map(|_| spread * rng.uniform()).collect();
    if uniform {
        return DiscreteMeasure::uniform(dim, pts).unwrap();
    }
    let raw: Vec<f64> = (0..atoms).map(|_| 0.05 + rng.uniform()).collect();
    let s: f64 = raw.iter().sum();
    DiscreteMeasure::new(dim, pts, raw.iter().map(|w| w / s).collect()).unwrap()
}

pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out
}
