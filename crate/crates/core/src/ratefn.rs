//! Rate function of the projected-measure large deviations, the limit-measure
//! sampler, and the negative-moment bounds for gamma mixing laws.
//!
//! A limit measure is parametrized by a `k × J` matrix `A` with
//! `‖AAᵀ‖_op < 1` and is the law of
//!
//! ```text
//! c · Σ_j A_{•,j} Z_j + σ (I_k − AAᵀ)^{1/2} N_k
//! ```
//!
//! with `Z_j ~ N_p` i.i.d., `N_k` standard Gaussian, `c = (1+α)^{-1/p}` or
//! `β^{-1/p}`, and `σ² = c² E[Z²]`. Its rate is `−½ log det(I_k − AAᵀ)`.
//! Measures without such a representation have infinite rate; they are not
//! representable here at all.

use serde::{Deserialize, Serialize};

use crate::distcore::{ln_gamma, moment_pgauss, MeanAcc, PGauss, PParam, RandomStream};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymEigen};
use crate::pball::{Scaling, ShapeRule, WSpec};

/// `‖AAᵀ‖_op` must not exceed `1 − OP_NORM_MARGIN`.
pub const OP_NORM_MARGIN: f64 = 1e-9;

/// Scaling regime of the projected vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Regime {
    /// `W_n / n → α`, vectors scaled by `n^{1/p}`.
    Alpha { alpha: f64 },
    /// `W_n / n^κ → β`, vectors scaled by `n^{κ/p}`.
    Beta { beta: f64, kappa: f64 },
}

impl Regime {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Regime::Alpha { alpha } if alpha.is_finite() && alpha >= 0.0 => Ok(()),
            Regime::Alpha { alpha } => Err(Error::param(format!("alpha must be >= 0, got {alpha}"))),
            Regime::Beta { beta, kappa } => {
                if !(beta.is_finite() && beta > 0.0) {
                    return Err(Error::param(format!("beta must be > 0, got {beta}")));
                }
                if !(kappa.is_finite() && kappa > 0.0) {
                    return Err(Error::param(format!("kappa must be > 0, got {kappa}")));
                }
                Ok(())
            }
        }
    }

    /// `(1+α)^{-1/p}` or `β^{-1/p}`.
    pub fn scalar(&self, p: PParam) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            Regime::Alpha { alpha } => (1.0 + alpha).powf(-p.inv()),
            Regime::Beta { beta, .. } => beta.powf(-p.inv()),
        })
    }

    pub fn scaling(&self) -> Scaling {
        match *self {
            Regime::Alpha { .. } => Scaling::Alpha,
            Regime::Beta { kappa, .. } => Scaling::Beta { kappa },
        }
    }

    /// Exponent `κ` of the growth `n^κ` (1 in the α regime).
    pub fn kappa(&self) -> f64 {
        match *self {
            Regime::Alpha { .. } => 1.0,
            Regime::Beta { kappa, .. } => kappa,
        }
    }
}

/// `σ²_{p,α} = (p/(1+α))^{2/p} Γ(3/p)/Γ(1/p)`, or the same with `β` in
/// place of `1+α`.
pub fn sigma_sq(p: PParam, regime: Regime) -> Result<f64> {
    regime.validate()?;
    let denom = match regime {
        Regime::Alpha { alpha } => 1.0 + alpha,
        Regime::Beta { beta, .. } => beta,
    };
    let pv = p.get();
    Ok(((2.0 / pv) * (pv / denom).ln() + ln_gamma(3.0 / pv) - ln_gamma(1.0 / pv)).exp())
}

/// Finitely many columns of the `k × ∞` coefficient matrix, with
/// `‖AAᵀ‖_op < 1` enforced.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    a: Matrix,
    eig: SymEigen,
}

impl RateMatrix {
    pub fn new(a: Matrix) -> Result<Self> {
        if a.rows() < 1 || a.cols() < 1 {
            return Err(Error::param("rate matrix needs k >= 1 rows and J >= 1 columns"));
        }
        if a.data().iter().any(|x| !x.is_finite()) {
            return Err(Error::param("rate matrix entries must be finite"));
        }
        let eig = SymEigen::new(&a.gram())?;
        let op = eig.max();
        if op > 1.0 - OP_NORM_MARGIN {
            return Err(Error::Domain(format!(
                "‖AAᵀ‖_op = {op} is not below 1 (no admissible representation)"
            )));
        }
        Ok(RateMatrix { a, eig })
    }

    pub fn from_rows(k: usize, j: usize, data: Vec<f64>) -> Result<Self> {
        RateMatrix::new(Matrix::from_rows(k, j, data)?)
    }

    /// The `k × 1` zero matrix.
    pub fn zero(k: usize) -> Result<Self> {
        RateMatrix::new(Matrix::zeros(k, 1))
    }

    pub fn k(&self) -> usize {
        self.a.rows()
    }

    pub fn columns(&self) -> usize {
        self.a.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    /// Eigenvalues of `AAᵀ`, ascending.
    pub fn gram_eigenvalues(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn op_norm(&self) -> f64 {
        self.eig.max()
    }

    /// `(I − AAᵀ)^{1/2}`.
    pub fn residual_sqrt(&self) -> Matrix {
        self.eig.apply(|l| (1.0 - l).max(0.0).sqrt())
    }

    /// Parses the text format: first line `k J`, then `k` rows of `J` reals.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut next_usize = |what: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::param(format!("missing {what}")))?
                .parse::<usize>()
                .map_err(|e| Error::param(format!("bad {what}: {e}")))
        };
        let k = next_usize("row count k")?;
        let j = next_usize("column count J")?;
        let first_line_len = text.lines().next().map_or(0, |l| l.split_whitespace().count());
        if first_line_len != 2 {
            return Err(Error::param("first line must be exactly \"k J\""));
        }
        let body: Vec<&str> = text.lines().skip(1).filter(|l| !l.trim().is_empty()).collect();
        if body.len() != k {
            return Err(Error::param(format!("expected {k} matrix rows, found {}", body.len())));
        }
        let mut data = Vec::with_capacity(k * j);
        for (i, line) in body.iter().enumerate() {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::param(format!("row {}: {e}", i + 1)))?;
            if row.len() != j {
                return Err(Error::param(format!("row {} has {} entries, expected {j}", i + 1, row.len())));
            }
            data.extend(row);
        }
        RateMatrix::from_rows(k, j, data)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.k(), self.columns());
        for i in 0..self.k() {
            let row: Vec<String> = self.a.row(i).iter().map(|x| x.to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

/// `−½ log det(I_k − AAᵀ) = −½ Σ log(1 − λ_i)`.
pub fn rate(a: &RateMatrix) -> f64 {
    let s: f64 = a.eig.values.iter().map(|&l| (-l.max(0.0)).ln_1p()).sum();
    -0.5 * s + 0.0
}

/// Parameters of a limit measure.
#[derive(Debug, Clone)]
pub struct LimitSpec {
    p: PParam,
    regime: Regime,
    a: RateMatrix,
    scalar: f64,
    sigma: f64,
    residual_sqrt: Matrix,
}

impl LimitSpec {
    pub fn new(p: PParam, regime: Regime, a: RateMatrix) -> Result<Self> {
        let scalar = regime.scalar(p)?;
        let sigma = sigma_sq(p, regime)?.sqrt();
        if !(scalar.is_finite() && scalar > 0.0) {
            return Err(Error::param(format!("regime scalar {scalar} is not positive and finite")));
        }
        if p.get() == 2.0 {
            log::warn!(
                "p = 2: the Gaussian case lies outside the large deviation theorems; \
                 sampling anyway for contrast"
            );
        }
        let residual_sqrt = a.residual_sqrt();
        Ok(LimitSpec {
            p,
            regime,
            a,
            scalar,
            sigma,
            residual_sqrt,
        })
    }

    pub fn p(&self) -> PParam {
        self.p
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn k(&self) -> usize {
        self.a.k()
    }

    pub fn matrix(&self) -> &RateMatrix {
        &self.a
    }

    pub fn scalar(&self) -> f64 {
        self.scalar
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Whether the spec sits outside the theorems (p = 2).
    pub fn is_gaussian_contrast(&self) -> bool {
        self.p.get() == 2.0
    }

    pub fn rate(&self) -> f64 {
        rate(&self.a)
    }

    /// Covariance predicted from the representation:
    /// `c² E[Z²] AAᵀ + σ² (I − AAᵀ)`.
    pub fn covariance(&self) -> Matrix {
        let ez2 = moment_pgauss(self.p, 2.0).expect("order 2 is valid");
        let aat = self.a.matrix().gram();
        let k = self.k();
        let mut c = Matrix::zeros(k, k);
        let s2 = self.sigma_sq();
        for i in 0..k {
            for j in 0..k {
                let id = if i == j { 1.0 } else { 0.0 };
                c[(i, j)] = self.scalar * self.scalar * ez2 * aat[(i, j)] + s2 * (id - aat[(i, j)]);
            }
        }
        c
    }

    pub fn sampler(&self) -> LimitSampler<'_> {
        LimitSampler {
            spec: self,
            gauss: PGauss::new(self.p),
            z: vec![0.0; self.a.columns()],
            g: vec![0.0; self.k()],
        }
    }
}

pub struct LimitSampler<'a> {
    spec: &'a LimitSpec,
    gauss: PGauss,
    z: Vec<f64>,
    g: Vec<f64>,
}

impl LimitSampler<'_> {
    pub fn sample_into(&mut self, rng: &mut RandomStream, out: &mut [f64]) {
        let spec = self.spec;
        let k = spec.k();
        debug_assert_eq!(out.len(), k);
        self.gauss.fill(rng, &mut self.z);
        for g in self.g.iter_mut() {
            *g = rng.normal();
        }
        let a = spec.a.matrix();
        for (i, o) in out.iter_mut().enumerate() {
            let drift: f64 = a.row(i).iter().zip(&self.z).map(|(x, z)| x * z).sum();
            let noise: f64 = spec.residual_sqrt.row(i).iter().zip(&self.g).map(|(x, g)| x * g).sum();
            *o = spec.scalar * drift + spec.sigma * noise;
        }
        let _ = k;
    }
}

pub fn sample_limit(spec: &LimitSpec, rng: &mut RandomStream) -> Vec<f64> {
    let mut out = vec![0.0; spec.k()];
    spec.sampler().sample_into(rng, &mut out);
    out
}

/// `M_p = [Π_{i=0}^{4} (1 − 4/(p(m+i)))]^{-1}`.
pub fn mp_constant(p: PParam, m: f64) -> Result<f64> {
    let s = 4.0 / p.get();
    if !(m.is_finite() && m > s) {
        return Err(Error::param(format!("need m > 4/p = {s}, got m = {m}")));
    }
    let num: f64 = (0..5).map(|i| m + i as f64).product();
    let den: f64 = (0..5).map(|i| m + i as f64 - s).product();
    Ok(num / den)
}

/// `b^{4/p} M_p (λ m)^{-4/p}`, the stated uniform bound on
/// `E[(n^κ / W_n)^{4/p}]` for `W_n ~ γ(a_n, b)` with `inf a_n = m` and
/// `a_n / n^κ → λ`.
pub fn gamma_neg_moment_bound(p: PParam, kappa: f64, lambda: f64, m: f64, b: f64) -> Result<f64> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::param(format!("kappa must be > 0, got {kappa}")));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::param(format!("lambda must be > 0, got {lambda}")));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::param(format!("rate b must be > 0, got {b}")));
    }
    let s = 4.0 / p.get();
    let mp = mp_constant(p, m)?;
    Ok((s * b.ln() + mp.ln() - s * (lambda * m).ln()).exp())
}

/// Closed form `E[(n^κ / W)^{4/p}] = n^{4κ/p} b^{4/p} Γ(a − 4/p) / Γ(a)` for
/// `W ~ γ(a, b)`; infinite when `a ≤ 4/p`.
pub fn gamma_neg_moment_exact(p: PParam, kappa: f64, n: usize, a: f64, b: f64) -> f64 {
    let s = 4.0 / p.get();
    if a <= s {
        return f64::INFINITY;
    }
    (s * kappa * (n as f64).ln() + s * b.ln() + ln_gamma(a - s) - ln_gamma(a)).exp()
}

/// Hypothesis constants of the negative-moment bound read off a gamma spec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    /// `inf_n a_n`.
    pub m: f64,
    /// `lim a_n / n^κ`.
    pub lambda: f64,
    /// Rate `b`.
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegMomentEstimate {
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
    /// Closed-form value when `W_n` is gamma.
    pub exact: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SuffCondReport {
    pub estimates: Vec<NegMomentEstimate>,
    pub params: Option<BoundParams>,
    /// Analytic bound, when the hypotheses hold.
    pub bound: Option<f64>,
    pub max_estimate: f64,
    /// Every estimate at or below the bound.
    pub passes: bool,
    /// `sup_n E[(n^κ / W_n)^{4/p}] = ∞`: a point mass, a shape at or below
    /// `4/p`, or a shape growing slower than `n^κ`.
    pub diverges: bool,
}

fn bound_params(w: &WSpec, p: PParam, kappa: f64) -> Option<BoundParams> {
    let (shape, b) = match *w {
        WSpec::Exponential => (ShapeRule::Constant { a: 1.0 }, p.inv()),
        WSpec::Gamma { shape, rate } => (shape, rate.value(p)),
        _ => return None,
    };
    if !shape.is_increasing() {
        return None;
    }
    let m = shape.shape(1, p);
    let lambda = match shape {
        ShapeRule::Growing { lambda, kappa: kr, .. } => {
            if (kr - kappa).abs() < 1e-12 {
                lambda / p.get()
            } else if kr < kappa {
                0.0
            } else {
                f64::INFINITY
            }
        }
        _ => 0.0,
    };
    Some(BoundParams { m, lambda, b })
}

/// Monte Carlo estimate of `E[(n^κ / W_n)^{4/p}]` on `n_grid`, compared with
/// the analytic bound when its hypotheses hold.
pub fn check_suff_cond(
    w: &WSpec,
    p: PParam,
    kappa: f64,
    n_grid: &[usize],
    draws: usize,
    rng: &mut RandomStream,
) -> Result<SuffCondReport> {
    w.validate()?;
    if matches!(w.normalized(), WSpec::DiracZero) {
        return Err(Error::Unsupported(
            "W_n has an atom at 0, so negative moments are infinite".into(),
        ));
    }
    if n_grid.is_empty() || draws < 2 {
        return Err(Error::param("need a nonempty grid and at least two draws"));
    }
    let s = 4.0 / p.get();
    let mut estimates = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let sampler = w.sampler(n, p)?;
        let nk = (n as f64).powf(kappa);
        let acc: MeanAcc = (0..draws).map(|_| (nk / sampler.sample(rng)).powf(s)).collect();
        let exact = w
            .gamma_params(n, p)
            .map(|(a, b)| gamma_neg_moment_exact(p, kappa, n, a, b));
        estimates.push(NegMomentEstimate {
            n,
            mean: acc.mean(),
            std_error: acc.std_error(),
            exact,
        });
    }
    let params = bound_params(w, p, kappa);
    let bound = params.and_then(|bp| {
        if bp.lambda > 0.0 && bp.lambda.is_finite() {
            gamma_neg_moment_bound(p, kappa, bp.lambda, bp.m, bp.b).ok()
        } else {
            None
        }
    });
    let max_estimate = estimates.iter().map(|e| e.mean).fold(f64::NEG_INFINITY, f64::max);
    let passes = bound.is_some_and(|b| estimates.iter().all(|e| e.mean <= b));
    let diverges = match params {
        Some(bp) => bp.lambda == 0.0 || estimates.iter().any(|e| e.exact.is_some_and(f64::is_infinite)),
        None => true,
    };
    Ok(SuffCondReport {
        estimates,
        params,
        bound,
        max_estimate,
        passes,
        diverges,
    })
}
