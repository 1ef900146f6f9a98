//! Cone, uniform and p-radial distributions on the ℓ_p^n-ball.
//!
//! A p-radial law is described by a mixing law `W_n` on `[0, ∞)`. Samples use
//! the representation
//!
//! ```text
//! Y = Z / (‖Z‖_p^p + W)^{1/p},    Z_i ~ N_p i.i.d., W ~ W_n independent
//! ```
//!
//! so that `W = 0` gives the cone measure on the sphere, `W ~ γ(1, 1/p)` the
//! uniform law on the ball, and `W ~ γ(m/p, 1/p)` (resp. `γ(1 + m/p, 1/p)`)
//! the first-`n`-coordinate marginal of the cone (resp. uniform) law in
//! dimension `n + m`.
//!
//! The absolutely continuous part has density `ψ_n(‖x‖_p)` with respect to the
//! uniform probability measure on the ball; see [`radial_density`].

use serde::{Deserialize, Serialize};

use crate::distcore::{ln_gamma, GammaSampler, PGauss, PParam, RandomStream};
use crate::error::{Error, Result};

/// Shape sequence `n ↦ a_n` of a gamma mixing law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum ShapeRule {
    /// `a_n = a`.
    Constant { a: f64 },
    /// `a_n = m / p`: marginal of the cone measure in dimension `n + m`.
    Cone { m: f64 },
    /// `a_n = 1 + m / p`: marginal of the uniform law in dimension `n + m`.
    Uniform { m: f64 },
    /// `a_n = shift + (⌈λ n^κ⌉ + offset) / p`.
    Growing {
        lambda: f64,
        kappa: f64,
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        shift: f64,
    },
}

impl ShapeRule {
    pub fn growing(lambda: f64, kappa: f64) -> Self {
        ShapeRule::Growing {
            lambda,
            kappa,
            offset: 0.0,
            shift: 0.0,
        }
    }

    pub fn shape(&self, n: usize, p: PParam) -> f64 {
        let p = p.get();
        match *self {
            ShapeRule::Constant { a } => a,
            ShapeRule::Cone { m } => m / p,
            ShapeRule::Uniform { m } => 1.0 + m / p,
            ShapeRule::Growing {
                lambda,
                kappa,
                offset,
                shift,
            } => shift + (ceil_power(lambda, n, kappa) + offset) / p,
        }
    }

    /// Whether `a_n` is nondecreasing in `n`.
    pub fn is_increasing(&self) -> bool {
        match *self {
            ShapeRule::Growing { kappa, .. } => kappa >= 0.0,
            _ => true,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ShapeRule::Constant { a } => a.is_finite() && a > 0.0,
            ShapeRule::Cone { m } => m.is_finite() && m > 0.0,
            ShapeRule::Uniform { m } => m.is_finite() && m >= 0.0,
            ShapeRule::Growing {
                lambda,
                kappa,
                offset,
                shift,
            } => {
                lambda.is_finite()
                    && lambda > 0.0
                    && kappa.is_finite()
                    && kappa >= 0.0
                    && offset.is_finite()
                    && offset >= 0.0
                    && shift.is_finite()
                    && shift >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid gamma shape rule {self:?}")))
        }
    }
}

/// `⌈λ n^κ⌉`, with integer powers evaluated exactly.
pub fn ceil_power(lambda: f64, n: usize, kappa: f64) -> f64 {
    let nf = n as f64;
    let pow = if kappa.fract() == 0.0 && kappa.abs() < 64.0 {
        nf.powi(kappa as i32)
    } else {
        nf.powf(kappa)
    };
    let x = lambda * pow;
    // absorb round-off just above an integer
    let r = x.round();
    if (x - r).abs() <= 1e-12 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Rate of a gamma mixing law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rate {
    Fixed(f64),
    Named(NamedRate),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NamedRate {
    #[serde(rename = "1/p")]
    InverseP,
}

impl Rate {
    pub const INVERSE_P: Rate = Rate::Named(NamedRate::InverseP);

    pub fn value(&self, p: PParam) -> f64 {
        match *self {
            Rate::Fixed(b) => b,
            Rate::Named(NamedRate::InverseP) => p.inv(),
        }
    }
}

/// Radial mixing law `W_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WSpec {
    /// `W_n = δ_0`: the cone measure.
    DiracZero,
    /// `W_n = δ_{w0}`; `w0 = 0` is the same as [`WSpec::DiracZero`].
    PointMass { w0: f64 },
    /// Exponential law with mean `p`, i.e. `γ(1, 1/p)`, which turns the
    /// p-radial law into the uniform law on the ball. At `p = 1` this is
    /// `Exp(1)`.
    Exponential,
    /// `γ(a_n, rate)`.
    Gamma { shape: ShapeRule, rate: Rate },
}

impl WSpec {
    pub fn gamma(shape: ShapeRule, rate: Rate) -> Self {
        WSpec::Gamma { shape, rate }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WSpec::DiracZero | WSpec::Exponential => Ok(()),
            WSpec::PointMass { w0 } => {
                if w0.is_finite() && w0 >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::param(format!("point mass must be >= 0, got {w0}")))
                }
            }
            WSpec::Gamma { shape, rate } => {
                shape.validate()?;
                if let Rate::Fixed(b) = rate {
                    if !(b.is_finite() && b > 0.0) {
                        return Err(Error::param(format!("gamma rate must be > 0, got {b}")));
                    }
                }
                Ok(())
            }
        }
    }

    /// Canonical form: `PointMass(0)` becomes `DiracZero`.
    pub fn normalized(self) -> Self {
        match self {
            WSpec::PointMass { w0: 0.0 } => WSpec::DiracZero,
            other => other,
        }
    }

    /// `W_n({0})`.
    pub fn mass_at_zero(&self) -> f64 {
        match self.normalized() {
            WSpec::DiracZero => 1.0,
            _ => 0.0,
        }
    }

    /// Shape and rate when `W_n` is a gamma law (the exponential included).
    pub fn gamma_params(&self, n: usize, p: PParam) -> Option<(f64, f64)> {
        match *self {
            WSpec::Exponential => Some((1.0, p.inv())),
            WSpec::Gamma { shape, rate } => Some((shape.shape(n, p), rate.value(p))),
            _ => None,
        }
    }

    pub fn mean(&self, n: usize, p: PParam) -> f64 {
        match self.normalized() {
            WSpec::DiracZero => 0.0,
            WSpec::PointMass { w0 } => w0,
            other => {
                let (a, b) = other.gamma_params(n, p).expect("gamma family");
                a / b
            }
        }
    }

    pub fn sampler(&self, n: usize, p: PParam) -> Result<WSampler> {
        self.validate()?;
        Ok(match self.normalized() {
            WSpec::DiracZero => WSampler::Constant(0.0),
            WSpec::PointMass { w0 } => WSampler::Constant(w0),
            other => {
                let (a, b) = other.gamma_params(n, p).expect("gamma family");
                WSampler::Gamma(GammaSampler::new(a, b)?)
            }
        })
    }
}

/// Prepared draw of `W_n` at a fixed `n`.
#[derive(Debug, Clone, Copy)]
pub enum WSampler {
    Constant(f64),
    Gamma(GammaSampler),
}

impl WSampler {
    #[inline]
    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        match self {
            WSampler::Constant(w) => *w,
            WSampler::Gamma(g) => g.sample(rng),
        }
    }
}

/// Rescaling applied to an unscaled ball sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scaling {
    /// Multiply by `n^{1/p}`.
    Alpha,
    /// Multiply by `n^{κ/p}`.
    Beta { kappa: f64 },
}

impl Scaling {
    pub fn factor(&self, n: usize, p: PParam) -> f64 {
        let nf = n as f64;
        match *self {
            Scaling::Alpha => nf.powf(p.inv()),
            Scaling::Beta { kappa } => nf.powf(kappa / p.get()),
        }
    }
}

/// A point of ℝ^n drawn from a (possibly rescaled) p-radial law.
#[derive(Debug, Clone, PartialEq)]
pub struct BallVector {
    coords: Vec<f64>,
    p: PParam,
    p_norm: f64,
    scaling: Option<(Scaling, f64)>,
}

impl BallVector {
    pub fn new(coords: Vec<f64>, p: PParam) -> Self {
        let p_norm = p_norm(&coords, p);
        BallVector {
            coords,
            p,
            p_norm,
            scaling: None,
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn p(&self) -> PParam {
        self.p
    }

    pub fn p_norm(&self) -> f64 {
        self.p_norm
    }

    /// Applied scale factor; 1 for an unscaled sample.
    pub fn scale(&self) -> f64 {
        self.scaling.map_or(1.0, |(_, f)| f)
    }

    pub fn scaling(&self) -> Option<Scaling> {
        self.scaling.map(|(s, _)| s)
    }
}

pub fn p_norm(x: &[f64], p: PParam) -> f64 {
    let pv = p.get();
    if pv == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    if pv == 2.0 {
        return x.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * x.iter().map(|v| (v.abs() / m).powf(pv)).sum::<f64>().powf(1.0 / pv)
}

fn check_dim(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::param("dimension n must be >= 1"));
    }
    Ok(())
}

/// Prepared sampler of the p-radial law at fixed `(n, p, W_n)`.
#[derive(Debug, Clone)]
pub struct PRadialSampler {
    n: usize,
    p: PParam,
    gauss: PGauss,
    w: WSampler,
}

/// One draw of the representation: the Gaussian vector and the two radial
/// ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialParts {
    /// `‖Z‖_p^p`.
    pub z_norm_pp: f64,
    /// The draw of `W_n`.
    pub w: f64,
}

impl RadialParts {
    /// `1 / (‖Z‖_p^p + W)^{1/p}`.
    #[inline]
    pub fn factor(&self, p: PParam) -> f64 {
        let t = self.z_norm_pp + self.w;
        if p.get() == 1.0 {
            1.0 / t
        } else {
            t.powf(-p.inv())
        }
    }
}

impl PRadialSampler {
    pub fn new(n: usize, p: PParam, w: &WSpec) -> Result<Self> {
        check_dim(n)?;
        Ok(PRadialSampler {
            n,
            p,
            gauss: PGauss::new(p),
            w: w.sampler(n, p)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> PParam {
        self.p
    }

    /// Refills `z` (length `n`) with `Z` and draws `W`.
    #[inline]
    pub fn sample_parts(&self, rng: &mut RandomStream, z: &mut [f64]) -> RadialParts {
        debug_assert_eq!(z.len(), self.n);
        let z_norm_pp = self.gauss.fill(rng, z);
        let w = self.w.sample(rng);
        RadialParts { z_norm_pp, w }
    }

    pub fn sample(&self, rng: &mut RandomStream) -> BallVector {
        let mut z = vec![0.0; self.n];
        let parts = self.sample_parts(rng, &mut z);
        let f = parts.factor(self.p);
        z.iter_mut().for_each(|x| *x *= f);
        BallVector::new(z, self.p)
    }
}

pub fn sample_pradial(n: usize, p: PParam, w: &WSpec, rng: &mut RandomStream) -> Result<BallVector> {
    Ok(PRadialSampler::new(n, p, w)?.sample(rng))
}

/// Cone probability measure on the ℓ_p^n-sphere.
pub fn sample_cone(n: usize, p: PParam, rng: &mut RandomStream) -> Result<BallVector> {
    sample_pradial(n, p, &WSpec::DiracZero, rng)
}

/// Uniform law on the ℓ_p^n-ball.
pub fn sample_uniform_ball(n: usize, p: PParam, rng: &mut RandomStream) -> Result<BallVector> {
    sample_pradial(n, p, &WSpec::Exponential, rng)
}

/// Multiplies an unscaled sample by `n^{1/p}` or `n^{κ/p}`.
pub fn scale_sample(mut y: BallVector, regime: Scaling) -> Result<BallVector> {
    if y.scaling.is_some() {
        return Err(Error::State("ball vector is already scaled".into()));
    }
    if let Scaling::Beta { kappa } = regime {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::param(format!("kappa must be > 0, got {kappa}")));
        }
    }
    let f = regime.factor(y.dim(), y.p);
    y.coords.iter_mut().for_each(|x| *x *= f);
    y.p_norm *= f;
    y.scaling = Some((regime, f));
    Ok(y)
}

/// `ln ψ_n(s)`.
pub fn ln_radial_density(s: f64, n: usize, p: PParam, w: &WSpec) -> Result<f64> {
    check_dim(n)?;
    w.validate()?;
    if !(0.0..1.0).contains(&s) {
        return Err(Error::Domain(format!("radius must lie in [0, 1), got {s}")));
    }
    let pv = p.get();
    let np = n as f64 / pv;
    let sp = s.powf(pv);
    let one_minus = 1.0 - sp;
    let c = sp / (pv * one_minus);
    let ln_prefactor = -np * pv.ln() - ln_gamma(np + 1.0) - (np + 1.0) * one_minus.ln();
    let ln_mix = match w.normalized() {
        WSpec::DiracZero => {
            return Err(Error::Unsupported(
                "the cone measure has no density part".into(),
            ))
        }
        WSpec::PointMass { w0 } => np * w0.ln() - c * w0,
        other => {
            let (a, b) = other.gamma_params(n, p).expect("gamma family");
            a * b.ln() + ln_gamma(a + np) - ln_gamma(a) - (a + np) * (b + c).ln()
        }
    };
    Ok(ln_prefactor + ln_mix)
}

/// `ψ_n(s)`, the density of the absolutely continuous part at radius `s`
/// with respect to the uniform probability measure on the ball.
pub fn radial_density(s: f64, n: usize, p: PParam, w: &WSpec) -> Result<f64> {
    Ok(ln_radial_density(s, n, p, w)?.exp())
}
