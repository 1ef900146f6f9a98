mod common;

use pradial::distcore::{
    ln_gamma, moment_pgauss, pgauss_density, sample_gamma, GammaSampler, MeanAcc, PGauss, PParam, RandomStream,
};
use pradial::stats::ks_one_sample;
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Gamma};

fn p(v: f64) -> PParam {
    PParam::new(v).unwrap()
}

#[test]
fn moments_match_quadrature() {
    for &pv in &[1.0, 1.5, 2.0, 3.0] {
        for &r in &[1.0, 2.0, pv, 4.0] {
            let f = |x: f64| 2.0 * x.powf(r) * pgauss_density(p(pv), x);
            let q = common::simpson_half_line(&f, 256.0, 1e-13);
            let exact = moment_pgauss(p(pv), r).unwrap();
            assert!((q - exact).abs() < 1e-8 * exact.max(1.0), "p={pv} r={r}: {q} vs {exact}");
        }
    }
}

#[test]
fn density_integrates_to_one() {
    for &pv in &[1.0, 1.25, 2.0, 5.0] {
        let f = |x: f64| 2.0 * pgauss_density(p(pv), x);
        assert!((common::simpson_half_line(&f, 256.0, 1e-13) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn p_th_moment_is_one() {
    for &pv in &[1.0, 1.5, 2.0, 3.0, 7.5] {
        assert!((moment_pgauss(p(pv), pv).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn mc_moments_within_four_se() {
    let mut rng = RandomStream::new(11, 0);
    for &pv in &[1.0, 1.5, 3.0] {
        let g = PGauss::new(p(pv));
        let xs: Vec<f64> = (0..200_000).map(|_| g.sample(&mut rng).abs()).collect();
        for &r in &[1.0, 2.0, pv] {
            let acc: MeanAcc = xs.iter().map(|x| x.powf(r)).collect();
            let exact = moment_pgauss(p(pv), r).unwrap();
            assert!((acc.mean() - exact).abs() <= 4.0 * acc.std_error(), "p={pv} r={r}");
        }
    }
}

#[test]
fn pgauss_is_symmetric() {
    let mut rng = RandomStream::new(12, 0);
    let g = PGauss::new(p(1.5));
    let pos = (0..100_000).filter(|_| g.sample(&mut rng) > 0.0).count() as f64 / 1e5;
    assert!((pos - 0.5).abs() < 4.0 * 0.5 / 1e5f64.sqrt());
}

#[test]
fn gamma_sampler_matches_cdf() {
    let mut rng = RandomStream::new(13, 0);
    for &(shape, rate) in &[(0.05, 1.0), (0.3, 2.0), (1.0, 1.0), (1.0 / 3.0, 1.0 / 3.0), (7.5, 0.5), (400.0, 1.0)] {
        let g = GammaSampler::new(shape, rate).unwrap();
        let xs: Vec<f64> = (0..50_000).map(|_| g.sample(&mut rng)).collect();
        let law = Gamma::new(shape, rate).unwrap();
        let ks = ks_one_sample(&xs, |x| law.cdf(x), 0.01).unwrap();
        assert!(ks.accepts(), "shape {shape}: D = {}", ks.statistic);
    }
}

#[test]
fn gamma_rejects_bad_parameters() {
    let mut rng = RandomStream::new(0, 0);
    for &(a, b) in &[(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (f64::NAN, 1.0), (1.0, f64::INFINITY)] {
        assert!(sample_gamma(a, b, &mut rng).is_err());
    }
}

#[test]
fn streams_are_independent_of_each_other() {
    let a: Vec<f64> = {
        let mut r = RandomStream::new(5, 1);
        (0..4).map(|_| r.uniform()).collect()
    };
    let b: Vec<f64> = {
        let mut r = RandomStream::new(5, 2);
        (0..4).map(|_| r.uniform()).collect()
    };
    assert_ne!(a, b);
    let mut r = RandomStream::new(5, 0).sibling(1);
    assert_eq!(a, (0..4).map(|_| r.uniform()).collect::<Vec<_>>());
}

proptest! {
    #[test]
    fn p_below_one_is_rejected(v in -10.0f64..0.999) {
        prop_assert!(PParam::new(v).is_err());
    }

    #[test]
    fn pgauss_reproducible(seed in any::<u64>(), pv in 1.0f64..8.0) {
        let g = PGauss::new(p(pv));
        let mut a = RandomStream::new(seed, 3);
        let mut b = RandomStream::new(seed, 3);
        for _ in 0..16 {
            prop_assert_eq!(g.sample(&mut a).to_bits(), g.sample(&mut b).to_bits());
        }
    }

    #[test]
    fn moment_is_log_convex_in_order(pv in 1.0f64..6.0, r in 0.2f64..5.0) {
        // Lyapunov: E|Z|^r ^2 <= E|Z|^{r-h} E|Z|^{r+h}
        let h = 0.1;
        let m = |s: f64| moment_pgauss(p(pv), s).unwrap().ln();
        prop_assert!(2.0 * m(r) <= m(r - h) + m(r + h) + 1e-12);
    }

    #[test]
    fn moment_closed_form(pv in 1.0f64..6.0, r in 0.1f64..6.0) {
        let direct = (r / pv) * pv.ln() + ln_gamma((1.0 + r) / pv) - ln_gamma(1.0 / pv);
        prop_assert!((moment_pgauss(p(pv), r).unwrap().ln() - direct).abs() < 1e-12);
    }
}
