mod common;

use pradial::distcore::RandomStream;
use pradial::metrics::{lp_distance, lp_upper_bound, w1, w1_1d, w1_matching, DiscreteMeasure};
use proptest::prelude::*;

use common::{dist, lp_oracle, permutations, random_measure};

#[test]
fn lp_matches_exhaustive_oracle() {
    let mut rng = RandomStream::new(41, 0);
    for inst in 0..300 {
        let dim = 1 + inst % 2;
        let uniform = inst % 3 == 0;
        let (a, b) = if uniform {
            let m = 1 + (rng.uniform() * 4.0) as usize;
            (m, m)
        } else {
            (1 + (rng.uniform() * 4.0) as usize, 1 + (rng.uniform() * 4.0) as usize)
        };
        let spread = [0.3, 1.0, 2.5][inst % 3];
        let mu = random_measure(&mut rng, a, dim, spread, uniform);
        let nu = random_measure(&mut rng, b, dim, spread, uniform);
        let got = lp_distance(&mu, &nu).unwrap();
        let want = lp_oracle(&mu, &nu);
        assert!((got - want).abs() < 1e-9, "instance {inst}: {got} vs {want}");
    }
}

#[test]
fn w1_matching_matches_factorial_enumeration() {
    let mut rng = RandomStream::new(42, 0);
    for inst in 0..100 {
        let m = 1 + inst % 6;
        let dim = 1 + inst % 3;
        let mu = random_measure(&mut rng, m, dim, 2.0, true);
        let nu = random_measure(&mut rng, m, dim, 2.0, true);
        let want = permutations(m)
            .iter()
            .map(|perm| (0..m).map(|i| dist(mu.atom(i), nu.atom(perm[i]))).sum::<f64>() / m as f64)
            .fold(f64::INFINITY, f64::min);
        let got = w1_matching(&mu, &nu).unwrap();
        assert!((got - want).abs() < 1e-9, "instance {inst}: {got} vs {want}");
    }
}

#[test]
fn line_routes_agree() {
    let mut rng = RandomStream::new(43, 0);
    for m in [1usize, 2, 5, 40, 200] {
        let mu = random_measure(&mut rng, m, 1, 3.0, true);
        let nu = random_measure(&mut rng, m, 1, 3.0, true);
        assert!((w1_1d(&mu, &nu).unwrap() - w1_matching(&mu, &nu).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn lp_of_two_diracs_saturates_at_one() {
    for &t in &[0.0, 0.2, 0.999, 1.0, 3.0] {
        let a = DiscreteMeasure::uniform(1, vec![0.0]).unwrap();
        let b = DiscreteMeasure::uniform(1, vec![t]).unwrap();
        assert!((lp_distance(&a, &b).unwrap() - t.min(1.0)).abs() < 1e-15);
    }
}

#[test]
fn large_uniform_instance_obeys_bound() {
    let mut rng = RandomStream::new(44, 0);
    let mu = random_measure(&mut rng, 300, 2, 1.0, true);
    let nu = random_measure(&mut rng, 300, 2, 1.0, true);
    let lp = lp_distance(&mu, &nu).unwrap();
    assert!(lp > 0.0 && lp <= lp_upper_bound(&mu, &nu).unwrap() + 1e-12);
}

fn small_measure(dim: usize) -> impl Strategy<Value = DiscreteMeasure> {
    (1usize..5).prop_flat_map(move |atoms| {
        (
            prop::collection::vec(-1.5f64..1.5, atoms * dim),
            prop::collection::vec(0.05f64..1.0, atoms),
        )
            .prop_map(move |(pts, raw)| {
                let s: f64 = raw.iter().sum();
                DiscreteMeasure::new(dim, pts, raw.iter().map(|w| w / s).collect()).unwrap()
            })
    })
}

fn uniform_cloud(m: usize, dim: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec(-1.5f64..1.5, m * dim).prop_map(move |pts| DiscreteMeasure::uniform(dim, pts).unwrap())
}

proptest! {
    #[test]
    fn lp_is_symmetric(a in small_measure(2), b in small_measure(2)) {
        let d1 = lp_distance(&a, &b).unwrap();
        let d2 = lp_distance(&b, &a).unwrap();
        prop_assert!((d1 - d2).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&d1));
    }

    #[test]
    fn lp_vanishes_on_the_diagonal(a in small_measure(2)) {
        prop_assert_eq!(lp_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn lp_triangle_inequality(a in small_measure(1), b in small_measure(1), c in small_measure(1)) {
        let ab = lp_distance(&a, &b).unwrap();
        let bc = lp_distance(&b, &c).unwrap();
        let ac = lp_distance(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn lp_below_root_w1((a, b) in (1usize..8).prop_flat_map(|m| (uniform_cloud(m, 2), uniform_cloud(m, 2)))) {
        prop_assert!(lp_distance(&a, &b).unwrap() <= lp_upper_bound(&a, &b).unwrap() + 1e-9);
    }

    #[test]
    fn w1_scales_linearly(
        (a, b) in (1usize..7).prop_flat_map(|m| (uniform_cloud(m, 2), uniform_cloud(m, 2))),
        s in 0.1f64..10.0,
    ) {
        let scale = |m: &DiscreteMeasure| {
            let pts: Vec<f64> = m.atoms().flat_map(|x| x.iter().map(|v| v * s).collect::<Vec<_>>()).collect();
            DiscreteMeasure::uniform(2, pts).unwrap()
        };
        let base = w1(&a, &b).unwrap();
        prop_assert!((w1(&scale(&a), &scale(&b)).unwrap() - s * base).abs() < 1e-9 * (1.0 + s * base));
    }

    #[test]
    fn lp_equals_contaminating_mass(a in small_measure(1), t in 0.001f64..1.0) {
        // (1−t)μ + tδ_far: the far mass is the only mismatch
        let mut pts: Vec<f64> = a.atoms().map(|x| x[0]).collect();
        let mut w: Vec<f64> = a.weights().iter().map(|x| x * (1.0 - t)).collect();
        pts.push(10.0);
        w.push(t);
        let s: f64 = w.iter().sum();
        let nu = DiscreteMeasure::new(1, pts, w.iter().map(|x| x / s).collect()).unwrap();
        prop_assert!((lp_distance(&a, &nu).unwrap() - t).abs() < 1e-9);
    }
}
