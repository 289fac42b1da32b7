use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ustm::linalg::{determinant, singular_values, unitary_eig, ComplexMatrix, C64};
use ustm::metrics::{
    chernoff_term, diversity_function, diversity_product, diversity_sum, exact_pep_from_gaps, Constellation,
    SnrPoint, SquareConstellation,
};
use ustm::param::{cayley, complex_gaussian, haar_unitary, perturb, SkewHermitian};
use ustm::stats::wilson95;
use ustm::structures::{expand, reduced_diversity, StructureSpec};
use ustm::ucon;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_frames(t: usize, m: usize, l: usize, r: &mut ChaCha8Rng) -> Constellation {
    let frames = (0..l).map(|_| haar_unitary(t, r).block(0, 0, t, m)).collect();
    Constellation::new(frames).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unitary_factors_preserve_norm_and_singular_values(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let a = complex_gaussian(n, n, &mut r);
        let u = haar_unitary(n, &mut r);
        let v = haar_unitary(n, &mut r);
        let b = &(&u * &a) * &v;
        prop_assert!((a.frobenius_norm() - b.frobenius_norm()).abs() < 1e-12 * a.frobenius_norm().max(1.0));
        for (x, y) in singular_values(&a).iter().zip(singular_values(&b)) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        let da = determinant(&a).unwrap().norm();
        let db = determinant(&b).unwrap().norm();
        prop_assert!((da - db).abs() < 1e-10 * da.max(1.0));
    }

    #[test]
    fn determinant_is_multiplicative(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let a = complex_gaussian(n, n, &mut r);
        let b = complex_gaussian(n, n, &mut r);
        let lhs = determinant(&(&a * &b)).unwrap();
        let rhs = determinant(&a).unwrap() * determinant(&b).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10 * rhs.norm().max(1.0));
    }

    #[test]
    fn unitary_eig_reconstructs(seed in any::<u64>(), n in 1usize..6) {
        let u = haar_unitary(n, &mut rng(seed));
        let e = unitary_eig(&u).unwrap();
        prop_assert!(e.reconstruct().max_abs_diff(&u) < 1e-10);
        prop_assert!(e.power(5).max_abs_diff(&u.unitary_pow(5)) < 1e-9);
    }

    #[test]
    fn cayley_round_trips(seed in any::<u64>(), n in 1usize..5, sigma in 0.01f64..5.0) {
        let s = SkewHermitian::random(n, sigma, &mut rng(seed)).into_matrix();
        let u = cayley(&s).unwrap();
        prop_assert!(u.frame_defect() < 1e-10);
        prop_assert!(cayley(&u).unwrap().max_abs_diff(&s) < 1e-8 * (1.0 + s.frobenius_norm()));
    }

    #[test]
    fn perturb_stays_unitary(seed in any::<u64>(), n in 1usize..5, sigma in 0.0f64..10.0) {
        let mut r = rng(seed);
        let u = haar_unitary(n, &mut r);
        prop_assert!(perturb(&u, sigma, &mut r).frame_defect() < 1e-10);
    }

    #[test]
    fn diversity_invariant_under_fixed_unitaries(seed in any::<u64>(), m in 1usize..4, extra in 0usize..5, l in 2usize..7) {
        let mut r = rng(seed);
        let t = m + extra;
        let c = random_frames(t, m, l, &mut r);
        let u = haar_unitary(t, &mut r);
        let v = haar_unitary(m, &mut r);
        let moved = Constellation::new(c.elements().iter().map(|f| &(&u * f) * &v).collect()).unwrap();
        prop_assert!((diversity_product(&c).0 - diversity_product(&moved).0).abs() < 1e-9);
        prop_assert!((diversity_sum(&c).0 - diversity_sum(&moved).0).abs() < 1e-9);
        let snr = SnrPoint::new(3.0, t, m).unwrap();
        let f0 = diversity_function(&c, 2, snr).unwrap();
        let f1 = diversity_function(&moved, 2, snr).unwrap();
        prop_assert!((f0 - f1).abs() < 1e-9 * f0.max(1e-12));
    }

    #[test]
    fn shifted_square_constellation_keeps_distances(seed in any::<u64>(), l in 2usize..9) {
        let mut r = rng(seed);
        let spec = StructureSpec::WeakGroup { a: haar_unitary(2, &mut r), b: haar_unitary(2, &mut r), len: l };
        let base = expand(&spec).unwrap().frames().unwrap();
        let u = haar_unitary(2, &mut r);
        let v = haar_unitary(2, &mut r);
        let sq = expand(&spec).unwrap();
        let shifted: Vec<ComplexMatrix> = sq.as_square().unwrap().elements().iter().map(|p| &(&u * p) * &v).collect();
        let shifted = SquareConstellation::new(shifted).unwrap().lift().unwrap();
        prop_assert!((diversity_product(&base).0 - diversity_product(&shifted).0).abs() < 1e-9);
        prop_assert!((diversity_sum(&base).0 - diversity_sum(&shifted).0).abs() < 1e-9);
    }

    #[test]
    fn intersecting_subspaces_have_vanishing_dp(seed in any::<u64>(), l in 2usize..5) {
        let c = random_frames(3, 2, l, &mut rng(seed));
        prop_assert!(diversity_product(&c).0 < 1e-6);
    }

    #[test]
    fn exact_pep_is_below_chernoff(gaps in prop::collection::vec(0.0f64..1.0, 1..4), n in 1usize..5, rt in 0.01f64..50.0) {
        let exact = exact_pep_from_gaps(&gaps, n, rt).unwrap();
        let bound = chernoff_term(&gaps, n, rt);
        prop_assert!(exact <= bound + 1e-10);
        prop_assert!(exact >= 0.0);
    }

    #[test]
    fn reduced_equals_brute_force_for_cyclic(seed in any::<u64>(), m in 1usize..4, l in 2usize..12) {
        let spec = StructureSpec::Cyclic { a: haar_unitary(m, &mut rng(seed)), len: l };
        let red = reduced_diversity(&spec).unwrap();
        let full = expand(&spec).unwrap().frames().unwrap();
        prop_assert!((red.dp - diversity_product(&full).0).abs() < 1e-10);
        prop_assert!((red.ds - diversity_sum(&full).0).abs() < 1e-10);
        prop_assert_eq!(red.evaluations, l - 1);
    }

    #[test]
    fn ucon_round_trip(seed in any::<u64>(), t in 1usize..5, m in 1usize..4, l in 1usize..5) {
        let mut r = rng(seed);
        let el: Vec<ComplexMatrix> = (0..l).map(|_| complex_gaussian(t, m, &mut r).scale(C64::new(1e3, -1e-3))).collect();
        let text = ucon::write(&el).unwrap();
        let back = ucon::read(&text).unwrap();
        prop_assert_eq!(&back.elements, &el);
        prop_assert_eq!(ucon::write(&back.elements).unwrap(), text);
    }

    #[test]
    fn wilson_brackets_the_estimate(n in 1u64..100_000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson95(k, n);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-15 && p <= hi + 1e-15 && hi <= 1.0);
    }
}
