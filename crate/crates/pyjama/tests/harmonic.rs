use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use pyjama::gaussian::GaussRat;
use pyjama::harmonic::{
    cyclic_iso, dual_pair, fourier::fourier_truncate, fourier::PeriodicBump, parseval, pow5, rigidity_check,
    s13_subgroup, DiscreteMeasure,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn characters_separate_points() {
    for n in 1..=3 {
        let g = cyclic_iso(n).unwrap();
        let q = pow5(n);
        let mut table = BTreeSet::new();
        for eta in 0..q {
            let row: Vec<BigRational> =
                (0..q).map(|m| dual_pair(&GaussRat::from_int(eta), &g.element(m)).unwrap()).collect();
            table.insert(row);
        }
        assert_eq!(table.len() as u64, q, "n={n}: distinct characters");
        for m in 1..q {
            let x = g.element(m);
            assert!((0..q).any(|e| !dual_pair(&GaussRat::from_int(e), &x).unwrap().is_zero()), "n={n} m={m}");
        }
    }
}

#[test]
fn s13_is_a_subgroup_with_containment() {
    for n in 1..=4 {
        let s = s13_subgroup(n).unwrap();
        let q = pow5(n);
        let set: BTreeSet<u64> = s.elements.iter().copied().collect();
        for &a in &s.elements {
            assert_eq!(a % 5 == 0, false);
            for &b in &s.elements {
                assert!(set.contains(&(a * b % q)), "n={n}: {a}·{b}");
            }
        }
        assert!(s.containment, "n={n}");
        let step = pow5(s.alpha.min(n));
        for j in 0..q / step {
            assert!(set.contains(&((1 + j * step) % q)));
        }
    }
}

#[test]
fn rigidity_on_random_measures() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=3 {
        let s = s13_subgroup(n).unwrap();
        for _ in 0..5 {
            let mu = DiscreteMeasure::random(n, &mut rng).unwrap();
            assert!(mu.is_probability());
            let out = rigidity_check(&mu, &s).unwrap();
            assert_eq!(out.violations, 0);
            assert_eq!(out.etas_checked, pow5(n));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parseval_holds(seed in any::<u64>(), n in 1u32..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = DiscreteMeasure::random(n, &mut rng).unwrap();
        let (l, r) = parseval(&mu).unwrap();
        prop_assert!((l - r).abs() <= 1e-10 * r.max(1.0));
    }

    #[test]
    fn pairing_is_additive(n in 1u32..=3, e1 in 0u64..125, e2 in 0u64..125, m in 0u64..125) {
        let g = cyclic_iso(n).unwrap();
        let m = m % pow5(n);
        let x = g.element(m);
        let a = dual_pair(&GaussRat::from_int(e1), &x).unwrap();
        let b = dual_pair(&GaussRat::from_int(e2), &x).unwrap();
        let c = dual_pair(&GaussRat::from_int(e1 + e2), &x).unwrap();
        let s = a + b;
        let s = &s - BigRational::from_integer(s.floor().to_integer());
        prop_assert_eq!(c, s);
    }

    #[test]
    fn truncation_meets_its_bound(center in 0.0f64..1.0, eps in 0.1f64..0.4, eta in 0.01f64..0.09) {
        let b = PeriodicBump::new(center, eps).unwrap();
        let m = b.c2_norm();
        let t = fourier_truncate(&|x| b.eval(x), m, eta).unwrap();
        prop_assert!(t.grid_error <= eta);
        prop_assert_eq!(t.l, (m / eta).ceil() as u64);
        prop_assert!(t.max_nonzero_coeff <= m);
    }
}

#[test]
fn measure_helpers() {
    let u = DiscreteMeasure::uniform(2).unwrap();
    assert_eq!(u.total(), BigRational::from_integer(BigInt::from(1)));
    assert_eq!(u.l2_squared(), BigRational::new(1.into(), 25.into()));
    let p = DiscreteMeasure::point_mass(2, 7).unwrap();
    assert_eq!(p.autocorrelation()[0], BigRational::from_integer(1.into()));
}
