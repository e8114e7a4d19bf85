use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use pyjama::gaussian::{theta_power, AShape, GaussInt, GaussRat};
use pyjama::padic::Padic;
use pyjama::scalar::rat;
use pyjama::solenoid::{distance, make_point, norm, torsion_from_rational, SolenoidPoint};
use pyjama::ExactPoint;

fn frac(x: BigRational) -> BigRational {
    &x - BigRational::from_integer(x.floor().to_integer())
}

fn point() -> impl Strategy<Value = ExactPoint> {
    (any::<u64>(), any::<u64>(), -500i64..500, -500i64..500, 1i64..40).prop_map(|(a, b, x, y, d)| {
        make_point(
            Padic::from_integer(5, &BigInt::from(a), 48),
            Padic::from_integer(13, &BigInt::from(b), 48),
            Complex::new(rat(x, d * 100), rat(y, d * 100)),
        )
        .unwrap()
    })
}

/// Points close to 0: high valuations and a small complex part.
fn small_point() -> impl Strategy<Value = ExactPoint> {
    (1u64..1000, 1u64..1000, 2u32..5, 1u32..3, -50i64..50, -50i64..50).prop_map(|(u, w, k, l, x, y)| {
        make_point(
            Padic::from_integer(5, &(BigInt::from(5u32).pow(k) * u), 48),
            Padic::from_integer(13, &(BigInt::from(13u32).pow(l) * w), 48),
            Complex::new(rat(x, 1000), rat(y, 1000)),
        )
        .unwrap()
    })
}

fn element() -> impl Strategy<Value = GaussRat> {
    (-2i64..3, -1i64..2, -9i64..10, -9i64..10)
        .prop_map(|(a, b, x, y)| AShape { a, b, c: 0, z: GaussInt::new(x, y) }.reassemble())
}

fn same(x: &ExactPoint, y: &ExactPoint) -> bool {
    distance(x, y).unwrap().value == 0.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn metric_symmetry(x in point(), y in point()) {
        let d1 = distance(&x, &y).unwrap();
        let d2 = distance(&y, &x).unwrap();
        prop_assert!((d1.value - d2.value).abs() <= d1.err + d2.err + 1e-12);
        prop_assert_eq!(distance(&x, &x).unwrap().value, 0.0);
    }

    #[test]
    fn metric_triangle(x in small_point(), y in small_point(), z in small_point()) {
        let xz = distance(&x, &z).unwrap();
        let xy = distance(&x, &y).unwrap();
        let yz = distance(&y, &z).unwrap();
        prop_assert!(xz.value <= xy.value + yz.value + xz.err + xy.err + yz.err + 1e-12);
    }

    #[test]
    fn action_is_additive(x in point(), y in point(), s in 0u64..6, t in 0u64..6) {
        let lhs = x.add(&y).unwrap().act(s, t).unwrap();
        let rhs = x.act(s, t).unwrap().add(&y.act(s, t).unwrap()).unwrap();
        prop_assert!(same(&lhs, &rhs));
    }

    #[test]
    fn characters_are_dual(x in point(), y in point(), e1 in element(), e2 in element()) {
        let (a, _) = x.char_eval(&e1).unwrap();
        let (b, _) = x.char_eval(&e2).unwrap();
        let (c, _) = x.char_eval(&e1.add(&e2)).unwrap();
        prop_assert_eq!(c, frac(a.clone() + b));
        let (d, _) = y.char_eval(&e1).unwrap();
        let (sum, _) = x.add(&y).unwrap().char_eval(&e1).unwrap();
        prop_assert_eq!(sum, frac(a + d));
        let th = theta_power(1, 1);
        let (lhs, _) = x.mul_element(&th).unwrap().char_eval(&e1).unwrap();
        let (rhs, _) = x.char_eval(&th.mul(&e1)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn diagonal_image_is_trivial(e in element()) {
        let p = ExactPoint::from_rational(&e).unwrap();
        prop_assert_eq!(norm(&p).value, 0.0);
        prop_assert!(p.char_eval(&GaussRat::one()).unwrap().0.is_zero());
    }

    #[test]
    fn torsion_order_is_preserved(m in 1i64..60, k in (2i64..60).prop_filter("prime to 65", |k| k % 5 != 0 && k % 13 != 0), s in 0i64..5, t in 0i64..5) {
        let q = torsion_from_rational(&GaussRat::from_ratio(m, k)).unwrap();
        let moved = q.mul_element(&theta_power(s, t)).unwrap();
        prop_assert_eq!(moved.order(), q.order());
    }

    #[test]
    fn coordinates_round_trip(x in point()) {
        let (a, b, z) = x.coordinates();
        let y = make_point(a, b, z).unwrap();
        prop_assert_eq!(y, x);
    }
}

#[test]
fn float_scalars_follow_exact() {
    let e: ExactPoint = make_point(
        Padic::from_integer(5, &BigInt::from(123456789u64), 48),
        Padic::from_integer(13, &BigInt::from(987654321u64), 48),
        Complex::new(rat(1, 7), rat(-2, 9)),
    )
    .unwrap();
    let f: SolenoidPoint<f64> = e.convert();
    let g: SolenoidPoint<f32> = e.convert();
    let (ve, _) = e.act(3, 2).unwrap().char_eval(&GaussRat::one()).unwrap();
    let (vf, ef) = f.act(3, 2).unwrap().char_eval(&GaussRat::one()).unwrap();
    let (vg, eg) = g.act(3, 2).unwrap().char_eval(&GaussRat::one()).unwrap();
    let ve = pyjama::scalar::rational_to_f64(&ve);
    assert!((vf - ve).abs() <= ef, "{vf} {ve} {ef}");
    assert!((vg as f64 - ve).abs() <= eg, "{vg} {ve} {eg}");
}
