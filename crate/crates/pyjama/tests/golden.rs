//! Regression values pinned from reviewed runs; the α_m are checked against libm.

use pyjama::cover::{alpha_turns, search_small_cover, Region};
use pyjama::dynamics::{smooth_gaps, times23_orbit_density, RealMod1};
use pyjama::gaussian::GaussRat;
use pyjama::harmonic::{bump::bump_h10, rigidity_suite, DiscreteMeasure};
use pyjama::partition::pushforward_scan;
use pyjama::scalar::{rat, Dd};
use pyjama::solenoid::SolenoidPoint;
use rand::SeedableRng;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1e-300)
}

#[test]
fn alpha_angles() {
    assert_eq!(alpha_turns(1).to_f64(), 1.0 / 6.0);
    for m in 1..=30u32 {
        let oracle = (1.0 / (2.0 * m as f64)).acos() / (2.0 * std::f64::consts::PI);
        assert!(close(alpha_turns(m).to_f64(), oracle, 4e-16), "m={m}");
    }
    assert_eq!(alpha_turns(2).to_f64(), 0.20978468837241687);
}

#[test]
fn h10_sum() {
    let (_, h) = bump_h10(1, 1, 0.05, 4.0).unwrap();
    assert_eq!(h.terms, 17);
    assert!(close(h.sum, 7.418682090668253e-5, 1e-9), "{}", h.sum);
    assert!(h.sum <= h.bound);
}

#[test]
fn rigidity_report() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let r = rigidity_suite(2, 20, &mut rng).unwrap();
    assert_eq!((r.alpha, r.violations, r.worst_eta, r.measures_tested), (1, 0, 0, 20));
    assert!(close(r.max_ratio, 0.453123595506, 1e-9), "{}", r.max_ratio);
}

#[test]
fn smooth_gaps_to_a_million() {
    let g = smooth_gaps(1_000_000).unwrap();
    assert_eq!(g.count, 142);
    assert_eq!((g.max_gap, g.argmax), ((1, 2), 2));
    assert_eq!((g.tail_gap, g.tail_argmax), ((1, 8), 1024));
}

#[test]
fn times23_of_sqrt2() {
    let x = Dd::from_f64(2.0).sqrt() - Dd::from_f64(1.0);
    let r = times23_orbit_density(&RealMod1::Real(x), 12, 35).unwrap();
    assert_eq!((r.points, r.occupied), (169, 34));
    assert!(close(r.max_gap, 0.03510472644273725, 1e-12));
    let q = times23_orbit_density(&RealMod1::Rational(rat(1, 7)), 12, 35).unwrap();
    assert_eq!((q.occupied, q.max_gap), (6, 2.0 / 7.0));
}

#[test]
fn three_direction_cover() {
    let s = search_small_cover(&rat(17, 50), 3, Region::new(0.0, 0.0, 4.0, 4.0).unwrap(), 14, &[6, 12, 24, 48]).unwrap();
    assert_eq!(s.turns, Some(vec!["0".to_string(), "1/6".into(), "1/3".into()]));
    let (_, c) = s.found.unwrap();
    assert_eq!((c.depth, c.boxes.len()), (8, 760));
}

#[test]
fn pushforward_scan_values() {
    let mu = DiscreteMeasure::uniform(2).unwrap();
    let f = |x: &SolenoidPoint<f64>| {
        let (v, e) = x.char_eval(&GaussRat::one()).unwrap();
        ((2.0 * std::f64::consts::PI * v).cos().abs(), e * 7.0)
    };
    let s = pushforward_scan(&mu, &f, 2.0 / std::f64::consts::PI, 4, 0.1).unwrap();
    assert!(close(s.rho, 1.0, 1e-12));
    assert_eq!((s.best_s, s.best_t), (2, 0));
    assert!(close(s.best_value, 1.0, 1e-12));
    assert!(s.holds);
}
