//! Acceptance criteria 1–10. Each prints one PASS/FAIL line; criteria listed in
//! KNOWN_FAILURES must fail in the analyzed way, all others must pass.

use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pyjama::cover::{
    cover_certify, gap_classify, irr_trick, lattice_density, lattice_modulus, random_classes, search_gap_lattice,
    search_small_cover, soundness_sample, theta_set, CertifyOptions, Region,
};
use pyjama::dynamics::{
    approximate_target, bundled_points, circle_hits_line, random_approx_pair, rational_close_to_ball,
    rationality_demo, smooth_gaps, times23_orbit_density, torsion_stabilize, DeskConstants, RealMod1,
};
use pyjama::gaussian::{theta_power, GaussInt, GaussRat};
use pyjama::harmonic::fourier::{fourier_truncate, PeriodicBump};
use pyjama::harmonic::{intertwining, orthogonality_defect, rigidity_suite, s13_subgroup};
use pyjama::lonely::{equivalence_demo, ml_exact, ml_grid_oracle, RunnerInstance};
use pyjama::padic::Padic;
use pyjama::partition::{build_domain, part_difference_spread, part_index};
use pyjama::scalar::{nearest_integer, rat};
use pyjama::solenoid::{distance, make_point, torsion_from_rational, SolenoidPoint};
use pyjama::ExactPoint;

/// Criteria expected to print FAIL, with the reason recorded in the ledger.
const KNOWN_FAILURES: &[u32] = &[5];

struct Verdict {
    id: u32,
    pass: bool,
    detail: String,
    elapsed: Duration,
    limit: Duration,
}

fn judge(id: u32, limit_s: u64, f: impl FnOnce() -> (bool, String)) -> Verdict {
    let t = Instant::now();
    let (ok, detail) = f();
    let elapsed = t.elapsed();
    let limit = Duration::from_secs(limit_s);
    let v = Verdict { id, pass: ok && elapsed <= limit, detail, elapsed, limit };
    println!(
        "criterion {:>2}: {} | {} | {:.2}s (limit {}s)",
        v.id,
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        v.elapsed.as_secs_f64(),
        v.limit.as_secs()
    );
    v
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn exact_point<R: Rng>(r: &mut R) -> ExactPoint {
    make_point(
        Padic::from_integer(5, &BigInt::from(r.gen::<u64>()), 48),
        Padic::from_integer(13, &BigInt::from(r.gen::<u64>()), 48),
        Complex::new(rat(r.gen_range(-5000..5000), 10_000), rat(r.gen_range(-5000..5000), 10_000)),
    )
    .unwrap()
}

// 1. integer combinations on V(n), checked exactly and independently of the solver's flags
fn criterion_1() -> (bool, String) {
    let mut r = rng(1);
    let mut runs = 0;
    let mut bad = 0;
    let mut worst = 0.0f64;
    for n in 1..=20u32 {
        let n8 = BigInt::from(n).pow(8);
        for _ in 0..200 {
            let classes = random_classes(n, &mut r);
            runs += 1;
            let s = match irr_trick(n, &classes) {
                Ok(s) => s,
                Err(_) => {
                    bad += 1;
                    continue;
                }
            };
            let mut sum = BigRational::zero();
            let mut ok = true;
            for m in 1..=n {
                let i = (m - 1) as usize;
                let lp = s.lambda(m, 1);
                let lm = s.lambda(m, -1);
                // e(α_m) + e(−α_m) = 1/m
                ok &= lp == lm;
                sum += BigRational::new(lp.clone(), BigInt::from(m));
                for (l, c) in [(lp, classes[i][0]), (lm, classes[i][1])] {
                    ok &= l.is_multiple_of(&BigInt::from(c));
                    ok &= l.abs() <= n8;
                }
            }
            ok &= sum.is_one();
            worst = worst.max(s.float_residual);
            if !ok {
                bad += 1;
            }
        }
    }
    (bad == 0, format!("{runs} partitions, n <= 20, {bad} failures, max float residual {worst:.1e}"))
}

// 2. averaged Fourier bound
fn criterion_2() -> (bool, String) {
    let mut r = rng(2);
    let mut violations = 0;
    let mut parts = Vec::new();
    for n in 1..=3 {
        let rep = rigidity_suite(n, 20, &mut r).unwrap();
        violations += rep.violations;
        parts.push(format!("n={n} max ratio {:.4}", rep.max_ratio));
    }
    (violations == 0, format!("{violations} violations; {}", parts.join(", ")))
}

// 3. coverage certificates
fn criterion_3() -> (bool, String) {
    let region = Region::new(0.0, 0.0, 4.0, 4.0).unwrap();
    let s = search_small_cover(&rat(17, 50), 3, region, 14, &[6, 12, 24, 48]).unwrap();
    let (a_ok, a_desc, cert) = match &s.found {
        Some((_, c)) => (c.is_covered() && c.depth <= 14, format!("(a) {:?} depth {}", s.turns.clone().unwrap(), c.depth), Some(c.clone())),
        None => (false, "(a) no 3-rotation cover".into(), None),
    };

    let theta4 = theta_set(4).unwrap();
    let windows = [(68.0, -3.0), (155.24, 280.28)];
    let mut gaps = Vec::new();
    let mut certs = Vec::new();
    for (cx, cy) in windows {
        let w = Region::new(cx - 4.0, cy - 4.0, cx + 4.0, cy + 4.0).unwrap();
        let c = cover_certify::<f64>(&theta4, &rat(11, 50), w, CertifyOptions::depth(10)).unwrap();
        gaps.extend(c.gaps.iter().copied());
        certs.push(c);
    }
    let witnessed: usize = certs.iter().map(|c| c.witnessed_gaps).sum();
    let report = search_gap_lattice(&gaps, 4, 12).unwrap();
    let (b_ok, b_desc) = match report {
        Some(rep) => {
            let again = gap_classify(&gaps, rep.n, &rep.d).unwrap();
            let dens = lattice_density(rep.n, &rep.d, Region::new(64.0, -7.0, 72.0, 1.0).unwrap(), 200);
            (
                witnessed > 0 && rep.all_classified() && again.all_classified(),
                format!(
                    "(b) {} gap boxes ({witnessed} witnessed), {}/{} classified by D={}, n={} (union density {:.3})",
                    gaps.len(),
                    again.classified,
                    again.total,
                    format!("{}{:+}i", rep.d.re, rep.d.im),
                    rep.n,
                    dens
                ),
            )
        }
        None => (false, format!("(b) {} gap boxes, no (n, D) classifies them", gaps.len())),
    };

    let mut r = rng(3);
    let mut checked = 0;
    let mut bad = 0;
    for c in cert.iter().chain(certs.iter()) {
        let (k, v) = soundness_sample(c, 1000, &mut r);
        checked += k;
        bad += v;
    }
    let c_ok = bad == 0 && checked >= 1000;
    (a_ok && b_ok && c_ok, format!("{a_desc}; {b_desc}; (c) {checked} sampled points, {bad} violations"))
}

// 4. lonely runners
fn criterion_4() -> (bool, String) {
    let mut ok = true;
    for n in 1..=8i64 {
        ok &= ml_exact(&RunnerInstance::new((1..=n).collect()).unwrap()).value == rat(1, n + 1);
    }
    let mut r = rng(4);
    let mut disagreements = 0;
    for _ in 0..200 {
        let k = r.gen_range(1..=6);
        let v: Vec<i64> = (0..k).map(|_| r.gen_range(1..=50)).collect();
        let g = r.gen_range(10..=2000);
        let inst = RunnerInstance::new(v.clone()).unwrap();
        let exact = ml_exact(&inst).value;
        let grid = ml_grid_oracle(&inst, g).unwrap();
        let vmax = *v.iter().max().unwrap();
        if grid > exact || &exact - &grid > rat(vmax, g) {
            disagreements += 1;
        }
    }
    let unit = Region::new(0.0, 0.0, 1.0, 1.0).unwrap();
    let eq = equivalence_demo(&RunnerInstance::new(vec![1, 2]).unwrap(), unit, &rat(1, 100), 10).unwrap();
    let below = eq.below.as_ref().map(|b| b.witnessed_gaps).unwrap_or(0);
    ok &= disagreements == 0 && eq.consistent && eq.above.covered && below > 0;
    (
        ok,
        format!(
            "ML(1..N) = 1/(N+1) for N <= 8; 200 grid checks, {disagreements} out of tolerance; (1,2): covered at 1/3+1/100, {below} witnessed gaps at 1/3-1/100"
        ),
    )
}

// 5. residue isomorphism, pairing and the θ₁₃ subgroup
fn criterion_5() -> (bool, String, Vec<(u32, u64, bool, bool)>) {
    let mut literal = Vec::new();
    let mut lit_ok = true;
    for n in 1..=3 {
        let rep = intertwining(n).unwrap();
        lit_ok &= rep.literal_ok();
        literal.push((n, rep.literal_failures, rep.unit_twisted_ok, rep.subgroup_lattice_ok && rep.bijective));
    }
    let defect = (1..=2).map(|n| orthogonality_defect(n).unwrap()).fold(0.0, f64::max);
    let containment = (1..=4).all(|n| s13_subgroup(n).unwrap().containment);
    let fails: Vec<String> = literal.iter().map(|(n, f, _, _)| format!("n={n}: {f}")).collect();
    (
        lit_ok && defect <= 1e-20 && containment,
        format!(
            "literal ×5 vs ×P5 mismatches [{}]; unit-twisted form holds: {}; orthogonality defect {defect:.1e}; containment n <= 4: {containment}",
            fails.join(", "),
            literal.iter().all(|l| l.2 && l.3)
        ),
        literal,
    )
}

// 6. partition suite
fn criterion_6() -> (bool, String) {
    let mut r = rng(6);
    let mut diam_bad = 0;
    let mut vol_bad = 0;
    for _ in 0..50 {
        let n = r.gen_range(0..=14u32);
        let n5 = 5f64.powf(-r.gen_range(0.0..4.0));
        let n13 = 13f64.powf(-r.gen_range(0.0..3.0));
        let nc = r.gen_range(1.0..5.0) * (130.0 / (5f64.powi(n as i32) * n5 * n13)).sqrt();
        let s = build_domain(n, n5, n13, nc).unwrap();
        let tol = 1.0 + 1e-12;
        if s.diam5 > n5 * tol || s.diam13 > n13 * tol || s.diam_c > nc * tol {
            diam_bad += 1;
        }
        let pw = |b: u32, e: i64| {
            let x = BigRational::from_integer(BigInt::from(b).pow(e.unsigned_abs() as u32));
            if e >= 0 {
                x.recip()
            } else {
                x
            }
        };
        let vol = pw(5, s.alpha) * pw(13, s.beta) * s.lattice().norm();
        if vol != BigRational::from_integer(BigInt::from(5u32).pow(n)).recip() {
            vol_bad += 1;
        }
    }
    let s = build_domain(2, 0.2, 1.0, (130.0f64 / 25.0 * 5.0).sqrt()).unwrap();
    let mut spread_bad = 0;
    for _ in 0..1000 {
        let x = exact_point(&mut r);
        let y = exact_point(&mut r);
        let wx = part_index(&x, &s).unwrap().unwrap();
        let wy = part_index(&y, &s).unwrap().unwrap();
        let d = part_index(&x.sub(&y).unwrap(), &s).unwrap().unwrap();
        let spread = part_difference_spread(&s, &wx, &wy);
        let expect: Vec<GaussInt> = {
            let base = &wx.w - &wy.w;
            let one = GaussInt::from_int(1);
            let i = GaussInt::i();
            vec![base.clone(), &base - &one, &base - &i, &(&base - &one) - &i]
        };
        let listed = spread.iter().map(|p| p.w.clone()).collect::<Vec<_>>() == expect;
        if !listed || !spread.iter().any(|c| c.cell == d.cell) {
            spread_bad += 1;
        }
    }
    (
        diam_bad + vol_bad + spread_bad == 0,
        format!("50 triples: {diam_bad} diameter and {vol_bad} volume failures; 1000 pairs: {spread_bad} spread failures"),
    )
}

// 7. constructive dynamics
fn criterion_7() -> (bool, String) {
    let mut r = rng(7);
    let mut bad = [0u32; 5];

    for _ in 0..50 {
        let (a, b) = (r.gen_range(1..6i64), r.gen_range(0..6i64));
        let rr = GaussRat::from_gauss(GaussInt::new(a, b));
        let q0 = GaussRat::from_ratio(r.gen_range(0..40), 1).div(&rr).unwrap();
        let q = torsion_from_rational(&q0).unwrap();
        let w = GaussRat::from_ratio(r.gen_range(-90..=90), 100).div(&rr).unwrap();
        let x = q
            .point::<BigRational>()
            .unwrap()
            .add(&SolenoidPoint::complex_offset(Complex::new(w.re(), w.im())).unwrap())
            .unwrap();
        let ok = match rational_close_to_ball(&x, &rr, 1e-9) {
            Ok((ap, _)) => {
                let norm = rr.norm().to_integer();
                ap.q.order() <= &norm && ap.dist <= ap.bound + ap.err
            }
            Err(_) => false,
        };
        bad[0] += !ok as u32;
    }

    for _ in 0..50 {
        let k = r.gen_range(2..=30i64);
        let q = torsion_from_rational(&GaussRat::from_ratio(r.gen_range(1..1000), k)).unwrap();
        let ord: u64 = q.order().try_into().unwrap();
        let ok = match torsion_stabilize(&q, 1_000_000) {
            Ok((s0, s1)) => {
                let q1 = q.mul_element(&theta_power(s0 as i64, 0)).unwrap();
                let q2 = q1.mul_element(&theta_power(s1 as i64, 0)).unwrap();
                s0 < (ord * ord).max(1) && s1 >= 1 && s1 <= (ord * ord).max(1) && q1 == q2
            }
            Err(_) => false,
        };
        bad[1] += !ok as u32;
    }

    for _ in 0..50 {
        let p: SolenoidPoint<f64> = exact_point(&mut r).convert();
        let rho = r.gen_range(0.5..3.0);
        let ok = match circle_hits_line(&p, rho) {
            Ok(w) => {
                let shifted = p.add(&SolenoidPoint::complex_offset(Complex::new(w.z.0, w.z.1)).unwrap()).unwrap();
                let (v, err) = shifted.char_eval(&GaussRat::one()).unwrap();
                let (d, _) = nearest_integer(&v);
                (w.z.0.hypot(w.z.1) - rho).abs() <= 1e-12 && d <= err + w.err
            }
            Err(_) => false,
        };
        bad[2] += !ok as u32;
    }

    let c = DeskConstants::default();
    let eta = 0.25;
    for _ in 0..100 {
        let (x, target) = random_approx_pair(&mut r, eta).unwrap();
        let ok = match approximate_target(&x, &target, eta, 16, &c) {
            Ok(rep) => {
                let moved = x.act(rep.witness.m, rep.witness.t).unwrap();
                let d = distance(&target, &moved).unwrap();
                rep.hypothesis_ok && d.value <= eta + d.err
            }
            Err(_) => false,
        };
        bad[3] += !ok as u32;
    }

    let mut branches = Vec::new();
    for (name, p) in bundled_points().unwrap() {
        let ok = match rationality_demo(&p, 0.3, 0.05, 12, &c) {
            Ok(rep) => {
                branches.push(format!("{name}:{}", rep.branch));
                rep.verified && rep.outcome.verify(&p).unwrap()
            }
            Err(e) => {
                branches.push(format!("{name}:error {e}"));
                false
            }
        };
        bad[4] += !ok as u32;
    }
    (
        bad.iter().all(|&b| b == 0),
        format!(
            "failures: ball {}/50, stabilize {}/50, circle {}/50, approx {}/100 at eta 0.25, dichotomy {}/3 [{}]",
            bad[0],
            bad[1],
            bad[2],
            bad[3],
            bad[4],
            branches.join(", ")
        ),
    )
}

// 8. 3-smooth gaps and the ×2,×3 orbit of 1/7
fn criterion_8() -> (bool, String) {
    let g = smooth_gaps(1_000_000).unwrap();
    let t = times23_orbit_density(&RealMod1::Rational(rat(1, 7)), 12, 35).unwrap();
    let ok = g.prefix == vec![1, 2, 3, 4, 6, 8, 9, 12] && g.max_gap == (1, 2) && g.argmax == 2 && t.occupied <= 7;
    (
        ok,
        format!(
            "prefix {:?}, max gap {}/{} at {}, {} smooth numbers; 1/7 occupies {} of 35 cells",
            g.prefix, g.max_gap.0, g.max_gap.1, g.argmax, g.count, t.occupied
        ),
    )
}

// 9. Fourier truncation on the bundled functions
fn criterion_9() -> (bool, String) {
    let tau = 2.0 * std::f64::consts::PI;
    let bump = PeriodicBump::new(0.3, 0.2).unwrap();
    let narrow = PeriodicBump::new(0.75, 0.3).unwrap();
    let (mb, mn) = (bump.c2_norm(), narrow.c2_norm());
    let funcs: Vec<(&str, Box<dyn Fn(f64) -> f64>, f64)> = vec![
        ("constant", Box::new(|_| 0.7), 1.0),
        ("cos", Box::new(move |x| (tau * x).cos()), tau * tau),
        ("mixed", Box::new(move |x| 0.5 * (tau * x).sin() + 0.25 * (2.0 * tau * x).cos()), 0.5 * tau * tau + tau * tau),
        ("bump(0.3, 0.2)", Box::new(move |x| bump.eval(x)), mb),
        ("bump(0.75, 0.3)", Box::new(move |x| narrow.eval(x)), mn),
    ];
    let eta = 0.05;
    let mut ok = true;
    let mut worst = 0.0f64;
    for (_, f, m) in &funcs {
        match fourier_truncate(f.as_ref(), *m, eta) {
            Ok(t) => {
                ok &= t.grid_error <= eta && t.l == (m / eta).ceil() as u64 && t.max_nonzero_coeff <= *m;
                worst = worst.max(t.grid_error);
            }
            Err(_) => ok = false,
        }
    }
    (ok, format!("{} functions at eta {eta}: worst grid error {worst:.2e}", funcs.len()))
}

// 10. byte-identical reports across thread counts
fn criterion_10() -> (bool, String) {
    let cases: [&[&str]; 6] = [
        &["irrtrick", "--n", "12", "--seed", "10"],
        &["rigidity", "--n", "3", "--trials", "4", "--seed", "10"],
        &["approx", "--trials", "10", "--seed", "10"],
        &["dichotomy", "--point", "generic"],
        &["cover", "--epsilon", "0.22", "--rotations", "theta:3", "--region", "0,0,3,3", "--max-depth", "9"],
        &["ml", "--velocities", "1,2", "--equivalence"],
    ];
    let dir = std::env::temp_dir().join(format!("pyjama-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut differing = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let mut outs = Vec::new();
        for t in ["1", "4", "8"] {
            let path = dir.join(format!("{i}-{t}.json"));
            let status = Command::new(env!("CARGO_BIN_EXE_pyjama"))
                .args(*case)
                .args(["--threads", t, "--out", path.to_str().unwrap()])
                .output()
                .expect("binary runs");
            outs.push((status.status.code(), std::fs::read(&path).unwrap_or_default()));
        }
        if !(outs.windows(2).all(|w| w[0] == w[1]) && !outs[0].1.is_empty()) {
            differing.push(case[0]);
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    (differing.is_empty(), format!("{} configurations at 1/4/8 threads, differing: {:?}", cases.len(), differing))
}

#[test]
fn acceptance() {
    let mut verdicts = vec![
        judge(1, 10, criterion_1),
        judge(2, 60, criterion_2),
        judge(3, 120, criterion_3),
        judge(4, 60, criterion_4),
    ];
    let mut literal = Vec::new();
    verdicts.push(judge(5, 30, || {
        let (ok, d, l) = criterion_5();
        literal = l;
        (ok, d)
    }));
    verdicts.push(judge(6, 30, criterion_6));
    verdicts.push(judge(7, 120, criterion_7));
    verdicts.push(judge(8, 10, criterion_8));
    verdicts.push(judge(9, 10, criterion_9));
    verdicts.push(judge(10, 600, criterion_10));

    let unexpected: Vec<u32> =
        verdicts.iter().filter(|v| !v.pass && !KNOWN_FAILURES.contains(&v.id)).map(|v| v.id).collect();
    let fixed: Vec<u32> = verdicts.iter().filter(|v| v.pass && KNOWN_FAILURES.contains(&v.id)).map(|v| v.id).collect();
    println!("known failures: {KNOWN_FAILURES:?}");
    assert!(unexpected.is_empty(), "criteria failed: {unexpected:?}");
    assert!(fixed.is_empty(), "known failures now pass, update the list: {fixed:?}");

    // Criterion 5 fails only in the literal ×5 ↔ ×P₅ comparison: level 1 agrees, levels 2
    // and 3 disagree, and the unit-twisted correspondence holds at every level.
    assert_eq!(literal.len(), 3);
    for (n, failures, twisted, lattice) in &literal {
        assert!(*twisted && *lattice, "n={n}");
        assert_eq!(*failures == 0, *n == 1, "n={n}: {failures} literal mismatches");
    }
    assert!(orthogonality_defect(2).unwrap() <= 1e-20);
    assert!((1..=4).all(|n| s13_subgroup(n).unwrap().containment));
}

#[test]
fn gap_lattice_of_desk_modulus() {
    // D = conj(P5)·conj(P13)
    assert_eq!(lattice_modulus(1), GaussInt::new(-4, -7));
    let c = DeskConstants::default();
    assert_eq!(c.c1, 130_000.0);
    let box_ = Region::new(1.45, 2.45, 1.55, 2.55).unwrap();
    let rep = gap_classify(&[box_], 2, &GaussInt::new(3, 5)).unwrap();
    assert!(rep.all_classified());
    let _ = cover_certify::<f64>(&theta_set(0).unwrap(), &rat(1, 4), box_, CertifyOptions::depth(2)).unwrap();
}
