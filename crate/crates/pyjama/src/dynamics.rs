//! Orbits under Θ_N, pigeonhole close pairs, the constructive major and minor arc
//! steps, the rationality dichotomy pipeline and the ×2,×3 demonstrations.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{p5bar, theta13, theta5, theta_power, GaussRat};
use crate::harmonic::cyclic_iso;
use crate::padic::{embed, pow_p, Padic, DEFAULT_PRECISION, PRECISION_FLOOR};
use crate::partition::{build_domain, part_difference_spread, part_index, pnt_params, representative, PartitionSpec};
use crate::scalar::{Dd, Scalar};
use crate::solenoid::{dist_to_complex_ball, distance, Certainty, SolenoidPoint, TorsionPoint};

/// Desk-scale stand-ins for the non-effective constants. Every report records them.
#[derive(Clone, Debug, Serialize)]
pub struct DeskConstants {
    /// Upper bound for the major-arc η = min(δ/(3k²), floor).
    pub eta_floor: f64,
    /// p-adic size of r·p below which the major branch is taken.
    pub major_threshold: f64,
    /// ϖ: the smallest nonzero p-adic size accepted by the minor arc.
    pub varpi: f64,
    /// N₅ = c1·η^{-3} in the target's fundamental domain.
    pub c1: f64,
    /// Range of the extra exponent added to m and n in the constructive path.
    pub c2_min: u32,
    pub c2_max: u32,
    /// Grid search covers 0 ≤ s, t ≤ grid_bound.
    pub grid_bound: u64,
    /// Largest exponent swept in the major arc.
    pub sweep_bound: u64,
    /// State cap for cycle detection.
    pub stabilize_cap: u64,
    /// Partition level and orbit size used in the minor arc.
    pub minor_n: u32,
    pub minor_orbit: u64,
    /// θ₁₃-range T passed to the P_{N,T} parameters.
    pub minor_t: u32,
    pub minor_scan: u64,
    /// Difference targets attempted by approximate_target in the minor arc.
    pub densify_targets: u64,
    pub densify_grid: u64,
    pub densify_eta: f64,
}

impl Default for DeskConstants {
    fn default() -> Self {
        DeskConstants {
            eta_floor: 1e-3,
            major_threshold: 1e-12,
            varpi: 1e-12,
            c1: 130_000.0,
            c2_min: 0,
            c2_max: 40,
            grid_bound: 32,
            sweep_bound: 48,
            stabilize_cap: 1_000_000,
            minor_n: 3,
            minor_orbit: 12,
            minor_t: 1,
            minor_scan: 40,
            densify_targets: 4,
            densify_grid: 10,
            densify_eta: 0.45,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OrbitRecord<S: Scalar> {
    pub base: SolenoidPoint<S>,
    pub n: u64,
    /// (s, t, θ₅^s θ₁₃^t·base) in the order s-major.
    pub entries: Vec<(u64, u64, SolenoidPoint<S>)>,
}

fn precision_budget(x: &Padic) -> i64 {
    if x.is_exact_zero() {
        i64::MAX
    } else {
        x.abs_precision()
    }
}

pub fn orbit<S: Scalar>(p: &SolenoidPoint<S>, n: u64) -> Result<OrbitRecord<S>> {
    let need = n as i64 + PRECISION_FLOOR as i64;
    for (name, x) in [("5-adic", p.a()), ("13-adic", p.b())] {
        if precision_budget(x) < need {
            return Err(Error::Precision(format!("{name} precision {} below N + floor = {need}", x.abs_precision())));
        }
    }
    let pairs: Vec<(u64, u64)> = (0..=n).flat_map(|s| (0..=n).map(move |t| (s, t))).collect();
    let entries = pairs
        .par_iter()
        .map(|&(s, t)| p.act(s, t).map(|q| (s, t, q)))
        .collect::<Result<Vec<_>>>()?;
    Ok(OrbitRecord { base: p.clone(), n, entries })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosePair {
    pub n0: u64,
    pub s1: u64,
    pub t1: u64,
    pub s2: u64,
    pub t2: u64,
    pub r: GaussRat,
    pub gap: f64,
    pub gap_err: f64,
    /// Bucketing partition and the diameter of its cells.
    pub partition: PartitionSpec,
    pub cell_diameter: f64,
    /// Points whose cell was decided (floats near a boundary are skipped).
    pub bucketed: u64,
    /// Whether bucketed > cells, so the gap is at most the cell diameter.
    pub pigeonhole: bool,
}

/// Partition matched to `count` points: 5^n < count cells of minimal diameter.
fn bucket_partition(count: u64) -> Result<PartitionSpec> {
    let mut n = 0u32;
    while 5u64.pow(n + 1) < count && n + 1 <= 12 {
        n += 1;
    }
    let big_n = 5f64.powi(n as i32);
    let mut best: Option<(f64, i32, i32)> = None;
    for a in 0..=(n as i32 + 2) {
        for b in 0..=(n as i32 + 2) {
            let c = (2.0 * 5f64.powi(a) * 13f64.powi(b) / big_n).sqrt();
            let d = 5f64.powi(-a) + 13f64.powi(-b) + c;
            if best.map_or(true, |(bd, _, _)| d < bd) {
                best = Some((d, a, b));
            }
        }
    }
    let (_, a, b) = best.expect("nonempty search");
    let nc = (130.0 * 5f64.powi(a) * 13f64.powi(b) / big_n).sqrt();
    build_domain(n, 5f64.powi(-a), 13f64.powi(-b), nc)
}

fn coincide<S: Scalar>(x: &SolenoidPoint<S>, y: &SolenoidPoint<S>) -> bool {
    S::EXACT
        && x.z() == y.z()
        && x.a().sub(y.a()).is_zero()
        && x.b().sub(y.b()).is_zero()
}

/// Closest pair in Θ_{N₀}·p among points sharing a cell of a partition with fewer
/// cells than points.
pub fn close_pair<S: Scalar>(p: &SolenoidPoint<S>, n0: u64) -> Result<ClosePair> {
    if n0 < 2 {
        return Err(Error::Invalid(format!("N0 = {n0} must be at least 2")));
    }
    let orb = orbit(p, n0)?;
    let count = orb.entries.len() as u64;
    let spec = bucket_partition(count)?;
    let cells: Vec<Option<u64>> = orb
        .entries
        .par_iter()
        .map(|(_, _, q)| part_index(q, &spec).map(|o| o.map(|i| i.cell)))
        .collect::<Result<Vec<_>>>()?;
    let mut buckets: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, c) in cells.iter().enumerate() {
        if let Some(c) = c {
            buckets.entry(*c).or_default().push(i);
        }
    }
    let bucketed = buckets.values().map(|v| v.len() as u64).sum::<u64>();
    let pairs: Vec<(usize, usize)> = buckets
        .values()
        .flat_map(|v| (0..v.len()).flat_map(move |x| (x + 1..v.len()).map(move |y| (v[x], v[y]))))
        .collect();
    // exact coincidences first; they are cheap and common for torsion points
    let same = pairs.par_iter().filter(|(i, j)| coincide(&orb.entries[*i].2, &orb.entries[*j].2)).min();
    let (i, j, gap, gap_err) = if let Some(&(i, j)) = same {
        (i, j, 0.0, orb.entries[i].2.err() + orb.entries[j].2.err())
    } else {
        let found = pairs
            .par_iter()
            .map(|&(i, j)| distance(&orb.entries[i].2, &orb.entries[j].2).map(|d| (d.value, i, j, d.err)))
            .collect::<Result<Vec<_>>>()?;
        found
            .into_iter()
            .min_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))))
            .map(|(d, i, j, e)| (i, j, d, e))
            .ok_or_else(|| Error::Budget("no two orbit points share a cell".into()))?
    };
    let (s1, t1, _) = &orb.entries[i];
    let (s2, t2, _) = &orb.entries[j];
    let r = theta_power(*s1 as i64, *t1 as i64).sub(&theta_power(*s2 as i64, *t2 as i64));
    debug_assert!(!r.is_zero());
    Ok(ClosePair {
        n0,
        s1: *s1,
        t1: *t1,
        s2: *s2,
        t2: *t2,
        r,
        gap,
        gap_err,
        cell_diameter: spec.diam5 + spec.diam13 + spec.diam_c,
        pigeonhole: bucketed > spec.cells(),
        partition: spec,
        bucketed,
    })
}

/// q and the residual coordinates of x − q.
#[derive(Clone, Debug, Serialize)]
pub struct BallApprox {
    pub q: TorsionPoint,
    pub order: String,
    pub k: String,
    pub eta: f64,
    /// Distance from r·x to the closed unit complex ball.
    pub hypothesis: f64,
    pub dist: f64,
    pub err: f64,
    pub bound: f64,
    /// |a'|₅, |b'|₁₃ and z' of x − q = j(a', b', z').
    pub a_norm: f64,
    pub b_norm: f64,
    pub z: (f64, f64),
}

impl Serialize for TorsionPoint {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        s.serialize_str(&self.q().to_string())
    }
}

fn complex_of<S: Scalar>(w: &GaussRat) -> Complex<S> {
    Complex::new(S::from_rational(&w.re()), S::from_rational(&w.im()))
}

fn cmod<S: Scalar>(z: &Complex<S>) -> f64 {
    z.re.to_f64().hypot(z.im.to_f64())
}

/// Torsion point q of order at most height(r)² with dist(x, B̄_k(q)) ≤ (2k²+k)η,
/// assuming dist(r·x, B̄₁(0)) ≤ η.
pub fn rational_close_to_ball<S: Scalar>(
    x: &SolenoidPoint<S>,
    r: &GaussRat,
    eta: f64,
) -> Result<(BallApprox, Complex<S>)> {
    if r.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let (y, w1) = x.mul_element_with_shift(r)?;
    let zero = crate::solenoid::torsion_from_rational(&GaussRat::zero())?;
    let hyp = dist_to_complex_ball(&y, &zero, 1.0)?;
    if hyp.value > eta + hyp.err {
        return Err(Error::Invalid(format!("dist(r·x, unit ball) = {} exceeds eta = {eta}", hyp.value)));
    }
    let w2 = hyp.shift_value.clone();
    let prec = y.a().precision().max(y.b().precision()).max(DEFAULT_PRECISION) + 8;
    let a = y.a().sub(&embed(&w2, 5, prec));
    let b = y.b().sub(&embed(&w2, 13, prec));
    let z = y.z().clone() - complex_of::<S>(&w2);
    // x = j(a/ι₅r, b/ι₁₃r, z/r) + j(ι^Δ((w1 + w2)/r))
    let a1 = a.div(&embed(r, 5, prec))?;
    let b1 = b.div(&embed(r, 13, prec))?;
    let z1 = z * complex_of::<S>(&r.inv()?);
    let q0 = w1.add(&w2).div(r)?;
    let q = crate::solenoid::torsion_from_rational(&q0)?;
    let k = r.height();
    let kf = k.to_f64().unwrap_or(f64::INFINITY);
    if q.order() > &(&k * &k) {
        return Err(Error::Verification(format!("order {} exceeds height² = {}", q.order(), &k * &k)));
    }
    let d = dist_to_complex_ball(x, &q, kf)?;
    let bound = (2.0 * kf * kf + kf) * eta;
    if d.value > bound + d.err {
        return Err(Error::Verification(format!("dist(x, ball) = {} exceeds (2k²+k)η = {bound}", d.value)));
    }
    let approx = BallApprox {
        order: q.order().to_string(),
        q,
        k: k.to_string(),
        eta,
        hypothesis: hyp.value,
        dist: d.value,
        err: d.err,
        bound,
        a_norm: a1.norm_bound(),
        b_norm: b1.norm_bound(),
        z: (z1.re.to_f64(), z1.im.to_f64()),
    };
    Ok((approx, z1))
}

/// (s₀, s₁) with θ₅^{s₀+s₁}q = θ₅^{s₀}q, by cycle detection on the finite group (1/k)A/A.
pub fn torsion_stabilize(q: &TorsionPoint, cap: u64) -> Result<(u64, u64)> {
    let k = q.order().to_u64().unwrap_or(u64::MAX);
    let states = k.saturating_mul(k);
    if states > cap {
        return Err(Error::Budget(format!("order {k}: k² = {states} exceeds the cap {cap}")));
    }
    let th = theta5();
    let mut seen: HashMap<GaussRat, u64> = HashMap::new();
    let mut cur = q.clone();
    let mut j = 0u64;
    let (s0, s1) = loop {
        if let Some(&i) = seen.get(cur.q()) {
            break (i, j - i);
        }
        if j > states {
            return Err(Error::Verification("no cycle within k² steps".into()));
        }
        seen.insert(cur.q().clone(), j);
        cur = cur.mul_element(&th)?;
        j += 1;
    };
    // independent re-check: q' = θ₅^{s₀}q is fixed by θ₅^{s₁}
    let q1 = if s0 <= 64 { q.mul_element(&theta_power(s0 as i64, 0))? } else { iterate_theta5(q, s0)? };
    let q2 = if s1 <= 64 { q1.mul_element(&theta_power(s1 as i64, 0))? } else { iterate_theta5(&q1, s1)? };
    if q1 != q2 {
        return Err(Error::Verification(format!("θ₅^{s1} does not fix θ₅^{s0}q")));
    }
    Ok((s0, s1))
}

fn iterate_theta5(q: &TorsionPoint, n: u64) -> Result<TorsionPoint> {
    let th = theta5();
    let mut cur = q.clone();
    for _ in 0..n {
        cur = cur.mul_element(&th)?;
    }
    Ok(cur)
}

#[derive(Clone, Debug, Serialize)]
pub struct CircleWitness {
    pub z: (f64, f64),
    /// x(1) before the shift.
    pub value: f64,
    /// Distance of (x + j_C(z))(1) to the nearest integer.
    pub residual: f64,
    pub err: f64,
}

/// A point z on the circle |z| = ρ with x + j_C(z) on the line E*₁(0).
pub fn circle_hits_line<S: Scalar>(x: &SolenoidPoint<S>, rho: f64) -> Result<CircleWitness> {
    if !(rho >= 0.5 && rho.is_finite()) {
        return Err(Error::Invalid(format!("radius {rho} below 1/2")));
    }
    let (v, _) = x.char_eval(&GaussRat::one())?;
    let v = v.to_f64();
    // Re z ≡ −x(1) (mod 1), taking the representative of least modulus
    let re = if v <= 0.5 { -v } else { 1.0 - v };
    let im = (rho * rho - re * re).max(0.0).sqrt();
    let shifted = x.add(&SolenoidPoint::complex_offset(Complex::new(S::from_f64(re), S::from_f64(im)))?)?;
    let (w, err) = shifted.char_eval(&GaussRat::one())?;
    let (d, _) = crate::scalar::nearest_integer(&w);
    let err = err + 4.0 * f64::EPSILON * (rho + 1.0);
    let residual = d.to_f64();
    if residual > err {
        return Err(Error::Verification(format!("line residual {residual} exceeds error radius {err}")));
    }
    Ok(CircleWitness { z: (re, im), value: v, residual, err })
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DichotomyOutcome {
    NearTorsionBall { q: TorsionPoint, order: String, radius: f64, distance: f64, err: f64, delta: f64 },
    HitsPyjama { s: u64, t: u64, eps: f64, margin: f64, err: f64 },
}

impl DichotomyOutcome {
    /// Independent re-evaluation of the witness against p.
    pub fn verify<S: Scalar>(&self, p: &SolenoidPoint<S>) -> Result<bool> {
        match self {
            DichotomyOutcome::NearTorsionBall { q, radius, delta, .. } => {
                let d = dist_to_complex_ball(p, q, *radius)?;
                Ok(d.value <= delta + d.err)
            }
            DichotomyOutcome::HitsPyjama { s, t, eps, .. } => Ok(p.in_pyjama_theta(*eps, *s, *t)? == Certainty::Yes),
        }
    }
}

fn pyjama_hit<S: Scalar>(p: &SolenoidPoint<S>, s: u64, t: u64, eps: f64) -> Result<Option<DichotomyOutcome>> {
    let y = p.act(s, t)?;
    let (v, err) = y.char_eval(&GaussRat::one())?;
    let (d, _) = crate::scalar::nearest_integer(&v);
    if crate::solenoid::decide_below(&d, err, eps) == Certainty::Yes {
        return Ok(Some(DichotomyOutcome::HitsPyjama { s, t, eps, margin: eps - d.to_f64(), err }));
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct MajorArcReport {
    pub constants: DeskConstants,
    pub eps: f64,
    pub delta: f64,
    pub k: String,
    pub eta: f64,
    pub approx: BallApprox,
    /// |z'| in the decomposition x = q + w + σ.
    pub radius: f64,
    pub stabilizer: Option<(u64, u64)>,
    pub circle: Option<CircleWitness>,
    pub outcome: DichotomyOutcome,
}

/// The major-arc dichotomy for p with dist(r·p, B̄₁(0)) ≤ η.
pub fn major_arc<S: Scalar>(
    p: &SolenoidPoint<S>,
    r: &GaussRat,
    eps: f64,
    delta: f64,
    k: &BigInt,
    sweep: u64,
    c: &DeskConstants,
) -> Result<MajorArcReport> {
    if !(eps > 0.0 && eps < 0.5) || !(delta > 0.0) {
        return Err(Error::Invalid(format!("eps = {eps}, delta = {delta}")));
    }
    if &r.height() > k {
        return Err(Error::Invalid(format!("height(r) = {} exceeds k = {k}", r.height())));
    }
    let kf = k.to_f64().unwrap_or(f64::INFINITY);
    let eta = (delta / (3.0 * kf * kf)).min(c.eta_floor);
    let (approx, z1) = rational_close_to_ball(p, r, eta)?;
    let radius = cmod(&z1);
    if radius <= 0.5 {
        let d = dist_to_complex_ball(p, &approx.q, 0.5)?;
        if d.value > delta + d.err {
            return Err(Error::Verification(format!("distance {} to the half ball exceeds delta {delta}", d.value)));
        }
        let outcome = DichotomyOutcome::NearTorsionBall {
            order: approx.order.clone(),
            q: approx.q.clone(),
            radius: 0.5,
            distance: d.value,
            err: d.err,
            delta,
        };
        return Ok(MajorArcReport {
            constants: c.clone(),
            eps,
            delta,
            k: k.to_string(),
            eta,
            approx,
            radius,
            stabilizer: None,
            circle: None,
            outcome,
        });
    }
    let (s0, s1) = torsion_stabilize(&approx.q, c.stabilize_cap)?;
    let q1 = iterate_or_power(&approx.q, s0)?;
    let circle = circle_hits_line(&q1.point::<S>()?, radius).ok();
    let mut u = 0u64;
    let mut outcome = None;
    while s0 + s1 * u <= sweep {
        if let Some(o) = pyjama_hit(p, s0 + s1 * u, 0, eps)? {
            outcome = Some(o);
            break;
        }
        u += 1;
    }
    let outcome = outcome.ok_or_else(|| {
        Error::Budget(format!("no θ₅^(s₀+s₁u) with s₀ = {s0}, s₁ = {s1} up to {sweep} lands in the pyjama"))
    })?;
    Ok(MajorArcReport {
        constants: c.clone(),
        eps,
        delta,
        k: k.to_string(),
        eta,
        approx,
        radius,
        stabilizer: Some((s0, s1)),
        circle,
        outcome,
    })
}

fn iterate_or_power(q: &TorsionPoint, s: u64) -> Result<TorsionPoint> {
    if s <= 64 {
        q.mul_element(&theta_power(s as i64, 0))
    } else {
        iterate_theta5(q, s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxWitness {
    pub m: u64,
    pub t: u64,
    pub distance: f64,
    pub err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxReport {
    pub eta: f64,
    pub a_norm: f64,
    pub b_norm: f64,
    pub z_norm: f64,
    /// ϖ ≤ |a|₅ ≤ η/10, |b|₁₃ ≤ ϖ and |z| ≤ η/10.
    pub hypothesis_ok: bool,
    pub constructive: Option<ApproxWitness>,
    pub constructive_c2: Option<u32>,
    pub constructive_error: Option<String>,
    pub grid: Option<ApproxWitness>,
    pub grid_bound: u64,
    pub path: String,
    pub witness: ApproxWitness,
}

/// Smallest k with 5^k ≥ x (x > 0), repaired at exact powers.
fn ceil_log(x: f64, base: f64) -> i64 {
    let mut k = (x.ln() / base.ln()).ceil() as i64;
    while base.powi(k as i32 - 1) >= x {
        k -= 1;
    }
    while base.powi(k as i32) < x {
        k += 1;
    }
    k
}

/// t' with h^{t'} ≡ target (mod 5^n), for h ≡ 1 (mod 5^α) of exact level α, by lifting
/// one digit at a time.
fn lift_log(h: &BigInt, alpha: u32, target: &BigInt, n: u32) -> Option<BigInt> {
    let mut t = BigInt::zero();
    for j in alpha..n {
        let m = pow_p(5, j + 1);
        let step = pow_p(5, j - alpha);
        let goal = target.mod_floor_big(&m);
        let mut found = false;
        for d in 0..5u32 {
            let cand = &t + &step * d;
            if h.modpow(&cand, &m) == goal {
                t = cand;
                found = true;
                break;
            }
        }
        if !found {
            return None;
        }
    }
    Some(t)
}

trait ModFloor {
    fn mod_floor_big(&self, m: &BigInt) -> BigInt;
}

impl ModFloor for BigInt {
    fn mod_floor_big(&self, m: &BigInt) -> BigInt {
        num_integer::Integer::mod_floor(self, m)
    }
}

fn constructive_path<S: Scalar>(
    x: &SolenoidPoint<S>,
    target: &SolenoidPoint<S>,
    eta: f64,
    c: &DeskConstants,
) -> Result<(ApproxWitness, u32)> {
    let a = x.a();
    let ell = a
        .valuation()
        .ok_or_else(|| Error::Invalid("the 5-adic coordinate of x vanishes".into()))?;
    if ell < 0 {
        return Err(Error::Invalid("x is not canonical".into()));
    }
    let l4 = ceil_log(eta.powi(-4), 5.0);
    let l5 = ceil_log(eta.powi(-5), 5.0);
    let dom = build_domain(0, c.c1 * eta.powi(-3), eta / 10.0, eta / 10.0)?;
    let rep = representative(target, &dom)?;
    let prec = DEFAULT_PRECISION + 64;
    // ι₅(θ₁₃) has order kg mod 5, and h = ι₅(θ₁₃)^kg ≡ 1 to exact level α
    let g = embed(&theta13(), 5, prec);
    let g1 = g.residue(1)?;
    let mut kg = 1u32;
    let mut acc = g1.clone();
    while acc != BigInt::one() {
        acc = (&acc * &g1) % 5;
        kg += 1;
    }
    let hm1 = g.pow(kg as u64).sub(&Padic::from_integer(5, &BigInt::one(), prec));
    let alpha = hm1.valuation().ok_or_else(|| Error::Precision("θ₁₃^k − 1 vanishes at precision".into()))? as u32;
    let beta = ceil_log(5f64.powi(alpha as i32 + 1) / eta, 13.0).max(0) as u32;
    let th5 = embed(&theta5(), 5, prec);
    let mut last = String::from("no admissible exponent");
    for c2 in c.c2_min..=c.c2_max {
        let mml = l4 + c2 as i64;
        let m = ell + mml;
        if let Some(v) = rep.a.valuation() {
            if v < -mml {
                last = format!("C2 = {c2}: target 5-adic valuation {v} below ℓ − m = {}", -mml);
                continue;
            }
        }
        let n = (l5 + c2 as i64 + 1) as u32;
        let atilde = a.mul(&th5.pow(m as u64));
        let qbase = GaussRat::from_gauss(p5bar()).powi(-mml)?.scale_int(&BigInt::from(13u32).pow(beta));
        let qb5 = embed(&qbase, 5, prec);
        let u = rep.a.sub(&atilde).div(&qb5)?;
        let astar = match u.residue(alpha) {
            Ok(v) => v,
            Err(e) => {
                last = format!("C2 = {c2}: {e}");
                continue;
            }
        };
        let q = qbase.scale_int(&astar);
        let ratio = rep.a.sub(&embed(&q, 5, prec)).div(&atilde)?;
        let tr = ratio.residue(n)?;
        let hr = g.residue(n)?.modpow(&BigInt::from(kg), &pow_p(5, n));
        let Some(tp) = lift_log(&hr, alpha, &tr, n) else {
            last = format!("C2 = {c2}: target outside the θ₁₃ coset");
            continue;
        };
        let t = (&tp * kg).to_u64().ok_or_else(|| Error::Budget("t exceeds 64 bits".into()))?;
        if g.residue(n)?.modpow(&BigInt::from(t), &pow_p(5, n)) != tr {
            return Err(Error::Verification("discrete logarithm check failed".into()));
        }
        let y = match x.act(m as u64, t) {
            Ok(y) => y,
            Err(e) => {
                last = format!("C2 = {c2}: {e}");
                continue;
            }
        };
        let d = distance(target, &y)?;
        if d.value + d.err <= eta {
            return Ok((ApproxWitness { m: m as u64, t, distance: d.value, err: d.err }, c2));
        }
        last = format!("C2 = {c2}: distance {} above eta", d.value);
    }
    Err(Error::Budget(last))
}

fn canonical_size<S: Scalar>(d: &SolenoidPoint<S>) -> f64 {
    d.a().norm_bound() + d.b().norm_bound() + cmod(d.z()) + d.err()
}

/// First (s, t) in the order (s+t, s) with dist(target, θ₅^sθ₁₃^t x) ≤ η.
fn grid_path<S: Scalar>(x: &SolenoidPoint<S>, target: &SolenoidPoint<S>, eta: f64, bound: u64) -> Option<ApproxWitness> {
    for diag in 0..=2 * bound {
        let lo = diag.saturating_sub(bound);
        let hi = diag.min(bound);
        let hit = (lo..=hi).into_par_iter().find_map_first(|s| {
            let t = diag - s;
            let y = x.act(s, t).ok()?;
            let diff = target.sub(&y).ok()?;
            if canonical_size(&diff) > eta {
                return None;
            }
            let d = distance(target, &y).ok()?;
            (d.value + d.err <= eta).then(|| ApproxWitness { m: s, t, distance: d.value, err: d.err })
        });
        if hit.is_some() {
            return hit;
        }
    }
    None
}

/// (m, t) with dist(x', θ₅^m θ₁₃^t x) ≤ η by the constructive path and by grid search.
pub fn approximate_target<S: Scalar>(
    x: &SolenoidPoint<S>,
    target: &SolenoidPoint<S>,
    eta: f64,
    grid_bound: u64,
    c: &DeskConstants,
) -> Result<ApproxReport> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Invalid(format!("eta = {eta} outside (0, 1)")));
    }
    let a_norm = x.a().norm_bound();
    let b_norm = x.b().norm_bound();
    let z_norm = cmod(x.z());
    let hypothesis_ok = a_norm >= c.varpi && a_norm <= eta / 10.0 && b_norm <= c.varpi && z_norm <= eta / 10.0;
    let (constructive, constructive_c2, constructive_error) = match constructive_path(x, target, eta, c) {
        Ok((w, c2)) => (Some(w), Some(c2), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    let grid = if grid_bound > 0 { grid_path(x, target, eta, grid_bound) } else { None };
    let key = |w: &ApproxWitness| (w.m as u128 + w.t as u128, w.m, w.t);
    let (path, witness) = match (&constructive, &grid) {
        (Some(a), Some(b)) => {
            if key(b) <= key(a) {
                ("grid", b.clone())
            } else {
                ("constructive", a.clone())
            }
        }
        (Some(a), None) => ("constructive", a.clone()),
        (None, Some(b)) => ("grid", b.clone()),
        (None, None) => {
            return Err(Error::Budget(format!(
                "constructive path: {}; grid up to {grid_bound}: no witness",
                constructive_error.unwrap_or_default()
            )))
        }
    };
    Ok(ApproxReport {
        eta,
        a_norm,
        b_norm,
        z_norm,
        hypothesis_ok,
        constructive,
        constructive_c2,
        constructive_error,
        grid,
        grid_bound,
        path: path.into(),
        witness,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MinorArcReport {
    pub constants: DeskConstants,
    pub eps: f64,
    pub delta: f64,
    /// |a|₅ + |b|₁₃ of r·p.
    pub padic_size: f64,
    pub complex_size: f64,
    pub partition: PartitionSpec,
    pub cells: u64,
    pub occupied: u64,
    pub difference_cells: u64,
    /// √|𝒫|/4.
    pub threshold: f64,
    /// Difference pairs whose cell fell outside the four predicted cells.
    pub spread_violations: u64,
    /// Whether |cells(Z − Z)| ≤ 4·|cells(Z)|².
    pub counting_ok: bool,
    pub densify_attempted: u64,
    pub densify_hits: u64,
    pub outcome: DichotomyOutcome,
}

/// Minor-arc pipeline: occupancy of Θ_K·p in the partition P_{N,T}, differences, and
/// a scan of the extended orbit for a pyjama hit.
pub fn minor_arc<S: Scalar>(p: &SolenoidPoint<S>, pair: &ClosePair, eps: f64, delta: f64, c: &DeskConstants) -> Result<MinorArcReport> {
    let y = p.act(pair.s1, pair.t1)?.sub(&p.act(pair.s2, pair.t2)?)?;
    let zero = crate::solenoid::torsion_from_rational(&GaussRat::zero())?;
    let padic_size = dist_to_complex_ball(&y, &zero, 1e9)?.value;
    if padic_size < 2.0 * c.varpi {
        return Err(Error::Invalid(format!("|a|₅ + |b|₁₃ = {padic_size} below 2ϖ")));
    }
    let complex_size = crate::solenoid::norm(&y).value;
    let spec = pnt_params(c.minor_n, c.minor_t, delta)?;
    let orb = orbit(p, c.minor_orbit)?;
    let idx = orb
        .entries
        .par_iter()
        .map(|(_, _, q)| part_index(q, &spec))
        .collect::<Result<Vec<_>>>()?;
    let occupied: BTreeSet<u64> = idx.iter().flatten().map(|i| i.cell).collect();
    let sample: Vec<usize> = (0..orb.entries.len()).filter(|&i| idx[i].is_some()).take(48).collect();
    let pairs: Vec<(usize, usize)> =
        sample.iter().enumerate().flat_map(|(x, &i)| sample[x + 1..].iter().map(move |&j| (i, j))).collect();
    let diffs = pairs
        .par_iter()
        .map(|&(i, j)| {
            let d = orb.entries[i].2.sub(&orb.entries[j].2)?;
            let di = part_index(&d, &spec)?;
            let ok = match (&di, &idx[i], &idx[j]) {
                (Some(di), Some(wi), Some(wj)) => {
                    part_difference_spread(&spec, wi, wj).iter().any(|c| c.cell == di.cell)
                }
                _ => true,
            };
            Ok((di.map(|x| x.cell), ok))
        })
        .collect::<Result<Vec<_>>>()?;
    let diff_cells: BTreeSet<u64> = diffs.iter().filter_map(|(c, _)| *c).collect();
    let spread_violations = diffs.iter().filter(|(_, ok)| !ok).count() as u64;
    let occ = occupied.len() as u64;
    let counting_ok = diff_cells.len() as u64 <= 4 * occ * occ;
    // densify: approximate a few torsion cell representatives by orbit points of r·p
    let group = cyclic_iso(c.minor_n)?;
    let mut hits = 0;
    let tries = c.densify_targets.min(group.order());
    for m in 0..tries {
        let target = group.point(m)?.point::<S>()?;
        if approximate_target(&y, &target, c.densify_eta, c.densify_grid, c).is_ok() {
            hits += 1;
        }
    }
    let bound = c.minor_scan;
    let mut outcome = None;
    'scan: for diag in 0..=2 * bound {
        let lo = diag.saturating_sub(bound);
        for s in lo..=diag.min(bound) {
            if let Some(o) = pyjama_hit(p, s, diag - s, eps)? {
                outcome = Some(o);
                break 'scan;
            }
        }
    }
    let outcome = outcome.ok_or_else(|| {
        Error::Budget(format!("no pyjama hit in Θ_{bound}·p; occupied {occ} of {} cells", spec.cells()))
    })?;
    Ok(MinorArcReport {
        constants: c.clone(),
        eps,
        delta,
        padic_size,
        complex_size,
        cells: spec.cells(),
        threshold: (spec.cells() as f64).sqrt() / 4.0,
        partition: spec,
        occupied: occ,
        difference_cells: diff_cells.len() as u64,
        spread_violations,
        counting_ok,
        densify_attempted: tries,
        densify_hits: hits,
        outcome,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DemoReport {
    pub eps: f64,
    pub delta: f64,
    pub pair: ClosePair,
    pub padic_size: f64,
    pub branch: String,
    pub major: Option<MajorArcReport>,
    pub minor: Option<MinorArcReport>,
    pub outcome: DichotomyOutcome,
    pub verified: bool,
}

/// Close pair, then the major or minor arc according to the p-adic size of r·p.
pub fn rationality_demo<S: Scalar>(p: &SolenoidPoint<S>, eps: f64, delta: f64, n0: u64, c: &DeskConstants) -> Result<DemoReport> {
    if n0 > 40 {
        return Err(Error::Invalid(format!("N0 = {n0} beyond desk scale (40)")));
    }
    let pair = close_pair(p, n0)?;
    let y = p.act(pair.s1, pair.t1)?.sub(&p.act(pair.s2, pair.t2)?)?;
    let zero = crate::solenoid::torsion_from_rational(&GaussRat::zero())?;
    let padic_size = dist_to_complex_ball(&y, &zero, 1e9)?.value;
    let (branch, major, minor, outcome) = if padic_size <= c.major_threshold {
        let rep = major_arc(p, &pair.r, eps, delta, &pair.r.height(), c.sweep_bound, c)?;
        let o = rep.outcome.clone();
        ("major", Some(rep), None, o)
    } else {
        let rep = minor_arc(p, &pair, eps, delta, c)?;
        let o = rep.outcome.clone();
        ("minor", None, Some(rep), o)
    };
    let verified = outcome.verify(p)?;
    if !verified {
        return Err(Error::Verification("dichotomy witness failed re-verification".into()));
    }
    Ok(DemoReport { eps, delta, pair, padic_size, branch: branch.into(), major, minor, outcome, verified })
}

/// A random pair (x, x') for approximate_target with x meeting its hypothesis at η:
/// |a|₅ = 5^{-v} ≤ η/10, b = 0 and |z| ≤ 10⁻³.
pub fn random_approx_pair<R: rand::Rng>(
    rng: &mut R,
    eta: f64,
) -> Result<(SolenoidPoint<f64>, SolenoidPoint<f64>)> {
    let vmin = ceil_log(10.0 / eta, 5.0).max(1) as u32;
    let v = rng.gen_range(vmin..vmin + 3);
    let unit: u64 = rng.gen_range(1..1_000_000_000u64) * 5 + rng.gen_range(1..5);
    let a = Padic::from_integer(5, &(BigInt::from(5u64).pow(v) * unit), DEFAULT_PRECISION);
    let zr = rng.gen_range(-7e-4..7e-4);
    let zi = rng.gen_range(-7e-4..7e-4);
    let x = crate::solenoid::make_point::<f64>(a, Padic::zero(13), Complex::new(zr, zi))?;
    let ta = Padic::from_integer(5, &BigInt::from(rng.gen::<u64>()), DEFAULT_PRECISION);
    let tb = Padic::from_integer(13, &BigInt::from(rng.gen::<u64>()), DEFAULT_PRECISION);
    let tz = Complex::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    let target = crate::solenoid::make_point::<f64>(ta, tb, tz)?;
    Ok((x, target))
}

/// The three bundled demonstration points: 0, the 3-torsion point 1/3 and a generic point.
pub fn bundled_points() -> Result<Vec<(&'static str, SolenoidPoint<BigRational>)>> {
    let generic = crate::solenoid::make_point(
        Padic::from_integer(5, &"3141592653589793238462643383279502884197".parse::<BigInt>().expect("digits"), 64),
        Padic::from_integer(13, &"2718281828459045235360287471352662497757".parse::<BigInt>().expect("digits"), 64),
        Complex::new(crate::scalar::rat(1, 7), crate::scalar::rat(2, 9)),
    )?;
    Ok(vec![
        ("zero", SolenoidPoint::zero()),
        ("torsion_third", SolenoidPoint::from_rational(&GaussRat::from_ratio(1, 3))?),
        ("generic", generic),
    ])
}

/// A real number mod 1, exact or in double-double.
#[derive(Clone, Debug)]
pub enum RealMod1 {
    Rational(BigRational),
    Real(Dd),
}

#[derive(Clone, Debug, Serialize)]
pub struct Times23Report {
    pub n: u32,
    pub m: u64,
    pub points: u64,
    pub occupied: u64,
    pub max_gap: f64,
}

/// Occupancy of {2^s 3^t x mod 1 : 0 ≤ s, t ≤ N} in the M-interval partition, and its
/// largest empty arc.
pub fn times23_orbit_density(x: &RealMod1, n: u32, m: u64) -> Result<Times23Report> {
    if m == 0 {
        return Err(Error::Invalid("M must be positive".into()));
    }
    let mut fracs: Vec<BigRational> = Vec::with_capacity(((n + 1) * (n + 1)) as usize);
    for s in 0..=n {
        for t in 0..=n {
            let k = BigInt::from(2u32).pow(s) * BigInt::from(3u32).pow(t);
            let f = match x {
                RealMod1::Rational(q) => {
                    let v = q * BigRational::from_integer(k);
                    &v - BigRational::from_integer(v.floor().to_integer())
                }
                RealMod1::Real(d) => {
                    let v = *d * Dd::from_ratio(&BigRational::from_integer(k));
                    Scalar::to_rational(&(v - v.floor()))
                }
            };
            fracs.push(f);
        }
    }
    fracs.sort();
    fracs.dedup();
    let mb = BigRational::from_integer(BigInt::from(m));
    let cells: BTreeSet<BigInt> = fracs.iter().map(|f| (f * &mb).floor().to_integer()).collect();
    let mut max_gap = BigRational::zero();
    for w in fracs.windows(2) {
        let g = &w[1] - &w[0];
        if g > max_gap {
            max_gap = g;
        }
    }
    let wrap = BigRational::one() - fracs.last().expect("nonempty") + &fracs[0];
    if wrap > max_gap {
        max_gap = wrap;
    }
    Ok(Times23Report {
        n,
        m,
        points: ((n + 1) * (n + 1)) as u64,
        occupied: cells.len() as u64,
        max_gap: crate::scalar::rational_to_f64(&max_gap),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothGaps {
    pub x: u64,
    pub count: u64,
    pub prefix: Vec<u64>,
    /// max over k ≥ 2 of (a_{k+1} − a_k)/a_k, as numerator/denominator.
    pub max_gap: (u64, u64),
    pub argmax: u64,
    /// The same maximum restricted to a_k ≥ √X.
    pub tail_gap: (u64, u64),
    pub tail_argmax: u64,
}

/// Gaps between consecutive 3-smooth numbers 2^s 3^t ≤ X.
pub fn smooth_gaps(x: u64) -> Result<SmoothGaps> {
    if x < 3 || x > 1_000_000_000 {
        return Err(Error::Invalid(format!("X = {x} outside [3, 10^9]")));
    }
    let mut a = Vec::new();
    let mut p2 = 1u64;
    while p2 <= x {
        let mut v = p2;
        while v <= x {
            a.push(v);
            v *= 3;
        }
        p2 *= 2;
    }
    a.sort_unstable();
    let better = |g: (u64, u64), best: (u64, u64)| (g.0 as u128) * (best.1 as u128) > (best.0 as u128) * (g.1 as u128);
    let mut best = (0u64, 1u64);
    let mut argmax = 0;
    let mut tail = (0u64, 1u64);
    let mut tail_arg = 0;
    let root = (x as f64).sqrt();
    // k ≥ 2 in 1-based indexing
    for k in 1..a.len().saturating_sub(1) {
        let g = (a[k + 1] - a[k], a[k]);
        if better(g, best) {
            best = g;
            argmax = a[k];
        }
        if a[k] as f64 >= root && better(g, tail) {
            tail = g;
            tail_arg = a[k];
        }
    }
    let reduce = |(n, d): (u64, u64)| {
        let g = num_integer::gcd(n, d).max(1);
        (n / g, d / g)
    };
    Ok(SmoothGaps {
        x,
        count: a.len() as u64,
        prefix: a.iter().take(8).copied().collect(),
        max_gap: reduce(best),
        argmax,
        tail_gap: reduce(tail),
        tail_argmax: tail_arg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use crate::solenoid::torsion_from_rational;

    type Ex = SolenoidPoint<BigRational>;

    fn third() -> Ex {
        SolenoidPoint::from_rational(&GaussRat::from_ratio(1, 3)).unwrap()
    }

    fn offset(p: &Ex, re: BigRational) -> Ex {
        p.add(&SolenoidPoint::complex_offset(Complex::new(re, BigRational::zero())).unwrap()).unwrap()
    }

    #[test]
    fn orbit_of_torsion_keeps_order() {
        let orb = orbit(&third(), 4).unwrap();
        assert_eq!(orb.entries.len(), 25);
        let mut distinct: Vec<&Ex> = Vec::new();
        for (_, _, q) in &orb.entries {
            if !distinct.iter().any(|d| distance(d, q).unwrap().value == 0.0) {
                distinct.push(q);
            }
        }
        assert!(distinct.len() <= 9);
        for (_, _, q) in &orb.entries {
            let three = q.mul_element(&GaussRat::from_int(3)).unwrap();
            assert_eq!(crate::solenoid::norm(&three).value, 0.0);
        }
    }

    #[test]
    fn close_pairs_of_torsion_and_zero() {
        let cp = close_pair(&third(), 6).unwrap();
        assert_eq!(cp.gap, 0.0);
        assert!(!cp.r.is_zero());
        let cp0 = close_pair(&Ex::zero(), 3).unwrap();
        assert_eq!((cp0.gap, cp0.s1, cp0.t1, cp0.s2, cp0.t2), (0.0, 0, 0, 0, 1));
    }

    #[test]
    fn ball_approximation_follows_the_lemma() {
        let x = offset(&third(), rat(1, 5));
        let (b, z) = rational_close_to_ball(&x, &GaussRat::from_int(3), 1e-9).unwrap();
        assert!(b.q.order() <= &BigInt::from(9));
        assert_eq!(b.dist, 0.0);
        assert_eq!(cmod(&z), 0.2);
        let t = torsion_from_rational(&GaussRat::from_ratio(2, 7)).unwrap();
        let (b, _) = rational_close_to_ball(&t.point::<BigRational>().unwrap(), &GaussRat::from_int(7), 0.0).unwrap();
        assert_eq!(b.dist, 0.0);
        assert_eq!(b.q, t);
    }

    #[test]
    fn stabilizer_of_third() {
        let q = torsion_from_rational(&GaussRat::from_ratio(1, 3)).unwrap();
        let (s0, s1) = torsion_stabilize(&q, 1_000_000).unwrap();
        assert_eq!((s0, s1), (0, 4));
        let z = torsion_from_rational(&GaussRat::zero()).unwrap();
        assert_eq!(torsion_stabilize(&z, 10).unwrap(), (0, 1));
    }

    #[test]
    fn circle_meets_line() {
        let w = circle_hits_line(&Ex::zero(), 0.5).unwrap();
        assert_eq!(w.z.0, 0.0);
        assert!((w.z.1 - 0.5).abs() < 1e-15);
        assert!(circle_hits_line(&Ex::zero(), 0.4).is_err());
        // x(1) = 0.3
        let x = SolenoidPoint::<f64>::complex_offset(Complex::new(0.3, 0.0)).unwrap();
        let (v, _) = x.char_eval(&GaussRat::one()).unwrap();
        assert!((v - 0.3).abs() < 1e-12);
        let w = circle_hits_line(&x, 0.7).unwrap();
        assert!((w.z.0 + 0.3).abs() < 1e-12 && (w.z.1 - 0.4f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn major_arc_examples() {
        let c = DeskConstants::default();
        let three = GaussRat::from_int(3);
        let near = major_arc(&offset(&third(), rat(3, 10)), &three, 0.1, 0.05, &BigInt::from(3), 48, &c).unwrap();
        assert!(matches!(near.outcome, DichotomyOutcome::NearTorsionBall { .. }));
        let exact = major_arc(&third(), &three, 0.1, 0.05, &BigInt::from(3), 48, &c).unwrap();
        match exact.outcome {
            DichotomyOutcome::NearTorsionBall { distance, .. } => assert_eq!(distance, 0.0),
            _ => panic!("expected the torsion branch"),
        }
        let r = GaussRat::from_int(3).div(&GaussRat::from_gauss(p5bar().pow(2))).unwrap();
        let p = offset(&third(), rat(4, 5));
        let far = major_arc(&p, &r, 0.1, 0.05, &r.height(), 48, &c).unwrap();
        assert!((far.radius - 0.8).abs() < 1e-12);
        assert!(matches!(far.outcome, DichotomyOutcome::HitsPyjama { .. }));
        assert!(far.outcome.verify(&p).unwrap());
    }

    #[test]
    fn lifting_logarithm() {
        let m = pow_p(5, 8);
        let h = BigInt::from(1 + 25 * 3);
        let goal = h.modpow(&BigInt::from(12345), &m);
        let t = lift_log(&h, 2, &goal, 8).unwrap();
        assert_eq!(h.modpow(&t, &m), goal);
    }

    #[test]
    fn approximate_identity_and_zero() {
        let c = DeskConstants::default();
        let x = crate::solenoid::make_point::<f64>(
            Padic::from_integer(5, &BigInt::from(5 * 7), 64),
            Padic::zero(13),
            Complex::new(0.0, 0.0),
        )
        .unwrap();
        let same = approximate_target(&x, &x, 0.1, 4, &c).unwrap();
        assert_eq!((same.witness.m, same.witness.t), (0, 0));
        assert_eq!(same.path, "grid");
        let rep = approximate_target(&x, &SolenoidPoint::zero(), 0.3, 8, &c).unwrap();
        assert!(rep.witness.distance <= 0.3);
        assert!(rep.constructive.is_some(), "{:?}", rep.constructive_error);
    }

    #[test]
    fn times23_examples() {
        let z = times23_orbit_density(&RealMod1::Rational(BigRational::zero()), 5, 35).unwrap();
        assert_eq!((z.occupied, z.max_gap), (1, 1.0));
        let r = times23_orbit_density(&RealMod1::Rational(rat(1, 7)), 3, 35).unwrap();
        assert!(r.occupied <= 7);
    }

    #[test]
    fn smooth_prefix() {
        let g = smooth_gaps(100).unwrap();
        assert_eq!(g.prefix, vec![1, 2, 3, 4, 6, 8, 9, 12]);
        assert_eq!(g.max_gap, (1, 2));
        assert_eq!(g.argmax, 2);
    }
}
