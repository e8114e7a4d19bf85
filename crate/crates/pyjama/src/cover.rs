//! Rotation sets, the integer-combination solver on V(n), and interval-certified
//! coverage of planar boxes by rotated (or dilated) stripes.

use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, Ordering};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{theta_power, GaussInt, GaussRat};
use crate::report::{display, display_vec, fixed};
use crate::scalar::dd::TWO_PI;
use crate::scalar::{rat, Dd, Scalar};

pub const MAX_THETA_N: u32 = 200;
/// Cap on |Θ_N·V(n)|.
pub const MAX_ROTATIONS: u64 = 1_000_000;
/// Subtrees above this depth are forked onto the rayon pool.
pub const PARALLEL_DEPTH: u32 = 8;
/// Subdivision levels tried when a gap box is not inside a single ball.
pub const CLASSIFY_SPLITS: u32 = 3;

fn enclosure_radius() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(10u32).pow(25))
}

fn around(x: Dd) -> (BigRational, BigRational) {
    let r = x.to_rational();
    let w = enclosure_radius();
    (&r - &w, &r + &w)
}

fn sqrt_enclosure(t: &BigRational) -> (BigRational, BigRational) {
    let (lo, hi) = around(Dd::from_ratio(t).sqrt());
    let lo = if lo.is_negative() { BigRational::zero() } else { lo };
    assert!(&(&lo * &lo) <= t && t <= &(&hi * &hi), "square root enclosure failed");
    (lo, hi)
}

/// α_m = arccos(1/(2m))/(2π) in turns, refined by Newton steps in double-double.
pub fn alpha_turns(m: u32) -> Dd {
    if m == 1 {
        return Dd::from_ratio(&rat(1, 6));
    }
    let c = Dd::from_ratio(&rat(1, 2 * m as i64));
    let mut a = Dd::from_f64((0.5 / m as f64).acos() / (2.0 * std::f64::consts::PI));
    for _ in 0..3 {
        let (co, si) = Dd::cos_sin_turns(&a.to_rational());
        a = a + (co - c) / (TWO_PI * si);
    }
    a
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RotationKind {
    Rational(GaussRat),
    /// e(sign·α_m).
    Algebraic { m: u32, sign: i8 },
    /// ψ·e(sign·α_m).
    Product { psi: GaussRat, m: u32, sign: i8 },
    /// e(turns).
    Angle(BigRational),
    /// Real dilation z ↦ v·z, used for lonely-runner stripes.
    Dilation(i64),
}

/// A multiplier θ with rational enclosures of Re θ and Im θ.
#[derive(Clone, Debug)]
pub struct Rotation {
    pub kind: RotationKind,
    pub re: (BigRational, BigRational),
    pub im: (BigRational, BigRational),
    /// Argument in turns.
    pub angle: f64,
}

fn exact(q: BigRational) -> (BigRational, BigRational) {
    (q.clone(), q)
}

fn sign_char(sign: i8) -> char {
    if sign > 0 {
        '+'
    } else {
        '-'
    }
}

impl Rotation {
    pub fn rational(q: GaussRat) -> Self {
        let (x, y) = q.to_f64();
        Rotation {
            re: exact(q.re()),
            im: exact(q.im()),
            angle: y.atan2(x) / (2.0 * std::f64::consts::PI),
            kind: RotationKind::Rational(q),
        }
    }

    pub fn algebraic(m: u32, sign: i8) -> Self {
        let m = m.max(1);
        let t = BigRational::one() - rat(1, 4 * (m as i64) * (m as i64));
        let (lo, hi) = sqrt_enclosure(&t);
        let im = if sign > 0 { (lo, hi) } else { (-hi, -lo) };
        Rotation {
            kind: RotationKind::Algebraic { m, sign },
            re: exact(rat(1, 2 * m as i64)),
            im,
            angle: sign as f64 * alpha_turns(m).to_f64(),
        }
    }

    pub fn product(psi: GaussRat, m: u32, sign: i8) -> Self {
        let v = Rotation::algebraic(m, sign);
        let pr = Interval::<BigRational>::point(psi.re());
        let pi = Interval::<BigRational>::point(psi.im());
        let vr = Interval::new(v.re.0.clone(), v.re.1.clone());
        let vi = Interval::new(v.im.0.clone(), v.im.1.clone());
        let re = pr.mul(&vr).sub(&pi.mul(&vi));
        let im = pr.mul(&vi).add(&pi.mul(&vr));
        let psi_angle = Rotation::rational(psi.clone()).angle;
        Rotation {
            kind: RotationKind::Product { psi, m, sign },
            re: (re.lo, re.hi),
            im: (im.lo, im.hi),
            angle: psi_angle + v.angle,
        }
    }

    pub fn angle(turns: BigRational) -> Self {
        let f = &turns - turns.floor();
        let four = &f * BigRational::from_integer(4.into());
        let (re, im) = if four.is_integer() {
            let q = four.to_integer().to_i64().unwrap_or(0);
            let (c, s) = [(1, 0), (0, 1), (-1, 0), (0, -1)][q as usize % 4];
            (exact(rat(c, 1)), exact(rat(s, 1)))
        } else {
            let (c, s) = Dd::cos_sin_turns(&turns);
            (around(c), around(s))
        };
        Rotation { angle: crate::scalar::rational_to_f64(&turns), kind: RotationKind::Angle(turns), re, im }
    }

    pub fn dilation(v: i64) -> Self {
        Rotation { kind: RotationKind::Dilation(v), re: exact(rat(v, 1)), im: exact(BigRational::zero()), angle: 0.0 }
    }

    pub fn is_exact(&self) -> bool {
        self.re.0 == self.re.1 && self.im.0 == self.im.1
    }

    pub fn label(&self) -> String {
        match &self.kind {
            RotationKind::Rational(q) => q.to_string(),
            RotationKind::Algebraic { m, sign } => format!("e({}alpha_{m})", sign_char(*sign)),
            RotationKind::Product { psi, m, sign } => format!("({psi})*e({}alpha_{m})", sign_char(*sign)),
            RotationKind::Angle(t) => format!("e({t})"),
            RotationKind::Dilation(v) => format!("x{v}"),
        }
    }

    /// Upper bound on ||θ|² − 1| from the enclosures.
    pub fn unit_defect(&self) -> BigRational {
        let re = Interval::new(self.re.0.clone(), self.re.1.clone());
        let im = Interval::new(self.im.0.clone(), self.im.1.clone());
        let n = re.mul(&re).add(&im.mul(&im));
        let one = BigRational::one();
        let a = (&n.lo - &one).abs();
        let b = (&n.hi - &one).abs();
        a.max(b)
    }

    /// Midpoint of the enclosure in double-double.
    pub fn approx(&self) -> (Dd, Dd) {
        let two = BigRational::from_integer(2.into());
        (Dd::from_ratio(&((&self.re.0 + &self.re.1) / &two)), Dd::from_ratio(&((&self.im.0 + &self.im.1) / &two)))
    }
}

impl Serialize for Rotation {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        let mut st = s.serialize_struct("Rotation", 2)?;
        st.serialize_field("label", &self.label())?;
        st.serialize_field("angle", &fixed(self.angle))?;
        st.end()
    }
}

/// Θ_N = {θ₅^s θ₁₃^t : 0 ≤ s, t ≤ N}.
pub fn theta_set(n: u32) -> Result<Vec<Rotation>> {
    if n > MAX_THETA_N {
        return Err(Error::Invalid(format!("N = {n} exceeds {MAX_THETA_N}")));
    }
    let mut out = Vec::with_capacity(((n + 1) * (n + 1)) as usize);
    for s in 0..=n as i64 {
        for t in 0..=n as i64 {
            let q = theta_power(s, t);
            if q.num().norm() != q.den() * q.den() {
                return Err(Error::Verification(format!("{q} is not of unit modulus")));
            }
            out.push(Rotation::rational(q));
        }
    }
    Ok(out)
}

/// V(n) = {1} ∪ {e(±α_m) : 1 ≤ m ≤ n}.
pub fn v_set(n: u32) -> Result<Vec<Rotation>> {
    if n == 0 {
        return Err(Error::Invalid("V(n) needs n >= 1".into()));
    }
    let mut out = vec![Rotation::rational(GaussRat::one())];
    for m in 1..=n {
        out.push(Rotation::algebraic(m, 1));
        out.push(Rotation::algebraic(m, -1));
    }
    Ok(out)
}

/// Θ_N·V(n), deduplicated symbolically.
pub fn assemble_cover(n_theta: u32, n: u32) -> Result<Vec<Rotation>> {
    let size = (n_theta as u64 + 1).pow(2) * (2 * n as u64 + 1);
    if size > MAX_ROTATIONS {
        return Err(Error::Budget(format!("{size} rotations exceed the cap {MAX_ROTATIONS}")));
    }
    let thetas = theta_set(n_theta)?;
    let vs = v_set(n)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for psi in &thetas {
        let RotationKind::Rational(q) = &psi.kind else { unreachable!() };
        for v in &vs {
            let r = match &v.kind {
                RotationKind::Algebraic { m, sign } if *q == GaussRat::one() => Rotation::algebraic(*m, *sign),
                RotationKind::Algebraic { m, sign } => Rotation::product(q.clone(), *m, *sign),
                _ => psi.clone(),
            };
            if seen.insert(r.kind.clone()) {
                out.push(r);
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Integer combinations on V(n)

#[derive(Clone, Debug, Serialize)]
pub struct LambdaEntry {
    pub m: u32,
    pub sign: i8,
    pub class: u32,
    #[serde(serialize_with = "display")]
    pub lambda: BigInt,
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaSolution {
    pub n: u32,
    /// classes[m−1] = [class of e(+α_m), class of e(−α_m)].
    pub classes: Vec<[u32; 2]>,
    #[serde(serialize_with = "display_vec")]
    pub beta: Vec<BigInt>,
    #[serde(serialize_with = "display_vec")]
    pub gamma: Vec<BigInt>,
    pub lambdas: Vec<LambdaEntry>,
    pub exchange_steps: u64,
    pub sum_identity: bool,
    pub divisibility: bool,
    pub bound: bool,
    pub no_move_left: bool,
    pub float_residual: f64,
}

impl LambdaSolution {
    pub fn verified(&self) -> bool {
        self.sum_identity && self.divisibility && self.bound && self.no_move_left
    }

    pub fn lambda(&self, m: u32, sign: i8) -> &BigInt {
        &self.lambdas.iter().find(|e| e.m == m && e.sign == sign).expect("entry").lambda
    }
}

pub fn random_classes<R: Rng>(n: u32, rng: &mut R) -> Vec<[u32; 2]> {
    (0..n).map(|_| [rng.gen_range(1..=n), rng.gen_range(1..=n)]).collect()
}

fn move_applies(gamma: &[BigInt], bound: &BigInt) -> Option<(usize, usize)> {
    let (k, gk) = gamma.iter().enumerate().fold((0, &gamma[0]), |a, (i, g)| if g > a.1 { (i, g) } else { a });
    let (l, gl) = gamma.iter().enumerate().fold((0, &gamma[0]), |a, (i, g)| if g < a.1 { (i, g) } else { a });
    (gk >= bound && *gl <= -bound).then_some((k, l))
}

/// Integers λ_v on V(n)∖{1} with Σ λ_v v = 1 and class(v) | λ_v.
pub fn irr_trick(n: u32, classes: &[[u32; 2]]) -> Result<LambdaSolution> {
    if n == 0 || classes.len() != n as usize {
        return Err(Error::Invalid(format!("need {n} class pairs, got {}", classes.len())));
    }
    if classes.iter().flatten().any(|&c| c == 0 || c > n) {
        return Err(Error::Invalid(format!("class indices must lie in 1..={n}")));
    }
    let lcms: Vec<BigInt> = classes.iter().map(|c| BigInt::from(c[0].lcm(&c[1]))).collect();
    let scale: Vec<BigInt> = lcms.iter().enumerate().map(|(i, l)| BigInt::from(i as u32 + 1).gcd(l)).collect();
    let beta: Vec<BigInt> = lcms.iter().zip(&scale).map(|(l, g)| l / g).collect();

    let mut gamma = vec![BigInt::zero(); n as usize];
    gamma[0] = BigInt::one();
    let mut g = beta[0].clone();
    for k in 1..n as usize {
        let e = g.extended_gcd(&beta[k]);
        for x in gamma.iter_mut().take(k) {
            *x *= &e.x;
        }
        gamma[k] = e.y;
        g = e.gcd;
    }
    if !g.is_one() {
        return Err(Error::Verification(format!("gcd of the beta_m is {g}, not 1")));
    }

    let bound = BigInt::from(n) * BigInt::from(n);
    let mut steps = 0u64;
    while let Some((k, l)) = move_applies(&gamma, &bound) {
        let a: BigInt = (&gamma[k] - &bound) / &beta[l] + 1;
        let b = (-&gamma[l] - &bound) / &beta[k] + 1;
        let j = a.min(b);
        gamma[k] -= &j * &beta[l];
        gamma[l] += &j * &beta[k];
        steps += 1;
    }

    let mut lambdas = Vec::with_capacity(2 * n as usize);
    for m in 1..=n {
        let i = (m - 1) as usize;
        let lam = &gamma[i] * BigInt::from(m) * &lcms[i] / &scale[i];
        for (j, sign) in [(0usize, 1i8), (1, -1)] {
            lambdas.push(LambdaEntry { m, sign, class: classes[i][j], lambda: lam.clone() });
        }
    }

    let mut sum = BigRational::zero();
    for m in 1..=n {
        let lp = lambdas[2 * (m - 1) as usize].lambda.clone();
        let lm = lambdas[2 * (m - 1) as usize + 1].lambda.clone();
        if lp != lm {
            sum = BigRational::from_integer(BigInt::from(-1));
            break;
        }
        sum += BigRational::new(lp, BigInt::from(m));
    }
    let divisibility = lambdas.iter().all(|e| (&e.lambda % BigInt::from(e.class)).is_zero());
    let n8 = BigInt::from(n).pow(8);
    let bound_ok = lambdas.iter().all(|e| e.lambda.abs() <= n8);

    let (mut re, mut im) = (Dd::zero(), Dd::zero());
    for e in &lambdas {
        let (c, s) = Dd::cos_sin_turns(&(alpha_turns(e.m) * Dd::from_f64(e.sign as f64)).to_rational());
        let l = Dd::from_ratio(&BigRational::from_integer(e.lambda.clone()));
        re = re + l * c;
        im = im + l * s;
    }
    let float_residual = (re - Dd::one()).to_f64().abs() + im.to_f64().abs();

    Ok(LambdaSolution {
        n,
        classes: classes.to_vec(),
        no_move_left: move_applies(&gamma, &bound).is_none(),
        beta,
        gamma,
        lambdas,
        exchange_steps: steps,
        sum_identity: sum.is_one(),
        divisibility,
        bound: bound_ok,
        float_residual,
    })
}

// ---------------------------------------------------------------------------
// Interval arithmetic

/// Closed interval with outward rounding after every operation (a no-op on exact scalars).
#[derive(Clone, Debug, PartialEq)]
pub struct Interval<S> {
    pub lo: S,
    pub hi: S,
}

fn smin<S: Scalar>(a: S, b: S) -> S {
    if b < a {
        b
    } else {
        a
    }
}

fn smax<S: Scalar>(a: S, b: S) -> S {
    if b > a {
        b
    } else {
        a
    }
}

impl<S: Scalar> Interval<S> {
    pub fn new(lo: S, hi: S) -> Self {
        Interval { lo, hi }
    }

    pub fn point(x: S) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    /// Smallest representable interval containing [lo, hi].
    pub fn enclose(lo: &BigRational, hi: &BigRational) -> Self {
        Interval { lo: S::from_rational(lo).next_down().next_down(), hi: S::from_rational(hi).next_up().next_up() }
    }

    pub fn add(&self, o: &Self) -> Self {
        Interval { lo: (self.lo.clone() + o.lo.clone()).next_down(), hi: (self.hi.clone() + o.hi.clone()).next_up() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Interval { lo: (self.lo.clone() - o.hi.clone()).next_down(), hi: (self.hi.clone() - o.lo.clone()).next_up() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let p = [
            self.lo.clone() * o.lo.clone(),
            self.lo.clone() * o.hi.clone(),
            self.hi.clone() * o.lo.clone(),
            self.hi.clone() * o.hi.clone(),
        ];
        let lo = p.iter().cloned().reduce(smin).expect("four products");
        let hi = p.into_iter().reduce(smax).expect("four products");
        Interval { lo: lo.next_down(), hi: hi.next_up() }
    }

    pub fn width(&self) -> S {
        self.hi.clone() - self.lo.clone()
    }

    pub fn contains(&self, x: &S) -> bool {
        &self.lo <= x && x <= &self.hi
    }
}

// ---------------------------------------------------------------------------
// Coverage certificates

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Region {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Region {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x0.is_finite() && y0.is_finite() && x1.is_finite() && y1.is_finite() && x0 < x1 && y0 < y1) {
            return Err(Error::Invalid(format!("degenerate region {x0},{y0},{x1},{y1}")));
        }
        Ok(Region { x0, y0, x1, y1 })
    }

    /// Parses "x0,y0,x1,y1".
    pub fn parse(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Invalid(format!("region '{s}': {e}"))))
            .collect::<Result<_>>()?;
        if v.len() != 4 {
            return Err(Error::Invalid(format!("region '{s}' needs four numbers")));
        }
        Region::new(v[0], v[1], v[2], v[3])
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    /// Quadrants in lexicographic (x, y) order.
    pub fn split(&self) -> [Region; 4] {
        let (xm, ym) = self.center();
        [
            Region { x0: self.x0, y0: self.y0, x1: xm, y1: ym },
            Region { x0: self.x0, y0: ym, x1: xm, y1: self.y1 },
            Region { x0: xm, y0: self.y0, x1: self.x1, y1: ym },
            Region { x0: xm, y0: ym, x1: self.x1, y1: self.y1 },
        ]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x0 <= x && x <= self.x1 && self.y0 <= y && y <= self.y1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxStatus {
    Covered,
    Gap,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxRecord {
    #[serde(flatten)]
    pub region: Region,
    pub status: BoxStatus,
    pub witness_theta: Option<usize>,
    pub witness_m: Option<i64>,
    pub depth: u32,
    /// Gap boxes only: the centre is certified to lie outside every stripe.
    pub uncovered_center: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct CertifyOptions {
    pub max_depth: u32,
    /// Closed stripes [m−ε, m+ε] instead of open ones.
    pub closed: bool,
    /// Abandon the run at the first certified uncovered point.
    pub stop_on_witness: bool,
}

impl CertifyOptions {
    pub fn depth(max_depth: u32) -> Self {
        CertifyOptions { max_depth, closed: false, stop_on_witness: false }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverCertificate {
    pub region: Region,
    pub epsilon: f64,
    #[serde(serialize_with = "display")]
    pub epsilon_exact: BigRational,
    pub closed: bool,
    pub exact_arithmetic: bool,
    pub rotations: Vec<Rotation>,
    pub max_depth: u32,
    pub depth: u32,
    pub covered_boxes: usize,
    pub gap_boxes: usize,
    pub witnessed_gaps: usize,
    pub gap_area_fraction: f64,
    pub aborted: bool,
    pub boxes: Vec<BoxRecord>,
    pub gaps: Vec<Region>,
}

impl CoverCertificate {
    pub fn is_covered(&self) -> bool {
        self.gaps.is_empty() && !self.aborted
    }

    pub fn gaps_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["x0", "y0", "x1", "y1"]).map_err(|e| Error::Invalid(e.to_string()))?;
        for g in &self.gaps {
            w.write_record([g.x0, g.y0, g.x1, g.y1].map(|x| format!("{x}"))).map_err(|e| Error::Invalid(e.to_string()))?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?)
            .map_err(|e| Error::Invalid(e.to_string()))
    }

    /// Status of the leaf containing (x, y), if any.
    pub fn status_at(&self, x: f64, y: f64) -> Option<BoxStatus> {
        self.boxes.iter().find(|b| b.region.contains(x, y)).map(|b| b.status)
    }
}

struct Stripe<S> {
    re: Interval<S>,
    im: Interval<S>,
}

struct Ctx<'a, S> {
    stripes: &'a [Stripe<S>],
    eps: Interval<S>,
    opts: CertifyOptions,
    stop: AtomicBool,
}

fn coords<S: Scalar>(a: f64, b: f64) -> Interval<S> {
    Interval::new(S::from_f64(a), S::from_f64(b))
}

fn stripe_value<S: Scalar>(st: &Stripe<S>, x: &Interval<S>, y: &Interval<S>) -> Interval<S> {
    st.re.mul(x).sub(&st.im.mul(y))
}

fn covering_integer<S: Scalar>(v: &Interval<S>, eps: &Interval<S>, closed: bool) -> Option<BigInt> {
    let mid = (v.lo.clone() + v.hi.clone()) * S::half();
    let m = (mid + S::half()).floor();
    let lower = (m.clone() - eps.lo.clone()).next_up();
    let upper = (m.clone() + eps.lo.clone()).next_down();
    let ok = if closed { v.lo >= lower && v.hi <= upper } else { v.lo > lower && v.hi < upper };
    ok.then(|| m.floor_bigint())
}

fn certainly_outside<S: Scalar>(v: &Interval<S>, eps: &Interval<S>, closed: bool) -> bool {
    let f = v.lo.floor();
    let lower = (f.clone() + eps.hi.clone()).next_up();
    let upper = (f + S::one() - eps.hi.clone()).next_down();
    if closed {
        v.lo > lower && v.hi < upper
    } else {
        v.lo >= lower && v.hi <= upper
    }
}

fn center_uncovered<S: Scalar>(ctx: &Ctx<S>, b: &Region) -> bool {
    let (cx, cy) = b.center();
    let x = Interval::point(S::from_f64(cx));
    let y = Interval::point(S::from_f64(cy));
    ctx.stripes.iter().all(|st| certainly_outside(&stripe_value(st, &x, &y), &ctx.eps, ctx.opts.closed))
}

fn certify_box<S: Scalar>(ctx: &Ctx<S>, b: Region, depth: u32) -> Vec<BoxRecord> {
    let gap = |witness: bool| {
        vec![BoxRecord {
            region: b,
            status: BoxStatus::Gap,
            witness_theta: None,
            witness_m: None,
            depth,
            uncovered_center: witness,
        }]
    };
    if ctx.stop.load(Ordering::Relaxed) {
        return gap(false);
    }
    let x = coords::<S>(b.x0, b.x1);
    let y = coords::<S>(b.y0, b.y1);
    for (i, st) in ctx.stripes.iter().enumerate() {
        if let Some(m) = covering_integer(&stripe_value(st, &x, &y), &ctx.eps, ctx.opts.closed) {
            return vec![BoxRecord {
                region: b,
                status: BoxStatus::Covered,
                witness_theta: Some(i),
                witness_m: m.to_i64(),
                depth,
                uncovered_center: false,
            }];
        }
    }
    let leaf = depth >= ctx.opts.max_depth;
    if leaf || ctx.opts.stop_on_witness {
        let w = center_uncovered(ctx, &b);
        if w && ctx.opts.stop_on_witness {
            ctx.stop.store(true, Ordering::Relaxed);
        }
        if leaf || w {
            return gap(w);
        }
    }
    let [c0, c1, c2, c3] = b.split();
    let d = depth + 1;
    let (mut left, right) = if depth < PARALLEL_DEPTH {
        let ((a0, a1), (a2, a3)) = rayon::join(
            || rayon::join(|| certify_box(ctx, c0, d), || certify_box(ctx, c1, d)),
            || rayon::join(|| certify_box(ctx, c2, d), || certify_box(ctx, c3, d)),
        );
        ([a0, a1].concat(), [a2, a3].concat())
    } else {
        ([certify_box(ctx, c0, d), certify_box(ctx, c1, d)].concat(), [certify_box(ctx, c2, d), certify_box(ctx, c3, d)].concat())
    };
    left.extend(right);
    left
}

/// Quadtree certificate that `region` lies in the union of the stripes
/// {z : Re(θz) ∈ (m−ε, m+ε)} over the given multipliers θ.
pub fn cover_certify<S: Scalar>(
    rotations: &[Rotation],
    eps: &BigRational,
    region: Region,
    opts: CertifyOptions,
) -> Result<CoverCertificate> {
    let half = rat(1, 2);
    if !eps.is_positive() || *eps > half || (*eps == half && !opts.closed) {
        return Err(Error::Invalid(format!("epsilon {eps} outside (0, 1/2)")));
    }
    if rotations.is_empty() {
        return Err(Error::Invalid("empty rotation set".into()));
    }
    let stripes: Vec<Stripe<S>> = rotations
        .iter()
        .map(|r| Stripe { re: Interval::enclose(&r.re.0, &r.re.1), im: Interval::enclose(&r.im.0, &r.im.1) })
        .collect();
    let ctx = Ctx { stripes: &stripes, eps: Interval::enclose(eps, eps), opts, stop: AtomicBool::new(false) };
    let boxes = certify_box(&ctx, region, 0);
    let gaps: Vec<Region> = boxes.iter().filter(|b| b.status == BoxStatus::Gap).map(|b| b.region).collect();
    let gap_area: f64 = gaps.iter().map(Region::area).sum();
    Ok(CoverCertificate {
        region,
        epsilon: crate::scalar::rational_to_f64(eps),
        epsilon_exact: eps.clone(),
        closed: opts.closed,
        exact_arithmetic: S::EXACT,
        rotations: rotations.to_vec(),
        max_depth: opts.max_depth,
        depth: boxes.iter().map(|b| b.depth).max().unwrap_or(0),
        covered_boxes: boxes.len() - gaps.len(),
        gap_boxes: gaps.len(),
        witnessed_gaps: boxes.iter().filter(|b| b.uncovered_center).count(),
        gap_area_fraction: gap_area / region.area(),
        aborted: ctx.stop.load(Ordering::Relaxed),
        boxes,
        gaps,
    })
}

/// Samples points inside covered boxes and checks stripe membership directly in
/// double-double. Returns (points checked, violations).
pub fn soundness_sample<R: Rng>(cert: &CoverCertificate, points: usize, rng: &mut R) -> (usize, usize) {
    let covered: Vec<&BoxRecord> = cert.boxes.iter().filter(|b| b.status == BoxStatus::Covered).collect();
    if covered.is_empty() {
        return (0, 0);
    }
    let eps = Dd::from_ratio(&cert.epsilon_exact);
    let mut bad = 0;
    for _ in 0..points {
        let b = covered[rng.gen_range(0..covered.len())];
        let r = &b.region;
        let x = Dd::from_f64(rng.gen_range(r.x0..=r.x1));
        let y = Dd::from_f64(rng.gen_range(r.y0..=r.y1));
        let (c, s) = cert.rotations[b.witness_theta.expect("witness")].approx();
        let v = c * x - s * y;
        let d = (v - Dd::from_f64(b.witness_m.expect("witness") as f64)).abs();
        let inside = if cert.closed { d <= eps } else { d < eps };
        if !inside {
            bad += 1;
        }
    }
    (points, bad)
}

// ---------------------------------------------------------------------------
// Search for small covers

#[derive(Clone, Debug, Serialize)]
pub struct SearchOutcome {
    pub epsilon: f64,
    pub k: usize,
    pub region: Region,
    pub grids: Vec<u32>,
    pub max_depth: u32,
    pub tried: usize,
    /// Angles in turns of the first gap-free tuple.
    pub turns: Option<Vec<String>>,
    #[serde(skip)]
    pub found: Option<(Vec<Rotation>, CoverCertificate)>,
}

fn tuples(count: u32, k: usize) -> Vec<Vec<u32>> {
    fn rec(start: u32, count: u32, k: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..count {
            cur.push(j);
            rec(j + 1, count, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, count, k, &mut vec![0], &mut out);
    out
}

/// Tries angle tuples (0, j₂/G, …, j_k/G) with 0 < j₂ < … < G/2 over refining grids G
/// and returns the first tuple whose certificate has no gaps.
pub fn search_small_cover(
    eps: &BigRational,
    k: usize,
    region: Region,
    max_depth: u32,
    grids: &[u32],
) -> Result<SearchOutcome> {
    if k == 0 || k > 6 {
        return Err(Error::Invalid(format!("k = {k} outside 1..=6")));
    }
    let mut seen: HashSet<Vec<BigRational>> = HashSet::new();
    let mut tried = 0;
    let opts = CertifyOptions { max_depth, closed: false, stop_on_witness: true };
    for &g in grids {
        for t in tuples(g / 2, k) {
            let turns: Vec<BigRational> = t.iter().map(|&j| rat(j as i64, g as i64)).collect();
            if !seen.insert(turns.clone()) {
                continue;
            }
            tried += 1;
            let rots: Vec<Rotation> = turns.iter().cloned().map(Rotation::angle).collect();
            let cert = cover_certify::<f64>(&rots, eps, region, opts)?;
            if cert.is_covered() {
                return Ok(SearchOutcome {
                    epsilon: crate::scalar::rational_to_f64(eps),
                    k,
                    region,
                    grids: grids.to_vec(),
                    max_depth,
                    tried,
                    turns: Some(turns.iter().map(|t| t.to_string()).collect()),
                    found: Some((rots, cert)),
                });
            }
        }
    }
    Ok(SearchOutcome {
        epsilon: crate::scalar::rational_to_f64(eps),
        k,
        region,
        grids: grids.to_vec(),
        max_depth,
        tried,
        turns: None,
        found: None,
    })
}

// ---------------------------------------------------------------------------
// Lattice gaps

#[derive(Clone, Debug, Serialize)]
pub struct GapEntry {
    pub region: Region,
    pub classified: bool,
    pub m: Option<u32>,
    pub lattice_point: Option<GaussRat>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub n: u32,
    pub d: GaussInt,
    pub total: usize,
    pub classified: usize,
    pub fraction: f64,
    pub entries: Vec<GapEntry>,
}

impl GapReport {
    pub fn all_classified(&self) -> bool {
        self.classified == self.total
    }
}

/// Squared radius 4/9, shrunk so that f64 rounding can only reject.
const BALL_R2: f64 = 4.0 / 9.0 - 1e-9;

fn ball_contains(g: (f64, f64), b: &Region) -> bool {
    [(b.x0, b.y0), (b.x0, b.y1), (b.x1, b.y0), (b.x1, b.y1)].iter().all(|&(x, y)| {
        let (dx, dy) = (x - g.0, y - g.1);
        dx * dx + dy * dy <= BALL_R2
    })
}

fn lattice_ball(b: &Region, n: u32, d: &GaussInt) -> Option<(u32, GaussRat)> {
    let (cx, cy) = b.center();
    let (dr, di) = d.to_complex_f64();
    let nd = dr * dr + di * di;
    for m in 1..=n {
        let mf = m as f64;
        // w = z·m/D
        let wr = (cx * dr + cy * di) * mf / nd;
        let wi = (cy * dr - cx * di) * mf / nd;
        let (kr, ki) = (wr.round() as i64, wi.round() as i64);
        for a in kr - 1..=kr + 1 {
            for c in ki - 1..=ki + 1 {
                if a.rem_euclid(m as i64) == 0 && c.rem_euclid(m as i64) == 0 {
                    continue;
                }
                let g = ((dr * a as f64 - di * c as f64) / mf, (dr * c as f64 + di * a as f64) / mf);
                if ball_contains(g, b) {
                    return Some((m, GaussRat::new(d * &GaussInt::new(a, c), m).expect("nonzero denominator")));
                }
            }
        }
    }
    None
}

/// Largest m used over the pieces, and the lattice point of the first piece.
fn classify_box(b: &Region, n: u32, d: &GaussInt, level: u32) -> Option<(u32, GaussRat)> {
    if let Some(hit) = lattice_ball(b, n, d) {
        return Some(hit);
    }
    if level == 0 {
        return None;
    }
    let mut out: Option<(u32, GaussRat)> = None;
    for c in b.split() {
        let (m, g) = classify_box(&c, n, d, level - 1)?;
        out = Some(match out {
            None => (m, g),
            Some((m0, g0)) => (m0.max(m), g0),
        });
    }
    out
}

/// Which gap boxes lie in ∪_{m ≤ n} ((D/m)Z[i] ∖ DZ[i]) + B̄_{2/3}.
pub fn gap_classify(gaps: &[Region], n: u32, d: &GaussInt) -> Result<GapReport> {
    if n == 0 || d.is_zero() {
        return Err(Error::Invalid("gap classification needs n >= 1 and D != 0".into()));
    }
    let entries: Vec<GapEntry> = gaps
        .par_iter()
        .map(|b| {
            let hit = classify_box(b, n, d, CLASSIFY_SPLITS);
            GapEntry { region: *b, classified: hit.is_some(), m: hit.as_ref().map(|h| h.0), lattice_point: hit.map(|h| h.1) }
        })
        .collect();
    let classified = entries.iter().filter(|e| e.classified).count();
    Ok(GapReport {
        n,
        d: d.clone(),
        total: entries.len(),
        classified,
        fraction: if entries.is_empty() { 1.0 } else { classified as f64 / entries.len() as f64 },
        entries,
    })
}

/// D = P̄₅^B P̄₁₃^B.
pub fn lattice_modulus(b: u32) -> GaussInt {
    let base = &crate::gaussian::p5bar() * &crate::gaussian::p13bar();
    base.pow(b)
}

/// Fraction of grid points of `region` lying in ∪_{m ≤ n} F(m, D).
pub fn lattice_density(n: u32, d: &GaussInt, region: Region, grid: u32) -> f64 {
    let hits: usize = (0..grid)
        .into_par_iter()
        .map(|i| {
            (0..grid)
                .filter(|&j| {
                    let x = region.x0 + (i as f64 + 0.5) * (region.x1 - region.x0) / grid as f64;
                    let y = region.y0 + (j as f64 + 0.5) * (region.y1 - region.y0) / grid as f64;
                    let p = Region { x0: x, y0: y, x1: x, y1: y };
                    lattice_ball(&p, n, d).is_some()
                })
                .count()
        })
        .sum();
    hits as f64 / (grid as f64 * grid as f64)
}

/// Smallest (B, n), B first, such that every gap is classified against D = P̄₅^B P̄₁₃^B.
pub fn search_gap_lattice(gaps: &[Region], b_max: u32, n_max: u32) -> Result<Option<GapReport>> {
    for b in 1..=b_max {
        let d = lattice_modulus(b);
        let r = gap_classify(gaps, n_max, &d)?;
        if r.all_classified() {
            let n = r.entries.iter().filter_map(|e| e.m).max().unwrap_or(1);
            return gap_classify(gaps, n, &d).map(Some);
        }
    }
    Ok(None)
}
