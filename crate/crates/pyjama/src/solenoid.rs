//! Points of X = (Q₅ × Q₁₃ × C)/ι^Δ(A).
//!
//! A point is stored in canonical form (a, b, z) with a ∈ Z₅, b ∈ Z₁₃ and
//! Re z, Im z ∈ [−1/2, 1/2); it represents j(a,b,z) = j₅(a) + j₁₃(b) − j_C(z).

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{p13bar, p5bar, theta13, theta5, theta_power, GaussInt, GaussRat, Prime};
use crate::padic::{embed, pow_p, Padic, DEFAULT_PRECISION, PRECISION_FLOOR};
use crate::scalar::{Dd, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Certainty {
    Yes,
    No,
    Unknown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolenoidPoint<S: Scalar> {
    a: Padic,
    b: Padic,
    z: Complex<S>,
    err: f64,
}

fn target_precision(x: &Padic) -> u32 {
    let n = x.abs_precision();
    if x.is_exact_zero() || n > DEFAULT_PRECISION as i64 * 8 {
        DEFAULT_PRECISION
    } else {
        n.max(1) as u32
    }
}

/// u with u ≡ f·(ι_p(π̄)/p)^k (mod p^k), so that ι_p(u/π̄^k) has fractional part f.
fn fractional_lift(f: &BigRational, p: u32, k: u32) -> GaussRat {
    let pibar = if p == 5 { p5bar() } else { p13bar() };
    let e = embed(&GaussRat::from_gauss(pibar.clone()), p, k + 1);
    let m = pow_p(p, k);
    let r = f * BigRational::from_integer(m.clone());
    debug_assert!(r.is_integer());
    let u = (r.to_integer() * e.unit().modpow(&BigInt::from(k), &m)) % &m;
    GaussRat::from_int(u).div(&GaussRat::from_gauss(pibar.pow(k))).expect("nonzero")
}

fn complex_of<S: Scalar>(w: &GaussRat) -> Complex<S> {
    Complex::new(S::from_rational(&w.re()), S::from_rational(&w.im()))
}

fn cabs<S: Scalar>(z: &Complex<S>) -> f64 {
    z.re.to_f64().hypot(z.im.to_f64())
}

/// Reduce (a, b, z) to canonical form, returning the point and the element w ∈ A that was
/// subtracted diagonally.
pub fn reduce<S: Scalar>(a: Padic, b: Padic, z: Complex<S>, err: f64) -> Result<(SolenoidPoint<S>, GaussRat)> {
    let u = S::roundoff();
    let mut a = a;
    let mut b = b;
    let mut z = z;
    let mut err = err;
    let mut shift = GaussRat::zero();
    let mut apply = |w: GaussRat, a: &mut Padic, b: &mut Padic, z: &mut Complex<S>, err: &mut f64| {
        let wa = embed(&w, 5, (target_precision(a) as i64 + (-a.valuation().unwrap_or(0)).max(0)) as u32 + 2);
        let wb = embed(&w, 13, (target_precision(b) as i64 + (-b.valuation().unwrap_or(0)).max(0)) as u32 + 2);
        *a = a.sub(&wa);
        *b = b.sub(&wb);
        let wc = complex_of::<S>(&w);
        let mag = cabs(z) + w.abs_f64();
        *z = z.clone() - wc;
        *err += 2.0 * u * mag;
        shift = shift.add(&w);
    };
    if let Some(v) = a.valuation() {
        if v < 0 {
            let f = a.frac_part()?;
            let w = fractional_lift(&f, 5, (-v) as u32);
            apply(w, &mut a, &mut b, &mut z, &mut err);
        }
    } else if a.abs_precision() < 0 {
        return Err(Error::Precision("5-adic coordinate lost all integral digits".into()));
    }
    if let Some(v) = b.valuation() {
        if v < 0 {
            let f = b.frac_part()?;
            let w = fractional_lift(&f, 13, (-v) as u32);
            apply(w, &mut a, &mut b, &mut z, &mut err);
        }
    } else if b.abs_precision() < 0 {
        return Err(Error::Precision("13-adic coordinate lost all integral digits".into()));
    }
    let half = S::half();
    let gr = (z.re.clone() + half.clone()).floor_bigint();
    let gi = (z.im.clone() + half).floor_bigint();
    if !gr.is_zero() || !gi.is_zero() {
        let g = GaussRat::from_gauss(GaussInt { re: gr, im: gi });
        apply(g, &mut a, &mut b, &mut z, &mut err);
    }
    for (x, p) in [(&a, 5), (&b, 13)] {
        if !x.is_exact_zero() && x.abs_precision() < PRECISION_FLOOR as i64 {
            return Err(Error::Precision(format!(
                "{p}-adic coordinate known only mod {p}^{} (floor {PRECISION_FLOOR})",
                x.abs_precision()
            )));
        }
    }
    Ok((SolenoidPoint { a, b, z, err }, shift))
}

pub fn make_point<S: Scalar>(a: Padic, b: Padic, z: Complex<S>) -> Result<SolenoidPoint<S>> {
    reduce(a, b, z, 0.0).map(|(p, _)| p)
}

/// Multiplier (ι₅(e), ι₁₃(e), e) for an element e ∈ A.
#[derive(Clone, Debug)]
pub struct Multiplier<S: Scalar> {
    pub m5: Padic,
    pub m13: Padic,
    pub mc: Complex<S>,
    pub mc_err: f64,
}

impl<S: Scalar> Multiplier<S> {
    pub fn element(e: &GaussRat, prec: u32) -> Result<Self> {
        if !e.in_a() {
            return Err(Error::NotInA(e.to_string()));
        }
        let mc = complex_of::<S>(e);
        let mc_err = 2.0 * S::roundoff() * e.abs_f64();
        Ok(Multiplier { m5: embed(e, 5, prec), m13: embed(e, 13, prec), mc, mc_err })
    }

    /// θ₅^s θ₁₃^t, using fast exponentiation in every coordinate.
    pub fn theta(s: u64, t: u64, prec: u32) -> Self {
        let m5 = embed(&theta5(), 5, prec).pow(s).mul(&embed(&theta13(), 5, prec).pow(t));
        let m13 = embed(&theta5(), 13, prec).pow(s).mul(&embed(&theta13(), 13, prec).pow(t));
        let (mc, mc_err) = theta_complex::<S>(s, t);
        Multiplier { m5, m13, mc, mc_err }
    }
}

/// θ₅^s θ₁₃^t as a complex scalar with an error bound (exact for exact scalars).
pub fn theta_complex<S: Scalar>(s: u64, t: u64) -> (Complex<S>, f64) {
    if S::EXACT && s + t <= 4000 {
        return (complex_of::<S>(&theta_power(s as i64, t as i64)), 0.0);
    }
    let c5 = Complex::new(Dd::from_ratio(&crate::scalar::rat(-3, 5)), Dd::from_ratio(&crate::scalar::rat(4, 5)));
    let c13 = Complex::new(Dd::from_ratio(&crate::scalar::rat(-5, 13)), Dd::from_ratio(&crate::scalar::rat(12, 13)));
    let pw = |c: Complex<Dd>, mut k: u64| {
        let mut acc = Complex::new(Dd::one(), Dd::zero());
        let mut base = c;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    };
    let z = pw(c5, s) * pw(c13, t);
    let re = S::from_rational(&Scalar::to_rational(&z.re));
    let im = S::from_rational(&Scalar::to_rational(&z.im));
    let err = 4.0 * (s + t + 2) as f64 * 1e-31 + 2.0 * S::roundoff();
    (Complex::new(re, im), err)
}

impl<S: Scalar> SolenoidPoint<S> {
    pub fn zero() -> Self {
        SolenoidPoint { a: Padic::zero(5), b: Padic::zero(13), z: Complex::new(S::zero(), S::zero()), err: 0.0 }
    }

    pub fn a(&self) -> &Padic {
        &self.a
    }
    pub fn b(&self) -> &Padic {
        &self.b
    }
    pub fn z(&self) -> &Complex<S> {
        &self.z
    }
    pub fn err(&self) -> f64 {
        self.err
    }

    pub fn coordinates(&self) -> (Padic, Padic, Complex<S>) {
        (self.a.clone(), self.b.clone(), self.z.clone())
    }

    /// j(ι^Δ(q)) for q ∈ Q(i).
    pub fn from_rational(q: &GaussRat) -> Result<Self> {
        Self::from_rational_prec(q, DEFAULT_PRECISION)
    }

    pub fn from_rational_prec(q: &GaussRat, prec: u32) -> Result<Self> {
        let (p, _) = reduce(embed(q, 5, prec), embed(q, 13, prec), complex_of::<S>(q), 0.0)?;
        Ok(p)
    }

    /// j_C(w) = j(0, 0, −w).
    pub fn complex_offset(w: Complex<S>) -> Result<Self> {
        make_point(Padic::zero(5), Padic::zero(13), -w)
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        let (p, _) = reduce(self.a.add(&o.a), self.b.add(&o.b), self.z.clone() + o.z.clone(), self.err + o.err)?;
        Ok(p)
    }

    pub fn neg(&self) -> Result<Self> {
        let (p, _) = reduce(self.a.neg(), self.b.neg(), -self.z.clone(), self.err)?;
        Ok(p)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        let (p, _) = reduce(self.a.sub(&o.a), self.b.sub(&o.b), self.z.clone() - o.z.clone(), self.err + o.err)?;
        Ok(p)
    }

    fn apply_with_shift(&self, m: &Multiplier<S>) -> Result<(Self, GaussRat)> {
        let u = S::roundoff();
        let zm = cabs(&self.z);
        let mabs = cabs(&m.mc);
        let err = self.err * (mabs + m.mc_err) + zm * (m.mc_err + 4.0 * u * mabs);
        reduce(self.a.mul(&m.m5), self.b.mul(&m.m13), self.z.clone() * m.mc.clone(), err)
    }

    pub fn apply(&self, m: &Multiplier<S>) -> Result<Self> {
        self.apply_with_shift(m).map(|(p, _)| p)
    }

    /// Multiplication by an element of A, also returning the diagonal shift used to
    /// re-canonicalize.
    pub fn mul_element_with_shift(&self, e: &GaussRat) -> Result<(Self, GaussRat)> {
        let prec = self.a.precision().max(self.b.precision()).max(DEFAULT_PRECISION) + 4;
        self.apply_with_shift(&Multiplier::element(e, prec)?)
    }

    pub fn mul_element(&self, e: &GaussRat) -> Result<Self> {
        self.mul_element_with_shift(e).map(|(p, _)| p)
    }

    /// Action of θ₅^s θ₁₃^t.
    pub fn act(&self, s: u64, t: u64) -> Result<Self> {
        // θ₅ costs one 5-adic digit per step and θ₁₃ one 13-adic digit
        for (x, k) in [(&self.a, s), (&self.b, t)] {
            if !x.is_exact_zero() && x.abs_precision() - (k.min(i64::MAX as u64) as i64) < PRECISION_FLOOR as i64 {
                return Err(Error::Precision(format!(
                    "{}-adic coordinate known mod p^{} cannot absorb {k} steps",
                    x.p(),
                    x.abs_precision()
                )));
            }
        }
        let prec = self.a.precision().max(self.b.precision()).max(DEFAULT_PRECISION) + 4;
        self.apply(&Multiplier::theta(s, t, prec))
    }

    /// x(elem) = {ι₅(elem·a)}₅ + {ι₁₃(elem·b)}₁₃ − Re(elem·z) mod 1.
    pub fn char_eval(&self, elem: &GaussRat) -> Result<(S, f64)> {
        if !elem.in_a() {
            return Err(Error::NotInA(elem.to_string()));
        }
        let prec = DEFAULT_PRECISION.max(self.a.precision()).max(self.b.precision()) + 8;
        // p-adic parts pair through elem/2 so that ι^Δ(A) is exactly the kernel
        let half = elem.mul(&GaussRat::from_ratio(1, 2));
        let f5 = embed(&half, 5, prec).mul(&self.a).frac_part()?;
        let f13 = embed(&half, 13, prec).mul(&self.b).frac_part()?;
        let er = S::from_rational(&elem.re());
        let ei = S::from_rational(&elem.im());
        let re = er * self.z.re.clone() - ei * self.z.im.clone();
        let v = S::from_rational(&(f5 + f13)) - re;
        let v = v.clone() - v.floor();
        let u = S::roundoff();
        let err = self.err * elem.abs_f64() + 8.0 * u * (elem.abs_f64() * (cabs(&self.z) + 1.0) + 2.0);
        Ok((v, err))
    }

    /// Membership of θ·x in E*₁(ε).
    pub fn in_pyjama(&self, eps: f64, theta: &GaussRat) -> Result<Certainty> {
        let y = self.mul_element(theta)?;
        y.pyjama_value(eps)
    }

    pub fn in_pyjama_theta(&self, eps: f64, s: u64, t: u64) -> Result<Certainty> {
        self.act(s, t)?.pyjama_value(eps)
    }

    fn pyjama_value(&self, eps: f64) -> Result<Certainty> {
        let (v, err) = self.char_eval(&GaussRat::one())?;
        let (d, _) = crate::scalar::nearest_integer(&v);
        Ok(decide_below(&d, err, eps))
    }

    /// Distance to the nearest integer of x(1), with error radius.
    pub fn pyjama_margin(&self) -> Result<(f64, f64)> {
        let (v, err) = self.char_eval(&GaussRat::one())?;
        let (d, _) = crate::scalar::nearest_integer(&v);
        Ok((d.to_f64(), err))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "a5": self.a.digit_string(),
            "b13": self.b.digit_string(),
            "z": [crate::report::fixed(self.z.re.to_f64()), crate::report::fixed(self.z.im.to_f64())],
            "err": crate::report::fixed(self.err),
        })
    }

    /// Lossy conversion to another scalar type.
    pub fn convert<T: Scalar>(&self) -> SolenoidPoint<T> {
        let re = T::from_rational(&self.z.re.to_rational());
        let im = T::from_rational(&self.z.im.to_rational());
        let err = self.err + 2.0 * T::roundoff() * (cabs(&self.z) + 1.0);
        SolenoidPoint { a: self.a.clone(), b: self.b.clone(), z: Complex::new(re, im), err }
    }
}

/// Three-valued decision of `d < eps` given an error radius on `d`.
pub fn decide_below<S: Scalar>(d: &S, err: f64, eps: f64) -> Certainty {
    if S::EXACT && err == 0.0 {
        return if *d < S::from_f64(eps) { Certainty::Yes } else { Certainty::No };
    }
    let df = d.to_f64();
    let slack = err + 4.0 * f64::EPSILON * (df.abs() + eps);
    if df + slack < eps {
        Certainty::Yes
    } else if df - slack >= eps {
        Certainty::No
    } else {
        Certainty::Unknown
    }
}

/// A shift w ∈ A used in the distance infimum.
#[derive(Clone, Debug)]
struct Shift {
    w: GaussRat,
    wc: (f64, f64),
    norm5: Option<f64>,
    norm13: Option<f64>,
    e5: Option<Padic>,
    e13: Option<Padic>,
}

/// Distance together with the search metadata.
#[derive(Clone, Debug, Serialize)]
pub struct Distance {
    pub value: f64,
    pub err: f64,
    pub shift: String,
    #[serde(skip)]
    pub shift_value: GaussRat,
    pub shift_radius: u32,
    pub shift_depth: u32,
}

pub const SHIFT_RADIUS: u32 = 4;
pub const SHIFT_DEPTH: u32 = 6;

fn build_shifts(depth: u32) -> Vec<Shift> {
    let r = SHIFT_RADIUS as i64;
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for j in 0..=depth {
        for k in 0..=depth {
            let den = GaussRat::from_gauss(p5bar().pow(j)).mul(&GaussRat::from_gauss(p13bar().pow(k)));
            for x in -r..=r {
                for y in -r..=r {
                    if x * x + y * y > r * r {
                        continue;
                    }
                    let w = GaussRat::from_gauss(GaussInt::new(x, y)).div(&den).expect("nonzero");
                    if !seen.insert(w.clone()) {
                        continue;
                    }
                    let (v5, v13) = if w.is_zero() {
                        (i64::MAX, i64::MAX)
                    } else {
                        (w.valuation(Prime::P5bar).unwrap(), w.valuation(Prime::P13bar).unwrap())
                    };
                    let norm5 = (v5 < 0).then(|| 5f64.powi((-v5) as i32));
                    let norm13 = (v13 < 0).then(|| 13f64.powi((-v13) as i32));
                    let e5 = (v5 >= 0).then(|| embed(&w, 5, 2 * DEFAULT_PRECISION));
                    let e13 = (v13 >= 0).then(|| embed(&w, 13, 2 * DEFAULT_PRECISION));
                    out.push(Shift { wc: w.to_f64(), w, norm5, norm13, e5, e13 });
                }
            }
        }
    }
    out
}

fn default_shifts() -> &'static [Shift] {
    static TABLE: OnceLock<Vec<Shift>> = OnceLock::new();
    TABLE.get_or_init(|| build_shifts(SHIFT_DEPTH))
}

fn padic_term(x: &Padic, e: &Padic) -> (f64, f64) {
    let d = x.sub(e);
    if d.is_zero() {
        (0.0, d.norm_bound())
    } else {
        (d.norm(), 0.0)
    }
}

/// inf over the shift set of |a − ι₅w|₅ + |b − ι₁₃w|₁₃ + max(0, |z − w| − radius).
fn shifted_norm<S: Scalar>(d: &SolenoidPoint<S>, radius: f64) -> Distance {
    let zr = d.z.re.to_f64();
    let zi = d.z.im.to_f64();
    let mut best = (f64::INFINITY, 0.0, GaussRat::zero());
    for s in default_shifts() {
        let (t5, e5) = match (&s.norm5, &s.e5) {
            (Some(n), _) => (*n, 0.0),
            (None, Some(e)) => padic_term(&d.a, e),
            _ => unreachable!(),
        };
        if t5 >= best.0 {
            continue;
        }
        let (t13, e13) = match (&s.norm13, &s.e13) {
            (Some(n), _) => (*n, 0.0),
            (None, Some(e)) => padic_term(&d.b, e),
            _ => unreachable!(),
        };
        if t5 + t13 >= best.0 {
            continue;
        }
        let tc = ((zr - s.wc.0).hypot(zi - s.wc.1) - radius).max(0.0);
        let total = t5 + t13 + tc;
        if total < best.0 {
            let cerr = d.err + 4.0 * f64::EPSILON * (zr.abs() + zi.abs() + s.wc.0.abs() + s.wc.1.abs() + 1.0);
            best = (total, e5 + e13 + cerr, s.w.clone());
        }
    }
    Distance {
        value: best.0,
        err: best.1,
        shift: best.2.to_string(),
        shift_value: best.2,
        shift_radius: SHIFT_RADIUS,
        shift_depth: SHIFT_DEPTH,
    }
}

pub fn distance<S: Scalar>(x: &SolenoidPoint<S>, y: &SolenoidPoint<S>) -> Result<Distance> {
    Ok(shifted_norm(&x.sub(y)?, 0.0))
}

pub fn norm<S: Scalar>(x: &SolenoidPoint<S>) -> Distance {
    shifted_norm(x, 0.0)
}

/// Distance from x to the closed complex ball q + j_C(B̄_R(0)).
pub fn dist_to_complex_ball<S: Scalar>(x: &SolenoidPoint<S>, q: &TorsionPoint, radius: f64) -> Result<Distance> {
    let d = x.sub(&q.point::<S>()?)?;
    Ok(shifted_norm(&d, radius))
}

/// A torsion point j(ι^Δ(q)), with q the unique representative in Z₅ ∩ Z₁₃ ∩ [−1/2,1/2)².
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TorsionPoint {
    q: GaussRat,
    order: BigInt,
}

impl TorsionPoint {
    pub fn q(&self) -> &GaussRat {
        &self.q
    }
    pub fn order(&self) -> &BigInt {
        &self.order
    }
    pub fn is_zero(&self) -> bool {
        self.q.is_zero()
    }

    pub fn point<S: Scalar>(&self) -> Result<SolenoidPoint<S>> {
        SolenoidPoint::from_rational(&self.q)
    }

    /// e·q for e ∈ A.
    pub fn mul_element(&self, e: &GaussRat) -> Result<TorsionPoint> {
        if !e.in_a() {
            return Err(Error::NotInA(e.to_string()));
        }
        torsion_from_rational(&self.q.mul(e))
    }

    pub fn add(&self, o: &TorsionPoint) -> Result<TorsionPoint> {
        torsion_from_rational(&self.q.add(&o.q))
    }
}

pub fn torsion_from_rational(q: &GaussRat) -> Result<TorsionPoint> {
    torsion_from_rational_capped(q, crate::gaussian::DEFAULT_HEIGHT_CAP_BITS)
}

pub fn torsion_from_rational_capped(q: &GaussRat, cap_bits: u64) -> Result<TorsionPoint> {
    let bits = q.height_bits();
    if bits > cap_bits {
        return Err(Error::HeightCap(bits));
    }
    let order = q.order_mod_a();
    let (a, b) = (embed(q, 5, DEFAULT_PRECISION), embed(q, 13, DEFAULT_PRECISION));
    let (_, w) = reduce::<BigRational>(a, b, complex_of::<BigRational>(q), 0.0)?;
    let rep = q.sub(&w);
    debug_assert!(rep.sub(q).in_a());
    Ok(TorsionPoint { q: rep, order })
}
