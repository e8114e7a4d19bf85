//! Exact arithmetic in Z[i] and Q(i).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct GaussInt {
    pub re: BigInt,
    pub im: BigInt,
}

impl GaussInt {
    pub fn new(re: impl Into<BigInt>, im: impl Into<BigInt>) -> Self {
        GaussInt { re: re.into(), im: im.into() }
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        GaussInt { re: n.into(), im: BigInt::zero() }
    }

    pub fn i() -> Self {
        GaussInt::new(0, 1)
    }

    pub fn conj(&self) -> Self {
        GaussInt { re: self.re.clone(), im: -&self.im }
    }

    pub fn norm(&self) -> BigInt {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// gcd of the two components.
    pub fn content(&self) -> BigInt {
        self.re.gcd(&self.im)
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        GaussInt { re: &self.re * k, im: &self.im * k }
    }

    /// Exact quotient `self / d` if `d` divides `self` in Z[i].
    pub fn div_exact(&self, d: &GaussInt) -> Option<GaussInt> {
        let n = d.norm();
        if n.is_zero() {
            return None;
        }
        let p = self * &d.conj();
        if (&p.re % &n).is_zero() && (&p.im % &n).is_zero() {
            Some(GaussInt { re: p.re / &n, im: p.im / &n })
        } else {
            None
        }
    }

    pub fn pow(&self, k: u32) -> GaussInt {
        let mut acc = GaussInt::from_int(1);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        acc
    }

    /// Multiplicity of `p` as a divisor (x ≠ 0).
    pub fn valuation(&self, p: &GaussInt) -> u32 {
        let mut x = self.clone();
        let mut v = 0;
        while let Some(q) = x.div_exact(p) {
            x = q;
            v += 1;
        }
        v
    }

    pub fn to_complex_f64(&self) -> (f64, f64) {
        (self.re.to_f64().unwrap_or(f64::NAN), self.im.to_f64().unwrap_or(f64::NAN))
    }
}

impl Add for &GaussInt {
    type Output = GaussInt;
    fn add(self, o: &GaussInt) -> GaussInt {
        GaussInt { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl Sub for &GaussInt {
    type Output = GaussInt;
    fn sub(self, o: &GaussInt) -> GaussInt {
        GaussInt { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl Mul for &GaussInt {
    type Output = GaussInt;
    fn mul(self, o: &GaussInt) -> GaussInt {
        GaussInt {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

impl Neg for &GaussInt {
    type Output = GaussInt;
    fn neg(self) -> GaussInt {
        GaussInt { re: -&self.re, im: -&self.im }
    }
}

impl fmt::Display for GaussInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else if self.im.is_negative() {
            write!(f, "{}-{}i", self.re, -&self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

/// The four distinguished Gaussian primes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Prime {
    P5,
    P5bar,
    P13,
    P13bar,
}

impl Prime {
    pub fn value(self) -> GaussInt {
        match self {
            Prime::P5 => GaussInt::new(1, 2),
            Prime::P5bar => GaussInt::new(1, -2),
            Prime::P13 => GaussInt::new(2, 3),
            Prime::P13bar => GaussInt::new(2, -3),
        }
    }

    pub fn rational_prime(self) -> u32 {
        match self {
            Prime::P5 | Prime::P5bar => 5,
            Prime::P13 | Prime::P13bar => 13,
        }
    }
}

pub fn p5() -> GaussInt {
    Prime::P5.value()
}
pub fn p5bar() -> GaussInt {
    Prime::P5bar.value()
}
pub fn p13() -> GaussInt {
    Prime::P13.value()
}
pub fn p13bar() -> GaussInt {
    Prime::P13bar.value()
}

/// Element of Q(i) in canonical form `num / den`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GaussRat {
    num: GaussInt,
    den: BigInt,
}

pub const DEFAULT_HEIGHT_CAP_BITS: u64 = 256;

impl GaussRat {
    pub fn new(num: GaussInt, den: impl Into<BigInt>) -> Result<Self> {
        let den = den.into();
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::canonical(num, den))
    }

    fn canonical(num: GaussInt, den: BigInt) -> Self {
        let (num, den) = if den.is_negative() { (-&num, -den) } else { (num, den) };
        let g = num.content().gcd(&den);
        if g.is_one() || g.is_zero() {
            return GaussRat { num, den };
        }
        GaussRat { num: GaussInt { re: num.re / &g, im: num.im / &g }, den: den / g }
    }

    pub fn from_gauss(num: GaussInt) -> Self {
        GaussRat { num, den: BigInt::one() }
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Self::from_gauss(GaussInt::from_int(n))
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        Self::canonical(GaussInt::from_int(n), BigInt::from(d))
    }

    pub fn from_rational(r: &BigRational) -> Self {
        Self::canonical(GaussInt::from_int(r.numer().clone()), r.denom().clone())
    }

    pub fn from_parts(re: &BigRational, im: &BigRational) -> Self {
        let den = re.denom().lcm(im.denom());
        let a = re.numer() * (&den / re.denom());
        let b = im.numer() * (&den / im.denom());
        Self::canonical(GaussInt { re: a, im: b }, den)
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }
    pub fn one() -> Self {
        Self::from_int(1)
    }
    pub fn i() -> Self {
        Self::from_gauss(GaussInt::i())
    }

    pub fn num(&self) -> &GaussInt {
        &self.num
    }
    pub fn den(&self) -> &BigInt {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_integral(&self) -> bool {
        self.den.is_one()
    }

    pub fn re(&self) -> BigRational {
        BigRational::new(self.num.re.clone(), self.den.clone())
    }
    pub fn im(&self) -> BigRational {
        BigRational::new(self.num.im.clone(), self.den.clone())
    }

    pub fn conj(&self) -> Self {
        GaussRat { num: self.num.conj(), den: self.den.clone() }
    }

    /// |x|² as an exact rational.
    pub fn norm(&self) -> BigRational {
        BigRational::new(self.num.norm(), &self.den * &self.den)
    }

    pub fn add(&self, o: &GaussRat) -> GaussRat {
        let den = &self.den * &o.den;
        let num = &self.num.scale(&o.den) + &o.num.scale(&self.den);
        Self::canonical(num, den)
    }

    pub fn sub(&self, o: &GaussRat) -> GaussRat {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> GaussRat {
        GaussRat { num: -&self.num, den: self.den.clone() }
    }

    pub fn mul(&self, o: &GaussRat) -> GaussRat {
        Self::canonical(&self.num * &o.num, &self.den * &o.den)
    }

    pub fn inv(&self) -> Result<GaussRat> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = self.num.norm();
        Ok(Self::canonical(self.num.conj().scale(&self.den), n))
    }

    pub fn div(&self, o: &GaussRat) -> Result<GaussRat> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn scale_int(&self, k: &BigInt) -> GaussRat {
        Self::canonical(self.num.scale(k), self.den.clone())
    }

    pub fn powi(&self, k: i64) -> Result<GaussRat> {
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let e = k.unsigned_abs();
        let num = base.num.pow(e as u32);
        let den = base.den.pow(e as u32);
        Ok(Self::canonical(num, den))
    }

    /// The binary operation selected by name, as used by the command line.
    pub fn arith(&self, o: &GaussRat, op: ArithOp) -> Result<GaussRat> {
        match op {
            ArithOp::Add => Ok(self.add(o)),
            ArithOp::Sub => Ok(self.sub(o)),
            ArithOp::Mul => Ok(self.mul(o)),
            ArithOp::Div => self.div(o),
        }
    }

    /// max(⌈|num|⌉, den); zero has height 0.
    pub fn height(&self) -> BigInt {
        if self.is_zero() {
            return BigInt::zero();
        }
        let n = self.num.norm();
        let mut s = n.sqrt();
        if &s * &s < n {
            s += 1;
        }
        s.max(self.den.clone())
    }

    pub fn height_bits(&self) -> u64 {
        self.height().bits()
    }

    /// Exponent of `prime` in the factorization of a nonzero element.
    pub fn valuation(&self, prime: Prime) -> Result<i64> {
        if self.is_zero() {
            return Err(Error::ZeroValuation);
        }
        let p = prime.value();
        let up = self.num.valuation(&p) as i64;
        let down = GaussInt::from_int(self.den.clone()).valuation(&p) as i64;
        Ok(up - down)
    }

    /// Least positive integer n with n·x ∈ A.
    pub fn order_mod_a(&self) -> BigInt {
        if self.is_zero() {
            return BigInt::one();
        }
        let e5 = v_p(&self.den, 5);
        let e13 = v_p(&self.den, 13);
        let k = e5.max(e13);
        let c = &p5bar().pow(k) * &p13bar().pow(k);
        let content = (&self.num * &c).content();
        &self.den / self.den.gcd(&content)
    }

    pub fn in_a(&self) -> bool {
        self.order_mod_a().is_one()
    }

    pub fn to_f64(&self) -> (f64, f64) {
        let d = self.den.to_f64().unwrap_or(f64::NAN);
        if d.is_finite() {
            let (a, b) = self.num.to_complex_f64();
            if a.is_finite() && b.is_finite() {
                return (a / d, b / d);
            }
        }
        (
            crate::scalar::rational_to_f64(&self.re()),
            crate::scalar::rational_to_f64(&self.im()),
        )
    }

    pub fn abs_f64(&self) -> f64 {
        let (a, b) = self.to_f64();
        a.hypot(b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

pub fn v_p(n: &BigInt, p: u32) -> u32 {
    if n.is_zero() {
        return 0;
    }
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    while (&n % &p).is_zero() {
        n /= &p;
        v += 1;
    }
    v
}

/// θ₅^s θ₁₃^t.
pub fn theta_power(s: i64, t: i64) -> GaussRat {
    let t5 = theta5();
    let t13 = theta13();
    t5.powi(s).expect("unit").mul(&t13.powi(t).expect("unit"))
}

pub fn theta5() -> GaussRat {
    GaussRat::from_gauss(p5()).div(&GaussRat::from_gauss(p5bar())).expect("nonzero")
}

pub fn theta13() -> GaussRat {
    GaussRat::from_gauss(p13()).div(&GaussRat::from_gauss(p13bar())).expect("nonzero")
}

/// x = conj(P₅)^a · conj(P₁₃)^b · P₅^c · z.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AShape {
    pub a: i64,
    pub b: i64,
    pub c: u32,
    pub z: GaussInt,
}

impl AShape {
    pub fn reassemble(&self) -> GaussRat {
        let pa = GaussRat::from_gauss(p5bar()).powi(self.a).expect("unit");
        let pb = GaussRat::from_gauss(p13bar()).powi(self.b).expect("unit");
        let pc = GaussRat::from_gauss(p5().pow(self.c));
        pa.mul(&pb).mul(&pc).mul(&GaussRat::from_gauss(self.z.clone()))
    }
}

pub fn a_shape(x: &GaussRat) -> Result<AShape> {
    if x.is_zero() {
        return Err(Error::ZeroValuation);
    }
    if !x.in_a() {
        return Err(Error::NotInA(x.to_string()));
    }
    let a = x.valuation(Prime::P5bar)?;
    let b = x.valuation(Prime::P13bar)?;
    let c = x.valuation(Prime::P5)?;
    let strip = GaussRat::from_gauss(p5bar())
        .powi(-a)?
        .mul(&GaussRat::from_gauss(p13bar()).powi(-b)?)
        .mul(&GaussRat::from_gauss(p5()).powi(-c)?);
    let rest = x.mul(&strip);
    if !rest.is_integral() || c < 0 {
        return Err(Error::NotInA(x.to_string()));
    }
    Ok(AShape { a, b, c: c as u32, z: rest.num })
}

impl fmt::Display for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else if self.num.im.is_zero() || self.num.re.is_zero() {
            write!(f, "{}/{}", self.num, self.den)
        } else {
            write!(f, "({})/{}", self.num, self.den)
        }
    }
}

impl Serialize for GaussInt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl Serialize for GaussRat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GaussRat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn parse_gauss_int(s: &str) -> Result<GaussInt> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::Invalid("empty Gaussian integer".into()));
    }
    let bad = || Error::Invalid(format!("cannot parse Gaussian integer '{s}'"));
    // split at the last sign that is not leading
    let bytes = s.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        if bytes[k] == b'+' || bytes[k] == b'-' {
            split = Some(k);
            break;
        }
    }
    let term = |t: &str| -> Result<GaussInt> {
        if let Some(body) = t.strip_suffix('i') {
            let coeff = match body {
                "" | "+" => BigInt::one(),
                "-" => -BigInt::one(),
                b => BigInt::from_str(b).map_err(|_| bad())?,
            };
            Ok(GaussInt { re: BigInt::zero(), im: coeff })
        } else {
            Ok(GaussInt::from_int(BigInt::from_str(t).map_err(|_| bad())?))
        }
    };
    match split {
        Some(k) => Ok(&term(&s[..k])? + &term(&s[k..])?),
        None => term(&s),
    }
}

impl FromStr for GaussRat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (num, den) = match s.rfind('/') {
            Some(k) => (&s[..k], Some(&s[k + 1..])),
            None => (s, None),
        };
        let num = num.trim().trim_start_matches('(').trim_end_matches(')');
        let num = parse_gauss_int(num)?;
        let den = match den {
            Some(d) => BigInt::from_str(d.trim())
                .map_err(|_| Error::Invalid(format!("bad denominator in '{s}'")))?,
            None => BigInt::one(),
        };
        GaussRat::new(num, den)
    }
}
