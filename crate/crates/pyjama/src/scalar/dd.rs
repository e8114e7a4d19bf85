//! Double-double floating point (about 106 significant bits).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, ToPrimitive, Zero};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

pub const TWO_PI: Dd = Dd { hi: 6.283185307179586, lo: 2.4492935982947064e-16 };
pub const PI: Dd = Dd { hi: 3.141592653589793, lo: 1.2246467991473532e-16 };

/// Relative rounding error of one double-double operation (conservative).
pub const EPS: f64 = 1.0e-31;

impl Dd {
    pub const fn new(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Rounds an exact rational to the nearest double-double.
    pub fn from_ratio(r: &BigRational) -> Self {
        let hi = ratio_to_f64(r);
        if !hi.is_finite() || hi == 0.0 {
            return Dd::from_f64(hi);
        }
        let rest = r - BigRational::from_float(hi).expect("finite");
        Dd::from_parts(hi, ratio_to_f64(&rest))
    }

    pub fn from_parts(hi: f64, lo: f64) -> Self {
        let (h, l) = quick_two_sum(hi, lo);
        Dd { hi: h, lo: l }
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn floor(self) -> Self {
        let fh = self.hi.floor();
        if fh == self.hi {
            Dd::from_parts(fh, self.lo.floor())
        } else {
            Dd::from_f64(fh)
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::from_f64(0.0);
        }
        let x = Dd::from_f64(self.hi.sqrt());
        x + (self - x * x) / (x * Dd::from_f64(2.0))
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (h, l) = quick_two_sum(p, e + self.lo * b);
        Dd { hi: h, lo: l }
    }

    /// `(cos 2πx, sin 2πx)` for an exact rational number of turns `x`.
    pub fn cos_sin_turns(turns: &BigRational) -> (Dd, Dd) {
        let fl = turns.floor();
        let f = turns - fl;
        let four = BigRational::from_integer(BigInt::from(4));
        let q = (&f * &four).round();
        let r = &f - &q / &four;
        let quadrant = q.to_integer().to_i64().unwrap_or(0).rem_euclid(4);
        let x = TWO_PI * Dd::from_ratio(&r);
        let (c, s) = cos_sin_small(x);
        match quadrant {
            0 => (c, s),
            1 => (-s, c),
            2 => (-c, -s),
            _ => (s, -c),
        }
    }

    pub fn cos_sin_turns_f64(turns: f64) -> (Dd, Dd) {
        Dd::cos_sin_turns(&BigRational::from_float(turns).expect("finite angle"))
    }

    pub fn powi(self, mut k: u64) -> Self {
        let mut base = self;
        let mut acc = Dd::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Taylor series for |x| ≤ π/4.
fn cos_sin_small(x: Dd) -> (Dd, Dd) {
    let x2 = x * x;
    let mut s = x;
    let mut term = x;
    let mut k = 1.0;
    loop {
        term = -(term * x2) / Dd::from_f64((k + 1.0) * (k + 2.0));
        k += 2.0;
        s = s + term;
        if term.hi.abs() < 1e-34 {
            break;
        }
    }
    let mut c = Dd::one();
    let mut term = Dd::one();
    let mut k = 0.0;
    loop {
        term = -(term * x2) / Dd::from_f64((k + 1.0) * (k + 2.0));
        k += 2.0;
        c = c + term;
        if term.hi.abs() < 1e-34 {
            break;
        }
    }
    (c, s)
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (h, l) = quick_two_sum(s, e + f);
        Dd { hi: h, lo: l }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (h, l) = quick_two_sum(p, e);
        Dd { hi: h, lo: l }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        Dd::from_parts(q1, q2) + Dd::from_f64(q3)
    }
}

impl Rem for Dd {
    type Output = Dd;
    fn rem(self, b: Dd) -> Dd {
        let q = self / b;
        let t = if q.hi < 0.0 { -((-q).floor()) } else { q.floor() };
        self - t * b
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl Zero for Dd {
    fn zero() -> Dd {
        Dd::from_f64(0.0)
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }
}

impl One for Dd {
    fn one() -> Dd {
        Dd::from_f64(1.0)
    }
}

impl Num for Dd {
    type FromStrRadixErr = std::num::ParseFloatError;
    fn from_str_radix(s: &str, _radix: u32) -> Result<Dd, Self::FromStrRadixErr> {
        s.parse::<f64>().map(Dd::from_f64)
    }
}

impl FromPrimitive for Dd {
    fn from_i64(n: i64) -> Option<Dd> {
        let hi = n as f64;
        let lo = (n - hi as i64) as f64;
        Some(Dd::from_parts(hi, lo))
    }
    fn from_u64(n: u64) -> Option<Dd> {
        let hi = n as f64;
        let lo = (n as i128 - hi as i128) as f64;
        Some(Dd::from_parts(hi, lo))
    }
    fn from_f64(x: f64) -> Option<Dd> {
        Some(Dd::from_f64(x))
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}
