//! Truncated p-adic numbers for p ∈ {5, 13} and the embeddings ι₅, ι₁₃ of Q(i).

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::gaussian::{p13bar, p5bar, v_p, GaussRat};

pub const DEFAULT_PRECISION: u32 = 64;
pub const PRECISION_FLOOR: u32 = 8;

const EXACT_ZERO: i64 = i64::MAX / 4;

/// `p^val · unit + O(p^(val + prec))`, with `unit` a p-adic unit known modulo `p^prec`.
///
/// A value that is zero at the available precision has `prec = 0` and stores its absolute
/// precision in `val`.  The exact zero has `val = EXACT_ZERO`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Padic {
    p: u32,
    val: i64,
    unit: BigInt,
    prec: u32,
}

pub fn pow_p(p: u32, k: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), k as usize)
}

fn check_p(p: u32) {
    assert!(p == 5 || p == 13, "only p = 5 and p = 13 are supported");
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    let e = a.extended_gcd(m);
    debug_assert!(e.gcd.is_one());
    e.x.mod_floor(m)
}

impl Padic {
    pub fn zero(p: u32) -> Self {
        check_p(p);
        Padic { p, val: EXACT_ZERO, unit: BigInt::zero(), prec: 0 }
    }

    /// Zero modulo `p^n`.
    pub fn zero_to(p: u32, n: i64) -> Self {
        check_p(p);
        Padic { p, val: n, unit: BigInt::zero(), prec: 0 }
    }

    fn normalize(p: u32, mut val: i64, u: BigInt, prec: i64) -> Self {
        if prec <= 0 {
            return Padic::zero_to(p, val + prec.max(0));
        }
        let mut prec = prec as u32;
        let m = pow_p(p, prec);
        let mut u = u.mod_floor(&m);
        if u.is_zero() {
            return Padic::zero_to(p, val + prec as i64);
        }
        let pb = BigInt::from(p);
        while (&u % &pb).is_zero() {
            u /= &pb;
            val += 1;
            prec -= 1;
        }
        Padic { p, val, unit: u, prec }
    }

    /// The integer `n` known modulo `p^abs_prec`.
    pub fn from_integer(p: u32, n: &BigInt, abs_prec: u32) -> Self {
        check_p(p);
        if n.is_zero() {
            return Padic::zero(p);
        }
        let v = v_p(n, p) as i64;
        let u = n / pow_p(p, v as u32);
        Padic::normalize(p, v, u, abs_prec as i64 - v)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn is_exact_zero(&self) -> bool {
        self.val >= EXACT_ZERO
    }

    /// True when the value is zero at the available precision.
    pub fn is_zero(&self) -> bool {
        self.prec == 0
    }

    /// Exponent of the leading digit, or `None` when the value is zero at this precision.
    pub fn valuation(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.val)
        }
    }

    /// Number of significant digits.
    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Exponent `N` such that the value is known modulo `p^N`.
    pub fn abs_precision(&self) -> i64 {
        if self.is_exact_zero() {
            EXACT_ZERO
        } else {
            self.val + self.prec as i64
        }
    }

    pub fn unit(&self) -> &BigInt {
        &self.unit
    }

    /// |x|_p; zero-at-precision values report 0.
    pub fn norm(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            (self.p as f64).powi(-(self.val as i32))
        }
    }

    /// Upper bound on |x|_p (for zero-at-precision values, p^(−N)).
    pub fn norm_bound(&self) -> f64 {
        if self.is_exact_zero() {
            0.0
        } else if self.is_zero() {
            (self.p as f64).powf(-(self.val as f64))
        } else {
            self.norm()
        }
    }

    pub fn add(&self, o: &Padic) -> Padic {
        assert_eq!(self.p, o.p, "mixed primes");
        if self.is_exact_zero() {
            return o.clone();
        }
        if o.is_exact_zero() {
            return self.clone();
        }
        let n = self.abs_precision().min(o.abs_precision());
        let m = self.val.min(o.val);
        if n <= m {
            return Padic::zero_to(self.p, n);
        }
        let shift = |x: &Padic| -> BigInt {
            if x.is_zero() || x.val >= n {
                BigInt::zero()
            } else {
                &x.unit * pow_p(x.p, (x.val - m) as u32)
            }
        };
        Padic::normalize(self.p, m, shift(self) + shift(o), n - m)
    }

    pub fn neg(&self) -> Padic {
        if self.is_zero() {
            return self.clone();
        }
        let m = pow_p(self.p, self.prec);
        Padic { p: self.p, val: self.val, unit: (&m - &self.unit).mod_floor(&m), prec: self.prec }
    }

    pub fn sub(&self, o: &Padic) -> Padic {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Padic) -> Padic {
        assert_eq!(self.p, o.p, "mixed primes");
        if self.is_exact_zero() || o.is_exact_zero() {
            return Padic::zero(self.p);
        }
        if self.is_zero() || o.is_zero() {
            return Padic::zero_to(self.p, self.val + o.val);
        }
        let prec = self.prec.min(o.prec);
        Padic::normalize(self.p, self.val + o.val, &self.unit * &o.unit, prec as i64)
    }

    pub fn inv(&self) -> Result<Padic> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let m = pow_p(self.p, self.prec);
        Ok(Padic { p: self.p, val: -self.val, unit: mod_inverse(&self.unit, &m), prec: self.prec })
    }

    pub fn div(&self, o: &Padic) -> Result<Padic> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, k: u64) -> Padic {
        if k == 0 {
            return Padic::from_integer(self.p, &BigInt::one(), self.prec.max(1));
        }
        if self.is_exact_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return Padic::zero_to(self.p, self.val * k as i64);
        }
        let m = pow_p(self.p, self.prec);
        let u = self.unit.modpow(&BigInt::from(k), &m);
        Padic { p: self.p, val: self.val * k as i64, unit: u, prec: self.prec }
    }

    /// Keep at most `prec` significant digits.
    pub fn truncate(&self, prec: u32) -> Padic {
        if self.prec <= prec {
            return self.clone();
        }
        Padic::normalize(self.p, self.val, self.unit.clone(), prec as i64)
    }

    /// Fractional part Σ_{k<0} a_k p^k as an exact rational in [0, 1).
    pub fn frac_part(&self) -> Result<BigRational> {
        if self.is_exact_zero() {
            return Ok(BigRational::zero());
        }
        if self.abs_precision() < 0 {
            return Err(Error::Precision(format!(
                "{}-adic digits below p^0 unknown (known mod p^{})",
                self.p,
                self.abs_precision()
            )));
        }
        if self.is_zero() || self.val >= 0 {
            return Ok(BigRational::zero());
        }
        let k = (-self.val) as u32;
        let m = pow_p(self.p, k);
        Ok(BigRational::new(self.unit.mod_floor(&m), m))
    }

    /// Residue modulo `p^k` of an element of Z_p.
    pub fn residue(&self, k: u32) -> Result<BigInt> {
        if self.is_exact_zero() {
            return Ok(BigInt::zero());
        }
        if self.abs_precision() < k as i64 {
            return Err(Error::Precision(format!("need {k} digits, have {}", self.abs_precision())));
        }
        if self.is_zero() || self.val >= k as i64 {
            return Ok(BigInt::zero());
        }
        if self.val < 0 {
            return Err(Error::Invalid("residue of a non-integral p-adic number".into()));
        }
        let m = pow_p(self.p, k);
        Ok((&self.unit * pow_p(self.p, self.val as u32)).mod_floor(&m))
    }

    /// Base-p digits of an integral value, most significant first (`...d₂d₁d₀`).
    pub fn digit_string(&self) -> String {
        const ALPHABET: &[u8] = b"0123456789abc";
        if self.is_exact_zero() {
            return "0".into();
        }
        let n = self.abs_precision();
        if n <= 0 || self.val < 0 {
            return format!("{}e{}:{}", self.unit, self.val, self.prec);
        }
        let r = self.residue(n as u32).unwrap_or_default();
        let pb = BigInt::from(self.p);
        let mut digits = Vec::with_capacity(n as usize);
        let mut x = r;
        for _ in 0..n {
            let d = (&x % &pb).to_usize().unwrap_or(0);
            digits.push(ALPHABET[d] as char);
            x /= &pb;
        }
        digits.iter().rev().collect()
    }

    /// Agreement to the shared precision.
    pub fn agrees(&self, o: &Padic) -> bool {
        self.sub(o).is_zero()
    }
}

fn root_cache() -> &'static Mutex<HashMap<u32, (u32, BigInt)>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, (u32, BigInt)>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The fixed square root of −1 modulo `p^k`: ≡ 3 (mod 5) for p = 5 and the root killing
/// conj(P₁₃) = 2 − 3i for p = 13, i.e. ≡ 5 (mod 13).
pub fn root_of_minus_one(p: u32, k: u32) -> BigInt {
    check_p(p);
    {
        let cache = root_cache().lock().expect("cache");
        if let Some((kk, r)) = cache.get(&p) {
            if *kk >= k {
                return r.mod_floor(&pow_p(p, k));
            }
        }
    }
    let target = k.max(256);
    let mut r = BigInt::from(if p == 5 { 3 } else { 5 });
    let mut have = 1u32;
    while have < target {
        have = (2 * have).min(target);
        let m = pow_p(p, have);
        let f = (&r * &r + 1u32).mod_floor(&m);
        let d = mod_inverse(&(&r * 2u32).mod_floor(&m), &m);
        r = (&r - f * d).mod_floor(&m);
    }
    root_cache().lock().expect("cache").insert(p, (target, r.clone()));
    r.mod_floor(&pow_p(p, k))
}

/// ι_p(x) with `prec` significant digits.
pub fn embed(x: &GaussRat, p: u32, prec: u32) -> Padic {
    check_p(p);
    if x.is_zero() {
        return Padic::zero(p);
    }
    let pi = if p == 5 { p5bar() } else { p13bar() };
    let vnum = x.num().valuation(&pi);
    let k = prec + vnum;
    let m = pow_p(p, k);
    let r = root_of_minus_one(p, k);
    let n_int = (&x.num().re + &x.num().im * r).mod_floor(&m);
    let pv = pow_p(p, vnum);
    debug_assert!((&n_int % &pv).is_zero());
    let unit_num = &n_int / &pv;
    let vd = v_p(x.den(), p);
    let d_unit = x.den() / pow_p(p, vd);
    let mp = pow_p(p, prec);
    let unit = unit_num * mod_inverse(&d_unit.mod_floor(&mp), &mp);
    Padic::normalize(p, vnum as i64 - vd as i64, unit, prec as i64)
}

pub fn embed_rational(x: &BigRational, p: u32, prec: u32) -> Padic {
    embed(&GaussRat::from_rational(x), p, prec)
}

/// Residue modulo `p^k` of an integral p-adic number as a machine integer.
pub fn residue_u64(x: &Padic, k: u32) -> Result<u64> {
    x.residue(k)?
        .to_u64()
        .ok_or_else(|| Error::Invalid("residue exceeds 64 bits".into()))
}

pub fn is_p_unit(x: &BigInt, p: u32) -> bool {
    !(x.abs() % p).is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{p5, theta5, GaussInt};

    #[test]
    fn embedding_of_i() {
        let i = GaussRat::i();
        assert_eq!(embed(&i, 5, 2).residue(2).unwrap(), BigInt::from(18));
        assert_eq!(embed(&i, 13, 1).residue(1).unwrap(), BigInt::from(5));
        let one = embed(&GaussRat::one(), 5, 20);
        assert_eq!(one.residue(20).unwrap(), BigInt::one());
    }

    #[test]
    fn root_squares_to_minus_one() {
        for p in [5u32, 13] {
            let r = root_of_minus_one(p, 300);
            let m = pow_p(p, 300);
            assert!(((&r * &r) + 1u32).mod_floor(&m).is_zero());
        }
    }

    #[test]
    fn fractional_parts() {
        let fifth = embed(&GaussRat::from_ratio(1, 5), 5, 30);
        assert_eq!(fifth.frac_part().unwrap(), BigRational::new(1.into(), 5.into()));
        let x = GaussRat::from_gauss(GaussInt::new(1, -2)).inv().unwrap();
        let e = embed(&x, 5, 30);
        assert_eq!(e.frac_part().unwrap(), BigRational::new(2.into(), 5.into()));
        assert_eq!(embed(&GaussRat::from_ratio(7, 3), 5, 30).frac_part().unwrap(), BigRational::zero());
    }

    #[test]
    fn norms_of_primes() {
        let a = embed(&GaussRat::from_gauss(p5()), 5, 30);
        let b = embed(&GaussRat::from_gauss(p5bar()), 5, 30);
        assert_eq!(a.norm(), 1.0);
        assert_eq!(b.norm(), 0.2);
        let prod = a.mul(&b);
        assert!(prod.agrees(&embed(&GaussRat::from_int(5), 5, 30)));
        let t = embed(&theta5(), 5, 30);
        let tb = embed(&theta5().conj(), 5, 30);
        assert!(t.mul(&tb).agrees(&embed(&GaussRat::one(), 5, 30)));
        let c = embed(&GaussRat::from_gauss(p13bar()), 13, 20);
        assert!((c.norm() - 1.0 / 13.0).abs() < 1e-15);
    }

    #[test]
    fn zero_handling() {
        let x = embed(&GaussRat::from_ratio(3, 7), 5, 20);
        assert!(x.sub(&x).is_zero());
        assert!(!x.sub(&x).is_exact_zero());
        assert_eq!(x.add(&Padic::zero(5)), x);
        assert!(Padic::zero(5).mul(&x.truncate(3).pow(0)).is_exact_zero());
    }

    #[test]
    fn digit_string_is_most_significant_first() {
        let x = Padic::from_integer(5, &BigInt::from(7), 4);
        assert_eq!(x.digit_string(), "0012");
    }
}
