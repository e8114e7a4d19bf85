//! Scalar abstraction shared by every module.
//!
//! `Scalar` covers `f32`, `f64`, the double-double [`Dd`] and exact `BigRational`.
//! Floats carry an explicit unit roundoff so that callers can propagate error radii;
//! the exact type reports zero and every comparison on it is decided exactly.

pub mod dd;

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive};

pub use dd::Dd;

pub trait Scalar: Num + Clone + PartialOrd + Neg<Output = Self> + Debug + Send + Sync + 'static {
    const EXACT: bool;
    fn from_rational(r: &BigRational) -> Self;
    /// Exact value of the scalar (floats are dyadic rationals).
    fn to_rational(&self) -> BigRational;
    fn to_f64(&self) -> f64;
    fn floor(&self) -> Self;
    /// Unit roundoff of one arithmetic operation; zero for exact types.
    fn roundoff() -> f64;
    fn next_up(&self) -> Self;
    fn next_down(&self) -> Self;

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(n.into()))
    }
    fn from_f64(x: f64) -> Self {
        Self::from_rational(&BigRational::from_float(x).expect("finite float"))
    }
    fn half() -> Self {
        Self::from_rational(&BigRational::new(1.into(), 2.into()))
    }
    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
    fn floor_bigint(&self) -> BigInt {
        self.floor().to_rational().to_integer()
    }
}

/// Scalars with square roots and trigonometry (floating types).
pub trait RealScalar: Scalar + Copy {
    fn sqrt(self) -> Self;
    fn from_dd(x: Dd) -> Self;
    fn cos_sin_turns(turns: &BigRational) -> (Self, Self) {
        let (c, s) = Dd::cos_sin_turns(turns);
        (Self::from_dd(c), Self::from_dd(s))
    }
}

macro_rules! float_scalar {
    ($t:ty, $u:expr) => {
        impl Scalar for $t {
            const EXACT: bool = false;
            fn from_rational(r: &BigRational) -> Self {
                Dd::from_ratio(r).to_f64() as $t
            }
            fn to_rational(&self) -> BigRational {
                BigRational::from_float(*self).expect("finite float")
            }
            fn to_f64(&self) -> f64 {
                *self as f64
            }
            fn floor(&self) -> Self {
                <$t>::floor(*self)
            }
            fn roundoff() -> f64 {
                $u
            }
            fn next_up(&self) -> Self {
                <$t>::next_up(*self)
            }
            fn next_down(&self) -> Self {
                <$t>::next_down(*self)
            }
            fn from_f64(x: f64) -> Self {
                x as $t
            }
        }

        impl RealScalar for $t {
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            fn from_dd(x: Dd) -> Self {
                x.to_f64() as $t
            }
        }
    };
}

float_scalar!(f32, 5.960_464_5e-8);
float_scalar!(f64, 1.110_223_024_625_156_5e-16);

impl Scalar for Dd {
    const EXACT: bool = false;
    fn from_rational(r: &BigRational) -> Self {
        Dd::from_ratio(r)
    }
    fn to_rational(&self) -> BigRational {
        BigRational::from_float(self.hi).expect("finite")
            + BigRational::from_float(self.lo).expect("finite")
    }
    fn to_f64(&self) -> f64 {
        Dd::to_f64(*self)
    }
    fn floor(&self) -> Self {
        Dd::floor(*self)
    }
    fn roundoff() -> f64 {
        dd::EPS
    }
    fn next_up(&self) -> Self {
        *self + Dd::from_f64(self.hi.abs() * 1e-31 + f64::MIN_POSITIVE)
    }
    fn next_down(&self) -> Self {
        *self - Dd::from_f64(self.hi.abs() * 1e-31 + f64::MIN_POSITIVE)
    }
    fn from_f64(x: f64) -> Self {
        Dd::from_f64(x)
    }
}

impl RealScalar for Dd {
    fn sqrt(self) -> Self {
        Dd::sqrt(self)
    }
    fn from_dd(x: Dd) -> Self {
        x
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn to_rational(&self) -> BigRational {
        self.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| Dd::from_ratio(self).to_f64())
    }
    fn floor(&self) -> Self {
        num_rational::Ratio::floor(self)
    }
    fn roundoff() -> f64 {
        0.0
    }
    fn next_up(&self) -> Self {
        self.clone()
    }
    fn next_down(&self) -> Self {
        self.clone()
    }
    fn abs_val(&self) -> Self {
        Signed::abs(self)
    }
}

/// Modulus of a complex scalar as an `f64`, with the rounding error of the conversion folded in.
pub fn modulus<S: Scalar>(z: &Complex<S>) -> f64 {
    let re = z.re.to_f64();
    let im = z.im.to_f64();
    re.hypot(im)
}

pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    <BigRational as Scalar>::to_f64(r)
}

pub fn int_rational(n: &BigInt) -> BigRational {
    BigRational::from_integer(n.clone())
}

/// Distance from `x` to the nearest integer, together with that integer.
pub fn nearest_integer<S: Scalar>(x: &S) -> (S, BigInt) {
    let m = (x.clone() + S::half()).floor();
    let d = (x.clone() - m.clone()).abs_val();
    (d, m.to_rational().to_integer())
}

pub fn one_of<S: Scalar>() -> S {
    S::one()
}

pub fn from_usize<S: Scalar>(n: usize) -> S {
    S::from_rational(&BigRational::from_integer(BigInt::from_usize(n).unwrap_or_default()))
}

#[allow(dead_code)]
fn _assert_bounds() {
    fn is_scalar<S: Scalar>() {}
    is_scalar::<f32>();
    is_scalar::<f64>();
    is_scalar::<Dd>();
    is_scalar::<BigRational>();
    let _ = BigRational::one();
}
