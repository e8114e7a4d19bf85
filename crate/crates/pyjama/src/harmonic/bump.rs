//! Product bump functions on X and their truncated H¹⁰ norms.

use num_complex::Complex;
use rand::Rng;
use serde::Serialize;

use super::fourier::Smoothstep;
use crate::error::{Error, Result};
use crate::padic::Padic;
use crate::solenoid::{distance, make_point, SolenoidPoint};

/// Largest accepted scale; the Sobolev estimate itself is stated for γ < 1/100.
pub const GAMMA_MAX: f64 = 0.1;

/// Constant used for the Lipschitz spot check C(γ^{-1} + 5^u + 13^v).
pub const LIPSCHITZ_C: f64 = 50.0;

/// The fixed cutoff g: 1 on |x| ≤ 1/10, 0 on |x| ≥ 1/5, a degree-11 smoothstep between.
#[derive(Clone, Debug)]
pub struct Cutoff {
    step: Smoothstep,
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff { step: Smoothstep::new(5) }
    }
}

impl Cutoff {
    pub fn eval(&self, x: f64) -> f64 {
        1.0 - self.step.value((x.abs() - 0.1) / 0.1)
    }

    pub fn max_slope(&self) -> f64 {
        self.step.max_derivative(1) / 0.1
    }

    /// ∫_R g(y) cos(2πωy) dy.
    pub fn transform(&self, omega: f64) -> f64 {
        let kappa = 2.0 * std::f64::consts::PI * omega;
        let flat = if kappa.abs() < 1e-12 { 0.1 } else { (0.1 * kappa).sin() / kappa };
        2.0 * (flat + self.ramp(kappa))
    }

    /// ∫_{0.1}^{0.2} g(y) cos(κy) dy.
    fn ramp(&self, kappa: f64) -> f64 {
        let k = 0.1 * kappa;
        if k.abs() < 4.0 {
            let n = 600;
            let h = 1.0 / n as f64;
            let f = |t: f64| (1.0 - self.step.value(t)) * (kappa * (0.1 + 0.1 * t)).cos();
            let mut s = f(0.0) + f(1.0);
            for j in 1..n {
                s += f(j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
            }
            return 0.1 * s * h / 3.0;
        }
        // ∫_0^1 h(t) e^{ikt} dt = [e^{ikt} Σ_j (−1)^j h^{(j)}(t) / (ik)^{j+1}]_0^1 with h = 1 − S.
        let ik = Complex::new(0.0, k);
        let deg = self.step.degree();
        let mut acc = Complex::new(0.0, 0.0);
        for (t, sign) in [(1.0, 1.0), (0.0, -1.0)] {
            let mut inner = Complex::new(0.0, 0.0);
            let mut pow = ik;
            for j in 0..=deg {
                let hj = if j == 0 { 1.0 - self.step.value(t) } else { -self.step.derivative(j, t) };
                let term = Complex::new(hj, 0.0) / pow;
                inner += if j % 2 == 0 { term } else { -term };
                pow *= ik;
            }
            acc += Complex::from_polar(1.0, k * t) * inner * sign;
        }
        0.1 * (Complex::from_polar(1.0, 0.1 * kappa) * acc).re
    }
}

/// f(a,b,z) = 1[5^u | a]·1[13^v | b]·g(Re z/γ)·g(Im z/γ) on the canonical domain.
#[derive(Clone, Debug)]
pub struct SolenoidBump {
    pub u: u32,
    pub v: u32,
    pub gamma: f64,
    cutoff: Cutoff,
}

fn divisible(x: &Padic, k: u32) -> bool {
    if k == 0 || x.is_zero() {
        return true;
    }
    match x.valuation() {
        Some(v) => v >= k as i64,
        None => true,
    }
}

impl SolenoidBump {
    pub fn new(u: u32, v: u32, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= GAMMA_MAX) {
            return Err(Error::Invalid(format!("gamma = {gamma} outside (0, {GAMMA_MAX}]")));
        }
        if u > 3 || v > 3 {
            return Err(Error::Invalid("u, v must be at most 3".into()));
        }
        Ok(SolenoidBump { u, v, gamma, cutoff: Cutoff::default() })
    }

    pub fn eval(&self, x: &SolenoidPoint<f64>) -> f64 {
        if !divisible(x.a(), self.u) || !divisible(x.b(), self.v) {
            return 0.0;
        }
        self.cutoff.eval(x.z().re / self.gamma) * self.cutoff.eval(x.z().im / self.gamma)
    }

    /// Haar integral m(f) = 5^{-u} 13^{-v} (γ ∫g)².
    pub fn mean(&self) -> f64 {
        let g0 = self.gamma * self.cutoff.transform(0.0);
        5f64.powi(-(self.u as i32)) * 13f64.powi(-(self.v as i32)) * g0 * g0
    }

    /// hat f(η) for η = x/(conj(P₅)^j conj(P₁₃)^k) described by its valuations and
    /// complex value.
    fn coefficient(&self, v5: i64, v13: i64, eta: (f64, f64)) -> f64 {
        if v5 < -(self.u as i64) || v13 < -(self.v as i64) {
            return 0.0;
        }
        let p = 5f64.powi(-(self.u as i32)) * 13f64.powi(-(self.v as i32));
        let g = self.gamma;
        p * g * self.cutoff.transform(g * eta.0) * g * self.cutoff.transform(g * eta.1)
    }

    pub fn lipschitz_bound(&self) -> f64 {
        LIPSCHITZ_C * (1.0 / self.gamma + 5f64.powi(self.u as i32) + 13f64.powi(self.v as i32))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct H10Estimate {
    pub u: u32,
    pub v: u32,
    pub gamma: f64,
    pub lambda: f64,
    pub sum: f64,
    pub terms: u64,
    /// C γ^{-28} u v 5^{7u} 13^{7v} with u, v floored at 1.
    pub bound: f64,
    pub constant: f64,
    /// Whether γ < 1/100 as in the estimate's hypothesis.
    pub in_lemma_range: bool,
}

fn val_small(mut a: i64, mut b: i64, p: i64, root: i64) -> (i64, i64, i64) {
    // p-adic valuation of a + bi at conj(P) where conj(P) | a+bi iff a ≡ root·b (mod p).
    let mut v = 0;
    while (a != 0 || b != 0) && (a - root * b).rem_euclid(p) == 0 {
        // divide by conj(P): multiply by P then divide by p
        let (pr, pi) = if p == 5 { (1, 2) } else { (2, 3) };
        let na = a * pr - b * pi;
        let nb = a * pi + b * pr;
        debug_assert!(na % p == 0 && nb % p == 0);
        a = na / p;
        b = nb / p;
        v += 1;
    }
    (v, a, b)
}

/// Truncated Σ_{⟨η⟩ ≤ Λ} ⟨η⟩¹⁰ |hat f(η)|².
pub fn bump_h10(u: u32, v: u32, gamma: f64, lambda: f64) -> Result<(SolenoidBump, H10Estimate)> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Invalid(format!("cutoff {lambda} excludes the constant term")));
    }
    let bump = SolenoidBump::new(u, v, gamma)?;
    let mut sum = 0.0;
    let mut terms = 0u64;
    // conj(P₅) = 1 − 2i divides a + bi iff a ≡ 2b (mod 5); conj(P₁₃) = 2 − 3i iff a ≡ 8b (mod 13).
    for j in 0..=u {
        for k in 0..=v {
            let scale = 5f64.powf(j as f64 / 2.0) * 13f64.powf(k as f64 / 2.0);
            let den = {
                // conj(P₅)^j conj(P₁₃)^k as a complex number
                let mut d = Complex::new(1.0, 0.0);
                for _ in 0..j {
                    d *= Complex::new(1.0, -2.0);
                }
                for _ in 0..k {
                    d *= Complex::new(2.0, -3.0);
                }
                d
            };
            let r = (lambda * scale).floor() as i64;
            for a in -r..=r {
                for b in -r..=r {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    let abs = ((a * a + b * b) as f64).sqrt();
                    if abs > lambda * scale {
                        continue;
                    }
                    let (e5, a1, b1) = val_small(a, b, 5, 2);
                    if j > 0 && e5 > 0 {
                        continue;
                    }
                    let (e13, _, _) = val_small(a1, b1, 13, 8);
                    if k > 0 && e13 > 0 {
                        continue;
                    }
                    let v5 = e5 - j as i64;
                    let v13 = e13 - k as i64;
                    let eta = Complex::new(a as f64, b as f64) / den;
                    let bracket = 5f64.powi(-v5 as i32) + 13f64.powi(-v13 as i32) + eta.norm();
                    if bracket > lambda {
                        continue;
                    }
                    let c = bump.coefficient(v5, v13, (eta.re, eta.im));
                    sum += bracket.powi(10) * c * c;
                    terms += 1;
                }
            }
        }
    }
    terms += 1;
    let constant = 1e6;
    let bound = constant
        * gamma.powi(-28)
        * (u.max(1) * v.max(1)) as f64
        * 5f64.powi(7 * u as i32)
        * 13f64.powi(7 * v as i32);
    Ok((bump.clone(), H10Estimate { u, v, gamma, lambda, sum, terms, bound, constant, in_lemma_range: gamma < 0.01 }))
}

/// Largest |f(x) − f(y)|/dist(x, y) over random pairs near the support, with the bound.
pub fn lipschitz_spot_check<R: Rng>(bump: &SolenoidBump, rng: &mut R, pairs: usize) -> Result<(f64, f64)> {
    let mut worst = 0.0f64;
    let sample = |rng: &mut R| -> Result<SolenoidPoint<f64>> {
        let ea = rng.gen_range(0..=bump.u + 1);
        let eb = rng.gen_range(0..=bump.v + 1);
        let a = Padic::from_integer(5, &(num_bigint::BigInt::from(5u64.pow(ea)) * rng.gen_range(0..1000u32)), 40);
        let b = Padic::from_integer(13, &(num_bigint::BigInt::from(13u64.pow(eb)) * rng.gen_range(0..1000u32)), 40);
        let s = bump.gamma * 0.25;
        make_point(a, b, Complex::new(rng.gen_range(-s..s), rng.gen_range(-s..s)))
    };
    for _ in 0..pairs {
        let x = sample(rng)?;
        let y = sample(rng)?;
        let d = distance(&x, &y)?.value;
        if d > 0.0 {
            worst = worst.max((bump.eval(&x) - bump.eval(&y)).abs() / d);
        }
    }
    Ok((worst, bump.lipschitz_bound()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_matches_quadrature() {
        let g = Cutoff::default();
        for omega in [0.0, 0.3, 2.0, 7.5, 30.0] {
            let n = 40_000;
            let h = 0.4 / n as f64;
            let mut s = 0.0;
            for j in 0..n {
                let y = -0.2 + (j as f64 + 0.5) * h;
                s += g.eval(y) * (2.0 * std::f64::consts::PI * omega * y).cos() * h;
            }
            assert!((s - g.transform(omega)).abs() < 1e-8, "omega={omega}: {s} vs {}", g.transform(omega));
        }
    }

    #[test]
    fn bump_value_at_origin() {
        let b = SolenoidBump::new(0, 0, 0.005).unwrap();
        assert_eq!(b.eval(&SolenoidPoint::zero()), 1.0);
        let off = make_point(Padic::zero(5), Padic::zero(13), Complex::new(0.0011, 0.0)).unwrap();
        assert_eq!(b.eval(&off), 0.0);
    }
}
