//! Truncated Fourier series on R/Z and polynomial smoothsteps.

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};

/// Points of the sup-norm check grid.
pub const CHECK_GRID: usize = 10_000;

/// The polynomial smoothstep S_N of degree 2N+1 (C^N where it meets the constants 0 and 1).
#[derive(Clone, Debug)]
pub struct Smoothstep {
    coeffs: Vec<f64>,
}

fn binom(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

impl Smoothstep {
    pub fn new(order: u32) -> Self {
        let n = order as u64;
        let mut coeffs = vec![0.0; (2 * n + 2) as usize];
        for k in 0..=n {
            let c = binom(n + k, k) * binom(2 * n + 1, n - k) * if k % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[(n + 1 + k) as usize] += c;
        }
        Smoothstep { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn eval_poly(c: &[f64], t: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &a| acc * t + a)
    }

    fn derivative_coeffs(&self, k: usize) -> Vec<f64> {
        let mut c = self.coeffs.clone();
        for _ in 0..k {
            c = c.iter().enumerate().skip(1).map(|(j, &a)| a * j as f64).collect();
            if c.is_empty() {
                c.push(0.0);
            }
        }
        c
    }

    /// S(t), clamped to 0 below 0 and 1 above 1.
    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if t >= 1.0 {
            1.0
        } else {
            Self::eval_poly(&self.coeffs, t)
        }
    }

    /// S^{(k)}(t) on [0,1] (zero outside).
    pub fn derivative(&self, k: usize, t: f64) -> f64 {
        if k == 0 {
            return self.value(t);
        }
        if !(0.0..=1.0).contains(&t) {
            return 0.0;
        }
        Self::eval_poly(&self.derivative_coeffs(k), t)
    }

    /// sup |S^{(k)}| on [0,1], by dense sampling with a small safety margin.
    pub fn max_derivative(&self, k: usize) -> f64 {
        let c = self.derivative_coeffs(k);
        let m = (0..=20_000).map(|j| Self::eval_poly(&c, j as f64 / 20_000.0).abs()).fold(0.0, f64::max);
        m * 1.001
    }
}

/// Periodic bump of the quantitative approximation lemma: 1 on the middle half of an
/// interval of length ε centred at `center`, 0 off the interval.
#[derive(Clone, Debug)]
pub struct PeriodicBump {
    pub center: f64,
    pub eps: f64,
    step: Smoothstep,
}

impl PeriodicBump {
    pub fn new(center: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::Invalid(format!("interval length {eps} outside (0, 1/2]")));
        }
        Ok(PeriodicBump { center, eps, step: Smoothstep::new(5) })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let d = x - self.center;
        let d = (d - d.round()).abs();
        let w = self.eps / 4.0;
        1.0 - self.step.value((d - w) / w)
    }

    /// max(sup|f|, sup|f'|, sup|f''|).
    pub fn c2_norm(&self) -> f64 {
        let w = self.eps / 4.0;
        let d1 = self.step.max_derivative(1) / w;
        let d2 = self.step.max_derivative(2) / (w * w);
        1f64.max(d1).max(d2)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FourierTruncation {
    pub l: u64,
    pub m: f64,
    pub eta: f64,
    /// a_ξ for ξ = −L..=L.
    #[serde(skip)]
    pub coeffs: Vec<Complex<f64>>,
    pub a0: f64,
    pub grid_error: f64,
    pub max_nonzero_coeff: f64,
    pub tail_bound: f64,
    pub samples: usize,
}

impl FourierTruncation {
    pub fn coeff(&self, xi: i64) -> Complex<f64> {
        let l = self.l as i64;
        if xi.abs() > l {
            return Complex::new(0.0, 0.0);
        }
        self.coeffs[(xi + l) as usize]
    }

    pub fn eval(&self, x: f64) -> f64 {
        let l = self.l as i64;
        let mut acc = Complex::new(0.0, 0.0);
        for xi in -l..=l {
            acc += self.coeff(xi) * Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * xi as f64 * x);
        }
        acc.re
    }
}

/// Coefficients a_{−L..L}, L = ⌈M/η⌉, of a function with C²-norm at most M, with the
/// sup-norm error checked on a 10⁴-point grid.
pub fn fourier_truncate(f: &dyn Fn(f64) -> f64, m: f64, eta: f64) -> Result<FourierTruncation> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Invalid(format!("C2 bound M = {m} must be positive")));
    }
    if !(eta > 0.0 && eta < 0.1) {
        return Err(Error::Invalid(format!("eta = {eta} outside (0, 1/10)")));
    }
    let l = (m / eta).ceil() as u64;
    let k = ((8 * l as usize + 1) / CHECK_GRID + 1).max(2);
    let p = CHECK_GRID * k;
    let mut buf: Vec<Complex<f64>> = (0..p).map(|j| Complex::new(f(j as f64 / p as f64), 0.0)).collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(p).process(&mut buf);
    let scale = 1.0 / p as f64;
    let li = l as i64;
    let coeffs: Vec<Complex<f64>> =
        (-li..=li).map(|xi| buf[xi.rem_euclid(p as i64) as usize] * scale).collect();
    let mut spec = vec![Complex::new(0.0, 0.0); p];
    for (j, xi) in (-li..=li).enumerate() {
        spec[xi.rem_euclid(p as i64) as usize] = coeffs[j];
    }
    planner.plan_fft_inverse(p).process(&mut spec);
    let grid_error = (0..CHECK_GRID)
        .map(|j| (f(j as f64 / CHECK_GRID as f64) - spec[j * k].re).abs())
        .fold(0.0, f64::max);
    let max_nonzero_coeff =
        coeffs.iter().enumerate().filter(|(j, _)| *j as i64 != li).map(|(_, c)| c.norm()).fold(0.0, f64::max);
    let out = FourierTruncation {
        l,
        m,
        eta,
        a0: coeffs[l as usize].re,
        coeffs,
        grid_error,
        max_nonzero_coeff,
        tail_bound: m / (2.0 * std::f64::consts::PI.powi(2) * l as f64),
        samples: p,
    };
    if out.grid_error > eta {
        return Err(Error::Verification(format!(
            "grid error {} exceeds eta {eta}; the C2 bound {m} is too small",
            out.grid_error
        )));
    }
    Ok(out)
}
