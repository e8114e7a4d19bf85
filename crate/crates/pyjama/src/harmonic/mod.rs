//! Finite quotients θ₅^{-n}A/A, their duals, the θ₁₃-subgroup and the averaged
//! Fourier bound for measures on them.

pub mod bump;
pub mod fourier;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{p5, theta13, v_p, GaussRat, Prime};
use crate::padic::{embed, residue_u64};
use crate::scalar::Dd;
use crate::solenoid::{SolenoidPoint, TorsionPoint};

/// Largest n for which 5^n-element groups are enumerated.
pub const GROUP_CAP: u32 = 8;

fn check_n(n: u32) -> Result<()> {
    if n > GROUP_CAP {
        return Err(Error::Invalid(format!("n = {n} exceeds the cap {GROUP_CAP}")));
    }
    Ok(())
}

pub fn pow5(n: u32) -> u64 {
    5u64.pow(n)
}

/// The ring map A → Z/5^n with kernel P₅^n A (so that i ↦ r with r ≡ 2 mod 5).
pub fn phi_residue(x: &GaussRat, n: u32) -> Result<u64> {
    if !x.in_a() {
        return Err(Error::NotInA(x.to_string()));
    }
    if n == 0 || x.is_zero() {
        return Ok(0);
    }
    let e = embed(&x.conj(), 5, n + 4);
    residue_u64(&e, n)
}

/// {ι₅(w/2)}₅ + {ι₁₃(w/2)}₁₃ − Re(w) reduced into [0, 1); vanishes exactly on A.
pub fn pairing_value(w: &GaussRat) -> Result<BigRational> {
    if w.is_zero() {
        return Ok(BigRational::zero());
    }
    let h = w.mul(&GaussRat::from_ratio(1, 2));
    let f5 = embed(&h, 5, v_p(w.den(), 5) + 4).frac_part()?;
    let f13 = embed(&h, 13, v_p(w.den(), 13) + 4).frac_part()?;
    let v = f5 + f13 - w.re();
    Ok(&v - v.floor())
}

/// ψ(η)(x) for η ∈ A and a Gaussian rational x.
pub fn dual_pair(eta: &GaussRat, x: &GaussRat) -> Result<BigRational> {
    if !eta.in_a() {
        return Err(Error::NotInA(eta.to_string()));
    }
    pairing_value(&eta.mul(x))
}

/// θ₅^{-n}A/A ≅ Z/5^n, realised on the representatives m·P₅^{-n}.
#[derive(Clone, Debug)]
pub struct TorsionGroup {
    n: u32,
    order: u64,
    p5_inv: GaussRat,
}

pub fn cyclic_iso(n: u32) -> Result<TorsionGroup> {
    check_n(n)?;
    let p5_inv = GaussRat::from_gauss(p5().pow(n)).inv()?;
    Ok(TorsionGroup { n, order: pow5(n), p5_inv })
}

impl TorsionGroup {
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn order(&self) -> u64 {
        self.order
    }

    /// The representative m·P₅^{-n}.
    pub fn element(&self, m: u64) -> GaussRat {
        self.p5_inv.scale_int(&BigInt::from(m % self.order.max(1)))
    }

    pub fn point(&self, m: u64) -> Result<TorsionPoint> {
        crate::solenoid::torsion_from_rational(&self.element(m))
    }

    /// Inverse of [`element`](Self::element): residue of q ∈ P₅^{-n}Z[i] + A.
    pub fn index(&self, q: &GaussRat) -> Result<u64> {
        let scaled = q.mul(&GaussRat::from_gauss(p5().pow(self.n)));
        phi_residue(&scaled, self.n)
    }
}

/// Exhaustive comparison of ×P₅^ℓ on points with ×5^ℓ on residues.
#[derive(Clone, Debug, Serialize)]
pub struct IntertwiningReport {
    pub n: u32,
    pub checked: u64,
    /// Pairs (m, ℓ) where index(P₅^ℓ x_m) ≠ 5^ℓ m.
    pub literal_failures: u64,
    pub first_literal_failure: Option<(u64, u32, u64, u64)>,
    /// index(P₅^ℓ x_m) = (φ(P₅))^ℓ m with φ(P₅) = 5u, u a unit.
    pub unit_twisted_ok: bool,
    pub unit: u64,
    /// The image of ×P₅^ℓ is the subgroup 5^ℓ Z/5^n for every ℓ.
    pub subgroup_lattice_ok: bool,
    pub homomorphism_ok: bool,
    pub bijective: bool,
}

impl IntertwiningReport {
    pub fn literal_ok(&self) -> bool {
        self.literal_failures == 0
    }
}

pub fn intertwining(n: u32) -> Result<IntertwiningReport> {
    let g = cyclic_iso(n)?;
    let modulus = g.order();
    let p5r = GaussRat::from_gauss(p5());
    let phi_p5 = phi_residue(&p5r, n.max(1) + 1)? % (modulus * 5);
    let unit = if n == 0 { 1 } else { (phi_p5 / 5) % modulus.max(1) };
    let mut report = IntertwiningReport {
        n,
        checked: 0,
        literal_failures: 0,
        first_literal_failure: None,
        unit_twisted_ok: true,
        unit,
        subgroup_lattice_ok: true,
        homomorphism_ok: true,
        bijective: true,
    };
    let mut seen = vec![false; modulus as usize];
    for m in 0..modulus {
        let idx = g.index(&g.element(m))?;
        if idx != m {
            report.bijective = false;
        }
        seen[idx as usize] = true;
    }
    report.bijective &= seen.iter().all(|&s| s);
    for ell in 0..=n {
        let mul = GaussRat::from_gauss(p5().pow(ell));
        let step = 5u64.pow(ell);
        let mut image = std::collections::BTreeSet::new();
        for m in 0..modulus {
            let got = g.index(&g.element(m).mul(&mul))?;
            image.insert(got);
            report.checked += 1;
            let literal = (step as u128 * m as u128 % modulus as u128) as u64;
            if got != literal {
                report.literal_failures += 1;
                if report.first_literal_failure.is_none() {
                    report.first_literal_failure = Some((m, ell, got, literal));
                }
            }
            let twist = (BigInt::from(phi_p5).modpow(&BigInt::from(ell), &BigInt::from(modulus)) * m) % modulus;
            if BigInt::from(got) != twist {
                report.unit_twisted_ok = false;
            }
        }
        let expect: std::collections::BTreeSet<u64> = (0..modulus).filter(|x| x % step == 0).collect();
        if image != expect {
            report.subgroup_lattice_ok = false;
        }
    }
    for m in 0..modulus.min(50) {
        let m2 = (m * 7 + 3) % modulus;
        let sum = g.index(&g.element(m).add(&g.element(m2)))?;
        if sum != (m + m2) % modulus {
            report.homomorphism_ok = false;
        }
    }
    Ok(report)
}

/// The subgroup of (Z/5^n)^× generated by θ₁₃ and the lifting-the-exponent level α.
#[derive(Clone, Debug, Serialize)]
pub struct S13 {
    pub n: u32,
    pub generator: u64,
    pub elements: Vec<u64>,
    /// Multiplicative order of P₁₃ modulo P₅.
    pub k: u32,
    pub alpha: u32,
    /// 1 + 5^α(Z/5^n) ⊆ S₁₃(n), checked exhaustively.
    pub containment: bool,
}

/// α = v_{P₅}(θ₁₃^k − 1).
pub fn lte_alpha() -> (u32, u32) {
    let p13_mod = (2 + 3 * 2) % 5u64;
    let mut k = 1;
    let mut x = p13_mod;
    while x != 1 {
        x = x * p13_mod % 5;
        k += 1;
    }
    let t = theta13().powi(k as i64).expect("unit").sub(&GaussRat::one());
    let alpha = t.valuation(Prime::P5).expect("θ₁₃^k ≠ 1");
    (k, alpha as u32)
}

pub fn s13_subgroup(n: u32) -> Result<S13> {
    check_n(n)?;
    let modulus = pow5(n);
    let (k, alpha) = lte_alpha();
    let generator = phi_residue(&theta13(), n)?;
    let mut elements = vec![1 % modulus.max(1)];
    let mut x = generator;
    while n > 0 && x != 1 {
        elements.push(x);
        x = (x as u128 * generator as u128 % modulus as u128) as u64;
    }
    elements.sort_unstable();
    let mut present = vec![false; modulus as usize];
    for &e in &elements {
        present[e as usize] = true;
    }
    let step = if alpha >= n { modulus } else { pow5(alpha) };
    let containment = (0..modulus / step.max(1)).all(|j| present[((1 + j * step) % modulus) as usize]);
    Ok(S13 { n, generator, elements, k, alpha, containment })
}

/// c with ψ(η)(m·P₅^{-n}) = c·η·m/5^n mod 1 for integer η.
pub fn pairing_constant(n: u32) -> Result<u64> {
    let g = cyclic_iso(n)?;
    let v = dual_pair(&GaussRat::one(), &g.element(1))?;
    let c = v * BigRational::from_integer(BigInt::from(g.order()));
    debug_assert!(c.is_integer());
    Ok(c.to_integer().to_u64().unwrap_or(0))
}

/// e(x) for an exact rational x, in double-double.
pub fn e_turns(x: &BigRational) -> Complex<Dd> {
    let (c, s) = Dd::cos_sin_turns(x);
    Complex::new(c, s)
}

/// Largest deviation of the character table of Z/5^n (computed through ψ) from
/// orthogonality: max |⟨χ_η, χ_η'⟩/5^n − δ|.
pub fn orthogonality_defect(n: u32) -> Result<f64> {
    let g = cyclic_iso(n)?;
    let q = g.order();
    let mut table = Vec::with_capacity(q as usize);
    for eta in 0..q {
        let e = GaussRat::from_int(eta);
        let row: Vec<Complex<Dd>> =
            (0..q).map(|m| dual_pair(&e, &g.element(m)).map(|v| e_turns(&v))).collect::<Result<_>>()?;
        table.push(row);
    }
    let mut worst = 0.0f64;
    for a in 0..q as usize {
        for b in 0..q as usize {
            let mut acc = Complex::new(Dd::zero(), Dd::zero());
            for m in 0..q as usize {
                acc = acc + table[a][m] * table[b][m].conj();
            }
            let scale = Dd::from_f64(q as f64);
            let expect = if a == b { Dd::one() } else { Dd::zero() };
            let re = (acc.re / scale - expect).abs().to_f64();
            let im = (acc.im / scale).abs().to_f64();
            worst = worst.max(re.hypot(im));
        }
    }
    Ok(worst)
}

/// A measure on γ + θ₅^{-n}A/A with exact rational weights indexed by residues.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    pub n: u32,
    pub weights: Vec<BigRational>,
    pub base: Option<SolenoidPoint<f64>>,
}

impl DiscreteMeasure {
    pub fn new(n: u32, weights: Vec<BigRational>) -> Result<Self> {
        check_n(n)?;
        if weights.len() as u64 != pow5(n) {
            return Err(Error::Invalid(format!("expected {} weights", pow5(n))));
        }
        if weights.iter().any(|w| w.is_negative()) {
            return Err(Error::Invalid("negative weight".into()));
        }
        Ok(DiscreteMeasure { n, weights, base: None })
    }

    pub fn uniform(n: u32) -> Result<Self> {
        let q = pow5(n);
        Self::new(n, vec![BigRational::new(BigInt::one(), BigInt::from(q)); q as usize])
    }

    pub fn point_mass(n: u32, s: u64) -> Result<Self> {
        let q = pow5(n);
        let mut w = vec![BigRational::zero(); q as usize];
        w[(s % q) as usize] = BigRational::one();
        Self::new(n, w)
    }

    /// Integer weights in 0..=9 on a random support, normalised.
    pub fn random<R: Rng>(n: u32, rng: &mut R) -> Result<Self> {
        let q = pow5(n) as usize;
        let support = rng.gen_range(1..=q);
        let mut raw = vec![0u64; q];
        for _ in 0..support {
            let s = rng.gen_range(0..q);
            raw[s] += rng.gen_range(1..=9);
        }
        let total: u64 = raw.iter().sum();
        let w = raw.iter().map(|&c| BigRational::new(BigInt::from(c), BigInt::from(total))).collect();
        Self::new(n, w)
    }

    pub fn with_base(mut self, base: SolenoidPoint<f64>) -> Self {
        self.base = Some(base);
        self
    }

    pub fn total(&self) -> BigRational {
        self.weights.iter().fold(BigRational::zero(), |a, w| a + w)
    }

    pub fn is_probability(&self) -> bool {
        self.total().is_one()
    }

    /// ‖μ‖₂² = Σ w_s².
    pub fn l2_squared(&self) -> BigRational {
        self.weights.iter().fold(BigRational::zero(), |a, w| a + w * w)
    }

    /// A(d) = Σ_s w_s w_{s+d}.
    pub fn autocorrelation(&self) -> Vec<BigRational> {
        let q = self.weights.len();
        let support: Vec<usize> = (0..q).filter(|&s| !self.weights[s].is_zero()).collect();
        let mut a = vec![BigRational::zero(); q];
        for &s in &support {
            for &t in &support {
                let d = (t + q - s) % q;
                a[d] += &self.weights[s] * &self.weights[t];
            }
        }
        a
    }
}

/// hat μ(η) = Σ_s w_s e(η(γ + x_s)) for an integer residue η, with error radius.
pub fn measure_fourier(mu: &DiscreteMeasure, eta: u64) -> Result<(Complex<f64>, f64)> {
    let q = pow5(mu.n);
    let c = pairing_constant(mu.n)?;
    let mut acc = Complex::new(Dd::zero(), Dd::zero());
    let mut terms = 0u64;
    for (s, w) in mu.weights.iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        let k = (c as u128 * (eta % q) as u128 * s as u128 % q as u128) as i64;
        let e = e_turns(&BigRational::new(BigInt::from(k), BigInt::from(q)));
        let wd = Dd::from_ratio(w);
        acc = acc + Complex::new(e.re * wd, e.im * wd);
        terms += 1;
    }
    let mut out = Complex::new(acc.re.to_f64(), acc.im.to_f64());
    let mut err = (terms as f64 + 1.0) * 1e-29 + 2.0 * f64::EPSILON;
    if let Some(base) = &mu.base {
        let (v, e) = base.char_eval(&GaussRat::from_int(eta))?;
        let ph = Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * v);
        out *= ph;
        err += 2.0 * std::f64::consts::PI * e + 4.0 * f64::EPSILON;
    }
    Ok((out, err))
}

/// v_{P₅} of the integer residue η, capped at n (η = 0 gives n).
fn v_p5_residue(eta: u64, n: u32) -> u32 {
    if eta == 0 {
        return n;
    }
    let mut v = 0;
    let mut x = eta;
    while x % 5 == 0 && v < n {
        x /= 5;
        v += 1;
    }
    v
}

/// Averaged kernel K[j] = E_{ξ ∈ S₁₃(n)} cos(2π c ξ j / 5^n).
fn averaged_kernel(s13: &S13, c: u64) -> Vec<Dd> {
    let q = pow5(s13.n);
    let cos: Vec<Dd> = (0..q)
        .map(|j| Dd::cos_sin_turns(&BigRational::new(BigInt::from(j), BigInt::from(q))).0)
        .collect();
    let inv = Dd::one() / Dd::from_f64(s13.elements.len() as f64);
    (0..q)
        .into_par_iter()
        .map(|j| {
            if j == 0 {
                return Dd::one();
            }
            let mut acc = Dd::zero();
            for &xi in &s13.elements {
                let k = (c as u128 * xi as u128 % q as u128 * j as u128 % q as u128) as usize;
                acc = acc + cos[k];
            }
            acc * inv
        })
        .collect()
}

/// Per-measure outcome of the averaged Fourier bound.
#[derive(Clone, Debug, Serialize)]
pub struct RigidityOutcome {
    pub max_ratio: f64,
    pub worst_eta: u64,
    pub violations: u64,
    pub etas_checked: u64,
}

/// For every η ∈ Z/5^n checks E_ξ|hat(ξ_*μ)(η)|² + err ≤ 5^{min(α+v(η),n)}‖μ‖₂².
pub fn rigidity_check(mu: &DiscreteMeasure, s13: &S13) -> Result<RigidityOutcome> {
    let n = mu.n;
    if s13.n != n {
        return Err(Error::Invalid("subgroup level differs from the measure level".into()));
    }
    let q = pow5(n);
    let c = pairing_constant(n)?;
    let kernel = averaged_kernel(s13, c);
    let auto = mu.autocorrelation();
    let nonzero: Vec<(u64, &BigRational, Dd)> = auto
        .iter()
        .enumerate()
        .filter(|(_, a)| !a.is_zero())
        .map(|(d, a)| (d as u64, a, Dd::from_ratio(a)))
        .collect();
    let l2 = mu.l2_squared();
    let per_eta: Vec<(u64, f64, bool)> = (0..q)
        .into_par_iter()
        .map(|eta| {
            let mut exact = BigRational::zero();
            let mut approx = Dd::zero();
            let mut mass = 0.0;
            for (d, a, ad) in &nonzero {
                let j = (eta as u128 * *d as u128 % q as u128) as usize;
                if j == 0 {
                    exact += *a;
                } else {
                    approx = approx + *ad * kernel[j];
                    mass += ad.to_f64().abs();
                }
            }
            let err = if mass > 0.0 { mass * 1e-28 + 1e-30 } else { 0.0 };
            let v = v_p5_residue(eta, n);
            let level = (s13.alpha + v).min(n);
            let rhs = BigRational::from_integer(BigInt::from(pow5(level))) * &l2;
            let lhs = Dd::from_ratio(&exact) + approx;
            let rhs_d = Dd::from_ratio(&rhs);
            let violated = if err == 0.0 { exact > rhs } else { lhs + Dd::from_f64(err) > rhs_d };
            let ratio = (lhs / rhs_d).to_f64();
            (eta, ratio, violated)
        })
        .collect();
    let mut out = RigidityOutcome { max_ratio: f64::NEG_INFINITY, worst_eta: 0, violations: 0, etas_checked: q };
    for (eta, ratio, violated) in per_eta {
        if ratio > out.max_ratio {
            out.max_ratio = ratio;
            out.worst_eta = eta;
        }
        if violated {
            out.violations += 1;
        }
    }
    Ok(out)
}

/// Report over several random measures at one level.
#[derive(Clone, Debug, Serialize)]
pub struct RigidityReport {
    pub n: u32,
    pub alpha: u32,
    pub worst_eta: u64,
    pub max_ratio: f64,
    pub measures_tested: u64,
    pub violations: u64,
}

impl RigidityReport {
    pub fn to_json(&self) -> serde_json::Value {
        use crate::report::fixed;
        serde_json::json!({
            "n": self.n,
            "alpha": self.alpha,
            "worst_eta": self.worst_eta,
            "max_ratio": fixed(self.max_ratio),
            "measures_tested": self.measures_tested,
            "violations": self.violations,
        })
    }
}

pub fn rigidity_suite<R: Rng>(n: u32, trials: u64, rng: &mut R) -> Result<RigidityReport> {
    let s13 = s13_subgroup(n)?;
    let mut report =
        RigidityReport { n, alpha: s13.alpha, worst_eta: 0, max_ratio: f64::NEG_INFINITY, measures_tested: 0, violations: 0 };
    for _ in 0..trials {
        let mu = DiscreteMeasure::random(n, rng)?;
        let out = rigidity_check(&mu, &s13)?;
        report.measures_tested += 1;
        report.violations += out.violations;
        if out.max_ratio > report.max_ratio {
            report.max_ratio = out.max_ratio;
            report.worst_eta = out.worst_eta;
        }
    }
    Ok(report)
}

/// Σ_η |hat μ(η)|² and 5^n Σ w_s² (Parseval on Z/5^n).
pub fn parseval(mu: &DiscreteMeasure) -> Result<(f64, f64)> {
    let q = pow5(mu.n);
    let mut lhs = 0.0;
    for eta in 0..q {
        lhs += measure_fourier(mu, eta)?.0.norm_sqr();
    }
    let rhs = BigRational::from_integer(BigInt::from(q)) * mu.l2_squared();
    Ok((lhs, crate::scalar::rational_to_f64(&rhs)))
}

/// Residue of the unit θ₁₃ in Z/5^n.
pub fn theta13_residue(n: u32) -> Result<u64> {
    phi_residue(&theta13(), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use rand::SeedableRng;

    #[test]
    fn iso_small_cases() {
        let g = cyclic_iso(1).unwrap();
        assert!(g.point(0).unwrap().is_zero());
        let t = g.point(1).unwrap();
        let inv = GaussRat::from_gauss(p5()).inv().unwrap();
        assert_eq!(t, crate::solenoid::torsion_from_rational(&inv).unwrap());
        assert_eq!(t.order(), &BigInt::from(5));
    }

    #[test]
    fn phi_kills_p5() {
        assert_eq!(phi_residue(&GaussRat::from_gauss(p5()), 1).unwrap(), 0);
        assert_eq!(phi_residue(&GaussRat::i(), 1).unwrap(), 2);
        let r = phi_residue(&GaussRat::i(), 3).unwrap();
        assert_eq!((r * r + 1) % 125, 0);
    }

    #[test]
    fn s13_level_one_is_the_unit_group() {
        let s = s13_subgroup(1).unwrap();
        assert_eq!(s.k, 4);
        assert_eq!(s.elements, vec![1, 2, 3, 4]);
    }

    #[test]
    fn pairing_is_bilinear_in_residues() {
        let n = 2;
        let g = cyclic_iso(n).unwrap();
        let c = pairing_constant(n).unwrap();
        assert_ne!(c % 5, 0);
        for eta in [0u64, 1, 3, 7, 24] {
            for m in [0u64, 1, 2, 11, 20] {
                let v = dual_pair(&GaussRat::from_int(eta), &g.element(m)).unwrap();
                let expect = BigRational::new(BigInt::from(c * eta * m % 25), BigInt::from(25));
                assert_eq!(v, expect);
            }
        }
    }

    #[test]
    fn pairing_vanishes_on_a() {
        let inv5 = GaussRat::from_gauss(crate::gaussian::p5bar()).inv().unwrap();
        let inv13 = GaussRat::from_gauss(crate::gaussian::p13bar()).inv().unwrap();
        let i = GaussRat::i();
        for w in [inv5.clone(), inv5.mul(&inv5).mul(&i), inv13.clone(), inv5.mul(&inv13).add(&GaussRat::from_ratio(3, 1))] {
            assert!(w.in_a());
            assert_eq!(pairing_value(&w).unwrap(), rat(0, 1), "{w}");
        }
        assert_ne!(pairing_value(&GaussRat::from_ratio(1, 2)).unwrap(), rat(0, 1));
        assert_ne!(pairing_value(&GaussRat::from_gauss(p5()).inv().unwrap()).unwrap(), rat(0, 1));
    }

    #[test]
    fn kernel_characters_vanish() {
        let g = cyclic_iso(2).unwrap();
        let eta = GaussRat::from_int(3).add(&GaussRat::from_gauss(crate::gaussian::p5bar()).inv().unwrap());
        assert!(eta.in_a());
        let in_kernel = crate::gaussian::theta_power(2, 0).mul(&eta);
        for m in 0..25 {
            assert_eq!(dual_pair(&in_kernel, &g.element(m)).unwrap(), rat(0, 1));
        }
    }

    #[test]
    fn point_mass_and_uniform_fourier() {
        let pm = DiscreteMeasure::point_mass(2, 0).unwrap();
        let (v, _) = measure_fourier(&pm, 7).unwrap();
        assert!((v.re - 1.0).abs() < 1e-15 && v.im.abs() < 1e-15);
        let u = DiscreteMeasure::uniform(2).unwrap();
        let (v, e) = measure_fourier(&u, 3).unwrap();
        assert!(v.norm() <= e + 1e-15);
    }

    #[test]
    fn parseval_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mu = DiscreteMeasure::random(2, &mut rng).unwrap();
        let (l, r) = parseval(&mu).unwrap();
        assert!((l - r).abs() < 1e-12);
    }

    #[test]
    fn rigidity_point_mass() {
        for n in 1..=3 {
            let s = s13_subgroup(n).unwrap();
            let out = rigidity_check(&DiscreteMeasure::point_mass(n, 0).unwrap(), &s).unwrap();
            assert_eq!(out.violations, 0);
            assert!(out.max_ratio <= 1.0);
        }
    }
}
