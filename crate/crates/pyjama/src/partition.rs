//! Skewed fundamental-domain partitions of X, part indexing, entropy and
//! pushforward functionals.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{p13bar, p5, p5bar, GaussInt, GaussRat};
use crate::harmonic::{phi_residue, DiscreteMeasure};
use crate::padic::{embed, pow_p, Padic, DEFAULT_PRECISION};
use crate::scalar::{rational_to_f64, Scalar};
use crate::solenoid::SolenoidPoint;

/// Largest n with 5^n cells addressable by a u64.
pub const PARTITION_CAP: u32 = 27;

/// Relative slack on the floating-point feasibility and diameter checks.
const REL_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct PartitionSpec {
    pub n: u32,
    pub alpha: i64,
    pub beta: i64,
    pub n5: f64,
    pub n13: f64,
    pub nc: f64,
    pub diam5: f64,
    pub diam13: f64,
    pub diam_c: f64,
    /// Set by [`pnt_params`] when (n, T, δ) lies outside the theorem's window.
    pub outside_window: bool,
    #[serde(skip)]
    lattice: GaussRat,
}

impl PartitionSpec {
    pub fn cells(&self) -> u64 {
        5u64.pow(self.n)
    }

    /// L = conj(P₅)^α conj(P₁₃)^β / P₅^n, the complex side of each cell.
    pub fn lattice(&self) -> &GaussRat {
        &self.lattice
    }

    /// Residue of w modulo P₅^n, the cell identifier.
    pub fn cell_of(&self, w: &GaussInt) -> u64 {
        phi_residue(&GaussRat::from_gauss(w.clone()), self.n).expect("Gaussian integers lie in A")
    }

    pub fn index_of(&self, w: GaussInt) -> PartIndex {
        let cell = self.cell_of(&w);
        PartIndex { w, cell }
    }
}

fn floor_log(x: f64, base: f64) -> i64 {
    let mut k = (x.ln() / base.ln()).floor() as i64;
    // repair rounding of the logarithm at exact powers
    while base.powi(k as i32 + 1) <= x {
        k += 1;
    }
    while base.powi(k as i32) > x {
        k -= 1;
    }
    k
}

pub fn build_domain(n: u32, n5: f64, n13: f64, nc: f64) -> Result<PartitionSpec> {
    if n > PARTITION_CAP {
        return Err(Error::Invalid(format!("n = {n} exceeds the cap {PARTITION_CAP}")));
    }
    for (name, v) in [("N5", n5), ("N13", n13), ("NC", nc)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Invalid(format!("{name} = {v} must be positive")));
        }
    }
    let big_n = 5f64.powi(n as i32);
    let need = 130.0 / big_n;
    if n5 * n13 * nc * nc < need * (1.0 - REL_SLACK) {
        return Err(Error::Invalid(format!(
            "infeasible: N5·N13·NC² = {} < 130/N = {need}",
            n5 * n13 * nc * nc
        )));
    }
    let alpha = -floor_log(n5, 5.0);
    let beta = -floor_log(n13, 13.0);
    let diam5 = 5f64.powi(-alpha as i32);
    let diam13 = 13f64.powi(-beta as i32);
    let diam_c = (2.0 * 5f64.powi(alpha as i32) * 13f64.powi(beta as i32) / big_n).sqrt();
    if diam5 > n5 * (1.0 + REL_SLACK) || diam13 > n13 * (1.0 + REL_SLACK) || diam_c > nc * (1.0 + REL_SLACK) {
        return Err(Error::Verification(format!(
            "diameters ({diam5}, {diam13}, {diam_c}) exceed targets ({n5}, {n13}, {nc})"
        )));
    }
    let lattice = GaussRat::from_gauss(p5bar())
        .powi(alpha)?
        .mul(&GaussRat::from_gauss(p13bar()).powi(beta)?)
        .div(&GaussRat::from_gauss(p5().pow(n)))?;
    Ok(PartitionSpec { n, alpha, beta, n5, n13, nc, diam5, diam13, diam_c, outside_window: false, lattice })
}

/// The partition P_{N,T} of the entropy theorem.
pub fn pnt_params(n: u32, t: u32, delta: f64) -> Result<PartitionSpec> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Invalid(format!("delta = {delta} outside (0, 1)")));
    }
    let big_n = 5f64.powi(n as i32);
    let tf = t as f64;
    let n5 = 13f64.powf(tf / 4.0) / big_n.powf(1.0 + 3.0 * delta / 4.0);
    let n13 = 1.0 / (big_n.powf(delta / 4.0) * 13f64.powf(3.0 * tf / 4.0));
    let nc = 130f64.sqrt() * big_n.powf(delta / 2.0) * 13f64.powf(tf / 4.0);
    let mut spec = build_domain(n, n5, n13, nc)?;
    let log5t = tf.ln() / 5f64.ln();
    let upper = 5f64.ln() / (4.0 * 13f64.ln()) * delta * n as f64;
    let lower_ok = t > 1 && 10.0 / log5t <= delta;
    let t_ok = 5f64.powf(20.0 / delta) <= tf && tf <= upper;
    spec.outside_window = !(lower_ok && t_ok);
    Ok(spec)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartIndex {
    pub w: GaussInt,
    pub cell: u64,
}

struct Located {
    k: BigInt,
    w: GaussInt,
    /// Whether the complex error straddles a cell boundary.
    straddles: bool,
}

fn locate<S: Scalar>(x: &SolenoidPoint<S>, spec: &PartitionSpec) -> Result<Located> {
    // stage 1: an integer k with k ≡ a (5^α) and k ≡ b (13^β)
    let a5 = spec.alpha.max(0) as u32;
    let b13 = spec.beta.max(0) as u32;
    let m5 = pow_p(5, a5);
    let m13 = pow_p(13, b13);
    let ra = x.a().residue(a5)?;
    let rb = x.b().residue(b13)?;
    let k = crt(&ra, &m5, &rb, &m13);
    let zr = x.z().re.clone() - S::from_rational(&crate::scalar::int_rational(&k));
    let zi = x.z().im.clone();
    // stage 2: w = ⌊z'/L⌋ componentwise
    let linv = spec.lattice.inv()?;
    let (cr, ci) = (S::from_rational(&linv.re()), S::from_rational(&linv.im()));
    let qr = zr.clone() * cr.clone() - zi.clone() * ci.clone();
    let qi = zr * ci + zi * cr;
    let scale = linv.abs_f64();
    let mut err = 0.0;
    if !S::EXACT {
        let mag = qr.to_f64().abs() + qi.to_f64().abs() + 1.0;
        err = x.err() * scale + 16.0 * S::roundoff() * mag * (1.0 + k.to_f64().unwrap_or(f64::MAX));
    }
    let wr = qr.floor();
    let wi = qi.floor();
    let mut straddles = false;
    if !S::EXACT {
        for (q, w) in [(&qr, &wr), (&qi, &wi)] {
            let f = (q.clone() - w.clone()).to_f64();
            if f < err || 1.0 - f <= err {
                straddles = true;
            }
        }
    }
    let w = GaussInt::new(wr.floor_bigint(), wi.floor_bigint());
    Ok(Located { k, w, straddles })
}

/// The cell containing x, or `None` when the complex error straddles a cell boundary.
pub fn part_index<S: Scalar>(x: &SolenoidPoint<S>, spec: &PartitionSpec) -> Result<Option<PartIndex>> {
    let loc = locate(x, spec)?;
    if loc.straddles {
        return Ok(None);
    }
    Ok(Some(spec.index_of(loc.w)))
}

/// Coordinates of x inside the fundamental domain: (a, b, z) − ι^Δ(k + Lw) with
/// a ∈ 5^α Z₅, b ∈ 13^β Z₁₃ and z ∈ L·[0,1)² (up to the error radius for floats).
#[derive(Clone, Debug)]
pub struct Representative<S: Scalar> {
    pub a: Padic,
    pub b: Padic,
    pub z: Complex<S>,
    /// The element k + Lw subtracted diagonally.
    pub shift: GaussRat,
    pub index: PartIndex,
}

pub fn representative<S: Scalar>(x: &SolenoidPoint<S>, spec: &PartitionSpec) -> Result<Representative<S>> {
    let loc = locate(x, spec)?;
    let shift = GaussRat::from_int(loc.k.clone()).add(&spec.lattice.mul(&GaussRat::from_gauss(loc.w.clone())));
    let prec = x.a().precision().max(x.b().precision()).max(DEFAULT_PRECISION) + 8;
    let prec5 = prec + spec.alpha.unsigned_abs() as u32;
    let prec13 = prec + spec.beta.unsigned_abs() as u32;
    let a = x.a().sub(&embed(&shift, 5, prec5));
    let b = x.b().sub(&embed(&shift, 13, prec13));
    let z = x.z().clone() - Complex::new(S::from_rational(&shift.re()), S::from_rational(&shift.im()));
    Ok(Representative { a, b, z, shift, index: spec.index_of(loc.w) })
}

fn crt(r1: &BigInt, m1: &BigInt, r2: &BigInt, m2: &BigInt) -> BigInt {
    let g = m1.extended_gcd(m2);
    debug_assert!(g.gcd == BigInt::from(1));
    let m = m1 * m2;
    (r1 * m2 * &g.y + r2 * m1 * &g.x).mod_floor(&m)
}

/// Natural-log entropy of a probability vector over cells (0·log0 = 0).
pub fn entropy(weights: &BTreeMap<u64, f64>) -> Result<f64> {
    if weights.values().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::Invalid("negative weight".into()));
    }
    let total: f64 = weights.values().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Invalid(format!("weights sum to {total}, not 1")));
    }
    Ok(-weights.values().filter(|&&w| w > 0.0).map(|&w| w * w.ln()).sum::<f64>())
}

/// Cells meeting P_w − P_{w'}: w−w', w−w'−1, w−w'−i, w−w'−1−i.
pub fn part_difference_spread(spec: &PartitionSpec, w: &PartIndex, w2: &PartIndex) -> Vec<PartIndex> {
    let d = &w.w - &w2.w;
    let one = GaussInt::from_int(1);
    let i = GaussInt::i();
    [d.clone(), &d - &one, &d - &i, &(&d - &one) - &i].into_iter().map(|v| spec.index_of(v)).collect()
}

/// Σ_s w_s f(θ₅^s θ₁₃^t x_s) with the accumulated error radius.
pub fn pushforward_functional(
    mu: &DiscreteMeasure,
    f: &dyn Fn(&SolenoidPoint<f64>) -> (f64, f64),
    s: u64,
    t: u64,
) -> Result<(f64, f64)> {
    let g = crate::harmonic::cyclic_iso(mu.n)?;
    let mut value = 0.0;
    let mut err = 0.0;
    for (m, w) in mu.weights.iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        let mut x: SolenoidPoint<f64> = g.point(m as u64)?.point()?;
        if let Some(base) = &mu.base {
            x = x.add(base)?;
        }
        let (v, e) = f(&x.act(s, t)?);
        let wf = rational_to_f64(w);
        value += wf * v;
        err += wf * e + 4.0 * f64::EPSILON * v.abs();
    }
    Ok((value, err))
}

/// Cell occupancy of a finite point set.
pub fn occupancy<S: Scalar>(points: &[SolenoidPoint<S>], spec: &PartitionSpec) -> Result<(BTreeMap<u64, u64>, u64)> {
    let mut counts = BTreeMap::new();
    let mut unknown = 0;
    for p in points {
        match part_index(p, spec)? {
            Some(ix) => *counts.entry(ix.cell).or_insert(0) += 1,
            None => unknown += 1,
        }
    }
    Ok((counts, unknown))
}

/// Empirical distribution of a finite point set over cells.
pub fn empirical_weights(counts: &BTreeMap<u64, u64>) -> BTreeMap<u64, f64> {
    let total: u64 = counts.values().sum();
    counts.iter().map(|(&k, &c)| (k, c as f64 / total.max(1) as f64)).collect()
}

/// CSV with one row per occupied cell.
pub fn occupancy_csv(counts: &BTreeMap<u64, u64>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cell", "count"]).map_err(|e| Error::Invalid(e.to_string()))?;
    for (c, k) in counts {
        w.write_record([c.to_string(), k.to_string()]).map_err(|e| Error::Invalid(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Invalid(e.to_string()))
}

/// One row of the entropy-theorem scan.
#[derive(Clone, Debug, Serialize)]
pub struct PushforwardScan {
    pub n: u32,
    pub window: u64,
    pub rho: f64,
    pub delta: f64,
    pub haar_mean: f64,
    pub best_s: u64,
    pub best_t: u64,
    pub best_value: f64,
    pub best_err: f64,
    pub threshold: f64,
    pub holds: bool,
}

/// Scan (s, t) ∈ [0, T]² for (θ₅^sθ₁₃^t)_*μ(f) ≥ (ρ − 2δ)m(f) − err.
pub fn pushforward_scan(
    mu: &DiscreteMeasure,
    f: &dyn Fn(&SolenoidPoint<f64>) -> (f64, f64),
    haar_mean: f64,
    window: u64,
    delta: f64,
) -> Result<PushforwardScan> {
    let spec = build_domain(mu.n, 1.0, 1.0, (130.0 / 5f64.powi(mu.n as i32)).sqrt())?;
    let g = crate::harmonic::cyclic_iso(mu.n)?;
    let mut w = BTreeMap::new();
    for (m, wt) in mu.weights.iter().enumerate() {
        if wt.is_zero() {
            continue;
        }
        let p: SolenoidPoint<BigRational> = g.point(m as u64)?.point()?;
        let ix = part_index(&p, &spec)?.ok_or_else(|| Error::Verification("exact point on a boundary".into()))?;
        *w.entry(ix.cell).or_insert(0.0) += rational_to_f64(wt);
    }
    let rho = entropy(&w)? / (mu.n as f64 * 5f64.ln()).max(f64::MIN_POSITIVE);
    let mut best = (0, 0, f64::NEG_INFINITY, 0.0);
    for s in 0..=window {
        for t in 0..=window {
            let (v, e) = pushforward_functional(mu, f, s, t)?;
            if v - e > best.2 - best.3 {
                best = (s, t, v, e);
            }
        }
    }
    let threshold = (rho - 2.0 * delta) * haar_mean;
    Ok(PushforwardScan {
        n: mu.n,
        window,
        rho,
        delta,
        haar_mean,
        best_s: best.0,
        best_t: best.1,
        best_value: best.2,
        best_err: best.3,
        threshold,
        holds: best.2 + best.3 >= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    type Ex = SolenoidPoint<BigRational>;

    #[test]
    fn base_domain() {
        let s = build_domain(0, 1.0, 1.0, 130f64.sqrt()).unwrap();
        assert_eq!((s.alpha, s.beta), (0, 0));
        assert_eq!(s.cells(), 1);
        assert_eq!(s.lattice(), &GaussRat::one());
    }

    #[test]
    fn level_two_alpha() {
        let nc = (130.0 / 25.0 * 5.0f64).sqrt();
        let s = build_domain(2, 0.2, 1.0, nc).unwrap();
        assert_eq!((s.alpha, s.beta), (1, 0));
        assert!(build_domain(2, 0.2, 1.0, nc * 0.99).is_err());
    }

    #[test]
    fn pnt_product() {
        for (n, t, d) in [(6, 2, 0.5), (10, 4, 0.3), (3, 0, 0.9)] {
            let s = pnt_params(n, t, d).unwrap();
            let prod = s.n5 * s.n13 * s.nc * s.nc;
            assert!((prod * 5f64.powi(n as i32) / 130.0 - 1.0).abs() < 1e-12);
            assert!(s.outside_window);
        }
        let a = pnt_params(8, 2, 0.5).unwrap();
        let b = pnt_params(8, 4, 0.5).unwrap();
        assert!(b.n5 > a.n5 && b.n13 < a.n13);
    }

    #[test]
    fn zero_and_torsion_cells() {
        for n in 1..=3 {
            let s = build_domain(n, 1.0, 1.0, (130.0 / 5f64.powi(n as i32)).sqrt()).unwrap();
            let g = crate::harmonic::cyclic_iso(n).unwrap();
            let mut seen = std::collections::BTreeSet::new();
            for m in 0..g.order() {
                let p: Ex = g.point(m).unwrap().point().unwrap();
                seen.insert(part_index(&p, &s).unwrap().unwrap().cell);
            }
            assert_eq!(seen.len() as u64, g.order());
            assert_eq!(part_index(&Ex::zero(), &s).unwrap().unwrap().cell, 0);
        }
    }

    #[test]
    fn entropy_basics() {
        let uni: BTreeMap<u64, f64> = (0..25).map(|k| (k, 1.0 / 25.0)).collect();
        assert!((entropy(&uni).unwrap() - 2.0 * 5f64.ln()).abs() < 1e-12);
        assert_eq!(entropy(&BTreeMap::from([(3, 1.0)])).unwrap(), 0.0);
        assert!((entropy(&BTreeMap::from([(0, 0.5), (1, 0.5)])).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(entropy(&BTreeMap::from([(0, 1.5), (1, -0.5)])).is_err());
    }

    #[test]
    fn spread_of_equal_cells() {
        let s = build_domain(1, 1.0, 1.0, 26f64.sqrt()).unwrap();
        let w = s.index_of(GaussInt::new(3, -2));
        let got: Vec<GaussInt> = part_difference_spread(&s, &w, &w).into_iter().map(|p| p.w).collect();
        assert_eq!(
            got,
            vec![GaussInt::new(0, 0), GaussInt::new(-1, 0), GaussInt::new(0, -1), GaussInt::new(-1, -1)]
        );
    }

    #[test]
    fn pushforward_trivial_cases() {
        let mu = DiscreteMeasure::uniform(1).unwrap();
        let (v, _) = pushforward_functional(&mu, &|_| (1.0, 0.0), 3, 2).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let f = |x: &SolenoidPoint<f64>| (x.z().re, 0.0);
        let (a, _) = pushforward_functional(&mu, &f, 0, 0).unwrap();
        let direct: f64 = (0..5)
            .map(|m| {
                let p: SolenoidPoint<f64> =
                    crate::harmonic::cyclic_iso(1).unwrap().point(m).unwrap().point().unwrap();
                p.z().re / 5.0
            })
            .sum();
        assert!((a - direct).abs() < 1e-15);
    }
}
