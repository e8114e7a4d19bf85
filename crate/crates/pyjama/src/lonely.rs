//! Maximum loneliness of integer runners and the bridge to dilated stripe covers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::cover::{cover_certify, CertifyOptions, Region, Rotation};
use crate::error::{Error, Result};
use crate::report::display;
use crate::scalar::rational_to_f64;

/// Cap on Σ|v_j|.
pub const VELOCITY_SUM_CAP: i64 = 10_000;

#[derive(Clone, Debug, Serialize)]
pub struct RunnerInstance {
    pub velocities: Vec<i64>,
    pub gcd: i64,
}

impl RunnerInstance {
    pub fn new(velocities: Vec<i64>) -> Result<Self> {
        if velocities.is_empty() || velocities.iter().any(|&v| v == 0) {
            return Err(Error::Invalid("velocities must be nonempty and nonzero".into()));
        }
        let sum: i64 = velocities.iter().map(|v| v.abs()).sum();
        if sum > VELOCITY_SUM_CAP {
            return Err(Error::Budget(format!("sum of |v| = {sum} exceeds {VELOCITY_SUM_CAP}")));
        }
        let gcd = velocities.iter().fold(0i64, |g, v| g.gcd(v));
        Ok(RunnerInstance { velocities, gcd })
    }

    fn speeds(&self) -> Vec<i64> {
        self.velocities.iter().map(|v| v.abs()).collect()
    }
}

/// min_j ‖k v_j / d‖ as a numerator over d.
fn loneliness_num(speeds: &[i64], k: i64, d: i64) -> i64 {
    speeds
        .iter()
        .map(|&v| {
            let r = (k as i128 * v as i128).rem_euclid(d as i128) as i64;
            r.min(d - r)
        })
        .min()
        .expect("nonempty")
}

/// (num, den, t_num, t_den); larger value wins, then the earlier time.
type Cand = (i64, i64, i64, i64);

fn better(a: Cand, b: Cand) -> Cand {
    let va = a.0 as i128 * b.1 as i128;
    let vb = b.0 as i128 * a.1 as i128;
    let ta = a.2 as i128 * b.3 as i128;
    let tb = b.2 as i128 * a.3 as i128;
    if va > vb || (va == vb && ta <= tb) {
        a
    } else {
        b
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MlResult {
    #[serde(serialize_with = "display")]
    pub value: BigRational,
    pub decimal: f64,
    #[serde(serialize_with = "display")]
    pub argmax: BigRational,
    pub candidate_times: u64,
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// ML(v) = sup_t min_j ‖t v_j‖, evaluated exactly over the breakpoints of the
/// piecewise-linear objective: peaks k/(2v_j) and crossings k/(v_i ± v_j).
pub fn ml_exact(v: &RunnerInstance) -> MlResult {
    let s = v.speeds();
    let mut dens: Vec<i64> = s.iter().map(|&a| 2 * a).collect();
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            dens.push(s[i] + s[j]);
            if s[i] != s[j] {
                dens.push((s[i] - s[j]).abs());
            }
        }
    }
    dens.sort_unstable();
    dens.dedup();
    let count: u64 = dens.iter().map(|&d| d as u64).sum();
    let best = dens
        .par_iter()
        .map(|&d| (0..d).map(|k| (loneliness_num(&s, k, d), d, k, d)).reduce(better).expect("d >= 1"))
        .reduce(|| (0, 1, 0, 1), better);
    let value = ratio(best.0, best.1);
    MlResult { decimal: rational_to_f64(&value), value, argmax: ratio(best.2, best.3), candidate_times: count }
}

/// max over t ∈ {0, 1/G, …, (G−1)/G} of min_j ‖t v_j‖.
pub fn ml_grid_oracle(v: &RunnerInstance, g: i64) -> Result<BigRational> {
    if g < 1 {
        return Err(Error::Invalid(format!("grid G = {g} must be positive")));
    }
    let s = v.speeds();
    let best = (0..g).into_par_iter().map(|k| loneliness_num(&s, k, g)).max().expect("G >= 1");
    Ok(ratio(best, g))
}

/// Whether the closed sets {t : ‖t v_j‖ ≤ ε} cover R.
pub fn covers_line(v: &RunnerInstance, eps: &BigRational) -> Result<bool> {
    let half = ratio(1, 2);
    if eps.is_negative() || *eps > half {
        return Err(Error::Invalid(format!("epsilon {eps} outside [0, 1/2]")));
    }
    let mut iv: Vec<(BigRational, BigRational)> = Vec::new();
    for w in v.speeds() {
        let wr = BigRational::from_integer(w.into());
        for k in 0..=w {
            let kr = BigRational::from_integer(k.into());
            iv.push(((&kr - eps) / &wr, (&kr + eps) / &wr));
        }
    }
    iv.sort();
    let mut reach = BigRational::zero();
    for (a, b) in iv {
        if a > reach {
            return Ok(false);
        }
        if b > reach {
            reach = b;
        }
    }
    Ok(reach >= BigRational::from_integer(1.into()))
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverSummary {
    #[serde(serialize_with = "display")]
    pub epsilon: BigRational,
    pub covers_line: bool,
    pub covered: bool,
    pub covered_boxes: usize,
    pub gap_boxes: usize,
    pub witnessed_gaps: usize,
    pub depth: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub instance: RunnerInstance,
    pub ml: MlResult,
    pub region: Region,
    #[serde(serialize_with = "display")]
    pub margin: BigRational,
    pub above: CoverSummary,
    pub below: Option<CoverSummary>,
    pub consistent: bool,
}

fn summarize(v: &RunnerInstance, eps: &BigRational, region: Region, max_depth: u32) -> Result<CoverSummary> {
    let stripes: Vec<Rotation> = v.velocities.iter().map(|&x| Rotation::dilation(x)).collect();
    let opts = CertifyOptions { max_depth, closed: true, stop_on_witness: false };
    let c = cover_certify::<BigRational>(&stripes, eps, region, opts)?;
    Ok(CoverSummary {
        epsilon: eps.clone(),
        covers_line: covers_line(v, eps)?,
        covered: c.is_covered(),
        covered_boxes: c.covered_boxes,
        gap_boxes: c.gap_boxes,
        witnessed_gaps: c.witnessed_gaps,
        depth: c.depth,
    })
}

/// Certifies the dilated stripes {x + iy : x v_j ∈ [−ε, ε] mod 1} at ε = ML + margin and
/// looks for gaps at ε = ML − margin (skipped when that is not positive).
pub fn equivalence_demo(
    v: &RunnerInstance,
    region: Region,
    margin: &BigRational,
    max_depth: u32,
) -> Result<EquivalenceReport> {
    let ml = ml_exact(v);
    let half = ratio(1, 2);
    let up = &ml.value + margin;
    let up = if up > half { half.clone() } else { up };
    let above = summarize(v, &up, region, max_depth)?;
    let down = &ml.value - margin;
    let below = if down.is_positive() { Some(summarize(v, &down, region, max_depth)?) } else { None };
    let consistent = above.covered
        && above.covers_line
        && below.as_ref().map_or(true, |b| !b.covered && !b.covers_line && b.witnessed_gaps > 0);
    Ok(EquivalenceReport { instance: v.clone(), ml, region, margin: margin.clone(), above, below, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(v: &[i64]) -> RunnerInstance {
        RunnerInstance::new(v.to_vec()).unwrap()
    }

    #[test]
    fn small_values() {
        assert_eq!(ml_exact(&inst(&[1])).value, ratio(1, 2));
        let r = ml_exact(&inst(&[1, 2]));
        assert_eq!(r.value, ratio(1, 3));
        assert_eq!(r.argmax, ratio(1, 3));
        for n in 1..=8 {
            let v: Vec<i64> = (1..=n).collect();
            assert_eq!(ml_exact(&inst(&v)).value, ratio(1, n + 1), "N={n}");
        }
        assert_eq!(ml_grid_oracle(&inst(&[1]), 10).unwrap(), ratio(1, 2));
        assert_eq!(ml_grid_oracle(&inst(&[1, 2]), 9).unwrap(), ratio(1, 3));
        assert!(RunnerInstance::new(vec![1, 0]).is_err());
    }

    #[test]
    fn line_covering() {
        assert!(covers_line(&inst(&[1]), &ratio(1, 2)).unwrap());
        assert!(covers_line(&inst(&[1, 2]), &ratio(1, 3)).unwrap());
        assert!(!covers_line(&inst(&[1, 2]), &ratio(333, 1000)).unwrap());
        assert!(covers_line(&inst(&[1, 2, 3, 4, 5]), &ratio(1, 6)).unwrap());
    }

    #[test]
    fn dilated_stripes() {
        let unit = Region::new(0.0, 0.0, 1.0, 1.0).unwrap();
        let r = equivalence_demo(&inst(&[1, 2]), unit, &ratio(1, 100), 10).unwrap();
        assert!(r.consistent, "{r:?}");
        let r = equivalence_demo(&inst(&[1]), unit, &BigRational::zero(), 4).unwrap();
        assert!(r.above.covered);
    }
}
