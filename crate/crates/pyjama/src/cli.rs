//! Command-line front end: one subcommand per pipeline, JSON reports, CSV side files.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::cover::{self, CertifyOptions, Region, Rotation};
use crate::dynamics::{self, DeskConstants};
use crate::error::{Error, Result};
use crate::gaussian::GaussRat;
use crate::lonely::{self, RunnerInstance};
use crate::report::{fixed, normalize, to_string};
use crate::solenoid::SolenoidPoint;

#[derive(Debug, Parser)]
#[command(name = "pyjama", version, about = "Solenoid dynamics, stripe-cover certificates and lonely runners")]
pub struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized runs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// JSON report path (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// CSV side file (gap boxes, orbit points, ...).
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify that rotated stripes cover a box.
    Cover {
        #[arg(long)]
        epsilon: String,
        /// theta:N, v:n, product:N,n, search:k, or a file of turns / rationals.
        #[arg(long)]
        rotations: String,
        #[arg(long, default_value = "0,0,4,4")]
        region: String,
        #[arg(long, default_value_t = 14)]
        max_depth: u32,
        /// Angle grids for search:k.
        #[arg(long, default_value = "6,12,24,48")]
        grids: String,
        /// Classify gaps against D = (P̄₅P̄₁₃)^B, B ≤ this, with m ≤ --classify-n.
        #[arg(long, default_value_t = 0)]
        classify_b: u32,
        #[arg(long, default_value_t = 12)]
        classify_n: u32,
    },
    /// The Θ_N orbit of a point.
    Orbit {
        #[arg(long)]
        point: String,
        #[arg(long = "N")]
        n: u64,
    },
    /// Integer combinations on V(n) for a partition into n classes.
    Irrtrick {
        #[arg(long)]
        n: u32,
        /// random, single:c, or explicit:c1,c2,... (2n entries, +α_m then −α_m).
        #[arg(long, default_value = "random")]
        partition: String,
    },
    /// Exact maximum loneliness.
    Ml {
        #[arg(long)]
        velocities: String,
        #[arg(long)]
        grid: Option<i64>,
        #[arg(long)]
        equivalence: bool,
        #[arg(long, default_value = "0,0,1,1")]
        region: String,
        #[arg(long, default_value = "1/100")]
        margin: String,
        #[arg(long, default_value_t = 10)]
        max_depth: u32,
    },
    /// Fourier rigidity inequality on random measures.
    Rigidity {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 20)]
        trials: u64,
    },
    /// approximate_target on random hypothesis-satisfying pairs.
    Approx {
        #[arg(long, default_value_t = 0.25)]
        eta: f64,
        #[arg(long, default_value_t = 100)]
        trials: u64,
    },
    /// Close pair, then the major or minor arc.
    Dichotomy {
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = 0.3)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 12)]
        n0: u64,
    },
    /// Gaps between consecutive 3-smooth numbers.
    Smoothgaps {
        #[arg(long, default_value_t = 1_000_000)]
        limit: u64,
    },
}

/// Parses "p/q", an integer, or a finite decimal exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Invalid(format!("not a rational number: '{s}'"));
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let v = BigRational::new(BigInt::from_str(&digits).map_err(|_| bad())?, BigInt::from(10u32).pow(frac.len() as u32));
    Ok(if neg { -v } else { v })
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| Error::Invalid(format!("bad list entry '{t}' in '{s}'"))))
        .collect()
}

/// Point specs: a bundled name (zero, torsion_third, generic), rational:<q>, or complex:x,y.
pub fn parse_point(spec: &str) -> Result<SolenoidPoint<BigRational>> {
    if let Some(q) = spec.strip_prefix("rational:") {
        return SolenoidPoint::from_rational(&GaussRat::from_str(q)?);
    }
    if let Some(c) = spec.strip_prefix("complex:") {
        let v: Vec<&str> = c.split(',').collect();
        if v.len() != 2 {
            return Err(Error::Invalid(format!("complex point '{c}' needs x,y")));
        }
        let w = num_complex::Complex::new(parse_rational(v[0])?, parse_rational(v[1])?);
        return SolenoidPoint::complex_offset(w);
    }
    dynamics::bundled_points()?
        .into_iter()
        .find(|(name, _)| *name == spec)
        .map(|(_, p)| p)
        .ok_or_else(|| Error::Invalid(format!("unknown point '{spec}'")))
}

fn parse_rotations(spec: &str) -> Result<Vec<Rotation>> {
    let num = |s: &str| s.trim().parse::<u32>().map_err(|_| Error::Invalid(format!("bad size in '{spec}'")));
    if let Some(n) = spec.strip_prefix("theta:") {
        return cover::theta_set(num(n)?);
    }
    if let Some(n) = spec.strip_prefix("v:") {
        return cover::v_set(num(n)?);
    }
    if let Some(p) = spec.strip_prefix("product:") {
        let (a, b) = p.split_once(',').ok_or_else(|| Error::Invalid(format!("product:N,n expected, got '{spec}'")))?;
        return cover::assemble_cover(num(a)?, num(b)?);
    }
    let text = std::fs::read_to_string(spec).map_err(|e| Error::Invalid(format!("rotation file '{spec}': {e}")))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| match l.strip_prefix("rational:") {
            Some(q) => Ok(Rotation::rational(GaussRat::from_str(q)?)),
            None => Ok(Rotation::angle(parse_rational(l)?)),
        })
        .collect()
}

fn parse_partition(n: u32, spec: &str, seed: u64) -> Result<Vec<[u32; 2]>> {
    if spec == "random" {
        return Ok(cover::random_classes(n, &mut ChaCha8Rng::seed_from_u64(seed)));
    }
    if let Some(c) = spec.strip_prefix("single:") {
        let c: u32 = c.trim().parse().map_err(|_| Error::Invalid(format!("bad class '{c}'")))?;
        return Ok(vec![[c, c]; n as usize]);
    }
    if let Some(list) = spec.strip_prefix("explicit:") {
        let v: Vec<u32> = parse_list(list)?;
        if v.len() != 2 * n as usize {
            return Err(Error::Invalid(format!("explicit partition needs {} entries", 2 * n)));
        }
        return Ok(v.chunks(2).map(|c| [c[0], c[1]]).collect());
    }
    Err(Error::Invalid(format!("unknown partition '{spec}'")))
}

/// Output of one run: the JSON report, an optional CSV body, an optional stdout line
/// and the exit status.
pub struct Outcome {
    pub report: Value,
    pub csv: Option<String>,
    pub line: Option<String>,
    pub status: i32,
}

fn ok(report: Value, status: i32) -> Outcome {
    Outcome { report, csv: None, line: None, status }
}

fn json_of<T: serde::Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::Invalid(e.to_string()))
}

/// Runs a parsed command; pure apart from reading rotation files.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let seed = cli.seed;
    match &cli.command {
        Command::Cover { epsilon, rotations, region, max_depth, grids, classify_b, classify_n } => {
            let eps = parse_rational(epsilon)?;
            let region = Region::parse(region)?;
            let (search, cert) = if let Some(k) = rotations.strip_prefix("search:") {
                let k: usize = k.trim().parse().map_err(|_| Error::Invalid(format!("bad k in '{rotations}'")))?;
                let grids: Vec<u32> = parse_list(grids)?;
                let s = cover::search_small_cover(&eps, k, region, *max_depth, &grids)?;
                let cert = s.found.as_ref().map(|f| f.1.clone());
                (Some(json_of(&s)?), cert)
            } else {
                let rots = parse_rotations(rotations)?;
                (None, Some(cover::cover_certify::<f64>(&rots, &eps, region, CertifyOptions::depth(*max_depth))?))
            };
            let Some(cert) = cert else {
                let report = json!({ "search": search, "certificate": Value::Null });
                return Ok(Outcome { line: Some("search exhausted".into()), ..ok(report, 1) });
            };
            let classification = if *classify_b > 0 && !cert.gaps.is_empty() {
                Some(json_of(&cover::search_gap_lattice(&cert.gaps, *classify_b, *classify_n)?)?)
            } else {
                None
            };
            let line = format!(
                "covered={} covered_boxes={} gap_boxes={} depth={}",
                cert.is_covered(),
                cert.covered_boxes,
                cert.gap_boxes,
                cert.depth
            );
            let status = if cert.is_covered() { 0 } else { 1 };
            let report = json!({ "search": search, "certificate": json_of(&cert)?, "classification": classification });
            Ok(Outcome { report, csv: Some(cert.gaps_csv()?), line: Some(line), status })
        }
        Command::Orbit { point, n } => {
            let p = parse_point(point)?;
            let rec = dynamics::orbit(&p, *n)?;
            let mut csv = String::from("s,t,re,im\n");
            let mut pts = Vec::new();
            for (s, t, q) in &rec.entries {
                csv.push_str(&format!("{s},{t},{},{}\n", q.z().re.to_f64_lossy(), q.z().im.to_f64_lossy()));
                pts.push(json!({ "s": s, "t": t, "point": q.to_json() }));
            }
            let report = json!({ "point": point, "N": n, "base": p.to_json(), "orbit": pts });
            Ok(Outcome { csv: Some(csv), ..ok(report, 0) })
        }
        Command::Irrtrick { n, partition } => {
            let classes = parse_partition(*n, partition, seed)?;
            let sol = cover::irr_trick(*n, &classes)?;
            let status = if sol.verified() { 0 } else { 1 };
            Ok(ok(json!({ "seed": seed, "partition": partition, "solution": json_of(&sol)? }), status))
        }
        Command::Ml { velocities, grid, equivalence, region, margin, max_depth } => {
            let v = RunnerInstance::new(parse_list(velocities)?)?;
            let ml = lonely::ml_exact(&v);
            let line = format!("{}", ml.value);
            let mut report = json!({ "instance": json_of(&v)?, "ml": json_of(&ml)? });
            let mut status = 0;
            if let Some(g) = grid {
                let o = lonely::ml_grid_oracle(&v, *g)?;
                let bound = BigRational::from_integer(v.velocities.iter().map(|x| x.abs()).max().unwrap_or(1).into())
                    / BigRational::from_integer((*g).into());
                let agrees = o <= ml.value && &ml.value - &o <= bound;
                if !agrees {
                    status = 1;
                }
                report["grid"] = json!({ "G": g, "value": o.to_string(), "decimal": fixed(crate::scalar::rational_to_f64(&o)), "agrees": agrees });
            }
            if *equivalence {
                let e = lonely::equivalence_demo(&v, Region::parse(region)?, &parse_rational(margin)?, *max_depth)?;
                if !e.consistent {
                    status = 1;
                }
                report["equivalence"] = json_of(&e)?;
            }
            Ok(Outcome { line: Some(format!("{line} {}", ml.decimal)), ..ok(report, status) })
        }
        Command::Rigidity { n, trials } => {
            let r = crate::harmonic::rigidity_suite(*n, *trials, &mut ChaCha8Rng::seed_from_u64(seed))?;
            let status = if r.violations == 0 { 0 } else { 1 };
            Ok(ok(json!({ "seed": seed, "report": r.to_json() }), status))
        }
        Command::Approx { eta, trials } => {
            let c = DeskConstants::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut runs = Vec::new();
            let mut successes = 0;
            for _ in 0..*trials {
                let (x, target) = dynamics::random_approx_pair(&mut rng, *eta)?;
                let r = dynamics::approximate_target(&x, &target, *eta, c.grid_bound, &c);
                match r {
                    Ok(r) => {
                        if r.witness.distance <= *eta {
                            successes += 1;
                        }
                        runs.push(json_of(&r)?);
                    }
                    Err(e) => runs.push(json!({ "error": e.to_string() })),
                }
            }
            let status = if successes == *trials { 0 } else { 1 };
            let report = json!({ "seed": seed, "eta": eta, "trials": trials, "successes": successes, "constants": json_of(&c)?, "runs": runs });
            Ok(Outcome { line: Some(format!("{successes}/{trials}")), ..ok(report, status) })
        }
        Command::Dichotomy { point, epsilon, delta, n0 } => {
            let p = parse_point(point)?;
            let c = DeskConstants::default();
            let r = dynamics::rationality_demo(&p, *epsilon, *delta, *n0, &c)?;
            Ok(ok(json!({ "point": point, "constants": json_of(&c)?, "report": json_of(&r)? }), 0))
        }
        Command::Smoothgaps { limit } => {
            let r = dynamics::smooth_gaps(*limit)?;
            let line = format!("{}/{} at {}", r.max_gap.0, r.max_gap.1, r.argmax);
            Ok(Outcome { line: Some(line), ..ok(json_of(&r)?, 0) })
        }
    }
}

trait Lossy {
    fn to_f64_lossy(&self) -> String;
}

impl Lossy for BigRational {
    fn to_f64_lossy(&self) -> String {
        let x = crate::scalar::rational_to_f64(self);
        format!("{:.12}", if x.abs() < 5e-13 { 0.0 } else { x })
    }
}

/// Parses arguments, runs, writes outputs; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 3;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(o) => match emit(&cli, &o) {
            Ok(()) => o.status,
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn write(path: &PathBuf, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display())))
}

fn emit(cli: &Cli, o: &Outcome) -> Result<()> {
    let body = to_string(&normalize(o.report.clone())) + "\n";
    match &cli.out {
        Some(p) => write(p, &body)?,
        None if o.line.is_none() => print!("{body}"),
        None => {}
    }
    if let Some(line) = &o.line {
        println!("{line}");
    }
    if let (Some(p), Some(csv)) = (&cli.csv, &o.csv) {
        write(p, csv)?;
    }
    Ok(())
}
