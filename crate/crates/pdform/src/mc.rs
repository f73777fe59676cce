//! Deterministic, sharded Monte Carlo engine.
//!
//! Every estimator draws from ChaCha8 streams: shard s of a run with seed q
//! uses the generator `seed_from_u64(q)` on stream s+1, so the sample set is
//! a pure function of (seed, samples, shard_count) — independent of thread
//! scheduling. Shard accumulators are merged in shard order, making results
//! byte-identical across runs and across machines with different CPU counts
//! (for a fixed shard count). Per-sample sums use Neumaier compensation.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling-run parameters. `shards` defaults to the logical CPU count,
/// capped by the `PDFORM_THREADS` environment variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub shards: usize,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        McConfig {
            samples,
            seed,
            shards: default_shards(),
        }
    }

    pub fn with_shards(mut self, shards: usize) -> Self {
        self.shards = shards.max(1);
        self
    }

    /// Derive an independent configuration for an auxiliary estimate that
    /// must not share randomness with the main run.
    pub fn offshoot(&self, tag: u64) -> McConfig {
        McConfig {
            samples: self.samples,
            seed: self
                .seed
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add(tag),
            shards: self.shards,
        }
    }
}

/// Logical CPUs, capped by `PDFORM_THREADS` when set.
pub fn default_shards() -> usize {
    let cpus = std::thread::available_parallelism()
        .map(|v| v.get())
        .unwrap_or(1);
    match std::env::var("PDFORM_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        Some(cap) if cap >= 1 => cpus.min(cap),
        _ => cpus,
    }
}

/// Per-sample integrand outcome.
#[derive(Clone, Copy, Debug)]
pub enum Outcome {
    Val(f64),
    /// The integrand hit an exact zero of the form; drop the sample but
    /// count it.
    RejectZero,
    /// The form evaluated negative — the run must abort.
    Negative(f64),
}

/// Number of largest |term| magnitudes kept for tail-index estimation.
const TOP_TERMS: usize = 1024;

/// Compensated running statistics for one estimator.
#[derive(Clone, Debug, Default)]
pub struct Accum {
    sum: f64,
    sum_c: f64,
    sumsq: f64,
    sumsq_c: f64,
    sum_abs: f64,
    sum_abs_c: f64,
    max_abs: f64,
    top_abs: Vec<f64>,
    top_min: f64,
    count: u64,
    rejected_zero: u64,
    negative_witness: Option<(Vec<f64>, f64)>,
}

impl Accum {
    fn push(&mut self, v: f64) {
        neumaier(&mut self.sum, &mut self.sum_c, v);
        neumaier(&mut self.sumsq, &mut self.sumsq_c, v * v);
        neumaier(&mut self.sum_abs, &mut self.sum_abs_c, v.abs());
        if v.abs() > self.max_abs {
            self.max_abs = v.abs();
        }
        self.offer_top(v.abs());
        self.count += 1;
    }

    fn offer_top(&mut self, a: f64) {
        if self.top_abs.len() < TOP_TERMS {
            self.top_abs.push(a);
            if self.top_abs.len() == TOP_TERMS {
                self.top_min = self.top_abs.iter().copied().fold(f64::INFINITY, f64::min);
            }
        } else if a > self.top_min {
            let (idx, _) = self
                .top_abs
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.total_cmp(y.1))
                .expect("nonempty");
            self.top_abs[idx] = a;
            self.top_min = self.top_abs.iter().copied().fold(f64::INFINITY, f64::min);
        }
    }

    fn merge(&mut self, other: &Accum) {
        neumaier(&mut self.sum, &mut self.sum_c, other.sum + other.sum_c);
        neumaier(&mut self.sumsq, &mut self.sumsq_c, other.sumsq + other.sumsq_c);
        neumaier(
            &mut self.sum_abs,
            &mut self.sum_abs_c,
            other.sum_abs + other.sum_abs_c,
        );
        self.max_abs = self.max_abs.max(other.max_abs);
        for &a in &other.top_abs {
            self.offer_top(a);
        }
        self.count += other.count;
        self.rejected_zero += other.rejected_zero;
        if self.negative_witness.is_none() {
            self.negative_witness = other.negative_witness.clone();
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn rejected_zero(&self) -> u64 {
        self.rejected_zero
    }

    pub fn negative_witness(&self) -> Option<&(Vec<f64>, f64)> {
        self.negative_witness.as_ref()
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            (self.sum + self.sum_c) / self.count as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr_of_mean(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let n = self.count as f64;
        let sum = self.sum + self.sum_c;
        let sumsq = self.sumsq + self.sumsq_c;
        let var = ((sumsq - sum * sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }

    /// Fraction of Σ|term| contributed by the single largest |term| — the
    /// heavy-tail indicator.
    pub fn max_term_share(&self) -> f64 {
        let denom = self.sum_abs + self.sum_abs_c;
        if denom > 0.0 {
            self.max_abs / denom
        } else {
            0.0
        }
    }

    /// Hill estimate of the tail index α of the |term| distribution, from
    /// the stored top order statistics: P(|term| > M) ≈ c·M^{−α}.  α ≤ 1
    /// means the mean itself diverges; α ≤ 2 means infinite variance.
    /// `None` when the top of the sample has no usable spread (bounded or
    /// near-constant integrands — effectively α = ∞).
    pub fn tail_index(&self) -> Option<f64> {
        let mut top: Vec<f64> = self.top_abs.iter().copied().filter(|&v| v > 0.0).collect();
        if top.len() < 32 {
            return None;
        }
        top.sort_by(|a, b| b.total_cmp(a));
        let k = (top.len() - 1).min(512);
        let xk = top[k];
        let s: f64 = top[..k].iter().map(|&x| (x / xk).ln()).sum();
        if s <= 1e-9 {
            return None;
        }
        Some(k as f64 / s)
    }

    /// Scale into an (estimate, stderr) pair: scale·mean ± scale·se.
    pub fn estimate(&self, scale: f64) -> Estimate {
        Estimate {
            value: scale * self.mean(),
            stderr: scale.abs() * self.stderr_of_mean(),
            samples: self.count,
        }
    }
}

fn neumaier(sum: &mut f64, comp: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

/// A scaled Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl Estimate {
    /// |self − other| in units of the combined standard error.
    pub fn z_against(&self, other: f64, other_stderr: f64) -> f64 {
        let sigma = (self.stderr * self.stderr + other_stderr * other_stderr).sqrt();
        if sigma == 0.0 {
            if self.value == other {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.value - other).abs() / sigma
        }
    }
}

/// Draw a uniform point on S^{n-1} (normalized Gaussian vector).
#[inline]
pub fn sphere_point(rng: &mut ChaCha8Rng, buf: &mut [f64]) {
    loop {
        let mut norm_sq = 0.0;
        for b in buf.iter_mut() {
            let v: f64 = rng.sample(StandardNormal);
            *b = v;
            norm_sq += v * v;
        }
        if norm_sq > 1e-280 {
            let inv = norm_sq.sqrt().recip();
            for b in buf.iter_mut() {
                *b *= inv;
            }
            return;
        }
    }
}

fn shard_rng(seed: u64, shard: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64 + 1);
    rng
}

fn shard_counts(samples: u64, shards: usize) -> Vec<u64> {
    let shards = shards.max(1) as u64;
    let base = samples / shards;
    let extra = samples % shards;
    (0..shards).map(|s| base + u64::from(s < extra)).collect()
}

/// Mean of f over the uniform sphere measure, sharded and deterministic.
pub fn sphere_integrate<F>(n: usize, cfg: &McConfig, f: F) -> Result<Accum>
where
    F: Fn(&[f64]) -> Outcome + Sync,
{
    integrate_impl(n, cfg, &f, |rng, buf| sphere_point(rng, buf))
}

/// Mean of f over x ~ N(0, sigma² I), sharded and deterministic.
pub fn gaussian_integrate<F>(n: usize, sigma: f64, cfg: &McConfig, f: F) -> Result<Accum>
where
    F: Fn(&[f64]) -> Outcome + Sync,
{
    integrate_impl(n, cfg, &f, move |rng, buf| {
        for b in buf.iter_mut() {
            let v: f64 = rng.sample(StandardNormal);
            *b = sigma * v;
        }
    })
}

fn integrate_impl<F, D>(n: usize, cfg: &McConfig, f: &F, draw: D) -> Result<Accum>
where
    F: Fn(&[f64]) -> Outcome + Sync,
    D: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    if n == 0 {
        return Err(Error::Input("need at least one variable".into()));
    }
    if cfg.samples == 0 {
        return Err(Error::Input("sample count must be positive".into()));
    }
    let counts = shard_counts(cfg.samples, cfg.shards);
    let shard_results: Vec<Accum> = counts
        .par_iter()
        .enumerate()
        .map(|(s, &count)| {
            let mut rng = shard_rng(cfg.seed, s);
            let mut buf = vec![0.0; n];
            let mut acc = Accum::default();
            for _ in 0..count {
                draw(&mut rng, &mut buf);
                match f(&buf) {
                    Outcome::Val(v) => acc.push(v),
                    Outcome::RejectZero => acc.rejected_zero += 1,
                    Outcome::Negative(v) => {
                        if acc.negative_witness.is_none() {
                            acc.negative_witness = Some((buf.clone(), v));
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = Accum::default();
    for acc in &shard_results {
        total.merge(acc);
    }
    Ok(total)
}

/// Deterministically collect per-sample values from the sphere sampler
/// (shard-major order). Used by estimators that reuse one sample set across
/// several integrands.
pub fn sphere_collect<T, F>(n: usize, cfg: &McConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync,
{
    if n == 0 {
        return Err(Error::Input("need at least one variable".into()));
    }
    if cfg.samples == 0 {
        return Err(Error::Input("sample count must be positive".into()));
    }
    let counts = shard_counts(cfg.samples, cfg.shards);
    let mut shards: Vec<Vec<T>> = counts
        .par_iter()
        .enumerate()
        .map(|(s, &count)| {
            let mut rng = shard_rng(cfg.seed, s);
            let mut buf = vec![0.0; n];
            let mut out = Vec::with_capacity(count as usize);
            for _ in 0..count {
                sphere_point(&mut rng, &mut buf);
                out.push(f(&buf));
            }
            out
        })
        .collect();
    let mut flat = Vec::with_capacity(cfg.samples as usize);
    for shard in shards.iter_mut() {
        flat.append(shard);
    }
    Ok(flat)
}
