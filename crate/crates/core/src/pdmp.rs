//! Monte Carlo simulation of the velocity jump process: straight-line
//! motion, velocity redrawn from `M` at the jumps of a rate-1 Poisson clock.
//!
//! Path `i` of a batch draws from `ChaCha8Rng::seed_from_u64(seed)` with
//! stream `i`, so every path is reproducible on its own and the batch does
//! not depend on the number of worker threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{MeasureKind, VelocityMeasure};
use crate::scalar::{unit_ball_volume, Scalar};

/// Default number of paths whose jump times and velocities are kept.
pub const DEFAULT_RECORD_LIMIT: usize = 10_000;

/// Draws velocities from a measure.
pub enum VelocitySampler {
    Interval { lower: f64, upper: f64 },
    Ball { dimension: usize, radius: f64 },
    Atoms { velocities: Vec<Vec<f64>>, weights: Vec<f64>, alias: WeightedAliasIndex<f64> },
    /// Shell `j` is the annulus `[edges[j], edges[j+1]]` with density
    /// constant in `v`.
    Shells { dimension: usize, edges: Vec<f64>, alias: WeightedAliasIndex<f64> },
}

impl VelocitySampler {
    pub fn new<T: Scalar>(m: &VelocityMeasure<T>) -> Result<Self> {
        Self::from_kind(m.kind())
    }

    /// Builds a sampler from a measure description without requiring `0`
    /// inside the hull, so that degenerate laws such as a single atom can
    /// be simulated.
    pub fn from_kind<T: Scalar>(kind: &MeasureKind<T>) -> Result<Self> {
        if let MeasureKind::Atomic { atoms } = kind {
            let dim = atoms.first().map_or(0, |a| a.velocity.len());
            let ok = dim > 0
                && atoms.iter().all(|a| {
                    a.velocity.len() == dim
                        && a.velocity.iter().all(|v| v.is_finite())
                        && a.weight.is_finite()
                        && a.weight > T::zero()
                });
            if !ok {
                return Err(Error::InvalidMeasure(
                    "atoms need equal dimensions, finite velocities and positive weights".into(),
                ));
            }
        }
        let alias = |w: Vec<f64>| {
            WeightedAliasIndex::new(w).map_err(|e| Error::InvalidMeasure(format!("alias table: {e}")))
        };
        Ok(match kind {
            MeasureKind::UniformInterval { lower, upper } => VelocitySampler::Interval {
                lower: lower.as_f64(),
                upper: upper.as_f64(),
            },
            MeasureKind::UniformBall { dimension, radius } => VelocitySampler::Ball {
                dimension: *dimension,
                radius: radius.as_f64(),
            },
            MeasureKind::Atomic { atoms } => {
                let weights: Vec<f64> = atoms.iter().map(|a| a.weight.as_f64()).collect();
                VelocitySampler::Atoms {
                    velocities: atoms
                        .iter()
                        .map(|a| a.velocity.iter().map(|v| v.as_f64()).collect())
                        .collect(),
                    alias: alias(weights.clone())?,
                    weights,
                }
            }
            MeasureKind::TabulatedRadial { dimension, radius, shell_density } => {
                let k = shell_density.len();
                let width = radius.as_f64() / k as f64;
                let edges: Vec<f64> = (0..=k).map(|j| width * j as f64).collect();
                let n = *dimension as i32;
                let omega = unit_ball_volume(*dimension);
                let masses = shell_density
                    .iter()
                    .enumerate()
                    .map(|(j, g)| g.as_f64() * omega * (edges[j + 1].powi(n) - edges[j].powi(n)))
                    .collect();
                VelocitySampler::Shells { dimension: *dimension, edges, alias: alias(masses)? }
            }
        })
    }

    pub fn dimension(&self) -> usize {
        match self {
            VelocitySampler::Interval { .. } => 1,
            VelocitySampler::Ball { dimension, .. } | VelocitySampler::Shells { dimension, .. } => *dimension,
            VelocitySampler::Atoms { velocities, .. } => velocities[0].len(),
        }
    }

    /// Exact first moment of the sampled law.
    pub fn mean(&self) -> Vec<f64> {
        match self {
            VelocitySampler::Interval { lower, upper } => vec![0.5 * (lower + upper)],
            VelocitySampler::Atoms { velocities, weights: w, .. } => {
                let total: f64 = w.iter().sum();
                let mut m = vec![0.0; velocities[0].len()];
                for (v, wi) in velocities.iter().zip(w) {
                    for (mi, vi) in m.iter_mut().zip(v) {
                        *mi += wi * vi / total;
                    }
                }
                m
            }
            _ => vec![0.0; self.dimension()],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            VelocitySampler::Interval { lower, upper } => {
                vec![lower + (upper - lower) * rng.random::<f64>()]
            }
            VelocitySampler::Ball { dimension, radius } => loop {
                let v: Vec<f64> = (0..*dimension)
                    .map(|_| radius * (2.0 * rng.random::<f64>() - 1.0))
                    .collect();
                if v.iter().map(|x| x * x).sum::<f64>() <= radius * radius {
                    break v;
                }
            },
            VelocitySampler::Atoms { velocities, alias, .. } => velocities[alias.sample(rng)].clone(),
            VelocitySampler::Shells { dimension, edges, alias } => {
                let j = alias.sample(rng);
                let n = *dimension as f64;
                let (a, b) = (edges[j].powf(n), edges[j + 1].powf(n));
                let r = (a + (b - a) * rng.random::<f64>()).powf(1.0 / n);
                if *dimension == 1 {
                    return vec![if rng.random::<bool>() { r } else { -r }];
                }
                let g: Vec<f64> = (0..*dimension).map(|_| StandardNormal.sample(rng)).collect();
                let len = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                g.iter().map(|x| r * x / len).collect()
            }
        }
    }
}

/// Jump times in `(0, T]` and the velocity held on each segment (one more
/// velocity than jumps).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub jump_times: Vec<f64>,
    pub velocities: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryBatch {
    pub seed: u64,
    pub count: usize,
    pub horizon: f64,
    pub dimension: usize,
    pub final_positions: Vec<Vec<f64>>,
    pub jump_counts: Vec<usize>,
    /// Full records of the first `records.len()` paths.
    pub records: Vec<PathRecord>,
}

fn simulate_path(sampler: &VelocitySampler, dim: usize, horizon: f64, seed: u64, index: usize, keep: bool) -> (Vec<f64>, usize, Option<PathRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut x = vec![0.0; dim];
    let mut t = 0.0;
    let mut jumps = 0;
    let mut v = sampler.sample(&mut rng);
    let mut record = keep.then(|| PathRecord { jump_times: Vec::new(), velocities: vec![v.clone()] });
    loop {
        let gap: f64 = Exp1.sample(&mut rng);
        let end = (t + gap).min(horizon);
        for (xi, vi) in x.iter_mut().zip(&v) {
            *xi += vi * (end - t);
        }
        if t + gap >= horizon {
            break;
        }
        t += gap;
        jumps += 1;
        v = sampler.sample(&mut rng);
        if let Some(r) = record.as_mut() {
            r.jump_times.push(t);
            r.velocities.push(v.clone());
        }
    }
    (x, jumps, record)
}

/// Simulates `count` independent paths on `[0, horizon]` started at the
/// origin with a velocity drawn from `M`.
pub fn sample_paths<T: Scalar>(
    m: &VelocityMeasure<T>,
    count: usize,
    horizon: f64,
    seed: u64,
    record_limit: usize,
) -> Result<TrajectoryBatch> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    sample_paths_with(&VelocitySampler::new(m)?, count, horizon, seed, record_limit)
}

/// As [`sample_paths`] for an explicit sampler.
pub fn sample_paths_with(
    sampler: &VelocitySampler,
    count: usize,
    horizon: f64,
    seed: u64,
    record_limit: usize,
) -> Result<TrajectoryBatch> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let dim = sampler.dimension();
    let paths: Vec<_> = (0..count)
        .into_par_iter()
        .map(|i| simulate_path(sampler, dim, horizon, seed, i, i < record_limit))
        .collect();
    let mut final_positions = Vec::with_capacity(count);
    let mut jump_counts = Vec::with_capacity(count);
    let mut records = Vec::new();
    for (x, n, r) in paths {
        final_positions.push(x);
        jump_counts.push(n);
        records.extend(r);
    }
    Ok(TrajectoryBatch { seed, count, horizon, dimension: dim, final_positions, jump_counts, records })
}

impl TrajectoryBatch {
    pub const PATH_SCHEMA: &'static str = "pdmp_paths/1";

    /// `path,jumps,x_0..x_{n-1}` for at most `limit` paths.
    pub fn write_paths_csv<W: Write>(&self, mut out: W, limit: usize) -> std::io::Result<()> {
        writeln!(out, "# schema={}", Self::PATH_SCHEMA)?;
        let mut header = vec!["path".to_string(), "jumps".to_string()];
        header.extend((0..self.dimension).map(|i| format!("x_{i}")));
        writeln!(out, "{}", header.join(","))?;
        for (i, (x, n)) in self.final_positions.iter().zip(&self.jump_counts).enumerate().take(limit) {
            let cells: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{i},{n},{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Statistics of `X_T/T` against `∇H(0) = ∫ v M(dv)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub schema: &'static str,
    pub seed: u64,
    pub count: usize,
    pub horizon: f64,
    pub expected_drift: Vec<f64>,
    pub drift: Vec<f64>,
    pub standard_error: Vec<f64>,
    /// `Cov(X_T)/T`, row-major.
    pub covariance_rate: Vec<Vec<f64>>,
    /// Jumps per unit time, averaged over paths (1 in law).
    pub jump_rate: f64,
    /// Largest `|drift − expected| / SE` over components (0 when both
    /// vanish, infinite for a nonzero gap with zero variance).
    pub max_z: f64,
    pub pass: bool,
}

/// Passes when every component of the empirical drift lies within 3
/// standard errors of `∇H(0)`; with zero variance the match must be exact
/// up to rounding.
pub fn empirical_moment_check<T: Scalar>(batch: &TrajectoryBatch, m: &VelocityMeasure<T>) -> Result<MomentReport> {
    let grad = m.grad_h(&vec![T::zero(); m.dimension()])?;
    drift_check(batch, grad.iter().map(|g| g.as_f64()).collect())
}

/// The same statistics against an explicitly given drift.
pub fn drift_check(batch: &TrajectoryBatch, expected: Vec<f64>) -> Result<MomentReport> {
    let n = batch.count;
    if n == 0 || batch.final_positions.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if expected.len() != batch.dimension {
        return Err(Error::InvalidArgument("expected drift has the wrong dimension".into()));
    }
    let t = batch.horizon;
    let d = batch.dimension;
    let nf = n as f64;
    let mut mean = vec![0.0; d];
    for x in &batch.final_positions {
        for (mi, xi) in mean.iter_mut().zip(x) {
            *mi += xi / t;
        }
    }
    mean.iter_mut().for_each(|m| *m /= nf);
    let mut cov = vec![vec![0.0; d]; d];
    for x in &batch.final_positions {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (x[i] / t - mean[i]) * (x[j] / t - mean[j]);
            }
        }
    }
    let denom = if n > 1 { nf - 1.0 } else { 1.0 };
    // Var(X_T/T) · T = Cov(X_T)/T
    let covariance_rate: Vec<Vec<f64>> = cov.iter().map(|r| r.iter().map(|c| c / denom * t).collect()).collect();
    let se: Vec<f64> = (0..d).map(|i| (cov[i][i] / denom / nf).sqrt()).collect();
    let mut max_z: f64 = 0.0;
    let mut pass = true;
    for i in 0..d {
        let gap = (mean[i] - expected[i]).abs();
        let exact = gap <= 1e-12 * (1.0 + expected[i].abs());
        let z = if se[i] > 0.0 {
            gap / se[i]
        } else if exact {
            0.0
        } else {
            f64::INFINITY
        };
        max_z = max_z.max(z);
        pass &= if se[i] > 0.0 { z <= 3.0 } else { exact };
    }
    let jumps: usize = batch.jump_counts.iter().sum();
    Ok(MomentReport {
        schema: "pdmp_moments/1",
        seed: batch.seed,
        count: n,
        horizon: t,
        expected_drift: expected,
        drift: mean,
        standard_error: se,
        covariance_rate,
        jump_rate: jumps as f64 / (nf * t),
        max_z,
        pass,
    })
}

/// Histogram of `X_T/T` in one dimension next to the rate function:
/// `(bin centre, −ln(frequency density)/T, L(centre))`. Informational only;
/// sample sizes cannot resolve the tails.
pub fn rate_histogram<T: Scalar>(batch: &TrajectoryBatch, m: &VelocityMeasure<T>, bins: usize) -> Result<Vec<(f64, f64, f64)>> {
    if batch.dimension != 1 || bins == 0 {
        return Err(Error::InvalidArgument("rate histogram needs 1-D paths and at least one bin".into()));
    }
    let lo = -m.mu(&[-T::one()])?.as_f64();
    let hi = m.mu(&[T::one()])?.as_f64();
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for x in &batch.final_positions {
        let v = x[0] / batch.horizon;
        let k = (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let centre = lo + width * (k as f64 + 0.5);
            let density = c as f64 / (batch.count as f64 * width);
            let empirical = if c == 0 { f64::INFINITY } else { -density.ln() / batch.horizon };
            let l = m.legendre(&[T::lit(centre)])?.value.as_f64();
            Ok((centre, empirical, l))
        })
        .collect()
}
