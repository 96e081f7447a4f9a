//! Interleaving and orthogonal mixing for the full multi-layer scheme.
//!
//! The interleaver regroups a batch of `B^k` source blocks so that the `B`
//! entries mixed together always come from distinct blocks: for coordinate
//! `ell` the batch index is written in base `B` and the digit at position
//! `ell mod k` is enumerated while the remaining digits index the group. A
//! normalized Walsh–Hadamard transform then mixes each group of `B` values,
//! pushing their marginals toward a Gaussian at the usual `1/sqrt(B)`
//! central-limit rate; being symmetric and orthogonal it is its own inverse.

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::stats::{ks_statistic, normal_cdf, RunningStats};
use rand::Rng as _;
use rand_distr::StandardNormal;

/// Configuration of the orthogonal mixer: `b` must be a power of two. The
/// transform is always normalized so that it is orthogonal.
#[derive(Debug, Clone, Copy)]
pub struct GaussianizerConfig {
    pub b: usize,
}

impl GaussianizerConfig {
    pub fn new(b: usize) -> Result<Self> {
        if b == 0 || !b.is_power_of_two() {
            return Err(Error::config(format!("mixer size {b} is not a power of two")));
        }
        Ok(Self { b })
    }
}

/// In-place normalized fast Walsh–Hadamard transform. Self-inverse.
pub fn fwht_orthonormal(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::config(format!("transform length {n} is not a power of two")));
    }
    let mut h = 1;
    while h < n {
        for base in (0..n).step_by(2 * h) {
            for i in base..base + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    for x in v.iter_mut() {
        *x *= scale;
    }
    Ok(())
}

/// Normalized Walsh–Hadamard transform of a length-`b` vector.
pub fn gaussianize(v: &[f64], cfg: &GaussianizerConfig) -> Result<Vec<f64>> {
    if v.len() != cfg.b {
        return Err(Error::DimensionMismatch { expected: cfg.b, got: v.len() });
    }
    let mut out = v.to_vec();
    fwht_orthonormal(&mut out)?;
    Ok(out)
}

/// Batch indices gathered for coordinate `ell` (1-based, in `1..=k`) and
/// group `j` (1-based, in `1..=b^(k-1)`), over a batch of `b^k` blocks.
///
/// Returns `b` distinct 0-based block indices; over all groups `j` the map is
/// a bijection onto the whole batch for every coordinate.
pub fn interleave_indices(b: usize, k: usize, ell: usize, j: usize) -> Result<Vec<usize>> {
    if b < 2 || k < 1 {
        return Err(Error::config("need b >= 2 and k >= 1"));
    }
    if !(1..=k).contains(&ell) {
        return Err(Error::domain(format!("coordinate {ell} out of 1..={k}")));
    }
    let group_count = checked_pow(b, k - 1)?;
    if !(1..=group_count).contains(&j) {
        return Err(Error::domain(format!("group {j} out of 1..={group_count}")));
    }
    let batch = checked_pow(b, k)?;
    // Digit position enumerated by this coordinate; the top coordinate wraps
    // to position zero so every coordinate owns exactly one digit.
    let t = ell % k;
    let bt = checked_pow(b, t)?;
    let j0 = j - 1;
    let high = (j0 / bt) * (bt * b);
    let low = j0 % bt;
    let mut out = Vec::with_capacity(b);
    for xi in 0..b {
        let idx = high + xi * bt + low;
        debug_assert!(idx < batch);
        out.push(idx);
    }
    Ok(out)
}

fn checked_pow(b: usize, e: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..e {
        acc = acc
            .checked_mul(b)
            .ok_or_else(|| Error::config("batch size b^k overflows"))?;
        if acc > 1 << 26 {
            return Err(Error::config("batch size b^k too large to materialize"));
        }
    }
    Ok(acc)
}

/// Gather one mixed group: entries of row `ell` of a `k x b^k` block matrix
/// at the interleaver indices of group `j`.
pub fn interleave(block: &[Vec<f64>], ell: usize, j: usize) -> Result<Vec<f64>> {
    let k = block.len();
    if k == 0 {
        return Err(Error::config("empty block matrix"));
    }
    let cols = block[0].len();
    let b = infer_b(cols, k)?;
    let idx = interleave_indices(b, k, ell, j)?;
    let row = &block[ell - 1];
    Ok(idx.iter().map(|&c| row[c]).collect())
}

fn infer_b(cols: usize, k: usize) -> Result<usize> {
    // cols = b^k with b >= 2.
    let b = (cols as f64).powf(1.0 / k as f64).round() as usize;
    if b < 2 || checked_pow(b, k)? != cols {
        return Err(Error::config(format!("{cols} columns is not b^{k} for integer b >= 2")));
    }
    Ok(b)
}

/// Interleave a whole `k x b^k` block matrix into its `k * b^(k-1)` groups of
/// length `b`, indexed `[ell-1][j-1]`.
pub fn interleave_all(block: &[Vec<f64>]) -> Result<Vec<Vec<Vec<f64>>>> {
    let k = block.len();
    let b = infer_b(block.first().map_or(0, |r| r.len()), k)?;
    let groups = checked_pow(b, k - 1)?;
    (1..=k)
        .map(|ell| (1..=groups).map(|j| interleave(block, ell, j)).collect())
        .collect()
}

/// Inverse of [`interleave_all`]: scatter groups back into a `k x b^k`
/// matrix.
pub fn deinterleave_all(groups: &[Vec<Vec<f64>>]) -> Result<Vec<Vec<f64>>> {
    let k = groups.len();
    if k == 0 || groups[0].is_empty() {
        return Err(Error::config("empty group set"));
    }
    let b = groups[0][0].len();
    let cols = checked_pow(b, k)?;
    let mut block = vec![vec![0.0; cols]; k];
    for (ell0, row_groups) in groups.iter().enumerate() {
        for (j0, group) in row_groups.iter().enumerate() {
            let idx = interleave_indices(b, k, ell0 + 1, j0 + 1)?;
            if group.len() != b {
                return Err(Error::config("ragged group"));
            }
            for (xi, &c) in idx.iter().enumerate() {
                block[ell0][c] = group[xi];
            }
        }
    }
    Ok(block)
}

/// Input family for the mixing diagnostic.
#[derive(Debug, Clone, Copy)]
pub enum MixInput {
    /// Uniform dither on `[-spacing/2, spacing/2)` (variance `spacing^2/12`).
    DitherUniform { spacing: f64 },
    /// Already-Gaussian input of the given standard deviation.
    Gaussian { sigma: f64 },
}

impl MixInput {
    fn sigma(&self) -> f64 {
        match self {
            MixInput::DitherUniform { spacing } => spacing / 12.0f64.sqrt(),
            MixInput::Gaussian { sigma } => *sigma,
        }
    }
}

/// One row of the mixing diagnostic table.
#[derive(Debug, Clone, Copy)]
pub struct GaussianizationRow {
    pub b: usize,
    pub ks_mean: f64,
    pub ks_std: f64,
}

/// Kolmogorov–Smirnov diagnostic of the mixer output against the
/// matched-variance Gaussian.
#[derive(Debug, Clone)]
pub struct GaussianizationReport {
    pub rows: Vec<GaussianizationRow>,
    /// True when the mean KS distance decreases monotonically along the
    /// (ascending) transform sizes.
    pub monotone_decreasing: bool,
}

/// Mix i.i.d. draws of `input` through transforms of each size in `b_list`
/// (ascending powers of two) and measure the KS distance of the output
/// sample to the matched-variance Gaussian, `runs` times per size.
pub fn gaussianization_report(
    input: MixInput,
    b_list: &[usize],
    runs: usize,
    seed: u64,
) -> Result<GaussianizationReport> {
    if b_list.is_empty() || runs == 0 {
        return Err(Error::config("need at least one size and one run"));
    }
    for w in b_list.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::config("b_list must be strictly ascending"));
        }
    }
    let sigma = input.sigma();
    let mut rows = Vec::with_capacity(b_list.len());
    for (bi, &b) in b_list.iter().enumerate() {
        let cfg = GaussianizerConfig::new(b)?;
        let mut stats = RunningStats::new();
        for run in 0..runs {
            let mut rng = stream_rng(seed, ((bi as u64) << 32) | run as u64);
            let draws: Vec<f64> = (0..b)
                .map(|_| match input {
                    MixInput::DitherUniform { spacing } => {
                        rng.gen_range(-spacing / 2.0..spacing / 2.0)
                    }
                    MixInput::Gaussian { sigma } => {
                        sigma * rng.sample::<f64, _>(StandardNormal)
                    }
                })
                .collect();
            let mut mixed = gaussianize(&draws, &cfg)?;
            let d = ks_statistic(&mut mixed, |x| normal_cdf(x / sigma));
            stats.push(d);
        }
        rows.push(GaussianizationRow {
            b,
            ks_mean: stats.mean(),
            ks_std: stats.variance().sqrt(),
        });
    }
    let monotone_decreasing = rows.windows(2).all(|w| w[1].ks_mean < w[0].ks_mean);
    Ok(GaussianizationReport { rows, monotone_decreasing })
}
