//! End-to-end Monte Carlo simulation of a layer plan.
//!
//! Layer 1 transmits each source coordinate linearly; its sufficient
//! statistic per coordinate is `y = sqrt(E_1) x / sigma + sqrt(N/2) z`, from
//! which the minimum-mean-square estimate is formed (linear for a Gaussian
//! source, the truncated-normal posterior mean for a uniform one). Every
//! refinement layer encodes the source against a unit-second-moment cubic
//! lattice with a fresh per-trial dither, carries each coordinate through its
//! scalar channel — a linear sufficient statistic again, or a full PPM
//! correlation simulation with uniform-prior decoding — and decodes with the
//! previous layer's estimate as side information.
//!
//! Transmitter-side scale factors use only design knowledge: the analytic
//! distortion bound of the previous layers at this layer's design noise.
//! Receiver-side factors may use the true noise level, which the receiver is
//! assumed to know. PPM-transported layers use the saturating unit scale set
//! (`alpha_c = alpha_s = 1`) because their effective noise is correlated with
//! the transmitted point; linear layers use the design-SNR-optimal set.

use super::{analytic_distortion, LayerKind, LayerPlan};
use crate::error::{Error, Result};
use crate::lattice::{sample_dither, LatticeSpec};
use crate::mlm::{mlm_decode, mlm_encode, MlmContext, MlmParams};
use crate::model::SourceKind;
use crate::ppm::{ppm_channel_simulate, ppm_map_decode, PpmConfig, PpmPrior};
use crate::rng::{derive_seed, stream_rng};
use crate::stats::{truncated_normal_mean, RunningStats};
use rand::Rng as _;
use rand_distr::StandardNormal;

/// Simulation options.
#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub trials: u64,
    pub seed: u64,
    /// Source block length.
    pub k: usize,
    /// Orthogonal-mixer size for PPM layers: `Some(b)` batches `b` blocks,
    /// mixes each coordinate across the batch with a normalized
    /// Walsh–Hadamard transform, and decodes the mixed values under a
    /// Gaussian prior. `None` sends lattice points directly with
    /// uniform-prior decoding.
    pub mix_b: Option<usize>,
    /// Time-grid points per pulse width in PPM layers.
    pub grid_per_pulse: usize,
    /// Search half-width, in standard deviations, for Gaussian-prior PPM
    /// decoding of mixed values.
    pub gaussian_search_sigmas: f64,
}

impl SimOptions {
    pub fn new(trials: u64, seed: u64, k: usize) -> Self {
        Self { trials, seed, k, mix_b: None, grid_per_pulse: 64, gaussian_search_sigmas: 6.0 }
    }

    pub fn with_mixing(mut self, b: usize) -> Self {
        self.mix_b = Some(b);
        self
    }
}

/// Monte Carlo estimate of a plan's end-to-end distortion.
#[derive(Debug, Clone)]
pub struct SimEstimate {
    pub d_hat: f64,
    /// Half-width of the normal-approximation 95% confidence interval.
    pub ci95: f64,
    /// Mean distortion after each layer the receiver used (index 0 = layer 1).
    pub per_layer_d: Vec<f64>,
    /// Coefficient of variation of the per-block normalized error after each
    /// layer: the concentration diagnostic (shrinks with the block length).
    pub per_layer_cv: Vec<f64>,
    /// Number of source blocks simulated.
    pub blocks: u64,
    /// Layers used by the receiver at this noise level.
    pub layers_used: usize,
}

struct LayerDesign {
    kind: LayerKind,
    energy: f64,
    design_noise: f64,
    beta: Option<f64>,
    /// Transmitter-side bound on the unknown-part power: the analytic chain
    /// value at this layer's design noise.
    sigma_cap: f64,
    /// Receiver-side unknown-part power at the true noise level.
    sigma_true: f64,
}

fn design_layers(plan: &LayerPlan, n: f64, used: usize) -> Result<Vec<LayerDesign>> {
    let mut out = Vec::new();
    for layer in &plan.layers[1..used] {
        let n_i = layer.design_noise.expect("validated plan");
        // What the transmitter can assume about the previous estimate, and
        // what the receiver knows it actually is. For the layer right above
        // the base layer both sides can evaluate the base estimator's exact
        // mean-square error (the source law is design knowledge); deeper
        // layers fall back on the analytic chain.
        let (sigma_cap, sigma_true) = if layer.index == 2 {
            let e1 = plan.layers[0].energy;
            (
                base_layer_mmse_distortion(&plan.source, e1, n_i),
                base_layer_mmse_distortion(&plan.source, e1, n),
            )
        } else {
            (
                chain_value(plan, layer.index - 1, n_i)?,
                chain_value(plan, layer.index - 1, n)?,
            )
        };
        let sigma_true = sigma_true.min(sigma_cap);
        out.push(LayerDesign {
            kind: layer.kind,
            energy: layer.energy,
            design_noise: n_i,
            beta: layer.beta,
            sigma_cap,
            sigma_true,
        });
    }
    Ok(out)
}

/// Exact mean-square error of the base-layer estimator at noise level `n`:
/// the linear-estimator value for a Gaussian source, and a deterministic
/// quadrature of the truncated-normal posterior mean for a uniform one.
pub fn base_layer_mmse_distortion(source: &crate::model::SourceModel, e1: f64, n: f64) -> f64 {
    let sigma2 = source.variance;
    match source.kind {
        SourceKind::Gaussian => sigma2 / (1.0 + 2.0 * e1 / n),
        SourceKind::Uniform => {
            let half = source.half_width().expect("uniform source");
            let a = e1.sqrt() / source.sigma();
            let sw = (n / 2.0).sqrt();
            // E[(x - E[x|y])^2] over x uniform and w Gaussian; midpoint rule
            // in x, Gauss-style midpoint in the w tail range.
            let nx = 201;
            let nw = 201;
            let mut acc = 0.0;
            for i in 0..nx {
                let x = -half + (i as f64 + 0.5) / nx as f64 * 2.0 * half;
                for j in 0..nw {
                    // Map a uniform grid through the Gaussian quantile by
                    // simple equal-probability strata midpoints.
                    let p = (j as f64 + 0.5) / nw as f64;
                    let w = sw * crate::stats::inv_q(1.0 - p);
                    let y = a * x + w;
                    let est = truncated_normal_mean(y / a, sw / a, -half, half);
                    acc += (x - est) * (x - est);
                }
            }
            acc / (nx as f64 * nw as f64)
        }
    }
}

/// Analytic distortion of the first `layers` layers of the plan at noise `n`.
fn chain_value(plan: &LayerPlan, layers: usize, n: f64) -> Result<f64> {
    let truncated = LayerPlan {
        profile: plan.profile,
        source: plan.source,
        layers: plan.layers[..layers].to_vec(),
        recursion: plan.recursion,
    };
    analytic_distortion(&truncated, n)
}

/// Simulate the plan at true noise level `n`.
///
/// Deterministic for a fixed `(seed, trial)` layout; trials are independent
/// streams, so the estimate does not depend on execution order.
pub fn simulate_plan(plan: &LayerPlan, n: f64, opts: &SimOptions) -> Result<SimEstimate> {
    plan.validate()?;
    if opts.trials < 100 {
        return Err(Error::domain("need at least 100 trials"));
    }
    if !(n > 0.0) {
        return Err(Error::domain("noise level must be positive"));
    }
    if opts.k == 0 {
        return Err(Error::domain("block length k must be at least 1"));
    }
    let used = plan.receiver_layer(n);
    let designs = design_layers(plan, n, used)?;
    let has_ppm = designs.iter().any(|d| d.kind == LayerKind::MlmPpm);
    let batch = match opts.mix_b {
        Some(b) if has_ppm => {
            if b < opts.k || !b.is_power_of_two() {
                return Err(Error::config(
                    "mixer size must be a power of two at least the block length",
                ));
            }
            b
        }
        _ => 1,
    };
    let groups = opts.trials / batch as u64;
    if groups == 0 {
        return Err(Error::domain("trials must cover at least one mixing batch"));
    }

    let sigma = plan.source.sigma();
    let e1 = plan.layers[0].energy;
    let lattice = LatticeSpec::unit_second_moment(opts.k)?;
    let mut final_stats = RunningStats::new();
    let mut per_layer = vec![RunningStats::new(); used];

    for g in 0..groups {
        // Draw the batch of source blocks and run layer 1.
        let mut xs: Vec<Vec<f64>> = Vec::with_capacity(batch);
        let mut estimates: Vec<Vec<f64>> = Vec::with_capacity(batch);
        for b in 0..batch {
            let trial = g * batch as u64 + b as u64;
            let mut rng = stream_rng(opts.seed, trial);
            let x: Vec<f64> = (0..opts.k).map(|_| plan.source.sample(&mut rng)).collect();
            let xhat1: Vec<f64> = x
                .iter()
                .map(|&xi| {
                    let z: f64 = rng.sample(StandardNormal);
                    let y = e1.sqrt() * xi / sigma + (n / 2.0).sqrt() * z;
                    base_layer_mmse(plan, y, e1, n)
                })
                .collect();
            push_block_distortion(&mut per_layer[0], &x, &xhat1);
            xs.push(x);
            estimates.push(xhat1);
        }

        for (li, design) in designs.iter().enumerate() {
            let layer_index = li + 2;
            // Lattice points for the whole batch.
            let mut contexts = Vec::with_capacity(batch);
            let mut points = Vec::with_capacity(batch);
            for (b, x) in xs.iter().enumerate() {
                let trial = g * batch as u64 + b as u64;
                let dither_seed = derive_seed(opts.seed, (layer_index as u64) << 40 | trial);
                let dither = sample_dither(&lattice, dither_seed);
                let params = layer_params(design, n);
                let ctx = MlmContext::new(
                    lattice,
                    dither,
                    params,
                    design.sigma_true,
                    design.sigma_cap,
                )?;
                let m = mlm_encode(x, &ctx)?;
                contexts.push(ctx);
                points.push(m);
            }

            // Transport the batch through the scalar channel.
            let received = match design.kind {
                LayerKind::MlmLinear => {
                    transport_linear(&points, design, n, opts, g, layer_index)?
                }
                LayerKind::MlmPpm => {
                    if batch > 1 {
                        transport_ppm_mixed(&points, design, n, opts, g, layer_index)?
                    } else {
                        transport_ppm_direct(&points, design, n, opts, g, layer_index)?
                    }
                }
                LayerKind::LinearBase => unreachable!("validated plan"),
            };

            // Decode with the previous estimates as side information.
            for b in 0..batch {
                let xhat = mlm_decode(&received[b], &estimates[b], &contexts[b])?;
                push_block_distortion(&mut per_layer[li + 1], &xs[b], &xhat);
                estimates[b] = xhat;
            }
        }

        for (x, xhat) in xs.iter().zip(&estimates) {
            let err: f64 = x
                .iter()
                .zip(xhat)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / opts.k as f64;
            final_stats.push(err);
        }
    }

    Ok(SimEstimate {
        d_hat: final_stats.mean(),
        ci95: final_stats.ci95(),
        per_layer_d: per_layer.iter().map(|s| s.mean()).collect(),
        per_layer_cv: per_layer
            .iter()
            .map(|s| if s.mean() > 0.0 { s.variance().sqrt() / s.mean() } else { 0.0 })
            .collect(),
        blocks: final_stats.count(),
        layers_used: used,
    })
}

fn push_block_distortion(stats: &mut RunningStats, x: &[f64], xhat: &[f64]) {
    let err: f64 =
        x.iter().zip(xhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64;
    stats.push(err);
}

/// MMSE estimate of one source coordinate from the layer-1 statistic.
fn base_layer_mmse(plan: &LayerPlan, y: f64, e1: f64, n: f64) -> f64 {
    let sigma = plan.source.sigma();
    match plan.source.kind {
        SourceKind::Gaussian => e1.sqrt() * sigma * y / (e1 + n / 2.0),
        SourceKind::Uniform => {
            // Posterior of x given y = a x + w is a truncated normal.
            let a = e1.sqrt() / sigma;
            let half = plan.source.half_width().expect("uniform source");
            let mu = y / a;
            let sd = (n / 2.0).sqrt() / a;
            truncated_normal_mean(mu, sd, -half, half)
        }
    }
}

/// Transmitter/receiver scale factors for one refinement layer.
fn layer_params(design: &LayerDesign, n: f64) -> MlmParams {
    match design.kind {
        LayerKind::MlmLinear => {
            let snr = 2.0 * design.energy / n;
            let snr0 = 2.0 * design.energy / design.design_noise;
            let alpha_c = snr / (1.0 + snr);
            let alpha_bar = snr0 / (1.0 + snr0);
            let eta = (alpha_bar / design.sigma_cap).sqrt();
            let ratio = design.sigma_cap / design.sigma_true;
            let alpha_s = alpha_bar * (1.0 + snr) / (ratio + alpha_bar * (1.0 + snr));
            MlmParams { eta, alpha_c, alpha_s, alpha_bar, p: 1.0 }
        }
        // PPM effective noise is correlated with the transmitted point, so
        // the saturating unit scales apply.
        LayerKind::MlmPpm => MlmParams {
            eta: (1.0 / design.sigma_cap).sqrt(),
            alpha_c: 1.0,
            alpha_s: 1.0,
            alpha_bar: 1.0,
            p: 1.0,
        },
        LayerKind::LinearBase => unreachable!(),
    }
}

/// Linear transport: per coordinate, the unbiased sufficient statistic
/// `m + w` with `w ~ N(0, N/(2 E))` (unit lattice second moment).
fn transport_linear(
    points: &[Vec<f64>],
    design: &LayerDesign,
    n: f64,
    opts: &SimOptions,
    group: u64,
    layer_index: usize,
) -> Result<Vec<Vec<f64>>> {
    let noise_sd = (n / (2.0 * design.energy)).sqrt();
    let mut out = Vec::with_capacity(points.len());
    for (b, m) in points.iter().enumerate() {
        let trial = group * points.len() as u64 + b as u64;
        let mut rng = stream_rng(derive_seed(opts.seed, 0xC4A | (layer_index as u64) << 8), trial);
        out.push(
            m.iter()
                .map(|&mi| mi + noise_sd * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        );
    }
    Ok(out)
}

/// Direct PPM transport: each lattice coordinate (uniform on the Voronoi
/// interval, unit variance) rides a pulse shift and is decoded by peak
/// correlation over the support.
fn transport_ppm_direct(
    points: &[Vec<f64>],
    design: &LayerDesign,
    n: f64,
    opts: &SimOptions,
    group: u64,
    layer_index: usize,
) -> Result<Vec<Vec<f64>>> {
    let beta = design.beta.expect("validated PPM layer");
    let half = 3.0f64.sqrt(); // cell half-width of the unit-second-moment lattice
    // Refine the grid with the operating point so the quantization floor
    // stays below the jitter at high energy-to-noise ratios.
    let grid = opts
        .grid_per_pulse
        .max(crate::ppm::adaptive_grid_per_pulse(design.energy / n));
    let cfg = PpmConfig::new(
        design.energy,
        beta,
        grid,
        half,
        PpmPrior::UniformSymmetric(half),
    )?;
    let mut out = Vec::with_capacity(points.len());
    for (b, m) in points.iter().enumerate() {
        let trial = group * points.len() as u64 + b as u64;
        let mut decoded = Vec::with_capacity(m.len());
        for (c, &mi) in m.iter().enumerate() {
            let seed =
                derive_seed(opts.seed, 0xBB << 56 | (layer_index as u64) << 40 | (c as u64) << 20)
                    ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let trace = ppm_channel_simulate(mi, &cfg, n, seed)?;
            decoded.push(ppm_map_decode(&trace, &cfg, n, design.energy)?);
        }
        out.push(decoded);
    }
    Ok(out)
}

/// Mixed PPM transport: for each coordinate, the batch of lattice points is
/// passed through a normalized Walsh–Hadamard transform, each mixed value is
/// sent by PPM and decoded under a Gaussian prior, and the inverse transform
/// recovers per-block estimates.
fn transport_ppm_mixed(
    points: &[Vec<f64>],
    design: &LayerDesign,
    n: f64,
    opts: &SimOptions,
    group: u64,
    layer_index: usize,
) -> Result<Vec<Vec<f64>>> {
    use super::mixing::fwht_orthonormal;
    let beta = design.beta.expect("validated PPM layer");
    let batch = points.len();
    let k = points[0].len();
    // The mixed values have unit variance; search a multiple of it.
    let grid = opts
        .grid_per_pulse
        .max(crate::ppm::adaptive_grid_per_pulse(design.energy / n));
    let cfg = PpmConfig::new(
        design.energy,
        beta,
        grid,
        opts.gaussian_search_sigmas,
        PpmPrior::GaussianStd,
    )?;
    let mut out = vec![vec![0.0; k]; batch];
    for c in 0..k {
        let mut v: Vec<f64> = points.iter().map(|m| m[c]).collect();
        fwht_orthonormal(&mut v)?;
        let mut decoded = Vec::with_capacity(batch);
        for (xi, &value) in v.iter().enumerate() {
            let seed = derive_seed(
                opts.seed,
                0xAA << 56 | (layer_index as u64) << 40 | (c as u64) << 20 | xi as u64,
            ) ^ group.wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let trace = ppm_channel_simulate(value, &cfg, n, seed)?;
            decoded.push(ppm_map_decode(&trace, &cfg, n, design.energy)?);
        }
        fwht_orthonormal(&mut decoded)?;
        for (b, row) in out.iter_mut().enumerate() {
            row[c] = decoded[b];
        }
    }
    Ok(out)
}
