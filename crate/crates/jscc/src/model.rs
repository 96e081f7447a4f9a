//! Source models, distortion profiles, and closed-form baselines.
//!
//! Energies and noise levels are always stored in natural (linear) units;
//! decibels appear only at the CLI boundary. Throughout, `enr` denotes the
//! energy-to-noise ratio `E/N` of the infinite-bandwidth Gaussian channel,
//! whose per-source-sample capacity equals `enr` nats.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Family of the scalar source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Gaussian,
    /// Uniform on a symmetric interval `[-a, a]`.
    Uniform,
}

/// An i.i.d. scalar source with its variance and differential entropy.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SourceModel {
    pub kind: SourceKind,
    /// Per-sample variance.
    pub variance: f64,
    /// Differential entropy in nats (derived from the family and variance).
    pub diff_entropy: f64,
}

impl SourceModel {
    /// Zero-mean Gaussian source with the given variance.
    pub fn gaussian(variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::domain("source variance must be finite and positive"));
        }
        let h = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * variance).ln();
        Ok(Self { kind: SourceKind::Gaussian, variance, diff_entropy: h })
    }

    /// Standard Gaussian source.
    pub fn std_gaussian() -> Self {
        Self::gaussian(1.0).expect("unit variance is valid")
    }

    /// Uniform source on `[-half_width, half_width]`.
    pub fn uniform(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::domain("uniform half-width must be finite and positive"));
        }
        Ok(Self {
            kind: SourceKind::Uniform,
            variance: half_width * half_width / 3.0,
            diff_entropy: (2.0 * half_width).ln(),
        })
    }

    /// Unit-variance uniform source (half-width `sqrt(3)`).
    pub fn unit_uniform() -> Self {
        Self::uniform(3.0_f64.sqrt()).expect("sqrt(3) half-width is valid")
    }

    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Half-width of the support for the uniform family.
    pub fn half_width(&self) -> Option<f64> {
        match self.kind {
            SourceKind::Uniform => Some((3.0 * self.variance).sqrt()),
            SourceKind::Gaussian => None,
        }
    }

    /// Draw one sample.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            SourceKind::Gaussian => {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                z * self.sigma()
            }
            SourceKind::Uniform => {
                let a = self.half_width().expect("uniform source has a half-width");
                rng.gen_range(-a..a)
            }
        }
    }
}

/// Per-source-sample capacity of the infinite-bandwidth Gaussian channel, in
/// nats: equal to the energy-to-noise ratio itself.
pub fn capacity(enr: f64) -> Result<f64> {
    if enr < 0.0 || !enr.is_finite() {
        return Err(Error::domain("enr must be finite and non-negative"));
    }
    Ok(enr)
}

/// Distortion of the separation-based optimum for a Gaussian source:
/// `sigma^2 * exp(-2 enr)`. For non-Gaussian sources this is still an upper
/// bound on the optimum (the Gaussian source is hardest to compress).
pub fn separation_distortion(source: &SourceModel, enr: f64) -> Result<f64> {
    if enr < 0.0 || !enr.is_finite() {
        return Err(Error::domain("enr must be finite and non-negative"));
    }
    Ok(source.variance * (-2.0 * enr).exp())
}

/// Shannon lower bound on the optimal distortion:
/// `exp(2 h(x)) / (2 pi e) * exp(-2 enr)`. Coincides with
/// [`separation_distortion`] for Gaussian sources.
pub fn shannon_lower_bound(source: &SourceModel, enr: f64) -> Result<f64> {
    if enr < 0.0 || !enr.is_finite() {
        return Err(Error::domain("enr must be finite and non-negative"));
    }
    let c = (2.0 * source.diff_entropy).exp() / (2.0 * std::f64::consts::PI * std::f64::consts::E);
    Ok(c * (-2.0 * enr).exp())
}

/// Distortion of one linearly modulated layer at energy-to-noise ratio `enr`:
/// `sigma^2 / (1 + 2 enr)`.
pub fn linear_layer_distortion(sigma2: f64, enr: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::domain("sigma2 must be positive"));
    }
    if enr < 0.0 || !enr.is_finite() {
        return Err(Error::domain("enr must be finite and non-negative"));
    }
    Ok(sigma2 / (1.0 + 2.0 * enr))
}

/// Polynomial distortion profile `F(N) = 1 / (1 + (e_dsgn/N)^order)`.
///
/// The requirement on a universal scheme is `D(N) <= sigma^2 * F(N)` for every
/// noise level `N` above `n_min`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DistortionProfile {
    /// Normalization energy of the profile.
    pub e_dsgn: f64,
    /// Decay order `L >= 1`.
    pub order: f64,
    /// Smallest noise level at which the profile is enforced.
    pub n_min: f64,
}

impl DistortionProfile {
    pub fn new(e_dsgn: f64, order: f64, n_min: f64) -> Result<Self> {
        if !(e_dsgn > 0.0) {
            return Err(Error::domain("e_dsgn must be positive"));
        }
        if !(order >= 1.0) {
            return Err(Error::domain("profile order must be at least 1"));
        }
        if !(n_min > 0.0) {
            return Err(Error::domain("n_min must be positive"));
        }
        Ok(Self { e_dsgn, order, n_min })
    }

    /// Profile value `F(n)`, strictly increasing in `n`, in `(0, 1)`.
    pub fn value(&self, n: f64) -> Result<f64> {
        if !(n > 0.0) {
            return Err(Error::domain("noise level must be positive"));
        }
        Ok(1.0 / (1.0 + (self.e_dsgn / n).powf(self.order)))
    }

    /// Distortion ceiling `sigma^2 * F(n)`.
    pub fn ceiling(&self, sigma2: f64, n: f64) -> Result<f64> {
        Ok(sigma2 * self.value(n)?)
    }
}

/// Total transmit energy and its split across layers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyBudget {
    /// Energy per source sample available to the whole scheme.
    pub total: f64,
    /// Per-layer energies; their sum may not exceed `total`.
    pub per_layer: Vec<f64>,
}

impl EnergyBudget {
    pub fn new(total: f64, per_layer: Vec<f64>) -> Result<Self> {
        if !(total > 0.0) {
            return Err(Error::domain("total energy must be positive"));
        }
        if per_layer.iter().any(|&e| e < 0.0 || !e.is_finite()) {
            return Err(Error::domain("per-layer energies must be finite and non-negative"));
        }
        let sum: f64 = per_layer.iter().sum();
        if sum > total * (1.0 + 1e-12) {
            return Err(Error::infeasible(format!(
                "per-layer energies sum to {sum:.6} which exceeds the total {total:.6}"
            )));
        }
        Ok(Self { total, per_layer })
    }
}
