//! Finite-dimensional cubic lattices: modulo reduction, dithers, and Monte
//! Carlo estimation of the goodness parameters entering the modulo-lattice
//! distortion bound.
//!
//! Only scaled-integer (cubic) lattices are provided. They are cheap to
//! reduce against and make every quantity measurable; the price is that their
//! goodness parameters stay bounded away from the ideal value 1, which the
//! bound machinery accounts for explicitly.

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};
use crate::stats::wilson_upper;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

/// Lattice family. Both variants are cubic; `ScaledInteger` is the
/// one-dimensional case, `ScaledHypercube` the k-dimensional one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    ScaledInteger,
    ScaledHypercube,
}

/// A scaled cubic lattice `s * Z^k` with spacing `s` per axis.
///
/// The fundamental Voronoi cell is the centered cube `[-s/2, s/2)^k`, the
/// per-dimension second moment is `s^2 / 12`, and nearest-point quantization
/// acts coordinate-wise with ties rounded toward `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    dim: usize,
    spacing: f64,
}

impl LatticeSpec {
    /// One-dimensional lattice `s * Z`.
    pub fn scaled_integer(spacing: f64) -> Result<Self> {
        Self::scaled_hypercube(1, spacing)
    }

    /// k-dimensional lattice `s * Z^k`.
    pub fn scaled_hypercube(dim: usize, spacing: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("lattice dimension must be at least 1"));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::domain("lattice spacing must be finite and positive"));
        }
        Ok(Self { dim, spacing })
    }

    /// Cubic lattice with unit second moment per dimension (`s = sqrt(12)`).
    pub fn unit_second_moment(dim: usize) -> Result<Self> {
        Self::scaled_hypercube(dim, 12.0_f64.sqrt())
    }

    /// Cubic lattice with the requested second moment `p` per dimension.
    pub fn with_second_moment(dim: usize, p: f64) -> Result<Self> {
        if !(p > 0.0) {
            return Err(Error::domain("second moment must be positive"));
        }
        Self::scaled_hypercube(dim, (12.0 * p).sqrt())
    }

    pub fn kind(&self) -> LatticeKind {
        if self.dim == 1 {
            LatticeKind::ScaledInteger
        } else {
            LatticeKind::ScaledHypercube
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Per-dimension second moment `s^2 / 12`.
    pub fn second_moment(&self) -> f64 {
        self.spacing * self.spacing / 12.0
    }

    /// Membership test for the fundamental Voronoi cell `[-s/2, s/2)^k`.
    pub fn cell_contains(&self, v: &[f64]) -> bool {
        let half = self.spacing / 2.0;
        v.iter().all(|&x| -half <= x && x < half)
    }

    /// Nearest lattice point, coordinate-wise, ties toward `+inf`.
    pub fn nearest_point(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v)?;
        Ok(v.iter().map(|&x| (x / self.spacing + 0.5).floor() * self.spacing).collect())
    }

    /// Reduce `v` modulo the lattice into the fundamental Voronoi cell.
    pub fn reduce(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = v.to_vec();
        self.reduce_in_place(&mut out)?;
        Ok(out)
    }

    /// In-place variant of [`LatticeSpec::reduce`].
    pub fn reduce_in_place(&self, v: &mut [f64]) -> Result<()> {
        self.check_dim(v)?;
        let s = self.spacing;
        for x in v.iter_mut() {
            *x -= (*x / s + 0.5).floor() * s;
        }
        Ok(())
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }
}

/// Modulo-lattice reduction of `v` into the fundamental Voronoi cell:
/// `v` minus its nearest lattice point.
pub fn mod_lattice(v: &[f64], lat: &LatticeSpec) -> Result<Vec<f64>> {
    lat.reduce(v)
}

/// A dither realization: one vector uniform on the fundamental Voronoi cell,
/// together with the seed that reproduces it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dither {
    pub sample: Vec<f64>,
    pub seed: u64,
}

/// Draw a dither uniform on the Voronoi cell of `lat`, deterministically from
/// `seed`. Sub-streams are derived internally, so consecutive seeds give
/// independent dithers.
pub fn sample_dither(lat: &LatticeSpec, seed: u64) -> Dither {
    let mut rng = stream_rng(derive_seed(seed, 0xD17), 0);
    let half = lat.spacing() / 2.0;
    let sample = (0..lat.dim()).map(|_| rng.gen_range(-half..half)).collect();
    Dither { sample, seed }
}

/// Estimated goodness parameters of a lattice.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LatticeGoodness {
    /// Channel-coding parameter: the smallest scale `l >= 1` at which the
    /// effective noise stays inside the scaled cell except with the target
    /// probability.
    pub l_channel: f64,
    /// Quantization parameter: worst-case cell norm over the cell second
    /// moment (3 for every cubic lattice; 1 in the ideal limit).
    pub l_quant: f64,
    /// Escape probability targeted when estimating `l_channel`.
    pub pe_target: f64,
}

/// Quantization goodness `max_{a in cell} |a|^2 / (k P)`.
///
/// Exactly 3 for cubic cells of any dimension: the cell corner has squared
/// norm `k (s/2)^2` while `k P = k s^2/12`. Ideal lattice sequences approach
/// 1; cubic lattices do not, and the value is used as-is by the bounds.
pub fn quantization_goodness(lat: &LatticeSpec) -> f64 {
    let half = lat.spacing() / 2.0;
    (half * half) / lat.second_moment()
}

/// Grid searched by [`channel_goodness`]: `1.05^j` for `j = 0..=200`.
pub fn goodness_grid() -> impl Iterator<Item = f64> {
    (0..=200).map(|j| 1.05_f64.powi(j))
}

/// Monte Carlo estimate of the channel goodness parameter: the smallest scale
/// `l` on a 5%-resolution geometric grid such that the upper 95% Wilson bound
/// on `Pr(z / sqrt(l) outside the cell)` is at most `pe`.
///
/// `noise` fills a `lat.dim()`-length buffer with one effective-noise draw.
/// Scales below 1 are clamped to 1 (the parameter is at least 1 for any
/// finite-dimensional lattice).
pub fn channel_goodness<F>(
    lat: &LatticeSpec,
    mut noise: F,
    pe: f64,
    trials: u64,
    seed: u64,
) -> Result<f64>
where
    F: FnMut(&mut crate::rng::Rng, &mut [f64]),
{
    if !(pe > 0.0 && pe < 1.0) {
        return Err(Error::domain("pe must lie in (0,1)"));
    }
    if (trials as f64) < 10.0 / pe {
        return Err(Error::domain(format!(
            "trials = {trials} too small for pe = {pe}; need at least {}",
            (10.0 / pe).ceil()
        )));
    }
    let half = lat.spacing() / 2.0;
    let mut buf = vec![0.0; lat.dim()];
    // Per trial, record the smallest scale that keeps the draw inside the
    // cell: escape at scale l iff l < l_escape.
    let mut escape_scales = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let mut rng = stream_rng(seed, t);
        noise(&mut rng, &mut buf);
        let worst = buf.iter().fold(0.0_f64, |m, &z| m.max((z / half) * (z / half)));
        escape_scales.push(worst);
    }
    escape_scales.sort_by(|a, b| a.partial_cmp(b).expect("NaN in noise sample"));

    let n = trials;
    for l in goodness_grid() {
        // Number of trials escaping at scale l.
        let first_inside = escape_scales.partition_point(|&e| e <= l);
        let escapes = (n as usize - first_inside) as u64;
        if wilson_upper(escapes, n, 1.96) <= pe {
            return Ok(l.max(1.0));
        }
    }
    let first_inside = escape_scales.partition_point(|&e| e <= 1.05_f64.powi(200));
    Err(Error::GoodnessSaturated {
        pe,
        rate: (n as usize - first_inside) as f64 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::inv_q;
    use rand_distr::StandardNormal;

    #[test]
    fn mod_lattice_examples() {
        let lat = LatticeSpec::scaled_integer(12.0_f64.sqrt()).unwrap();
        assert_eq!(mod_lattice(&[0.2], &lat).unwrap(), vec![0.2]);

        let lat1 = LatticeSpec::scaled_integer(1.0).unwrap();
        let r = mod_lattice(&[0.7], &lat1).unwrap();
        assert!((r[0] + 0.3).abs() < 1e-15);

        let lat2 = LatticeSpec::scaled_hypercube(2, 2.0).unwrap();
        let r = mod_lattice(&[3.5, -1.2], &lat2).unwrap();
        assert!((r[0] + 0.5).abs() < 1e-15);
        assert!((r[1] - 0.8).abs() < 1e-15);

        assert!(mod_lattice(&[1.0], &lat2).is_err());
    }

    #[test]
    fn tie_breaks_round_half_up() {
        // Half-cell inputs map to the upper lattice point: residue -s/2.
        let lat = LatticeSpec::scaled_integer(2.0).unwrap();
        let r = mod_lattice(&[1.0], &lat).unwrap();
        assert_eq!(r[0], -1.0);
        assert!(lat.cell_contains(&r));
    }

    #[test]
    fn mod_lattice_idempotent_exact() {
        let lat = LatticeSpec::scaled_hypercube(4, 0.75).unwrap();
        let mut rng = stream_rng(11, 0);
        for _ in 0..200 {
            let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-20.0..20.0)).collect();
            let once = mod_lattice(&v, &lat).unwrap();
            let twice = mod_lattice(&once, &lat).unwrap();
            assert_eq!(once, twice);
            assert!(lat.cell_contains(&once));
        }
    }

    #[test]
    fn mod_lattice_distributive() {
        // mod(a + mod(b)) == mod(a + b) to 1e-12 absolute.
        let lat = LatticeSpec::scaled_hypercube(3, 1.3).unwrap();
        let mut rng = stream_rng(12, 0);
        for _ in 0..500 {
            let a: Vec<f64> = (0..3).map(|_| rng.gen_range(-9.0..9.0)).collect();
            let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-9.0..9.0)).collect();
            let mb = mod_lattice(&b, &lat).unwrap();
            let lhs_in: Vec<f64> = a.iter().zip(&mb).map(|(x, y)| x + y).collect();
            let lhs = mod_lattice(&lhs_in, &lat).unwrap();
            let rhs_in: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let rhs = mod_lattice(&rhs_in, &lat).unwrap();
            for (l, r) in lhs.iter().zip(&rhs) {
                assert!((l - r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mod_lattice_periodic() {
        // Bit-exact when v and n*s are both dyadic (the sum is representable).
        let lat = LatticeSpec::scaled_integer(2.0).unwrap();
        let mut rng = stream_rng(13, 0);
        for _ in 0..200 {
            let v = rng.gen_range(-3072i32..3072) as f64 / 1024.0;
            let n = rng.gen_range(-6i32..=6) as f64;
            let base = mod_lattice(&[v], &lat).unwrap();
            let shifted = mod_lattice(&[v + n * 2.0], &lat).unwrap();
            assert_eq!(base[0], shifted[0], "v={v} n={n}");
        }
        // Generic spacing: periodic to floating tolerance.
        let lat = LatticeSpec::scaled_integer(1.3).unwrap();
        for _ in 0..200 {
            let v = rng.gen_range(-3.0..3.0);
            let n = rng.gen_range(-6i32..=6) as f64;
            let base = mod_lattice(&[v], &lat).unwrap();
            let shifted = mod_lattice(&[v + n * 1.3], &lat).unwrap();
            assert!((base[0] - shifted[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn reduce_is_offset_from_nearest_point() {
        let lat = LatticeSpec::scaled_hypercube(3, 0.9).unwrap();
        let mut rng = stream_rng(21, 0);
        for _ in 0..300 {
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let nearest = lat.nearest_point(&v).unwrap();
            let reduced = lat.reduce(&v).unwrap();
            for i in 0..3 {
                assert!((v[i] - nearest[i] - reduced[i]).abs() < 1e-12);
                // Lattice points are integer multiples of the spacing.
                let q = nearest[i] / lat.spacing();
                assert!((q - q.round()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dither_support_and_moments() {
        let lat = LatticeSpec::scaled_integer(1.0).unwrap();
        let n = 100_000usize;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for t in 0..n {
            let d = sample_dither(&lat, t as u64);
            assert!(d.sample[0] >= -0.5 && d.sample[0] < 0.5);
            sum += d.sample[0];
            sum2 += d.sample[0] * d.sample[0];
        }
        let mean = sum / n as f64;
        let m2 = sum2 / n as f64;
        let s = 1.0;
        // CLT bound on the mean: 3 sigma of the uniform's std error.
        assert!(mean.abs() < 3.0 * s / (12.0 * n as f64).sqrt(), "mean={mean}");
        // Second moment within 1% of s^2/12.
        assert!((m2 / (s * s / 12.0) - 1.0).abs() < 0.01, "m2={m2}");
    }

    #[test]
    fn dither_deterministic_per_seed() {
        let lat = LatticeSpec::scaled_hypercube(8, 2.0).unwrap();
        assert_eq!(sample_dither(&lat, 5).sample, sample_dither(&lat, 5).sample);
        assert_ne!(sample_dither(&lat, 5).sample, sample_dither(&lat, 6).sample);
    }

    #[test]
    fn quantization_goodness_is_three_for_cubes() {
        let l1 = LatticeSpec::scaled_integer(0.37).unwrap();
        assert!((quantization_goodness(&l1) - 3.0).abs() < 1e-12);
        let l8 = LatticeSpec::scaled_hypercube(8, 5.0).unwrap();
        assert!((quantization_goodness(&l8) - 3.0).abs() < 1e-12);
    }

    fn gaussian_noise(sigma: f64) -> impl FnMut(&mut crate::rng::Rng, &mut [f64]) {
        move |rng, buf| {
            for x in buf.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *x = sigma * z;
            }
        }
    }

    #[test]
    fn channel_goodness_tail_oracle() {
        // 1-D Gaussian noise: the exact parameter solves 2 Q(sqrt(l) s / (2 sigma)) = pe.
        let s = 1.0;
        let lat = LatticeSpec::scaled_integer(s).unwrap();

        // sigma = s/6, pe = 2Q(3): the unscaled cell already meets the target.
        let pe = 2.0 * crate::stats::q_func(3.0);
        let l = channel_goodness(&lat, gaussian_noise(s / 6.0), pe, 60_000, 1).unwrap();
        assert!(l >= 1.0 && l <= 1.15, "l={l}");

        // Easier target: exact solution 0.25 clamps to 1.
        let pe = 2.0 * crate::stats::q_func(1.5);
        let l = channel_goodness(&lat, gaussian_noise(s / 6.0), pe, 20_000, 2).unwrap();
        assert!((l - 1.0).abs() < 1e-12, "l={l}");

        // sigma = s/2, pe = 0.01: exact solution (2 Q^{-1}(0.005) sigma / s)^2 = 6.64.
        let l = channel_goodness(&lat, gaussian_noise(s / 2.0), 0.01, 200_000, 3).unwrap();
        let exact = {
            let x = inv_q(0.005);
            x * x
        };
        assert!((exact - 6.635).abs() < 0.01);
        // Grid resolution is 5%, Wilson bound biases upward slightly.
        assert!(l >= exact * 0.98 && l <= exact * 1.15, "l={l} exact={exact}");
    }

    #[test]
    fn channel_goodness_saturates() {
        // Noise far too large for the target: the grid tops out.
        let lat = LatticeSpec::scaled_integer(1.0).unwrap();
        let err = channel_goodness(&lat, gaussian_noise(2000.0), 1e-3, 20_000, 4);
        assert!(matches!(err, Err(Error::GoodnessSaturated { .. })));
    }

    #[test]
    fn channel_goodness_guards() {
        let lat = LatticeSpec::scaled_integer(1.0).unwrap();
        assert!(channel_goodness(&lat, gaussian_noise(0.1), 0.0, 1000, 0).is_err());
        // trials below 10/pe rejected.
        assert!(channel_goodness(&lat, gaussian_noise(0.1), 1e-3, 100, 0).is_err());
    }

    #[test]
    fn crypto_lemma_uniform_and_uncorrelated() {
        // m = mod(eta x + d) with uniform dither: m is uniform on the cell and
        // uncorrelated with x.
        let s = 2.0;
        let lat = LatticeSpec::scaled_integer(s).unwrap();
        let eta = 0.8;
        let n = 100_000usize;
        let mut rng = stream_rng(99, 0);
        let mut sum_m = 0.0;
        let mut sum_m2 = 0.0;
        let mut sum_x = 0.0;
        let mut sum_x2 = 0.0;
        let mut sum_xm = 0.0;
        let mut cell_counts = [0u64; 8];
        for t in 0..n {
            let x: f64 = rng.sample(StandardNormal);
            let d = sample_dither(&lat, t as u64);
            let m = mod_lattice(&[eta * x + d.sample[0]], &lat).unwrap()[0];
            sum_m += m;
            sum_m2 += m * m;
            sum_x += x;
            sum_x2 += x * x;
            sum_xm += x * m;
            let bucket = (((m / s + 0.5) * 8.0) as usize).min(7);
            cell_counts[bucket] += 1;
        }
        let nf = n as f64;
        let cov = sum_xm / nf - (sum_x / nf) * (sum_m / nf);
        let var_x = sum_x2 / nf - (sum_x / nf).powi(2);
        let var_m = sum_m2 / nf - (sum_m / nf).powi(2);
        let rho = cov / (var_x * var_m).sqrt();
        assert!(rho.abs() < 3.0 / nf.sqrt(), "rho={rho}");
        // Uniformity: each of 8 equal cells holds ~1/8 of the draws.
        for (i, &c) in cell_counts.iter().enumerate() {
            let p = c as f64 / nf;
            assert!((p - 0.125).abs() < 0.01, "bucket {i}: {p}");
        }
        // Second moment matches the cell second moment within 2%.
        assert!((var_m / lat.second_moment() - 1.0).abs() < 0.02);
    }
}
