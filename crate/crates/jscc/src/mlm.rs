//! Modulo-lattice modulation with receiver side information.
//!
//! The transmitter sends `m = [eta x + d] mod L` for a lattice `L` with
//! second moment `P`, a scale `eta`, and a dither `d` uniform on the Voronoi
//! cell (making `m` independent of `x`). The receiver, holding side
//! information `j` correlated with `x`, computes
//! `y~ = [alpha_c y - eta j - d] mod L` and estimates
//! `x^ = (alpha_s / eta) y~ + j`.
//!
//! Besides the codec itself, this module provides the closed-form parameter
//! choices and distortion guarantees used by the layered schemes: the optimal
//! known-SNR parameters, their universal variant designed at a minimum SNR,
//! the variant for an unknown source power known only up to an upper bound,
//! and the finite-lattice distortion bound combining the measured lattice
//! goodness parameters with a decoding-error term.

use crate::error::{Error, Result};
use crate::lattice::{Dither, LatticeGoodness, LatticeSpec};
use serde::{Deserialize, Serialize};

/// Scale factors of one modulo-lattice layer.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MlmParams {
    /// Source scale applied before the modulo at the transmitter.
    pub eta: f64,
    /// Channel scale in `(0, 1]` applied to the received signal.
    pub alpha_c: f64,
    /// Source scale in `[0, 1]` applied to the reduced signal.
    pub alpha_s: f64,
    /// Wyner–Ziv coefficient `max(alpha_c - (l-1)/l, 0)`; zero marks the
    /// degenerate regime in which the decoder falls back to the side
    /// information.
    pub alpha_bar: f64,
    /// Lattice second moment the parameters were built for.
    pub p: f64,
}

impl MlmParams {
    /// Degenerate parameters: the layer transmits pure dither and the decoder
    /// returns the side information unchanged.
    pub fn degenerate(p: f64) -> Self {
        Self { eta: 0.0, alpha_c: 0.0, alpha_s: 0.0, alpha_bar: 0.0, p }
    }

    pub fn is_degenerate(&self) -> bool {
        self.alpha_bar == 0.0
    }

    /// Power-feasibility: `eta^2 sigma_q^2 / P + alpha_c^2 / snr +
    /// (1 - alpha_c)^2 <= 1` must hold for the distortion bound to apply.
    pub fn feasible(&self, sigma_q2: f64, snr: f64) -> bool {
        self.eta * self.eta * sigma_q2 / self.p
            + self.alpha_c * self.alpha_c / snr
            + (1.0 - self.alpha_c) * (1.0 - self.alpha_c)
            <= 1.0 + 1e-12
    }
}

/// Everything one layer needs to encode and decode.
#[derive(Debug, Clone)]
pub struct MlmContext {
    pub lattice: LatticeSpec,
    pub dither: Dither,
    pub params: MlmParams,
    /// True power of the unknown part (what the receiver faces).
    pub sigma_q2: f64,
    /// Upper bound on that power used at the transmitter; `sigma_q2 <=
    /// sigma_q2_cap`.
    pub sigma_q2_cap: f64,
}

impl MlmContext {
    pub fn new(
        lattice: LatticeSpec,
        dither: Dither,
        params: MlmParams,
        sigma_q2: f64,
        sigma_q2_cap: f64,
    ) -> Result<Self> {
        if sigma_q2 > sigma_q2_cap * (1.0 + 1e-12) {
            return Err(Error::domain("sigma_q2 exceeds its declared upper bound"));
        }
        if dither.sample.len() != lattice.dim() {
            return Err(Error::DimensionMismatch {
                expected: lattice.dim(),
                got: dither.sample.len(),
            });
        }
        Ok(Self { lattice, dither, params, sigma_q2, sigma_q2_cap })
    }
}

/// Transmitter: `m = [eta x + d] mod L`. The output lies in the Voronoi cell;
/// with a uniform dither it is marginally uniform there and independent of
/// `x`.
pub fn mlm_encode(x: &[f64], ctx: &MlmContext) -> Result<Vec<f64>> {
    if x.len() != ctx.lattice.dim() {
        return Err(Error::DimensionMismatch { expected: ctx.lattice.dim(), got: x.len() });
    }
    let mut v: Vec<f64> =
        x.iter().zip(&ctx.dither.sample).map(|(xi, di)| ctx.params.eta * xi + di).collect();
    ctx.lattice.reduce_in_place(&mut v)?;
    Ok(v)
}

/// Receiver: `y~ = [alpha_c y - eta j - d] mod L`, then
/// `x^ = (alpha_s / eta) y~ + j`.
///
/// The dither must match the encoder's (shared seed); a mismatch is
/// undetectable and silently corrupts the estimate. In the degenerate regime
/// the side information is returned unchanged.
pub fn mlm_decode(y: &[f64], si: &[f64], ctx: &MlmContext) -> Result<Vec<f64>> {
    let k = ctx.lattice.dim();
    if y.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: y.len() });
    }
    if si.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: si.len() });
    }
    if ctx.params.is_degenerate() || ctx.params.eta == 0.0 {
        return Ok(si.to_vec());
    }
    let p = &ctx.params;
    let mut v: Vec<f64> = (0..k)
        .map(|i| p.alpha_c * y[i] - p.eta * si[i] - ctx.dither.sample[i])
        .collect();
    ctx.lattice.reduce_in_place(&mut v)?;
    Ok((0..k).map(|i| p.alpha_s / p.eta * v[i] + si[i]).collect())
}

/// Optimal parameters when the SNR is known, for a lattice with channel
/// goodness `l_channel`:
///
/// * `alpha_c = snr / (1 + snr)`
/// * `alpha_bar = max(alpha_c - (l - 1)/l, 0)`
/// * `eta = sqrt(alpha_bar P / sigma_q^2)`
/// * `alpha_s = snr alpha_bar / (snr alpha_bar + alpha_c)`
///
/// Returns the parameters and the companion distortion value
/// `sigma_q^2 / (1 + alpha_bar (1 + snr))`, which reduces to
/// `sigma_q^2 / (1 + snr)` in the ideal-lattice limit `l = 1`.
pub fn params_known_snr(
    sigma_q2: f64,
    p: f64,
    snr: f64,
    l_channel: f64,
) -> Result<(MlmParams, f64)> {
    if !(sigma_q2 > 0.0) || !(p > 0.0) {
        return Err(Error::domain("sigma_q2 and p must be positive"));
    }
    if !(snr > 0.0) {
        return Err(Error::domain("snr must be positive"));
    }
    if !(l_channel >= 1.0) {
        return Err(Error::domain("l_channel must be at least 1"));
    }
    let alpha_c = snr / (1.0 + snr);
    let alpha_bar = (alpha_c - (l_channel - 1.0) / l_channel).max(0.0);
    if alpha_bar == 0.0 {
        // Degenerate: the decoder can only return the side information.
        return Ok((MlmParams::degenerate(p), sigma_q2));
    }
    let eta = (alpha_bar * p / sigma_q2).sqrt();
    let alpha_s = snr * alpha_bar / (snr * alpha_bar + alpha_c);
    let d_tilde = sigma_q2 / (1.0 + alpha_bar * (1.0 + snr));
    Ok((MlmParams { eta, alpha_c, alpha_s, alpha_bar, p }, d_tilde))
}

/// Ideal-lattice distortion of a layer designed for a minimum SNR `snr0` but
/// operated at a true `snr >= snr0`:
///
/// `sigma_q^2 / (1 + snr) / (1/(1 + snr) + snr0/(1 + snr0))`.
///
/// At `snr = snr0` this is the known-SNR optimum `sigma_q^2 / (1 + snr)`; as
/// `snr` grows the loss approaches the factor `(1 + snr0)/snr0`.
pub fn universal_snr_distortion(sigma_q2: f64, snr: f64, snr0: f64) -> Result<f64> {
    if !(sigma_q2 > 0.0) {
        return Err(Error::domain("sigma_q2 must be positive"));
    }
    if !(snr0 > 0.0) {
        return Err(Error::domain("snr0 must be positive"));
    }
    if snr < snr0 {
        return Err(Error::domain("snr must be at least the design snr0"));
    }
    let bracket = 1.0 / (1.0 + snr) + snr0 / (1.0 + snr0);
    Ok(sigma_q2 / (1.0 + snr) / bracket)
}

/// Result of [`unknown_power_distortion`].
#[derive(Debug, Clone, Copy)]
pub struct UnknownPowerBound {
    /// Ideal-lattice distortion
    /// `cap / (cap/sigma_q^2 + alpha_bar (1 + snr))` with
    /// `alpha_bar = snr0/(1 + snr0)`.
    pub d_tilde: f64,
    /// The final simplified bound
    /// `min(sigma_q^2/(1 + snr0), cap (1 + snr0)/((1 + snr) snr0))`.
    pub final_bound: f64,
    /// Parameter set the transmitter/receiver pair would use.
    pub params: MlmParams,
}

/// Distortion when the transmitter knows the unknown-part power only through
/// an upper bound `sigma_q2_cap` and designs for a minimum SNR `snr0`. The
/// scale `eta` is built from the cap; the receiver-side scales use the true
/// values. Ideal-lattice parameters (`l = 1`) are assumed for the design.
pub fn unknown_power_distortion(
    sigma_q2: f64,
    sigma_q2_cap: f64,
    snr: f64,
    snr0: f64,
    p: f64,
) -> Result<UnknownPowerBound> {
    if !(sigma_q2 > 0.0) || !(sigma_q2_cap > 0.0) {
        return Err(Error::domain("powers must be positive"));
    }
    if sigma_q2 > sigma_q2_cap * (1.0 + 1e-12) {
        return Err(Error::domain("sigma_q2 exceeds its declared upper bound"));
    }
    if !(snr0 > 0.0) || snr < snr0 {
        return Err(Error::domain("need snr >= snr0 > 0"));
    }
    let alpha_c = snr / (1.0 + snr);
    let alpha_bar = snr0 / (1.0 + snr0);
    let eta = (alpha_bar * p / sigma_q2_cap).sqrt();
    let ratio = sigma_q2_cap / sigma_q2;
    let alpha_s = alpha_bar * (1.0 + snr) / (ratio + alpha_bar * (1.0 + snr));
    let d_tilde = sigma_q2_cap / (ratio + alpha_bar * (1.0 + snr));
    let final_bound = (sigma_q2 / (1.0 + snr0))
        .min(sigma_q2_cap / (1.0 + snr) * (1.0 + snr0) / snr0);
    Ok(UnknownPowerBound {
        d_tilde,
        final_bound,
        params: MlmParams { eta, alpha_c, alpha_s, alpha_bar, p },
    })
}

/// Finite-lattice distortion bound for one layer:
///
/// `D <= l_channel * D~ + pe * D_err`, where
/// `D~ = (1-alpha_s)^2 sigma_q^2 + alpha_s^2 (alpha_c^2/snr +
/// (1-alpha_c)^2) P / eta^2` and `D_err <= 4 sigma_q^2 (1 +
/// l_quant/alpha_bar)` covers the modulo-aliasing event of probability `pe`.
///
/// Errors if the power-feasibility inequality fails (naming it) or if
/// `alpha_bar = 0`, in which case the error term is unbounded.
pub fn mlm_distortion_bound(
    ctx: &MlmContext,
    goodness: &LatticeGoodness,
    pe: f64,
    snr: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&pe) {
        return Err(Error::domain("pe must lie in [0,1)"));
    }
    if !(snr > 0.0) {
        return Err(Error::domain("snr must be positive"));
    }
    let p = &ctx.params;
    if p.alpha_bar == 0.0 {
        return Err(Error::infeasible(
            "alpha_bar = 0: the decoding-error distortion term is unbounded",
        ));
    }
    if !p.feasible(ctx.sigma_q2, snr) {
        return Err(Error::infeasible(format!(
            "power feasibility violated: eta^2 sigma_q^2/P + alpha_c^2/snr + (1-alpha_c)^2 = \
             {:.6} > 1",
            p.eta * p.eta * ctx.sigma_q2 / p.p
                + p.alpha_c * p.alpha_c / snr
                + (1.0 - p.alpha_c) * (1.0 - p.alpha_c)
        )));
    }
    let d_tilde = (1.0 - p.alpha_s) * (1.0 - p.alpha_s) * ctx.sigma_q2
        + p.alpha_s
            * p.alpha_s
            * (p.alpha_c * p.alpha_c / snr + (1.0 - p.alpha_c) * (1.0 - p.alpha_c))
            * p.p
            / (p.eta * p.eta);
    let d_err = 4.0 * ctx.sigma_q2 * (1.0 + goodness.l_quant / p.alpha_bar);
    Ok(goodness.l_channel * d_tilde + pe * d_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::sample_dither;
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    fn ctx_with(
        s: f64,
        eta: f64,
        alpha_c: f64,
        alpha_s: f64,
        dither_value: f64,
        sigma_q2: f64,
    ) -> MlmContext {
        let lattice = LatticeSpec::scaled_integer(s).unwrap();
        let dither = Dither { sample: vec![dither_value], seed: 0 };
        let p = lattice.second_moment();
        let params = MlmParams { eta, alpha_c, alpha_s, alpha_bar: alpha_c, p };
        MlmContext::new(lattice, dither, params, sigma_q2, sigma_q2).unwrap()
    }

    #[test]
    fn encode_examples() {
        // Inside the cell the modulo is the identity.
        let ctx = ctx_with(4.0, 1.0, 1.0, 1.0, 0.3, 1.0);
        let m = mlm_encode(&[1.2], &ctx).unwrap();
        assert!((m[0] - 1.5).abs() < 1e-15);

        // eta x + d = 1.2 wraps to 0.2 on the unit lattice.
        let ctx = ctx_with(1.0, 1.0, 1.0, 1.0, 0.4, 1.0);
        let m = mlm_encode(&[0.8], &ctx).unwrap();
        assert!((m[0] - 0.2).abs() < 1e-12);

        assert!(mlm_encode(&[0.1, 0.2], &ctx).is_err());
    }

    #[test]
    fn encode_power_statistical() {
        let s = 12.0f64.sqrt(); // unit second moment
        let lattice = LatticeSpec::scaled_integer(s).unwrap();
        let n = 100_000usize;
        let mut rng = stream_rng(7, 0);
        let mut sum2 = 0.0;
        for t in 0..n {
            let x: f64 = rng.sample(StandardNormal);
            let dither = sample_dither(&lattice, t as u64);
            let params =
                MlmParams { eta: 0.9, alpha_c: 0.8, alpha_s: 0.8, alpha_bar: 0.5, p: 1.0 };
            let ctx = MlmContext::new(lattice, dither, params, 1.0, 1.0).unwrap();
            let m = mlm_encode(&[x], &ctx).unwrap();
            sum2 += m[0] * m[0];
        }
        let p_hat = sum2 / n as f64;
        assert!((p_hat / 1.0 - 1.0).abs() < 0.01, "p_hat={p_hat}");
    }

    #[test]
    fn decode_examples() {
        // Zero noise, unit scales, no aliasing: exact recovery.
        let ctx = ctx_with(8.0, 1.0, 1.0, 1.0, 0.25, 1.0);
        let x = [1.1];
        let m = mlm_encode(&x, &ctx).unwrap();
        let xhat = mlm_decode(&m, &[0.0], &ctx).unwrap();
        assert!((xhat[0] - x[0]).abs() < 1e-12);

        // Hand trace: eta=1, s=4, q=0.5, z_eff=0.2 -> xhat = 0.7.
        let ctx = ctx_with(4.0, 1.0, 1.0, 1.0, 0.1, 1.0);
        let q = 0.5;
        let m = mlm_encode(&[q], &ctx).unwrap();
        let y = [m[0] + 0.2];
        let xhat = mlm_decode(&y, &[0.0], &ctx).unwrap();
        assert!((xhat[0] - 0.7).abs() < 1e-12);

        // Aliasing: eta q + z leaves the cell and the estimate lands a full
        // cell away.
        let ctx = ctx_with(2.0, 1.0, 1.0, 1.0, 0.0, 1.0);
        let q = 1.3; // s/(2 eta) = 1, so this wraps
        let m = mlm_encode(&[q], &ctx).unwrap();
        let xhat = mlm_decode(&m, &[0.0], &ctx).unwrap();
        let err = (xhat[0] - q).abs();
        assert!(err >= (1.0 - q).abs() - 1e-12); // >= s/(2 eta) - |q| direction
        assert!(err >= q - 1.0 - 1e-12); // >= |q| - s/(2 eta)
        assert!(err > 1.9); // actually a full wrap here
    }

    #[test]
    fn decode_degenerate_returns_side_info() {
        let lattice = LatticeSpec::scaled_integer(2.0).unwrap();
        let dither = sample_dither(&lattice, 1);
        let ctx =
            MlmContext::new(lattice, dither, MlmParams::degenerate(2.0 * 2.0 / 12.0), 1.0, 1.0)
                .unwrap();
        let si = [0.42];
        let xhat = mlm_decode(&[0.9], &si, &ctx).unwrap();
        assert_eq!(xhat, si.to_vec());
    }

    #[test]
    fn params_known_snr_examples() {
        let (p, d) = params_known_snr(1.0, 1.0, 3.0, 1.0).unwrap();
        assert!((p.alpha_c - 0.75).abs() < 1e-15);
        assert!((p.alpha_bar - 0.75).abs() < 1e-15);
        assert!((p.alpha_s - 0.75).abs() < 1e-15);
        assert!((p.eta - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((d - 0.25).abs() < 1e-15);

        // Large SNR: alpha_c -> 1 and the distortion vanishes.
        let (p, d) = params_known_snr(1.0, 1.0, 1e9, 1.0).unwrap();
        assert!(p.alpha_c > 1.0 - 1e-8);
        assert!(d < 1e-8);

        // Coarse lattice forces the degenerate regime.
        let (p, d) = params_known_snr(1.0, 1.0, 3.0, 4.0).unwrap();
        assert!(p.is_degenerate());
        assert_eq!(p.alpha_s, 0.0);
        assert_eq!(p.eta, 0.0);
        assert_eq!(d, 1.0);
    }

    #[test]
    fn universal_snr_examples() {
        // At snr = snr0 the bracket sums to 1.
        let d = universal_snr_distortion(1.0, 3.0, 3.0).unwrap();
        assert!((d - 0.25).abs() < 1e-15);

        // Large-snr asymptote: (1+snr0)/snr0 times the optimum.
        let snr = 1e8;
        let d = universal_snr_distortion(1.0, snr, 1.0).unwrap();
        assert!((d * (1.0 + snr) - 2.0).abs() < 1e-6);

        // Direct substitution: snr0=3, snr=9 -> 2/17.
        let d = universal_snr_distortion(1.0, 9.0, 3.0).unwrap();
        assert!((d - 2.0 / 17.0).abs() < 1e-15);

        assert!(universal_snr_distortion(1.0, 1.0, 3.0).is_err());
    }

    #[test]
    fn unknown_power_examples() {
        // Cap equal to the truth reduces to the universal value.
        let b = unknown_power_distortion(1.0, 1.0, 9.0, 3.0, 1.0).unwrap();
        let d3 = universal_snr_distortion(1.0, 9.0, 3.0).unwrap();
        assert!((b.d_tilde - d3).abs() < 1e-15);

        // sigma_q2=0.5, cap=1, snr0=3, snr=9: 1/(2 + 0.75*10) = 2/19.
        let b = unknown_power_distortion(0.5, 1.0, 9.0, 3.0, 1.0).unwrap();
        assert!((b.d_tilde - 2.0 / 19.0).abs() < 1e-15);

        // Large snr and snr0: the bound approaches cap/(1+snr).
        let b = unknown_power_distortion(0.5, 1.0, 1e7, 1e6, 1.0).unwrap();
        assert!((b.final_bound * (1.0 + 1e7) - 1.0).abs() < 1e-4);

        assert!(unknown_power_distortion(2.0, 1.0, 9.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn distortion_bound_ideal_lattice_matches_optimum() {
        // l = l~ = 1, pe -> 0, optimal parameters: bound = sigma_q^2/(1+snr).
        let snr = 3.0;
        let (params, _) = params_known_snr(1.0, 1.0, snr, 1.0).unwrap();
        let lattice = LatticeSpec::with_second_moment(1, 1.0).unwrap();
        let dither = sample_dither(&lattice, 0);
        let ctx = MlmContext::new(lattice, dither, params, 1.0, 1.0).unwrap();
        let goodness = LatticeGoodness { l_channel: 1.0, l_quant: 1.0, pe_target: 0.0 };
        let bound = mlm_distortion_bound(&ctx, &goodness, 0.0, snr).unwrap();
        assert!((bound - 1.0 / (1.0 + snr)).abs() < 1e-12);
    }

    #[test]
    fn distortion_bound_direct_substitution() {
        // Independent symbolic evaluation of the bound at a non-trivial point.
        let (sigma_q2, p, snr) = (1.0f64, 1.0f64, 3.0f64);
        let (l_channel, l_quant, alpha_bar, pe) = (1.2, 3.0, 0.55, 0.01);
        let alpha_c = 0.75;
        let alpha_s = snr * alpha_bar / (snr * alpha_bar + alpha_c);
        let eta = (alpha_bar * p / sigma_q2).sqrt();
        let params = MlmParams { eta, alpha_c, alpha_s, alpha_bar, p };
        let lattice = LatticeSpec::with_second_moment(1, p).unwrap();
        let dither = sample_dither(&lattice, 0);
        let ctx = MlmContext::new(lattice, dither, params, sigma_q2, sigma_q2).unwrap();
        let goodness = LatticeGoodness { l_channel, l_quant, pe_target: pe };
        let bound = mlm_distortion_bound(&ctx, &goodness, pe, snr).unwrap();

        // Oracle assembled term by term.
        let d_tilde = (1.0 - alpha_s).powi(2) * sigma_q2
            + alpha_s.powi(2) * (alpha_c.powi(2) / snr + (1.0 - alpha_c).powi(2)) * p
                / (eta * eta);
        let d_err = 4.0 * sigma_q2 * (1.0 + l_quant / alpha_bar);
        let oracle = l_channel * d_tilde + pe * d_err;
        assert!((bound - oracle).abs() < 1e-14);
        // Spot value for the record: alpha_s = 1.65/2.4, eta^2 = 0.55.
        assert!((alpha_s - 0.6875).abs() < 1e-12);
        assert!((bound - (1.2 * 0.3125 + 0.01 * d_err)).abs() < 1e-12);
    }

    #[test]
    fn distortion_bound_suboptimal_parameters() {
        // alpha_bar = alpha_c = alpha_s = 1, eta = sqrt(P/cap): the main term
        // is cap/SDR.
        let (cap, p, sdr) = (0.7f64, 1.0f64, 25.0f64);
        let eta = (p / cap).sqrt();
        let params = MlmParams { eta, alpha_c: 1.0, alpha_s: 1.0, alpha_bar: 1.0, p };
        let lattice = LatticeSpec::with_second_moment(1, p).unwrap();
        let dither = sample_dither(&lattice, 0);
        // True power strictly below the cap keeps the feasibility inequality
        // satisfied; the main bound term depends only on the cap.
        let ctx = MlmContext::new(lattice, dither, params, 0.6 * cap, cap).unwrap();
        let goodness = LatticeGoodness { l_channel: 1.0, l_quant: 1.0, pe_target: 0.0 };
        let bound = mlm_distortion_bound(&ctx, &goodness, 0.0, sdr).unwrap();
        assert!((bound - cap / sdr).abs() < 1e-12);
    }

    #[test]
    fn distortion_bound_rejects_infeasible_and_degenerate() {
        let lattice = LatticeSpec::with_second_moment(1, 1.0).unwrap();
        let dither = sample_dither(&lattice, 0);
        let goodness = LatticeGoodness { l_channel: 1.2, l_quant: 3.0, pe_target: 0.01 };

        // eta far too large: feasibility fails and the message names it.
        let params = MlmParams { eta: 5.0, alpha_c: 0.75, alpha_s: 0.5, alpha_bar: 0.5, p: 1.0 };
        let ctx = MlmContext::new(lattice, dither.clone(), params, 1.0, 1.0).unwrap();
        let err = mlm_distortion_bound(&ctx, &goodness, 0.01, 3.0).unwrap_err();
        assert!(err.to_string().contains("power feasibility"));

        // Degenerate alpha_bar: unbounded error distortion is reported.
        let ctx = MlmContext::new(lattice, dither, MlmParams::degenerate(1.0), 1.0, 1.0).unwrap();
        let err = mlm_distortion_bound(&ctx, &goodness, 0.01, 3.0).unwrap_err();
        assert!(err.to_string().contains("unbounded"));
    }

    #[test]
    fn universal_equals_known_snr_at_design_point() {
        for &(s2, snr) in &[(0.3, 0.7), (1.0, 3.0), (2.5, 40.0)] {
            let (_, d_known) = params_known_snr(s2, 1.0, snr, 1.0).unwrap();
            let d_universal = universal_snr_distortion(s2, snr, snr).unwrap();
            assert!(((d_known - d_universal) / d_known).abs() < 1e-12);
        }
    }

    #[test]
    fn decoder_linear_outside_aliasing() {
        // Conditioned on no wrap, xhat - x is exactly affine in (q, z_eff):
        // xhat - x = (alpha_s - 1) q + (alpha_s/eta) z_eff. Verified by
        // regression with R^2 > 1 - 1e-10.
        let s = 12.0f64.sqrt();
        let lattice = LatticeSpec::scaled_integer(s).unwrap();
        let (params, _) = params_known_snr(0.04, 1.0, 9.0, 1.0).unwrap();
        let n = 4000;
        let mut rows: Vec<(f64, f64, f64)> = Vec::new(); // (q, z_eff, err)
        for t in 0..n {
            let mut rng = stream_rng(31, t);
            let q: f64 = 0.2 * rng.sample::<f64, _>(StandardNormal);
            let z: f64 = 0.05 * rng.sample::<f64, _>(StandardNormal);
            let si = 1.0;
            let x = [si + q];
            let dither = sample_dither(&lattice, t);
            let ctx = MlmContext::new(lattice, dither, params, 0.04, 0.04).unwrap();
            let m = mlm_encode(&x, &ctx).unwrap();
            let y = [m[0] + z];
            // Effective noise of the reduced channel.
            let z_eff = -(1.0 - params.alpha_c) * m[0] + params.alpha_c * z;
            // Skip aliased trials: eta q + z_eff must stay inside the cell.
            if !lattice.cell_contains(&[params.eta * q + z_eff]) {
                continue;
            }
            let xhat = mlm_decode(&y, &[si], &ctx).unwrap();
            rows.push((q, z_eff, xhat[0] - x[0]));
        }
        assert!(rows.len() > 3000);
        // Residual against the closed-form affine map.
        let mut ss_res = 0.0;
        let mut ss_tot = 0.0;
        let mean_err = rows.iter().map(|r| r.2).sum::<f64>() / rows.len() as f64;
        for &(q, z_eff, err) in &rows {
            let predicted = (params.alpha_s - 1.0) * q + params.alpha_s / params.eta * z_eff;
            ss_res += (err - predicted) * (err - predicted);
            ss_tot += (err - mean_err) * (err - mean_err);
        }
        let r2 = 1.0 - ss_res / ss_tot;
        assert!(r2 > 1.0 - 1e-10, "r2={r2}");
    }

    proptest! {
        #[test]
        fn known_snr_params_always_feasible(
            sigma_q2 in 0.01f64..10.0,
            p in 0.01f64..10.0,
            snr in 0.01f64..1000.0,
            l in 1.0f64..3.0,
        ) {
            let (params, _) = params_known_snr(sigma_q2, p, snr, l).unwrap();
            if !params.is_degenerate() {
                prop_assert!(params.feasible(sigma_q2, snr));
            }
        }
    }
}
