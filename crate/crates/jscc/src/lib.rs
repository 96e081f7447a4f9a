//! Universal joint source–channel coding under a per-sample energy
//! constraint.
//!
//! This crate simulates and numerically verifies analog transmission schemes
//! for an infinite-bandwidth Gaussian channel whose noise level is unknown at
//! the transmitter: the goal is a distortion that tracks a polynomial profile
//! `D(N) <= sigma^2 / (1 + (e_dsgn/N)^L)` at every noise level `N`
//! simultaneously, with as little transmit energy as possible.
//!
//! The pieces:
//!
//! * [`model`] — source families, the distortion profile, and closed-form
//!   baselines (channel capacity in nats equals the energy-to-noise ratio;
//!   the separation optimum decays like `exp(-2 enr)`; a single linear layer
//!   achieves `sigma^2/(1 + 2 enr)`).
//! * [`lattice`] — scaled cubic lattices with modulo reduction, dithers, and
//!   Monte Carlo estimation of the channel/quantization goodness parameters.
//! * [`mlm`] — the modulo-lattice layer codec with side information, its
//!   optimal and universal parameter choices, and the finite-lattice
//!   distortion bound.
//! * [`ppm`] — analog pulse-position modulation: exact correlation-process
//!   simulation, MAP delay decoding, and the closed-form distortion bounds
//!   (including the optimized pulse-width envelope).
//! * [`layered`] — multi-layer plans combining a linear base layer, linear
//!   modulo-lattice refinements, and an optional PPM last layer; analytic
//!   chained guarantees, end-to-end Monte Carlo, interleaving, and
//!   Walsh–Hadamard mixing diagnostics.
//! * [`optimize`] — the minimum-energy objective for all-linear ladders
//!   (minimum `~2.1676 e_dsgn` for a quadratic profile), the PPM-terminated
//!   reference allocation (`1.9620 e_dsgn`), ladder construction, profile
//!   verification, and allocation search.
//!
//! ```
//! use jscc::model::{capacity, linear_layer_distortion, separation_distortion, SourceModel};
//!
//! let source = SourceModel::std_gaussian();
//! assert_eq!(capacity(2.5).unwrap(), 2.5); // nats, equals the ENR
//! let sep = separation_distortion(&source, 2.5).unwrap();
//! let lin = linear_layer_distortion(1.0, 2.5).unwrap();
//! assert!(sep < lin); // a single linear layer is far from the optimum
//! ```
//!
//! All randomness flows through seeded, counter-derived streams
//! ([`rng::stream_rng`]), so every simulation is reproducible bit for bit.

// Domain guards use `!(x > 0.0)` on purpose: unlike `x <= 0.0` it also
// rejects NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod lattice;
pub mod layered;
pub mod mlm;
pub mod model;
pub mod optimize;
pub mod ppm;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

// The book chapters double as documentation tests: every fenced Rust block
// below compiles and runs under `cargo test --doc`.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }
    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(bounds, "../../../book/src/bounds.md");
    chapter!(lattices, "../../../book/src/lattices.md");
    chapter!(mlm_layers, "../../../book/src/mlm.md");
    chapter!(ppm_chapter, "../../../book/src/ppm.md");
    chapter!(layered_chapter, "../../../book/src/layered.md");
    chapter!(optimization, "../../../book/src/optimization.md");
}
