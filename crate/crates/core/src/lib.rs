//! Exact lattice-point counting in Euclidean balls of `Z^d`, the Fourier
//! multipliers of the discrete ball averages, Krawtchouk polynomial tables, and
//! sweep engines that check the quantitative estimates around the dyadic
//! Hardy–Littlewood maximal function.
//!
//! The crate is organised in layers:
//!
//! * [`lattice`] counts lattice points through truncated convolutions of norm
//!   spectra (exact big-integer or scaled floating arithmetic).
//! * [`multiplier`] evaluates `m_N(ξ)`, its lower dimensional and continuous
//!   counterparts, the heat semigroup symbol and the small-scale approximants.
//! * [`krawtchouk`] builds exact Krawtchouk tables and calibrates the uniform
//!   decay constant.
//! * [`verifier`] sweeps parameter grids and produces reproducible reports.
//! * [`maxop`] applies the operators to concrete functions on `(Z/MZ)^d`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod canonical;
pub mod error;
pub mod krawtchouk;
pub mod lattice;
pub mod maxop;
pub mod multiplier;
pub mod numeric;
pub mod verifier;

pub use error::{Error, Result};
pub use krawtchouk::{KrawtchoukTable, UniformBoundCalibration};
pub use lattice::{BallSpec, Limits, MarkedClass, Mode, NormSpectrum, ProfileSpectrum};
pub use maxop::{EllipsoidSpec, GridFunction};
pub use multiplier::{FoldedFrequency, TorusPoint};
pub use verifier::{SweepGrid, VerificationReport};
