//! Lattice points of Euclidean balls in `Z^d`: exact and floating spectra
//! indexed by squared norm, joint profiles by marked coordinates,
//! brute-force enumeration oracles and the counting bounds built on them.

mod ball;
mod bounds;
pub(crate) mod enumerate;
mod profile;
pub(crate) mod spectrum;

pub use ball::{BallSpec, Limits, MarkedClass, MarkedPart, Mode};
pub use bounds::{
    binomial_sanity, concentration_masses, lemma4_check, lemma4_from_count, shifted_ball_count, symdiff_count,
    unit_ball_volume, ConcentrationParams, ConcentrationReport, Lemma4Report,
};
pub use enumerate::{enumerate_ball, for_each_in_ball, for_each_in_box};
pub use profile::{profile_spectrum, ProfileSpectrum};
pub use spectrum::{ball_count, ball_count_table, ball_counts_upto, sphere_count, Coeffs, NormSpectrum};
