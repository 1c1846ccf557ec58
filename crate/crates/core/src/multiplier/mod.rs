//! Fourier multipliers of the discrete ball averages and their model
//! counterparts.
//!
//! `m_N(ξ)` is computed as a truncated product of cosine-weighted one
//! dimensional spectra followed by a partial coefficient sum.

mod continuous;
mod discrete;
mod torus;

pub use continuous::{continuous_ball_multiplier, wallis};
pub use discrete::{
    alternating_mass, alternating_mass_identity_check, lambda_approximants, lambda_with_mass, m_bruteforce, m_lower,
    m_lower_all, m_n, semigroup_multiplier, signed_mass, within_unit, ExactMass, LambdaApproximant, LowerMultiplierDp,
    MultiplierDp,
};
pub use torus::{fold_frequency, FoldedFrequency, RationalFreq, TorusPoint};
