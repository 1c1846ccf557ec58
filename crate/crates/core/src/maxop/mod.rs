//! Operators on functions over `(Z/MZ)^d` for small `d`: ball averages,
//! their dyadic maximal function, the heat semigroup, the square function,
//! and operator-norm probes.

mod grid;
mod ops;
mod probe;

pub use grid::{sidecar_path, GridFunction, Sidecar, MAGIC, MAX_DIM};
pub use ops::{
    apply_avg, apply_avg_direct, apply_avgs, apply_avgs_with, dft, dyadic_maximal, fft_nd, parse_dyadic_set,
    semigroup_apply, semigroup_symbol, spectral_norm, square_function_apply, square_function_norm_spectral,
    square_function_radii, wraps, AvgSymbols, Semantics,
};
pub use probe::{
    apply_ellipsoid, ellipsoid_norm_probe, ellipsoid_probe, operator_norm_probe, probe_regression,
    square_function_probe, EllipsoidReport, EllipsoidSpec, ProbeReport, Witness, ELLIPSOID_MAX_DIM, REGRESSION_DIMS,
    REGRESSION_PERIOD, REGRESSION_SEED, REGRESSION_SET, REGRESSION_TRIALS,
};
