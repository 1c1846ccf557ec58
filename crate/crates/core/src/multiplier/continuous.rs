use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const TOLERANCE: f64 = 1e-10;
const MAX_DEPTH: u32 = 48;
const MAX_PANELS: usize = 1 << 20;

fn gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
    let (value, err) = gauss_kronrod(f, a, b);
    if err <= tol.max(64.0 * f64::EPSILON * value.abs()) {
        return Ok(value);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!(
            "no convergence on [{a}, {b}], error estimate {err:e}"
        )));
    }
    let m = 0.5 * (a + b);
    Ok(adaptive(f, a, m, 0.5 * tol, depth - 1)? + adaptive(f, m, b, 0.5 * tol, depth - 1)?)
}

/// `∫_0^{π/2} cos^d θ dθ`.
pub fn wallis(d: u32) -> f64 {
    let mut w = if d % 2 == 0 { FRAC_PI_2 } else { 1.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        w *= (k - 1) as f64 / k as f64;
        k += 2;
    }
    w
}

/// Fourier transform of the normalised indicator of the radius `R` ball in
/// `R^d`, at any frequency of length `rho`.
///
/// Uses the slice form `∫_{-1}^{1} (1-t²)^{(d-1)/2} cos(2πRρt) dt` over its
/// value at `ρ = 0`, substituted `t = sin θ`, with panels broken at the
/// half periods of the cosine.
pub fn continuous_ball_multiplier(d: u32, radius: f64, rho: f64) -> Result<f64> {
    if d == 0 || !(radius > 0.0) || !radius.is_finite() || !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "continuous multiplier needs d >= 1, R > 0, rho >= 0; got d={d}, R={radius}, rho={rho}"
        )));
    }
    let a = 2.0 * PI * radius * rho;
    if a == 0.0 {
        return Ok(1.0);
    }
    let w = wallis(d);
    let f = move |theta: f64| theta.cos().powi(d as i32) * (a * theta.sin()).cos() / w;
    let cut = (1e-14 * w).powf(1.0 / d as f64);
    let theta_max = if cut > 0.0 && cut < 1.0 { cut.acos() } else { FRAC_PI_2 };
    let s_max = theta_max.sin();
    let panels = (a * s_max / PI).floor();
    if panels > MAX_PANELS as f64 {
        return Err(Error::Quadrature(format!("{panels} panels needed for 2πRρ = {a}")));
    }
    let mut breaks = vec![0.0];
    for k in 1..=panels as usize {
        let s = k as f64 * PI / a;
        if s < s_max {
            breaks.push(s.asin());
        }
    }
    breaks.push(theta_max);
    let mut total = 0.0;
    for pair in breaks.windows(2) {
        let tol = TOLERANCE * (pair[1] - pair[0]) / theta_max;
        total += adaptive(&f, pair[0], pair[1], tol, MAX_DEPTH)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wallis_values() {
        assert!((wallis(0) - FRAC_PI_2).abs() < 1e-16);
        assert_eq!(wallis(1), 1.0);
        assert!((wallis(2) - PI / 4.0).abs() < 1e-16);
        assert!((wallis(3) - 2.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn zero_frequency_is_one() {
        assert_eq!(continuous_ball_multiplier(7, 3.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn one_dimensional_sinc() {
        for i in 0..20 {
            let rho = 0.037 + 0.29 * i as f64;
            let r = 1.7;
            let a = 2.0 * PI * r * rho;
            let got = continuous_ball_multiplier(1, r, rho).unwrap();
            assert!((got - a.sin() / a).abs() < 1e-10, "rho={rho}");
        }
    }

    #[test]
    fn three_dimensional_closed_form() {
        for i in 0..20 {
            let rho = 0.05 + 0.41 * i as f64;
            let s = 2.0 * PI * rho;
            let want = 3.0 * (s.sin() - s * s.cos()) / s.powi(3);
            let got = continuous_ball_multiplier(3, 1.0, rho).unwrap();
            assert!((got - want).abs() < 1e-10, "rho={rho}");
        }
    }

    #[test]
    fn high_dimension_is_gaussian_like() {
        // For large d the slice density tends to a Gaussian of variance 1/(d+2) per unit radius.
        let d = 4000;
        let rho = 3.0;
        let r = (d as f64).sqrt() / 10.0;
        let a = 2.0 * PI * r * rho;
        let got = continuous_ball_multiplier(d, r, rho).unwrap();
        let approx = (-a * a / (2.0 * (d as f64 + 2.0))).exp();
        assert!((got - approx).abs() < 1e-2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(continuous_ball_multiplier(0, 1.0, 1.0).is_err());
        assert!(continuous_ball_multiplier(2, -1.0, 1.0).is_err());
        assert!(continuous_ball_multiplier(2, 1.0, f64::NAN).is_err());
    }
}
