//! Scalar special functions and 1-D profile measurements.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("profile not localized: no half-maximum crossing on {side} side")]
    NotLocalized { side: &'static str },
    #[error("profile invalid: {0}")]
    Invalid(&'static str),
}

/// Unnormalized sinc: sin(x)/x with sinc(0) = 1.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        // sin(x)/x = 1 - x²/6 + x⁴/120; next term ~1e-26 at the cutoff.
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Sine integral Si(x) = ∫₀ˣ sin(t)/t dt.
///
/// Power series for |x| ≤ 16, continued-fraction evaluation of E1(ix)
/// beyond; absolute accuracy better than 1e-12 on both branches.
pub fn si(x: f64) -> f64 {
    if x < 0.0 {
        return -si(-x);
    }
    if x <= 16.0 {
        si_series(x)
    } else {
        // E1(ix) = -Ci(x) + i(Si(x) - π/2), so Si(x) = π/2 + Im E1(ix).
        FRAC_PI_2 + e1_imag_axis(x).im
    }
}

/// Shifted sine integral Ssi(x) = Si(x) − π/2.
pub fn ssi(x: f64) -> f64 {
    si(x) - FRAC_PI_2
}

/// Si by its Maclaurin series: Σ (−1)ⁿ x^(2n+1) / ((2n+1)·(2n+1)!).
fn si_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x; // x^(2n+1)/(2n+1)! at n=0
    let mut sum = term;
    let mut n = 0u32;
    loop {
        n += 1;
        let k = 2.0 * n as f64;
        term *= -x2 / (k * (k + 1.0));
        let contrib = term / (k + 1.0);
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs().max(1.0) || n > 200 {
            return sum;
        }
    }
}

/// E1(ix) for x > 0 via the standard continued fraction
/// E1(z) = e^{−z} / (z + 1 − 1/(z + 3 − 4/(z + 5 − 9/(…)))),
/// evaluated with the modified Lentz algorithm.
fn e1_imag_axis(x: f64) -> Complex64 {
    let z = Complex64::new(0.0, x);
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = b.finv();
    let mut h = d;
    for m in 1..200 {
        let a = -(m as f64) * (m as f64);
        b += 2.0;
        d = b + a * d;
        if d.norm_sqr() < tiny * tiny {
            d = Complex64::new(tiny, 0.0);
        }
        c = b + a / c;
        if c.norm_sqr() < tiny * tiny {
            c = Complex64::new(tiny, 0.0);
        }
        d = d.finv();
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    (-z).exp() * h
}

/// A sampled nonnegative 1-D profile on a strictly increasing axis.
#[derive(Debug, Clone)]
pub struct Profile1D {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Profile1D {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, ProfileError> {
        if x.len() != y.len() {
            return Err(ProfileError::Invalid("x and y lengths differ"));
        }
        if x.len() < 3 {
            return Err(ProfileError::Invalid("need at least 3 samples"));
        }
        if !x.windows(2).all(|w| w[1] > w[0]) {
            return Err(ProfileError::Invalid("x must be strictly increasing"));
        }
        if y.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ProfileError::Invalid("y must be finite and nonnegative"));
        }
        Ok(Self { x, y })
    }
}

/// Full width at half maximum of a single-peaked profile, with linear
/// interpolation between the samples that bracket each half-max crossing.
pub fn fwhm(p: &Profile1D) -> Result<f64, ProfileError> {
    let (imax, &ymax) = p
        .y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let half = ymax / 2.0;

    let cross = |i0: usize, i1: usize| -> f64 {
        // Linear interpolation of the half-max crossing in [x[i0], x[i1]].
        let (x0, x1, y0, y1) = (p.x[i0], p.x[i1], p.y[i0], p.y[i1]);
        x0 + (half - y0) / (y1 - y0) * (x1 - x0)
    };

    let left = (0..imax)
        .rev()
        .find(|&i| p.y[i] <= half)
        .map(|i| cross(i, i + 1))
        .ok_or(ProfileError::NotLocalized { side: "left" })?;
    let right = (imax + 1..p.y.len())
        .find(|&i| p.y[i] <= half)
        .map(|i| cross(i - 1, i))
        .ok_or(ProfileError::NotLocalized { side: "right" })?;
    Ok(right - left)
}

/// FWHM of a profile known only for x ≥ 0 and symmetric about the origin
/// (radial section of an isotropic 2-D pattern peaked at the center).
pub fn fwhm_radial(p: &Profile1D) -> Result<f64, ProfileError> {
    let ymax = p.y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let half = ymax / 2.0;
    let right = (0..p.y.len())
        .find(|&i| p.y[i] <= half && i > 0)
        .map(|i| {
            let (x0, x1, y0, y1) = (p.x[i - 1], p.x[i], p.y[i - 1], p.y[i]);
            x0 + (half - y0) / (y1 - y0) * (x1 - x0)
        })
        .ok_or(ProfileError::NotLocalized { side: "right" })?;
    Ok(2.0 * right)
}
