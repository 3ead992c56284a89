//! Brute-force evaluation of the biphoton wave function by direct
//! crystal-volume integration. Ground truth for the closed-form kernels and
//! the engine; built for correctness on modest grids, not for scale.
//!
//! The longitudinal integral is a Cauchy principal value of a 1/z-weighted
//! chirp. It is computed by pairing symmetric nodes ±z, whose even (cosine)
//! parts cancel exactly, and integrating the surviving odd part in the phase
//! variable t = a/z, where the integrand oscillates uniformly: fixed-width
//! panels plus an asymptotic tail. No library sine-integral is used, so the
//! result is independent of the kernels it validates.

use crate::field::{convolve_periodic, FieldError, Grid2D, ScalarField};
use crate::spdc::{CrystalSpec, PmType};
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("reduced z-integral requires a > 0 (got {0})")]
    NonpositiveA(f64),
    #[error("z node count must be even and ≥ 2 (principal-value pairing), got {0}")]
    OddNodeCount(usize),
    #[error("transverse window clips the chirp: |z| node {z:.3e} m needs ≥ {required:.3e} m at this grid")]
    ChirpUnresolved { z: f64, required: f64 },
    #[error("oracle does not support pm_type {0}")]
    Unsupported(&'static str),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Transverse grid at the crystal plus the longitudinal node budget.
#[derive(Debug, Clone, Copy)]
pub struct VolumeQuadrature {
    pub grid: Grid2D,
    pub z_nodes: usize,
}

impl VolumeQuadrature {
    pub fn new(grid: Grid2D, z_nodes: usize) -> Result<Self, OracleError> {
        if z_nodes < 2 || z_nodes % 2 != 0 {
            return Err(OracleError::OddNodeCount(z_nodes));
        }
        Ok(Self { grid, z_nodes })
    }

    /// Gauss–Legendre nodes and weights on [−L/2, L/2]. An even count keeps
    /// the nodes symmetric about 0 and never places one at z = 0.
    pub fn z_points(&self, l: f64) -> Vec<(f64, f64)> {
        gauss_legendre(self.z_nodes)
            .into_iter()
            .map(|(x, w)| (x * l / 2.0, w * l / 2.0))
            .collect()
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration on the
/// Legendre polynomial.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// ∫_x^∞ e^{it}/t dt for x ≳ 30 by the divergent asymptotic series
/// i·e^{ix}·Σ m!·(−i)^m/x^{m+1}, truncated where it is ~1e-9 accurate.
fn exp_integral_tail(x: f64) -> Complex64 {
    let mut sum = Complex64::ZERO;
    let mut term = Complex64::new(1.0 / x, 0.0);
    let minus_i_over_x = Complex64::new(0.0, -1.0 / x);
    for m in 0..8 {
        sum += term;
        term *= minus_i_over_x * (m as f64 + 1.0);
    }
    Complex64::new(0.0, 1.0) * Complex64::cis(x) * sum
}

/// Principal value of the paired oscillatory integral
/// PV ∫_{−L/2}^{L/2} A(|z|)·e^{i(−a/z + g(z))}/z dz, with g odd and A even,
/// rewritten over t = a/z ∈ [x0, ∞), x0 = 2a/L:
/// 2i·∫_{x0}^∞ sin(g(a/t) − t)·A(a/t)/t dt.
/// The ±z pair is evaluated as a complex difference built from one
/// sine/cosine evaluation, so the cosine (real) parts cancel exactly.
fn pv_pair_integral(
    x0: f64,
    node_budget: usize,
    g: impl Fn(f64) -> f64,
    amp: impl Fn(f64) -> f64,
) -> Complex64 {
    const N_PANELS: usize = 13; // π-wide panels; tail starts ≥ 40 beyond x0
    let per_panel = (node_budget / N_PANELS).max(6) & !1; // even Simpson count
    let mut acc = 0.0;
    for p in 0..N_PANELS {
        let a0 = x0 + PI * p as f64;
        let h = PI / per_panel as f64;
        let mut s = 0.0;
        for j in 0..=per_panel {
            let w = if j == 0 || j == per_panel {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let t = a0 + h * j as f64;
            let f = if t == 0.0 {
                // limit of sin(g−t)/t at t→0 (reached only when a = 0, g = 0)
                -1.0
            } else {
                (g(t) - t).sin() * amp(t) / t
            };
            s += w * f;
        }
        acc += s * h / 3.0;
    }
    let x_tail = x0 + PI * N_PANELS as f64;
    // ∫_X^∞ sin(g−t)·A/t dt with g, A frozen at the tail start
    let tail =
        amp(x_tail) * (Complex64::cis(g(x_tail)) * exp_integral_tail(x_tail).conj()).im;
    Complex64::new(0.0, 2.0 * (acc + tail))
}

/// PV ∫_{−L/2}^{L/2} e^{−ia/z}/z dz, equal to 2i·Ssi(2a/L). The real part is
/// exactly zero by symmetric-pair cancellation.
pub fn reduced_z_integral(a: f64, l: f64) -> Result<Complex64, OracleError> {
    if a <= 0.0 {
        return Err(OracleError::NonpositiveA(a));
    }
    Ok(pv_pair_integral(2.0 * a / l, 4096, |_| 0.0, |_| 1.0))
}

/// Per-pair parameters of the analytic-transverse oracle path.
struct PairTerms {
    a: f64,           // chirp strength: phase −a/z
    tilt_phase: f64,  // constant phase (beamlike walk-off tilt)
    b: f64,           // residual linear-z phase coefficient
}

fn pair_terms(c: &CrystalSpec, rho1: (f64, f64), rho2: (f64, f64)) -> Result<PairTerms, OracleError> {
    let (dx, dy) = (rho1.0 - rho2.0, rho1.1 - rho2.1);
    let d2 = dx * dx + dy * dy;
    match c.pm_type {
        PmType::TypeICollinearDegenerate | PmType::TypeICollinearNondegenerate => {
            let (ks, ki) = (c.k_s(), c.k_i());
            Ok(PairTerms {
                a: c.n_o * ks * ki * d2 / (2.0 * (ks + ki)),
                tilt_phase: 0.0,
                b: c.walkoff().eta * c.k_p() - c.n_o * (ks + ki),
            })
        }
        PmType::TypeIIBeamlike => {
            let k = c.k_s();
            let eta = c.beamlike_eta();
            let alpha = c.walkoff().alpha;
            let common = c.n_o * eta * k / (c.n_o + eta);
            Ok(PairTerms {
                a: common * d2 / 2.0,
                tilt_phase: -common * alpha * dx,
                // (η−n_o)k from the longitudinal phases minus the α²z walk-off
                // term; zero by the defining equation of η up to rounding.
                b: (eta - c.n_o) * k - common * alpha * alpha / 2.0,
            })
        }
        PmType::Thin => Err(OracleError::Unsupported("Thin")),
    }
}

/// Direct volume integral with the transverse plane integrated analytically
/// (plane-wave pump): ψ(ρ₁,ρ₂) for all pairs from the two point sets.
/// Constant prefactors are dropped; compare after complex scale alignment.
pub fn direct_integral(
    c: &CrystalSpec,
    quad: &VolumeQuadrature,
    rho1: &[(f64, f64)],
    rho2: &[(f64, f64)],
) -> Result<Array2<Complex64>, OracleError> {
    if quad.z_nodes < 2 || quad.z_nodes % 2 != 0 {
        return Err(OracleError::OddNodeCount(quad.z_nodes));
    }
    let l = c.length;
    let chi2 = c.chi2_profile.clone();
    let mut out = Array2::zeros((rho1.len(), rho2.len()));
    let terms: Result<Vec<_>, _> = rho1
        .iter()
        .flat_map(|r1| rho2.iter().map(move |r2| (*r1, *r2)))
        .map(|(r1, r2)| pair_terms(c, r1, r2))
        .collect();
    let terms = terms?;
    let values: Vec<Complex64> = terms
        .par_iter()
        .map(|t| {
            let a = t.a;
            let amp = |tt: f64| -> f64 {
                match &chi2 {
                    // χ² is assumed even in z (true for QPM profiles); it is
                    // sampled on the positive half at z = a/t.
                    Some(p) => p.eval(if tt > 0.0 { a / tt } else { 0.0 }),
                    None => 1.0,
                }
            };
            let v = pv_pair_integral(2.0 * a / l, quad.z_nodes, |tt| t.b * a / tt.max(1e-300), amp);
            v * Complex64::cis(t.tilt_phase)
        })
        .collect();
    for (i, v) in values.into_iter().enumerate() {
        out[[i / rho2.len(), i % rho2.len()]] = v;
    }
    Ok(out)
}

/// Direct volume integral with the transverse plane integrated numerically:
/// Gauss–Legendre z nodes, real-space Fresnel Green's functions sampled on
/// the grid, FFT convolution per node. Supports arbitrary pump profiles;
/// collinear type-I only. ρ₂ is a grid pixel; the result is ψ(ρ₁, ρ₂) over
/// the whole ρ₁ grid.
pub fn direct_integral_numeric(
    c: &CrystalSpec,
    quad: &VolumeQuadrature,
    pump: &ScalarField,
    rho2_px: (usize, usize),
) -> Result<ScalarField, OracleError> {
    if !matches!(
        c.pm_type,
        PmType::TypeICollinearDegenerate | PmType::TypeICollinearNondegenerate
    ) {
        return Err(OracleError::Unsupported(
            "numeric transverse path handles collinear type-I only",
        ));
    }
    let g = quad.grid;
    if pump.grid != g {
        return Err(OracleError::Field(FieldError::GridMismatch(
            "pump grid differs from quadrature grid",
        )));
    }
    let (ks, ki) = (c.k_s(), c.k_i());
    let eta_p = c.walkoff().eta;
    // chirp resolvability at the smallest |z| node: the Green's function
    // phase must step < π per pixel out to the window corner
    let half_x = (g.nx / 2) as f64 * g.dx;
    let half_y = (g.ny / 2) as f64 * g.dy;
    let r_max = (half_x * half_x + half_y * half_y).sqrt();
    let k_big = c.n_o * ks.max(ki);
    let z_pts = quad.z_points(c.length);
    for &(z, _) in &z_pts {
        let required = k_big * r_max * g.dx.max(g.dy) / PI;
        if z.abs() < required {
            return Err(OracleError::ChirpUnresolved { z, required });
        }
    }

    let green = |k_med: f64, z: f64| -> Array2<Complex64> {
        // G_z(ρ) = (−i·k_med/(2πz))·e^{i k_med z}·e^{i k_med |ρ|²/(2z)}
        let pref = Complex64::new(0.0, -k_med / (2.0 * PI * z)) * Complex64::cis(k_med * z);
        Array2::from_shape_fn((g.ny, g.nx), |(iy, ix)| {
            let r2 = g.x(ix).powi(2) + g.y(iy).powi(2);
            pref * Complex64::cis(k_med * r2 / (2.0 * z))
        })
    };

    let (px, py) = rho2_px;
    let partial: Vec<Array2<Complex64>> = z_pts
        .par_iter()
        .map(|&(z, w)| {
            let chi = c
                .chi2_profile
                .as_ref()
                .map(|p| p.eval(z))
                .unwrap_or(1.0);
            // advanced wave of photon 2 from ρ₂ back to depth z (idler)
            let src = Array2::from_shape_fn((g.ny, g.nx), |(iy, ix)| {
                let di = (g.x(px) - g.x(ix), g.y(py) - g.y(iy));
                let r2 = di.0 * di.0 + di.1 * di.1;
                let pref = Complex64::new(0.0, -c.n_o * ki / (2.0 * PI * (-z)))
                    * Complex64::cis(c.n_o * ki * (-z));
                pref * Complex64::cis(c.n_o * ki * r2 / (2.0 * (-z)))
            });
            let b = Array2::from_shape_fn((g.ny, g.nx), |(iy, ix)| {
                src[[iy, ix]] * pump.amp[[iy, ix]] * chi
            });
            // signal Green's function back to the detection plane (ρ₁)
            let gs = green(c.n_o * ks, -z);
            let conv = convolve_periodic(&gs, &b, g.pixel_area());
            let phase = Complex64::cis(eta_p * c.k_p() * z);
            let mut term = conv;
            term.mapv_inplace(|v| v * phase * w);
            term
        })
        .collect();
    let mut acc: Array2<Complex64> = Array2::zeros((g.ny, g.nx));
    for t in partial {
        acc += &t;
    }
    Ok(ScalarField { grid: g, amp: acc, lambda_vac: c.lambda_s })
}

/// Envelope of a longitudinal phase mismatch e^{iΔk·z} averaged over the
/// crystal: |∫e^{iΔk z}dz|/L, evaluated by Gauss–Legendre quadrature.
pub fn mismatch_envelope(dk: f64, l: f64) -> f64 {
    let n = ((dk.abs() * l / PI) as usize + 16).next_multiple_of(2).max(64);
    let s: Complex64 = gauss_legendre(n.min(2048))
        .into_iter()
        .map(|(x, w)| Complex64::cis(dk * x * l / 2.0) * w)
        .sum();
    (s / 2.0).norm()
}

/// Ratio of backward- to forward-propagating conditional amplitude for a
/// degenerate collinear crystal. A backward signal flips its longitudinal
/// phase, leaving a mismatch of 2n_o·k across the crystal.
pub fn backward_suppression(c: &CrystalSpec) -> f64 {
    mismatch_envelope(2.0 * c.n_o * c.k_s(), c.length)
}
