//! Brute-force cross-check: the scenario's crystal kernel against the
//! direct volume integral, with tolerances matching the library test suite.

use crate::scenario::Scenario;
use anyhow::Result;
use awp_core::field::ScalarField;
use awp_core::oracle::{direct_integral, VolumeQuadrature};
use awp_core::spdc::{position_kernel, CrystalSpec, PmType};
use num_complex::Complex64;

/// Largest grid accepted by the comparison; the oracle cost grows with the
/// fourth power of the side.
pub const MAX_GRID: usize = 64;
pub const Z_NODES: usize = 128;

/// Least-squares complex scale aligning `a` onto `b`, then relative L2.
fn aligned_rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: Complex64 = b.iter().zip(a).map(|(x, y)| x.conj() * y).sum();
    let den: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    let s = num / den;
    let err: f64 = a.iter().zip(b).map(|(y, x)| (y - s * x).norm_sqr()).sum();
    (err / (s.norm_sqr() * den)).sqrt()
}

fn kernel_l2_check(s: &Scenario, c: &CrystalSpec) -> Result<(f64, f64)> {
    let g = s.grid2d()?;
    let n = g.nx;
    let fwhm = match c.pm_type {
        PmType::TypeICollinearDegenerate => {
            0.770 * (c.length * c.lambda_s / c.n_o).sqrt()
        }
        _ => 0.544 * (c.length * c.lambda_plus()).sqrt(),
    };
    let quad = VolumeQuadrature::new(g, Z_NODES)?;
    let rho1: Vec<(f64, f64)> = (0..n * n)
        .map(|i| (g.x(i % n), g.y(i / n)))
        .filter(|&(x, y)| (x * x + y * y).sqrt() <= 3.0 * fwhm)
        .collect();
    let psi = direct_integral(c, &quad, &rho1, &[(0.0, 0.0)])?;
    let pump = ScalarField::from_fn(g, c.lambda_p, |_, _| Complex64::ONE);
    let kern = position_kernel(c, pump)?;
    let expect: Vec<Complex64> =
        rho1.iter().map(|&(x, y)| kern.corr_value(x, y)).collect();
    let got: Vec<Complex64> = (0..rho1.len()).map(|i| psi[[i, 0]]).collect();
    Ok((aligned_rel_l2(&got, &expect), 0.02))
}

fn beamlike_tilt_check(s: &Scenario, c: &CrystalSpec) -> Result<(f64, f64)> {
    let g = s.grid2d()?;
    let quad = VolumeQuadrature::new(g, 512)?;
    let k = c.k_s();
    let theta_b = c.beamlike_tilt();
    let d = 0.05 / (theta_b * k);
    let pts = [(0.0, 0.0), (d, 0.0), (2.0 * d, 0.0)];
    let psi = direct_integral(c, &quad, &pts, &[(0.0, 0.0)])?;
    let mut worst = 0.0f64;
    for (hi, lo) in [(1, 0), (2, 1)] {
        let slope = (psi[[hi, 0]] / psi[[lo, 0]]).arg() / d;
        worst = worst.max(((slope + theta_b * k) / (theta_b * k)).abs());
    }
    Ok((worst, 0.01))
}

/// Run the comparison appropriate to the scenario's phase matching and
/// print a report. Returns whether every check passed.
pub fn oracle_compare(s: &Scenario) -> Result<bool> {
    let c = s.crystal_spec()?;
    let (label, rel, tol) = match c.pm_type {
        PmType::Thin => {
            println!(
                "thin crystal: the kernel is a delta; the volume integral \
                 collapses to the pump mask — trivially passing"
            );
            return Ok(true);
        }
        PmType::TypeIIBeamlike => {
            let (rel, tol) = beamlike_tilt_check(s, &c)?;
            ("beamlike tilt slope, worst relative error", rel, tol)
        }
        _ => {
            let (rel, tol) = kernel_l2_check(s, &c)?;
            ("kernel-vs-oracle aligned relative L2", rel, tol)
        }
    };
    let pass = rel <= tol;
    println!(
        "{label} = {rel:.3e} (tolerance {tol}): {}",
        if pass { "pass" } else { "FAIL" }
    );
    Ok(pass)
}
