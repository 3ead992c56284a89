use awp_core::field::{fft2, Grid2D, ScalarField};
use awp_core::spdc::{momentum_transfer_value, position_kernel, CrystalSpec, PmType};
use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::PI;

/// The position kernel and the momentum transfer must be a 2-D Fourier pair:
/// with q = (q₁−q₂)/2 conjugate to Δρ = ρ₁−ρ₂,
/// (1/2π)² ∫ sinc(4a|q|²) e^{iq·Δρ} d²q = −(1/16πa)·Ssi(|Δρ|²/(16a)).
#[test]
fn momentum_and_position_kernels_are_fourier_pairs() {
    for (pm, ls, li) in [
        (PmType::TypeICollinearDegenerate, 702e-9, 702e-9),
        (PmType::TypeICollinearNondegenerate, 602e-9, 850e-9),
    ] {
        let lp = 1.0 / (1.0 / ls + 1.0 / li);
        let c = CrystalSpec::new(2e-3, 1.66, 1.66, 0.0, lp, ls, li, pm).unwrap();
        // sinc coefficient in q₁−q₂, converted to a = coefficient basis
        let a = match pm {
            PmType::TypeICollinearDegenerate => c.length / (8.0 * c.n_o * c.k_s()),
            _ => c.length * c.lambda_plus() / (32.0 * PI),
        };
        let unit = (16.0 * a).sqrt(); // natural width scale of the Ssi kernel

        let n = 256usize;
        // Critical sampling of the sinc chirp: phase step ≤ π per q sample
        // out to the window edge.
        let dq = (4.0 * PI / n as f64).sqrt() / unit;
        // sample sinc(4a q²) at centered q values, FFT-shifted for fft2
        let mut m: Array2<Complex64> = Array2::from_shape_fn((n, n), |(iy, ix)| {
            let qx = (ix as f64 - (n / 2) as f64) * dq;
            let qy = (iy as f64 - (n / 2) as f64) * dq;
            let qq = 2.0 * (qx * qx + qy * qy).sqrt(); // |q₁−q₂|
            Complex64::new(momentum_transfer_value(&c, qq).unwrap(), 0.0)
        });
        // centered inverse transform: pre/post checkerboard flips
        for ((iy, ix), v) in m.indexed_iter_mut() {
            if (ix + iy) % 2 == 1 {
                *v = -*v;
            }
        }
        fft2(&mut m, true);
        let scale = (dq * dq) * (n * n) as f64 / (2.0 * PI).powi(2);
        for ((iy, ix), v) in m.indexed_iter_mut() {
            let s = if (ix + iy) % 2 == 1 { -1.0 } else { 1.0 };
            *v *= s * scale;
        }

        let drho = 2.0 * PI / (n as f64 * dq);
        let g = Grid2D::square(n, drho).unwrap();
        let pump = ScalarField::from_fn(g, ls, |_, _| Complex64::new(1.0, 0.0));
        let kern = position_kernel(&c, pump).unwrap();
        let pref = -1.0 / (16.0 * PI * a);

        // compare on the central region where the grid resolves the kernel
        let mut num = 0.0;
        let mut den = 0.0;
        for iy in 0..n {
            for ix in 0..n {
                let (x, y) = (g.x(ix), g.y(iy));
                if (x * x + y * y).sqrt() > 5.0 * unit {
                    continue;
                }
                let expect = kern.corr_value(x, y) * pref;
                num += (m[[iy, ix]] - expect).norm_sqr();
                den += expect.norm_sqr();
            }
        }
        let rel = (num / den).sqrt();
        assert!(rel < 1e-3, "{pm:?}: rel L2 {rel}");
    }
}
