use awp_core::engine::{
    conditional_wavefunction, partially_coherent_jpd, PostSelection, UnfoldedSetup,
};
use awp_core::field::{Element, Grid2D, ScalarField};
use awp_core::spdc::{momentum_transfer_value, position_kernel, CrystalSpec, Ordering, PmType};
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn degenerate(l: f64) -> CrystalSpec {
    let lam = 702e-9;
    CrystalSpec::new(l, 1.66, 1.66, 0.0, lam / 2.0, lam, lam, PmType::TypeICollinearDegenerate)
        .unwrap()
}

/// Reading the apparatus from either end gives the same biphoton amplitude:
/// ψ(ρ₁,ρ₂) computed by unfolding at photon 1 equals the value computed by
/// unfolding at photon 2, with the exact midpoint pump.
#[test]
fn arm_swap_leaves_the_biphoton_amplitude_unchanged() {
    let lam = 702e-9;
    let n = 16usize;
    let g = Grid2D::square(n, 10e-6).unwrap();
    let c = degenerate(2e-4);
    let pump = ScalarField::from_fn(g, lam / 2.0, |x, y| {
        Complex64::new((-(x * x + y * y) / (50e-6f64).powi(2)).exp(), 0.0)
    });
    let mut kernel = position_kernel(&c, pump).unwrap();
    kernel.ordering = Ordering::Midpoint;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mask1 = Array2::from_shape_fn((n, n), |_| {
        Complex64::cis(rng.random_range(0.0..2.0 * PI)) * rng.random_range(0.3..1.0)
    });
    let mask2 = Array2::from_shape_fn((n, n), |_| {
        Complex64::cis(rng.random_range(0.0..2.0 * PI)) * rng.random_range(0.3..1.0)
    });
    let s = UnfoldedSetup::new(
        g,
        kernel,
        vec![Element::Propagate { z: 1e-3, n: 1.0 }, Element::ThinMask(mask1)],
        vec![Element::ThinMask(mask2), Element::Propagate { z: 1.4e-3, n: 1.0 }],
        lam,
        lam,
        2,
    )
    .unwrap();
    let swapped = s.swapped();

    for (a, b) in [((4usize, 9usize), (12usize, 6usize)), ((7, 3), (10, 11))] {
        let fwd = conditional_wavefunction(&s, &PostSelection::Point(a.0, a.1)).unwrap();
        let rev = conditional_wavefunction(&swapped, &PostSelection::Point(b.0, b.1)).unwrap();
        let psi_ab = fwd.amp[[b.1, b.0]];
        let psi_ba = rev.amp[[a.1, a.0]];
        assert!(
            (psi_ab - psi_ba).norm() <= 1e-8 * psi_ab.norm().max(1e-30),
            "ψ({a:?},{b:?}) = {psi_ab} vs {psi_ba}"
        );
    }
}

/// When the pump is much wider than the correlation kernel, the two
/// convolution orderings approximate the exact midpoint mask equally well
/// and must agree with each other.
#[test]
fn pump_mask_orderings_agree_for_a_wide_pump() {
    let lam = 702e-9;
    let n = 128usize;
    let c = degenerate(1e-5);
    let fwhm = 0.770 * (c.length * lam / c.n_o).sqrt();
    let w = 20.0 * fwhm;
    let g = Grid2D::square(n, 6.0 * w / n as f64).unwrap();
    let pump = ScalarField::from_fn(g, lam / 2.0, |x, y| {
        Complex64::new((-(x * x + y * y) / (w * w)).exp(), 0.0)
    });
    let mut kernel = position_kernel(&c, pump).unwrap();

    let mut run = |ordering: Ordering| -> Array2<Complex64> {
        kernel.ordering = ordering;
        let s = UnfoldedSetup::new(g, kernel.clone(), vec![], vec![], lam, lam, 2).unwrap();
        conditional_wavefunction(&s, &PostSelection::Point(n / 2 + 2, n / 2 - 1))
            .unwrap()
            .amp
    };
    let after = run(Ordering::MaskAfterConv);
    let before = run(Ordering::MaskBeforeConv);
    let num: f64 = after.iter().zip(before.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = after.iter().map(|a| a.norm_sqr()).sum();
    let rel = (num / den).sqrt();
    assert!(rel < 0.02, "orderings differ by {rel}");
}

/// Fourier lenses on both arms turn the position kernel into momentum
/// anticorrelation: a point detection at ρ₁ puts photon 2 at −ρ₁, with the
/// momentum sinc as envelope. At the crystal the advanced wave is the tilted
/// plane wave exp(−i2πρ₁·ρ/(λf)).
#[test]
fn fourier_arms_show_momentum_anticorrelation_with_sinc_envelope() {
    let lam = 702e-9;
    let n = 32usize;
    let dx = 8e-6;
    let g = Grid2D::square(n, dx).unwrap();
    let f = n as f64 * dx * dx / lam;
    // crystal length chosen so the correlation kernel spans several pixels:
    // the grid must resolve it for its transform to mean anything
    let c = degenerate(4e-3);
    let pump = ScalarField::from_fn(g, lam / 2.0, |_, _| Complex64::new(1.0, 0.0));
    let kernel = position_kernel(&c, pump).unwrap();

    // advanced wave at the crystal: tilted plane wave
    let to_crystal = UnfoldedSetup::new(
        g,
        kernel.clone(),
        vec![Element::FourierLens { f }],
        vec![],
        lam,
        lam,
        1,
    )
    .unwrap();
    let probe = (n / 2 + 5, n / 2 - 3);
    let back = awp_core::field::apply_pipeline_reversed(
        &ScalarField::impulse(to_crystal.det1_grid(), lam, probe.0, probe.1),
        &to_crystal.arm1,
        1,
    )
    .unwrap();
    let mags: Vec<f64> = back.amp.iter().map(|v| v.norm()).collect();
    let mean = mags.iter().sum::<f64>() / mags.len() as f64;
    assert!(mags.iter().all(|m| (m - mean).abs() < 1e-9 * mean), "not a plane wave");
    let det1 = to_crystal.det1_grid();
    let expected_step = -2.0 * PI * det1.x(probe.0) * g.dx / (lam * f);
    let step = (back.amp[[0, 1]] / back.amp[[0, 0]]).arg();
    assert!((step - expected_step).abs() < 1e-9, "{step} vs {expected_step}");

    // full setup: all energy at the mirrored pixel, with sinc weights
    let s = UnfoldedSetup::new(
        g,
        kernel,
        vec![Element::FourierLens { f }],
        vec![Element::FourierLens { f }],
        lam,
        lam,
        1,
    )
    .unwrap();
    let mut rel_amps = Vec::new();
    let mut expected = Vec::new();
    for j in [2usize, 3, 4, 5] {
        let (px, py) = (n / 2 + j, n / 2);
        let out = conditional_wavefunction(&s, &PostSelection::Point(px, py)).unwrap();
        let (mx, my) = (n - px, n - py);
        let peak = out.amp[[my, mx]].norm_sqr();
        let total: f64 = out.amp.iter().map(|v| v.norm_sqr()).sum();
        assert!(peak / total > 1.0 - 1e-9, "energy at mirror only {}", peak / total);
        rel_amps.push(out.amp[[my, mx]].norm());
        let q0 = 2.0 * PI * det1.x(px) / (lam * f);
        expected.push(momentum_transfer_value(&c, 2.0 * q0).unwrap().abs());
    }
    // envelope follows the momentum transfer up to kernel-truncation error
    for i in 1..rel_amps.len() {
        let got = rel_amps[i] / rel_amps[0];
        let want = expected[i] / expected[0];
        assert!(
            (got - want).abs() < 0.05 * want.max(0.2),
            "sinc envelope: ratio {got} vs {want}"
        );
    }
}

/// A fully incoherent pump (point sources tiling the crystal) with a thin
/// crystal erases momentum correlation: the conditional far-field intensity
/// no longer depends on where photon 1 was found.
#[test]
fn incoherent_pump_erases_momentum_correlation() {
    let lam = 702e-9;
    let n = 16usize;
    let dx = 10e-6;
    let g = Grid2D::square(n, dx).unwrap();
    let f = n as f64 * dx * dx / lam;
    let c = CrystalSpec::new(1e-6, 1.66, 1.66, 0.0, lam / 2.0, lam, lam, PmType::Thin).unwrap();
    let pump = ScalarField::from_fn(g, lam / 2.0, |_, _| Complex64::new(1.0, 0.0));
    let kernel = position_kernel(&c, pump).unwrap();
    let s = UnfoldedSetup::new(
        g,
        kernel,
        vec![Element::FourierLens { f }],
        vec![Element::FourierLens { f }],
        lam,
        lam,
        1,
    )
    .unwrap();
    let modes: Vec<(f64, ScalarField)> = (0..n * n)
        .map(|i| (1.0, ScalarField::impulse(g, lam / 2.0, i % n, i / n)))
        .collect();
    let slices = partially_coherent_jpd(&s, &modes, &[(2, 3), (12, 9)]).unwrap();
    for slice in &slices {
        let mean = slice.sum() / slice.len() as f64;
        assert!(slice.iter().all(|v| (v - mean).abs() < 1e-9 * mean), "not uniform");
    }
    let diff: f64 = slices[0]
        .iter()
        .zip(slices[1].iter())
        .map(|(a, b)| (a - b).abs())
        .sum();
    assert!(diff < 1e-9 * slices[0].sum());
}
