use awp_core::field::Grid2D;
use awp_core::protocols::{holography_run, HolographyConfig};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Signed phase difference wrapped to (−π, π].
fn wrap(a: f64) -> f64 {
    -(-a + PI).rem_euclid(2.0 * PI) + PI
}

/// Four-step retrieval recovers an arbitrary smooth SLM phase pixel by pixel
/// when the crystals are ideally thin.
#[test]
fn holography_retrieves_a_random_smooth_phase() {
    let n = 32usize;
    let g = Grid2D::square(n, 8e-6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // a few grid-periodic harmonics with random amplitudes and phases
    let modes: Vec<(f64, f64, f64, f64, f64)> = (0..5)
        .map(|_| {
            (
                rng.random_range(-1.0..1.0),
                rng.random_range(-3.0..3.0f64).round(),
                rng.random_range(-3.0..3.0f64).round(),
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let phase = Array2::from_shape_fn((n, n), |(iy, ix)| {
        modes
            .iter()
            .map(|&(a, kx, ky, px, py)| {
                a * (2.0 * PI * kx * ix as f64 / n as f64 + px).sin()
                    * (2.0 * PI * ky * iy as f64 / n as f64 + py).cos()
            })
            .sum()
    });
    let cfg = HolographyConfig::new(g, phase.clone(), 0.1, 0.0, 702e-9, 1.66).unwrap();
    let res = holography_run(&cfg).unwrap();
    let worst = res
        .retrieved_phase
        .indexed_iter()
        .map(|((iy, ix), &got)| wrap(got - phase[[iy, ix]]).abs())
        .fold(0.0f64, f64::max);
    assert!(worst <= 1e-3, "worst per-pixel phase error {worst}");
}

/// With crystals of finite thickness the H photon travels an extra 2L/n_o
/// between the lenses, leaving a paraboloid phase on the hologram whose
/// curvature matches that equivalent distance.
#[test]
fn finite_thickness_leaves_the_equivalent_distance_paraboloid() {
    let n = 32usize;
    let g = Grid2D::square(n, 8e-6).unwrap();
    let (lambda, n_o, f, thick) = (702e-9, 1.66, 0.1, 2e-3);
    let cfg = HolographyConfig::new(g, Array2::zeros((n, n)), f, thick, lambda, n_o).unwrap();
    let res = holography_run(&cfg).unwrap();
    let k = 2.0 * PI / lambda;
    let (cx, cy) = (n / 2, n / 2);
    let center = res.retrieved_phase[[cy, cx]];
    for off in [2usize, 4, 6] {
        let r = res.camera_grid.x(cx + off);
        let drop = wrap(center - res.retrieved_phase[[cy, cx + off]]);
        let distance = 2.0 * drop * f * f / (k * r * r);
        let want = 2.0 * thick / n_o;
        assert!(
            (distance / want - 1.0).abs() < 0.02,
            "off {off}: equivalent distance {distance} vs {want}"
        );
        // the reported compensation field is exactly that paraboloid
        let comp = res.compensation[[cy, cx + off]] - res.compensation[[cy, cx]];
        assert!((drop / comp - 1.0).abs() < 1e-9);
    }

    // programming the compensation onto the SLM flattens the hologram
    let flat_cfg =
        HolographyConfig::new(g, res.compensation.clone(), f, thick, lambda, n_o).unwrap();
    let flat = holography_run(&flat_cfg).unwrap();
    let ref_phase = flat.retrieved_phase[[cy, cx]];
    let worst = flat
        .retrieved_phase
        .iter()
        .map(|&p| wrap(p - ref_phase).abs())
        .fold(0.0f64, f64::max);
    assert!(worst <= 1e-6, "compensated hologram not flat: {worst}");
}
