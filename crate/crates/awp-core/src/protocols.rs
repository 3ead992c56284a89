//! End-to-end quantum-imaging scenarios built on the unfolded-setup engine:
//! ghost imaging, imaging with undetected photons (both correlation types),
//! and phase-shifting holography with polarization entanglement.

use crate::engine::{
    apply_kernel, bucket_jpd, conditional_polarized, ChiChannel, EngineError, Pol, PolElement,
    PolarizedSetup, UnfoldedSetup,
};
use crate::field::{
    apply_pipeline, pipeline_output_grid, Element, FieldError, Grid2D, ScalarField,
};
use crate::spdc::{position_kernel, BiphotonKernel, CorrKernel, CrystalSpec, Ordering, SpdcError};
use crate::special::{fwhm, Profile1D, ProfileError};
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Spdc(#[from] SpdcError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("protocol config invalid: {0}")]
    Invalid(&'static str),
}

/// FWHM of a map along the row through the grid center, in physical units.
pub fn center_row_fwhm(map: &Array2<f64>, grid: Grid2D) -> Result<f64, ProtocolError> {
    let cy = grid.ny / 2;
    let xs: Vec<f64> = (0..grid.nx).map(|ix| grid.x(ix)).collect();
    let ys: Vec<f64> = (0..grid.nx).map(|ix| map[[cy, ix]]).collect();
    Ok(fwhm(&Profile1D::new(xs, ys)?)?)
}

/// Peak location of a map with parabolic sub-pixel refinement.
pub fn peak_position(map: &Array2<f64>, grid: Grid2D) -> (f64, f64) {
    let (mut py, mut px, mut best) = (0usize, 0usize, f64::NEG_INFINITY);
    for ((iy, ix), &v) in map.indexed_iter() {
        if v > best {
            best = v;
            py = iy;
            px = ix;
        }
    }
    let refine = |m: f64, c: f64, p: f64| -> f64 {
        let den = m - 2.0 * c + p;
        if den.abs() < 1e-300 { 0.0 } else { 0.5 * (m - p) / den }
    };
    let dx = if px > 0 && px + 1 < grid.nx {
        refine(map[[py, px - 1]], map[[py, px]], map[[py, px + 1]])
    } else {
        0.0
    };
    let dy = if py > 0 && py + 1 < grid.ny {
        refine(map[[py - 1, px]], map[[py, px]], map[[py + 1, px]])
    } else {
        0.0
    };
    (grid.x(px) + dx * grid.dx, grid.y(py) + dy * grid.dy)
}

fn bilinear_c(map: &Array2<Complex64>, g: Grid2D, x: f64, y: f64) -> Complex64 {
    let fx = x / g.dx + (g.nx / 2) as f64;
    let fy = y / g.dy + (g.ny / 2) as f64;
    if fx < 0.0 || fy < 0.0 || fx > (g.nx - 1) as f64 || fy > (g.ny - 1) as f64 {
        return Complex64::ZERO;
    }
    let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
    let (tx, ty) = (fx - ix as f64, fy - iy as f64);
    let (ix1, iy1) = ((ix + 1).min(g.nx - 1), (iy + 1).min(g.ny - 1));
    map[[iy, ix]] * (1.0 - tx) * (1.0 - ty)
        + map[[iy, ix1]] * tx * (1.0 - ty)
        + map[[iy1, ix]] * (1.0 - tx) * ty
        + map[[iy1, ix1]] * tx * ty
}

// ---------------------------------------------------------------------------
// Ghost imaging
// ---------------------------------------------------------------------------

/// Which arm carries the perfect imaging lens in the ghost-imaging setup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LensPlacement {
    DetectionPath,
    ObjectPath,
}

/// Ghost imaging with a plane-wave pump: a bucket detector right behind the
/// object, a spatially resolved camera on the other arm, and a perfect
/// imaging system of magnification −M on one of the two paths.
#[derive(Debug, Clone)]
pub struct GhostImagingConfig {
    pub crystal: CrystalSpec,
    pub grid: Grid2D,
    pub placement: LensPlacement,
    pub magnification: f64,
    /// Complex transmission T sampled on `object_grid()`.
    pub object: Array2<Complex64>,
}

impl GhostImagingConfig {
    /// Grid of the object plane. With the lens on the detection path the
    /// crystal plane coincides with the object plane; with the lens on the
    /// object path the object sits behind an inverting system of
    /// magnification −1/M seen from the crystal.
    pub fn object_grid(&self) -> Grid2D {
        match self.placement {
            LensPlacement::DetectionPath => self.grid,
            LensPlacement::ObjectPath => Grid2D {
                dx: self.grid.dx / self.magnification,
                dy: self.grid.dy / self.magnification,
                ..self.grid
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct GhostResult {
    pub camera_grid: Grid2D,
    pub image: Array2<f64>,
    /// PSF width referred to the object plane.
    pub psf_width: f64,
}

pub fn ghost_image(cfg: &GhostImagingConfig) -> Result<GhostResult, ProtocolError> {
    let m = cfg.magnification;
    if m <= 0.0 {
        return Err(ProtocolError::Invalid("magnification must be positive"));
    }
    let g = cfg.grid;
    if cfg.object.dim() != (g.ny, g.nx) {
        return Err(ProtocolError::Invalid("object must be sampled on the object-plane grid"));
    }
    if cfg.object.iter().any(|t| t.norm() > 1.0 + 1e-9) {
        return Err(ProtocolError::Invalid("object transmission |T| must not exceed 1"));
    }
    let pump = ScalarField::from_fn(g, cfg.crystal.lambda_p, |_, _| Complex64::new(1.0, 0.0));
    let kernel = position_kernel(&cfg.crystal, pump)?;
    let f0 = 0.25; // internal focal length of the ideal 4f imager; drops out

    let setup = |obj: Array2<Complex64>| -> Result<UnfoldedSetup, ProtocolError> {
        let (arm1, arm2) = match cfg.placement {
            LensPlacement::DetectionPath => (
                vec![Element::ThinMask(obj)],
                vec![Element::Fourf { fa: f0, fb: f0 * m }],
            ),
            LensPlacement::ObjectPath => (
                vec![Element::Fourf { fa: f0, fb: f0 / m }, Element::ThinMask(obj)],
                vec![],
            ),
        };
        Ok(UnfoldedSetup::new(
            g,
            kernel.clone(),
            arm1,
            arm2,
            cfg.crystal.lambda_s,
            cfg.crystal.lambda_i,
            1,
        )?)
    };

    // PSF: image a one-pixel pinhole at the field-of-view center.
    let (cx, cy) = g.center();
    let mut pin = Array2::zeros((g.ny, g.nx));
    pin[[cy, cx]] = Complex64::new(1.0, 0.0);
    let s_pin = setup(pin)?;
    let psf_img = bucket_jpd(&s_pin, &[(cx, cy)])?;
    let psf_width = center_row_fwhm(&psf_img, s_pin.det2_grid())? / m;

    let s = setup(cfg.object.clone())?;
    let region: Vec<(usize, usize)> = cfg
        .object
        .indexed_iter()
        .filter(|(_, t)| t.norm() > 1e-12)
        .map(|((iy, ix), _)| (ix, iy))
        .collect();
    if region.is_empty() {
        return Err(ProtocolError::Invalid("object is fully opaque"));
    }
    let image = bucket_jpd(&s, &region)?;
    Ok(GhostResult { camera_grid: s.det2_grid(), image, psf_width })
}

// ---------------------------------------------------------------------------
// Quantum imaging with undetected photons
// ---------------------------------------------------------------------------

/// Single-mode imaging with undetected photons: two unit-intensity fields,
/// one carrying the object amplitude t and a constant phase step C,
/// interfere at the output beam splitter. Returns the four frames at
/// C ∈ {0, π/2, π, 3π/2} and the four-frame visibility. With the advanced
/// wave emitted by the object's absorptive part included, the visibility is
/// t; without it, 2t/(1+t²).
pub fn qiup_single_mode(t: f64, include_background: bool) -> Result<([f64; 4], f64), ProtocolError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(ProtocolError::Invalid("object amplitude must lie in [0, 1]"));
    }
    let bg = if include_background { (1.0 - t * t) / 2.0 } else { 0.0 };
    let steps = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];
    let frames =
        steps.map(|c| (Complex64::new(1.0, 0.0) + Complex64::cis(c) * t).norm_sqr() / 2.0 + bg);
    Ok((frames, four_frame_visibility(&frames)))
}

/// Visibility from four phase-stepped intensities at C = 0, π/2, π, 3π/2.
pub fn four_frame_visibility(i: &[f64; 4]) -> f64 {
    let amp = 0.5 * ((i[0] - i[2]).powi(2) + (i[3] - i[1]).powi(2)).sqrt();
    amp / ((i[0] + i[2]) / 2.0)
}

#[derive(Debug, Clone, Copy)]
pub enum QiupVariant {
    /// Single Fourier lenses f₁ (object→NLC1), f₂ (NLC2→object), f₃
    /// (NLC2→camera): momentum correlation carries the image.
    Momentum { f1: f64, f2: f64, f3: f64 },
    /// Three 4f systems with magnification magnitudes M₂ (NLC1→object),
    /// M₄ (object→NLC2), M₆ (NLC2→camera): position correlation.
    Position { m2: f64, m4: f64, m6: f64 },
}

#[derive(Debug, Clone)]
pub struct QiupConfig {
    pub crystal: CrystalSpec,
    /// Sampling grid of the two (identical) crystal planes.
    pub grid: Grid2D,
    pub variant: QiupVariant,
    /// 1/e amplitude radius of the Gaussian pump at both crystals.
    pub pump_waist: f64,
    /// Complex transmission sampled on `object_grid()`.
    pub object: Array2<Complex64>,
    /// Include the advanced waves emitted by the absorptive part of the
    /// object (weight 1−|T|²). Switching this off is a diagnostic that
    /// inflates the visibility.
    pub include_background: bool,
}

impl QiupConfig {
    pub fn object_grid(&self) -> Result<Grid2D, ProtocolError> {
        let li = self.crystal.lambda_i;
        Ok(match self.variant {
            QiupVariant::Momentum { f2, .. } => {
                pipeline_output_grid(self.grid, li, &[Element::FourierLens { f: f2 }])?
            }
            QiupVariant::Position { m4, .. } => {
                pipeline_output_grid(self.grid, li, &[Element::Fourf { fa: m4, fb: 1.0 }])?
            }
        })
    }

    pub fn camera_grid(&self) -> Result<Grid2D, ProtocolError> {
        let ls = self.crystal.lambda_s;
        Ok(match self.variant {
            QiupVariant::Momentum { f3, .. } => {
                pipeline_output_grid(self.grid, ls, &[Element::FourierLens { f: f3 }])?
            }
            QiupVariant::Position { m6, .. } => {
                pipeline_output_grid(self.grid, ls, &[Element::Fourf { fa: 1.0, fb: m6 }])?
            }
        })
    }

    /// Object-to-camera magnification ratio (absolute value).
    pub fn magnification(&self) -> f64 {
        match self.variant {
            QiupVariant::Momentum { f2, f3, .. } => {
                self.crystal.lambda_s * f3 / (self.crystal.lambda_i * f2)
            }
            QiupVariant::Position { m4, m6, .. } => m4 * m6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QiupResult {
    pub camera_grid: Grid2D,
    /// Camera intensities at C = 0, π/2, π, 3π/2.
    pub frames: [Array2<f64>; 4],
    /// Magnitude of the interference term per pixel.
    pub interference_amp: Array2<f64>,
    pub visibility: Array2<f64>,
    /// Median visibility over camera pixels that map into |T| > 0.1.
    pub visibility_median: f64,
    /// Incoherent image carried by the object path alone (Σ|B|²).
    pub object_image: Array2<f64>,
    pub magnification: f64,
}

struct QiupChains {
    kernel1: BiphotonKernel,
    kernel2: BiphotonKernel,
    /// idler transport: crystal 2 → object → crystal 1 (object mask inside)
    idler: Vec<Element>,
    /// idler transport for object-emitted waves: object plane → crystal 1
    idler_bg: Vec<Element>,
    /// signal transport: crystal 2 → camera
    s_ref: Vec<Element>,
    /// signal transport: crystal 1 → camera
    s_obj: Vec<Element>,
}

fn qiup_chains(cfg: &QiupConfig) -> Result<QiupChains, ProtocolError> {
    let c = &cfg.crystal;
    let w = cfg.pump_waist;
    if w <= 0.0 {
        return Err(ProtocolError::Invalid("pump waist must be positive"));
    }
    let og = cfg.object_grid()?;
    if cfg.object.dim() != (og.ny, og.nx) {
        return Err(ProtocolError::Invalid("object must be sampled on the object-plane grid"));
    }
    if cfg.object.iter().any(|t| t.norm() > 1.0 + 1e-9) {
        return Err(ProtocolError::Invalid("object transmission |T| must not exceed 1"));
    }
    let obj_mask = Element::ThinMask(cfg.object.clone());
    let (idler, idler_bg, s_ref, s_obj) = match cfg.variant {
        QiupVariant::Momentum { f1, f2, f3 } => {
            if f1 <= 0.0 || f2 <= 0.0 || f3 <= 0.0 {
                return Err(ProtocolError::Invalid("focal lengths must be positive"));
            }
            (
                vec![Element::FourierLens { f: f2 }, obj_mask, Element::FourierLens { f: f1 }],
                vec![Element::FourierLens { f: f1 }],
                vec![Element::FourierLens { f: f3 }],
                vec![Element::FourierLens { f: f1 }, Element::Fourf { fa: f2, fb: f3 }],
            )
        }
        QiupVariant::Position { m2, m4, m6 } => {
            if m2 <= 0.0 || m4 <= 0.0 || m6 <= 0.0 {
                return Err(ProtocolError::Invalid("magnifications must be positive"));
            }
            (
                vec![
                    Element::Fourf { fa: m4, fb: 1.0 },
                    obj_mask,
                    Element::Fourf { fa: m2, fb: 1.0 },
                ],
                vec![Element::Fourf { fa: m2, fb: 1.0 }],
                vec![Element::Fourf { fa: 1.0, fb: m6 }],
                vec![Element::Fourf { fa: 1.0, fb: m2 * m4 * m6 }],
            )
        }
    };
    // derive the crystal-1 grid by actually traversing the idler pipeline so
    // that the pump mask lands on the bit-identical grid the advanced wave
    // arrives on (a formula-computed pitch can differ in the last ulp)
    let g1 = apply_pipeline(&ScalarField::zeros(cfg.grid, c.lambda_i), &idler, 1)?.grid;
    let gauss = |g: Grid2D| {
        ScalarField::from_fn(g, c.lambda_p, |x, y| {
            Complex64::new((-(x * x + y * y) / (w * w)).exp(), 0.0)
        })
    };
    // Both kernels evaluate the pump at the position of the incoming idler
    // wave (the crystal-plane point source), i.e. mask before convolution.
    let mut kernel2 = position_kernel(c, gauss(cfg.grid))?;
    kernel2.ordering = Ordering::MaskBeforeConv;
    let mut kernel1 = position_kernel(c, gauss(g1))?;
    kernel1.ordering = Ordering::MaskBeforeConv;
    Ok(QiupChains { kernel1, kernel2, idler, idler_bg, s_ref, s_obj })
}

pub fn qiup_run(cfg: &QiupConfig) -> Result<QiupResult, ProtocolError> {
    let chains = qiup_chains(cfg)?;
    let g = cfg.grid;
    let (li, ls) = (cfg.crystal.lambda_i, cfg.crystal.lambda_s);
    let cam = cfg.camera_grid()?;
    let shape = (cam.ny, cam.nx);

    // Per advanced-wave point source at the second crystal: the reference
    // field A reflected off crystal 2 and the object field B that crossed
    // the object and reflected off crystal 1. Rows are processed in
    // parallel; the row partials are reduced in fixed order.
    type RowSum = (Array2<f64>, Array2<Complex64>, Array2<f64>);
    let rows: Result<Vec<RowSum>, ProtocolError> = (0..g.ny)
        .into_par_iter()
        .map(|iy| {
            let mut s0 = Array2::<f64>::zeros(shape);
            let mut x = Array2::<Complex64>::zeros(shape);
            let mut obj_img = Array2::<f64>::zeros(shape);
            for ix in 0..g.nx {
                let imp = ScalarField::impulse(g, li, ix, iy);
                let a = apply_pipeline(&apply_kernel(&chains.kernel2, &imp, ls)?, &chains.s_ref, 1)?;
                let idl = apply_pipeline(&imp, &chains.idler, 1)?;
                let b = apply_pipeline(&apply_kernel(&chains.kernel1, &idl, ls)?, &chains.s_obj, 1)?;
                for ((iy2, ix2), s) in s0.indexed_iter_mut() {
                    let (av, bv) = (a.amp[[iy2, ix2]], b.amp[[iy2, ix2]]);
                    *s += (av.norm_sqr() + bv.norm_sqr()) / 2.0;
                    x[[iy2, ix2]] += av.conj() * bv;
                    obj_img[[iy2, ix2]] += bv.norm_sqr();
                }
            }
            Ok((s0, x, obj_img))
        })
        .collect();
    let mut s0 = Array2::<f64>::zeros(shape);
    let mut x = Array2::<Complex64>::zeros(shape);
    let mut obj_img = Array2::<f64>::zeros(shape);
    for (rs, rx, ro) in rows? {
        s0 += &rs;
        x += &rx;
        obj_img += &ro;
    }

    // Advanced waves emitted by the absorptive part of the object add a
    // phase-independent background at the camera.
    let mut bg = Array2::<f64>::zeros(shape);
    if cfg.include_background {
        let og = cfg.object_grid()?;
        let srcs: Vec<((usize, usize), f64)> = cfg
            .object
            .indexed_iter()
            .map(|((iy, ix), t)| ((ix, iy), 1.0 - t.norm_sqr().min(1.0)))
            .filter(|&(_, w)| w > 1e-12)
            .collect();
        let parts: Result<Vec<Array2<f64>>, ProtocolError> = srcs
            .par_iter()
            .map(|&((ix, iy), w)| {
                let imp = ScalarField::impulse(og, li, ix, iy);
                let idl = apply_pipeline(&imp, &chains.idler_bg, 1)?;
                let b = apply_pipeline(&apply_kernel(&chains.kernel1, &idl, ls)?, &chains.s_obj, 1)?;
                Ok(b.amp.mapv(|v| w * v.norm_sqr() / 2.0))
            })
            .collect();
        for p in parts? {
            bg += &p;
        }
    }

    let steps = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];
    let frames = steps.map(|c| {
        let rot = Complex64::cis(c);
        Array2::from_shape_fn(shape, |(iy, ix)| {
            s0[[iy, ix]] + (rot * x[[iy, ix]]).re + bg[[iy, ix]]
        })
    });
    let interference_amp = x.mapv(|v| v.norm());
    let visibility = Array2::from_shape_fn(shape, |(iy, ix)| {
        let mean = s0[[iy, ix]] + bg[[iy, ix]];
        if mean > 0.0 { interference_amp[[iy, ix]] / mean } else { 0.0 }
    });

    // Median visibility over pixels looking at a substantially transmitting
    // part of the object.
    let mag = cfg.magnification();
    let og = cfg.object_grid()?;
    let mut vals: Vec<f64> = Vec::new();
    for ((iy, ix), v) in visibility.indexed_iter() {
        let (xo, yo) = (cam.x(ix) / mag, cam.y(iy) / mag);
        if bilinear_c(&cfg.object, og, xo, yo).norm() > 0.1 {
            vals.push(*v);
        }
    }
    vals.sort_by(f64::total_cmp);
    let visibility_median = if vals.is_empty() { 0.0 } else { vals[vals.len() / 2] };

    Ok(QiupResult {
        camera_grid: cam,
        frames,
        interference_amp,
        visibility,
        visibility_median,
        object_image: obj_img,
        magnification: mag,
    })
}

// ---------------------------------------------------------------------------
// Quantum holography with polarization entanglement
// ---------------------------------------------------------------------------

/// Phase-shifting holography with a stacked pair of thin crystals pumped by
/// a diagonally polarized plane wave: one Fourier lens, an SLM adding
/// Φ(ρ) to the H component of photon 1 and a constant step C to photon 2.
#[derive(Debug, Clone)]
pub struct HolographyConfig {
    pub grid: Grid2D,
    /// SLM phase pattern Φ sampled on the camera grid of photon 1.
    pub phase: Array2<f64>,
    /// Constant phase steps; must be the canonical {0, π/2, π, 3π/2} set.
    pub steps: [f64; 4],
    pub lens_f: f64,
    /// Thickness of a single crystal of the stacked pair; 0 for the ideal
    /// thin-crystal run.
    pub crystal_thickness: f64,
    pub lambda: f64,
    pub n_o: f64,
}

impl HolographyConfig {
    pub fn new(
        grid: Grid2D,
        phase: Array2<f64>,
        lens_f: f64,
        crystal_thickness: f64,
        lambda: f64,
        n_o: f64,
    ) -> Result<Self, ProtocolError> {
        if phase.dim() != (grid.ny, grid.nx) {
            return Err(ProtocolError::Invalid("phase pattern must match the grid"));
        }
        if lens_f <= 0.0 || lambda <= 0.0 || n_o <= 0.0 || crystal_thickness < 0.0 {
            return Err(ProtocolError::Invalid(
                "lens focal length, wavelength and index must be positive",
            ));
        }
        Ok(Self {
            grid,
            phase,
            steps: [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2],
            lens_f,
            crystal_thickness,
            lambda,
            n_o,
        })
    }
}

#[derive(Debug, Clone)]
pub struct HolographyResult {
    pub camera_grid: Grid2D,
    /// Anticorrelated-pixel JPD frames for C = 0, π/2, π, 3π/2, indexed by
    /// the photon-1 pixel.
    pub frames: [Array2<f64>; 4],
    /// Four-step retrieval atan2(I_{3π/2}−I_{π/2}, I₀−I_π), wrapped to
    /// (−π, π].
    pub retrieved_phase: Array2<f64>,
    /// Paraboloid phase of the equivalent extra distance 2L/n_o that the H
    /// light travels between the lenses; add to the SLM to compensate the
    /// finite-thickness run.
    pub compensation: Array2<f64>,
}

pub fn holography_run(cfg: &HolographyConfig) -> Result<HolographyResult, ProtocolError> {
    let canonical = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];
    if cfg.steps.iter().zip(canonical).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(ProtocolError::Invalid("phase steps must be {0, π/2, π, 3π/2}"));
    }
    let g = cfg.grid;
    let pump = ScalarField::from_fn(g, cfg.lambda / 2.0, |_, _| Complex64::new(1.0, 0.0));
    let kernel = BiphotonKernel {
        corr: CorrKernel::Delta,
        pump_mask: pump,
        ordering: Ordering::MaskAfterConv,
        tilt: 0.0,
        sigma_plus: None,
    };
    let channels = vec![
        ChiChannel { sigma_p: Pol::V, sigma1: Pol::H, sigma2: Pol::H, kernel: Some(kernel.clone()) },
        ChiChannel { sigma_p: Pol::H, sigma1: Pol::V, sigma2: Pol::V, kernel: Some(kernel) },
    ];
    let slm = cfg.phase.mapv(Complex64::cis);
    let arm1 = vec![
        PolElement::Iso(Element::FourierLens { f: cfg.lens_f }),
        PolElement::HOnly(Element::ThinMask(slm)),
    ];
    let dz = 2.0 * cfg.crystal_thickness / cfg.n_o;
    let mut arm2 = Vec::new();
    if dz > 0.0 {
        arm2.push(PolElement::HOnly(Element::Propagate { z: dz, n: 1.0 }));
    }
    arm2.push(PolElement::Iso(Element::FourierLens { f: cfg.lens_f }));
    // pad = 1: the advanced waves at the crystal are exact grid plane waves,
    // which propagate exactly under the periodic transfer function
    let setup = PolarizedSetup::new(g, channels, arm1, arm2, cfg.lambda, cfg.lambda, 1)?;
    let jones = (
        Complex64::new(1.0 / 2f64.sqrt(), 0.0),
        Complex64::new(1.0 / 2f64.sqrt(), 0.0),
    );

    let (n, ny) = (g.nx, g.ny);
    let rows: Result<Vec<Vec<[f64; 4]>>, ProtocolError> = (0..ny)
        .into_par_iter()
        .map(|iy| {
            let mut row = Vec::with_capacity(n);
            for ix in 0..n {
                let out = conditional_polarized(&setup, (ix, iy), jones)?;
                let (mx, my) = ((n - ix) % n, (ny - iy) % ny);
                let (h, v) = (out.h.amp[[my, mx]], out.v.amp[[my, mx]]);
                row.push(cfg.steps.map(|c| (Complex64::cis(c) * h + v).norm_sqr() / 2.0));
            }
            Ok(row)
        })
        .collect();
    let rows = rows?;
    let mut frames = [(); 4].map(|_| Array2::<f64>::zeros((ny, n)));
    for (iy, row) in rows.iter().enumerate() {
        for (ix, quad) in row.iter().enumerate() {
            for (s, q) in quad.iter().enumerate() {
                frames[s][[iy, ix]] = *q;
            }
        }
    }
    let retrieved_phase = Array2::from_shape_fn((ny, n), |(iy, ix)| {
        (frames[3][[iy, ix]] - frames[1][[iy, ix]])
            .atan2(frames[0][[iy, ix]] - frames[2][[iy, ix]])
    });
    let cam = pipeline_output_grid(g, cfg.lambda, &[Element::FourierLens { f: cfg.lens_f }])?;
    let k = 2.0 * PI / cfg.lambda;
    let curv = k * dz / (2.0 * cfg.lens_f * cfg.lens_f);
    let compensation = Array2::from_shape_fn((ny, n), |(iy, ix)| {
        curv * (cam.x(ix).powi(2) + cam.y(iy).powi(2))
    });
    Ok(HolographyResult { camera_grid: cam, frames, retrieved_phase, compensation })
}
