//! Sampled complex fields on centered Cartesian grids and the linear optical
//! elements that act on them (free propagation, birefringent propagation,
//! thin masks, lenses, Fourier lenses, 4f systems).
//!
//! Amplitudes are dimensionless and carried in relative units: constant
//! prefactors of the continuous transforms are dropped, so only relative
//! amplitudes and phases are meaningful. Lossless elements preserve
//! `norm_sqr` exactly up to rounding.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid too coarse: transfer phase steps {step_over_pi:.3}·π per pixel; |z| must stay below {max_z:.6e} m on this grid")]
    SamplingTooCoarse { step_over_pi: f64, max_z: f64 },
    #[error("lens too strong for grid: focal length must exceed {f_min:.6e} m")]
    LensTooStrong { f_min: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),
    #[error("invalid parameter: {0}")]
    Invalid(&'static str),
}

/// Uniform Cartesian grid centered on the optical axis.
///
/// Sample `i` along x sits at `(i - nx/2)·dx`, so the axis pixel is at index
/// `nx/2` and index 0 is the most negative coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self, FieldError> {
        if nx < 2 || ny < 2 {
            return Err(FieldError::Invalid("nx, ny must be >= 2"));
        }
        if !(dx > 0.0 && dy > 0.0) {
            return Err(FieldError::Invalid("dx, dy must be positive"));
        }
        Ok(Self { nx, ny, dx, dy })
    }

    pub fn square(n: usize, d: f64) -> Result<Self, FieldError> {
        Self::new(n, n, d, d)
    }

    pub fn x(&self, ix: usize) -> f64 {
        (ix as f64 - (self.nx / 2) as f64) * self.dx
    }

    pub fn y(&self, iy: usize) -> f64 {
        (iy as f64 - (self.ny / 2) as f64) * self.dy
    }

    /// Angular spatial frequency of FFT bin `ix` (rad/m), FFT ordering.
    pub fn qx(&self, ix: usize) -> f64 {
        let m = if ix < self.nx.div_ceil(2) {
            ix as isize
        } else {
            ix as isize - self.nx as isize
        };
        2.0 * PI * m as f64 / (self.nx as f64 * self.dx)
    }

    pub fn qy(&self, iy: usize) -> f64 {
        let m = if iy < self.ny.div_ceil(2) {
            iy as isize
        } else {
            iy as isize - self.ny as isize
        };
        2.0 * PI * m as f64 / (self.ny as f64 * self.dy)
    }

    /// Index of the on-axis pixel.
    pub fn center(&self) -> (usize, usize) {
        (self.nx / 2, self.ny / 2)
    }

    pub fn pixel_area(&self) -> f64 {
        self.dx * self.dy
    }
}

/// A monochromatic scalar field sampled on a grid. `amp[[iy, ix]]` is the
/// complex amplitude at `(x(ix), y(iy))`.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Grid2D,
    pub amp: Array2<Complex64>,
    pub lambda_vac: f64,
}

impl ScalarField {
    pub fn zeros(grid: Grid2D, lambda_vac: f64) -> Self {
        Self {
            grid,
            amp: Array2::zeros((grid.ny, grid.nx)),
            lambda_vac,
        }
    }

    pub fn from_fn(grid: Grid2D, lambda_vac: f64, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let amp = Array2::from_shape_fn((grid.ny, grid.nx), |(iy, ix)| f(grid.x(ix), grid.y(iy)));
        Self { grid, amp, lambda_vac }
    }

    /// Discrete point source: 1/(dx·dy) in a single cell, so that discrete
    /// sifting against any sampled function is exact.
    pub fn impulse(grid: Grid2D, lambda_vac: f64, ix: usize, iy: usize) -> Self {
        let mut f = Self::zeros(grid, lambda_vac);
        f.amp[[iy, ix]] = Complex64::new(1.0 / grid.pixel_area(), 0.0);
        f
    }

    /// Vacuum wave number 2π/λ.
    pub fn k(&self) -> f64 {
        2.0 * PI / self.lambda_vac
    }

    /// Squared L2 norm Σ|amp|²·dx·dy.
    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.pixel_area()
    }

    /// Discrete inner product ⟨self|other⟩ = Σ conj(a)·b·dx·dy.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amp
            .iter()
            .zip(other.amp.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.pixel_area()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.amp.mapv_inplace(|a| a * c);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch("add requires identical grids"));
        }
        let mut out = self.clone();
        out.amp += &other.amp;
        Ok(out)
    }
}

/// Field with two polarization components on a shared grid.
#[derive(Debug, Clone)]
pub struct PolarizedField {
    pub h: ScalarField,
    pub v: ScalarField,
}

impl PolarizedField {
    pub fn new(h: ScalarField, v: ScalarField) -> Result<Self, FieldError> {
        if h.grid != v.grid {
            return Err(FieldError::GridMismatch("polarization components on different grids"));
        }
        if h.lambda_vac != v.lambda_vac {
            return Err(FieldError::GridMismatch("polarization components at different wavelengths"));
        }
        Ok(Self { h, v })
    }
}

/// In-place 2-D FFT (unscaled forward; inverse divides by nx·ny).
pub fn fft2(a: &mut Array2<Complex64>, inverse: bool) {
    let (ny, nx) = a.dim();
    let mut planner = FftPlanner::new();
    let plan_x = if inverse {
        planner.plan_fft_inverse(nx)
    } else {
        planner.plan_fft_forward(nx)
    };
    for mut row in a.rows_mut() {
        plan_x.process(row.as_slice_mut().expect("standard layout"));
    }
    let plan_y = if inverse {
        planner.plan_fft_inverse(ny)
    } else {
        planner.plan_fft_forward(ny)
    };
    let mut t = a.t().as_standard_layout().into_owned();
    for mut row in t.rows_mut() {
        plan_y.process(row.as_slice_mut().expect("standard layout"));
    }
    *a = t.t().as_standard_layout().into_owned();
    if inverse {
        let s = 1.0 / (nx * ny) as f64;
        a.mapv_inplace(|v| v * s);
    }
}

/// Walk-off parameters of extraordinary propagation in a uniaxial crystal:
/// transfer phase exp{i[ηk − (β²qx² + γ²qy²)/(2ηk) + αqx]·z}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtraordinaryParams {
    pub alpha: f64,
    pub eta: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ExtraordinaryParams {
    /// Variant with the transverse curvature coefficients forced to 1
    /// (keeps walk-off and the effective index, drops the astigmatism).
    pub fn with_unit_transverse(self) -> Self {
        Self { beta: 1.0, gamma: 1.0, ..self }
    }
}

/// Linear optical elements. Each maps a `ScalarField` to a `ScalarField`;
/// `FourierLens` and `Fourf` change the grid pitch of the output.
#[derive(Debug, Clone)]
pub enum Element {
    Propagate { z: f64, n: f64 },
    PropagateExtraordinary { z: f64, par: ExtraordinaryParams },
    ThinMask(Array2<Complex64>),
    ThinLens { f: f64 },
    FourierLens { f: f64 },
    Fourf { fa: f64, fb: f64 },
    ConstantPhase(f64),
}

impl Element {
    /// The transposed element: impulse response with source and observation
    /// points exchanged. All elements here are symmetric except
    /// extraordinary propagation, whose walk-off term is odd in qx, and the
    /// 4f system, whose magnification inverts.
    pub fn transposed(&self) -> Element {
        match self {
            Element::PropagateExtraordinary { z, par } => Element::PropagateExtraordinary {
                z: *z,
                par: ExtraordinaryParams { alpha: -par.alpha, ..*par },
            },
            Element::Fourf { fa, fb } => Element::Fourf { fa: *fb, fb: *fa },
            other => other.clone(),
        }
    }

    /// Apply with the default guard-band padding (2×) on propagation steps.
    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField, FieldError> {
        self.apply_padded(f, 2)
    }

    /// Apply with an explicit padding factor for propagation steps. `pad = 1`
    /// disables the guard band (periodic wraparound becomes the caller's
    /// responsibility).
    pub fn apply_padded(&self, f: &ScalarField, pad: usize) -> Result<ScalarField, FieldError> {
        match self {
            Element::Propagate { z, n } => {
                if *n <= 0.0 {
                    return Err(FieldError::Invalid("refractive index must be positive"));
                }
                let nk = n * f.k();
                propagate_transfer(f, pad, *z, |qx, qy| {
                    (nk - (qx * qx + qy * qy) / (2.0 * nk)) * z
                })
            }
            Element::PropagateExtraordinary { z, par } => {
                let ek = par.eta * f.k();
                let (b2, g2) = (par.beta * par.beta, par.gamma * par.gamma);
                let alpha = par.alpha;
                propagate_transfer(f, pad, *z, |qx, qy| {
                    (ek - (b2 * qx * qx + g2 * qy * qy) / (2.0 * ek) + alpha * qx) * z
                })
            }
            Element::ThinMask(t) => {
                if t.dim() != f.amp.dim() {
                    return Err(FieldError::GridMismatch("mask shape differs from field"));
                }
                let mut out = f.clone();
                out.amp *= t;
                Ok(out)
            }
            Element::ThinLens { f: foc } => {
                if *foc == 0.0 {
                    return Err(FieldError::Invalid("focal length must be nonzero"));
                }
                let k = f.k();
                let g = f.grid;
                // Quadratic phase must step less than π between adjacent
                // pixels out to the grid edge.
                let half_x = (g.nx / 2) as f64 * g.dx;
                let half_y = (g.ny / 2) as f64 * g.dy;
                let f_min = (k * half_x * g.dx).max(k * half_y * g.dy) / PI;
                if foc.abs() < f_min * (1.0 - 1e-12) {
                    return Err(FieldError::LensTooStrong { f_min });
                }
                let mut out = f.clone();
                for ((iy, ix), a) in out.amp.indexed_iter_mut() {
                    let r2 = g.x(ix).powi(2) + g.y(iy).powi(2);
                    *a *= Complex64::cis(-k * r2 / (2.0 * foc));
                }
                Ok(out)
            }
            Element::FourierLens { f: foc } => fourier_lens(f, *foc),
            Element::Fourf { fa, fb } => {
                let mid = fourier_lens(f, *fa)?;
                fourier_lens(&mid, *fb)
            }
            Element::ConstantPhase(c) => Ok(f.scaled(Complex64::cis(*c))),
        }
    }
}

/// Apply a pipeline of elements in order.
pub fn apply_pipeline(
    field: &ScalarField,
    elements: &[Element],
    pad: usize,
) -> Result<ScalarField, FieldError> {
    let mut f = field.clone();
    for e in elements {
        f = e.apply_padded(&f, pad)?;
    }
    Ok(f)
}

/// Traverse a pipeline backward: transposed elements in reverse order. This
/// is the impulse response of the same hardware for light entering at the
/// output port.
pub fn apply_pipeline_reversed(
    field: &ScalarField,
    elements: &[Element],
    pad: usize,
) -> Result<ScalarField, FieldError> {
    let mut f = field.clone();
    for e in elements.iter().rev() {
        f = e.transposed().apply_padded(&f, pad)?;
    }
    Ok(f)
}

/// Grid a pipeline produces when fed a field on `g` at wavelength `lambda`,
/// without touching any samples. Only Fourier-plane elements change pitch.
pub fn pipeline_output_grid(
    g: Grid2D,
    lambda: f64,
    elements: &[Element],
) -> Result<Grid2D, FieldError> {
    let mut g = g;
    for e in elements {
        match e {
            Element::FourierLens { f } => {
                g = Grid2D {
                    nx: g.nx,
                    ny: g.ny,
                    dx: lambda * f / (g.nx as f64 * g.dx),
                    dy: lambda * f / (g.ny as f64 * g.dy),
                };
            }
            Element::Fourf { fa, fb } => {
                g = Grid2D { nx: g.nx, ny: g.ny, dx: g.dx * fb / fa, dy: g.dy * fb / fa };
            }
            Element::ThinMask(t) => {
                if t.dim() != (g.ny, g.nx) {
                    return Err(FieldError::GridMismatch("mask shape differs from grid"));
                }
            }
            _ => {}
        }
    }
    Ok(g)
}

/// Periodic 2-D convolution with a kernel sampled on the centered grid,
/// scaled by the pixel area: out ≈ ∫kernel(ρ−ρ′)·data(ρ′)d²ρ′ wrapped into
/// the window.
pub fn convolve_periodic(
    kernel_centered: &Array2<Complex64>,
    data: &Array2<Complex64>,
    pixel_area: f64,
) -> Array2<Complex64> {
    let (ny, nx) = data.dim();
    let (cy, cx) = (ny / 2, nx / 2);
    let mut kf = Array2::from_shape_fn((ny, nx), |(iy, ix)| {
        kernel_centered[[(iy + cy) % ny, (ix + cx) % nx]]
    });
    let mut df = data.clone();
    fft2(&mut kf, false);
    fft2(&mut df, false);
    let mut prod = kf * df;
    fft2(&mut prod, true);
    prod.mapv_inplace(|v| v * pixel_area);
    prod
}

/// Angular-spectrum propagation with an arbitrary transfer phase φ(qx, qy),
/// guard-band padded by `pad` and cropped back.
fn propagate_transfer(
    f: &ScalarField,
    pad: usize,
    z: f64,
    phase: impl Fn(f64, f64) -> f64,
) -> Result<ScalarField, FieldError> {
    let pad = pad.max(1);
    let g = f.grid;
    let (pnx, pny) = (g.nx * pad, g.ny * pad);
    let pg = Grid2D { nx: pnx, ny: pny, ..g };

    // Sampling guard: the transfer phase may not step more than π between
    // adjacent frequency samples anywhere in the band. The phases used here
    // are separable in qx and qy, so scanning each axis at the other axis'
    // band edge covers the worst case.
    let mut max_step = 0.0f64;
    let dq_x = 2.0 * PI / (pnx as f64 * g.dx);
    let dq_y = 2.0 * PI / (pny as f64 * g.dy);
    for qy in [0.0, PI / g.dy] {
        for m in -(pnx as i64) / 2..pnx as i64 / 2 {
            let q0 = m as f64 * dq_x;
            max_step = max_step.max((phase(q0 + dq_x, qy) - phase(q0, qy)).abs());
        }
    }
    for qx in [0.0, PI / g.dx] {
        for m in -(pny as i64) / 2..pny as i64 / 2 {
            let q0 = m as f64 * dq_y;
            max_step = max_step.max((phase(qx, q0 + dq_y) - phase(qx, q0)).abs());
        }
    }
    if max_step > PI * (1.0 + 1e-9) {
        return Err(FieldError::SamplingTooCoarse {
            step_over_pi: max_step / PI,
            // The step scales linearly with |z|; report the |z| that would fit.
            max_z: z.abs() * PI / max_step,
        });
    }

    let mut buf: Array2<Complex64> = Array2::zeros((pny, pnx));
    let (oy, ox) = ((pny - g.ny) / 2, (pnx - g.nx) / 2);
    buf.slice_mut(ndarray::s![oy..oy + g.ny, ox..ox + g.nx])
        .assign(&f.amp);
    fft2(&mut buf, false);
    for ((iy, ix), a) in buf.indexed_iter_mut() {
        *a *= Complex64::cis(phase(pg.qx(ix), pg.qy(iy)));
    }
    fft2(&mut buf, true);
    let out = buf
        .slice(ndarray::s![oy..oy + g.ny, ox..ox + g.nx])
        .to_owned();
    Ok(ScalarField { grid: g, amp: out, lambda_vac: f.lambda_vac })
}

/// Centered 2-D DFT: out[m] = Σ_j in[j]·exp(−2πi(j−N/2)(m−N/2)/N) per axis.
fn centered_fft2(a: &Array2<Complex64>) -> Array2<Complex64> {
    let (ny, nx) = a.dim();
    let mut buf = Array2::from_shape_fn((ny, nx), |(iy, ix)| {
        let s = if (ix + iy) % 2 == 0 { 1.0 } else { -1.0 };
        a[[iy, ix]] * s
    });
    fft2(&mut buf, false);
    let global = Complex64::cis(-PI * (nx as f64 + ny as f64) / 2.0);
    for ((iy, ix), v) in buf.indexed_iter_mut() {
        let s = if (ix + iy) % 2 == 0 { 1.0 } else { -1.0 };
        *v *= global * s;
    }
    buf
}

/// Ideal Fourier lens: U(ρ) → ∫U(ρ′)exp(−i2πρ·ρ′/(λf))dρ′ on the back focal
/// plane, realized as a centered DFT scaled by dx·dy/(λf). The output pitch
/// is λf/(N·dx) per axis; the map is exactly unitary on the grid.
fn fourier_lens(f: &ScalarField, foc: f64) -> Result<ScalarField, FieldError> {
    if foc <= 0.0 {
        return Err(FieldError::Invalid("Fourier lens focal length must be positive"));
    }
    let g = f.grid;
    let scale = g.pixel_area() / (f.lambda_vac * foc);
    let mut amp = centered_fft2(&f.amp);
    amp.mapv_inplace(|v| v * scale);
    let out_grid = Grid2D {
        nx: g.nx,
        ny: g.ny,
        dx: f.lambda_vac * foc / (g.nx as f64 * g.dx),
        dy: f.lambda_vac * foc / (g.ny as f64 * g.dy),
    };
    Ok(ScalarField { grid: out_grid, amp, lambda_vac: f.lambda_vac })
}
