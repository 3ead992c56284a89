//! Crystal specifications and closed-form biphoton kernels: the SPDC source
//! expressed as an equivalent classical correlation filter plus pump mask.

use crate::field::{ExtraordinaryParams, Grid2D, ScalarField};
use crate::special::ssi;
use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

/// Beyond this argument |Ssi| < 2e-4; the argument is clipped here so the
/// radial lookup table stays bounded.
const SSI_ARG_CLIP: f64 = 1e4;

#[derive(Debug, Error)]
pub enum SpdcError {
    #[error("invalid crystal: {0}")]
    Invalid(&'static str),
    #[error("energy conservation violated: |1/λp − 1/λs − 1/λi|·λp = {residual:.3e}")]
    EnergyConservation { residual: f64 },
    #[error("phase matching violated: residual longitudinal mismatch (η−n_o)kL = {residual:.3e} rad")]
    PhaseMismatch { residual: f64 },
    #[error("operation requires pm_type {expected}, got {got}")]
    WrongPmType { expected: &'static str, got: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmType {
    TypeICollinearDegenerate,
    TypeICollinearNondegenerate,
    TypeIIBeamlike,
    Thin,
}

impl PmType {
    fn name(&self) -> &'static str {
        match self {
            PmType::TypeICollinearDegenerate => "TypeICollinearDegenerate",
            PmType::TypeICollinearNondegenerate => "TypeICollinearNondegenerate",
            PmType::TypeIIBeamlike => "TypeIIBeamlike",
            PmType::Thin => "Thin",
        }
    }
}

/// Optional real modulation of the nonlinear coefficient over the crystal.
#[derive(Debug, Clone)]
pub enum Chi2Profile {
    Constant(f64),
    /// Samples along z (crystal axis), linearly interpolated; z in
    /// [−L/2, L/2].
    AlongZ { zs: Vec<f64>, values: Vec<f64> },
}

impl Chi2Profile {
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            Chi2Profile::Constant(c) => *c,
            Chi2Profile::AlongZ { zs, values } => {
                if z <= zs[0] {
                    return values[0];
                }
                if z >= *zs.last().unwrap() {
                    return *values.last().unwrap();
                }
                let i = zs.partition_point(|&zz| zz <= z).min(zs.len() - 1);
                let (z0, z1) = (zs[i - 1], zs[i]);
                let t = (z - z0) / (z1 - z0);
                values[i - 1] * (1.0 - t) + values[i] * t
            }
        }
    }
}

/// A uniaxial SPDC crystal with collinear pump along z.
#[derive(Debug, Clone)]
pub struct CrystalSpec {
    pub length: f64,
    pub n_o: f64,
    pub n_e: f64,
    pub theta: f64,
    pub lambda_p: f64,
    pub lambda_s: f64,
    pub lambda_i: f64,
    pub pm_type: PmType,
    pub chi2_profile: Option<Chi2Profile>,
}

impl CrystalSpec {
    pub fn new(
        length: f64,
        n_o: f64,
        n_e: f64,
        theta: f64,
        lambda_p: f64,
        lambda_s: f64,
        lambda_i: f64,
        pm_type: PmType,
    ) -> Result<Self, SpdcError> {
        if length <= 0.0 {
            return Err(SpdcError::Invalid("crystal thickness must be positive"));
        }
        if n_o <= 0.0 || n_e <= 0.0 {
            return Err(SpdcError::Invalid("refractive indices must be positive"));
        }
        if lambda_p <= 0.0 || lambda_s <= 0.0 || lambda_i <= 0.0 {
            return Err(SpdcError::Invalid("wavelengths must be positive"));
        }
        let residual = (1.0 / lambda_p - 1.0 / lambda_s - 1.0 / lambda_i).abs() * lambda_p;
        if residual > 1e-12 {
            return Err(SpdcError::EnergyConservation { residual });
        }
        let spec = Self {
            length,
            n_o,
            n_e,
            theta,
            lambda_p,
            lambda_s,
            lambda_i,
            pm_type,
            chi2_profile: None,
        };
        match pm_type {
            PmType::TypeICollinearDegenerate | PmType::TypeICollinearNondegenerate => {
                // Without material dispersion the collinear condition
                // η·k_p = n_o·(k_s + k_i) reduces to η = n_o.
                let eta = spec.walkoff().eta;
                if ((eta - n_o) / n_o).abs() > 1e-9 {
                    return Err(SpdcError::PhaseMismatch {
                        residual: (eta - n_o) * spec.k_p() * length,
                    });
                }
            }
            PmType::TypeIIBeamlike | PmType::Thin => {}
        }
        Ok(spec)
    }

    pub fn with_chi2(mut self, profile: Chi2Profile) -> Self {
        self.chi2_profile = Some(profile);
        self
    }

    pub fn k_p(&self) -> f64 {
        2.0 * PI / self.lambda_p
    }

    pub fn k_s(&self) -> f64 {
        2.0 * PI / self.lambda_s
    }

    pub fn k_i(&self) -> f64 {
        2.0 * PI / self.lambda_i
    }

    /// λ₊ = λ_s/n_s + λ_i/n_i (no dispersion modeled: n_s = n_i = n_o).
    pub fn lambda_plus(&self) -> f64 {
        (self.lambda_s + self.lambda_i) / self.n_o
    }

    /// Extraordinary-wave parameters for propagation at angle θ to the
    /// optic axis: walk-off α, effective index η, curvature factors β, γ.
    pub fn walkoff(&self) -> ExtraordinaryParams {
        let (s, c) = self.theta.sin_cos();
        let d = self.n_o * self.n_o * s * s + self.n_e * self.n_e * c * c;
        let eta = self.n_o * self.n_e / d.sqrt();
        ExtraordinaryParams {
            alpha: (self.n_o * self.n_o - self.n_e * self.n_e) * s * c / d,
            eta,
            beta: eta * eta / (self.n_o * self.n_e),
            gamma: eta / self.n_e,
        }
    }

    /// Effective pump index for beamlike type-II emission:
    /// η = n_o(α² + √(16 + α⁴))/4, the root of 2(η² − n_o²) = n_o·η·α².
    pub fn beamlike_eta(&self) -> f64 {
        let a = self.walkoff().alpha;
        self.n_o * (a * a + (16.0 + a.powi(4)).sqrt()) / 4.0
    }

    /// Emission tilt angle of the beamlike photon pair.
    pub fn beamlike_tilt(&self) -> f64 {
        let eta = self.beamlike_eta();
        self.n_o * eta * self.walkoff().alpha / (self.n_o + eta)
    }
}

/// Radial correlation kernel of the biphoton wave function (a function of
/// ρ₁ − ρ₂ only).
#[derive(Debug, Clone)]
pub enum CorrKernel {
    /// corr(Δρ) = Ssi(coef·|Δρ|²)
    Ssi { coef: f64 },
    /// corr(Δρ) = exp(−|Δρ|²/(4σ₋²))
    DoubleGaussianCorr { sigma_minus_sq: Complex64 },
    /// corr(Δρ) = δ(Δρ): thin-crystal mirror limit
    Delta,
}

/// Where the pump mask is applied relative to the correlation convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    /// U_p(ρ₂)·[corr ∗ ψ] — the ρ₁+ρ₂ ≈ 2ρ₂ approximation
    MaskAfterConv,
    /// corr ∗ [U_p·ψ] — the ρ₁+ρ₂ ≈ 2ρ₁ approximation
    MaskBeforeConv,
    /// exact U_p((ρ₁+ρ₂)/2); direct double sum, small grids only
    Midpoint,
}

/// The biphoton creation amplitude factored as correlation kernel × pump
/// mask, optionally with the beamlike tilt phase exp(i·tilt·(x₂−x₁)).
#[derive(Debug, Clone)]
pub struct BiphotonKernel {
    pub corr: CorrKernel,
    pub pump_mask: ScalarField,
    pub ordering: Ordering,
    pub tilt: f64,
    pub sigma_plus: Option<f64>,
}

impl BiphotonKernel {
    /// Scalar kernel value at separation Δρ = ρ₂ − ρ₁ (tilt phase included).
    pub fn corr_value(&self, dx: f64, dy: f64) -> Complex64 {
        let r2 = dx * dx + dy * dy;
        let radial = match &self.corr {
            CorrKernel::Ssi { coef } => {
                Complex64::new(ssi((coef * r2).min(SSI_ARG_CLIP)), 0.0)
            }
            CorrKernel::DoubleGaussianCorr { sigma_minus_sq } => {
                (-Complex64::new(r2, 0.0) / (4.0 * sigma_minus_sq)).exp()
            }
            CorrKernel::Delta => {
                panic!("Delta kernel has no pointwise value; handle separately")
            }
        };
        radial * Complex64::cis(self.tilt * dx)
    }

    /// The kernel sampled on a centered grid of separations, for use as an
    /// FFT convolution filter. The radial part is tabulated once and
    /// linearly interpolated, so large grids avoid per-pixel special
    /// function sweeps.
    pub fn corr_field(&self, grid: Grid2D) -> Array2<Complex64> {
        if matches!(self.corr, CorrKernel::Delta) {
            let mut a = Array2::zeros((grid.ny, grid.nx));
            let (cx, cy) = grid.center();
            a[[cy, cx]] = Complex64::new(1.0 / grid.pixel_area(), 0.0);
            return a;
        }
        let half_x = (grid.nx / 2) as f64 * grid.dx;
        let half_y = (grid.ny / 2) as f64 * grid.dy;
        let r_max = (half_x * half_x + half_y * half_y).sqrt() * 1.000001;
        let n_tab = (16 * grid.nx.max(grid.ny)).max(4096);
        let dr = r_max / (n_tab - 1) as f64;
        let table: Vec<Complex64> = (0..n_tab)
            .map(|i| {
                let r = i as f64 * dr;
                match &self.corr {
                    CorrKernel::Ssi { coef } => {
                        Complex64::new(ssi((coef * r * r).min(SSI_ARG_CLIP)), 0.0)
                    }
                    CorrKernel::DoubleGaussianCorr { sigma_minus_sq } => {
                        (-Complex64::new(r * r, 0.0) / (4.0 * sigma_minus_sq)).exp()
                    }
                    CorrKernel::Delta => unreachable!(),
                }
            })
            .collect();
        Array2::from_shape_fn((grid.ny, grid.nx), |(iy, ix)| {
            let (x, y) = (grid.x(ix), grid.y(iy));
            let r = (x * x + y * y).sqrt();
            let u = r / dr;
            let i = (u as usize).min(n_tab - 2);
            let t = u - i as f64;
            let radial = table[i] * (1.0 - t) + table[i + 1] * t;
            radial * Complex64::cis(self.tilt * x)
        })
    }
}

/// Position-space kernel of collinear type-I SPDC (or the thin-crystal
/// delta limit). `pump` becomes the pump mask U_p.
pub fn position_kernel(c: &CrystalSpec, pump: ScalarField) -> Result<BiphotonKernel, SpdcError> {
    let corr = match c.pm_type {
        PmType::TypeICollinearDegenerate => CorrKernel::Ssi {
            coef: c.n_o * c.k_s() / (2.0 * c.length),
        },
        PmType::TypeICollinearNondegenerate => CorrKernel::Ssi {
            coef: 2.0 * PI / (c.length * c.lambda_plus()),
        },
        PmType::Thin => CorrKernel::Delta,
        other => {
            return Err(SpdcError::WrongPmType {
                expected: "TypeICollinear* or Thin",
                got: other.name(),
            })
        }
    };
    Ok(BiphotonKernel {
        corr,
        pump_mask: pump,
        ordering: Ordering::MaskAfterConv,
        tilt: 0.0,
        sigma_plus: None,
    })
}

/// Momentum-space transfer amplitude at q = q₁ − q₂ (collinear type-I).
pub fn momentum_transfer_value(c: &CrystalSpec, q: f64) -> Result<f64, SpdcError> {
    match c.pm_type {
        PmType::TypeICollinearDegenerate => {
            Ok(crate::special::sinc(c.length * q * q / (8.0 * c.n_o * c.k_s())))
        }
        PmType::TypeICollinearNondegenerate => {
            Ok(crate::special::sinc(c.length * c.lambda_plus() * q * q / (32.0 * PI)))
        }
        other => Err(SpdcError::WrongPmType {
            expected: "TypeICollinear*",
            got: other.name(),
        }),
    }
}

/// Momentum transfer sampled on a centered grid of q = q₁ − q₂ values with
/// pitch (dqx, dqy).
pub fn momentum_transfer(
    c: &CrystalSpec,
    nqx: usize,
    nqy: usize,
    dqx: f64,
    dqy: f64,
) -> Result<Array2<Complex64>, SpdcError> {
    momentum_transfer_value(c, 0.0)?; // pm_type check
    Ok(Array2::from_shape_fn((nqy, nqx), |(iy, ix)| {
        let qx = (ix as f64 - (nqx / 2) as f64) * dqx;
        let qy = (iy as f64 - (nqy / 2) as f64) * dqy;
        Complex64::new(
            momentum_transfer_value(c, (qx * qx + qy * qy).sqrt()).unwrap(),
            0.0,
        )
    }))
}

/// Beamlike type-II kernel: Ssi with modified width plus a tilt phase.
pub fn beamlike_type2_kernel(
    c: &CrystalSpec,
    pump: ScalarField,
) -> Result<BiphotonKernel, SpdcError> {
    if c.pm_type != PmType::TypeIIBeamlike {
        return Err(SpdcError::WrongPmType {
            expected: "TypeIIBeamlike",
            got: c.pm_type.name(),
        });
    }
    let eta = c.beamlike_eta();
    let k = c.k_s();
    Ok(BiphotonKernel {
        corr: CorrKernel::Ssi {
            coef: c.n_o * eta * k / (c.length * (c.n_o + eta)),
        },
        pump_mask: pump,
        ordering: Ordering::MaskAfterConv,
        tilt: c.beamlike_tilt() * k,
        sigma_plus: None,
    })
}

/// Double-Gaussian biphoton state: ψ(ρ₁,ρ₂) =
/// exp(−|ρ₁+ρ₂|²/(4σ₊²))·exp(−|ρ₁−ρ₂|²/(4σ₋²)) with complex squared widths.
#[derive(Debug, Clone, Copy)]
pub struct DoubleGaussianState {
    pub sigma_plus_sq: Complex64,
    pub sigma_minus_sq: Complex64,
    pub lambda: f64,
    /// σ₊ ≫ σ₋: the regime where the conditional field is a point image
    pub narrow_correlation: bool,
}

impl DoubleGaussianState {
    pub fn eval(&self, rho1: (f64, f64), rho2: (f64, f64)) -> Complex64 {
        let sp = (rho1.0 + rho2.0).powi(2) + (rho1.1 + rho2.1).powi(2);
        let sm = (rho1.0 - rho2.0).powi(2) + (rho1.1 - rho2.1).powi(2);
        (-Complex64::new(sp, 0.0) / (4.0 * self.sigma_plus_sq)
            - Complex64::new(sm, 0.0) / (4.0 * self.sigma_minus_sq))
            .exp()
    }
}

/// Gaussian approximation of an Ssi/sinc kernel with a Gaussian pump of
/// waist `pump_w`: σ₊ = w, σ₋ matched so sinc(aq²) ≈ exp(−0.455aq²).
pub fn double_gaussian_from_kernel(
    kernel: &BiphotonKernel,
    pump_w: f64,
) -> Result<DoubleGaussianState, SpdcError> {
    let coef = match &kernel.corr {
        CorrKernel::Ssi { coef } => *coef,
        CorrKernel::DoubleGaussianCorr { .. } | CorrKernel::Delta => {
            return Err(SpdcError::Invalid("double-Gaussian fit needs an Ssi kernel"))
        }
    };
    // Position kernel Ssi(coef·ρ²) ↔ momentum sinc(a·q²) with a = 1/(16·coef);
    // the 0.455-matched momentum Gaussian exp(−0.455aq²) transforms back to
    // exp(−ρ²/(4σ₋²)) with σ₋² = 0.455·a/4... σ₋² = 0.455/(4·coef)·(1/4)·16 —
    // concretely: exp(−0.455a|q₋|²·2) over q₋ pairs with σ₋² = 4·0.455·a.
    let a = 1.0 / (16.0 * coef);
    let sigma_minus_sq = 4.0 * 0.455 * a;
    let sigma_plus_sq = pump_w * pump_w;
    Ok(DoubleGaussianState {
        sigma_plus_sq: Complex64::new(sigma_plus_sq, 0.0),
        sigma_minus_sq: Complex64::new(sigma_minus_sq, 0.0),
        lambda: kernel.pump_mask.lambda_vac,
        narrow_correlation: sigma_plus_sq / sigma_minus_sq > 100.0,
    })
}

/// Free-space propagation of a double-Gaussian state by distance z for both
/// photons: σ±² → σ±² + iz/k.
pub fn propagate_double_gaussian(s: &DoubleGaussianState, z: f64) -> DoubleGaussianState {
    let k = 2.0 * PI / s.lambda;
    let shift = Complex64::new(0.0, z / k);
    DoubleGaussianState {
        sigma_plus_sq: s.sigma_plus_sq + shift,
        sigma_minus_sq: s.sigma_minus_sq + shift,
        ..*s
    }
}

/// Quasi-phase-matched χ² profile: C·sgn(cos Φ) at each sample.
pub fn qpm_profile(phi: &[f64], c: f64) -> Vec<f64> {
    phi.iter()
        .map(|p| if p.cos() >= 0.0 { c } else { -c })
        .collect()
}
