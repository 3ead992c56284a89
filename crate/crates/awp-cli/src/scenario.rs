//! Scenario files: a human-writable TOML description of one experiment,
//! validated as a whole so every problem is reported at once.

use awp_core::field::Grid2D;
use awp_core::spdc::{CrystalSpec, PmType};
use ndarray::Array2;
use num_complex::Complex64;
use serde::Deserialize;

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Exactly one of: raw, gi, qiup, holography, hom.
    pub protocol: String,
    pub output_dir: Option<String>,
    pub grid: Option<GridSpec>,
    pub crystal: Option<CrystalSection>,
    pub gi: Option<GiSection>,
    pub qiup: Option<QiupSection>,
    pub holography: Option<HolographySection>,
    pub hom: Option<HomSection>,
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    /// Pixel pitch in meters.
    pub dx: f64,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct CrystalSection {
    /// One of: type1-degenerate, type1-nondegenerate, type2-beamlike, thin.
    pub pm: String,
    pub length: f64,
    pub n_o: f64,
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
    pub lambda_s: f64,
    pub lambda_i: Option<f64>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct GiSection {
    /// "detection-path" or "object-path".
    pub placement: String,
    pub magnification: f64,
    pub object: ObjectSpec,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct QiupSection {
    /// "momentum", "position" or "single-mode".
    pub variant: String,
    pub f1: Option<f64>,
    pub f2: Option<f64>,
    pub f3: Option<f64>,
    pub m2: Option<f64>,
    pub m4: Option<f64>,
    pub m6: Option<f64>,
    pub pump_waist: Option<f64>,
    /// Flat amplitude for the single-mode variant.
    pub transmission: Option<f64>,
    pub object: Option<ObjectSpec>,
    pub include_background: Option<bool>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct HolographySection {
    pub lens_f: f64,
    pub pattern: PatternSpec,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PatternSpec {
    Zeros,
    /// amplitude·sin(2π·kx·ix/n)·cos(2π·ky·iy/n) in radians.
    Harmonic { amplitude: f64, kx: f64, ky: f64 },
}

#[derive(Debug, Deserialize, Clone)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObjectSpec {
    /// Uniform transmission (default amplitude 1).
    Clear { amplitude: Option<f64> },
    /// A single transparent pixel at the grid center.
    Pinhole,
    /// Transparent rectangle, pixel index ranges inclusive..exclusive.
    Rect { x0: usize, x1: usize, y0: usize, y1: usize, amplitude: Option<f64> },
}

impl ObjectSpec {
    pub fn build(&self, n: usize) -> Array2<Complex64> {
        match self {
            ObjectSpec::Clear { amplitude } => {
                Array2::from_elem((n, n), Complex64::new(amplitude.unwrap_or(1.0), 0.0))
            }
            ObjectSpec::Pinhole => {
                let mut t = Array2::zeros((n, n));
                t[[n / 2, n / 2]] = Complex64::new(1.0, 0.0);
                t
            }
            ObjectSpec::Rect { x0, x1, y0, y1, amplitude } => {
                let a = Complex64::new(amplitude.unwrap_or(1.0), 0.0);
                let mut t = Array2::zeros((n, n));
                for iy in *y0..(*y1).min(n) {
                    for ix in *x0..(*x1).min(n) {
                        t[[iy, ix]] = a;
                    }
                }
                t
            }
        }
    }

    fn amplitude_ok(&self) -> bool {
        let a = match self {
            ObjectSpec::Clear { amplitude } | ObjectSpec::Rect { amplitude, .. } => {
                amplitude.unwrap_or(1.0)
            }
            ObjectSpec::Pinhole => 1.0,
        };
        (0.0..=1.0).contains(&a)
    }
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct HomSection {
    /// Gaussian packet exp(−z²/(2σ²)) truncated at ±half_width.
    pub sigma: f64,
    pub half_width: f64,
    /// Odd sample count across the packet axis.
    pub samples: usize,
    /// Scan d from 0 to d_max over `points` values.
    pub d_max: f64,
    pub points: usize,
}

/// Validate the whole scenario, returning every violated invariant.
pub fn validate(s: &Scenario) -> Vec<String> {
    let mut errs = Vec::new();
    // single-mode qiup and hom are zero-dimensional: no grid or crystal
    let gridless = s.protocol == "hom"
        || (s.protocol == "qiup"
            && s.qiup.as_ref().is_some_and(|q| q.variant == "single-mode"));
    match &s.grid {
        None if !gridless => {
            errs.push("section [grid] is required for this protocol".into())
        }
        Some(g) => {
            if g.n < 4 || g.n % 2 != 0 {
                errs.push(format!("grid.n must be an even number ≥ 4, got {}", g.n));
            }
            if !(g.dx > 0.0) {
                errs.push(format!("grid.dx must be positive, got {}", g.dx));
            }
        }
        None => {}
    }

    let known = ["raw", "gi", "qiup", "holography", "hom"];
    if !known.contains(&s.protocol.as_str()) {
        errs.push(format!(
            "protocol must be one of raw|gi|qiup|holography|hom, got {:?}",
            s.protocol
        ));
    }
    let tables = [
        ("gi", s.gi.is_some()),
        ("qiup", s.qiup.is_some()),
        ("holography", s.holography.is_some()),
        ("hom", s.hom.is_some()),
    ];
    for (name, present) in tables {
        if present && s.protocol != name {
            errs.push(format!(
                "section [{name}] present but protocol is {:?}: exactly one protocol selector",
                s.protocol
            ));
        }
        if !present && s.protocol == name {
            errs.push(format!("protocol is {:?} but section [{name}] is missing", s.protocol));
        }
    }

    if !gridless && s.crystal.is_none() {
        errs.push("section [crystal] is required for this protocol".into());
    }
    if let Some(c) = &s.crystal {
        if !(c.length > 0.0) {
            errs.push(format!("crystal length must be positive, got {}", c.length));
        }
        if !(c.n_o > 0.0) {
            errs.push(format!("crystal n_o must be positive, got {}", c.n_o));
        }
        if !(c.eta.unwrap_or(c.n_o) > 0.0) {
            errs.push("crystal eta must be positive".into());
        }
        if !(c.lambda_s > 0.0) {
            errs.push(format!("crystal lambda_s must be positive, got {}", c.lambda_s));
        }
        if !(c.lambda_i.unwrap_or(c.lambda_s) > 0.0) {
            errs.push("crystal lambda_i must be positive".into());
        }
        let pms = ["type1-degenerate", "type1-nondegenerate", "type2-beamlike", "thin"];
        if !pms.contains(&c.pm.as_str()) {
            errs.push(format!(
                "crystal pm must be one of {}, got {:?}",
                pms.join("|"),
                c.pm
            ));
        }
    }

    if let Some(gi) = &s.gi {
        if !["detection-path", "object-path"].contains(&gi.placement.as_str()) {
            errs.push(format!(
                "gi placement must be detection-path or object-path, got {:?}",
                gi.placement
            ));
        }
        if !(gi.magnification > 0.0) {
            errs.push(format!("gi magnification must be positive, got {}", gi.magnification));
        }
        if !gi.object.amplitude_ok() {
            errs.push("gi object amplitude must lie in [0, 1]".into());
        }
    }

    if let Some(q) = &s.qiup {
        match q.variant.as_str() {
            "momentum" => {
                for (name, v) in [("f1", q.f1), ("f2", q.f2), ("f3", q.f3)] {
                    if !(v.unwrap_or(0.0) > 0.0) {
                        errs.push(format!("qiup {name} must be set and positive"));
                    }
                }
                require_imaging_fields(q, &mut errs);
            }
            "position" => {
                for (name, v) in [("m2", q.m2), ("m4", q.m4), ("m6", q.m6)] {
                    if !(v.unwrap_or(0.0) > 0.0) {
                        errs.push(format!("qiup {name} must be set and positive"));
                    }
                }
                require_imaging_fields(q, &mut errs);
            }
            "single-mode" => {
                let t = q.transmission.unwrap_or(-1.0);
                if !(0.0..=1.0).contains(&t) {
                    errs.push("qiup transmission must be set within [0, 1]".into());
                }
            }
            other => {
                errs.push(format!(
                    "qiup variant must be momentum|position|single-mode, got {other:?}"
                ));
            }
        }
    }

    if let Some(h) = &s.holography {
        if !(h.lens_f > 0.0) {
            errs.push(format!("holography lens_f must be positive, got {}", h.lens_f));
        }
    }

    if let Some(h) = &s.hom {
        if !(h.sigma > 0.0) {
            errs.push(format!("hom sigma must be positive, got {}", h.sigma));
        }
        if !(h.half_width > 0.0) {
            errs.push(format!("hom half_width must be positive, got {}", h.half_width));
        }
        if h.samples < 3 || h.samples % 2 == 0 {
            errs.push(format!("hom samples must be an odd count ≥ 3, got {}", h.samples));
        }
        if !(h.d_max >= 0.0) {
            errs.push(format!("hom d_max must be ≥ 0, got {}", h.d_max));
        }
        if h.points < 2 {
            errs.push(format!("hom points must be ≥ 2, got {}", h.points));
        }
    }

    errs
}

fn require_imaging_fields(q: &QiupSection, errs: &mut Vec<String>) {
    if !(q.pump_waist.unwrap_or(0.0) > 0.0) {
        errs.push("qiup pump_waist must be set and positive".into());
    }
    match &q.object {
        None => errs.push("qiup object must be set for imaging variants".into()),
        Some(o) if !o.amplitude_ok() => {
            errs.push("qiup object amplitude must lie in [0, 1]".into())
        }
        _ => {}
    }
}

impl Scenario {
    pub fn grid2d(&self) -> anyhow::Result<Grid2D> {
        let g = self
            .grid
            .ok_or_else(|| anyhow::anyhow!("scenario has no [grid] section"))?;
        Ok(Grid2D::square(g.n, g.dx)?)
    }

    pub fn crystal_spec(&self) -> anyhow::Result<CrystalSpec> {
        let c = self
            .crystal
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("scenario has no [crystal] section"))?;
        let ls = c.lambda_s;
        let li = c.lambda_i.unwrap_or(ls);
        let lp = 1.0 / (1.0 / ls + 1.0 / li);
        let pm = match c.pm.as_str() {
            "type1-degenerate" => PmType::TypeICollinearDegenerate,
            "type1-nondegenerate" => PmType::TypeICollinearNondegenerate,
            "type2-beamlike" => PmType::TypeIIBeamlike,
            "thin" => PmType::Thin,
            other => anyhow::bail!("unknown phase matching {other:?}"),
        };
        Ok(CrystalSpec::new(
            c.length,
            c.n_o,
            c.eta.unwrap_or(c.n_o),
            c.alpha.unwrap_or(0.0),
            lp,
            ls,
            li,
            pm,
        )?)
    }
}
