//! Scenario execution: builds the configured protocol, runs it, and emits
//! field dumps, plot-ready CSV and a deterministic JSON manifest.

use crate::scenario::{PatternSpec, Scenario};
use anyhow::{bail, Context, Result};
use awp_core::field::ScalarField;
use awp_core::hom::{coincidence_scan, scan_to_csv, TemporalPacket};
use awp_core::io::write_field;
use awp_core::protocols::{
    center_row_fwhm, ghost_image, holography_run, qiup_run, qiup_single_mode,
    GhostImagingConfig, HolographyConfig, LensPlacement, QiupConfig, QiupVariant,
};
use awp_core::spdc::position_kernel;
use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Serialize)]
struct Metric {
    value: f64,
    unit: &'static str,
}

#[derive(Serialize)]
struct Manifest {
    scenario: String,
    protocol: String,
    version: &'static str,
    config_sha256: String,
    metrics: BTreeMap<String, Metric>,
    artifacts: Vec<String>,
}

pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub emit_plots_data: bool,
}

/// Write a file atomically: stage in a sibling temp file, then rename.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(dir.join(name))
        .with_context(|| format!("renaming into place: {name}"))?;
    Ok(())
}

fn row_csv(map: &Array2<f64>, grid: awp_core::field::Grid2D) -> String {
    let mut out = String::from("x_meters,value\n");
    let cy = grid.ny / 2;
    for ix in 0..grid.nx {
        out.push_str(&format!("{:.12e},{:.12e}\n", grid.x(ix), map[[cy, ix]]));
    }
    out
}

fn real_as_field(
    map: &Array2<f64>,
    grid: awp_core::field::Grid2D,
    lambda: f64,
) -> ScalarField {
    let mut f = ScalarField::zeros(grid, lambda);
    f.amp = map.mapv(|v| Complex64::new(v, 0.0));
    f
}

/// Execute a scenario and write its artifacts. Returns the manifest path.
pub fn run_scenario(s: &Scenario, raw_text: &str, opts: &RunOptions) -> Result<PathBuf> {
    let out_dir = opts
        .output_dir
        .clone()
        .or_else(|| s.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("awp-out").join(&s.name));
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let mut metrics = BTreeMap::new();
    let mut artifacts: Vec<String> = Vec::new();
    let mut put = |m: &mut BTreeMap<String, Metric>, k: &str, v: f64, unit: &'static str| {
        m.insert(k.to_string(), Metric { value: v, unit });
    };

    match s.protocol.as_str() {
        "raw" => {
            let grid = s.grid2d()?;
            let c = s.crystal_spec()?;
            let pump = ScalarField::from_fn(grid, c.lambda_p, |_, _| Complex64::new(1.0, 0.0));
            let kernel = position_kernel(&c, pump)?;
            let field =
                ScalarField::from_fn(grid, c.lambda_s, |x, y| kernel.corr_value(x, y));
            let inten = field.amp.mapv(|v| v.norm_sqr());
            put(&mut metrics, "kernel_fwhm", center_row_fwhm(&inten, grid)?, "m");
            let mut buf = Vec::new();
            write_field(&mut buf, &field)?;
            write_atomic(&out_dir, "kernel.awpf", &buf)?;
            artifacts.push("kernel.awpf".into());
            if opts.emit_plots_data {
                write_atomic(&out_dir, "kernel_row.csv", row_csv(&inten, grid).as_bytes())?;
                artifacts.push("kernel_row.csv".into());
            }
        }
        "gi" => {
            let gi = s.gi.as_ref().unwrap();
            let grid = s.grid2d()?;
            let cfg = GhostImagingConfig {
                crystal: s.crystal_spec()?,
                grid,
                placement: match gi.placement.as_str() {
                    "detection-path" => LensPlacement::DetectionPath,
                    _ => LensPlacement::ObjectPath,
                },
                magnification: gi.magnification,
                object: gi.object.build(grid.nx),
            };
            let lambda = cfg.crystal.lambda_s;
            let res = ghost_image(&cfg)?;
            put(&mut metrics, "psf_fwhm", res.psf_width, "m");
            put(&mut metrics, "magnification", gi.magnification, "dimensionless");
            put(&mut metrics, "image_total", res.image.sum(), "dimensionless");
            let mut buf = Vec::new();
            write_field(&mut buf, &real_as_field(&res.image, res.camera_grid, lambda))?;
            write_atomic(&out_dir, "image.awpf", &buf)?;
            artifacts.push("image.awpf".into());
            if opts.emit_plots_data {
                write_atomic(
                    &out_dir,
                    "image_row.csv",
                    row_csv(&res.image, res.camera_grid).as_bytes(),
                )?;
                artifacts.push("image_row.csv".into());
            }
        }
        "qiup" => {
            let q = s.qiup.as_ref().unwrap();
            if q.variant == "single-mode" {
                let t = q.transmission.unwrap();
                let bg = q.include_background.unwrap_or(true);
                let (frames, vis) = qiup_single_mode(t, bg)?;
                put(&mut metrics, "visibility", vis, "dimensionless");
                for (i, f) in frames.iter().enumerate() {
                    put(&mut metrics, &format!("frame_{i}"), *f, "dimensionless");
                }
            } else {
                let grid = s.grid2d()?;
                let crystal = s.crystal_spec()?;
                let variant = if q.variant == "momentum" {
                    QiupVariant::Momentum {
                        f1: q.f1.unwrap(),
                        f2: q.f2.unwrap(),
                        f3: q.f3.unwrap(),
                    }
                } else {
                    QiupVariant::Position {
                        m2: q.m2.unwrap(),
                        m4: q.m4.unwrap(),
                        m6: q.m6.unwrap(),
                    }
                };
                let lambda = crystal.lambda_s;
                let cfg = QiupConfig {
                    crystal,
                    grid,
                    variant,
                    pump_waist: q.pump_waist.unwrap(),
                    object: q.object.as_ref().unwrap().build(grid.nx),
                    include_background: q.include_background.unwrap_or(true),
                };
                let res = qiup_run(&cfg)?;
                put(&mut metrics, "visibility_median", res.visibility_median, "dimensionless");
                put(&mut metrics, "magnification", res.magnification, "dimensionless");
                put(
                    &mut metrics,
                    "fov",
                    center_row_fwhm(&res.interference_amp, res.camera_grid)? / res.magnification,
                    "m",
                );
                put(
                    &mut metrics,
                    "object_image_fwhm",
                    center_row_fwhm(&res.object_image, res.camera_grid)? / res.magnification,
                    "m",
                );
                let mut buf = Vec::new();
                write_field(
                    &mut buf,
                    &real_as_field(&res.object_image, res.camera_grid, lambda),
                )?;
                write_atomic(&out_dir, "object_image.awpf", &buf)?;
                artifacts.push("object_image.awpf".into());
                if opts.emit_plots_data {
                    write_atomic(
                        &out_dir,
                        "interference_row.csv",
                        row_csv(&res.interference_amp, res.camera_grid).as_bytes(),
                    )?;
                    artifacts.push("interference_row.csv".into());
                }
            }
        }
        "holography" => {
            let h = s.holography.as_ref().unwrap();
            let grid = s.grid2d()?;
            let c = s.crystal_spec()?;
            let n = grid.nx;
            let phase = match &h.pattern {
                PatternSpec::Zeros => Array2::zeros((n, n)),
                PatternSpec::Harmonic { amplitude, kx, ky } => {
                    Array2::from_shape_fn((n, n), |(iy, ix)| {
                        amplitude
                            * (2.0 * PI * kx * ix as f64 / n as f64).sin()
                            * (2.0 * PI * ky * iy as f64 / n as f64).cos()
                    })
                }
            };
            let cfg =
                HolographyConfig::new(grid, phase.clone(), h.lens_f, c.length, c.lambda_s, c.n_o)?;
            let res = holography_run(&cfg)?;
            let worst = res
                .retrieved_phase
                .indexed_iter()
                .map(|((iy, ix), &got)| {
                    let d = got - phase[[iy, ix]];
                    (-(-d + PI).rem_euclid(2.0 * PI) + PI).abs()
                })
                .fold(0.0f64, f64::max);
            put(&mut metrics, "phase_error_max", worst, "rad");
            let mut buf = Vec::new();
            write_field(
                &mut buf,
                &real_as_field(&res.retrieved_phase, res.camera_grid, c.lambda_s),
            )?;
            write_atomic(&out_dir, "retrieved_phase.awpf", &buf)?;
            artifacts.push("retrieved_phase.awpf".into());
            if opts.emit_plots_data {
                write_atomic(
                    &out_dir,
                    "retrieved_phase_row.csv",
                    row_csv(&res.retrieved_phase, res.camera_grid).as_bytes(),
                )?;
                artifacts.push("retrieved_phase_row.csv".into());
            }
        }
        "hom" => {
            let h = s.hom.as_ref().unwrap();
            let sigma = h.sigma;
            let packet = TemporalPacket::from_fn(h.half_width, h.samples, |z| {
                Complex64::new((-z * z / (2.0 * sigma * sigma)).exp(), 0.0)
            })?;
            let ds: Vec<f64> = (0..h.points)
                .map(|i| h.d_max * i as f64 / (h.points - 1) as f64)
                .collect();
            let scan = coincidence_scan(&packet, &ds);
            put(&mut metrics, "p_at_zero", scan[0].1, "dimensionless");
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &(_, p) in &scan {
                lo = lo.min(p);
                hi = hi.max(p);
            }
            put(&mut metrics, "p_min", lo, "dimensionless");
            put(&mut metrics, "p_max", hi, "dimensionless");
            write_atomic(&out_dir, "scan.csv", scan_to_csv(&scan).as_bytes())?;
            artifacts.push("scan.csv".into());
        }
        other => bail!("unknown protocol {other:?}"),
    }

    let manifest = Manifest {
        scenario: s.name.clone(),
        protocol: s.protocol.clone(),
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: format!("{:x}", Sha256::digest(raw_text.as_bytes())),
        metrics,
        artifacts,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    write_atomic(&out_dir, "manifest.json", json.as_bytes())?;
    Ok(out_dir.join("manifest.json"))
}
