//! awp-lab: run advanced-wave-picture scenarios from TOML descriptions and
//! emit reproducible manifests, field dumps and plot-ready CSV.

mod compare;
mod run;
mod scenario;

use clap::{Parser, Subcommand};
use run::RunOptions;
use scenario::{GridSpec, Scenario};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const BUNDLED: &[(&str, &str)] = &[
    ("ssi-kernel", include_str!("../scenarios/ssi-kernel.toml")),
    ("hom-dip", include_str!("../scenarios/hom-dip.toml")),
    ("qiup-single-mode", include_str!("../scenarios/qiup-single-mode.toml")),
    ("oracle-degenerate", include_str!("../scenarios/oracle-degenerate.toml")),
    ("oracle-beamlike", include_str!("../scenarios/oracle-beamlike.toml")),
    ("oracle-thin", include_str!("../scenarios/oracle-thin.toml")),
];

#[derive(Parser)]
#[command(name = "awp-lab", version, about)]
struct Cli {
    /// Worker threads (falls back to AWP_LAB_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Where to write artifacts (default: awp-out/<scenario name>).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Replace the scenario grid, format N:DX e.g. 64:2e-6.
    #[arg(long, global = true)]
    grid_override: Option<String>,
    /// Also emit cross-section CSV files for plotting.
    #[arg(long, global = true)]
    emit_plots_data: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a scenario (a TOML path or a bundled name).
    Run { scenario: String },
    /// Check the scenario's kernel against the brute-force volume integral.
    OracleCompare { scenario: String },
    /// List the bundled scenarios.
    ListScenarios,
    /// Print grid and normalization info for a field dump.
    DumpFieldInfo { file: PathBuf },
}

/// Exit 0 on success, 1 on a runtime/numeric failure, 2 on validation.
fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("AWP_LAB_THREADS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        // ignore the error when a pool already exists (e.g. repeated calls)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }

    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<ExitCode> {
    match &cli.cmd {
        Cmd::Run { scenario } => {
            let (s, text) = match load_scenario(scenario, &cli.grid_override) {
                Ok(v) => v,
                Err(msgs) => return Ok(report_validation(&msgs)),
            };
            let opts = RunOptions {
                output_dir: cli.output_dir.clone(),
                emit_plots_data: cli.emit_plots_data,
            };
            let manifest = run::run_scenario(&s, &text, &opts)?;
            println!("wrote {}", manifest.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::OracleCompare { scenario } => {
            let (s, _) = match load_scenario(scenario, &cli.grid_override) {
                Ok(v) => v,
                Err(msgs) => return Ok(report_validation(&msgs)),
            };
            if let Some(g) = &s.grid {
                if g.n > compare::MAX_GRID {
                    return Ok(report_validation(&[format!(
                        "grid {n}×{n} exceeds the oracle limit of {m}×{m} \
                         (z nodes are fixed at {z})",
                        n = g.n,
                        m = compare::MAX_GRID,
                        z = compare::Z_NODES,
                    )]));
                }
            }
            let pass = compare::oracle_compare(&s)?;
            Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::ListScenarios => {
            for (name, text) in BUNDLED {
                let first = text
                    .lines()
                    .find(|l| l.starts_with('#'))
                    .map(|l| l.trim_start_matches('#').trim())
                    .unwrap_or("");
                println!("{name:<20} {first}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::DumpFieldInfo { file } => {
            let mut f = std::fs::File::open(file)?;
            let field = awp_core::io::read_field(&mut f)?;
            let g = field.grid;
            let norm: f64 =
                field.amp.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.pixel_area();
            let peak = field.amp.iter().map(|v| v.norm()).fold(0.0, f64::max);
            println!("grid: {}×{} pixels, pitch {:.6e} × {:.6e} m", g.nx, g.ny, g.dx, g.dy);
            println!("wavelength: {:.6e} m", field.lambda_vac);
            println!("norm (L2): {norm:.6e}");
            println!("peak magnitude: {peak:.6e}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn report_validation(msgs: &[String]) -> ExitCode {
    eprintln!("scenario validation failed:");
    for m in msgs {
        eprintln!("  - {m}");
    }
    ExitCode::from(2)
}

/// Resolve a path or bundled name, parse, apply overrides and validate;
/// on failure return every violation found.
fn load_scenario(
    arg: &str,
    grid_override: &Option<String>,
) -> Result<(Scenario, String), Vec<String>> {
    let text = if Path::new(arg).exists() {
        std::fs::read_to_string(arg)
            .map_err(|e| vec![format!("cannot read {arg}: {e}")])?
    } else if let Some((_, t)) = BUNDLED.iter().find(|(n, _)| n == &arg) {
        t.to_string()
    } else {
        return Err(vec![format!(
            "{arg:?} is neither a file nor a bundled scenario (see list-scenarios)"
        )]);
    };
    let mut s: Scenario =
        toml::from_str(&text).map_err(|e| vec![format!("parse error: {e}")])?;
    if let Some(ov) = grid_override {
        let (n, dx) = ov
            .split_once(':')
            .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
            .ok_or_else(|| {
                vec![format!("--grid-override must look like 64:2e-6, got {ov:?}")]
            })?;
        s.grid = Some(GridSpec { n, dx });
    }
    let errs = scenario::validate(&s);
    if errs.is_empty() {
        Ok((s, text))
    } else {
        Err(errs)
    }
}
