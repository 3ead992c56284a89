use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_awp-lab"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "command {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Pull "value" out of a manifest metric without a JSON dependency tree:
/// the manifest is pretty-printed with one key per line.
fn metric(manifest: &str, name: &str) -> f64 {
    let idx = manifest.find(&format!("\"{name}\"")).expect(name);
    let tail = &manifest[idx..];
    let v = tail.split("\"value\":").nth(1).expect("value field");
    v.split([',', '\n']).next().unwrap().trim().parse().unwrap()
}

#[test]
fn ssi_kernel_scenario_reproduces_the_kernel_width() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_ok(&["run", "ssi-kernel", "--output-dir", out.to_str().unwrap()]);
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    let psf = metric(&manifest, "psf_fwhm");
    let want = 0.770 * (2e-3 * 702e-9 / 1.66f64).sqrt();
    assert!((psf / want - 1.0).abs() < 0.01, "psf {psf} vs {want}");
    assert!(manifest.contains("\"unit\": \"m\""));
    assert!(manifest.contains("config_sha256"));
    assert!(out.join("image.awpf").exists());

    // identical scenario → bit-identical manifest
    let out2 = dir.path().join("run2");
    run_ok(&["run", "ssi-kernel", "--output-dir", out2.to_str().unwrap()]);
    let again = std::fs::read(out2.join("manifest.json")).unwrap();
    assert_eq!(manifest.as_bytes(), &again[..], "manifest is not deterministic");
}

#[test]
fn hom_dip_scan_vanishes_at_zero_delay() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["run", "hom-dip", "--output-dir", dir.path().to_str().unwrap()]);
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "d_meters,coincidence_probability");
    let first = lines.next().unwrap();
    let p0: f64 = first.split(',').nth(1).unwrap().parse().unwrap();
    assert!(p0 < 1e-9, "P(0) = {p0}");
}

#[test]
fn invalid_scenario_exits_2_and_names_every_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        r#"
            name = "bad"
            protocol = "gi"
            [grid]
            n = 16
            dx = 1e-6
            [crystal]
            pm = "type1-degenerate"
            length = -2e-3
            n_o = 1.66
            lambda_s = 702e-9
            [gi]
            placement = "detection-path"
            magnification = 0.0
            object = { kind = "pinhole" }
        "#,
    )
    .unwrap();
    let out = bin().args(["run", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("crystal length must be positive"), "{err}");
    assert!(err.contains("magnification must be positive"), "{err}");
}

#[test]
fn oracle_compare_passes_bundled_checks_and_rejects_oversize_grids() {
    for name in ["oracle-degenerate", "oracle-beamlike", "oracle-thin"] {
        let out = run_ok(&["oracle-compare", name]);
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("pass"), "{name}: {text}");
    }
    let out = bin()
        .args(["oracle-compare", "oracle-degenerate", "--grid-override", "128:1.15e-6"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("64×64"), "limits not stated: {err}");
}

#[test]
fn list_scenarios_and_field_info_round_trip() {
    let out = run_ok(&["list-scenarios"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["ssi-kernel", "hom-dip", "qiup-single-mode"] {
        assert!(text.contains(name), "{text}");
    }

    let dir = tempfile::tempdir().unwrap();
    run_ok(&["run", "ssi-kernel", "--output-dir", dir.path().to_str().unwrap()]);
    let dump = dir.path().join("image.awpf");
    assert!(Path::new(&dump).exists());
    let out = run_ok(&["dump-field-info", dump.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("128×128"), "{text}");
    assert!(text.contains("wavelength"), "{text}");
}

#[test]
fn grid_override_applies_and_bad_formats_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "run",
        "ssi-kernel",
        "--grid-override",
        "64:2.8e-6",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    let out = run_ok(&["dump-field-info", dir.path().join("image.awpf").to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("64×64"));

    let out = bin()
        .args(["run", "ssi-kernel", "--grid-override", "nonsense"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
