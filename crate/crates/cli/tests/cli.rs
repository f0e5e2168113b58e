use std::fs;
use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use wulff_core::mesh::{export_mesh, generate_levelset_mesh, MeshFormat, QuadricLevelSet, ReferenceElement};
use wulff_flow::output::{parse_csv, ENERGY_HEADER};
use wulff_flow::run::RunSummary;
use wulff_flow::study::{eoc, tabulate, StudyKind};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wulff-flow"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"
density = "cubic:0.01,30"
refinement = 1
tau = 1e-3
final_time = 0.003
output = "out"
snapshot_times = [0.0, 0.003]
[geometry]
kind = "ellipsoid"
eps = 1.0
"#;

fn exit_code(args: &[&str]) -> i32 {
    bin().args(args).output().unwrap().status.code().unwrap()
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(exit_code(&["run", dir.path().join("missing.toml").to_str().unwrap()]), 2);
    for bad in [SMALL.replace("tau = 1e-3", "tau = 0.0"), format!("colour = \"red\"\n{SMALL}"), SMALL.replace("cubic:0.01,30", "cubic:x")] {
        let cfg = write_config(dir.path(), &bad);
        assert_eq!(exit_code(&["run", cfg.to_str().unwrap()]), 2, "{bad}");
    }
    // a study needs the exact solution
    let cfg = write_config(dir.path(), SMALL);
    assert_eq!(exit_code(&["converge-space", cfg.to_str().unwrap(), "--levels", "1,2", "--tau", "1e-3"]), 2);
    assert_eq!(exit_code(&["wulff", "--density", "nonsense", "--out", dir.path().to_str().unwrap()]), 2);
}

#[test]
fn zero_final_time_logs_the_initial_state_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("final_time = 0.003", "final_time = 0.0").replace("[0.0, 0.003]", "[0.0]"));
    assert_eq!(exit_code(&["run", cfg.to_str().unwrap()]), 0);
    let text = fs::read_to_string(dir.path().join("out/energy.csv")).unwrap();
    let (header, rows) = parse_csv(&text).unwrap();
    assert_eq!(header.join(","), ENERGY_HEADER);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], 0.0);
    assert!(dir.path().join("out/snap_0.vtk").exists());
}

#[test]
fn run_writes_logs_snapshots_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = bin().args(["run", cfg.to_str().unwrap(), "--dump-matrices"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("out");
    for f in ["energy.csv", "diag.json", "snap_0.vtk", "snap_0.003.vtk", "mass.mtx", "stiffness.mtx"] {
        assert!(o.join(f).exists(), "{f}");
    }
    assert!(fs::read_to_string(o.join("mass.mtx")).unwrap().starts_with("%%MatrixMarket"));
    let diag: serde_json::Value = serde_json::from_str(&fs::read_to_string(o.join("diag.json")).unwrap()).unwrap();
    let config = diag["config"].as_object().unwrap();
    for key in [
        "density",
        "kinetic",
        "geometry",
        "degree",
        "refinement",
        "order",
        "tau",
        "final_time",
        "stabilized",
        "normalize_normals",
        "output",
        "snapshot_times",
        "snapshot_format",
        "dump_matrices",
        "solver",
        "reference",
    ] {
        assert!(config.contains_key(key), "{key}");
    }
    assert_eq!(diag["summary"]["steps_completed"], 3);
    assert!(diag["summary"]["aborted"].is_null());
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let read = || {
        assert_eq!(exit_code(&["run", cfg.to_str().unwrap()]), 0);
        fs::read_to_string(dir.path().join("out/energy.csv")).unwrap()
    };
    assert_eq!(read(), read());
}

#[test]
fn runtime_failures_exit_with_three() {
    // the solver refuses an iteration cap below the system size at the
    // first step, after the configuration has been accepted
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}\n[solver]\nmax_iterations = 1\n"));
    assert_eq!(exit_code(&["run", cfg.to_str().unwrap()]), 3);
    let text = fs::read_to_string(dir.path().join("out/energy.csv")).unwrap();
    assert_eq!(parse_csv(&text).unwrap().1.len(), 1);
}

#[test]
fn mesh_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let r = std::sync::Arc::new(ReferenceElement::with_default_quadrature(1).unwrap());
    let mesh = generate_levelset_mesh(&QuadricLevelSet::sphere(1.0), 2, r).unwrap();
    export_mesh(&mesh, &dir.path().join("sphere.off"), MeshFormat::Off).unwrap();
    let body = SMALL.replace("kind = \"ellipsoid\"\neps = 1.0", "kind = \"mesh\"\npath = \"sphere.off\"").replace("cubic:0.01,30", "isotropic");
    let cfg = write_config(dir.path(), &body);
    let out = bin().args(["run", cfg.to_str().unwrap()]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn radii(path: &Path) -> (f64, f64) {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .filter_map(|l| l.strip_prefix("v "))
        .map(|l| l.split_whitespace().map(|c| c.parse::<f64>().unwrap() * c.parse::<f64>().unwrap()).sum::<f64>().sqrt())
        .fold((f64::INFINITY, 0.0), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

#[test]
fn wulff_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let iso = dir.path().join("iso");
    assert_eq!(exit_code(&["wulff", "--density", "isotropic", "--out", iso.to_str().unwrap(), "--resolution", "16"]), 0);
    assert_eq!(exit_code(&["wulff", "--density", "isotropic", "--out", iso.to_str().unwrap(), "--resolution", "4"]), 2);
    for f in ["frank.obj", "wulff.obj"] {
        let (lo, hi) = radii(&iso.join(f));
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }
    // γ(w) = √(w·Gw) has the ellipsoid with semi-axes √G_ii as Wulff shape
    let ell = dir.path().join("ell");
    assert_eq!(exit_code(&["wulff", "--density", "ellipsoidal:1,0.25,0.25", "--out", ell.to_str().unwrap()]), 0);
    let (lo, hi) = radii(&ell.join("wulff.obj"));
    assert!((lo - 0.5).abs() < 1e-8 && (hi - 1.0).abs() < 1e-8, "{lo} {hi}");
    let (lo, hi) = radii(&ell.join("frank.obj"));
    assert!((lo - 1.0).abs() < 1e-8 && (hi - 2.0).abs() < 1e-8, "{lo} {hi}");
}

#[test]
fn compare_stabilization_writes_both_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    assert_eq!(exit_code(&["compare-stabilization", cfg.to_str().unwrap()]), 0);
    let o = dir.path().join("out");
    let (_, rows) = {
        let text = fs::read_to_string(o.join("comparison.csv")).unwrap();
        let mut lines = text.lines();
        let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
        (header, lines.count())
    };
    assert_eq!(rows, 2);
    assert!(o.join("stabilized/energy.csv").exists() && o.join("unstabilized/energy.csv").exists());
}

#[test]
fn tiny_convergence_study() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
density = "ellipsoidal:1,0.25,0.25"
kinetic = "inverse_gamma"
tau = 1e-3
final_time = 0.01
output = "study"
[geometry]
kind = "ellipsoid"
eps = 0.5
[reference]
"#;
    let cfg = write_config(dir.path(), body);
    let out = bin().args(["converge-time", cfg.to_str().unwrap(), "--taus", "2e-3,1e-3", "--level", "1"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("study");
    assert!(o.join("eoc.csv").exists() && o.join("tau_0.001/errors.csv").exists() && o.join("diag.json").exists());
    let eoc_text = fs::read_to_string(o.join("eoc.csv")).unwrap();
    assert_eq!(eoc_text.lines().count(), 3);
}

fn summary(h: f64, e: f64) -> RunSummary {
    RunSummary { mesh_width: h, max_interp_h1: Some(e), max_exact_h1: Some(e), ..Default::default() }
}

proptest! {
    #[test]
    fn eoc_recovers_power_laws(c in 1e-6f64..1e3, p in 0.5f64..5.0, h in 0.01f64..1.0, ratio in 1.2f64..4.0) {
        let (e0, e1) = (c * h.powf(p), c * (h / ratio).powf(p));
        prop_assert!((eoc(e0, e1, h, h / ratio) - p).abs() < 1e-9);
    }

    #[test]
    fn eoc_is_invariant_under_error_scaling(scale in 1e-6f64..1e6, e in proptest::collection::vec(1e-6f64..1.0, 3)) {
        let hs = [0.4, 0.2, 0.1];
        let base: Vec<_> = hs.iter().zip(&e).map(|(&h, &e)| summary(h, e)).collect();
        let scaled: Vec<_> = hs.iter().zip(&e).map(|(&h, &e)| summary(h, e * scale)).collect();
        let a = tabulate(StudyKind::Space, 2.0, &base.iter().map(|s| (String::new(), s, 1e-3)).collect::<Vec<_>>());
        let b = tabulate(StudyKind::Space, 2.0, &scaled.iter().map(|s| (String::new(), s, 1e-3)).collect::<Vec<_>>());
        for (x, y) in a.headline_eocs().iter().zip(b.headline_eocs()) {
            prop_assert!((x.unwrap() - y.unwrap()).abs() < 1e-9);
        }
    }
}
