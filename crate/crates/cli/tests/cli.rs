use std::path::Path;
use std::process::{Command, Output};

use fockmult::geometry::MultiSet;
use fockmult::transform::{reduce_set, DirectionRule};
use fockmult::{io, C64};
use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fockmult"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn density_of_unit_lattice() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.toml", "lattice_spacing = 1.0\nlattice_radius = 50.0\nradii = [20.0, 40.0]\n");
    let o = run(dir.path(), &["density", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let h = json(dir.path(), "density.json")["headline"].as_f64().unwrap();
    let oracle = 1.0 / std::f64::consts::PI;
    assert!((h - oracle).abs() <= 0.05 * oracle, "{h}");
    let csv = std::fs::read_to_string(dir.path().join("out/density.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("r,lower,upper"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn density_input_errors() {
    let dir = TempDir::new().unwrap();
    let empty = write(dir.path(), "empty.csv", "");
    let o = run(dir.path(), &["density", "--set", &empty]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"));

    let bad = write(dir.path(), "bad.csv", "re,im\n0,0\n1,oops\n");
    let o = run(dir.path(), &["density", "--set", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let cfg = write(dir.path(), "c.toml", "lattice_spacing = 1.0\nspacing = 2.0\n");
    let o = run(dir.path(), &["density", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown field"));

    let cfg = write(dir.path(), "neg.toml", "lattice_spacing = -1.0\n");
    assert_eq!(run(dir.path(), &["density", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["density"]).status.code(), Some(2));
}

#[test]
fn interp_residuals() {
    let dir = TempDir::new().unwrap();
    let set = write(dir.path(), "one.csv", "0.5,0.25,3\n");
    let data = write(dir.path(), "d.csv", "0.5,0.25,0,1,0\n0.5,0.25,1,0,1\n0.5,0.25,2,0.3,-0.2\n");
    let o = run(dir.path(), &["interp", "--set", &set, "--data", &data]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(dir.path(), "interp.json");
    assert!(r["max_residual"].as_f64().unwrap() < 1e-7);
    assert_eq!(r["points"][0]["residuals"].as_array().unwrap().len(), 3);

    let zero = write(dir.path(), "z.csv", "");
    let o = run(dir.path(), &["interp", "--set", &set, "--data", &zero]);
    assert!(o.status.success());
    assert_eq!(json(dir.path(), "interp.json")["max_residual"].as_f64(), Some(0.0));

    let over = write(dir.path(), "o.csv", "0.5,0.25,3,1,0\n");
    let o = run(dir.path(), &["interp", "--set", &set, "--data", &over]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("multiplicity"));
}

#[test]
fn interp_global_solve_on_sparse_lattice() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "lattice_spacing = 2.0\nlattice_radius = 3.0\nlattice_mult = 2\nglobal = true\ndegree = 30\nseed = 9\n",
    );
    let o = run(dir.path(), &["interp", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(dir.path(), "interp.json");
    assert!(r["relative_residual"].as_f64().unwrap() < 1e-7);
    assert!(r["points"].as_array().unwrap().iter().all(|p| p["inconclusive"] == false));
    assert_eq!(r["global"]["feasible"], true);
}

#[test]
fn sample_reports() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.toml", "lattice_spacing = 0.5\nlattice_radius = 6.0\ndegree = 20\n");
    let o = run(dir.path(), &["sample", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(dir.path(), "sample.json");
    assert!(r["a"].as_f64().unwrap() > 0.0);
    assert_eq!(r["stable"], true);

    let empty = write(dir.path(), "e.csv", "");
    let o = run(dir.path(), &["sample", "--set", &empty]);
    assert!(o.status.success());
    let r = json(dir.path(), "sample.json");
    assert_eq!((r["a"].as_f64(), r["b"].as_f64()), (Some(0.0), Some(0.0)));

    let cfg = write(dir.path(), "big.toml", "lattice_spacing = 0.5\nlattice_radius = 6.0\ndegree = 500\n");
    let o = run(dir.path(), &["sample", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("lower N"), "{}", stderr(&o));
}

#[test]
fn reduce_lattice() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "lattice_spacing = 0.6\nlattice_radius = 8.0\nlattice_mult = 2\nepsilon = 0.05\n",
    );
    let o = run(dir.path(), &["reduce", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(dir.path(), "reduce.json");
    assert_eq!(r["mass_conserved"], true);
    assert_eq!(r["max_mult_after"], 1);
    assert!(r["satellites"].as_u64().unwrap() > 0);
    assert_eq!(r["density_match"]["within_tolerance"], true);
    assert_eq!(r["density_match"]["sandwich_violations"], 0);
    assert!(r["preservation"]["ratio"].as_f64().unwrap() >= 0.2);

    // the emitted set re-ingests to exactly the library's reduction
    let emitted = io::read_point_set_file(dir.path().join("out/reduced.csv")).unwrap();
    let lattice = MultiSet::square_lattice(0.6, 8.0, 2).unwrap();
    let plan = reduce_set(&lattice, 0.05, DirectionRule::Fixed(C64::new(1.0, 0.0))).unwrap();
    assert_eq!(emitted, plan.reduced);

    let cfg = write(dir.path(), "m1.toml", "lattice_spacing = 0.6\nlattice_radius = 4.0\n");
    let o = run(dir.path(), &["reduce", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nothing to reduce"));

    let cfg = write(
        dir.path(),
        "far.toml",
        "lattice_spacing = 0.6\nlattice_radius = 4.0\nlattice_mult = 2\nepsilon = 0.3\n",
    );
    assert_eq!(run(dir.path(), &["reduce", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn seeded_outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "lattice_spacing = 1.0\nlattice_radius = 4.0\nlattice_mult = 3\ndirection = \"random\"\npreservation = false\n",
    );
    let read = |d: &Path| std::fs::read_to_string(d.join("out/reduced.csv")).unwrap();
    assert!(run(dir.path(), &["reduce", "--config", &cfg, "--seed", "11"]).status.success());
    let a = read(dir.path());
    assert!(run(dir.path(), &["reduce", "--config", &cfg, "--seed", "11"]).status.success());
    assert_eq!(a, read(dir.path()));
    assert!(run(dir.path(), &["reduce", "--config", &cfg, "--seed", "12"]).status.success());
    assert_ne!(a, read(dir.path()));
}

fn crossing(dir: &Path, degree: usize) -> f64 {
    let r = json(dir, "scan.json");
    let entry = r["collapse"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["degree"] == degree)
        .unwrap()
        .clone();
    entry["interval"]["s_cross"].as_f64().expect("collapse located")
}

#[test]
fn scan_locates_collapse() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.toml", "spacing_min = 0.8\nspacing_max = 1.3\nspacing_steps = 11\n");
    let o = run(dir.path(), &["scan", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    for n in [15, 25] {
        let s = crossing(dir.path(), n);
        assert!((s - 1.0).abs() <= 0.1, "N={n}: {s}");
    }
    let csv = std::fs::read_to_string(dir.path().join("out/scan.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("s,density,A,B,N,R"));
    assert_eq!(csv.lines().count(), 1 + 22);

    let cfg = write(dir.path(), "m2.toml", "multiplicity = 2\nspacing_steps = 11\ndegrees = [25]\n");
    let o = run(dir.path(), &["scan", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = crossing(dir.path(), 25);
    assert!((s - 2f64.sqrt()).abs() <= 0.1 * 2f64.sqrt(), "{s}");
}

#[test]
fn scan_single_spacing() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.toml", "spacings = [1.0]\ndegrees = [15]\n");
    let o = run(dir.path(), &["scan", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}
