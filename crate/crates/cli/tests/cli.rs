use std::path::Path;
use std::process::{Command, Output};

use mcflow_core::{GridField, Params, PlaneSpec, RunConfig, ScalarField, SubSolution};

fn mcflow(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_mcflow"))
        .arg("--config")
        .arg(&cfg)
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn eikonal_of_opposite_planes() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflow(
        dir.path(),
        "[planes]\nangles = [0.0, 3.141592653589793]\n[sample]\nkind = \"points\"\npoints = [[3.0, 5.0]]\n",
        &["eval", "eikonal"],
    );
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("x1,x2,value\n"));
    let v = rows(&out)[0][2];
    assert!((v + 3.0).abs() < 1e-12, "{v}");
}

#[test]
fn planar_cone_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflow(
        dir.path(),
        "[params]\nalpha = 1.5707963267948966\n[sample]\nradii = [0.0, 0.5, 10.0, 300.0]\n",
        &["eval", "cone"],
    );
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("r,v,phi_c\n"));
    let r = rows(&out);
    assert_eq!(r.len(), 4);
    assert!(r.iter().all(|row| row[1] == 0.0 && row[2] == 0.0));
}

#[test]
fn sub_grid_matches_library_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[planes]\nequispaced = 2\n[measure]\nfrom_planes = true\n[sample]\nkind = \"grid\"\nnx = 101\nny = 101\n";
    let o = mcflow(dir.path(), text, &["eval", "sub"]);
    assert!(o.status.success());
    let cfg = RunConfig::parse(text).unwrap();
    let sub = SubSolution::new(cfg.measure().unwrap(), cfg.params().unwrap()).unwrap();
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 101 * 101);
    for row in r {
        assert_eq!(row[2].to_bits(), sub.value(&row[..2]).unwrap().to_bits());
    }
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[measure]\natoms = [[0.3, 1.0], [2.0, 0.5]]\narcs = [[3.0, 4.0]]\n[sample]\nnx = 21\nny = 21\n";
    let a = mcflow(dir.path(), text, &["eval", "sub", "--out", "a.csv"]);
    let b = mcflow(dir.path(), text, &["eval", "sub", "--out", "b.csv"]);
    assert!(a.status.success() && b.status.success());
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert!(a.len() > 21 * 21 * 10);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflow(dir.path(), "[params]\nalpah = 0.5\n", &["eval", "cone"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpah"));
    let o = mcflow(dir.path(), "", &["eval", "eikonal"]);
    assert_eq!(o.status.code(), Some(2));
    let o = mcflow(dir.path(), "[params]\nalpha = 2.0\n", &["eval", "cone"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflow(
        dir.path(),
        "[planes]\nequispaced = 3\n[solve]\nhalf_width = 4.0\nh = 0.2\nmax_iters = 2\n",
        &["solve"],
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn solve_writes_binary_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflow(
        dir.path(),
        "[planes]\nequispaced = 3\n[solve]\nhalf_width = 4.0\nh = 0.2\n",
        &["solve", "--out", "field.bin"],
    );
    assert!(o.status.success());
    let f = std::fs::read(dir.path().join("field.bin")).unwrap();
    let g = GridField::read_binary(&f[..]).unwrap();
    assert_eq!((g.nx(), g.ny()), (41, 41));
    let p = Params::new(std::f64::consts::FRAC_PI_4, 1.0, 3).unwrap();
    let spec = PlaneSpec::equispaced(p, 3, 0.0, 1.0 / 3.0).unwrap();
    assert_eq!(g.get(0, 0), spec.value(&g.point(0, 0)).unwrap());
}

#[test]
fn verify_subsolution_passes_with_default_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflow(dir.path(), "", &["verify", "subsolution"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 4);
    assert!(out.contains("seed 0"));
    let o = mcflow(dir.path(), "", &["verify", "subsolution", "--seed", "11"]);
    assert!(stdout(&o).contains("seed 11"));
}

#[test]
fn verify_laplace_prints_remainder_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflow(
        dir.path(),
        "[laplace]\nradii = [25.0, 50.0, 100.0, 200.0]\n",
        &["verify", "laplace"],
    );
    assert!(o.status.success());
    let out = stdout(&o);
    for r in ["# 25,", "# 50,", "# 100,", "# 200,"] {
        assert!(out.contains(r), "{out}");
    }
    assert!(!out.contains("FAIL"));
}

#[test]
fn verify_sandwich_reports_gap_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflow(
        dir.path(),
        "[params]\nalpha = 1.5707963267948966\n[solve]\nhalf_width = 3.0\nh = 0.25\n[verify]\nk = [3]\n",
        &["verify", "sandwich"],
    );
    let out = stdout(&o);
    assert!(o.status.success(), "{out}");
    assert!(out.contains("gap bound -2 ln k/(c0 sin a) = -2.197225"), "{out}");
}

#[test]
fn verify_exit_status_follows_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflow(dir.path(), "[verify]\nalphas = []\n", &["verify", "cone"]);
    let failed = stdout(&o).lines().any(|l| l.starts_with("FAIL"));
    assert_eq!(o.status.code(), Some(if failed { 1 } else { 0 }));
}

#[test]
fn figures_cover_three_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflow(dir.path(), "[figures]\nn = 11\nn_radii = 40\n", &["figures", "--out", "fig"]);
    assert!(o.status.success());
    let fig = dir.path().join("fig");
    for tag in ["0_lt_pi", "1_eq_pi", "2_gt_pi"] {
        assert!(fig.join(format!("arc_{tag}.csv")).exists());
        assert!(fig.join(format!("ir_{tag}.csv")).exists());
    }
    let script = std::fs::read_to_string(fig.join("figures.gp")).unwrap();
    assert!(script.contains("arc_1_eq_pi.csv"));
    let nonempty = |tag: &str| -> Vec<f64> {
        rows(&std::fs::read_to_string(fig.join(format!("ir_{tag}.csv"))).unwrap())
            .iter()
            .map(|r| r[4])
            .collect()
    };
    // narrow sector: I_r empty near the origin, open for large r
    let narrow = nonempty("0_lt_pi");
    assert_eq!(narrow[0], 0.0);
    assert_eq!(*narrow.last().unwrap(), 1.0);
    // wide sector: I_r nonempty down to the smallest radius
    assert!(nonempty("2_gt_pi").iter().all(|&v| v == 1.0));
    let surface = rows(&std::fs::read_to_string(fig.join("arc_2_gt_pi.csv")).unwrap());
    assert_eq!(surface.len(), 121);
}
