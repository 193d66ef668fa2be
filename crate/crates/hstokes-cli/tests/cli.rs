//! End-to-end CLI tests: exit codes, output artifacts and byte-level
//! reproducibility.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hstokes"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

/// Small, fast case used by most CLI tests.
const SMALL_STOKES: &str = r#"
[run]
kind = "stokes"
case = "tangential-mode"
alpha = 0.5

[grid]
dim = 2
period_l = 6.283185307179586
height_h = 4.0
n_tangential = 16
n_normal = 33
t_final = 0.25
n_time = 17
"#;

#[test]
fn help_lists_commands_and_exit_codes() {
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in ["solve", "verify", "norms", "oracle-compare", "demo", "--config", "--threads"] {
        assert!(text.contains(needle), "help missing {needle}");
    }
}

#[test]
fn solve_writes_fields_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_STOKES);
    let out_dir = tmp.path().join("out");
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in ["u.f64", "u.json", "part_heat.f64", "part_boundary.f64", "summary.csv"] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with("name,value,threshold,comparator,pass"));
    assert!(summary.contains("divergence_rel_to_gradient"));
    assert!(summary.contains("initial_trace_rel"));
}

#[test]
fn invalid_grid_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"
[run]
kind = "stokes"
case = "tangential-mode"

[grid]
dim = 2
period_l = 6.283185307179586
height_h = 4.0
n_tangential = 12
n_normal = 33
t_final = 0.25
n_time = 17
"#,
    );
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("power of two"), "stderr: {err}");
}

#[test]
fn wall_flux_violation_exits_2_with_named_rule() {
    // external data files carrying a g_n with nonzero tangential mean
    let tmp = tempfile::tempdir().unwrap();
    let grid = hstokes::domain::GridSpec::new(2, std::f64::consts::TAU, 4.0, 8, 17, 0.25, 9).unwrap();
    let h = hstokes::domain::Field::zeros(&grid, 2);
    let g = hstokes::domain::sample_boundary(&grid, 2, |_, t, c| {
        if c == 1 {
            0.1 * t // nonzero mean normal wall velocity
        } else {
            0.0
        }
    })
    .unwrap();
    let f = hstokes::domain::SpaceTimeField::zeros(&grid, 4);
    let data_dir = tmp.path().join("data");
    hstokes::io::write_initial(&data_dir, "h", &h).unwrap();
    hstokes::io::write_boundary(&data_dir, "g", &g).unwrap();
    hstokes::io::write_space_time(&data_dir, "f", &f).unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(
            r#"
[run]
kind = "stokes"
case = "files"

[data]
dir = "{}"
"#,
            data_dir.display()
        ),
    );
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("tangential mean"), "stderr: {err}");
}

#[test]
fn oracle_compare_small_case_exits_0() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_STOKES);
    let out_dir = tmp.path().join("out");
    let out = bin()
        .args(["oracle-compare", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(out_dir.join("oracle.csv")).unwrap();
    assert!(csv.contains("oracle_stokes_fd_rel_linf"));
    assert!(csv.contains("true"));
}

#[test]
fn navier_stokes_solve_writes_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"
[run]
kind = "navier-stokes"
case = "small-ns"
alpha = 0.5

[grid]
dim = 2
period_l = 6.283185307179586
height_h = 4.0
n_tangential = 16
n_normal = 17
t_final = 0.25
n_time = 9
"#,
    );
    let out_dir = tmp.path().join("out");
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("m,norm_u,norm_increment,ratio"));
    assert!(out_dir.join("trace.json").exists());
}

#[test]
fn horizon_underflow_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    // amplitude far beyond contraction with no room to halve
    let cfg = write_config(
        tmp.path(),
        r#"
[run]
kind = "navier-stokes"
case = "large-ns"
amplitude = 500.0

[grid]
dim = 2
period_l = 6.283185307179586
height_h = 4.0
n_tangential = 8
n_normal = 9
t_final = 1.0
n_time = 9

[iteration]
m_max = 8
"#,
    );
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn norms_command_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_STOKES);
    let out_dir = tmp.path().join("out");
    let out = bin()
        .args(["norms", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = fs::read_to_string(out_dir.join("norms.csv")).unwrap();
    assert!(csv.starts_with("field,linf,space_seminorm,time_seminorm,alpha"));
    for field in ["h,", "g,", "u,", "riesz_gn_sup"] {
        assert!(csv.contains(field), "norms.csv missing {field}");
    }
}

#[test]
fn verify_command_passes_on_small_case() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_STOKES);
    let out_dir = tmp.path().join("out");
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(out_dir.join("verify.csv")).unwrap();
    assert!(csv.contains("riesz_square_identity_rel"));
    assert!(csv.contains("heat_linf_monotonicity_growth"));
    assert!(!csv.contains("false"), "verify rows failed:\n{csv}");
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_STOKES);
    let run = |dir: &Path, threads: &str| {
        let out = bin()
            .args(["solve", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir)
            .args(["--threads", threads])
            .output()
            .unwrap();
        assert!(out.status.success());
    };
    let d1 = tmp.path().join("a");
    let d2 = tmp.path().join("b");
    let d3 = tmp.path().join("c");
    run(&d1, "1");
    run(&d2, "4");
    run(&d3, "4");
    for name in ["u.f64", "u.json", "summary.csv", "part_boundary.f64"] {
        let a = fs::read(d1.join(name)).unwrap();
        let b = fs::read(d2.join(name)).unwrap();
        let c = fs::read(d3.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between 1 and 4 threads");
        assert_eq!(b, c, "{name} differs between repeated runs");
    }
}

#[test]
fn env_var_thread_cap_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_STOKES);
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .env("HSTOKES_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn reference_config_parses_and_demo_case_runs_small() {
    // the committed reference config must stay loadable
    let reference = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/reference.toml");
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["norms", "--config", reference])
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    // rayleigh-ramp default grid is the large one; norms on it are still fine
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}
