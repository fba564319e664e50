use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn folbm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_folbm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const GOLDEN_ARGS: &[&str] = &[
    "simulate", "--model", "torus3", "--dt", "0.01", "--steps", "5", "--n-paths", "3", "--seed", "11", "--start",
    "0.3,0.1",
];

#[test]
fn simulate_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    for (extra, golden) in [
        (None, "tests/golden/torus3_frame_bundle.csv"),
        (Some("flow"), "tests/golden/torus3_flow.csv"),
    ] {
        let mut args = GOLDEN_ARGS.to_vec();
        if let Some(c) = extra {
            args.extend(["--construction", c]);
        }
        let o = folbm(&args, dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        let got = fs::read_to_string(dir.path().join("paths.csv")).unwrap();
        let want = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join(golden)).unwrap();
        assert_eq!(got, want, "{golden}");
    }
}

#[test]
fn simulate_row_count_and_meta_echo() {
    let dir = tempfile::tempdir().unwrap();
    let o = folbm(
        &[
            "simulate", "--model", "kronecker", "--a", "1.4142", "--dt", "1e-3", "--steps", "1000", "--n-paths", "100",
            "--seed", "7",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("paths.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("path_id,step,t,x1,x2"));
    assert_eq!(lines.count(), 100 * 1001);
    assert!(csv.lines().skip(1).all(|l| !l.contains('e')), "decimal notation only");
    let meta = fs::read_to_string(dir.path().join("meta.txt")).unwrap();
    for line in ["model = kronecker", "a = 1.4142", "seed = 7", "n_paths = 100", "dt = 0.001"] {
        assert!(meta.lines().any(|l| l == line), "{line} missing from\n{meta}");
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "model = kronecker\nsteps = 4\nn-paths = 2\nseed = 5\n").unwrap();
    let o = folbm(&["simulate", "--config", conf.to_str().unwrap(), "--steps", "3"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("paths.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 4);

    // The echo is itself a valid config file reproducing the run.
    let first = csv;
    let echo = dir.path().join("meta.txt");
    let again = dir.path().join("again");
    let o = folbm(&["simulate", "--config", echo.to_str().unwrap()], &again);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(again.join("paths.csv")).unwrap(), first);
}

#[test]
fn configuration_errors_exit_with_code_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = folbm(&["simulate", "--model", "torus3", "--b", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`b`") && stderr(&o).contains("b > 1"), "{}", stderr(&o));

    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "n_paths = 3\nwidth = 4\n").unwrap();
    let o = folbm(&["simulate", "--config", conf.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`width`"), "{}", stderr(&o));

    for args in [
        &["simulate", "--dt", "-1"][..],
        &["simulate", "--model", "sphere"],
        &["density", "--model", "kronecker"],
        &["verify", "--only", "everything"],
        &["verify", "--break", "density"],
        &["simulate", "--no-such-flag"],
    ] {
        let o = folbm(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }

    let o = Command::new(env!("CARGO_BIN_EXE_folbm"))
        .args(["simulate", "--steps", "2", "--n-paths", "1", "--out"])
        .arg(dir.path())
        .env("FOLBM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("FOLBM_THREADS"));
}

#[test]
fn density_command_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = folbm(&["density", "--b", "2", "--grid", "256", "--bins", "16", "--samples", "1e5"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("density_report.txt")).unwrap();
    let value = |key: &str| -> f64 {
        report
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{key} = ")))
            .unwrap_or_else(|| panic!("{key} missing"))
            .parse()
            .unwrap()
    };
    assert!(value("linf_gap") <= 1e-8);
    assert!(value("chi_square_p_value") > 0.01);
    assert!(!report.contains("warning"));
    let ode = fs::read_to_string(dir.path().join("density_ode.csv")).unwrap();
    assert_eq!(ode.lines().next(), Some("x,h"));
    assert_eq!(ode.lines().count(), 257);
    let occ = fs::read_to_string(dir.path().join("occupation.csv")).unwrap();
    assert_eq!(occ.lines().next(), Some("bin_x,bin_y,count"));
    assert_eq!(occ.lines().count(), 257);
    assert!(dir.path().join("density_closed_form.csv").exists());

    let o = folbm(&["density", "--grid", "16", "--samples", "2000", "--bins", "4"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("density_report.txt")).unwrap();
    assert!(report.contains("warning = grid of 16 points"), "{report}");
}

#[test]
fn verify_filters_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = folbm(&["verify", "--only", "decomposition"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("verify_report.txt")).unwrap();
    assert_eq!(report.lines().count(), 1);
    assert!(report.starts_with("decomposition statistic="));
    assert!(report.contains("threshold=") && report.trim_end().contains("PASS"));
}

#[test]
fn broken_quadratic_variation_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let o = folbm(&["verify", "--only", "qv", "--break", "qv"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("verify_report.txt")).unwrap();
    assert!(report.starts_with("qv ") && report.contains("FAIL"), "{report}");
}
