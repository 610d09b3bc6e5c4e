use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hankelred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hankelred")).args(args).env_remove("HANKELRED_THREADS").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = hankelred(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write_scalar(dir: &Path, e: f64, a: f64, b: f64, c: f64, d: f64) -> String {
    fs::create_dir_all(dir).unwrap();
    for (name, v) in [("E", e), ("A", a), ("B", b), ("C", c), ("D", d)] {
        fs::write(dir.join(format!("{name}.mtx")), format!("%%MatrixMarket matrix array real general\n1 1\n{v:e}\n")).unwrap();
    }
    let man = "schema = 1\nname = \"scalar\"\nn = 1\nm = 1\np = 1\n\n[files]\ne = \"E.mtx\"\na = \"A.mtx\"\nb = \"B.mtx\"\nc = \"C.mtx\"\nd = \"D.mtx\"\n";
    let path = dir.join("system.toml");
    fs::write(&path, man).unwrap();
    path.to_str().unwrap().to_string()
}

fn report_value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing from report"))
        .to_string()
}

#[test]
fn generate_then_hsv_rows_match_dimensions() {
    let tmp = tempfile::tempdir().unwrap();
    let sys = tmp.path().join("msd");
    ok(&["generate", "msd", "--g", "30", "--out", sys.to_str().unwrap()]);
    let csv = tmp.path().join("hsv.csv");
    let stdout = ok(&["hsv", sys.join("system.toml").to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert!(stdout.contains("n_f = 58, n_inf = 3"));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,type,value"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 61);
    assert_eq!(rows.iter().filter(|r| r[1] == "proper").count(), 58);
    assert_eq!(rows.iter().filter(|r| r[1] == "improper").count(), 3);
    for r in &rows {
        // 16 significant digits in scientific notation
        let mantissa = r[2].split('e').next().unwrap();
        assert_eq!(mantissa.trim_start_matches('-').len(), 17, "{}", r[2]);
    }
}

#[test]
fn reduce_scalar_to_order_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let man = write_scalar(&tmp.path().join("g"), 1.0, -1.0, 1.0, 1.0, 0.0);
    let out = tmp.path().join("red");
    ok(&["reduce", &man, "--method", "ghna", "--order", "0", "--out", out.to_str().unwrap()]);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    let h: f64 = report_value(&report, "hankel_error_exact").parse().unwrap();
    assert!((h - 0.5).abs() < 1e-12);
    assert_eq!(report_value(&report, "r"), "0");
    let d = fs::read_to_string(out.join("D.mtx")).unwrap();
    let v: f64 = d.lines().last().unwrap().parse().unwrap();
    assert!((v - 0.5).abs() < 1e-12);
}

#[test]
fn gbt_and_error_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let sys = tmp.path().join("rand");
    ok(&["generate", "random", "--n", "12", "--m", "2", "--p", "2", "--seed", "5", "--out", sys.to_str().unwrap()]);
    let full = sys.join("system.toml");
    let red = tmp.path().join("red");
    let stdout = ok(&["reduce", full.to_str().unwrap(), "--method", "gbt", "--order", "4", "--out", red.to_str().unwrap()]);
    assert!(stdout.contains("method = \"gbt\""));
    let csv = tmp.path().join("err.csv");
    ok(&[
        "error",
        full.to_str().unwrap(),
        red.join("system.toml").to_str().unwrap(),
        "--points",
        "25",
        "--out",
        csv.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("omega,error,bound"));
    assert_eq!(text.lines().count(), 26);
    for l in text.lines().skip(1) {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[1] <= v[2] * (1.0 + 1e-8), "{l}");
    }
}

#[test]
fn verify_reports_allpass() {
    let tmp = tempfile::tempdir().unwrap();
    let r = 2f64.sqrt();
    let man = write_scalar(&tmp.path().join("ap"), 1.0, -1.0, r, -r, 1.0);
    let stdout = ok(&["verify", &man, "--sigma", "1"]);
    assert!(stdout.contains("pass = true"), "{stdout}");
    let man = write_scalar(&tmp.path().join("lp"), 1.0, -1.0, 1.0, 1.0, 0.0);
    let stdout = ok(&["verify", &man, "--sigma", "1"]);
    assert!(stdout.contains("pass = false"));
    assert!(stdout.contains("m0 = 1.000000000000000e0 FAIL"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let man = write_scalar(&tmp.path().join("bad"), 1.0, -1.0, 1.0, 1.0, 0.0);
    fs::write(tmp.path().join("bad").join("A.mtx"), "%%MatrixMarket matrix array real general\n1 1\nnot-a-number\n").unwrap();
    let out = hankelred(&["hsv", &man, "--out", tmp.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = hankelred(&["hsv", "/nonexistent/system.toml", "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));

    let man = write_scalar(&tmp.path().join("unstable"), 1.0, 1.0, 1.0, 1.0, 0.0);
    let out = hankelred(&["hsv", &man, "--out", tmp.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NotStable"));

    let out = Command::new(env!("CARGO_BIN_EXE_hankelred"))
        .args(["generate", "msd", "--g", "5", "--out", tmp.path().join("t").to_str().unwrap()])
        .env("HANKELRED_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generation_is_deterministic_and_prints_config() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let stdout = ok(&["generate", "stokes", "--n-v", "12", "--n-p", "3", "--seed", "4", "--out", a.to_str().unwrap()]);
    assert!(stdout.contains("# seed = 4"));
    assert!(stdout.contains("# threads = "));
    ok(&["generate", "stokes", "--n-v", "12", "--n-p", "3", "--seed", "4", "--out", b.to_str().unwrap()]);
    for f in ["E.mtx", "A.mtx", "B.mtx", "C.mtx", "D.mtx"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
}

#[test]
fn threads_env_is_honored() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hankelred"))
        .args(["generate", "msd", "--g", "5", "--out", tmp.path().to_str().unwrap()])
        .env("HANKELRED_THREADS", "3")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("# threads = 3"));
}
