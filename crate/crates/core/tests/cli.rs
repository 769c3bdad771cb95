use std::path::Path;
use std::process::{Command, Output};

fn bmbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bmbm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analytic_single_point() {
    let o = bmbm(&["analytic", "--schemes", "cl-bmbm", "--snr-db", "10:10:10"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "snr_db,scheme,ber_analytic,high_snr_approx");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[1], "cl-bmbm");
    let ber: f64 = fields[2].parse().unwrap();
    let approx: f64 = fields[3].parse().unwrap();
    assert!((ber - 5.52824669672503e-3).abs() < 1e-14, "{ber}");
    assert!((approx - 7.5e-3).abs() < 1e-15);
}

#[test]
fn analytic_default_grid_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.csv");
    let o = bmbm(&["analytic", "--out", path_str(&path)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("wrote 246 rows"));
    let body = std::fs::read_to_string(&path).unwrap();
    assert_eq!(body.lines().count(), 1 + 6 * 41);
}

#[test]
fn analytic_table() {
    let o = bmbm(&["analytic", "--schemes", "siso", "--snr-db", "0:1:0", "--table"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("cl-unitamp"));
    assert!(out.contains("(2+m2)"));
}

#[test]
fn gap_command() {
    let o = bmbm(&["gap", "--target-ber", "1e-6"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let gap: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("gap_db"))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((gap - 0.62437).abs() < 1e-4, "{gap}");

    for bad in ["0.4", "0", "-1e-3", "0.375"] {
        let o = bmbm(&["gap", "--target-ber", bad]);
        assert!(!o.status.success(), "{bad}");
        assert!(stderr(&o).starts_with("error:"), "{bad}");
    }
}

#[test]
fn sweep_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str, name: &str| {
        let path = dir.path().join(name);
        let o = bmbm(&[
            "sweep",
            "--schemes",
            "siso,ol-bmbm,alamouti",
            "--snr-db",
            "0:5:10",
            "--seed",
            "7",
            "--min-errors",
            "200",
            "--max-trials",
            "500000",
            "--chunk-size",
            "5000",
            "--workers",
            workers,
            "--out",
            path_str(&path),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(path).unwrap()
    };
    let one = run("1", "w1.csv");
    let three = run("3", "w3.csv");
    assert_eq!(one, three);
    let text = String::from_utf8(one).unwrap();
    assert_eq!(text.lines().count(), 1 + 9);
    assert!(text.starts_with("snr_db,scheme,ber_sim,ber_analytic,high_snr_approx,errors,trials,ci_low,ci_high\n"));
}

#[test]
fn compare_sweep_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let o = bmbm(&[
        "sweep",
        "--schemes",
        "cl-bmbm",
        "--snr-db",
        "0:4:16",
        "--min-errors",
        "300",
        "--out",
        path_str(&path),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = bmbm(&["compare", path_str(&path), "--fit-window", "4:16"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("points within CI"));
    assert!(out.contains("cl-bmbm"));
}

#[test]
fn compare_analytic_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.csv");
    assert!(bmbm(&["analytic", "--snr-db", "0:0.5:40", "--out", path_str(&path)]).status.success());

    let gap = |out: &str, label: &str| -> f64 {
        let line = out.lines().find(|l| l.starts_with(&format!("gap {label}:"))).unwrap();
        line.split_whitespace().rev().nth(1).unwrap().parse().unwrap()
    };
    let o = bmbm(&["compare", path_str(&path)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let g = gap(&stdout(&o), "ol-bmbm vs cl-bmbm");
    assert!((g - 9.68).abs() < 0.01, "{g}");

    let o = bmbm(&["compare", path_str(&path), "--ber-level", "1e-3"]);
    let g = gap(&stdout(&o), "ol-bmbm vs siso");
    assert!((g - 3.0103).abs() < 1e-3, "{g}");
}

#[test]
fn compare_rejects_malformed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(
        &path,
        "snr_db,scheme,ber_analytic,high_snr_approx\n0,siso,0.1,0.25\n1,siso,0.09,0.2\n2,siso,oops,0.1\n",
    )
    .unwrap();
    let o = bmbm(&["compare", path_str(&path)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("row 4"), "{}", stderr(&o));

    let o = bmbm(&["compare", path_str(&dir.path().join("missing.csv"))]);
    assert!(!o.status.success());
}

#[test]
fn bad_arguments_fail() {
    for args in [
        &["sweep", "--schemes", "qpsk"][..],
        &["sweep", "--snr-db", "10:1:0"],
        &["analytic", "--snr-db", "0:0:10"],
        &["compare", "x.csv", "--fit-window", "30:20"],
    ] {
        let o = bmbm(args);
        assert!(!o.status.success(), "{args:?}");
    }
}
