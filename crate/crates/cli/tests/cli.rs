use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qpurify::io::SampleFile;
use qpurify::simulate::RunManifest;

fn qpurify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpurify"))
        .args(args)
        .env_remove("QPURIFY_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

const SMALL_RUN: [&str; 10] = [
    "--eta",
    "1",
    "--dt",
    "1e-3",
    "--traj",
    "500",
    "--seed",
    "7",
    "--snapshots",
    "0.1,0.5",
];

#[test]
fn simulate_writes_samples_echo_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = vec!["simulate", "--out", out.to_str().unwrap()];
    args.extend(SMALL_RUN);
    let r = qpurify(&args);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));

    let files = csv_files(&out);
    assert_eq!(files.len(), 2);
    let s = SampleFile::read(&out.join(&files[1].0)).unwrap();
    assert_eq!(s.values.len(), 500);
    assert_eq!(s.metadata["t"], "0.5");
    assert_eq!(s.metadata["backend"], "langevin_q");
    assert_eq!(s.metadata["seed"], "7");
    assert_eq!(s.metadata["excursion_count"], "0");

    let manifest: RunManifest =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.config.n_traj, 500);
    assert_eq!(manifest.config.n_steps, 500);
    assert_eq!(manifest.outputs.len(), 4);
    assert!(manifest.outputs.iter().all(|p| p.exists()));
}

#[test]
fn config_echo_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    let mut args = vec![
        "simulate",
        "--backend",
        "langevin_Q",
        "--out",
        first.to_str().unwrap(),
    ];
    args.extend(SMALL_RUN);
    assert_eq!(code(&qpurify(&args)), 0);
    let echo = first.join("config.toml");
    let r = qpurify(&[
        "simulate",
        "--config",
        echo.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0);
    assert_eq!(csv_files(&first), csv_files(&second));
    assert_eq!(
        fs::read(&echo).unwrap(),
        fs::read(second.join("config.toml")).unwrap()
    );
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "eta = 2.0\ndt = 0.001\nn_traj = 50\nsnapshot_eta_t = [0.2]\nbackend = \"collisional\"\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let r = qpurify(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--traj",
        "20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let s = SampleFile::read(&out.join(&csv_files(&out)[0].0)).unwrap();
    assert_eq!(s.values.len(), 20);
    assert_eq!(s.metadata["eta"], "2");
    assert_eq!(s.metadata["t"], "0.1");
    assert_eq!(s.metadata["backend"], "collisional");

    fs::write(&cfg, "eta = 1.0\nunknown_key = 3\n").unwrap();
    assert_eq!(
        code(&qpurify(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--traj",
            "5"
        ])),
        2
    );
}

#[test]
fn output_directory_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let r = Command::new(env!("CARGO_BIN_EXE_qpurify"))
        .args(["simulate", "--traj", "10", "--steps", "10"])
        .env("QPURIFY_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&r), 0);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn simulate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        code(&qpurify(&[
            "simulate", "--traj", "0", "--steps", "10", "--out", out
        ])),
        2
    );
    assert_eq!(
        code(&qpurify(&[
            "simulate", "--traj", "10", "--dt", "-1", "--steps", "10", "--out", out
        ])),
        2
    );
    assert_eq!(
        code(&qpurify(&[
            "simulate",
            "--traj",
            "10",
            "--backend",
            "euler",
            "--out",
            out
        ])),
        2
    );
    assert_eq!(
        code(&qpurify(&[
            "simulate",
            "--traj",
            "10",
            "--snapshots",
            "0.0005",
            "--out",
            out
        ])),
        2
    );
    assert_eq!(
        code(&qpurify(&[
            "simulate",
            "--traj",
            "10",
            "--steps",
            "10",
            "--threads",
            "0",
            "--out",
            out
        ])),
        2
    );
    // a step this large drives some record-only trajectories to overflow
    let r = qpurify(&[
        "simulate", "--traj", "2000", "--dt", "1", "--steps", "200", "--out", out,
    ]);
    assert_eq!(code(&r), 3, "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn density_curves() {
    let r = qpurify(&[
        "density", "--which", "P_Omega", "--eta", "1", "--t", "2", "--grid", "-3:3:601",
    ]);
    assert_eq!(code(&r), 0);
    let text = stdout(&r);
    let rows: Vec<(f64, f64)> = text
        .lines()
        .filter(|l| !l.starts_with('#') && *l != "x,density")
        .map(|l| {
            let (x, p) = l.split_once(',').unwrap();
            (x.parse().unwrap(), p.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 601);
    let maxima: Vec<f64> = rows
        .windows(3)
        .filter(|w| w[1].1 > w[0].1 && w[1].1 > w[2].1)
        .map(|w| w[1].0)
        .collect();
    assert_eq!(maxima.len(), 2);
    assert!(maxima[0] < 0.0 && maxima[1] > 0.0);

    let r = qpurify(&["density", "--which", "P_q", "--etat", "1e-9"]);
    assert_eq!(code(&r), 0);
    let peak = stdout(&r)
        .lines()
        .filter(|l| !l.starts_with('#') && *l != "x,density")
        .map(|l| l.split_once(',').unwrap().1.parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(peak > 1e4);

    assert_eq!(
        code(&qpurify(&["density", "--which", "P_tau", "--t", "-1"])),
        2
    );
    assert_eq!(
        code(&qpurify(&[
            "density", "--which", "P_q", "--t", "1", "--grid", "-2:0:5"
        ])),
        2
    );
    assert_eq!(
        code(&qpurify(&["density", "--which", "P_x", "--t", "1"])),
        2
    );
    assert_eq!(
        code(&qpurify(&[
            "density", "--which", "P_q", "--t", "1", "--etat", "1"
        ])),
        2
    );
}

#[test]
fn compare_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let r = qpurify(&[
        "simulate",
        "--traj",
        "20000",
        "--seed",
        "3",
        "--snapshots-etat",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0);
    let samples = out.join(&csv_files(&out)[0].0);
    let samples = samples.to_str().unwrap();

    let report_path = dir.path().join("report.json");
    let r = qpurify(&[
        "compare",
        "--samples",
        samples,
        "--threshold",
        "0.05",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["n_samples"], 20000);
    assert!(report["ks_statistic"].as_f64().unwrap() < 0.05);

    assert_eq!(
        code(&qpurify(&[
            "compare",
            "--samples",
            samples,
            "--which",
            "P_tau",
            "--threshold",
            "0.05"
        ])),
        0
    );
    assert_eq!(
        code(&qpurify(&[
            "compare",
            "--samples",
            samples,
            "--threshold",
            "1e-6"
        ])),
        1
    );
    assert_eq!(
        code(&qpurify(&["compare", "--samples", samples, "--eta", "2"])),
        2
    );
    assert_eq!(
        code(&qpurify(&[
            "compare",
            "--samples",
            samples,
            "--etat",
            "0.5"
        ])),
        2
    );

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "# eta=1\n# t=1\nq\n").unwrap();
    assert_eq!(
        code(&qpurify(&["compare", "--samples", empty.to_str().unwrap()])),
        2
    );
}

#[test]
fn fp_check_command() {
    let r = qpurify(&["fp-check"]);
    assert_eq!(code(&r), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&r)).unwrap();
    assert!(v["max_relative_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["q_points"], 121);

    let r = qpurify(&["fp-check", "--q-grid", "0:0:1", "--t-grid", "1:1:1"]);
    assert_eq!(code(&r), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&r)).unwrap();
    assert!(v["max_relative_residual"].as_f64().unwrap() < 1e-15);

    assert_eq!(code(&qpurify(&["fp-check", "--t-grid", "0:1:3"])), 2);
    assert_eq!(code(&qpurify(&["fp-check", "--q-grid", "nonsense"])), 2);
}

#[test]
fn roots_table() {
    let r = qpurify(&["roots", "--eta", "2", "--etat", "0.5,2"]);
    assert_eq!(code(&r), 0);
    let text = stdout(&r);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows[0], ["0.5", "2", "1", "", "0", "", "min", "false"]);
    assert_eq!(rows[1][2], "3");
    let plus: f64 = rows[1][5].parse().unwrap();
    assert!((plus / 2.0 - 0.957_504).abs() < 1e-5);
    assert_eq!(rows[1][7], "true");

    let r = qpurify(&["roots", "--etat-grid", "0.2:5:25"]);
    let counts: Vec<(f64, usize)> = stdout(&r)
        .lines()
        .skip(2)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[0].parse().unwrap(), c[2].parse().unwrap())
        })
        .collect();
    assert!(counts
        .iter()
        .all(|&(s, n)| n == if s > 1.0 { 3 } else { 1 }));

    assert_eq!(code(&qpurify(&["roots", "--t", "-1"])), 2);
}

#[test]
fn mean_purity_table() {
    let r = qpurify(&["mean-purity", "--etat", "0,20"]);
    assert_eq!(code(&r), 0);
    let text = stdout(&r);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows[0][2], "0.5");
    assert!(rows[1][2].parse::<f64>().unwrap() >= 0.999);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let r = qpurify(&[
        "simulate",
        "--traj",
        "4000",
        "--seed",
        "11",
        "--snapshots",
        "0.25,1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0);
    let r = qpurify(&[
        "mean-purity",
        "--samples-dir",
        out.to_str().unwrap(),
        "--etat",
        "0.25,0.5,1",
    ]);
    assert_eq!(code(&r), 0);
    let text = stdout(&r);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][3..], ["", "", "", ""]);
    for row in [&rows[0], &rows[2]] {
        assert_eq!(row[5], "4000");
        assert!(row[6].parse::<f64>().unwrap().abs() < 3.0, "{row:?}");
    }

    assert_eq!(
        code(&qpurify(&[
            "mean-purity",
            "--samples-dir",
            out.to_str().unwrap(),
            "--eta",
            "2"
        ])),
        2
    );
    assert_eq!(code(&qpurify(&["mean-purity", "--t", "-1"])), 2);
}
