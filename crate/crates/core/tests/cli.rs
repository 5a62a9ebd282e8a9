use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use reorder_line::harness::experiment::CSV_HEADER;
use reorder_line::harness::format::{instance_from_json, read_instance};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reorder-line"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn gen_figure_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "gen",
            "--ell",
            "4",
            "--phases",
            "1",
            "--beta",
            "1",
            "-o",
            "phase4.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let instance = read_instance(&dir.path().join("phase4.json")).unwrap();
    assert_eq!(instance.len(), 95);
    assert_eq!(instance.n_sites, 17);
}

#[test]
fn gen_from_separation_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "gen",
            "--theorem1",
            "--k",
            "8",
            "--n",
            "17",
            "--delta",
            "0.5",
            "-o",
            "t1.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let instance = read_instance(&dir.path().join("t1.json")).unwrap();
    assert_eq!(instance.meta.ell, Some(1));
    assert_eq!(instance.meta.beta, 8);
    let header = instance.meta.separation.clone().unwrap();
    assert_eq!(
        header.epsilon,
        num_rational::BigRational::new(1.into(), 4.into())
    );
    assert_eq!(instance.len(), 8 * 5);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["gen", "--ell", "0", "-o", "x.json"][..],
        &["gen", "--ell", "2"],
        &[
            "gen",
            "--theorem1",
            "--k",
            "4",
            "--n",
            "17",
            "--delta",
            "1/2",
            "-o",
            "x.json",
        ],
        &[
            "gen",
            "--theorem1",
            "--k",
            "4",
            "--n",
            "17",
            "--delta",
            "3/2",
            "-o",
            "x.json",
        ],
        &[
            "simulate",
            "--policy",
            "moving-partition",
            "--instance",
            "x.json",
            "--capacity",
            "1",
        ],
        &["solve", "--instance", "missing.json", "--capacity", "1"],
        &["experiment", "separation", "--ell-max", "5"],
        &["bounds", "verify-tau", "--eta", "1/0"],
        &["frobnicate"],
    ] {
        let out = run(dir.path(), args);
        assert_eq!(code(&out), 2, "{args:?}");
    }
    assert!(!dir.path().join("x.json").exists());
}

#[test]
fn simulate_and_solve_reports() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&run(
            dir.path(),
            &["gen", "--ell", "2", "--phases", "2", "-o", "i.json"]
        )),
        0
    );
    let out = run(
        dir.path(),
        &[
            "simulate",
            "--policy",
            "basic-trajectory",
            "--instance",
            "i.json",
            "--capacity",
            "2",
            "--schedule-out",
            "bt.json",
        ],
    );
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["total_cost"], 8);
    assert_eq!(report["per_phase_cost"], serde_json::json!([4, 4]));

    let out = run(
        dir.path(),
        &[
            "simulate",
            "--policy",
            "basic-trajectory",
            "--instance",
            "i.json",
            "--capacity",
            "1",
        ],
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity"));

    let out = run(
        dir.path(),
        &[
            "solve",
            "--instance",
            "i.json",
            "--capacity",
            "2",
            "-o",
            "opt.json",
        ],
    );
    assert_eq!(code(&out), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("opt.json")).unwrap()).unwrap();
    assert_eq!(report["total_cost"], 8);
    assert_eq!(report["optimal"], true);

    let out = run(
        dir.path(),
        &[
            "solve",
            "--instance",
            "i.json",
            "--capacity",
            "1",
            "--max-states",
            "3",
        ],
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("limit"));

    let out = run(
        dir.path(),
        &[
            "render",
            "--instance",
            "i.json",
            "--schedule",
            "bt.json",
            "-o",
            "bt.svg",
        ],
    );
    assert_eq!(code(&out), 0);
    let svg = fs::read_to_string(dir.path().join("bt.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 1);
    assert_eq!(svg.matches(r#"<rect class="anchor""#).count(), 8);
}

#[test]
fn instance_file_round_trips_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&run(
            dir.path(),
            &["gen", "--ell", "3", "--phases", "2", "--beta", "2", "-o", "a.json"]
        )),
        0
    );
    let text = fs::read_to_string(dir.path().join("a.json")).unwrap();
    let instance = instance_from_json(&text).unwrap();
    assert_eq!(
        reorder_line::harness::format::instance_to_json(&instance),
        text
    );
}

#[test]
fn separation_experiment_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "experiment",
        "separation",
        "--ell-max",
        "2",
        "--phases",
        "2",
        "-o",
        "out.csv",
        "--svg-dir",
        "svg",
    ];
    assert_eq!(code(&run(dir.path(), &args)), 0);
    let first = fs::read(dir.path().join("out.csv")).unwrap();
    assert_eq!(code(&run(dir.path(), &args)), 0);
    assert_eq!(first, fs::read(dir.path().join("out.csv")).unwrap());

    let mut reader = csv::Reader::from_reader(&first[..]);
    assert_eq!(
        reader
            .headers()
            .unwrap()
            .iter()
            .collect::<Vec<_>>()
            .join(","),
        CSV_HEADER
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let find = |buffer: &str| {
        rows.iter()
            .find(|r| &r[0] == "2" && &r[3] == buffer && &r[4] == "opt")
            .unwrap()
            .clone()
    };
    assert_eq!(&find("2")[5], "8");
    let small = find("1");
    assert!(small[5].parse::<u64>().unwrap() >= 6);
    for row in rows.iter().filter(|r| &r[4] == "opt") {
        let cost: f64 = row[5].parse().unwrap();
        if !row[6].is_empty() {
            assert!(cost >= row[6].parse::<f64>().unwrap() - 1e-9);
        }
        assert!(cost >= row[7].parse::<f64>().unwrap());
    }
    assert!(dir.path().join("svg/ell2_p2_b1_opt.svg").exists());
}

#[test]
fn verifier_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let small = ["--p-max", "6", "--q-max", "6", "--r-max", "4"];
    let mut args = vec!["bounds", "verify-tau"];
    args.extend(small);
    assert_eq!(code(&run(dir.path(), &args)), 0);
    args.extend(["--tau-scale", "3/2", "--report", "fail.csv"]);
    assert_eq!(code(&run(dir.path(), &args)), 1);
    let report = fs::read_to_string(dir.path().join("fail.csv")).unwrap();
    assert!(report.starts_with("family,p,q,r,eta,margin\n"));
    assert!(report.lines().count() > 1);

    let mut steps = vec!["bounds", "verify-steps", "--eta", "1/3", "--tolerance", "0"];
    steps.extend(small);
    assert_eq!(code(&run(dir.path(), &steps)), 0);
    assert_eq!(code(&run(dir.path(), &["bounds", "verify-f"])), 0);

    let out = run(
        dir.path(),
        &[
            "bounds", "t-table", "--p-max", "1", "--q-max", "2", "--r-max", "0",
        ],
    );
    assert_eq!(code(&out), 0);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "p,q,r,t_hat\n0,1,0,1\n1,1,0,1\n0,2,0,6\n1,2,0,3\n"
    );
}
