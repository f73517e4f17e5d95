use std::fs;
use std::process::{Command, Output};

fn pnu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pnu"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn advise_recommends_pu_for_the_artificial_budget() {
    let o = pnu(&[
        "advise", "--pi", "0.5", "--n-pos", "45", "--n-neg", "5", "--n-unl", "100",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["recommendation"], "PU");
    assert!((v["alpha_pu_pn"].as_f64().unwrap() - 0.7805).abs() < 1e-4);
    assert!((v["alpha_star"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn advise_mirror_and_tie() {
    let o = pnu(&[
        "advise", "--pi", "0.5", "--n-pos", "5", "--n-neg", "45", "--n-unl", "100",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["recommendation"], "NU");

    let o = pnu(&[
        "advise", "--pi", "0.5", "--n-pos", "64", "--n-neg", "64", "--n-unl", "10",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["recommendation"], "PN");
    assert!(v["message"].as_str().unwrap().contains("degenerate tie"));
}

#[test]
fn invalid_input_exits_nonzero() {
    let o = pnu(&[
        "advise", "--pi", "1.5", "--n-pos", "5", "--n-neg", "5", "--n-unl", "5",
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("prior"));

    let o = pnu(&[
        "sweep-nu",
        "--data",
        "/nonexistent/pool.csv",
        "--trials",
        "1",
    ]);
    assert!(!o.status.success());

    let o = pnu(&["sweep-nu", "--n-unl", "20,10", "--trials", "1"]);
    assert!(!o.status.success());
}

#[test]
fn sweep_nu_writes_csv_to_stdout() {
    let o = pnu(&[
        "sweep-nu",
        "--n-unl",
        "5,20",
        "--trials",
        "2",
        "--test-size",
        "1000",
        "--seed",
        "4",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "sweep_value,mode,mean_error,std_error,alpha_pu_pn,alpha_nu_pn"
    );
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("5,PN,"));

    let again = pnu(&[
        "sweep-nu",
        "--n-unl",
        "5,20",
        "--trials",
        "2",
        "--test-size",
        "1000",
        "--seed",
        "4",
    ]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn sweep_pi_writes_json_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pi.json");
    let o = pnu(&[
        "sweep-pi",
        "--pi",
        "0.2,0.8",
        "--n-unl",
        "30",
        "--trials",
        "1",
        "--test-size",
        "500",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0]["sweep_value"], 0.2);
    assert_eq!(rows[0]["std_error"], 0.0);
}

#[test]
fn sweep_on_csv_pool_with_cv() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pool.csv");
    let mut text = String::from("a,b,label\n");
    for i in 0..200 {
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        let u = (i as f64 * 0.37).sin();
        let v = (i as f64 * 1.71).cos();
        text.push_str(&format!(
            "{},{},{}\n",
            s + u,
            s + v,
            if s > 0.0 { "yes" } else { "no" }
        ));
    }
    fs::write(&data, text).unwrap();
    let cv = dir.path().join("cv.json");
    fs::write(
        &cv,
        r#"{"folds": 2, "width_grid": [1.0, 2.0], "lambda_grid": [0.01]}"#,
    )
    .unwrap();
    let train = dir.path().join("train.json");
    fs::write(&train, r#"{"inner_max_iter": 200, "restarts": 1}"#).unwrap();
    let o = pnu(&[
        "sweep-nu",
        "--data",
        data.to_str().unwrap(),
        "--label-col",
        "label",
        "--n-pos",
        "10",
        "--n-neg",
        "4",
        "--n-unl",
        "20",
        "--trials",
        "1",
        "--cv-config",
        cv.to_str().unwrap(),
        "--train-config",
        train.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify.json");
    let o = pnu(&["verify", "--reps", "500", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert_eq!(stderr.lines().filter(|l| l.starts_with("PASS")).count(), 6);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 6);
}
