use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use skorohod::diagnostics::{PathEnsemble, TightnessReport};
use skorohod::{DistanceResult, NestedPath, StepFunction, TimeChange};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skorohod"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn csv_rows(text: &str) -> Vec<(String, f64, f64)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].to_string(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn dist_examples() {
    let dir = TempDir::new().unwrap();
    let x = write(
        dir.path(),
        "x.json",
        r#"{"breakpoints":[0.5],"values":[0.0,1.0]}"#,
    );
    let y = write(
        dir.path(),
        "y.json",
        r#"{"breakpoints":[0.6],"values":[0.0,1.0]}"#,
    );
    let z = write(
        dir.path(),
        "z.json",
        r#"{"breakpoints":[0.3],"values":[2.0,-1.5]}"#,
    );
    let zero = write(
        dir.path(),
        "zero.json",
        r#"{"breakpoints":[],"values":[0.0]}"#,
    );

    let o = run(&["dist", s(&x), s(&x)]);
    assert!(o.status.success());
    let r: DistanceResult = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.value, 0.0);

    let o = run(&["dist", s(&z), s(&zero), "--objective", "j1_0"]);
    let r: DistanceResult = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.value, 2.0);

    let o = run(&["dist", s(&x), s(&y), "--objective", "j1"]);
    let r: DistanceResult = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((r.value - 0.1).abs() < 1e-12);
    assert_eq!(r.matching.pairs(), &[(0, 0)]);
    assert!(stdout(&o).contains("\"objective\": \"j1\""));
}

#[test]
fn dist_nested_and_level_mismatch() {
    let dir = TempDir::new().unwrap();
    let x = NestedPath::new(
        vec![0.5],
        vec![StepFunction::zero(), StepFunction::constant(1.0)],
    )
    .unwrap();
    let y = NestedPath::new(
        vec![0.6],
        vec![StepFunction::zero(), StepFunction::constant(1.0)],
    )
    .unwrap();
    let xf = write(dir.path(), "x.json", &serde_json::to_string(&x).unwrap());
    let yf = write(dir.path(), "y.json", &serde_json::to_string(&y).unwrap());
    let o = run(&["dist", s(&xf), s(&yf), "--level", "nested"]);
    assert!(o.status.success());
    let r: DistanceResult = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((r.value - 0.1).abs() < 1e-12);

    let o = run(&["dist", s(&xf), s(&yf), "--level", "scalar"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    let bad = write(dir.path(), "bad.json", "{not json");
    assert_eq!(run(&["dist", s(&bad), s(&bad)]).status.code(), Some(2));
    assert_eq!(run(&["dist", s(&xf)]).status.code(), Some(2));
}

#[test]
fn json_files_round_trip_bit_exactly() {
    let x = StepFunction::new(vec![0.1 + 0.2, 1.0 / 3.0], vec![0.0, 0.7, -1e-300]).unwrap();
    let text = serde_json::to_string(&x).unwrap();
    assert_eq!(
        serde_json::to_string(&serde_json::from_str::<StepFunction>(&text).unwrap()).unwrap(),
        text
    );
    let lam: TimeChange = serde_json::from_str(r#"{"knots":[[0,0],[0.5,0.6],[1,1]]}"#).unwrap();
    assert_eq!(lam.eval(0.5), 0.6);
    let again: TimeChange = serde_json::from_str(&serde_json::to_string(&lam).unwrap()).unwrap();
    assert_eq!(again, lam);
}

#[test]
fn moduli_examples() {
    let dir = TempDir::new().unwrap();
    let c = write(dir.path(), "c.json", r#"{"breakpoints":[],"values":[3.0]}"#);
    let o = run(&["moduli", s(&c), "--delta-grid", "0.05,0.1"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.2 == 0.0));

    let single = NestedPath::new(
        vec![0.5],
        vec![StepFunction::zero(), StepFunction::constant(1.0)],
    )
    .unwrap();
    let f = write(
        dir.path(),
        "s.json",
        &serde_json::to_string(&single).unwrap(),
    );
    let o = run(&[
        "moduli",
        s(&f),
        "--delta-grid",
        "0.1,0.4",
        "--which",
        "wDprime",
    ]);
    assert!(csv_rows(&stdout(&o)).iter().all(|r| r.2 == 0.0));

    let two = NestedPath::new(
        vec![0.3, 0.31],
        (0..3).map(|v| StepFunction::constant(v as f64)).collect(),
    )
    .unwrap();
    let f = write(dir.path(), "t.json", &serde_json::to_string(&two).unwrap());
    let o = run(&[
        "moduli",
        s(&f),
        "--delta-grid",
        "0.05",
        "--which",
        "wDprime,wDsecond,wusecond",
    ]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(
        rows,
        vec![
            ("wDprime".to_string(), 0.05, 1.0),
            ("wDsecond".to_string(), 0.05, 1.0),
            ("wusecond".to_string(), 0.05, 1.0),
        ]
    );
    assert_eq!(
        run(&["moduli", s(&f), "--delta-grid", "1.5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["moduli", s(&f), "--delta-grid", "0"]).status.code(),
        Some(2)
    );
}

#[test]
fn simulate_and_tightness() {
    let dir = TempDir::new().unwrap();
    let one = write(
        dir.path(),
        "one.json",
        r#"{"alpha":1.5,"n":1,"m":1,"seed":3}"#,
    );
    let out = dir.path().join("ens.json");
    assert!(run(&["simulate", s(&one), "--out", s(&out)])
        .status
        .success());
    let ens: PathEnsemble = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(ens.paths().len(), 1);
    assert_eq!(ens.paths()[0].switch_count(), 1);

    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"alpha":1.5,"n":20,"m":10,"seed":5}"#,
    );
    let args = |target: &Path| {
        vec![
            "tightness".to_string(),
            "--config".into(),
            s(&cfg).into(),
            "--ensemble".into(),
            s(&out).into(),
            "--a-grid".into(),
            "1,2".into(),
            "--delta-grid".into(),
            "0.1,0.2".into(),
            "--epsilon-grid".into(),
            "0.5".into(),
            "--format".into(),
            "csv".into(),
            "--out".into(),
            s(target).into(),
        ]
    };
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for target in [&a, &b] {
        let o = Command::new(env!("CARGO_BIN_EXE_skorohod"))
            .args(args(target))
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(text.starts_with("n,a,delta,epsilon,condition,count,total,frequency\n"));
    assert!(text
        .lines()
        .any(|l| l.starts_with("20,") && l.contains(",23,")));

    let o = run(&[
        "tightness",
        "--a-grid",
        "1",
        "--delta-grid",
        "0.1",
        "--epsilon-grid",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tightness_on_zero_paths_is_all_zero() {
    let dir = TempDir::new().unwrap();
    let ens = PathEnsemble::new(3, 0, vec![NestedPath::zero(); 4]).unwrap();
    let f = write(
        dir.path(),
        "zero.json",
        &serde_json::to_string(&ens).unwrap(),
    );
    let o = run(&[
        "tightness",
        "--ensemble",
        s(&f),
        "--a-grid",
        "0.5",
        "--delta-grid",
        "0.1,0.2",
        "--epsilon-grid",
        "0.1",
        "--t-subset",
        "0.5,1",
    ]);
    assert!(o.status.success());
    let r: TightnessReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(!r.rows.is_empty());
    assert!(r.rows.iter().all(|row| row.count == 0 && row.total == 4));
}

#[test]
fn compactness_formats() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"alpha":1.2,"n":10,"m":5,"seed":1}"#,
    );
    let ens = dir.path().join("ens.json");
    assert!(run(&["simulate", s(&cfg), "--out", s(&ens)])
        .status
        .success());
    let o = run(&[
        "compactness",
        s(&ens),
        "--delta-grid",
        "0.1,0.2",
        "--format",
        "csv",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("quantity,delta,value\n"));
    assert!(text.contains("wDsecond,0.1,"));
    let o = run(&[
        "compactness",
        s(&ens),
        "--delta-grid",
        "0.1",
        "--variant",
        "wprime",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.get("profile_wdprime").is_some());
    assert!(v.get("second").is_none());
}

#[test]
fn verify_shipped_corpus_passes() {
    let o = run(&["verify", s(&corpus())]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().all(|l| l.ends_with(" ok")));
}

#[test]
fn verify_exit_codes() {
    let dir = TempDir::new().unwrap();
    for f in fs::read_dir(corpus()).unwrap() {
        let p = f.unwrap().path();
        fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
    }
    write(
        dir.path(),
        "broken.json",
        r#"{"step_functions":[{"breakpoints":[0.7,0.2],"values":[0,1,2]}]}"#,
    );
    assert_eq!(run(&["verify", s(dir.path())]).status.code(), Some(2));

    let empty = TempDir::new().unwrap();
    assert_eq!(run(&["verify", s(empty.path())]).status.code(), Some(2));
}
