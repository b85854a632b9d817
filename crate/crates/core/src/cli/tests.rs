use super::*;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("coherdist").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn json_of(args: &[&str]) -> serde_json::Value {
    let (code, out, err) = call(args);
    assert_eq!(code, EXIT_OK, "{err}");
    serde_json::from_str(&out).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn compute_examples() {
    let v = json_of(&[
        "compute",
        "--state",
        "main_example",
        "--class",
        "MIO",
        "--m",
        "2",
        "--eps",
        "0.1",
    ]);
    assert!((v["probability"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert!(
        (v["analytic"]["qubit_target"]["probability"]
            .as_f64()
            .unwrap()
            - 0.5)
            .abs()
            < 1e-12
    );

    let v = json_of(&[
        "compute", "--state", "psi:2", "--class", "DIO", "--m", "2", "--eps", "0",
    ]);
    assert!((v["probability"].as_f64().unwrap() - 1.0).abs() < 1e-6);

    let v = json_of(&[
        "compute", "--amps", "1,3", "--class", "DIO", "--m", "3", "--eps", "0.30",
    ]);
    assert!(v["probability"].as_f64().unwrap().abs() < 1e-7);
}

#[test]
fn compute_from_density_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rho.json");
    let rho = crate::states::random_density(3, 3, 11).unwrap();
    std::fs::write(
        &path,
        serde_json::to_string(&input::DensityFile::from_operator(&rho)).unwrap(),
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let v = json_of(&["compute", "--density", p, "--class", "MIO", "--m", "2"]);
    // full rank: nothing distills
    assert!(v["probability"].as_f64().unwrap() <= 1e-7);
    assert!(v.get("analytic").is_none());

    std::fs::write(&path, r#"{"dim": 2, "entries": [[1,0],[0,0],[0,0]]}"#).unwrap();
    assert_eq!(call(&["compute", "--density", p]).0, EXIT_USAGE);
    assert_eq!(
        call(&["compute", "--density", "/nonexistent/rho.json"]).0,
        EXIT_USAGE
    );
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["compute"][..],
        &["compute", "--state", "psi:2", "--amps", "1,1"],
        &["compute", "--state", "psi:2", "--eps", "1"],
        &["compute", "--state", "psi:2", "--eps", "-0.1"],
        &["compute", "--state", "psi:2", "--class", "XIO"],
        &["compute", "--state", "psi:2", "--route", "nope"],
        &["compute", "--state", "bogus"],
        &["sweep", "--state", "psi:2", "--eps", "0.1..0.5"],
        &["sweep", "--state", "psi:2", "--eps", "0.5,1.0"],
        &["catalysis", "--family", "w", "--q", "0.5"],
        &["catalysis", "--family", "v", "--q", "1.5"],
        &["verify", "--quick", "--full"],
        &["frobnicate"],
    ] {
        let (code, _, err) = call(args);
        assert_eq!(code, EXIT_USAGE, "{args:?}");
        assert!(!err.is_empty(), "{args:?}");
    }
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("sweep"));
}

#[test]
fn sweep_main_example() {
    let (code, out, _) = call(&[
        "sweep",
        "--state",
        "main_example",
        "--class",
        "MIO,DIO",
        "--eps",
        "0.2,0.1",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().next().unwrap(), SWEEP_HEADER);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 4);
    // ordered by eps, classes in the order given
    let eps: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(eps, ["0.1", "0.1", "0.2", "0.2"]);
    assert_eq!(rows[0][2], "MIO");
    assert_eq!(rows[1][2], "DIO");
    for r in &rows {
        let want = if r[1] == "0.1" { 0.5 } else { 1.0 };
        assert!((r[4].parse::<f64>().unwrap() - want).abs() < 1e-6, "{r:?}");
        assert_eq!(r[6], "Optimal");
    }
    assert_eq!(rows[0][0], "0.9");
}

#[test]
fn sweep_sudden_death_grid() {
    let (code, out, _) = call(&[
        "sweep",
        "--state",
        "threshold_example",
        "--class",
        "DIO",
        "--m",
        "3",
        "--eps",
        "0.30,1/3,0.40",
    ]);
    assert_eq!(code, EXIT_OK);
    let p: Vec<f64> = csv_rows(&out)
        .iter()
        .map(|r| r[4].parse().unwrap())
        .collect();
    assert!(p[0] <= 1e-7);
    assert!(p[1] > 0.01);
    assert!(p[2] > p[1]);
}

#[test]
fn sweep_output_is_byte_stable() {
    let args = [
        "sweep",
        "--amps",
        "2,1,1",
        "--m",
        "3",
        "--eps",
        "0..0.4:0.1",
    ];
    let a = call(&args);
    let b = call(
        &["--threads", "1"]
            .iter()
            .chain(&args)
            .copied()
            .collect::<Vec<_>>(),
    );
    assert_eq!(a.0, EXIT_OK);
    assert_eq!(a.1, b.1);
    let rows = csv_rows(&a.1);
    assert_eq!(rows.len(), 10);
    for class in ["MIO", "DIO"] {
        let p: Vec<f64> = rows
            .iter()
            .filter(|r| r[2] == class)
            .map(|r| r[4].parse().unwrap())
            .collect();
        assert!(p.windows(2).all(|w| w[1] >= w[0] - 1e-7), "{class}: {p:?}");
    }
}

#[test]
fn sweep_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let (code, out, _) = call(&[
        "sweep",
        "--state",
        "psi:2",
        "--eps",
        "0",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    assert!(std::fs::read_to_string(&path)
        .unwrap()
        .starts_with(SWEEP_HEADER));
}

#[test]
fn empty_sweep_is_header_only() {
    assert_eq!(sweep_csv(&[]).unwrap(), format!("{SWEEP_HEADER}\n"));
}

#[test]
fn catalysis_u_family_grid() {
    let (code, out, _) = call(&[
        "catalysis",
        "--family",
        "u",
        "--q",
        "0.2..0.7:0.1",
        "--delta",
        "0",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(
        out.lines().next().unwrap(),
        "family,q,delta,eps,m,p_assisted,p_unassisted,ratio,gap,status"
    );
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert!(r[7].parse::<f64>().unwrap() >= -1e-6, "{r:?}");
    }
}

#[test]
fn thread_env_overrides_flag() {
    let env = |v: &str| Some(v.to_string());
    assert_eq!(resolve_threads(env("3"), Some(1)).unwrap(), 3);
    assert!(resolve_threads(env("zero"), Some(1)).is_err());
    assert!(resolve_threads(env("0"), None).is_err());
    assert_eq!(resolve_threads(None, Some(2)).unwrap(), 2);
    assert!(resolve_threads(None, Some(0)).is_err());
    assert!(resolve_threads(None, None).unwrap() >= 1);
}
