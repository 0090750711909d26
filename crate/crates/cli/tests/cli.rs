use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const ARTIFACTS: &[&str] = &[
    "weights.csv",
    "rff_map.json",
    "embedded.csv",
    "recomputed_weights.csv",
    "dimension.json",
    "distortion_report.json",
    "complex_gkpd.txt",
    "complex_euclidean.txt",
    "diagram_gkpd.json",
    "diagram_gkpd.csv",
    "diagram_euclidean.json",
    "diagram_euclidean.csv",
    "certificate.json",
];

fn gkpd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gkpd"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn dataset(dir: &Path) -> PathBuf {
    let path = dir.join("points.csv");
    let out = gkpd(&[
        "generate",
        "--kind",
        "circle_with_outliers",
        "--n",
        "10",
        "--dim",
        "4",
        "--noise",
        "0.05",
        "--outliers",
        "2",
        "--seed",
        "11",
        "--output",
        s(&path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn equilateral(dir: &Path) -> PathBuf {
    let path = dir.join("triangle.csv");
    let h = 3f64.sqrt() / 2.0;
    fs::write(&path, format!("0,0\n1,0\n0.5,{h:?}\n")).unwrap();
    path
}

#[test]
fn empty_input_fails_with_message() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("empty.csv");
    fs::write(&input, "").unwrap();
    let out = gkpd(&["pipeline", "--input", s(&input), "--out", s(&dir.path().join("run"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty point set"));
}

#[test]
fn huge_t_on_triangle_passes() {
    let dir = TempDir::new().unwrap();
    let input = equilateral(dir.path());
    let run = dir.path().join("run");
    let out = gkpd(&["pipeline", "--input", s(&input), "--out", s(&run), "--t", "100000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ARTIFACTS {
        assert!(run.join(name).is_file(), "missing {name}");
    }
    let cert: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("certificate.json")).unwrap()).unwrap();
    let factor = cert["factor_measured"].as_f64().unwrap();
    assert!((1.0..1.05).contains(&factor), "{factor}");
}

#[test]
fn deterministic_outputs() {
    let dir = TempDir::new().unwrap();
    let input = dataset(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let r = gkpd(&["pipeline", "--input", s(&input), "--out", s(out), "--seed", "5", "--threads", "2"]);
        assert!(r.status.code() == Some(0) || r.status.code() == Some(2));
    }
    for name in ARTIFACTS {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn subcommands_compose_to_pipeline() {
    let dir = TempDir::new().unwrap();
    let input = dataset(dir.path());
    let full = dir.path().join("full");
    let steps = dir.path().join("steps");
    let common = ["--sigma", "0.8", "--seed", "9"];
    let dim_flags = ["--epsilon", "0.3", "--delta", "0.2"];
    let mut args = vec!["pipeline", "--input", s(&input), "--out", s(&full), "--d-max", "2", "--slack", "0.1"];
    args.extend(common);
    args.extend(dim_flags);
    let code = gkpd(&args).status.code();
    assert!(code == Some(0) || code == Some(2));

    let p = |name: &str| steps.join(name);
    let ok = |args: Vec<&str>| {
        let out = gkpd(&args);
        assert!(out.status.code() == Some(0) || out.status.code() == Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    };
    let weights = p("weights.csv");
    ok(vec!["weights", "--input", s(&input), "--output", s(&weights), "--sigma", "0.8"]);
    let mut embed = vec!["embed", "--input", s(&input), "--out", s(&steps)];
    embed.extend(common);
    embed.extend(dim_flags);
    ok(embed);
    let (cg, ce) = (p("complex_gkpd.txt"), p("complex_euclidean.txt"));
    ok(vec![
        "filtration", "--geometry", "gkpd", "--input", s(&input), "--weights", s(&weights), "--sigma", "0.8",
        "--d-max", "2", "--output", s(&cg),
    ]);
    let (emb, rw) = (p("embedded.csv"), p("recomputed_weights.csv"));
    ok(vec![
        "filtration", "--geometry", "euclidean", "--input", s(&emb), "--weights", s(&rw), "--d-max", "2",
        "--output", s(&ce),
    ]);
    for tag in ["gkpd", "euclidean"] {
        let complex = p(&format!("complex_{tag}.txt"));
        let json = p(&format!("diagram_{tag}.json"));
        let csv = p(&format!("diagram_{tag}.csv"));
        ok(vec!["persistence", "--input", s(&complex), "--output", s(&json), "--csv", s(&csv)]);
    }
    let (dg, de, cert) = (p("diagram_gkpd.json"), p("diagram_euclidean.json"), p("certificate.json"));
    ok(vec![
        "compare", "--a", s(&dg), "--b", s(&de), "--epsilon", "0.3", "--slack", "0.1", "--output", s(&cert),
    ]);
    for name in ARTIFACTS {
        assert_eq!(fs::read(full.join(name)).unwrap(), fs::read(steps.join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn refuses_to_overwrite_without_force() {
    let dir = TempDir::new().unwrap();
    let input = equilateral(dir.path());
    let run = dir.path().join("run");
    let args = ["pipeline", "--input", s(&input), "--out", s(&run), "--t", "2000"];
    assert!(gkpd(&args).status.success());
    let again = gkpd(&args);
    assert_eq!(again.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(gkpd(&forced).status.success());
}

#[test]
fn compare_exit_code_on_failure() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    fs::write(&a, r#"[{"degree":0,"truncated":false,"pairs":[[0.5,1.0],[0.2,"inf"]]},{"degree":1,"truncated":true,"pairs":[]}]"#).unwrap();
    fs::write(&b, r#"[{"degree":0,"truncated":false,"pairs":[[1.5,3.0],[0.6,"inf"]]},{"degree":1,"truncated":true,"pairs":[]}]"#).unwrap();
    let cert = dir.path().join("cert.json");
    let out = gkpd(&["compare", "--a", s(&a), "--b", s(&b), "--epsilon", "0.25", "--output", s(&cert)]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
    assert_eq!(v["pass"], serde_json::Value::Bool(false));
    let same = dir.path().join("same.json");
    let out = gkpd(&["compare", "--a", s(&a), "--b", s(&a), "--output", s(&same)]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn config_file_with_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let input = equilateral(dir.path());
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        format!("input = {}\nout = {}\nt = 64\nseed = 4\n", s(&input), s(&dir.path().join("run"))),
    )
    .unwrap();
    let out = gkpd(&["pipeline", "--config", s(&cfg), "--t", "128"]);
    assert!(out.status.code() == Some(0) || out.status.code() == Some(2));
    let map: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/rff_map.json")).unwrap()).unwrap();
    assert_eq!(map["t"], 128);

    fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(gkpd(&["pipeline", "--config", s(&cfg)]).status.code(), Some(1));
}

#[test]
fn invalid_parameters_exit_one() {
    let dir = TempDir::new().unwrap();
    let input = equilateral(dir.path());
    let out_dir = dir.path().join("run");
    for extra in [vec!["--t", "7"], vec!["--epsilon", "1.5"], vec!["--sigma=-1"], vec!["--threads", "0"], vec!["--bogus"]] {
        let mut args = vec!["pipeline", "--input", s(&input), "--out", s(&out_dir)];
        args.extend(&extra);
        let out = gkpd(&args);
        assert_eq!(out.status.code(), Some(1), "{extra:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "{extra:?}");
    }
    let missing = gkpd(&["pipeline", "--input", s(&dir.path().join("nope.csv")), "--out", s(&out_dir)]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn euclidean_filtration_needs_weights() {
    let dir = TempDir::new().unwrap();
    let input = equilateral(dir.path());
    let out = gkpd(&[
        "filtration", "--geometry", "euclidean", "--input", s(&input), "--output", s(&dir.path().join("c.txt")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stale_weights_rejected() {
    let dir = TempDir::new().unwrap();
    let input = equilateral(dir.path());
    let w = dir.path().join("w.csv");
    fs::write(&w, "-0.1\n-0.1\n-0.1\n").unwrap();
    let out = gkpd(&[
        "filtration", "--input", s(&input), "--weights", s(&w), "--output", s(&dir.path().join("c.txt")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stale"));
}
