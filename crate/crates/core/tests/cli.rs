use std::fs;
use std::io::BufReader;
use std::path::Path;

use interchange_core::cli::{run, RunManifest, EXIT_FAILED, EXIT_OK, EXIT_USAGE};
use interchange_core::oracle::analytic_two_point_n2;
use interchange_core::CrossConfig;

fn argv(args: &[&str], out: &Path) -> Vec<String> {
    let mut v = vec!["interchange".to_string()];
    v.extend(args.iter().map(|s| s.to_string()));
    v.push("--out".into());
    v.push(out.display().to_string());
    v
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_reader(BufReader::new(fs::File::open(path).unwrap())).unwrap()
}

#[test]
fn gw_writes_survival() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(argv(&["gw", "--lambda", "2"], dir.path())), EXIT_OK);
    let v = json(&dir.path().join("gw.json"));
    assert!((v["z"].as_f64().unwrap() - 0.7968).abs() < 1e-4);
    assert!(v["residual"].as_f64().unwrap() < 1e-12);
    let m = RunManifest::read(&dir.path().join("gw.manifest.json")).unwrap();
    assert_eq!(m.subcommand, "gw");
    assert_eq!(m.outputs, vec!["gw.json"]);
    assert!(m.end_unix_ms.unwrap() >= m.start_unix_ms);
}

#[test]
fn sample_two_point_matches_analytic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sample",
        "--n",
        "2",
        "--theta",
        "2",
        "--lambda",
        "1",
        "--replicas",
        "100000",
        "--sampler",
        "rejection",
    ];
    assert_eq!(run(argv(&args, dir.path())), EXIT_OK);
    let v = json(&dir.path().join("sample_summary.json"));
    let tp = &v["two_point_1_2"];
    let est = tp["estimate"].as_f64().unwrap();
    let se = tp["standard_error"].as_f64().unwrap();
    let analytic = tp["analytic"].as_f64().unwrap();
    assert!((analytic - analytic_two_point_n2(2.0, 0.5)).abs() < 1e-15);
    assert!((est - analytic).abs() <= 3.0 * se, "{est} vs {analytic}");
    let csv = fs::read_to_string(dir.path().join("sample.csv")).unwrap();
    assert_eq!(csv.lines().count(), 100_001);
}

#[test]
fn sweep_shape_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--n",
        "500,1000",
        "--lambda",
        "0.3,3",
        "--theta",
        "2",
        "--replicas",
        "200",
        "--chains",
        "20",
    ];
    assert_eq!(run(argv(&args, dir.path())), EXIT_OK);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 800);
    let mut cells = std::collections::BTreeMap::new();
    for r in &rows {
        let f: Vec<&str> = r.split(',').collect();
        *cells
            .entry((f[1].to_string(), f[2].to_string(), f[3].to_string()))
            .or_insert(0) += 1;
    }
    assert_eq!(cells.len(), 4);
    assert!(cells.values().all(|&c| c == 200));
    let summaries = json(&dir.path().join("sweep_summary.json"));
    assert_eq!(summaries.as_array().unwrap().len(), 4);

    let input = dir.path().join("sweep.csv").display().to_string();
    assert_eq!(
        run(argv(&["report", "--input", &input], dir.path())),
        EXIT_OK
    );
    let plot = fs::read_to_string(dir.path().join("sweep_plot.csv")).unwrap();
    let lines: Vec<&str> = plot.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(
        lines[0],
        "theta,n,lambda,replicas,mean_c1_over_n,median_c1_over_n,p_c1_ge_0.01n"
    );
    assert!(lines[1].starts_with("2,500,0.3,200,"));
    assert!(lines[2].starts_with("2,500,3,200,"));
}

#[test]
fn sample_spool_and_loop_dump() {
    let dir = tempfile::tempdir().unwrap();
    let spool = dir.path().join("samples.jsonl").display().to_string();
    let loops = dir.path().join("loops.json").display().to_string();
    let args = [
        "sample",
        "--n",
        "12",
        "--lambda",
        "1.5",
        "--theta",
        "1.5",
        "--replicas",
        "8",
        "--burn-in",
        "5",
        "--spool",
        &spool,
        "--dump-loops",
        &loops,
    ];
    assert_eq!(run(argv(&args, dir.path())), EXIT_OK);
    let configs =
        CrossConfig::read_jsonl_stream(BufReader::new(fs::File::open(&spool).unwrap())).unwrap();
    assert_eq!(configs.len(), 8);
    assert!(configs
        .iter()
        .all(|(n, c)| *n == 12 && (c.beta() - 0.125).abs() < 1e-15));
    let dumped = json(Path::new(&loops));
    let total: usize = dumped
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l.as_array().unwrap().len())
        .sum();
    assert!(total >= 12);
    let csv = fs::read_to_string(dir.path().join("sample.csv")).unwrap();
    let first_ell: usize = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(4)
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(dumped.as_array().unwrap().len(), first_ell);
}

#[test]
fn config_file_and_field_weight() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"n": 10, "lambda": 1.0, "field_h": 0.3, "burn_in": 5, "thin": 1, "seed": 3}"#,
    )
    .unwrap();
    let args = [
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--replicas",
        "5",
    ];
    assert_eq!(run(argv(&args, dir.path())), EXIT_OK);
    let csv = fs::read_to_string(dir.path().join("sample.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "10");
    // theta column carries theta_max = 2cosh(h * lambda)
    let theta: f64 = row[3].parse().unwrap();
    assert!((theta - 2.0 * 0.3f64.cosh()).abs() < 1e-11);
}

#[test]
fn verifiers_pass_and_fail() {
    let dir = tempfile::tempdir().unwrap();
    let ok = [
        "verify-colouring",
        "--n",
        "20",
        "--replicas",
        "2000",
        "--chains",
        "20",
        "--seed",
        "4",
    ];
    assert_eq!(run(argv(&ok, dir.path())), EXIT_OK);
    let bad = [
        "verify-colouring",
        "--n",
        "20",
        "--replicas",
        "2000",
        "--chains",
        "20",
        "--colour-theta",
        "1",
        "--seed",
        "4",
    ];
    assert_eq!(run(argv(&bad, dir.path())), EXIT_FAILED);
    let v = json(&dir.path().join("verify-colouring.json"));
    assert_eq!(v["passed"], false);

    let twist = [
        "verify-twist",
        "--n",
        "4",
        "--replicas",
        "20000",
        "--seed",
        "5",
    ];
    assert_eq!(run(argv(&twist, dir.path())), EXIT_OK);
    let tight = [
        "verify-twist",
        "--n",
        "4",
        "--replicas",
        "2000",
        "--threshold",
        "0.0001",
        "--seed",
        "5",
    ];
    assert_eq!(run(argv(&tight, dir.path())), EXIT_FAILED);

    let q = [
        "xcheck-quantum",
        "--n",
        "2,3",
        "--replicas",
        "20000",
        "--seed",
        "6",
    ];
    assert_eq!(run(argv(&q, dir.path())), EXIT_OK);
    let v = json(&dir.path().join("xcheck-quantum.json"));
    assert!(v["checks"][0]["exact_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(argv(&["sample", "--n", "5"], dir.path())), EXIT_USAGE);
    assert_eq!(
        run(argv(
            &["sample", "--n", "5", "--lambda", "1", "--theta", "0.5"],
            dir.path()
        )),
        EXIT_USAGE
    );
    assert_eq!(
        run(argv(
            &["sample", "--n", "5", "--lambda", "1", "--sampler", "gibbs"],
            dir.path()
        )),
        EXIT_USAGE
    );
    assert_eq!(
        run(argv(
            &["sample", "--n", "5", "--lambda", "1", "--unknown"],
            dir.path()
        )),
        EXIT_USAGE
    );
    assert_eq!(run(["interchange", "--version"]), EXIT_OK);
}
