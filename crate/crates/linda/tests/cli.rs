use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn linda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linda")).args(args).output().unwrap()
}

fn golden(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/golden")
        .join(name)
        .display()
        .to_string()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn analyze(dir: &Path, extra: &[&str]) -> (Output, PathBuf) {
    let out = dir.join("r.tsv");
    let (counts, meta) = (golden("counts.tsv"), golden("metadata.tsv"));
    let mut args = vec!["analyze", "--counts", &counts, "--metadata", &meta, "--out", path_str(&out)];
    if !extra.contains(&"--formula") {
        args.extend(["--formula", "group + c1"]);
    }
    args.extend(extra);
    (linda(&args), out)
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(linda(&["--version"]).status.code(), Some(0));
    assert_eq!(linda(&["analyze", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(linda(&[]).status.code(), Some(2));
    assert_eq!(linda(&["analyze", "--counts", "x"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    for extra in [
        &["--fdr", "1.5"][..],
        &["--kde-bandwidth", "-1"],
        &["--zero-handling", "magic"],
        &["--formula", "group * c1"],
        &["--formula", "nosuch"],
        &["--winsor", "0.9", "--no-winsor"],
    ] {
        let (o, _) = analyze(dir.path(), extra);
        assert_eq!(o.status.code(), Some(2), "{extra:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn malformed_input_exits_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("bad.tsv");
    fs::write(&counts, "taxon\ts0\ts1\ntaxonA\t4\t-2\n").unwrap();
    let meta = golden("metadata.tsv");
    let out = dir.path().join("r.tsv");
    let o = linda(&[
        "analyze", "--counts", path_str(&counts), "--metadata", &meta, "--formula", "group", "--out", path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("negative count at (taxonA, s1)"));
    assert!(!out.exists());
}

#[test]
fn ill_conditioned_design_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let meta = dir.path().join("meta.tsv");
    let mut text = String::from("sample\tgroup\thuge\n");
    for j in 0..13 {
        let g = if j % 2 == 0 { "A" } else { "B" };
        text.push_str(&format!("s{j}\t{g}\t{}\n", 1e14 * ((j * 7 % 5) as f64 + 0.5)));
    }
    fs::write(&meta, text).unwrap();
    let out = dir.path().join("r.tsv");
    let counts = golden("counts.tsv");
    let o = linda(&[
        "analyze", "--counts", &counts, "--metadata", path_str(&meta), "--formula", "group + huge", "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = analyze(dir.path(), &["--threads", "1"]);
    assert!(o.status.success());
    let one = fs::read(&out).unwrap();
    let (o, out) = analyze(dir.path(), &["--threads", "4"]);
    assert!(o.status.success());
    assert_eq!(one, fs::read(&out).unwrap());
}

#[test]
fn manifest_records_digests() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = analyze(dir.path(), &[]);
    assert!(o.status.success());
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("r.tsv.manifest.json")).unwrap()).unwrap();
    let results = fs::read(&out).unwrap();
    assert_eq!(manifest["outputs"][0]["sha256"], linda::manifest::sha256_hex(&results));
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["config"]["formula"], "group + c1");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn plot_data_tables() {
    let dir = tempfile::tempdir().unwrap();
    let results = golden("golden.tsv");
    let eff = dir.path().join("eff.tsv");
    let o = linda(&["plot-data", "--results", &results, "--kind", "effectsize", "--out", path_str(&eff)]);
    assert!(o.status.success());
    let parsed = linda::io::read_results_path(Path::new(&results)).unwrap();
    let shift = parsed.bias_shift().unwrap();
    let text = fs::read_to_string(&eff).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "taxon\tdebiased_coef\tnondebiased_coef\tci_lo\tci_hi\treject");
    for (line, row) in lines.zip(&parsed.rows) {
        let f: Vec<&str> = line.split('\t').collect();
        let num = |i: usize| f[i].parse::<f64>().unwrap();
        assert_eq!(num(1), row.coefficient);
        assert!((num(2) - (row.coefficient - shift)).abs() < 1e-15);
        // t quantile at 0.975 on 9 df
        let half = 2.2621571627409915 * row.stderr.unwrap();
        assert!((num(3) - (row.coefficient - half)).abs() < 1e-9);
        assert!((num(4) - (row.coefficient + half)).abs() < 1e-9);
    }

    let vol = dir.path().join("vol.tsv");
    let o = linda(&[
        "plot-data", "--results", &results, "--kind", "volcano", "--fdr", "0.6", "--out", path_str(&vol),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&vol).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    for (f, row) in rows.iter().zip(&parsed.rows) {
        assert!((f[2].parse::<f64>().unwrap() + row.pvalue.unwrap().log10()).abs() < 1e-12);
        assert_eq!(f[3] == "1", row.padj.unwrap() <= 0.6);
    }
    assert!(rows.iter().filter(|f| f[3] == "1").count() > 2);

    let o = linda(&["plot-data", "--results", &results, "--kind", "pie", "--out", path_str(&vol)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim.tsv");
    let args = [
        "simulate", "--setting", "S0", "--design", "C1", "--m", "60", "--n", "20", "--reps", "3",
        "--effect-index", "2", "--effect-index", "6", "--seed", "7", "--out", path_str(&out),
    ];
    let o = linda(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = fs::read(&out).unwrap();
    let rows = linda::io::parse_metrics(&first[..], "sim").unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].effect_index, rows[1].effect_index), (2, 6));
    assert!((rows[1].mu - 2.0).abs() < 1e-12);
    assert_eq!(rows[0].completed + rows[0].failures, 3);
    assert_eq!(rows[0].method, "ols");

    assert!(linda(&args).status.success());
    assert_eq!(first, fs::read(&out).unwrap(), "same seed, same output");

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("sim.tsv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"][0], 7);

    let o = linda(&["simulate", "--setting", "S9", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let o = linda(&["simulate", "--setting", "S0", "--method", "lmm", "--reps", "1", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_with_parameter_file() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("params.tsv");
    let mut text = String::from("taxon\tbeta0\tsigma2\n");
    for i in 0..40 {
        text.push_str(&format!("t{i}\t{}\t{}\n", (i % 7) as f64 - 3.0, 0.5 + (i % 3) as f64));
    }
    fs::write(&params, text).unwrap();
    let out = dir.path().join("sim.tsv");
    let o = linda(&[
        "simulate", "--setting", "S1", "--m", "40", "--n", "20", "--reps", "2", "--effect-index", "6", "--params",
        path_str(&params), "--out", path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let o = linda(&[
        "simulate", "--setting", "S1", "--m", "41", "--n", "20", "--reps", "2", "--params", path_str(&params),
        "--out", path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
