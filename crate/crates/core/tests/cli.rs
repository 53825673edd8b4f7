use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seqbf"))
}

fn bundled(name: &str) -> PathBuf {
    [
        env!("CARGO_MANIFEST_DIR"),
        "configs",
        &format!("{name}.json"),
    ]
    .iter()
    .collect()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Writes a variant of a bundled config to `dir`.
fn variant(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let text = std::fs::read_to_string(bundled(name)).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    edit(&mut v);
    let path = dir.join(format!("{name}-variant.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn characteristics_prints_appendix_a_table() {
    let o = run(&[
        "characteristics",
        "--config",
        path_str(&bundled("appendix-a")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("Sequential Bayes Factor Design"));
    for line in [
        "     1      0.1302      0.0041           0.8657",
        "     5      0.8068      0.0087           0.1845",
    ] {
        let found = out.lines().any(|l| {
            let got: Vec<f64> = l
                .split_whitespace()
                .filter_map(|t| t.parse().ok())
                .collect();
            let want: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().unwrap())
                .collect();
            got.len() == 4
                && got[0] == want[0]
                && got[1..]
                    .iter()
                    .zip(&want[1..])
                    .all(|(g, w)| (g - w).abs() <= 0.0015)
        });
        assert!(found, "no row like `{line}` in\n{out}");
    }
    assert!(out.contains("NOTE:  BF01 < 1 indicates evidence for H1 over H0"));
}

#[test]
fn characteristics_csv_has_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("a.csv");
    let o = run(&[
        "characteristics",
        "--config",
        path_str(&bundled("lowpv-h1")),
        "--out",
        path_str(&csv),
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "design_id,m,stage,n1,n2,metric,value,err_est"
    );
    let rows: Vec<&str> = lines.collect();
    assert!(rows
        .iter()
        .any(|r| r.starts_with("lowpv-h1,3,3,75,75,pr_h1,0.82")));
    assert!(rows.iter().all(|r| !r.contains(';')));
}

#[test]
fn invalid_threshold_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = variant(dir.path(), "appendix-a", |v| {
        v["thresholds"]["k0"] = 0.5.into();
    });
    let o = run(&["characteristics", "--config", path_str(&path)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("k0 must exceed 1"), "{}", stderr(&o));
}

#[test]
fn unknown_key_and_bad_json_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = variant(dir.path(), "appendix-a", |v| {
        v["thresholds"]["k2"] = 3.into();
    });
    let o = run(&["characteristics", "--config", path_str(&path)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("k2"), "{}", stderr(&o));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n  \"name\": \"x\",\n  oops\n}\n").unwrap();
    let o = run(&["characteristics", "--config", path_str(&broken)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("broken.json:3:"), "{}", stderr(&o));

    let o = run(&["characteristics", "--config", "/nonexistent/design.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = run(&["characteristics", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn samplesize_reproduces_low_pv_search() {
    for (name, want) in [("lowpv-h1", "102"), ("lowpv-h0", "87")] {
        let o = run(&[
            "samplesize",
            "--config",
            path_str(&bundled(name)),
            "--format",
            "json",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["result"]["n_max"].to_string(), want, "{v}");
    }
}

#[test]
fn unreachable_target_exits_4() {
    let o = run(&[
        "samplesize",
        "--config",
        path_str(&bundled("lowpv-h1")),
        "--target",
        "0.999",
        "--hypothesis",
        "h1",
        "--n-hi",
        "120",
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("target unreachable"), "{}", stderr(&o));
}

#[test]
fn bf_reproduces_low_pv_table() {
    let mu = 3f64.ln().to_string();
    for (z, sigma, want) in [
        ("2.23", "0.7305", "(1/9.2)"),
        ("2.60", "0.4818", "(1/27.9)"),
    ] {
        let o = run(&[
            "bf",
            "--family",
            "point_point",
            "--mu",
            &mu,
            "--z",
            z,
            "--sigma",
            sigma,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains(want), "{}", stdout(&o));
    }
    let half = (3f64.ln() / (2.0 * 0.7305)).to_string();
    let o = run(&[
        "bf",
        "--family",
        "point_point",
        "--mu",
        &mu,
        "--z",
        &half,
        "--sigma",
        "0.7305",
    ]);
    assert!(stdout(&o).contains("BF01 = 1.000"), "{}", stdout(&o));
}

#[test]
fn bf_t_matches_library() {
    let o = run(&[
        "bf",
        "--config",
        path_str(&bundled("appendix-a")),
        "--t",
        "2.2",
        "--n1",
        "50",
        "--n2",
        "50",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let want = seqbf::bayesfactor::bf01_t(
        2.2,
        25.0,
        98.0,
        &seqbf::bayesfactor::InformedT::jzs_one_sided(),
    )
    .unwrap();
    let got = v["bf01"].as_f64().unwrap();
    assert!((got - want).abs() < 1e-9 * want, "{got} vs {want}");
}

#[test]
fn non_representable_bf_exits_3() {
    let o = run(&[
        "bf",
        "--family",
        "point_point",
        "--mu",
        "1",
        "--z",
        "1e308",
        "--sigma",
        "1e-300",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    let o = run(&[
        "bf",
        "--family",
        "point_point",
        "--mu",
        "1",
        "--z",
        "40",
        "--sigma",
        "0.001",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
}

#[test]
fn bf_missing_inputs_are_config_errors() {
    let o = run(&["bf", "--family", "point_point", "--mu", "1", "--z", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["bf", "--family", "nonsense", "--z", "2", "--sigma", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    let mut text = String::new();
    for i in 0..2 {
        let csv = dir.path().join(format!("sim{i}.csv"));
        let o = run(&[
            "simulate",
            "--config",
            path_str(&bundled("appendix-a")),
            "--reps",
            "100000",
            "--seed",
            "11",
            "--out",
            path_str(&csv),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        text = stdout(&o);
        files.push(std::fs::read(&csv).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert!(text.contains("Overall: PASS"), "{text}");
    assert!(!text.contains(" FAIL"), "{text}");
    let csv = String::from_utf8(files[0].clone()).unwrap();
    assert!(csv.contains("appendix-a|analytic,5,5,100,100,pr_h1,"));
    assert!(csv.contains("appendix-a|simulated,5,5,100,100,pr_h1,"));
}

#[test]
fn zero_replications_is_a_config_error() {
    let o = run(&[
        "simulate",
        "--config",
        path_str(&bundled("appendix-a")),
        "--reps",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_brackets_the_sample_size_root() {
    let dir = tempfile::tempdir().unwrap();
    let path = variant(dir.path(), "lowpv-h1", |v| {
        v["sweep"]["n_max"] = serde_json::json!([100, 102]);
        v["sweep"]["m"] = serde_json::json!([3]);
    });
    let o = run(&["sweep", "--config", path_str(&path)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = stdout(&o);
    let value = |id: &str, metric: &str| -> f64 {
        csv.lines()
            .find(|l| l.starts_with(id) && l.contains(&format!(",{metric},")))
            .unwrap_or_else(|| panic!("no {metric} row for {id} in\n{csv}"))
            .split(',')
            .nth(6)
            .unwrap()
            .parse()
            .unwrap()
    };
    let h1 = "lowpv-h1|m=3|n_max=";
    assert!(value(&format!("{h1}102|theta = log 3"), "pr_correct") >= 0.90);
    assert!(value(&format!("{h1}100|theta = log 3"), "pr_correct") < 0.90);
    for n in [100, 102] {
        assert!(value(&format!("{h1}{n}|theta = 0"), "pr_misleading") <= 0.05);
    }
}

#[test]
fn empty_sweep_grid_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = variant(dir.path(), "lowpv-h1", |v| {
        v["sweep"]["n_max"] = serde_json::json!([]);
    });
    let o = run(&["sweep", "--config", path_str(&path)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("must be non-empty"), "{}", stderr(&o));
}

#[test]
fn json_report_round_trips_numbers() {
    let o = run(&[
        "characteristics",
        "--config",
        path_str(&bundled("two-sided-m4")),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.to_string().contains("stages"), "{v}");
}
