use std::path::Path;
use std::process::{Command, Output};

fn mfdim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfdim"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect()
}

#[test]
fn generate_bernoulli_writes_full_tree() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfdim(
        &[
            "generate",
            "--bernoulli",
            "0.3,0.7",
            "--depth",
            "16",
            "-o",
            "m.tree",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("m.tree")).unwrap();
    assert_eq!(
        text.lines().filter(|l| l.starts_with("node ")).count(),
        (1 << 17) - 1
    );
    assert!(stdout(&o).contains("131071 nodes"));
}

#[test]
fn generate_cantor_leaf_length() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfdim(
        &[
            "generate", "--cantor", "--ratio", "0.2", "--depth", "10", "-o", "c.tree",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o)
        .lines()
        .find(|l| l.starts_with("leaf length"))
        .unwrap()
        .to_owned();
    let len: f64 = line.trim_start_matches("leaf length ").parse().unwrap();
    assert!((len - 0.2f64.powi(10)).abs() < 1e-18);
    assert!(stdout(&o).starts_with("embedded tree"));
}

#[test]
fn missing_depth_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfdim(&["generate", "--bernoulli", "0.5,0.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--depth"));
}

#[test]
fn estimate_uniform_row_is_all_ones() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfdim(
        &[
            "estimate",
            "--bernoulli",
            "0.5,0.5",
            "--depth",
            "16",
            "--q",
            "0",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("# mfdim-estimate v1\n# config: {"));
    assert_eq!(data_rows(&out), vec!["0,1,1,1,1,2000,1"]);
}

#[test]
fn estimate_bernoulli_q2_brackets_oracle() {
    let dir = tempfile::tempdir().unwrap();
    mfdim(
        &[
            "generate",
            "--bernoulli",
            "0.3,0.7",
            "--depth",
            "16",
            "-o",
            "m.tree",
        ],
        dir.path(),
    );
    let o = mfdim(&["estimate", "--measure", "m.tree", "--q", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let row: Vec<f64> = data_rows(&out)[0]
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    // finite-depth percentiles spread around the a.e. value -0.8813
    assert!(row[1] < -0.8813 && -0.8813 < row[2], "{row:?}");
    assert!(row[1] <= row[3] && row[2] <= row[4]);
}

#[test]
fn corrupt_tree_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.tree"),
        "# mfdim tree v1\narity 2\ndepth 1\nmode symbolic\nnode - 1 1\nnode 0 1 0.5\nnode 1 1 zz\n",
    )
    .unwrap();
    let o = mfdim(&["estimate", "--measure", "bad.tree"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 7"), "{}", stderr(&o));
}

#[test]
fn plot_data_has_triples_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfdim(
        &[
            "estimate",
            "--bernoulli",
            "0.3,0.7",
            "--depth",
            "12",
            "--samples",
            "100",
            "--q",
            "0",
            "--plot-data",
            "p.csv",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert!(text.starts_with("# mfdim-plot-data v1\n"));
    let rows = data_rows(&text);
    // for_tree(2, 12): k = 4..=10
    assert_eq!(rows.len(), 100 * 7);
    let f: Vec<f64> = rows[0].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(f[1], 4.0);
    assert!((f[2] - (-4.0 * 2f64.ln())).abs() < 1e-12);
    assert!(f[3] <= 0.0 && f[3] == f[4]);
}

#[test]
fn project_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "project",
        "--measure",
        "cantor5sq",
        "--m",
        "1",
        "--subspaces",
        "50",
        "--samples",
        "100",
        "--seed",
        "3",
    ];
    let o = mfdim(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = data_rows(&out);
    assert_eq!(rows.len(), 50);
    assert_eq!(
        out.lines()
            .filter(|l| l.starts_with("# summary: q=0 "))
            .count(),
        1
    );
    let again = mfdim(&args, dir.path());
    assert_eq!(stdout(&again), out);
}

#[test]
fn project_writes_projected_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfdim(
        &[
            "project",
            "--measure",
            "square",
            "--subspaces",
            "2",
            "--samples",
            "100",
            "--projected-out",
            "v.csv",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("v.csv")).unwrap();
    assert!(text.starts_with("x1,weight\n"));
}

#[test]
fn project_m_equal_n_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfdim(
        &["project", "--measure", "cantor5sq", "--m", "2"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_uniform_quasi_bernoulli_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfdim(
        &[
            "verify",
            "quasi-bernoulli",
            "--p",
            "0.5,0.5",
            "--depth",
            "16",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("overall: PASS"));
}

#[test]
fn verify_projection_reports_pass_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfdim(
        &[
            "verify",
            "projection",
            "--measure",
            "cantor5sq",
            "--m",
            "1",
            "--format",
            "json",
        ],
        dir.path(),
    );
    // a verdict either way, never a usage error
    assert!(
        matches!(o.status.code(), Some(0) | Some(1)),
        "{}",
        stderr(&o)
    );
    let doc: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(doc["schema"], "mfdim-verify/1");
    let check = &doc["result"]["checks"][0];
    assert_eq!(check["name"], "q=0 pass fraction");
    assert_eq!(check["expected"], 0.9);
    assert_eq!(
        doc["result"]["pass"].as_bool().unwrap(),
        o.status.code() == Some(0)
    );
}

#[test]
fn verify_unknown_experiment_lists_names() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfdim(&["verify", "nosuch"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for name in [
        "quasi-bernoulli",
        "unidimensionality",
        "ergodic",
        "projection",
        "kernel-lemmas",
    ] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn verify_ergodic_and_kernel_lemmas() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfdim(
        &["verify", "ergodic", "--depths", "8,16", "--samples", "500"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = mfdim(&["verify", "ergodic", "--samples", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = mfdim(
        &[
            "verify",
            "kernel-lemmas",
            "--samples",
            "2000",
            "--format",
            "csv",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("experiment,check,relation"));
}

#[test]
fn verify_unidimensionality_detects_two_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfdim(
        &[
            "verify",
            "unidimensionality",
            "--measure",
            "two-regime",
            "--depth",
            "16",
            "--q",
            "0",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("overall: FAIL"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "seed = 7\n[estimate]\nbernoulli = [0.3, 0.7]\ndepth = 12\nsamples = 200\nq = [0.0, 2.0]\n[estimate.schedule]\nk_max = 9\n",
    )
    .unwrap();
    let o = mfdim(
        &["--config", "run.toml", "estimate", "--samples", "300"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let config_line = out.lines().nth(1).unwrap();
    let config: serde_json::Value =
        serde_json::from_str(config_line.trim_start_matches("# config: ")).unwrap();
    assert_eq!(config["samples"], 300);
    assert_eq!(config["seed"], 7);
    assert_eq!(config["schedule"]["k_max"], 9);
    assert_eq!(data_rows(&out).len(), 2);
    assert!(data_rows(&out)[0].ends_with(",300,7"));

    std::fs::write(dir.path().join("typo.toml"), "[estimate]\nsampels = 3\n").unwrap();
    let o = mfdim(&["--config", "typo.toml", "estimate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        stdout(&mfdim(
            &[
                "verify",
                "quasi-bernoulli",
                "--p",
                "0.3,0.7",
                "--depth",
                "12",
                "--q",
                "0,2",
                "--samples",
                "400",
                "--threads",
                threads,
                "--format",
                "json",
            ],
            dir.path(),
        ))
    };
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(one, run("8"));
}

#[test]
fn appended_outputs_and_report() {
    let dir = tempfile::tempdir().unwrap();
    for seed in ["1", "2"] {
        let o = mfdim(
            &[
                "estimate",
                "--bernoulli",
                "0.5,0.5",
                "--depth",
                "10",
                "--q",
                "0",
                "--samples",
                "100",
                "--seed",
                seed,
                "-o",
                "runs.csv",
                "--append",
            ],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(text.matches("# mfdim-estimate v1").count(), 2);
    mfdim(
        &[
            "verify",
            "ergodic",
            "--depths",
            "6,10",
            "--samples",
            "200",
            "--format",
            "json",
            "-o",
            "v.json",
        ],
        dir.path(),
    );
    let o = mfdim(&["report", "runs.csv", "v.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("mfdim-estimate v1"));
    assert!(out.contains("experiment: ergodic-constancy"));
    std::fs::write(dir.path().join("junk.txt"), "hello\n").unwrap();
    assert_eq!(
        mfdim(&["report", "junk.txt"], dir.path()).status.code(),
        Some(1)
    );
}

#[test]
fn schedule_flags_and_help() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfdim(
        &[
            "estimate",
            "--bernoulli",
            "0.5,0.5",
            "--depth",
            "14",
            "--base",
            "2",
            "--k-min",
            "4",
            "--k-max",
            "12",
            "--window",
            "3",
            "--q",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(
        out.contains(r#""schedule":{"base":2.0,"k_max":12,"k_min":4,"tail_window":3}"#),
        "{out}"
    );
    assert_eq!(data_rows(&out), vec!["1,0,0,0,0,2000,1"]);
    for cmd in ["generate", "estimate", "project", "verify", "report"] {
        assert_eq!(
            mfdim(&[cmd, "--help"], dir.path()).status.code(),
            Some(0),
            "{cmd}"
        );
    }
}
