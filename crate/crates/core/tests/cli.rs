//! End-to-end runs of the `sparse-em` binary on small configurations.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparse-em"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

fn meta(path: &Path, key: &str) -> Option<String> {
    let prefix = format!("# {key}=");
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix(&prefix).map(str::to_owned))
}

#[test]
fn help_exits_zero_and_unknown_flag_exits_one() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["compare", "--help"]).status.code(), Some(0));
    let out = run(&["compare", "--n", "10", "--bogus", "1", "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn m_above_n_is_a_contract_violation() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.csv");
    let out = run(&[
        "recover",
        "--n",
        "5",
        "--m",
        "6",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.trim().lines().count(), 1, "{stderr}");
    assert!(stderr.contains("m must not exceed n"), "{stderr}");
    assert!(!out_path.exists());
}

#[test]
fn naive_budget_overflow_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("c.csv");
    let out = run(&[
        "compare",
        "--n",
        "50",
        "--methods",
        "naive",
        "--sigma-grid",
        "0.1",
        "--outer-reps",
        "1",
        "--inner-reps",
        "1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("new approach"));
}

#[test]
fn recover_writes_estimate_and_one_based_support() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.csv");
    let out = run(&[
        "recover",
        "--mode",
        "new",
        "--n",
        "50",
        "--m",
        "25",
        "--sigma",
        "0.01",
        "--seed",
        "3",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let lines = data_lines(&out_path);
    assert_eq!(lines[0], "index,mu,x,estimate,in_support");
    assert_eq!(lines.len(), 51);
    assert!(lines[1].starts_with("1,5,"));
    assert_eq!(meta(&out_path, "n").as_deref(), Some("50"));
    assert_eq!(meta(&out_path, "seed").as_deref(), Some("3"));
    assert_eq!(meta(&out_path, "index_base").as_deref(), Some("1"));
    let residual: f64 = meta(&out_path, "residual").unwrap().parse().unwrap();
    assert!(residual.is_finite() && residual >= 0.0);

    for mode in ["conventional", "naive"] {
        let p = dir.path().join(format!("{mode}.csv"));
        let out = run(&[
            "recover",
            "--mode",
            mode,
            "--n",
            "10",
            "--k",
            "4",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert_eq!(data_lines(&p).len(), 11);
    }
}

#[test]
fn compare_writes_csv_and_valid_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cmp.csv");
    let svg = dir.path().join("cmp.svg");
    let out = run(&[
        "compare",
        "--n",
        "10",
        "--m",
        "5",
        "--sigma-grid",
        "0.2:0.6:0.2",
        "--outer-reps",
        "3",
        "--inner-reps",
        "5",
        "--methods",
        "conventional,naive,new",
        "--supplementary",
        "--out",
        csv.to_str().unwrap(),
        "--plot",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let lines = data_lines(&csv);
    assert_eq!(
        lines[0],
        "method,sigma,n,m,k,lambda,alpha,reps,mean_residual,se_residual,residual_type,seed"
    );
    // three σ values × (conventional x, conventional mu_of_mean, naive, new)
    assert_eq!(lines.len(), 1 + 12);
    let sigmas: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    for s in ["0.2", "0.4", "0.6"] {
        assert!(sigmas.contains(&s), "{sigmas:?}");
    }
    assert_eq!(meta(&csv, "sigma_grid").as_deref(), Some("0.2:0.6:0.2"));

    let text = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).expect("well-formed SVG");
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    let series = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("series"))
        .count();
    assert_eq!(series, 4);
    let bars = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("error-bar"))
        .count();
    assert_eq!(bars, 12);
}

#[test]
fn compare_output_is_thread_count_independent() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for threads in ["1", "3"] {
        let csv = dir.path().join(format!("t{threads}.csv"));
        let out = run(&[
            "compare",
            "--n",
            "10",
            "--sigma-grid",
            "0.3,0.9",
            "--outer-reps",
            "4",
            "--inner-reps",
            "3",
            "--threads",
            threads,
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        bytes.push(data_lines(&csv));
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn init_study_m_sweep_and_rip_run() {
    let dir = tempfile::tempdir().unwrap();
    let init = dir.path().join("init.csv");
    let out = run(&[
        "init-study",
        "--random-inits",
        "2",
        "--out",
        init.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let lines = data_lines(&init);
    assert_eq!(lines[0], "init_label,l1_norm,iterations,converged,seed");
    assert_eq!(lines.len(), 1 + 5);

    let sweep = dir.path().join("sweep.csv");
    let svg = dir.path().join("sweep.svg");
    let out = run(&[
        "m-sweep",
        "--n",
        "40",
        "--m-grid",
        "10:30:10",
        "--reps",
        "2",
        "--sigma",
        "0.01",
        "--out",
        sweep.to_str().unwrap(),
        "--plot",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let lines = data_lines(&sweep);
    assert_eq!(
        lines[0],
        "method,m,n,sigma,reps,mean_residual,se_residual,seed"
    );
    assert_eq!(lines.len(), 4);
    roxmltree::Document::parse(&std::fs::read_to_string(&svg).unwrap()).unwrap();

    let out = run(&["rip", "--n", "12", "--m", "6", "--k", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let row = stdout.lines().last().unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[0], "2");
    assert_eq!(fields[2], "66");
}

#[test]
fn malformed_grid_and_mean_spec_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    for bad in [
        ["--sigma-grid", "1:0:0.1"],
        ["--sigma-grid", "abc"],
        ["--mu-spec", "all=5"],
    ] {
        let mut args = vec!["compare", "--n", "10", "--out", csv.to_str().unwrap()];
        args.extend_from_slice(&bad);
        assert_eq!(run(&args).status.code(), Some(1), "{bad:?}");
    }
}
