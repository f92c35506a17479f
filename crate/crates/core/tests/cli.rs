use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hydrofp::document::SolutionDocument;
use hydrofp::reference::{REFERENCE_FLOWS_GPM, REFERENCE_HEADS_FT};

fn reference_net() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/reference-net.txt")
}

fn hydrofp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hydrofp"))
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

const TREE_NET: &str = "\
[RESERVOIR]
0 500
[JUNCTIONS]
1 100
2 50
3 25
[PIPES]
1 0 1 2000 12 120
2 1 2 1500 8 110
3 3 1 1000 6 100
";

#[test]
fn solve_reference_network() {
    let net = reference_net();
    let o = hydrofp(&["solve", net.to_str().unwrap(), "--tol-gpm", "0.001", "--init-gpm", "600"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = SolutionDocument::from_json(&stdout(&o)).unwrap();
    assert!(doc.converged);
    assert!(doc.iterations.abs_diff(69) <= 5);
    for (got, want) in doc.flows_gpm.iter().zip(REFERENCE_FLOWS_GPM) {
        assert!((got - want).abs() < 0.05);
    }
    for (got, want) in doc.heads_ft.iter().zip(REFERENCE_HEADS_FT) {
        assert!((got - want).abs() < 0.05);
    }
    assert!((doc.reservoir_intake_gpm - 950.0).abs() < 0.01);
    assert!(doc.contraction.is_none());
    assert!(doc.warnings.iter().any(|w| w.starts_with("pipe 4:")));
}

#[test]
fn newton_method_matches_fixed_point() {
    let net = reference_net();
    let fp = SolutionDocument::from_json(&stdout(&hydrofp(&["solve", net.to_str().unwrap()]))).unwrap();
    let o = hydrofp(&["solve", net.to_str().unwrap(), "--method", "newton"]);
    assert_eq!(o.status.code(), Some(0));
    let nr = SolutionDocument::from_json(&stdout(&o)).unwrap();
    assert!(nr.converged);
    for (a, b) in fp.flows_gpm.iter().zip(&nr.flows_gpm) {
        assert!((a - b).abs() < 1e-3);
    }
}

#[test]
fn forced_non_convergence_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let net = reference_net();
    let o = hydrofp(&["solve", net.to_str().unwrap(), "--max-iter", "5", "--trace", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let csv = fs::read_to_string(&trace).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "iter,step_inf_gpm,ratio");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].ends_with(','));
    assert!(!csv.contains('\r'));
    let doc = SolutionDocument::from_json(&stdout(&o)).unwrap();
    assert!(!doc.converged);
    assert_eq!(doc.iterations, 5);
}

#[test]
fn trace_matches_iterations_and_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = dir.path().join("sol.json");
    let net = reference_net();
    let o = hydrofp(&[
        "solve",
        net.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let doc = SolutionDocument::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    let rows: Vec<Vec<String>> = fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), doc.iterations);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0], (k + 1).to_string());
        if k == 0 {
            assert_eq!(row[2], "");
        } else {
            let step: f64 = row[1].parse().unwrap();
            let prev: f64 = rows[k - 1][1].parse().unwrap();
            let ratio: f64 = row[2].parse().unwrap();
            assert_eq!(ratio, step / prev);
        }
    }
}

#[test]
fn output_is_deterministic() {
    let net = reference_net();
    let args = ["solve", net.to_str().unwrap(), "--analyze"];
    assert_eq!(hydrofp(&args).stdout, hydrofp(&args).stdout);
}

#[test]
fn analyze_reference_network() {
    let net = reference_net();
    let o = hydrofp(&["analyze", net.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("rho=0.8520\n"), "{text}");
    assert!(text.contains("local_contraction=true\n"));
    let value = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(key))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((value("alpha=") - value("empirical_ratio=")).abs() < 0.01);
}

#[test]
fn analyze_from_saved_solution_and_appended_block() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    let report = dir.path().join("report.json");
    let net = reference_net();
    let o = hydrofp(&["solve", net.to_str().unwrap(), "--analyze", "--out", sol.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let doc = SolutionDocument::from_json(&fs::read_to_string(&sol).unwrap()).unwrap();
    let block = doc.contraction.expect("contraction block");
    assert!(block.local_contraction);
    assert!((block.rho - 0.852).abs() < 0.005);

    let o = hydrofp(&[
        "analyze",
        net.to_str().unwrap(),
        "--solution",
        sol.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("rho=0.8520"));
    let saved: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(saved["local_contraction"], serde_json::Value::Bool(true));
}

#[test]
fn analyze_tree_and_failed_contraction() {
    let dir = tempfile::tempdir().unwrap();
    let tree = write(dir.path(), "tree.txt", TREE_NET);
    let o = hydrofp(&["analyze", tree.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("rho=0.0000\n"));

    // reference flows analysed against doubled demands: J doubles, rho ≈ 1.70
    let sol = dir.path().join("sol.json");
    let net = reference_net();
    hydrofp(&["solve", net.to_str().unwrap(), "--out", sol.to_str().unwrap()]);
    let doubled = fs::read_to_string(&net)
        .unwrap()
        .replace("2     150", "2     300")
        .replace("3     150", "3     300")
        .replace("4     200", "4     400")
        .replace("5     150", "5     300")
        .replace("7     300", "7     600");
    let doubled = write(dir.path(), "doubled.txt", &doubled);
    let o = hydrofp(&["analyze", doubled.to_str().unwrap(), "--solution", sol.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stdout(&o).contains("local_contraction=false"));
}

#[test]
fn analyze_rejects_zero_flow() {
    let dir = tempfile::tempdir().unwrap();
    // junction 3 has no demand, so pipe 3 carries nothing
    let net = write(dir.path(), "zero.txt", &TREE_NET.replace("3 25", "3 0"));
    let o = hydrofp(&["analyze", net.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("pipe 3") && err.contains("zero flow"), "{err}");
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let dup = write(dir.path(), "dup.txt", "[RESERVOIR]\n0 100\n[JUNCTIONS]\n1 5\n1 5\n[PIPES]\n1 0 1 100 6 100\n");
    let o = hydrofp(&["solve", dup.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 5"));

    let o = hydrofp(&["solve", "/nonexistent/net.txt"]);
    assert_eq!(o.status.code(), Some(1));

    let net = reference_net();
    let o = hydrofp(&["solve", net.to_str().unwrap(), "--tol-gpm", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = hydrofp(&["solve", net.to_str().unwrap(), "--init-gpm", "lots"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn per_pipe_initial_flows() {
    let dir = tempfile::tempdir().unwrap();
    let init = write(dir.path(), "q0.txt", "900 400 200 50 -100 300 80 -100 900\n");
    let net = reference_net();
    let arg = format!("@{}", init.display());
    let o = hydrofp(&["solve", net.to_str().unwrap(), "--init-gpm", &arg]);
    assert_eq!(o.status.code(), Some(0));
    let doc = SolutionDocument::from_json(&stdout(&o)).unwrap();
    assert!((doc.flows_gpm[0] - 815.03).abs() < 0.05);

    let short = write(dir.path(), "short.txt", "1 2 3");
    let arg = format!("@{}", short.display());
    let o = hydrofp(&["solve", net.to_str().unwrap(), "--init-gpm", &arg]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_command() {
    let net = reference_net();
    let o = hydrofp(&["validate", net.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("7 junctions, 9 pipes, 2 loops"));
}

#[test]
fn negative_initial_flow_and_usage_errors() {
    let net = reference_net();
    let o = hydrofp(&["solve", net.to_str().unwrap(), "--init-gpm", "-600"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = hydrofp(&["solve", net.to_str().unwrap(), "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(hydrofp(&["--help"]).status.code(), Some(0));
}
