#![allow(clippy::excessive_precision)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use divgeom::{centroid, CentroidProblem, DiscreteDistribution, DivergenceSpec, NumericConfig};
use serde_json::Value;

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

fn divgeom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divgeom")).args(args).current_dir(golden_dir()).output().expect("run divgeom")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON output")
}

fn assert_golden(golden: &str, args: &[&str]) {
    let out = divgeom(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let want = std::fs::read_to_string(golden_dir().join(golden)).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), want, "{golden}");
}

fn masses(v: &Value) -> Vec<f64> {
    v["solution"]["mass"].as_array().expect("solution mass").iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn eval_kl_matches_golden_and_oracle() {
    assert_golden("eval_kl.json", &["eval", "--family", "kl", "--p", "p.json", "--q", "q.json"]);
    // 0.5 ln 2 + 0.5 ln(2/3) = 0.5 ln(4/3), to 40 digits.
    let oracle = 0.143_841_036_225_890_463_719_609_502_996_913_715_751_8_f64;
    let value =
        stdout_json(&divgeom(&["eval", "--family", "kl", "--p", "p.json", "--q", "q.json"]))["value"].as_f64().unwrap();
    assert!((value - oracle).abs() <= 4.0 * f64::EPSILON * oracle, "{value}");
}

#[test]
fn kl_line_is_the_mixture() {
    let args = ["line", "--family", "kl", "--alpha", "0.5", "--p", "p.json", "--q", "q.json"];
    assert_golden("line_kl.json", &args);
    assert_eq!(masses(&stdout_json(&divgeom(&args))), vec![0.375, 0.625]);
}

#[test]
fn reverse_kl_line_is_the_normalized_geometric_mean() {
    let args = ["line", "--family", "reverse_kl", "--alpha", "0.5", "--p", "p.json", "--q", "q.json"];
    assert_golden("line_reverse_kl.json", &args);
    // sqrt(1/8) / (sqrt(1/8) + sqrt(3/8)) = 1 / (1 + sqrt 3) = (sqrt 3 - 1) / 2.
    let r0 = 0.366_025_403_784_438_646_763_723_170_752_936_183_471_4;
    let m = masses(&stdout_json(&divgeom(&args)));
    assert!((m[0] - r0).abs() <= 1e-15 && (m[1] - (1.0 - r0)).abs() <= 1e-15, "{m:?}");
}

#[test]
fn euclidean_ball_projection_matches_golden_and_analytic_solution() {
    let args = ["project-ball", "--family", "euclidean", "--p", "p.json", "--q", "q_outside.json", "--kappa", "0.04"];
    assert_golden("project_ball_euclidean.json", &args);
    // D_E(P‖R_α) = 0.16 α², so α* = 0.5 and P_* = (0.3, 0.7).
    let v = stdout_json(&divgeom(&args));
    let m = masses(&v);
    assert!((m[0] - 0.3).abs() <= 1e-12 && (m[1] - 0.7).abs() <= 1e-12, "{m:?}");
    assert!((v["multipliers"]["alpha_star"].as_f64().unwrap() - 0.5).abs() <= 1e-12);
    assert_eq!(v["converged"], Value::Bool(true));
}

#[test]
fn kl_moment_projection_matches_reference_solution() {
    // r_i = (1/3) / (C' + β z_i) solved to 40 digits.
    let reference = [0.243_050_087_404_306_04, 0.313_899_825_191_387_92, 0.443_050_087_404_306_04];
    let v = stdout_json(&divgeom(&[
        "project-moments",
        "--family",
        "kl",
        "--p",
        "[0.3333333333333333, 0.3333333333333333, 0.3333333333333334]",
        "--constraints",
        r#"{"T": [[0, 1, 2]], "m": [1.2]}"#,
    ]));
    for (got, want) in masses(&v).iter().zip(reference) {
        assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
    }
    assert_eq!(v["multipliers"]["beta"].as_array().unwrap().len(), 1);
    assert!(v["residuals"]["constraint"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn validation_errors_exit_with_1() {
    for args in [
        &["eval", "--family", "kl", "--p", "[0.5, 0.6]", "--q", "q.json"][..],
        &["eval", "--family", "kl", "--p", "[0.5, 0.5", "--q", "q.json"],
        &["eval", "--family", "nope", "--p", "p.json", "--q", "q.json"],
        &["eval", "--family", "kl", "--p", "missing.json", "--q", "q.json"],
        &["eval", "--family", "kl", "--p", "[0, 1]", "--q", "q.json"],
        &["eval", "--family", "kl", "--p", "p.json", "--q", "q.json", "--format", "csv"],
        &["project-ball", "--family", "kl", "--p", "p.json", "--q", "q.json"],
        &[
            "project-moments",
            "--family",
            "kl",
            "--p",
            "[0.2, 0.3, 0.5]",
            "--constraints",
            r#"{"T": [[0, 1, 2]], "m": [3]}"#,
        ],
        &["frobnicate"],
    ] {
        let out = divgeom(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn non_convergence_exits_with_2() {
    // The Euclidean projection onto E[Z] = 1.95 needs negative mass on atom 0.
    let out = divgeom(&[
        "project-moments",
        "--family",
        "euclidean",
        "--p",
        "[0.1, 0.1, 0.8]",
        "--constraints",
        r#"{"T": [[0, 1, 2]], "m": [1.95]}"#,
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_verify_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.jsonl");
    // Bregman with the negative-log generator is not convex in its second argument.
    let out = divgeom(&[
        "verify",
        "--family",
        "bregman",
        "--generator",
        "neg_log",
        "--trials",
        "50",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let lines: Vec<Value> =
        std::fs::read_to_string(&report).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(lines.iter().any(|r| r["failures"].as_u64().unwrap() > 0 && r.get("counterexample").is_some()));
}

#[test]
fn help_and_version_exit_with_0() {
    assert_eq!(divgeom(&["--help"]).status.code(), Some(0));
    assert_eq!(divgeom(&["--version"]).status.code(), Some(0));
}

#[test]
fn written_distributions_round_trip_exactly() {
    let cfg = NumericConfig::default();
    let points = r#"[[0.2, 0.3, 0.5], [0.6, 0.1, 0.3], {"weights": [1, 1, 2]}]"#;
    for family in ["kl", "reverse_kl", "euclidean"] {
        let v =
            stdout_json(&divgeom(&["centroid", "--family", family, "--points", points, "--weights", "0.5,0.3,0.2"]));
        let p = |m: &[f64]| DiscreteDistribution::new(m.to_vec(), None, &cfg).unwrap();
        let problem = CentroidProblem::new(
            DivergenceSpec::from_parts(family, None, None).unwrap(),
            vec![p(&[0.2, 0.3, 0.5]), p(&[0.6, 0.1, 0.3]), p(&[0.25, 0.25, 0.5])],
            vec![0.5, 0.3, 0.2],
            &cfg,
        )
        .unwrap();
        let direct = centroid(&problem, &cfg).unwrap();
        assert_eq!(masses(&v), direct.solution.mass(), "{family}");

        // Feeding the written solution back in reproduces it bit for bit.
        let solution = serde_json::to_string(&v["solution"]).unwrap();
        let again =
            stdout_json(&divgeom(&["line", "--family", family, "--alpha", "0", "--p", &solution, "--q", &solution]));
        assert_eq!(masses(&again), direct.solution.mass(), "{family}");
    }
}

#[test]
fn single_point_sweep_matches_line() {
    let line = stdout_json(&divgeom(&[
        "line", "--family", "renyi", "--order", "2", "--alpha", "0.3", "--p", "p.json", "--q", "q.json",
    ]));
    let sweep = stdout_json(&divgeom(&[
        "sweep", "--family", "renyi", "--order", "2", "--p", "p.json", "--q", "q.json", "--from", "0.3", "--to", "0.3",
        "--count", "1", "--format", "json",
    ]));
    assert_eq!(sweep.as_array().unwrap(), &vec![line.clone()]);

    let csv = divgeom(&[
        "sweep", "--family", "renyi", "--order", "2", "--p", "p.json", "--q", "q.json", "--from", "0.3", "--to", "0.3",
        "--count", "1",
    ]);
    let text = String::from_utf8(csv.stdout).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row[0], 0.3);
    assert_eq!(&row[3..], masses(&line).as_slice());
}

#[test]
fn kl_line_sweep_starts_at_zero_and_increases() {
    let out = divgeom(&["sweep", "--family", "kl", "--p", "p.json", "--q", "q.json", "--count", "21"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,value,residual,mass_0,mass_1"));
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 21);
    assert_eq!(values[0], 0.0);
    assert!(values.windows(2).all(|w| w[1] >= w[0]), "{values:?}");
}

#[test]
fn ball_sweep_distance_does_not_increase_with_radius() {
    let out = divgeom(&[
        "sweep",
        "--kind",
        "ball",
        "--family",
        "kl",
        "--p",
        "p.json",
        "--q",
        "q_outside.json",
        "--from",
        "0.01",
        "--to",
        "0.3",
        "--count",
        "15",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let values: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{values:?}");
}

#[test]
fn identical_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, args: &[&str]| {
        let path = dir.path().join(name);
        let mut full: Vec<&str> = args.to_vec();
        let path_str = path.to_str().unwrap().to_string();
        full.extend(["--out", &path_str]);
        assert!(divgeom(&full).status.success());
        std::fs::read(&path).unwrap()
    };
    let verify = ["verify", "--family", "kl", "--trials", "100", "--seed", "3"];
    assert_eq!(run("a.jsonl", &verify), run("b.jsonl", &verify));
    let moments = [
        "project-moments",
        "--family",
        "renyi",
        "--order",
        "0.5",
        "--p",
        "[0.1, 0.2, 0.3, 0.4]",
        "--constraints",
        r#"{"T": [[0, 1, 2, 3], [0, 1, 4, 9]], "m": [1.5, 3.5]}"#,
    ];
    let first = run("c.json", &moments);
    assert_eq!(first, run("d.json", &moments));
    assert!(!first.is_empty());
}
