use std::fs;
use std::process::{Command, Output};

use ftc_core::harness::cli::run_cli;
use ftc_core::harness::metrics::{ConsensusTrace, MetricsTrace};
use ftc_core::optim::Problem;
use ftc_core::DenseMatrix;

fn ftc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ftc")).args(args).output().unwrap()
}

fn in_process(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_cli(std::iter::once("ftc").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

#[test]
fn verify_power_of_two_exponential() {
    let out = ftc(&["verify", "--family", "one-peer-exp", "--n", "16"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("tau: 4"));
    let residual: f64 = text.lines().find_map(|l| l.strip_prefix("product residual: ")).unwrap().parse().unwrap();
    assert!(residual <= 1e-12);
    assert!(text.contains("result: pass"));
}

#[test]
fn verify_failure_is_a_result() {
    let out = ftc(&["verify", "--family", "one-peer-exp", "--n", "6"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("result: fail"));
}

#[test]
fn verify_matches_known_claims_up_to_72() {
    for n in 2..=72usize {
        let pow2 = n.is_power_of_two();
        let expect = |family: &str, want: bool| {
            let (code, text) = in_process(&["verify", "--family", family, "--n", &n.to_string()]);
            assert_eq!(code, 0, "{family} n={n}");
            let got = text.contains("result: pass");
            assert_eq!(got, want, "{family} n={n}: {text}");
        };
        expect("one-peer-exp", pow2);
        expect("p-peer-hypercuboid", true);
        if pow2 {
            expect("one-peer-hypercube", true);
        } else {
            assert_eq!(in_process(&["verify", "--family", "one-peer-hypercube", "--n", &n.to_string()]).0, 1);
        }
        // every n >= 2 is a power of itself, so de Bruijn always resolves
        expect("de-bruijn", true);
        // the edge union covers every offset only for n <= 3, where it is J_n
        expect("static-exp", n <= 3);
        expect("fully-connected", true);
    }
}

#[test]
fn gen_topology_writes_stochastic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.csv");
    let out =
        ftc(&["gen-topology", "--family", "de-bruijn", "--n", "8", "--index", "0", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let w = DenseMatrix::from_csv(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!((w.rows(), w.cols()), (8, 8));
    for i in 0..8 {
        assert!((w.row(i).iter().sum::<f64>() - 1.0).abs() <= 1e-15);
    }
}

#[test]
fn gen_topology_index_wraps() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(
        in_process(&[
            "gen-topology",
            "--family",
            "one-peer-exp",
            "--n",
            "8",
            "--index",
            "1",
            "--out",
            a.to_str().unwrap()
        ])
        .0,
        0
    );
    assert_eq!(
        in_process(&[
            "gen-topology",
            "--family",
            "one-peer-exp",
            "--n",
            "8",
            "--index",
            "4",
            "--out",
            b.to_str().unwrap()
        ])
        .0,
        0
    );
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn spectral_lists_each_matrix() {
    let (code, text) = in_process(&["spectral", "--family", "one-peer-exp", "--n", "8"]);
    assert_eq!(code, 0);
    let rhos: Vec<f64> = text.lines().map(|l| l.split("rho=").nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(rhos.len(), 3);
    // W(0) is connected: |1 + e^{2πi/8}| / 2 = cos(π/8)
    assert!((rhos[0] - (std::f64::consts::PI / 8.0).cos()).abs() <= 1e-9);
    assert!(rhos[1..].iter().all(|r| (r - 1.0).abs() <= 1e-9));
}

#[test]
fn consensus_emits_narrow_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    let out = ftc(&[
        "consensus",
        "--family",
        "p-peer-hypercuboid",
        "--n",
        "12",
        "--iters",
        "6",
        "--seed",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("iter,consensus_error\n"));
    let trace = ConsensusTrace::from_csv(&text).unwrap();
    assert_eq!(trace.rows.len(), 7);
    assert!(trace.at(3).unwrap() <= 1e-20 * trace.at(0).unwrap());
}

#[test]
fn optimize_writes_metrics_and_problem() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    let dump = dir.path().join("p.txt");
    let out = ftc(&[
        "optimize",
        "--algo",
        "gt-ft",
        "--family",
        "one-peer-exp",
        "--n",
        "8",
        "--alpha",
        "1e-4",
        "--sigma2",
        "1e-4",
        "--iters",
        "40",
        "--seed",
        "3",
        "--warmup",
        "--out",
        csv.to_str().unwrap(),
        "--dump-problem",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("iter,objective,grad_mean_sq,grad_at_mean_sq,consensus_error\n"));
    let trace = MetricsTrace::from_csv(&text).unwrap();
    assert_eq!(trace.rows.len(), 41);
    assert!(trace.rows[..=3].iter().all(|r| r.consensus_error <= 1e-24));
    let problem = Problem::from_dump(&fs::read_to_string(&dump).unwrap()).unwrap();
    assert_eq!((problem.n, problem.m, problem.d), (8, 50, 10));
}

#[test]
fn optimize_tuned_and_static() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    for algo in ["gt-static", "dgd"] {
        let (code, text) = in_process(&[
            "optimize",
            "--algo",
            algo,
            "--family",
            "p-peer-hypercuboid",
            "--n",
            "12",
            "--iters",
            "20",
            "--tuned-stepsize",
            "cor5",
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{algo}");
        assert!(text.contains(if algo == "gt-static" { "static-hypercuboid" } else { "p-peer-hypercuboid" }));
    }
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    let csv = csv.to_str().unwrap();
    assert_eq!(ftc(&["launch"]).status.code(), Some(1));
    let out = ftc(&["verify", "--family", "one-peer-exp", "--n", "8", "--colour", "red"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    assert_eq!(ftc(&["verify", "--family", "torus", "--n", "8"]).status.code(), Some(1));
    assert_eq!(ftc(&["verify", "--family", "one-peer-exp", "--n", "1"]).status.code(), Some(1));
    assert_eq!(ftc(&["verify", "--family", "one-peer-exp", "--n", "5000"]).status.code(), Some(1));
    assert_eq!(
        ftc(&["optimize", "--algo", "sgd", "--family", "one-peer-exp", "--n", "8", "--iters", "5", "--out", csv])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        ftc(&[
            "optimize",
            "--algo",
            "gt-ft",
            "--family",
            "one-peer-exp",
            "--n",
            "8",
            "--alpha",
            "-1",
            "--iters",
            "5",
            "--out",
            csv
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        ftc(&["preset", "--name", "fig9", "--scale", "desk", "--seed", "1", "--out-dir", dir.path().to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    // a runaway stepsize trips the divergence guard
    assert_eq!(
        ftc(&[
            "optimize",
            "--algo",
            "gt-ft",
            "--family",
            "one-peer-exp",
            "--n",
            "8",
            "--alpha",
            "1",
            "--iters",
            "500",
            "--out",
            csv
        ])
        .status
        .code(),
        Some(2)
    );
    let blocked = dir.path().join("file");
    fs::write(&blocked, "").unwrap();
    let nested = blocked.join("out");
    assert_eq!(
        ftc(&[
            "preset",
            "--name",
            "consensus",
            "--scale",
            "desk",
            "--seed",
            "1",
            "--out-dir",
            nested.to_str().unwrap()
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(ftc(&["--help"]).status.code(), Some(0));
}
