//! Command-line behavior: exit codes, output shape and determinism.

use std::f64::consts::PI;
use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["qcdl"];
    argv.extend_from_slice(args);
    let code = qcdl_cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

/// c₂ with β = a_n = 0.1, evaluated independently.
fn c2_placeholder() -> f64 {
    0.01 * 3f64.sqrt().ln() / (2.0 * PI)
}

#[test]
fn bound_example() {
    let r = (-1.0f64).exp().to_string();
    let (code, out, _) = run(&["bound", "--n", "2", "--delta", "0.5", "--q", "const:1", "--eps0", "1", "--r", &r]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["schema"], "qcdl-1");
    assert!((v["radial_integral"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    let expected = 4.0 * PI / c2_placeholder();
    assert!((v["bound"].as_f64().unwrap() - expected).abs() < 1e-7 * expected);
}

#[test]
fn bound_csv_and_verbose() {
    let (code, out, err) = run(&[
        "bound", "--n", "3", "--delta", "0.5", "--q", "radial:s=1", "--eps0", "1", "--x", "0.1,0.1,0", "--format",
        "csv", "--verbose",
    ]);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "r,radial_integral,bound,bound_unexponentiated");
    assert_eq!(lines[1].split(',').count(), 4);
    assert!(err.contains("non-certified"));
}

#[test]
fn bound_exit_codes() {
    assert_eq!(run(&["bound", "--n", "2", "--q", "const:1", "--eps0", "1", "--r", "0.3"]).0, 2);
    assert_eq!(run(&["bound", "--n", "2", "--delta", "0.5", "--q", "const:1", "--eps0", "1", "--r", "0"]).0, 3);
    assert_eq!(run(&["bound", "--n", "2", "--delta", "0.5", "--q", "wobble:1", "--eps0", "1", "--r", "0.1"]).0, 2);
    assert_eq!(run(&["bound", "--n", "2", "--delta", "0.5", "--q", "const:0", "--eps0", "1", "--r", "0.1"]).0, 3);
    assert_eq!(run(&["bound", "--n", "2", "--delta", "-1", "--q", "const:1", "--eps0", "1", "--r", "0.1"]).0, 2);
    assert_eq!(run(&["bound", "--n", "1", "--delta", "0.5", "--q", "const:1", "--eps0", "1", "--r", "0.1"]).0, 2);
    // |x − x0| ≥ eps0
    assert_eq!(run(&["bound", "--n", "2", "--delta", "0.5", "--q", "const:1", "--eps0", "1", "--r", "2"]).0, 3);
}

#[test]
fn phi_test_verdicts() {
    let (code, out, _) = run(&["phi-test", "--phi", "exp:alpha=1", "--n", "2", "--delta0", "3"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["verdict"], "diverges");
    assert_eq!(v["probes"].as_array().unwrap().len(), 12);
    let (_, out, _) = run(&["phi-test", "--phi", "linear:a=1,b=0", "--n", "2", "--delta0", "1"]);
    assert_eq!(json(&out)["verdict"], "converges");
    let (_, out, _) = run(&["phi-test", "--phi", "pwl:0,0;1,1;3,5", "--n", "2", "--delta0", "1", "--format", "csv"]);
    assert!(out.starts_with("upper_limit,partial_integral,verdict\n"));
    assert_eq!(run(&["phi-test", "--phi", "exp:alpha=1", "--n", "2", "--delta0", "0"]).0, 3);
    let (code, _, err) = run(&["phi-test", "--phi", "exp:alfa=1", "--n", "2", "--delta0", "3"]);
    assert_eq!(code, 2);
    assert!(err.contains("alfa"));
}

#[test]
fn profile_tables() {
    let base = ["profile", "--phi", "exp:alpha=1", "--bigM", "1", "--delta", "0.5", "--rho", "1", "--n", "2"];
    let with = |radii: &str| {
        let mut a = base.to_vec();
        a.extend(["--radii", radii]);
        run(&a)
    };
    let (code, out, _) = with("1e-1,1e-2,1e-3,1e-4,1e-5,1e-6");
    assert_eq!(code, 0);
    let moduli: Vec<f64> = out.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(moduli.len(), 6);
    assert!(moduli.windows(2).all(|w| w[1] < w[0]));

    assert_eq!(with(""), (0, "r,modulus,flag\n".to_string(), String::new()));
    let (code, out, _) = with("0.1,0.6");
    assert_eq!(code, 0);
    assert!(out.lines().nth(2).unwrap().ends_with(",,outside_regime"));
    assert_eq!(with("-1,0").0, 2);
    assert_eq!(with("a,b").0, 2);

    let (code, out, _) = run(&[
        "profile", "--phi", "linear:a=1,b=0", "--bigM", "1", "--delta", "0.5", "--rho", "1", "--n", "2", "--radii",
        "0.1,0.01", "--format", "json",
    ]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert!(v["rows"].as_array().unwrap().iter().all(|r| r["flag"] == "degenerate"));
}

#[test]
fn verify_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stretch.csv");
    let p = path.to_str().unwrap();
    let (code, out, _) = run(&["verify", "--map", "radial_stretch:alpha=2", "--samples", "25", "--out", p]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["rows"], 25);
    let csv = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().count(), 26);
    assert!(csv.starts_with("x1,x2,h_emp,h_bound_lemma1,h_bound_thm1,margin,verdict\n"));

    // a field far below the true dilatation of a strong stretch, with large constants, must fail
    let (code, out, err) = run(&[
        "verify", "--map", "linear_diag:50,50", "--q", "const:1", "--delta", "10", "--beta", "1000", "--a-n", "1000",
        "--samples", "40",
    ]);
    assert_eq!(code, 1, "{err}");
    assert_eq!(json(&out)["aggregate"], "fail");
    assert!(err.contains("verification failed"));

    // Δ derived with an a_n beyond the cap of c(E)
    assert_eq!(run(&["verify", "--map", "identity", "--a-n", "100", "--samples", "5"]).0, 2);
    assert_eq!(run(&["verify", "--map", "identity", "--phi", "exp", "--samples", "5"]).0, 2);
    assert_eq!(run(&["verify", "--map", "linear_diag:1,2,3", "--samples", "5"]).0, 2);
}

#[test]
fn verify_with_convention_fields_in_three_dimensions() {
    let (code, out, err) = run(&[
        "verify", "--map", "linear_diag:2,1,1", "--n", "3", "--q", "outer", "--phi", "exp:alpha=0.1", "--bigM", "50",
        "--samples", "10",
    ]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    assert_eq!(v["metadata"]["field"], "outer");
    assert_eq!(v["metadata"]["member"], true);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[constants]\nbeta = 0.5\n[dim.2]\na_n = 0.2\n").unwrap();
    let c = cfg.to_str().unwrap();
    let args = ["bound", "--n", "2", "--delta", "0.5", "--q", "const:1", "--eps0", "1", "--r", "0.1"];
    let with_config = |extra: &[&str]| {
        let mut a = vec!["--config", c];
        a.extend_from_slice(&args);
        a.extend_from_slice(extra);
        json(&run(&a).1)
    };
    let v = with_config(&[]);
    assert_eq!(v["constants"]["beta"].as_f64(), Some(0.5));
    assert_eq!(v["constants"]["a_n"].as_f64(), Some(0.2));
    let v = with_config(&["--a-n", "0.3", "--lambda", "2"]);
    assert_eq!(v["constants"]["a_n"].as_f64(), Some(0.3));
    assert_eq!(v["constants"]["lambda_n"].as_f64(), Some(2.0));

    std::fs::write(&cfg, "[constants]\nbeta = 0.5\nbogus = 1\n").unwrap();
    let mut a = vec!["--config", c];
    a.extend_from_slice(&args);
    let (code, _, err) = run(&a);
    assert_eq!(code, 2);
    assert!(err.contains("bogus"), "{err}");
}

#[test]
fn binary_output_is_deterministic() {
    let go = || {
        Command::new(env!("CARGO_BIN_EXE_qcdl"))
            .args(["verify", "--map", "moebius_unit:1.5,0.5", "--samples", "30", "--seed", "4"])
            .output()
            .unwrap()
    };
    let (a, b) = (go(), go());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(std::str::from_utf8(&a.stdout).unwrap())["schema"], "qcdl-1");

    let help = Command::new(env!("CARGO_BIN_EXE_qcdl")).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    let bad = Command::new(env!("CARGO_BIN_EXE_qcdl")).arg("frobnicate").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
