use std::path::Path;
use std::process::{Command, Output};

use clap::Parser;
use lamstat_cli::{run, Payload, Report, RunConfig, EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_OK};

fn lamstat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lamstat"))
        .args(args)
        .env_remove(lamstat_cli::OUT_DIR_ENV)
        .output()
        .unwrap()
}

fn report(out: &Output) -> Report {
    Report::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn every_fifth_is_one(n: usize) -> String {
    (1..=n)
        .map(|k| format!("{k},{}\n", u8::from(k % 5 == 0)))
        .collect()
}

#[test]
fn report_round_trips() {
    let out = lamstat(&["schedule", "--schedule", "floor-sqrt", "--n-max", "50"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let r = report(&out);
    assert_eq!(r.command, "schedule");
    assert_eq!(Report::from_json(&r.to_json()).unwrap(), r);
    let Payload::Schedule(s) = &r.payload else {
        panic!("{:?}", r.payload)
    };
    assert_eq!(s.lambda.as_ref().unwrap().lambda(50).unwrap(), 7.0);
}

#[test]
fn config_replays_to_the_same_payload() {
    let config = RunConfig::parse_from([
        "lamstat", "simulate", "example2", "--trials", "500", "--seed", "3",
    ]);
    let first = run(&config).report;
    let replayed: RunConfig =
        serde_json::from_str(&serde_json::to_string(&first.config).unwrap()).unwrap();
    assert_eq!(run(&replayed).report.normalized(), first.normalized());
}

#[test]
fn lacunary_description() {
    let out = lamstat(&["schedule", "--theta", "0,2,4,8,16", "--margin", "0.5"]);
    let Payload::Schedule(s) = report(&out).payload else {
        panic!()
    };
    let l = s.lacunary.unwrap();
    assert_eq!(l.lengths(), &[2, 2, 4, 8]);
    assert!(l.is_regular());
}

#[test]
fn analyze_and_qc_dispatch() {
    let dir = tempfile::tempdir().unwrap();
    let squares: String = (1..=2000)
        .map(|k: usize| format!("{}\n", u8::from(k.isqrt().pow(2) == k)))
        .collect();
    let input = write(dir.path(), "squares.csv", &squares);

    let out = lamstat(&["analyze", "--input", &input]);
    let Payload::Convergence(c) = report(&out).payload else {
        panic!()
    };
    assert_eq!(c.candidate_limit, 0.0);
    assert_eq!(c.verdict, lamstat::Verdict::ConvergedEvidence);

    let out = lamstat(&[
        "analyze", "--input", &input, "--method", "s-theta", "--theta", "pow2",
    ]);
    let Payload::Convergence(c) = report(&out).payload else {
        panic!()
    };
    assert_eq!(c.method, lamstat::Method::STheta);

    let out = lamstat(&["qc", "--input", &input, "--schedule", "floor-sqrt"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert!(matches!(report(&out).payload, Payload::Qc(_)));
}

#[test]
fn bad_input_exits_two_with_error_payload() {
    let dir = tempfile::tempdir().unwrap();
    let gap = write(dir.path(), "gap.csv", "1,5.0\n3,6.0\n");
    let out = lamstat(&["analyze", "--input", &gap]);
    assert_eq!(out.status.code(), Some(EXIT_INPUT));
    assert!(matches!(report(&out).payload, Payload::Error(_)));
    assert!(!out.stderr.is_empty());

    let out = lamstat(&["analyze", "--input", "/nonexistent/x.csv"]);
    assert_eq!(out.status.code(), Some(EXIT_INPUT));

    let out = lamstat(&["schedule", "--schedule", "cubic"]);
    assert_eq!(out.status.code(), Some(EXIT_INPUT));
}

#[test]
fn unknown_flags_are_rejected() {
    let out = lamstat(&["simulate", "example1", "--bogus"]);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
}

#[test]
fn strict_mode_flags_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "fifths.csv", &every_fifth_is_one(500));
    let out = lamstat(&["analyze", "--input", &input]);
    let Payload::Convergence(c) = report(&out).payload else {
        panic!()
    };
    assert_eq!(c.verdict, lamstat::Verdict::Inconclusive);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let out = lamstat(&["--strict", "analyze", "--input", &input]);
    assert_eq!(out.status.code(), Some(EXIT_INCONCLUSIVE));
}

#[test]
fn generate_csv_emits_bare_values() {
    let out = lamstat(&["generate", "jump-squares", "--n-max", "10", "--emit", "csv"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let text = String::from_utf8(out.stdout).unwrap();
    let values: Vec<f64> = text.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 10);
    // Jumps after k = 1, 4, 9.
    assert_eq!(values.last(), Some(&3.0));
}

#[test]
fn pair_embedding_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = write(dir.path(), "pairs.csv", "0,0.5\n3,3.2\n");
    let out = lamstat(&["generate", "pair-embedding", "--input", &pairs]);
    let Payload::Sequence(g) = report(&out).payload else {
        panic!()
    };
    let e = g.embedding.unwrap();
    let xs = g.sequence.values();
    let j = e.anchor_indices[1];
    assert_eq!((xs[j - 2], xs[j - 1]), (3.0, 3.2));
    assert!(xs.windows(2).all(|w| (w[1] - w[0]).abs() <= 1.0));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lamstat"))
        .args([
            "simulate", "example1", "--n-max", "4", "--trials", "200", "--exact",
        ])
        .env(lamstat_cli::OUT_DIR_ENV, dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("simulate.json")).unwrap();
    let Payload::Simulation(s) = Report::from_json(&text).unwrap().payload else {
        panic!()
    };
    assert_eq!(s.exact.unwrap().estimate_for(3), Some((0.75, 0.0)));
}

#[test]
fn probe_modulus_and_ward() {
    let out = lamstat(&[
        "probe",
        "--fn",
        "affine:2,1",
        "--domain",
        "-1,1",
        "--modulus",
        "0.1,0.2",
        "--n-max",
        "20",
    ]);
    let Payload::Probe(p) = report(&out).payload else {
        panic!()
    };
    let m = p.modulus.unwrap();
    assert!((m[0].omega - 0.2).abs() < 1e-6 && (m[1].omega - 0.4).abs() < 1e-6);
    assert!(!p.witness.unwrap().found);

    let out = lamstat(&[
        "probe",
        "--fn",
        "affine:2,1",
        "--domain",
        "-1,1",
        "--ward",
        "walks",
        "--lipschitz",
        "2",
        "--count",
        "4",
        "--len",
        "300",
    ]);
    let Payload::Probe(p) = report(&out).payload else {
        panic!()
    };
    let w = p.ward.unwrap();
    assert_eq!(w.entries.len(), 4);
    assert_eq!(w.all_dominated, Some(true));
}
