use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use triload::asymptotics::RateFunction;
use triload_cli::{config_hash, CliConfig, CommandKind, EXIT_ACCEPTANCE, EXIT_OK, EXIT_USAGE};

fn triload(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triload"))
        .args(args)
        .env_remove("TRILOAD_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn radial_rates() -> RateFunction {
    RateFunction::new(&"radial:2".parse::<triload::ModelSpec>().unwrap().build().unwrap()).unwrap()
}

fn parse_rate(s: &str) -> f64 {
    if s == "inf" {
        f64::INFINITY
    } else {
        s.parse().unwrap()
    }
}

#[test]
fn rate_table_rows() {
    let rf = radial_rates();
    let g = rf.gamma();
    let (_, c0) = rf.endpoints();
    let inside: Vec<f64> = (1..=4).map(|i| g + (c0 / 3.0 - g) * i as f64 / 5.0).collect();
    let mut ys = vec![g];
    ys.extend(&inside);
    ys.push(c0 * 1.01);
    let list = ys.iter().map(|y| y.to_string()).collect::<Vec<_>>().join(",");
    let o = triload(&["rates", "--model", "radial:2", "--y", &list]);
    assert_eq!(code(&o), EXIT_OK);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("y,J,Jbar,theta_y,eta_y"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), ys.len());
    assert!(parse_rate(rows[0][1]).abs() < 1e-9 && parse_rate(rows[0][2]).abs() < 1e-9);
    for row in &rows[1..=4] {
        assert!(parse_rate(row[2]) < parse_rate(row[1]), "{row:?}");
    }
    let last = rows.last().unwrap();
    assert_eq!((last[1], last[2]), ("inf", "inf"));
}

#[test]
fn rate_table_file_has_lf_endings() {
    let dir = tempfile::tempdir().unwrap();
    let o = triload(&["rates", "--points", "5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), EXIT_OK);
    let body = fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    assert!(!body.contains('\r'));
    assert_eq!(body.lines().count(), 6);
    assert!(dir.path().join("rates.json").exists());
}

#[test]
fn check_sinr_reference_passes() {
    let o = triload(&["check", "--model", "sinr:2.5,1,10"]);
    assert_eq!(code(&o), EXIT_OK, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn check_constant_cost_fails_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let o = triload(&["check", "--model", "const:1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), EXIT_ACCEPTANCE);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("check.json")).unwrap()).unwrap();
    let nearest = &summary["results"]["report"]["nearest_bin_cheapest"];
    assert_eq!(nearest["status"], "fail");
    assert!(nearest["witness"].is_array());
    assert_eq!(summary["accepted"], false);
}

#[test]
fn malformed_inputs_are_usage_errors() {
    assert_eq!(code(&triload(&["check", "--model", "radial"])), EXIT_USAGE);
    assert_eq!(code(&triload(&["clt", "--model", "sinr:2.5,1"])), EXIT_USAGE);
    assert_eq!(code(&triload(&["prop31", "--alpha", "0.6"])), EXIT_USAGE);
    assert_eq!(code(&triload(&["clt", "--bogus"])), EXIT_USAGE);
    assert_eq!(code(&triload(&["ldp", "--estimator", "fast"])), EXIT_USAGE);
    assert_eq!(code(&triload(&["simulate", "--threads", "0"])), EXIT_USAGE);
    assert_eq!(code(&triload(&[])), EXIT_USAGE);
    assert_eq!(code(&triload(&["--help"])), EXIT_OK);
}

#[test]
fn ldp_threshold_below_gamma_is_usage_error() {
    let t = (radial_rates().gamma() - 0.01).to_string();
    let o = triload(&["ldp", "--t", &t, "--n", "10,20", "--R", "10"]);
    assert_eq!(code(&o), EXIT_USAGE);
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
}

#[test]
fn clt_summary_names_variance_target() {
    let o = triload(&["clt", "--model", "radial:2", "--n", "2000", "--R", "2000", "--seed", "7"]);
    let line = stdout(&o);
    let target = format!("{:.5}", 0.42766_f64 / 3.0 - 0.35562_f64.powi(2));
    assert!(line.contains("sigma^2/3-gamma^2"), "{line}");
    assert!(line.contains(&target[..5]), "{line}");
    assert!(code(&o) == EXIT_OK || code(&o) == EXIT_ACCEPTANCE);
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn outputs_are_deterministic_and_thread_independent() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let common = ["clt", "--n", "300,600", "--R", "200", "--seed", "7"];
    let run = |dir: &Path, threads: &str| {
        let mut args = common.to_vec();
        args.extend(["--threads", threads, "--out", dir.to_str().unwrap()]);
        triload(&args)
    };
    let (oa, ob) = (run(a.path(), "1"), run(b.path(), "3"));
    assert_eq!(code(&oa), code(&ob));
    assert_eq!(stdout(&oa), stdout(&ob));
    let fa = files(a.path());
    assert_eq!(fa, files(b.path()));
    let samples = &fa.iter().find(|(n, _)| n == "samples.csv").unwrap().1;
    let text = String::from_utf8(samples.clone()).unwrap();
    assert!(text.starts_with("trial,n,rho_bar,rho_hat,rho_lp,w1,w2,w3\n"));
    assert_eq!(text.lines().count(), 401);
}

#[test]
fn summary_replays_to_identical_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let o = triload(&["bridge", "--R", "500", "--seed", "3", "--out", a.path().to_str().unwrap()]);
    assert_eq!(code(&o), EXIT_OK);
    let summary_path = a.path().join("bridge.json");
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary_path).unwrap()).unwrap();
    let cfg: CliConfig = serde_json::from_value(summary["config"].clone()).unwrap();
    assert_eq!(summary["config_hash"], config_hash(&cfg));
    assert_eq!(cfg.replications, 500);
    let o = triload(&["run", summary_path.to_str().unwrap(), "--out", b.path().to_str().unwrap()]);
    assert_eq!(code(&o), EXIT_OK);
    assert_eq!(files(a.path()), files(b.path()));
}

#[test]
fn simulate_and_prop31_accept_at_moderate_scale() {
    let o = triload(&["simulate", "--n", "20000", "--seed", "2"]);
    assert_eq!(code(&o), EXIT_OK, "{}", stdout(&o));
    let o = triload(&["prop31", "--n", "1000,3000", "--R", "40"]);
    assert_eq!(code(&o), EXIT_OK, "{}", stdout(&o));
}

#[test]
fn hash_ignores_threads_and_output_path() {
    let mut a = CliConfig::new(CommandKind::Clt, "radial:2");
    let mut b = a.clone();
    b.threads = Some(4);
    b.out = Some("/tmp/x".into());
    assert_eq!(config_hash(&a), config_hash(&b));
    a.seed = 99;
    assert_ne!(config_hash(&a), config_hash(&b));
}

fn command_kind() -> impl Strategy<Value = CommandKind> {
    prop_oneof![
        Just(CommandKind::Rates),
        Just(CommandKind::Check),
        Just(CommandKind::Simulate),
        Just(CommandKind::Clt),
        Just(CommandKind::Ldp),
        Just(CommandKind::Drift),
        Just(CommandKind::Prop31),
        Just(CommandKind::Bridge),
    ]
}

proptest! {
    #[test]
    fn config_json_round_trip(
        kind in command_kind(),
        scale in 0.01f64..100.0,
        seed in any::<u64>(),
        n in proptest::collection::vec(1usize..100_000, 0..5),
        r in 0usize..100_000,
        t in proptest::option::of(-10.0f64..10.0),
        alpha in 0.0f64..1.0,
        tol in proptest::option::of(1e-6f64..10.0),
        y in proptest::collection::vec(-5.0f64..5.0, 0..4),
        threads in proptest::option::of(1usize..64),
        lp in any::<bool>(),
    ) {
        let mut c = CliConfig::new(kind, format!("radial:{scale}"));
        c.seed = seed;
        c.n = n;
        c.replications = r;
        c.t = t;
        c.alpha = alpha;
        c.tol = tol;
        c.y = y;
        c.threads = threads;
        c.with_lp = lp;
        let back = CliConfig::from_json(&c.to_json()).unwrap();
        prop_assert_eq!(back, c);
    }
}
