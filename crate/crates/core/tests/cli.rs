use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: [&str; 4] = [
    "--set",
    "actor_hidden=16,16",
    "--set",
    "critic_hidden=16,16",
];

fn goalreach(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_goalreach"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = goalreach(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn train(out: &Path, steps: &str, seed: &str, extra: &[&str]) -> String {
    let mut args = vec![
        "train",
        "--env",
        "point_reacher_easy",
        "--formulation",
        "min_time",
        "--timeout",
        "50",
        "--steps",
        steps,
        "--seed",
        seed,
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend(SMALL);
    args.extend(extra);
    ok(&args)
}

#[test]
fn short_run_performs_expected_updates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let stdout = train(&out, "2000", "0", &[]);
    assert!(stdout.contains("updates=500"), "{stdout}");
    let curve = fs::read_to_string(out.join("learning_curve.csv")).unwrap();
    assert!(curve.starts_with("env_step_at_episode_end,"));
    assert!(out.join("config.txt").exists());
}

#[test]
fn same_seed_gives_identical_curves() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    train(&a, "3000", "11", &[]);
    train(&b, "3000", "11", &[]);
    train(&c, "3000", "12", &[]);
    let read = |p: &Path| fs::read(p.join("learning_curve.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    train(&first, "2500", "3", &["--set", "batch_size=32"]);
    let mut cfg = fs::read_to_string(first.join("config.txt")).unwrap();
    let second = dir.path().join("second");
    cfg = cfg
        .lines()
        .map(|l| {
            if l.starts_with("out=") {
                format!("out={}", second.display())
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    let cfg_path = dir.path().join("echo.txt");
    fs::write(&cfg_path, cfg).unwrap();
    ok(&["train", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(
        fs::read(first.join("learning_curve.csv")).unwrap(),
        fs::read(second.join("learning_curve.csv")).unwrap()
    );
}

#[test]
fn existing_outputs_need_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    train(&out, "1200", "0", &[]);
    let o = out.to_str().unwrap();
    let again = goalreach(&[
        "train",
        "--steps",
        "1200",
        "--out",
        o,
        "--set",
        "actor_hidden=8",
        "--set",
        "critic_hidden=8",
    ]);
    assert!(!again.status.success());
    ok(&[
        "train",
        "--steps",
        "1200",
        "--out",
        o,
        "--set",
        "actor_hidden=8",
        "--set",
        "critic_hidden=8",
        "--force",
    ]);
}

#[test]
fn checkpoints_follow_the_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    train(&out, "50000", "0", &["--set", "warmup_steps=50000"]);
    let mut names: Vec<String> = fs::read_dir(out.join("checkpoints"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [10000, 20000, 30000, 40000, 50000].map(|s| format!("step_{s:08}.ckpt"))
    );
}

#[test]
fn probe_sweep_eval_and_xeval() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n).to_str().unwrap().to_string();

    let probe = ok(&[
        "probe",
        "--env",
        "point_reacher_easy",
        "--timeout",
        "5",
        "--out",
        &d("p"),
    ]);
    assert!(probe.trim_end().ends_with("LEARNABLE"), "{probe}");
    let below = ok(&[
        "probe",
        "--env",
        "mountain_car",
        "--timeout",
        "1000",
        "--out",
        &d("q"),
    ]);
    assert!(below.trim_end().ends_with("BELOW_THRESHOLD"), "{below}");

    ok(&[
        "sweep",
        "--env",
        "two_link_easy",
        "--steps",
        "2000",
        "--out",
        &d("s"),
    ]);
    let csv = fs::read_to_string(dir.path().join("s/probe.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 7 * 5);

    let run = dir.path().join("run");
    train(&run, "2000", "0", &["--set", "checkpoint_every=1000"]);
    let ckpt = run.join("checkpoints/step_00002000.ckpt");
    let c = ckpt.to_str().unwrap();
    let eval = ok(&[
        "eval",
        "--checkpoint",
        c,
        "--episodes",
        "4",
        "--horizon",
        "50",
        "--out",
        &d("e"),
    ]);
    assert!(eval.contains("steps_to_goal="), "{eval}");
    let rows = fs::read_to_string(dir.path().join("e/eval.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4);

    let xeval = ok(&[
        "xeval",
        "--checkpoint",
        c,
        "--episodes",
        "3",
        "--max-steps",
        "100",
        "--out",
        &d("x"),
    ]);
    assert_eq!(xeval.lines().filter(|l| l.starts_with("xeval ")).count(), 3);
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = goalreach(&["probe", "--env", "cartpole", "--timeout", "5"]);
    assert!(!out.status.success());
    let missing = dir.path().join("nope.ckpt");
    let out = goalreach(&["eval", "--checkpoint", missing.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let out = goalreach(&[
        "train",
        "--set",
        "no_such_key=1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
}

#[test]
fn num_seeds_launches_one_run_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("many");
    train(&out, "1100", "4", &["--num-seeds", "3"]);
    for s in 4..7 {
        assert!(out.join(format!("seed_{s}/learning_curve.csv")).exists());
        assert!(out.join(format!("seed_{s}.txt")).exists());
    }
}
