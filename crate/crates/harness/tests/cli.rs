use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ompr_harness::cli::main_with_args;
use ompr_harness::experiments::{run_single, RunRow};
use ompr_harness::spec::{ExperimentSpec, Kind};

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("ompr").chain(args.iter().copied()))
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

const PHASE: &str = r#"{"kind": "phase_transition", "m": 30, "rho": [0.1, 0.2], "delta": [0.5, 1.0],
    "trials_per_cell": 6, "base_seed": 11}"#;
const NOISE: &str = r#"{"kind": "noise_sweep", "m": 40, "n": 200, "ks": [4], "noise_levels": [0.0, 0.2],
    "trials_per_cell": 5, "base_seed": 3}"#;
const LSH: &str = r#"{"kind": "lsh_benchmark", "m": 40, "k": 3, "ns": [200, 800], "trials_per_cell": 3,
    "algorithms": ["ompr", "ompr_hash"]}"#;

#[test]
fn experiments_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    for (cmd, json) in [("phase", PHASE), ("noise", NOISE), ("lsh", LSH)] {
        let cfg = write_config(tmp.path(), &format!("{cmd}.json"), json);
        let mut outputs = Vec::new();
        for threads in ["1", "3", "1"] {
            let out = tmp.path().join(format!("{cmd}_{threads}_{}", outputs.len()));
            let code = run(&[
                cmd,
                "--config",
                &cfg,
                "--threads",
                threads,
                "--out",
                out.to_str().unwrap(),
            ]);
            assert_eq!(code, 0, "{cmd} with {threads} threads");
            outputs.push(files(&out));
        }
        assert!(outputs[0].keys().any(|k| k.ends_with(".csv")));
        assert_eq!(outputs[0], outputs[1], "{cmd}: 1 vs 3 threads");
        assert_eq!(outputs[0], outputs[2], "{cmd}: repeated run");
    }
}

#[test]
fn phase_outputs_have_expected_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "p.json", PHASE);
    let out = tmp.path().join("out");
    assert_eq!(run(&["phase", "--config", &cfg, "--out", out.to_str().unwrap()]), 0);
    let grid = fs::read_to_string(out.join("grid_ompr.csv")).unwrap();
    let lines: Vec<&str> = grid.lines().collect();
    assert_eq!(lines[0], "rho,delta,success_prob,mean_rel_err,mean_time_s,trials");
    assert_eq!(lines.len(), 1 + 4);
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        let p: f64 = cols[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert_eq!(cols[4], "", "timing is blank unless requested");
        assert_eq!(cols[5], "6");
    }
    let trials = fs::read_to_string(out.join("trials_omp.csv")).unwrap();
    assert_eq!(trials.lines().count(), 1 + 4 * 6);
    assert!(out.join("heatmap_omp.svg").exists());
}

#[test]
fn trial_rows_replay_through_single_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n.json", NOISE);
    let out = tmp.path().join("out");
    assert_eq!(run(&["noise", "--config", &cfg, "--out", out.to_str().unwrap()]), 0);
    let text = fs::read_to_string(out.join("noise_trials_iht_newton.csv")).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    for line in text.lines().skip(1).step_by(3) {
        let f: Vec<&str> = line.split(',').collect();
        let mut spec = ExperimentSpec::new(Kind::SingleRun);
        spec.select_algorithms(&["iht_newton".into()]).unwrap();
        let (m, n, k): (usize, usize, usize) = (
            f[col("m")].parse().unwrap(),
            f[col("n")].parse().unwrap(),
            f[col("k")].parse().unwrap(),
        );
        let seed: u64 = f[col("trial_seed")].parse().unwrap();
        let level: f64 = f[col("noise_level")].parse().unwrap();
        let problem = ompr_core::MeasurementProblem::generate_noisy(m, n, k, level, seed).unwrap();
        let rows: Vec<RunRow> = run_single(&spec, &problem, k, seed).unwrap();
        assert_eq!(rows[0].outcome.resid.map(|r| r.to_string()).unwrap(), f[col("resid")]);
        assert_eq!(rows[0].outcome.iterations.to_string(), f[col("iterations")]);
    }
}

#[test]
fn single_run_golden_values() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(
        run(&[
            "run",
            "--algo",
            "ompr,omp",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap()
        ]),
        0
    );
    let text = fs::read_to_string(out.join("run.csv")).unwrap();
    assert_eq!(
        text,
        "algorithm,trial_seed,rel_err,resid,iterations,status\n\
         ompr,5,0.02588712500089796,0.14459204059458433,4,stalled\n\
         omp,5,0.02588712500089796,0.14459204059458433,8,max_iters\n"
    );
}

#[test]
fn diag_writes_check_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("d");
    assert_eq!(
        run(&["diag", "--seed", "3", "--eta", "0.9", "--out", out.to_str().unwrap()]),
        0
    );
    let text = fs::read_to_string(out.join("diag.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("trial_seed,iter,check_name,status,slack"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.starts_with("3,") && !r.contains(",fail,")));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.json");
    assert_eq!(run(&["phase", "--config", missing.to_str().unwrap()]), 2);
    let bad = write_config(tmp.path(), "bad.json", r#"{"kind": "phase_transition", "bogus": 1}"#);
    assert_eq!(run(&["phase", "--config", &bad]), 1);
    let wrong_kind = write_config(tmp.path(), "noise.json", NOISE);
    assert_eq!(run(&["phase", "--config", &wrong_kind]), 1);
    assert_eq!(run(&["run", "--algo", "nope"]), 1);
    assert_eq!(run(&["run", "--k", "0"]), 1);
    assert_eq!(run(&["run", "--threads", "0"]), 1);
    assert_eq!(run(&["diag", "--algo", "omp"]), 1);
    assert_eq!(run(&["frobnicate"]), 1);
    assert_eq!(run(&["--help"]), 0);
    // output directory blocked by a regular file
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = write_config(tmp.path(), "p.json", PHASE);
    assert_eq!(
        run(&[
            "phase",
            "--config",
            &cfg,
            "--out",
            blocker.join("sub").to_str().unwrap()
        ]),
        2
    );
}

#[test]
fn problem_files_round_trip_through_run() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = ompr_core::MeasurementProblem::generate_noisy(40, 120, 8, 0.05, 5).unwrap();
    let path = tmp.path().join("p.bin");
    ompr_core::format::save_problem(&path, &problem).unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(
        run(&[
            "run",
            "--algo",
            "ompr",
            "--problem",
            path.to_str().unwrap(),
            "--out",
            a.to_str().unwrap()
        ]),
        0
    );
    assert_eq!(
        run(&["run", "--algo", "ompr", "--seed", "5", "--out", b.to_str().unwrap()]),
        0
    );
    assert_eq!(
        fs::read(a.join("run.csv")).unwrap(),
        fs::read(b.join("run.csv")).unwrap()
    );
    let garbage = tmp.path().join("g.bin");
    fs::write(&garbage, b"nonsense").unwrap();
    assert_eq!(run(&["run", "--problem", garbage.to_str().unwrap()]), 1);
}
