//! Experiment drivers. Trials are generated from `trial_seed(base_seed, cell,
//! trial)`, run in parallel, and aggregated in canonical cell order, so the
//! output does not depend on the thread count.

use std::path::{Path, PathBuf};

use ompr_core::diagnostics::{diagnose_run, write_csv_rows, CheckStatus, RipContext, CSV_HEADER};
use ompr_core::ensemble::MeasurementProblem;
use ompr_core::rng::trial_seed;
use rayon::prelude::*;

use crate::error::{HarnessError, Result};
use crate::output::{ensure_dir, fmt_f64, fmt_opt, heatmap_svg, line_plot_svg, write_csv, write_text};
use crate::solve::{solve, Outcome};
use crate::spec::{AlgorithmSpec, ExperimentSpec, Kind, SolverFamily};

/// One algorithm on one generated problem.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub cell: usize,
    pub trial: usize,
    pub trial_seed: u64,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub noise_level: f64,
    pub outcome: Outcome,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample standard error of the mean; `0` for fewer than two values.
fn stderr(values: &[f64]) -> Option<f64> {
    let mu = mean(values)?;
    if values.len() < 2 {
        return Some(0.0);
    }
    let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    Some((var / values.len() as f64).sqrt())
}

/// Generates every `(cell, trial)` problem and runs all algorithms on it.
/// Results are indexed `[job][algorithm]` in job order.
fn run_jobs(
    jobs: &[(usize, usize, usize, usize, usize, f64)],
    base_seed: u64,
    algos: &[AlgorithmSpec],
) -> Vec<Vec<TrialRecord>> {
    jobs.par_iter()
        .map(|&(cell, trial, m, n, k, level)| {
            let seed = trial_seed(base_seed, cell as u64, trial as u64);
            let problem = MeasurementProblem::generate_noisy(m, n, k, level, seed);
            algos
                .iter()
                .map(|algo| {
                    let outcome = match &problem {
                        Ok(p) => solve(algo, p, k, seed),
                        Err(e) => {
                            log::warn!("problem generation failed for seed {seed}: {e}");
                            solve_failed()
                        }
                    };
                    TrialRecord {
                        cell,
                        trial,
                        trial_seed: seed,
                        m,
                        n,
                        k,
                        noise_level: level,
                        outcome,
                    }
                })
                .collect()
        })
        .collect()
}

fn solve_failed() -> Outcome {
    Outcome {
        rel_err: None,
        resid: None,
        iterations: 0,
        status: "error",
        monotone: false,
        time_s: 0.0,
    }
}

const TRIAL_HEADER: [&str; 12] = [
    "cell",
    "trial",
    "trial_seed",
    "m",
    "n",
    "k",
    "noise_level",
    "rel_err",
    "resid",
    "iterations",
    "status",
    "time_s",
];

fn trial_rows(records: &[&TrialRecord], timing: bool) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| {
            vec![
                r.cell.to_string(),
                r.trial.to_string(),
                r.trial_seed.to_string(),
                r.m.to_string(),
                r.n.to_string(),
                r.k.to_string(),
                fmt_f64(r.noise_level),
                fmt_opt(r.outcome.rel_err),
                fmt_opt(r.outcome.resid),
                r.outcome.iterations.to_string(),
                r.outcome.status.to_string(),
                if timing {
                    fmt_f64(r.outcome.time_s)
                } else {
                    String::new()
                },
            ]
        })
        .collect()
}

fn column(results: &[Vec<TrialRecord>], a: usize) -> Vec<&TrialRecord> {
    results.iter().map(|row| &row[a]).collect()
}

fn check_kind(spec: &ExperimentSpec, kind: Kind) -> Result<()> {
    if spec.kind != kind {
        return Err(HarnessError::config(format!(
            "expected a {kind:?} config, got {:?}",
            spec.kind
        )));
    }
    spec.validate()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub rho: f64,
    pub delta: f64,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub success_prob: f64,
    pub mean_rel_err: Option<f64>,
    pub mean_time_s: Option<f64>,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub algorithm: String,
    /// Row-major over `(delta, rho)`: cell `d · |rho| + r`.
    pub cells: Vec<CellSummary>,
    pub trials: Vec<TrialRecord>,
}

/// Success-probability grid over `(ρ, δ)` for each algorithm. Writes
/// `grid_<algo>.csv`, `trials_<algo>.csv` and `heatmap_<algo>.svg`.
pub fn run_phase_transition(spec: &ExperimentSpec, out_dir: &Path) -> Result<Vec<GridResult>> {
    check_kind(spec, Kind::PhaseTransition)?;
    let algos = spec.algorithm_specs()?;
    let (m, rhos, deltas, trials) = (spec.m(), spec.rho(), spec.delta(), spec.trials());
    let mut jobs = Vec::new();
    let mut shapes = Vec::new();
    for &delta in &deltas {
        for &rho in &rhos {
            let cell = shapes.len();
            let n = ((m as f64 / delta).round() as usize).max(m);
            let k = ((rho * m as f64).round() as usize).max(1);
            shapes.push((rho, delta, n, k));
            jobs.extend((0..trials).map(|t| (cell, t, m, n, k, 0.0)));
        }
    }
    log::info!(
        "phase transition: {} cells x {trials} trials x {} algorithms",
        shapes.len(),
        algos.len()
    );
    let results = run_jobs(&jobs, spec.base_seed, &algos);

    ensure_dir(out_dir)?;
    let threshold = spec.success_threshold();
    let mut grids = Vec::new();
    for (a, algo) in algos.iter().enumerate() {
        let records = column(&results, a);
        let cells: Vec<CellSummary> = shapes
            .iter()
            .enumerate()
            .map(|(cell, &(rho, delta, n, k))| {
                let rs: Vec<&TrialRecord> = records.iter().copied().filter(|r| r.cell == cell).collect();
                let errs: Vec<f64> = rs.iter().filter_map(|r| r.outcome.rel_err).collect();
                let times: Vec<f64> = rs.iter().map(|r| r.outcome.time_s).collect();
                CellSummary {
                    rho,
                    delta,
                    m,
                    n,
                    k,
                    success_prob: rs.iter().filter(|r| r.outcome.succeeded(threshold)).count() as f64 / rs.len() as f64,
                    mean_rel_err: mean(&errs),
                    mean_time_s: if spec.record_timing { mean(&times) } else { None },
                    trials: rs.len(),
                }
            })
            .collect();

        let rows: Vec<Vec<String>> = cells
            .iter()
            .map(|c| {
                vec![
                    fmt_f64(c.rho),
                    fmt_f64(c.delta),
                    fmt_f64(c.success_prob),
                    fmt_opt(c.mean_rel_err),
                    fmt_opt(c.mean_time_s),
                    c.trials.to_string(),
                ]
            })
            .collect();
        write_csv(
            &out_dir.join(format!("grid_{}.csv", algo.label)),
            &["rho", "delta", "success_prob", "mean_rel_err", "mean_time_s", "trials"],
            &rows,
        )?;
        write_csv(
            &out_dir.join(format!("trials_{}.csv", algo.label)),
            &TRIAL_HEADER,
            &trial_rows(&records, spec.record_timing),
        )?;
        let values: Vec<Vec<f64>> = (0..rhos.len())
            .map(|r| {
                (0..deltas.len())
                    .map(|d| cells[d * rhos.len() + r].success_prob)
                    .collect()
            })
            .collect();
        write_text(
            &out_dir.join(format!("heatmap_{}.svg", algo.label)),
            &heatmap_svg(
                &format!("{}: success probability (m = {m})", algo.label),
                "delta = m/n",
                "rho = k/m",
                &deltas,
                &rhos,
                &values,
            ),
        )?;
        grids.push(GridResult {
            algorithm: algo.label.clone(),
            cells,
            trials: records.into_iter().cloned().collect(),
        });
    }
    Ok(grids)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSummary {
    pub algorithm: String,
    pub k: usize,
    pub noise_level: f64,
    pub mean_resid: Option<f64>,
    pub stderr: Option<f64>,
    pub trials: usize,
}

/// `other − reference` residual differences over paired trials.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedDifference {
    pub reference: String,
    pub other: String,
    pub k: usize,
    pub noise_level: f64,
    pub mean_diff: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl PairedDifference {
    /// 95% interval `mean ± 1.96·stderr`.
    pub fn interval(&self) -> (f64, f64) {
        (self.mean_diff - 1.96 * self.stderr, self.mean_diff + 1.96 * self.stderr)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseResult {
    pub summaries: Vec<NoiseSummary>,
    pub paired: Vec<PairedDifference>,
    pub trials: Vec<Vec<TrialRecord>>,
}

/// Residual `‖A x − b‖` across sparsities and noise levels. Writes
/// `noise_<algo>.csv`, `noise_trials_<algo>.csv` and `noise_paired.csv`
/// (differences against the first algorithm).
pub fn run_noise_sweep(spec: &ExperimentSpec, out_dir: &Path) -> Result<NoiseResult> {
    check_kind(spec, Kind::NoiseSweep)?;
    let algos = spec.algorithm_specs()?;
    let (m, n, ks, levels, trials) = (spec.m(), spec.n(), spec.ks(), spec.noise_levels(), spec.trials());
    let mut jobs = Vec::new();
    let mut cells = Vec::new();
    for &k in &ks {
        for &level in &levels {
            let cell = cells.len();
            cells.push((k, level));
            jobs.extend((0..trials).map(|t| (cell, t, m, n, k, level)));
        }
    }
    log::info!(
        "noise sweep: {} cells x {trials} trials x {} algorithms",
        cells.len(),
        algos.len()
    );
    let results = run_jobs(&jobs, spec.base_seed, &algos);
    ensure_dir(out_dir)?;

    let mut summaries = Vec::new();
    for (a, algo) in algos.iter().enumerate() {
        let records = column(&results, a);
        let mut rows = Vec::new();
        for (cell, &(k, level)) in cells.iter().enumerate() {
            let resid: Vec<f64> = records
                .iter()
                .filter(|r| r.cell == cell)
                .filter_map(|r| r.outcome.resid)
                .collect();
            let s = NoiseSummary {
                algorithm: algo.label.clone(),
                k,
                noise_level: level,
                mean_resid: mean(&resid),
                stderr: stderr(&resid),
                trials: resid.len(),
            };
            rows.push(vec![
                s.k.to_string(),
                fmt_f64(s.noise_level),
                fmt_opt(s.mean_resid),
                fmt_opt(s.stderr),
                s.trials.to_string(),
            ]);
            summaries.push(s);
        }
        write_csv(
            &out_dir.join(format!("noise_{}.csv", algo.label)),
            &["k", "noise_level", "mean_resid", "stderr", "trials"],
            &rows,
        )?;
        write_csv(
            &out_dir.join(format!("noise_trials_{}.csv", algo.label)),
            &TRIAL_HEADER,
            &trial_rows(&records, spec.record_timing),
        )?;
    }

    let mut paired = Vec::new();
    for (a, algo) in algos.iter().enumerate().skip(1) {
        for (cell, &(k, level)) in cells.iter().enumerate() {
            let diffs: Vec<f64> = results
                .iter()
                .filter(|row| row[0].cell == cell)
                .filter_map(|row| Some(row[a].outcome.resid? - row[0].outcome.resid?))
                .collect();
            if diffs.is_empty() {
                continue;
            }
            paired.push(PairedDifference {
                reference: algos[0].label.clone(),
                other: algo.label.clone(),
                k,
                noise_level: level,
                mean_diff: mean(&diffs).expect("nonempty"),
                stderr: stderr(&diffs).expect("nonempty"),
                trials: diffs.len(),
            });
        }
    }
    let rows: Vec<Vec<String>> = paired
        .iter()
        .map(|p| {
            let (lo, hi) = p.interval();
            vec![
                p.k.to_string(),
                fmt_f64(p.noise_level),
                p.reference.clone(),
                p.other.clone(),
                fmt_f64(p.mean_diff),
                fmt_f64(p.stderr),
                fmt_f64(lo),
                fmt_f64(hi),
                p.trials.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out_dir.join("noise_paired.csv"),
        &[
            "k",
            "noise_level",
            "reference",
            "other",
            "mean_diff",
            "stderr",
            "ci_low",
            "ci_high",
            "trials",
        ],
        &rows,
    )?;

    let series: Vec<(String, Vec<(f64, f64)>)> = summaries.iter().filter(|s| s.k == ks[ks.len() - 1]).fold(
        Vec::new(),
        |mut acc: Vec<(String, Vec<(f64, f64)>)>, s| {
            match acc.iter_mut().find(|(l, _)| *l == s.algorithm) {
                Some((_, pts)) => pts.push((s.noise_level, s.mean_resid.unwrap_or(f64::NAN))),
                None => acc.push((
                    s.algorithm.clone(),
                    vec![(s.noise_level, s.mean_resid.unwrap_or(f64::NAN))],
                )),
            }
            acc
        },
    );
    write_text(
        &out_dir.join("noise.svg"),
        &line_plot_svg(
            &format!("mean residual, k = {}", ks[ks.len() - 1]),
            "noise level",
            "||Ax - b||",
            &series,
            false,
            false,
        ),
    )?;
    Ok(NoiseResult {
        summaries,
        paired,
        trials: results,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LshSummary {
    pub algorithm: String,
    pub n: usize,
    pub mean_rel_err: Option<f64>,
    pub mean_resid: Option<f64>,
    /// Fraction of runs whose objective never increased.
    pub monotone_fraction: f64,
    pub mean_time_s: Option<f64>,
    pub trials: usize,
}

/// Error and solve time against `n`; index construction is not timed.
/// Writes `lsh_<algo>.csv`, `lsh_trials_<algo>.csv`, `lsh_error.svg` and,
/// with `record_timing`, `lsh_time.svg`.
pub fn run_lsh_benchmark(spec: &ExperimentSpec, out_dir: &Path) -> Result<Vec<LshSummary>> {
    check_kind(spec, Kind::LshBenchmark)?;
    let algos = spec.algorithm_specs()?;
    let (m, k, ns, trials) = (spec.m(), spec.k(), spec.ns(), spec.trials());
    let jobs: Vec<_> = ns
        .iter()
        .enumerate()
        .flat_map(|(cell, &n)| (0..trials).map(move |t| (cell, t, m, n, k, 0.0)))
        .collect();
    log::info!(
        "lsh benchmark: n in {ns:?}, {trials} trials x {} algorithms",
        algos.len()
    );
    let results = run_jobs(&jobs, spec.base_seed, &algos);
    ensure_dir(out_dir)?;

    let mut summaries = Vec::new();
    for (a, algo) in algos.iter().enumerate() {
        let records = column(&results, a);
        let mut rows = Vec::new();
        for (cell, &n) in ns.iter().enumerate() {
            let rs: Vec<&TrialRecord> = records.iter().copied().filter(|r| r.cell == cell).collect();
            let errs: Vec<f64> = rs.iter().filter_map(|r| r.outcome.rel_err).collect();
            let resid: Vec<f64> = rs.iter().filter_map(|r| r.outcome.resid).collect();
            let times: Vec<f64> = rs.iter().map(|r| r.outcome.time_s).collect();
            let s = LshSummary {
                algorithm: algo.label.clone(),
                n,
                mean_rel_err: mean(&errs),
                mean_resid: mean(&resid),
                monotone_fraction: rs.iter().filter(|r| r.outcome.monotone).count() as f64 / rs.len() as f64,
                mean_time_s: if spec.record_timing { mean(&times) } else { None },
                trials: rs.len(),
            };
            rows.push(vec![
                n.to_string(),
                fmt_opt(s.mean_rel_err),
                fmt_opt(s.mean_resid),
                fmt_f64(s.monotone_fraction),
                fmt_opt(s.mean_time_s),
                s.trials.to_string(),
            ]);
            summaries.push(s);
        }
        write_csv(
            &out_dir.join(format!("lsh_{}.csv", algo.label)),
            &[
                "n",
                "mean_rel_err",
                "mean_resid",
                "monotone_fraction",
                "mean_time_s",
                "trials",
            ],
            &rows,
        )?;
        write_csv(
            &out_dir.join(format!("lsh_trials_{}.csv", algo.label)),
            &TRIAL_HEADER,
            &trial_rows(&records, spec.record_timing),
        )?;
    }
    let series = |pick: &dyn Fn(&LshSummary) -> Option<f64>| -> Vec<(String, Vec<(f64, f64)>)> {
        algos
            .iter()
            .map(|algo| {
                let pts = summaries
                    .iter()
                    .filter(|s| s.algorithm == algo.label)
                    .map(|s| (s.n as f64, pick(s).unwrap_or(f64::NAN)))
                    .collect();
                (algo.label.clone(), pts)
            })
            .collect()
    };
    write_text(
        &out_dir.join("lsh_error.svg"),
        &line_plot_svg(
            "relative error",
            "n",
            "||x - x*|| / ||x*||",
            &series(&|s| s.mean_rel_err),
            true,
            true,
        ),
    )?;
    if spec.record_timing {
        write_text(
            &out_dir.join("lsh_time.svg"),
            &line_plot_svg("solve time", "n", "seconds", &series(&|s| s.mean_time_s), true, true),
        )?;
    }
    Ok(summaries)
}

/// One row of `run` output.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRow {
    pub algorithm: String,
    pub outcome: Outcome,
}

pub const RUN_HEADER: [&str; 6] = ["algorithm", "trial_seed", "rel_err", "resid", "iterations", "status"];

/// Runs every configured algorithm on `problem` with seed `seed`.
pub fn run_single(spec: &ExperimentSpec, problem: &MeasurementProblem, k: usize, seed: u64) -> Result<Vec<RunRow>> {
    let algos = spec.algorithm_specs()?;
    Ok(algos
        .iter()
        .map(|algo| RunRow {
            algorithm: algo.label.clone(),
            outcome: solve(algo, problem, k, seed),
        })
        .collect())
}

pub fn run_rows(rows: &[RunRow], seed: u64) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.algorithm.clone(),
                seed.to_string(),
                fmt_opt(r.outcome.rel_err),
                fmt_opt(r.outcome.resid),
                r.outcome.iterations.to_string(),
                r.outcome.status.to_string(),
            ]
        })
        .collect()
}

/// Counts of check outcomes in a diagnostics replay.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DiagCounts {
    pub hold: usize,
    pub fail: usize,
    pub skip: usize,
}

/// Replays one seeded run with per-iteration checks and writes `diag.csv`.
pub fn run_diag(
    algo: &AlgorithmSpec,
    problem: &MeasurementProblem,
    k: usize,
    seed: u64,
    out: &Path,
) -> Result<DiagCounts> {
    if !matches!(algo.family, SolverFamily::OmprL | SolverFamily::TwoStage) {
        return Err(HarnessError::config(format!(
            "{}: diagnostics exist for OMPR(l) and two-stage runs only",
            algo.label
        )));
    }
    let cfg = algo.config(k, seed);
    let rip = RipContext::exhaustive(&problem.a, k, cfg.l).map_err(|e| HarnessError::config(e.to_string()))?;
    let diags = diagnose_run(problem, &cfg, &rip).map_err(|e| HarnessError::config(e.to_string()))?;
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    write_csv_rows(&mut text, seed, &diags);
    if let Some(parent) = out.parent() {
        ensure_dir(parent)?;
    }
    write_text(out, &text)?;
    let mut counts = DiagCounts::default();
    for c in diags.iter().flat_map(|d| &d.checks) {
        match c.status {
            CheckStatus::Hold => counts.hold += 1,
            CheckStatus::Fail => counts.fail += 1,
            CheckStatus::Skip => counts.skip += 1,
        }
    }
    Ok(counts)
}

/// Files written by a phase run, for reporting.
pub fn phase_outputs(out_dir: &Path, algos: &[AlgorithmSpec]) -> Vec<PathBuf> {
    algos
        .iter()
        .flat_map(|a| {
            [
                out_dir.join(format!("grid_{}.csv", a.label)),
                out_dir.join(format!("trials_{}.csv", a.label)),
                out_dir.join(format!("heatmap_{}.svg", a.label)),
            ]
        })
        .collect()
}
