use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ompr_core::ensemble::MeasurementProblem;
use ompr_core::format::load_problem;

use crate::error::{HarnessError, Result};
use crate::experiments::{
    run_diag, run_lsh_benchmark, run_noise_sweep, run_phase_transition, run_rows, run_single, RUN_HEADER,
};
use crate::output::{ensure_dir, write_csv};
use crate::spec::{AlgorithmEntry, ExperimentSpec, InitMode, Kind};

#[derive(Parser, Debug)]
#[command(name = "ompr", version, about = "Sparse recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Success-probability grid over (rho, delta).
    Phase,
    /// Residual against noise level for several sparsities.
    Noise,
    /// Error and time against n for hashed and exact selection.
    Lsh,
    /// Solve one problem and print per-algorithm results.
    Run(ProblemArgs),
    /// Replay one run with per-iteration checks and write diag.csv.
    Diag(ProblemArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment description.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed for experiments, problem seed for run and diag.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Comma-separated algorithm labels or presets.
    #[arg(long, global = true, value_delimiter = ',')]
    algo: Vec<String>,
    /// Step size applied to every selected algorithm.
    #[arg(long, global = true)]
    eta: Option<f64>,
    /// Initial support applied to every selected algorithm.
    #[arg(long, global = true, value_enum)]
    init: Option<InitMode>,
}

#[derive(Args, Debug)]
struct ProblemArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    /// Binary problem file instead of a generated problem.
    #[arg(long)]
    problem: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.common.threads {
        Some(0) => Err(HarnessError::config("--threads must be positive")),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(HarnessError::config(e.to_string())),
        },
        None => execute(&cli),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_spec(common: &Common, kind: Kind) -> Result<ExperimentSpec> {
    let mut spec = match &common.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::new(kind),
    };
    if spec.kind != kind {
        return Err(HarnessError::config(format!(
            "config kind {:?} does not match the {kind:?} command",
            spec.kind
        )));
    }
    if let Some(seed) = common.seed {
        spec.base_seed = seed;
    }
    if !common.algo.is_empty() {
        spec.select_algorithms(&common.algo)?;
    }
    if common.eta.is_some() || common.init.is_some() {
        let specs = spec.algorithm_specs()?;
        spec.algorithms = Some(
            specs
                .into_iter()
                .map(|mut a| {
                    a.eta = common.eta.unwrap_or(a.eta);
                    a.init = common.init.unwrap_or(a.init);
                    AlgorithmEntry::Full(a)
                })
                .collect(),
        );
    }
    spec.validate()?;
    Ok(spec)
}

fn out_dir(common: &Common, spec: &ExperimentSpec) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| spec.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn execute(cli: &Cli) -> Result<()> {
    let common = &cli.common;
    match &cli.command {
        Command::Phase => {
            let spec = load_spec(common, Kind::PhaseTransition)?;
            let dir = out_dir(common, &spec);
            let grids = run_phase_transition(&spec, &dir)?;
            for g in &grids {
                let mean = g.cells.iter().map(|c| c.success_prob).sum::<f64>() / g.cells.len() as f64;
                println!(
                    "{}: mean success probability {mean:.4} over {} cells",
                    g.algorithm,
                    g.cells.len()
                );
            }
            println!("wrote {}", dir.display());
        }
        Command::Noise => {
            let spec = load_spec(common, Kind::NoiseSweep)?;
            let dir = out_dir(common, &spec);
            let result = run_noise_sweep(&spec, &dir)?;
            for p in &result.paired {
                let (lo, hi) = p.interval();
                println!(
                    "k={} noise={}: {} - {} = {:.6} [{lo:.6}, {hi:.6}]",
                    p.k, p.noise_level, p.other, p.reference, p.mean_diff
                );
            }
            println!("wrote {}", dir.display());
        }
        Command::Lsh => {
            let spec = load_spec(common, Kind::LshBenchmark)?;
            let dir = out_dir(common, &spec);
            for s in run_lsh_benchmark(&spec, &dir)? {
                println!(
                    "{} n={}: rel_err {} monotone {}",
                    s.algorithm,
                    s.n,
                    s.mean_rel_err.map_or("-".into(), |e| format!("{e:.3e}")),
                    s.monotone_fraction
                );
            }
            println!("wrote {}", dir.display());
        }
        Command::Run(args) => {
            let spec = load_spec(common, Kind::SingleRun)?;
            let (problem, k, seed) = problem_for(&spec, args, common.seed, false)?;
            let rows = run_rows(&run_single(&spec, &problem, k, seed)?, seed);
            println!("{}", RUN_HEADER.join(","));
            for row in &rows {
                println!("{}", row.join(","));
            }
            if let Some(dir) = &common.out {
                ensure_dir(dir)?;
                write_csv(&dir.join("run.csv"), &RUN_HEADER, &rows)?;
            }
        }
        Command::Diag(args) => {
            let mut common_algo = common.algo.clone();
            if common_algo.is_empty() {
                common_algo.push("ompr".into());
            }
            let spec = load_spec(
                &Common {
                    config: common.config.clone(),
                    out: None,
                    seed: common.seed,
                    threads: None,
                    algo: common_algo,
                    eta: common.eta,
                    init: common.init.or(common.config.is_none().then_some(InitMode::Random)),
                },
                Kind::SingleRun,
            )?;
            let algos = spec.algorithm_specs()?;
            if algos.len() != 1 {
                return Err(HarnessError::config("diag replays exactly one algorithm"));
            }
            let (problem, k, seed) = problem_for(&spec, args, common.seed, true)?;
            let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("results"));
            let path = dir.join("diag.csv");
            let counts = run_diag(&algos[0], &problem, k, seed, &path)?;
            println!(
                "{}: hold {} fail {} skip {}",
                algos[0].label, counts.hold, counts.fail, counts.skip
            );
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

/// Loads or generates the problem for `run` and `diag`. Diagnostics default
/// to a small noiseless tall problem whose restricted isometry constants can
/// be enumerated, started from a random support.
fn problem_for(
    spec: &ExperimentSpec,
    args: &ProblemArgs,
    seed: Option<u64>,
    diag: bool,
) -> Result<(MeasurementProblem, usize, u64)> {
    if let Some(path) = &args.problem {
        return from_file(path, args.k, seed);
    }
    let (m, n, k, noise) = if diag {
        (
            args.m.or(spec.m).unwrap_or(200),
            args.n.or(spec.n).unwrap_or(14),
            args.k.or(spec.k).unwrap_or(2),
            args.noise.or(spec.noise).unwrap_or(0.0),
        )
    } else {
        (
            args.m.unwrap_or(spec.m()),
            args.n.unwrap_or(spec.n()),
            args.k.unwrap_or(spec.k()),
            args.noise.unwrap_or(spec.noise()),
        )
    };
    if k == 0 || k > m.min(n) {
        return Err(HarnessError::config(format!(
            "k = {k} must lie in 1..=min(m, n) = {}",
            m.min(n)
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(HarnessError::config("noise must be finite and >= 0"));
    }
    let seed = seed.unwrap_or(spec.base_seed);
    let problem =
        MeasurementProblem::generate_noisy(m, n, k, noise, seed).map_err(|e| HarnessError::config(e.to_string()))?;
    Ok((problem, k, seed))
}

fn from_file(path: &Path, k: Option<usize>, seed: Option<u64>) -> Result<(MeasurementProblem, usize, u64)> {
    let problem = load_problem(path).map_err(|e| match e {
        ompr_core::Error::Io(io) => HarnessError::io(path, io),
        other => HarnessError::config(format!("{}: {other}", path.display())),
    })?;
    let k = match (k, &problem.truth) {
        (Some(k), _) => k,
        (None, Some(t)) => t.support.len(),
        (None, None) => {
            return Err(HarnessError::config(
                "--k is required for problems without ground truth",
            ))
        }
    };
    let seed = seed.unwrap_or(problem.seed);
    Ok((problem, k, seed))
}
