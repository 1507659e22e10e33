//! JSON experiment descriptions.
//!
//! Field names mirror [`ExperimentSpec`] exactly and unknown keys are
//! rejected. An algorithm entry is either the name of a preset (`"ompr"`,
//! `"omp"`, `"iht_newton"`, `"iht_newton_half"`, `"cosamp"`, `"sp"`,
//! `"ompr_hash"`) or a full object.

use std::path::{Path, PathBuf};

use ompr_core::algorithms::{AlgorithmConfig, Family, Init, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use ompr_core::lsh::Fallback;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const PRESETS: [&str; 7] = [
    "ompr",
    "omp",
    "iht_newton",
    "iht_newton_half",
    "cosamp",
    "sp",
    "ompr_hash",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    PhaseTransition,
    NoiseSweep,
    LshBenchmark,
    SingleRun,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverFamily {
    OmprL,
    Omp,
    TwoStage,
    /// OMPR(1) with LSH candidate retrieval.
    OmprHash,
}

/// Replacement size, either fixed or relative to `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(try_from = "LRuleRepr", into = "LRuleRepr")]
pub enum LRule {
    Fixed(usize),
    K,
    TwoK,
}

impl Default for LRule {
    fn default() -> Self {
        LRule::Fixed(1)
    }
}

impl LRule {
    pub fn resolve(self, k: usize) -> usize {
        match self {
            LRule::Fixed(l) => l,
            LRule::K => k,
            LRule::TwoK => 2 * k,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum LRuleRepr {
    Int(usize),
    Text(String),
}

impl TryFrom<LRuleRepr> for LRule {
    type Error = String;

    fn try_from(r: LRuleRepr) -> std::result::Result<Self, String> {
        match r {
            LRuleRepr::Int(l) => Ok(LRule::Fixed(l)),
            LRuleRepr::Text(s) if s == "k" => Ok(LRule::K),
            LRuleRepr::Text(s) if s == "2k" => Ok(LRule::TwoK),
            LRuleRepr::Text(s) => Err(format!("l must be an integer, \"k\" or \"2k\", got \"{s}\"")),
        }
    }
}

impl From<LRule> for LRuleRepr {
    fn from(l: LRule) -> Self {
        match l {
            LRule::Fixed(l) => LRuleRepr::Int(l),
            LRule::K => LRuleRepr::Text("k".into()),
            LRule::TwoK => LRuleRepr::Text("2k".into()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum InitMode {
    #[default]
    TopkCorrelation,
    Random,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackMode {
    #[default]
    Exact,
    Skip,
}

fn default_eta() -> f64 {
    1.0
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    /// Name used in output file names and CSV rows.
    pub label: String,
    pub family: SolverFamily,
    #[serde(default)]
    pub l: LRule,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub init: InitMode,
    /// Hashed selection only.
    #[serde(default)]
    pub fallback: FallbackMode,
    /// Bits per key for hashed selection; `⌈log₂ n⌉` when absent.
    #[serde(default)]
    pub bits: Option<usize>,
    /// Number of hash tables; `⌈√n⌉` when absent.
    #[serde(default)]
    pub tables: Option<usize>,
}

impl AlgorithmSpec {
    fn base(label: &str, family: SolverFamily, l: LRule, eta: f64) -> Self {
        Self {
            label: label.to_string(),
            family,
            l,
            eta,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            init: InitMode::TopkCorrelation,
            fallback: FallbackMode::Exact,
            bits: None,
            tables: None,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        use SolverFamily::*;
        Some(match name {
            "ompr" => Self::base(name, OmprL, LRule::Fixed(1), 1.0),
            "omp" => Self::base(name, Omp, LRule::Fixed(1), 1.0),
            "iht_newton" => Self::base(name, OmprL, LRule::K, 1.0),
            "iht_newton_half" => Self::base(name, OmprL, LRule::K, 0.5),
            "cosamp" => Self::base(name, TwoStage, LRule::TwoK, 1.0),
            "sp" => Self::base(name, TwoStage, LRule::K, 1.0),
            "ompr_hash" => Self::base(name, OmprHash, LRule::Fixed(1), 1.0),
            _ => return None,
        })
    }

    /// Solver configuration for sparsity `k`; `seed` drives random
    /// initialisation.
    pub fn config(&self, k: usize, seed: u64) -> AlgorithmConfig {
        let l = self.l.resolve(k);
        let base = match self.family {
            SolverFamily::OmprL | SolverFamily::OmprHash => AlgorithmConfig::ompr_l(k, l),
            SolverFamily::Omp => AlgorithmConfig::omp(k),
            SolverFamily::TwoStage => AlgorithmConfig::two_stage(k, l),
        };
        let init = match self.init {
            InitMode::TopkCorrelation => Init::TopkCorrelation,
            InitMode::Random => Init::Random,
        };
        AlgorithmConfig {
            eta: self.eta,
            max_iters: self.max_iters,
            tol: self.tol,
            seed,
            init,
            ..base
        }
    }

    pub fn fallback(&self) -> Fallback {
        match self.fallback {
            FallbackMode::Exact => Fallback::Exact,
            FallbackMode::Skip => Fallback::Skip,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let label_ok = !self.label.is_empty()
            && self
                .label
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        if !label_ok {
            return Err(HarnessError::config(format!(
                "algorithm label `{}` must be non-empty ASCII letters, digits, `_` or `-`",
                self.label
            )));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(HarnessError::config(format!("{}: eta must be positive", self.label)));
        }
        if !(self.tol >= 0.0) || self.max_iters == 0 {
            return Err(HarnessError::config(format!(
                "{}: tol must be >= 0 and max_iters > 0",
                self.label
            )));
        }
        if self.family == SolverFamily::OmprHash && self.l != LRule::Fixed(1) {
            return Err(HarnessError::config(format!(
                "{}: hashed selection requires l = 1",
                self.label
            )));
        }
        if self.family == SolverFamily::OmprHash
            && (self.bits.is_some_and(|s| s == 0 || s > 63) || self.tables == Some(0)) {
                return Err(HarnessError::config(format!(
                    "{}: bits must lie in 1..=63 and tables >= 1",
                    self.label
                )));
            }
        if matches!(self.family, SolverFamily::OmprL | SolverFamily::TwoStage) && self.l == LRule::Fixed(0) {
            return Err(HarnessError::config(format!("{}: l must be positive", self.label)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum AlgorithmEntry {
    Preset(String),
    Full(AlgorithmSpec),
}

impl AlgorithmEntry {
    pub fn resolve(&self) -> Result<AlgorithmSpec> {
        match self {
            AlgorithmEntry::Preset(name) => AlgorithmSpec::preset(name).ok_or_else(|| {
                HarnessError::config(format!(
                    "unknown algorithm `{name}`; presets are {}",
                    PRESETS.join(", ")
                ))
            }),
            AlgorithmEntry::Full(spec) => Ok(spec.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: Kind,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub k: Option<usize>,
    /// Phase grid: `ρ = k/m` values.
    #[serde(default)]
    pub rho: Option<Vec<f64>>,
    /// Phase grid: `δ = m/n` values.
    #[serde(default)]
    pub delta: Option<Vec<f64>>,
    /// Noise sweep sparsities.
    #[serde(default)]
    pub ks: Option<Vec<usize>>,
    /// Noise levels `‖e‖ / ‖A x*‖`.
    #[serde(default)]
    pub noise_levels: Option<Vec<f64>>,
    /// Single run noise level.
    #[serde(default)]
    pub noise: Option<f64>,
    /// LSH benchmark column counts.
    #[serde(default)]
    pub ns: Option<Vec<usize>>,
    #[serde(default)]
    pub algorithms: Option<Vec<AlgorithmEntry>>,
    #[serde(default)]
    pub trials_per_cell: Option<usize>,
    #[serde(default)]
    pub success_threshold: Option<f64>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Fill wall-time columns. Timed outputs are not byte-reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentSpec {
    pub fn new(kind: Kind) -> Self {
        Self {
            kind,
            m: None,
            n: None,
            k: None,
            rho: None,
            delta: None,
            ks: None,
            noise_levels: None,
            noise: None,
            ns: None,
            algorithms: None,
            trials_per_cell: None,
            success_threshold: None,
            base_seed: 0,
            output_dir: None,
            record_timing: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn default_algorithms(&self) -> &'static [&'static str] {
        match self.kind {
            Kind::PhaseTransition | Kind::SingleRun => &["ompr", "omp"],
            Kind::NoiseSweep => &["ompr", "iht_newton"],
            Kind::LshBenchmark => &["ompr", "ompr_hash", "iht_newton", "iht_newton_half"],
        }
    }

    /// Replaces the algorithm list by `names`. A name matching a configured
    /// label keeps that entry; any other name must be a preset.
    pub fn select_algorithms(&mut self, names: &[String]) -> Result<()> {
        let current = self.algorithm_specs()?;
        let picked = names
            .iter()
            .map(|name| match current.iter().find(|a| &a.label == name) {
                Some(spec) => Ok(AlgorithmEntry::Full(spec.clone())),
                None => AlgorithmEntry::Preset(name.clone()).resolve().map(AlgorithmEntry::Full),
            })
            .collect::<Result<Vec<_>>>()?;
        self.algorithms = Some(picked);
        Ok(())
    }

    pub fn algorithm_specs(&self) -> Result<Vec<AlgorithmSpec>> {
        let specs: Vec<AlgorithmSpec> = match &self.algorithms {
            Some(list) => list.iter().map(AlgorithmEntry::resolve).collect::<Result<_>>()?,
            None => self
                .default_algorithms()
                .iter()
                .map(|n| AlgorithmSpec::preset(n).expect("preset"))
                .collect(),
        };
        if specs.is_empty() {
            return Err(HarnessError::config("at least one algorithm is required"));
        }
        for (i, s) in specs.iter().enumerate() {
            s.validate()?;
            if specs[..i].iter().any(|t| t.label == s.label) {
                return Err(HarnessError::config(format!("duplicate algorithm label `{}`", s.label)));
            }
        }
        Ok(specs)
    }

    pub fn m(&self) -> usize {
        self.m.unwrap_or(match self.kind {
            Kind::PhaseTransition => 100,
            Kind::NoiseSweep => 200,
            Kind::LshBenchmark => 200,
            Kind::SingleRun => 40,
        })
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or(match self.kind {
            Kind::NoiseSweep => 3000,
            _ => 120,
        })
    }

    pub fn k(&self) -> usize {
        self.k.unwrap_or(match self.kind {
            Kind::LshBenchmark => 10,
            _ => 8,
        })
    }

    pub fn rho(&self) -> Vec<f64> {
        self.rho
            .clone()
            .unwrap_or_else(|| (1..=10).map(|i| i as f64 * 0.05).collect())
    }

    pub fn delta(&self) -> Vec<f64> {
        self.delta
            .clone()
            .unwrap_or_else(|| (1..=10).map(|i| i as f64 * 0.1).collect())
    }

    pub fn ks(&self) -> Vec<usize> {
        self.ks.clone().unwrap_or_else(|| vec![10, 30, 50])
    }

    pub fn noise_levels(&self) -> Vec<f64> {
        self.noise_levels
            .clone()
            .unwrap_or_else(|| vec![0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5])
    }

    pub fn noise(&self) -> f64 {
        self.noise.unwrap_or(0.05)
    }

    pub fn ns(&self) -> Vec<usize> {
        self.ns.clone().unwrap_or_else(|| vec![1000, 4000, 16000])
    }

    pub fn trials(&self) -> usize {
        self.trials_per_cell.unwrap_or(match self.kind {
            Kind::PhaseTransition => 50,
            Kind::NoiseSweep => 20,
            Kind::LshBenchmark => 5,
            Kind::SingleRun => 1,
        })
    }

    pub fn success_threshold(&self) -> f64 {
        self.success_threshold.unwrap_or(0.01)
    }

    /// Checks the parameters relevant to `kind`.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::config(msg));
        if self.trials() == 0 {
            return bad("trials_per_cell must be positive".into());
        }
        if !(self.success_threshold() > 0.0) {
            return bad("success_threshold must be positive".into());
        }
        self.algorithm_specs()?;
        let m = self.m();
        if m == 0 {
            return bad("m must be positive".into());
        }
        match self.kind {
            Kind::PhaseTransition => {
                for (name, grid) in [("rho", self.rho()), ("delta", self.delta())] {
                    if grid.is_empty() || grid.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
                        return bad(format!("{name} values must lie in (0, 1]"));
                    }
                }
                if self.rho().iter().any(|r| (r * m as f64).round() < 1.0) {
                    return bad("every rho must give k = round(rho·m) >= 1".into());
                }
            }
            Kind::NoiseSweep => {
                let ks = self.ks();
                if ks.is_empty() || ks.iter().any(|&k| k == 0 || k > m || k > self.n()) {
                    return bad(format!("ks must lie in 1..=min(m, n), got {ks:?}"));
                }
                let levels = self.noise_levels();
                if levels.is_empty() || levels.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return bad("noise levels must be finite and >= 0".into());
                }
            }
            Kind::LshBenchmark => {
                let ns = self.ns();
                if ns.is_empty() || ns.iter().any(|&n| n < self.k()) {
                    return bad("every n must be at least k".into());
                }
                if self.k() == 0 || self.k() > m {
                    return bad("k must lie in 1..=m".into());
                }
            }
            Kind::SingleRun => {
                if self.k() == 0 || self.k() > m || self.k() > self.n() {
                    return bad("k must lie in 1..=min(m, n)".into());
                }
                if !(self.noise() >= 0.0 && self.noise().is_finite()) {
                    return bad("noise must be finite and >= 0".into());
                }
            }
        }
        Ok(())
    }
}

/// Family of a resolved spec, for dispatch.
pub fn core_family(spec: &AlgorithmSpec) -> Family {
    match spec.family {
        SolverFamily::OmprL | SolverFamily::OmprHash => Family::OmprL,
        SolverFamily::Omp => Family::Omp,
        SolverFamily::TwoStage => Family::TwoStage,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_presets_and_objects() {
        let spec = ExperimentSpec::from_json(
            r#"{"kind": "phase_transition", "rho": [0.1], "delta": [0.5],
                "algorithms": ["ompr", {"label": "sp3", "family": "two_stage", "l": "k"}]}"#,
        )
        .unwrap();
        let algs = spec.algorithm_specs().unwrap();
        assert_eq!(algs[0], AlgorithmSpec::preset("ompr").unwrap());
        assert_eq!(algs[1].l, LRule::K);
        assert_eq!(algs[1].config(3, 0).l, 3);
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(ExperimentSpec::from_json(r#"{"kind": "noise_sweep", "colour": 1}"#).is_err());
        assert!(ExperimentSpec::from_json(
            r#"{"kind": "noise_sweep", "algorithms": [{"label": "x", "family": "omp", "speed": 2}]}"#
        )
        .is_err());
    }

    #[test]
    fn bad_algorithm_names_and_labels() {
        let mut spec = ExperimentSpec::new(Kind::NoiseSweep);
        assert!(spec.select_algorithms(&["ompr".into(), "fast".into()]).is_err());
        spec.algorithms = Some(vec![
            AlgorithmEntry::Preset("ompr".into()),
            AlgorithmEntry::Preset("ompr".into()),
        ]);
        assert!(spec.algorithm_specs().is_err());
    }

    #[test]
    fn l_rules_round_trip() {
        for rule in [LRule::Fixed(3), LRule::K, LRule::TwoK] {
            let text = serde_json::to_string(&rule).unwrap();
            assert_eq!(serde_json::from_str::<LRule>(&text).unwrap(), rule);
        }
        assert!(serde_json::from_str::<LRule>("\"3k\"").is_err());
    }

    #[test]
    fn grid_validation() {
        let mut spec = ExperimentSpec::new(Kind::PhaseTransition);
        spec.rho = Some(vec![1.5]);
        assert!(spec.validate().is_err());
        spec.rho = Some(vec![0.1]);
        assert!(spec.validate().is_ok());
    }
}
