use crate::error::{bad_args, Result};
use crate::linalg::SupportSet;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// OMPR(l): gradient step, partial hard thresholding, least squares.
    OmprL,
    Omp,
    TwoStage,
}

/// How the first iterate's support is chosen.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Init {
    /// Top-k entries of `|A^T b|`.
    #[default]
    TopkCorrelation,
    /// Uniform `k`-subset drawn from the config seed.
    Random,
    Given(SupportSet),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmConfig {
    pub family: Family,
    /// Target sparsity.
    pub k: usize,
    /// Replacement size: `1..=k` for OMPR(l), `1..=2k` for two-stage.
    pub l: usize,
    /// Gradient step size.
    pub eta: f64,
    pub max_iters: usize,
    /// Convergence threshold on `½‖Ax − b‖²`.
    pub tol: f64,
    pub seed: u64,
    pub init: Init,
}

impl AlgorithmConfig {
    pub fn ompr_l(k: usize, l: usize) -> Self {
        Self {
            family: Family::OmprL,
            k,
            l,
            eta: 1.0,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            seed: 0,
            init: Init::TopkCorrelation,
        }
    }

    /// OMPR, i.e. OMPR(1).
    pub fn ompr(k: usize) -> Self {
        Self::ompr_l(k, 1)
    }

    /// IHT-Newton / hard thresholding pursuit, i.e. OMPR(k).
    pub fn iht_newton(k: usize) -> Self {
        Self::ompr_l(k, k)
    }

    pub fn omp(k: usize) -> Self {
        Self {
            family: Family::Omp,
            l: 1,
            ..Self::ompr(k)
        }
    }

    pub fn two_stage(k: usize, l: usize) -> Self {
        Self {
            family: Family::TwoStage,
            l,
            ..Self::ompr(k)
        }
    }

    /// Two-stage with `l = 2k`.
    pub fn cosamp(k: usize) -> Self {
        Self::two_stage(k, 2 * k)
    }

    /// Two-stage with `l = k`.
    pub fn subspace_pursuit(k: usize) -> Self {
        Self::two_stage(k, k)
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    /// Checks the parameters against an `m × n` problem.
    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        let k = self.k;
        if k == 0 {
            return Err(bad_args("k must be positive"));
        }
        if k > m || k > n {
            return Err(bad_args(format!("k = {k} exceeds matrix shape {m}x{n}")));
        }
        if !(self.tol >= 0.0) {
            return Err(bad_args(format!("tol must be >= 0, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(bad_args("max_iters must be positive"));
        }
        match self.family {
            Family::OmprL => {
                if self.l == 0 || self.l > k {
                    return Err(bad_args(format!("OMPR(l) needs 1 <= l <= k, got l = {}", self.l)));
                }
                if !(self.eta > 0.0) || !self.eta.is_finite() {
                    return Err(bad_args(format!("step size must be positive, got {}", self.eta)));
                }
            }
            Family::TwoStage => {
                if self.l == 0 || self.l > 2 * k {
                    return Err(bad_args(format!("two-stage needs 1 <= l <= 2k, got l = {}", self.l)));
                }
                if k + self.l > m || k + self.l > n {
                    return Err(bad_args(format!(
                        "two-stage needs k + l <= min(m, n), got {} for {m}x{n}",
                        k + self.l
                    )));
                }
            }
            Family::Omp => {}
        }
        Ok(())
    }

    pub(crate) fn expect_family(&self, family: Family) -> Result<()> {
        if self.family != family {
            return Err(bad_args(format!(
                "config family {:?} passed to the {:?} solver",
                self.family, family
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aliases() {
        assert_eq!(AlgorithmConfig::ompr(5), AlgorithmConfig::ompr_l(5, 1));
        assert_eq!(AlgorithmConfig::iht_newton(5).l, 5);
        assert_eq!(AlgorithmConfig::cosamp(3).l, 6);
        assert_eq!(AlgorithmConfig::subspace_pursuit(3).l, 3);
        assert_eq!(AlgorithmConfig::ompr(2).eta, 1.0);
    }

    #[test]
    fn validation() {
        assert!(AlgorithmConfig::ompr_l(3, 4).validate(10, 20).is_err());
        assert!(AlgorithmConfig::ompr(3).with_eta(0.0).validate(10, 20).is_err());
        assert!(AlgorithmConfig::ompr(11).validate(10, 20).is_err());
        assert!(AlgorithmConfig::cosamp(4).validate(10, 20).is_err());
        assert!(AlgorithmConfig::cosamp(3).validate(10, 20).is_ok());
        assert!(AlgorithmConfig::two_stage(3, 7).validate(100, 200).is_err());
    }
}
