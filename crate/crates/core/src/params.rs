use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 8.0;
pub const DEFAULT_MAX_ITER: usize = 30;
pub const DEFAULT_CODE_LEN: usize = 16;
pub const DEFAULT_GAMMA: f64 = 1.0;
pub const DEFAULT_ANCHORS: usize = 500;
pub const DEFAULT_KERNEL_REG: f64 = 1e-3;

/// RBF bandwidth choice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bandwidth {
    /// Mean pairwise distance over a subsample of the training rows.
    Auto,
    Fixed(f64),
}

/// Settings for the kernel logistic regression hash functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    /// Requested anchor count; clamped to the number of training rows.
    pub anchors: usize,
    pub bandwidth: Bandwidth,
    /// l2 penalty on the kernel weights (the intercept is not penalized).
    pub regularization: f64,
    pub max_newton_iter: usize,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            anchors: DEFAULT_ANCHORS,
            bandwidth: Bandwidth::Auto,
            regularization: DEFAULT_KERNEL_REG,
            max_newton_iter: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hyperparams {
    /// Scale factor applied to code inner products.
    pub lambda: f64,
    pub code_len: usize,
    /// Outer iterations `T`.
    pub max_iter: usize,
    /// Sampled rows/columns per phase in stochastic mode; `None` means `code_len`.
    pub sample_size: Option<usize>,
    pub seed: u64,
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub kernel: Option<KernelParams>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            lambda: DEFAULT_LAMBDA,
            code_len: DEFAULT_CODE_LEN,
            max_iter: DEFAULT_MAX_ITER,
            sample_size: None,
            seed: 0,
            gamma_x: DEFAULT_GAMMA,
            gamma_y: DEFAULT_GAMMA,
            kernel: None,
        }
    }
}

impl Hyperparams {
    pub fn with_code_len(code_len: usize) -> Self {
        Hyperparams {
            code_len,
            ..Hyperparams::default()
        }
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size.unwrap_or(self.code_len)
    }

    /// Checks everything except `max_iter`, which training accepts as zero.
    pub(crate) fn validate_for_training(&self, n: usize) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if self.code_len == 0 {
            return Err(Error::Config("code length must be >= 1".into()));
        }
        if n == 0 {
            return Err(Error::Config("training set is empty".into()));
        }
        for (name, g) in [("gamma_x", self.gamma_x), ("gamma_y", self.gamma_y)] {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("{name} must be >= 0, got {g}")));
            }
        }
        if let Some(k) = &self.kernel {
            if k.anchors == 0 {
                return Err(Error::Config("anchor count must be >= 1".into()));
            }
            if let Bandwidth::Fixed(b) = k.bandwidth {
                if !(b > 0.0 && b.is_finite()) {
                    return Err(Error::Config(format!("bandwidth must be > 0, got {b}")));
                }
            }
        }
        Ok(())
    }

    /// Full validation for a training set of `n` items.
    pub fn validate(&self, n: usize) -> Result<()> {
        self.validate_for_training(n)?;
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        let m = self.sample_size();
        if m == 0 || m > n {
            return Err(Error::Config(format!(
                "sample size must lie in 1..={n}, got {m}"
            )));
        }
        Ok(())
    }
}
