//! Alternating column-wise training of the two code matrices.
//!
//! Each outer iteration first sweeps the `c` columns of `U`, then the `c`
//! columns of `V`. A column update maximizes the quadratic lower bound of the
//! objective around the current column, which has the closed form
//! `sign(grad - h * current)`. In full mode the gradient sums over all `n`
//! opposite-modality items and `h` uses `n`; the objective can then never
//! decrease. In stochastic mode `m` indices are drawn without replacement once
//! per phase (shared by all `c` column updates of that phase), the gradient
//! sums over those only, and `h` uses `m`.

use std::io::Write;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codes::CodeMatrix;
use crate::error::{Error, Result};
use crate::model::{
    closed_form_update, grad_u_col_sampled, grad_v_col_sampled, hess_bound_coeff, log_likelihood,
};
use crate::params::Hyperparams;
use crate::similarity::{DenseSimilarity, SimilaritySource};

/// Above this many items the default trace stride is 5 instead of 1.
const TRACE_EVERY_ITER_MAX_N: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainMode {
    Full,
    Stochastic,
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub hyper: Hyperparams,
    pub mode: TrainMode,
    /// Record the objective at stride points (and at iteration 0).
    pub trace: bool,
    /// `None` picks 1 for `n <= 5000` and 5 otherwise.
    pub objective_eval_stride: Option<usize>,
    /// Stop once `|L(t) - L(prev)| < tol * |L(prev)|` at an evaluation point.
    pub early_stop: Option<f64>,
}

impl TrainConfig {
    pub fn new(hyper: Hyperparams, mode: TrainMode) -> Self {
        TrainConfig {
            hyper,
            mode,
            trace: false,
            objective_eval_stride: None,
            early_stop: None,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = true;
        self
    }

    fn stride(&self, n: usize) -> usize {
        self.objective_eval_stride
            .unwrap_or(if n <= TRACE_EVERY_ITER_MAX_N { 1 } else { 5 })
            .max(1)
    }
}

#[derive(Clone, Debug)]
pub struct TrainState {
    pub u: CodeMatrix,
    pub v: CodeMatrix,
    /// Completed outer iterations.
    pub iteration: usize,
    /// `(iteration, objective)` pairs.
    pub objective_trace: Vec<(usize, f64)>,
    rng: ChaCha8Rng,
}

impl TrainState {
    /// Generator state after training; continuing from it is deterministic.
    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }
}

pub fn objective_trace(state: &TrainState) -> &[(usize, f64)] {
    &state.objective_trace
}

/// Writes `iteration,objective` CSV with a header line.
pub fn write_trace_csv(mut w: impl Write, trace: &[(usize, f64)]) -> Result<()> {
    writeln!(w, "iteration,objective")?;
    for (t, l) in trace {
        writeln!(w, "{t},{l}")?;
    }
    Ok(())
}

/// Draws `U` then `V`, entries i.i.d. uniform over `{-1, +1}`, row-major.
pub fn init_codes(n: usize, bits: usize, seed: u64) -> Result<(CodeMatrix, CodeMatrix)> {
    random_codes(n, bits, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn random_codes(n: usize, bits: usize, rng: &mut ChaCha8Rng) -> Result<(CodeMatrix, CodeMatrix)> {
    let mut draw = || -> Result<CodeMatrix> {
        let signs: Vec<i8> = (0..n * bits)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        CodeMatrix::from_signs(n, bits, &signs)
    };
    let u = draw()?;
    let v = draw()?;
    Ok((u, v))
}

pub fn train<S: SimilaritySource + ?Sized>(s: &S, config: &TrainConfig) -> Result<TrainState> {
    let n = s.rows();
    if s.cols() != n {
        return Err(Error::contract(format!(
            "similarity must be square, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    let hyper = &config.hyper;
    hyper.validate_for_training(n)?;
    let sample = match config.mode {
        TrainMode::Full => n,
        TrainMode::Stochastic => {
            let m = hyper.sample_size();
            if m == 0 || m > n {
                return Err(Error::Config(format!(
                    "sample size {m} must lie in 1..={n}"
                )));
            }
            m
        }
    };
    let bits = hyper.code_len;
    let lambda = hyper.lambda;
    let hess = hess_bound_coeff(sample, lambda, bits);
    let stride = config.stride(n);
    let record = config.trace || config.early_stop.is_some();

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let (u, v) = random_codes(n, bits, &mut rng)?;
    let mut state = TrainState {
        u,
        v,
        iteration: 0,
        objective_trace: Vec::new(),
        rng,
    };
    let mut last = if record {
        let l0 = log_likelihood(&state.u, &state.v, s, lambda)?;
        if config.trace {
            state.objective_trace.push((0, l0));
        }
        Some(l0)
    } else {
        None
    };

    // Row-major S^T keeps full V-phase scans contiguous; same sums, same order.
    // Building it is O(n^2), so stochastic runs read S column-wise instead.
    let transposed = match config.mode {
        TrainMode::Full => s.row_bits(0).map(|_| DenseSimilarity::transpose_of(s)),
        TrainMode::Stochastic => None,
    };
    let all: Vec<usize> = (0..n).collect();
    for t in 1..=hyper.max_iter {
        let cols = draw_indices(config.mode, &all, sample, &mut state.rng);
        for k in 0..bits {
            let grad = grad_u_col_sampled(k, &state.u, &state.v, s, lambda, &cols)?;
            let next = closed_form_update(&grad, hess, &state.u.column(k));
            state.u.set_column(k, &next)?;
        }
        let rows = draw_indices(config.mode, &all, sample, &mut state.rng);
        for k in 0..bits {
            let grad = match &transposed {
                Some(st) => grad_u_col_sampled(k, &state.v, &state.u, st, lambda, &rows)?,
                None => grad_v_col_sampled(k, &state.u, &state.v, s, lambda, &rows)?,
            };
            let next = closed_form_update(&grad, hess, &state.v.column(k));
            state.v.set_column(k, &next)?;
        }
        state.iteration = t;

        if record && (t % stride == 0 || t == hyper.max_iter) {
            let l = log_likelihood(&state.u, &state.v, s, lambda)?;
            debug!("iteration {t}: objective {l}");
            if config.trace {
                state.objective_trace.push((t, l));
            }
            if let (Some(tol), Some(prev)) = (config.early_stop, last) {
                if (l - prev).abs() < tol * prev.abs() {
                    debug!("relative improvement below {tol}, stopping after iteration {t}");
                    break;
                }
            }
            last = Some(l);
        }
    }
    Ok(state)
}

/// Full-mode training; rejects a stochastic config.
pub fn train_full<S: SimilaritySource + ?Sized>(s: &S, config: &TrainConfig) -> Result<TrainState> {
    if config.mode != TrainMode::Full {
        return Err(Error::Config("train_full needs mode = Full".into()));
    }
    train(s, config)
}

/// Stochastic-mode training; rejects a full config.
pub fn train_stochastic<S: SimilaritySource + ?Sized>(
    s: &S,
    config: &TrainConfig,
) -> Result<TrainState> {
    if config.mode != TrainMode::Stochastic {
        return Err(Error::Config("train_stochastic needs mode = Stochastic".into()));
    }
    train(s, config)
}

/// Sorted sample of `m` distinct indices, or every index in full mode.
fn draw_indices(mode: TrainMode, all: &[usize], m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    match mode {
        TrainMode::Full => all.to_vec(),
        TrainMode::Stochastic => {
            let mut ix = rand::seq::index::sample(rng, all.len(), m).into_vec();
            ix.sort_unstable();
            ix
        }
    }
}
