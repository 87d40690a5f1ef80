//! The discrete latent factor model.
//!
//! For code rows `u_i` (modality x) and `v_j` (modality y) the pair logit is
//! `theta_ij = (lambda / c) <u_i, v_j>` and the pair similarity probability is
//! `a_ij = sigmoid(theta_ij)`. The objective is the Bernoulli log-likelihood
//!
//! ```text
//! L(U, V) = sum_ij [ s_ij * theta_ij - softplus(theta_ij) ]
//! ```
//!
//! which is maximized one code column at a time through a quadratic lower
//! bound with a constant diagonal curvature (see [`hess_bound_coeff`]).
//!
//! Because `<u_i, v_j> = c - 2 * hamming(u_i, v_j)`, `theta` only takes
//! `c + 1` distinct values. Everything here evaluates `sigmoid` and `softplus`
//! once per distinct value and indexes by Hamming distance; gradient entries
//! tally integer counts per distance, so they do not depend on how rows are
//! split across threads. The `a_ij` values are never cached across calls:
//! callers pass the current codes every time.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::codes::CodeMatrix;
use crate::error::{Error, Result};
use crate::similarity::{SimilaritySource, Transposed};

/// Rows handed to one rayon task at a time.
const MIN_ROWS_PER_TASK: usize = 64;

/// Logistic function, evaluated without overflow for large `|x|`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)`, evaluated without overflow for large `x`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Sign with the tie rule `sign(0) = +1`.
#[inline]
pub fn sign(x: f64) -> i8 {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

#[inline]
fn theta_from_inner(inner: i64, bits: usize, lambda: f64) -> f64 {
    lambda * inner as f64 / bits as f64
}

/// `theta = (lambda / c) <u_row, v_row>`.
pub fn theta(u_row: &[i8], v_row: &[i8], lambda: f64) -> Result<f64> {
    if u_row.len() != v_row.len() || u_row.is_empty() {
        return Err(Error::contract(format!(
            "code rows must have equal nonzero length, got {} and {}",
            u_row.len(),
            v_row.len()
        )));
    }
    let inner: i64 = u_row
        .iter()
        .zip(v_row)
        .map(|(&a, &b)| (a as i64) * (b as i64))
        .sum();
    Ok(theta_from_inner(inner, u_row.len(), lambda))
}

/// Per-Hamming-distance values of `theta`, `sigmoid(theta)` and `softplus(theta)`.
#[derive(Debug, Clone)]
pub(crate) struct LogitTable {
    theta: Vec<f64>,
    prob: Vec<f64>,
    softplus: Vec<f64>,
}

impl LogitTable {
    pub(crate) fn new(bits: usize, lambda: f64) -> Self {
        let theta: Vec<f64> = (0..=bits)
            .map(|h| theta_from_inner(bits as i64 - 2 * h as i64, bits, lambda))
            .collect();
        let prob: Vec<f64> = theta.iter().map(|&t| sigmoid(t)).collect();
        let softplus = theta.iter().map(|&t| softplus(t)).collect();
        let slack = lambda.abs() * 4.0 * f64::EPSILON;
        debug_assert!(theta.iter().all(|t| t.abs() <= lambda + slack));
        debug_assert!(prob
            .iter()
            .all(|&a| a >= sigmoid(-lambda) - slack && a <= sigmoid(lambda) + slack));
        LogitTable {
            theta,
            prob,
            softplus,
        }
    }
}

fn check_shapes<S: SimilaritySource + ?Sized>(u: &CodeMatrix, v: &CodeMatrix, s: &S) -> Result<()> {
    if u.bits() != v.bits() {
        return Err(Error::contract(format!(
            "code lengths differ: U has {} bits, V has {}",
            u.bits(),
            v.bits()
        )));
    }
    if u.rows() != s.rows() || v.rows() != s.cols() {
        return Err(Error::contract(format!(
            "similarity is {}x{} but U has {} rows and V has {}",
            s.rows(),
            s.cols(),
            u.rows(),
            v.rows()
        )));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::contract(format!("lambda must be positive and finite, got {lambda}")))
    }
}

/// The log-likelihood with the additive constant dropped.
///
/// Every pair contributes `s * theta - softplus(theta) < 0`, so the result is
/// strictly negative.
pub fn log_likelihood<S: SimilaritySource + ?Sized>(
    u: &CodeMatrix,
    v: &CodeMatrix,
    s: &S,
    lambda: f64,
) -> Result<f64> {
    check_shapes(u, v, s)?;
    check_lambda(lambda)?;
    let table = LogitTable::new(u.bits(), lambda);
    let row_sums: Vec<f64> = (0..u.rows())
        .into_par_iter()
        .with_min_len(MIN_ROWS_PER_TASK)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..v.rows() {
                let h = u.hamming_to(i, v, j) as usize;
                if s.similar(i, j) {
                    acc += table.theta[h];
                }
                acc -= table.softplus[h];
            }
            acc
        })
        .collect();
    Ok(row_sums.iter().sum())
}

/// Gradient of `L` with respect to column `k` of `this`, where `this` indexes
/// the rows of `s` and `other` its columns. `indices` restricts the sum over
/// `other` rows; `None` means all of them, in ascending order.
fn column_gradient<S: SimilaritySource + ?Sized>(
    k: usize,
    this: &CodeMatrix,
    other: &CodeMatrix,
    s: &S,
    lambda: f64,
    indices: Option<&[usize]>,
) -> Result<Vec<f64>> {
    if k >= this.bits() {
        return Err(Error::contract(format!(
            "bit index {k} out of range for code length {}",
            this.bits()
        )));
    }
    check_lambda(lambda)?;
    if let Some(ix) = indices {
        if let Some(&bad) = ix.iter().find(|&&j| j >= other.rows()) {
            return Err(Error::contract(format!("sampled index {bad} out of range")));
        }
    }
    let bits = this.bits();
    let table = LogitTable::new(bits, lambda);
    let other_col: Vec<i64> = (0..other.rows()).map(|j| other.get(j, k) as i64).collect();
    let scale = lambda / bits as f64;

    let grad = (0..this.rows())
        .into_par_iter()
        .with_min_len(MIN_ROWS_PER_TASK)
        .map(|i| {
            let acc = match indices {
                None => residual_sum(i, this, other, s, &table, &other_col, 0..other.rows()),
                Some(ix) => {
                    residual_sum(i, this, other, s, &table, &other_col, ix.iter().copied())
                }
            };
            scale * acc
        })
        .collect();
    Ok(grad)
}

/// `sum_j (s_ij - a_ij) * other_col[j]` over `js`.
///
/// `a_ij` depends on `j` only through the Hamming distance, so the signed
/// column entries are tallied per distance in integers and the probabilities
/// are applied once per distance at the end.
#[inline(always)]
fn residual_sum<S: SimilaritySource + ?Sized>(
    i: usize,
    this: &CodeMatrix,
    other: &CodeMatrix,
    s: &S,
    table: &LogitTable,
    other_col: &[i64],
    js: impl Iterator<Item = usize>,
) -> f64 {
    // two interleaved tallies so consecutive equal distances do not serialize
    let width = this.bits() + 1;
    let mut tally = vec![0i64; 2 * width];
    let mut similar_sum = 0i64;
    let mut visit = |j: usize, h: usize, sij: bool| {
        let vj = other_col[j];
        tally[(j & 1) * width + h] += vj;
        similar_sum += vj & -(sij as i64);
    };
    match (this.stride(), s.row_bits(i)) {
        (1, Some(row)) => {
            let ti = this.words()[i];
            let ow = other.words();
            for j in js {
                let h = (ti ^ ow[j]).count_ones() as usize;
                visit(j, h, (row[j >> 6] >> (j & 63)) & 1 == 1);
            }
        }
        _ => {
            for j in js {
                visit(j, this.hamming_to(i, other, j) as usize, s.similar(i, j));
            }
        }
    }
    let (even, odd) = tally.split_at(width);
    let mut acc = similar_sum as f64;
    for h in 0..width {
        acc -= table.prob[h] * (even[h] + odd[h]) as f64;
    }
    acc
}

/// `dL/dU_{*k} = (lambda / c) sum_j (S_{*j} - A_{*j}) V_jk`.
pub fn grad_u_col<S: SimilaritySource + ?Sized>(
    k: usize,
    u: &CodeMatrix,
    v: &CodeMatrix,
    s: &S,
    lambda: f64,
) -> Result<Vec<f64>> {
    check_shapes(u, v, s)?;
    column_gradient(k, u, v, s, lambda, None)
}

/// `dL/dV_{*k} = (lambda / c) sum_i (S_{i*} - A_{i*})^T U_ik`.
pub fn grad_v_col<S: SimilaritySource + ?Sized>(
    k: usize,
    u: &CodeMatrix,
    v: &CodeMatrix,
    s: &S,
    lambda: f64,
) -> Result<Vec<f64>> {
    check_shapes(u, v, s)?;
    column_gradient(k, v, u, &Transposed(s), lambda, None)
}

/// [`grad_u_col`] with the sum over `j` restricted to `cols`.
pub fn grad_u_col_sampled<S: SimilaritySource + ?Sized>(
    k: usize,
    u: &CodeMatrix,
    v: &CodeMatrix,
    s: &S,
    lambda: f64,
    cols: &[usize],
) -> Result<Vec<f64>> {
    check_shapes(u, v, s)?;
    column_gradient(k, u, v, s, lambda, Some(cols))
}

/// [`grad_v_col`] with the sum over `i` restricted to `rows`.
pub fn grad_v_col_sampled<S: SimilaritySource + ?Sized>(
    k: usize,
    u: &CodeMatrix,
    v: &CodeMatrix,
    s: &S,
    lambda: f64,
    rows: &[usize],
) -> Result<Vec<f64>> {
    check_shapes(u, v, s)?;
    column_gradient(k, v, u, &Transposed(s), lambda, Some(rows))
}

/// `L` with real-valued `U` and `V` (rows are items, columns are bits);
/// agrees with [`log_likelihood`] on sign matrices.
pub fn relaxed_log_likelihood<S: SimilaritySource + ?Sized>(
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    s: &S,
    lambda: f64,
) -> Result<f64> {
    check_relaxed(u, v, s)?;
    check_lambda(lambda)?;
    let theta = u * v.transpose() * (lambda / u.ncols() as f64);
    let mut acc = 0.0;
    for i in 0..u.nrows() {
        for j in 0..v.nrows() {
            let t = theta[(i, j)];
            if s.similar(i, j) {
                acc += t;
            }
            acc -= softplus(t);
        }
    }
    Ok(acc)
}

/// Gradient of [`relaxed_log_likelihood`] with respect to `U_{*k}`.
pub fn relaxed_grad_u_col<S: SimilaritySource + ?Sized>(
    k: usize,
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    s: &S,
    lambda: f64,
) -> Result<Vec<f64>> {
    check_relaxed(u, v, s)?;
    check_lambda(lambda)?;
    relaxed_gradient(k, u, v, s, lambda)
}

/// Gradient of [`relaxed_log_likelihood`] with respect to `V_{*k}`.
pub fn relaxed_grad_v_col<S: SimilaritySource + ?Sized>(
    k: usize,
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    s: &S,
    lambda: f64,
) -> Result<Vec<f64>> {
    check_relaxed(u, v, s)?;
    check_lambda(lambda)?;
    relaxed_gradient(k, v, u, &Transposed(s), lambda)
}

fn relaxed_gradient<S: SimilaritySource + ?Sized>(
    k: usize,
    this: &DMatrix<f64>,
    other: &DMatrix<f64>,
    s: &S,
    lambda: f64,
) -> Result<Vec<f64>> {
    if k >= this.ncols() {
        return Err(Error::contract(format!("column {k} out of range")));
    }
    let scale = lambda / this.ncols() as f64;
    let theta = this * other.transpose() * scale;
    Ok((0..this.nrows())
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..other.nrows() {
                let target = if s.similar(i, j) { 1.0 } else { 0.0 };
                acc += (target - sigmoid(theta[(i, j)])) * other[(j, k)];
            }
            scale * acc
        })
        .collect())
}

fn check_relaxed<S: SimilaritySource + ?Sized>(
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    s: &S,
) -> Result<()> {
    if u.ncols() != v.ncols() || u.ncols() == 0 {
        return Err(Error::contract(format!(
            "factor widths must match and be nonzero, got {} and {}",
            u.ncols(),
            v.ncols()
        )));
    }
    if s.rows() != u.nrows() || s.cols() != v.nrows() {
        return Err(Error::contract(format!(
            "similarity is {}x{} but factors have {} and {} rows",
            s.rows(),
            s.cols(),
            u.nrows(),
            v.nrows()
        )));
    }
    Ok(())
}

/// Diagonal coefficient of the Hessian lower bound, `-count * lambda^2 / (4 c^2)`.
///
/// Each `a(1 - a)` term is at most 1/4, so `count` terms bound the column
/// Hessian from below. `count` is `n` for full updates and the sample size
/// for stochastic ones.
pub fn hess_bound_coeff(count: usize, lambda: f64, bits: usize) -> f64 {
    let c = bits as f64;
    -(count as f64) * lambda * lambda / (4.0 * c * c)
}

/// Value of the quadratic lower bound expanded at `anchor`.
///
/// # Panics
///
/// If the vectors differ in length.
pub fn surrogate_value(
    candidate: &[i8],
    anchor: &[i8],
    grad: &[f64],
    hess_coeff: f64,
    anchor_objective: f64,
) -> f64 {
    assert_eq!(candidate.len(), anchor.len(), "candidate/anchor length");
    assert_eq!(candidate.len(), grad.len(), "candidate/gradient length");
    let mut linear = 0.0;
    let mut sq = 0.0;
    for ((&c, &a), &g) in candidate.iter().zip(anchor).zip(grad) {
        let d = (c - a) as f64;
        linear += d * g;
        sq += d * d;
    }
    anchor_objective + linear + 0.5 * hess_coeff * sq
}

/// Maximizer of the surrogate over sign vectors: `sign(grad - hess_coeff * current)`.
///
/// # Panics
///
/// If the vectors differ in length.
pub fn closed_form_update(grad: &[f64], hess_coeff: f64, current: &[i8]) -> Vec<i8> {
    assert_eq!(grad.len(), current.len(), "gradient/column length");
    debug_assert!(hess_coeff < 0.0);
    grad.iter()
        .zip(current)
        .map(|(&g, &u)| sign(g - hess_coeff * u as f64))
        .collect()
}
