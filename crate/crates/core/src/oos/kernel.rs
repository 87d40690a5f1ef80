//! RBF-feature logistic regression hash functions.
//!
//! A query is mapped to `phi(x)_j = exp(-|x - anchor_j|^2 / (2 sigma^2))` over
//! `a` anchor rows sampled from the training set, and each bit is an
//! independent l2-regularized logistic regression on `[phi(x), 1]`, fitted by
//! damped Newton iterations.

use log::warn;
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::linear::check_dim;
use super::{encode_rows, HashFunction};
use crate::codes::CodeMatrix;
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::model::{sigmoid, sign, softplus};
use crate::params::{Bandwidth, KernelParams};

/// Stop once the Euclidean norm of the gradient falls below this.
pub const GRAD_TOL: f64 = 1e-6;
/// Rows used by the automatic bandwidth heuristic.
const BANDWIDTH_SUBSAMPLE: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct KernelHashModel {
    anchors: DMatrix<f64>,
    bandwidth: f64,
    /// `(a + 1) x c`; row `a` holds the intercepts.
    weights: DMatrix<f64>,
    center: Vec<f64>,
}

impl KernelHashModel {
    pub fn new(
        anchors: DMatrix<f64>,
        bandwidth: f64,
        weights: DMatrix<f64>,
        center: Vec<f64>,
    ) -> Result<Self> {
        if anchors.nrows() == 0 {
            return Err(Error::contract("kernel model needs at least one anchor"));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::contract(format!("bandwidth must be > 0, got {bandwidth}")));
        }
        if weights.nrows() != anchors.nrows() + 1 || anchors.ncols() != center.len() {
            return Err(Error::contract(format!(
                "inconsistent kernel model shapes: anchors {}x{}, weights {}x{}, center {}",
                anchors.nrows(),
                anchors.ncols(),
                weights.nrows(),
                weights.ncols(),
                center.len()
            )));
        }
        if weights.iter().chain(anchors.iter()).chain(&center).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite kernel model parameters".into()));
        }
        Ok(KernelHashModel {
            anchors,
            bandwidth,
            weights,
            center,
        })
    }

    /// `a x d`, in centered coordinates.
    pub fn anchors(&self) -> &DMatrix<f64> {
        &self.anchors
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// RBF features of an already-centered point.
    pub fn kernel_features(&self, centered: &[f64]) -> Vec<f64> {
        rbf_row(&self.anchors, self.bandwidth, centered)
    }

    /// Per-bit logistic scores (logits) for a raw query.
    pub fn scores(&self, query: &[f64]) -> Result<Vec<f64>> {
        check_dim(query.len(), self.dim())?;
        let centered: Vec<f64> = query.iter().zip(&self.center).map(|(q, m)| q - m).collect();
        let phi = self.kernel_features(&centered);
        let a = phi.len();
        Ok((0..self.bits())
            .map(|k| {
                let mut z = self.weights[(a, k)];
                for (j, p) in phi.iter().enumerate() {
                    z += self.weights[(j, k)] * p;
                }
                z
            })
            .collect())
    }
}

impl HashFunction for KernelHashModel {
    fn dim(&self) -> usize {
        self.anchors.ncols()
    }

    fn bits(&self) -> usize {
        self.weights.ncols()
    }

    fn hash(&self, query: &[f64]) -> Result<Vec<i8>> {
        Ok(self.scores(query)?.into_iter().map(sign).collect())
    }

    fn encode(&self, features: &FeatureMatrix) -> Result<CodeMatrix> {
        check_dim(features.cols(), self.dim())?;
        encode_rows(self, features)
    }
}

fn rbf_row(anchors: &DMatrix<f64>, bandwidth: f64, x: &[f64]) -> Vec<f64> {
    let denom = 2.0 * bandwidth * bandwidth;
    (0..anchors.nrows())
        .map(|j| {
            let d2: f64 = x
                .iter()
                .enumerate()
                .map(|(t, &v)| {
                    let diff = v - anchors[(j, t)];
                    diff * diff
                })
                .sum();
            (-d2 / denom).exp()
        })
        .collect()
}

/// Mean pairwise Euclidean distance over (up to) `BANDWIDTH_SUBSAMPLE` rows.
pub fn auto_bandwidth(x: &FeatureMatrix, rng: &mut ChaCha8Rng) -> f64 {
    let n = x.rows();
    let mut rows = rand::seq::index::sample(rng, n, n.min(BANDWIDTH_SUBSAMPLE)).into_vec();
    rows.sort_unstable();
    let pts: Vec<Vec<f64>> = rows.iter().map(|&i| x.row(i)).collect();
    let mut total = 0.0;
    let mut pairs = 0u64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d2: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            total += d2.sqrt();
            pairs += 1;
        }
    }
    let mean = if pairs == 0 { 0.0 } else { total / pairs as f64 };
    if mean > 0.0 {
        mean
    } else {
        1.0
    }
}

/// Fits one kernel logistic regression per code bit, with targets
/// `(code + 1) / 2`. Anchors are sampled without replacement from the rows
/// of `x` (which should be centered). A bit that misses [`GRAD_TOL`] within
/// the iteration cap keeps its best iterate and logs a warning.
pub fn fit_kernel(
    x: &FeatureMatrix,
    codes: &CodeMatrix,
    params: &KernelParams,
    seed: u64,
) -> Result<KernelHashModel> {
    let n = x.rows();
    if n != codes.rows() {
        return Err(Error::contract(format!(
            "{n} feature rows but {} code rows",
            codes.rows()
        )));
    }
    if params.anchors == 0 {
        return Err(Error::Config("anchor count must be >= 1".into()));
    }
    if !(params.regularization >= 0.0 && params.regularization.is_finite()) {
        return Err(Error::Config(format!(
            "regularization must be >= 0, got {}",
            params.regularization
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = params.anchors.min(n);
    let mut picks = rand::seq::index::sample(&mut rng, n, a).into_vec();
    picks.sort_unstable();
    let anchors = x.matrix().select_rows(picks.iter());
    let bandwidth = match params.bandwidth {
        Bandwidth::Fixed(b) if b > 0.0 && b.is_finite() => b,
        Bandwidth::Fixed(b) => {
            return Err(Error::Config(format!("bandwidth must be > 0, got {b}")));
        }
        Bandwidth::Auto => auto_bandwidth(x, &mut rng),
    };

    // design matrix [phi | 1]
    let mut design = DMatrix::<f64>::zeros(n, a + 1);
    for i in 0..n {
        let phi = rbf_row(&anchors, bandwidth, &x.row(i));
        for (j, p) in phi.into_iter().enumerate() {
            design[(i, j)] = p;
        }
        design[(i, a)] = 1.0;
    }

    let columns: Vec<Result<DVector<f64>>> = (0..codes.bits())
        .into_par_iter()
        .map(|k| {
            let targets =
                DVector::from_iterator(n, (0..n).map(|i| if codes.get(i, k) == 1 { 1.0 } else { 0.0 }));
            let fit = fit_logistic(&design, &targets, params.regularization, params.max_newton_iter)?;
            if !fit.converged {
                warn!(
                    "kernel logistic regression for bit {k} stopped at gradient norm {:.3e} after {} iterations",
                    fit.grad_norm, fit.iterations
                );
            }
            Ok(fit.weights)
        })
        .collect();
    let mut weights = DMatrix::<f64>::zeros(a + 1, codes.bits());
    for (k, col) in columns.into_iter().enumerate() {
        weights.set_column(k, &col?);
    }
    KernelHashModel::new(anchors, bandwidth, weights, x.center().to_vec())
}

pub fn hash_kernel(model: &KernelHashModel, query: &[f64]) -> Result<Vec<i8>> {
    model.hash(query)
}

#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub weights: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Maximizes `mean(t z - softplus(z)) - reg/2 |w_{0..p-1}|^2` with `z = X w`,
/// where the last column of `x` is the unpenalized intercept.
pub fn fit_logistic(
    x: &DMatrix<f64>,
    targets: &DVector<f64>,
    reg: f64,
    max_iter: usize,
) -> Result<LogisticFit> {
    let (n, p) = x.shape();
    let inv_n = 1.0 / n as f64;
    let penalized = |j: usize| j + 1 < p;
    let objective = |w: &DVector<f64>| -> f64 {
        let z = x * w;
        let ll: f64 = z.iter().zip(targets.iter()).map(|(&z, &t)| t * z - softplus(z)).sum();
        let pen: f64 = (0..p).filter(|&j| penalized(j)).map(|j| w[j] * w[j]).sum();
        ll * inv_n - 0.5 * reg * pen
    };

    let mut w = DVector::<f64>::zeros(p);
    let mut current = objective(&w);
    let mut grad_norm = f64::INFINITY;
    for iter in 0..=max_iter {
        let z = x * &w;
        let prob = z.map(sigmoid);
        let mut grad = x.tr_mul(&(targets - &prob)) * inv_n;
        for j in 0..p {
            if penalized(j) {
                grad[j] -= reg * w[j];
            }
        }
        grad_norm = grad.norm();
        if grad_norm <= GRAD_TOL {
            return Ok(LogisticFit {
                weights: w,
                converged: true,
                iterations: iter,
                grad_norm,
            });
        }
        if iter == max_iter {
            break;
        }

        // negative Hessian: X^T diag(p(1-p)) X / n + reg on penalized coords
        let mut scaled = x.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= (prob[i] * (1.0 - prob[i]) * inv_n).sqrt();
        }
        let mut curvature = scaled.tr_mul(&scaled);
        for j in 0..p {
            if penalized(j) {
                curvature[(j, j)] += reg;
            }
        }
        let step = newton_direction(curvature, &grad)?;

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &w + &step * t;
            let value = objective(&trial);
            if value >= current {
                w = trial;
                current = value;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !w.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("non-finite logistic regression weights".into()));
    }
    Ok(LogisticFit {
        weights: w,
        converged: false,
        iterations: max_iter,
        grad_norm,
    })
}

/// Solves `curvature * step = grad`, adding diagonal jitter if the
/// curvature is numerically singular.
fn newton_direction(curvature: DMatrix<f64>, grad: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = curvature.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut jitter = 0.0;
    for _ in 0..12 {
        let mut m = curvature.clone();
        for j in 0..m.nrows() {
            m[(j, j)] += jitter;
        }
        if let Some(chol) = Cholesky::new(m) {
            let step = chol.solve(grad);
            if step.iter().all(|v| v.is_finite()) {
                return Ok(step);
            }
        }
        jitter = if jitter == 0.0 { scale * 1e-12 } else { jitter * 100.0 };
    }
    Err(Error::Numerical("logistic regression curvature is not positive definite".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchor_query_has_unit_feature() {
        let x = crate::data::center(
            &FeatureMatrix::from_rows(&[
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 2.0],
                vec![3.0, 1.0],
            ])
            .unwrap(),
        );
        let codes = CodeMatrix::from_rows(&[vec![1], vec![-1], vec![1], vec![-1]]).unwrap();
        let params = KernelParams {
            anchors: 4,
            bandwidth: Bandwidth::Fixed(1.0),
            ..Default::default()
        };
        let m = fit_kernel(&x, &codes, &params, 3).unwrap();
        for j in 0..4 {
            let anchor: Vec<f64> = m.anchors().row(j).iter().copied().collect();
            let phi = m.kernel_features(&anchor);
            assert_eq!(phi[j], 1.0);
            assert!(phi.iter().all(|&v| v > 0.0 && v <= 1.0));
        }
    }

    #[test]
    fn huge_bandwidth_predicts_majority_bit() {
        let rows: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64, (i * i) as f64 * 0.1]).collect();
        let x = crate::data::center(&FeatureMatrix::from_rows(&rows).unwrap());
        let signs: Vec<Vec<i8>> = (0..9).map(|i| vec![if i % 3 == 0 { -1 } else { 1 }]).collect();
        let codes = CodeMatrix::from_rows(&signs).unwrap();
        let params = KernelParams {
            anchors: 9,
            bandwidth: Bandwidth::Fixed(1e6),
            ..Default::default()
        };
        let m = fit_kernel(&x, &codes, &params, 0).unwrap();
        for r in &rows {
            assert_eq!(m.hash(r).unwrap(), vec![1]);
        }
    }

    #[test]
    fn positive_weight_scaling_keeps_codes() {
        let anchors = DMatrix::from_row_slice(2, 1, &[-1.0, 1.0]);
        let w = DMatrix::from_row_slice(3, 2, &[1.0, -0.5, -1.0, 0.7, 0.1, -0.05]);
        let m = KernelHashModel::new(anchors.clone(), 0.8, w.clone(), vec![0.0]).unwrap();
        let m3 = KernelHashModel::new(anchors, 0.8, w * 3.0, vec![0.0]).unwrap();
        for q in [-2.0, -0.3, 0.0, 0.4, 1.7] {
            assert_eq!(m.hash(&[q]).unwrap(), m3.hash(&[q]).unwrap());
        }
        assert!(m.hash(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn same_seed_same_model() {
        let d = crate::data::synth_crossmodal(60, 3, 2, 3, 0.5, 1).unwrap();
        let x = crate::data::center(&d.x);
        let classes: Vec<Vec<i8>> = (0..60)
            .map(|i| (0..3).map(|l| if d.labels.get(i, l) { 1 } else { -1 }).collect())
            .collect();
        let codes = CodeMatrix::from_rows(&classes).unwrap();
        let params = KernelParams {
            anchors: 20,
            ..Default::default()
        };
        let a = fit_kernel(&x, &codes, &params, 5).unwrap();
        let b = fit_kernel(&x, &codes, &params, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn logistic_gradient_vanishes_at_solution() {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0, 1.0]);
        let t = DVector::from_vec(vec![0.0, 1.0, 0.0, 1.0]);
        let fit = fit_logistic(&x, &t, 1e-3, 100).unwrap();
        assert!(fit.converged);
        assert!(fit.grad_norm <= GRAD_TOL);
    }
}
