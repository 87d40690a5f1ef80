//! Independent reference implementations shared by the integration suites.
#![allow(dead_code)]

use dlfh::codes::CodeMatrix;
use dlfh::similarity::DenseSimilarity;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_signs(rng: &mut ChaCha8Rng, len: usize) -> Vec<i8> {
    (0..len).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
}

pub fn random_codes(rng: &mut ChaCha8Rng, n: usize, c: usize) -> CodeMatrix {
    CodeMatrix::from_signs(n, c, &random_signs(rng, n * c)).unwrap()
}

pub fn random_similarity(rng: &mut ChaCha8Rng, n: usize, m: usize, p: f64) -> DenseSimilarity {
    let bits: Vec<bool> = (0..n * m).map(|_| rng.random_bool(p)).collect();
    DenseSimilarity::from_fn(n, m, |i, j| bits[i * m + j])
}

pub fn to_real(codes: &CodeMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(codes.rows(), codes.bits(), |i, k| codes.get(i, k) as f64)
}

fn log1p_exp(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// `sum_ij s_ij theta_ij - log(1 + exp(theta_ij))`, straight from the definition.
pub fn naive_objective(
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    s: &dyn Fn(usize, usize) -> bool,
    lambda: f64,
) -> f64 {
    let c = u.ncols() as f64;
    let mut total = 0.0;
    for i in 0..u.nrows() {
        for j in 0..v.nrows() {
            let mut inner = 0.0;
            for k in 0..u.ncols() {
                inner += u[(i, k)] * v[(j, k)];
            }
            let theta = lambda / c * inner;
            total += if s(i, j) { theta } else { 0.0 } - log1p_exp(theta);
        }
    }
    total
}

/// Central differences of [`naive_objective`] along column `k` of `u`
/// (or of `v` when `wrt_v`).
pub fn fd_column_gradient(
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    s: &dyn Fn(usize, usize) -> bool,
    lambda: f64,
    k: usize,
    wrt_v: bool,
    step: f64,
) -> Vec<f64> {
    let rows = if wrt_v { v.nrows() } else { u.nrows() };
    (0..rows)
        .map(|i| {
            let eval = |delta: f64| {
                let (mut u2, mut v2) = (u.clone(), v.clone());
                if wrt_v {
                    v2[(i, k)] += delta;
                } else {
                    u2[(i, k)] += delta;
                }
                naive_objective(&u2, &v2, s, lambda)
            };
            (eval(step) - eval(-step)) / (2.0 * step)
        })
        .collect()
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(1e-300)
}

/// All `2^n` sign vectors, in binary counting order (bit set = +1).
pub fn all_sign_vectors(n: usize) -> impl Iterator<Item = Vec<i8>> {
    (0u64..1 << n).map(move |mask| {
        (0..n)
            .map(|i| if (mask >> i) & 1 == 1 { 1 } else { -1 })
            .collect()
    })
}

/// `l0 + g.(x - a) + (h/2)|x - a|^2`, written out independently.
pub fn quadratic_bound(x: &[i8], a: &[i8], g: &[f64], h: f64, l0: f64) -> f64 {
    let mut lin = 0.0;
    let mut sq = 0.0;
    for i in 0..x.len() {
        let d = x[i] as f64 - a[i] as f64;
        lin += g[i] * d;
        sq += d * d;
    }
    l0 + lin + h / 2.0 * sq
}

/// Ranking by (distance, index) computed on unpacked sign vectors, then AP
/// straight from the definition. `None` when nothing is relevant.
pub fn naive_average_precision(
    query: &[i8],
    db: &[Vec<i8>],
    rel: &dyn Fn(usize) -> bool,
) -> Option<f64> {
    let mut order: Vec<(i64, usize)> = db
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let inner: i64 = row.iter().zip(query).map(|(a, b)| (*a as i64) * (*b as i64)).sum();
            ((query.len() as i64 - inner) / 2, i)
        })
        .collect();
    order.sort();
    let relevant = (0..db.len()).filter(|&i| rel(i)).count();
    if relevant == 0 {
        return None;
    }
    let mut total = 0.0;
    for p in 1..=order.len() {
        if rel(order[p - 1].1) {
            let in_top = order[..p].iter().filter(|&&(_, i)| rel(i)).count();
            total += in_top as f64 / p as f64;
        }
    }
    Some(total / relevant as f64)
}

pub fn naive_map(
    queries: &[Vec<i8>],
    db: &[Vec<i8>],
    rel: &dyn Fn(usize, usize) -> bool,
) -> Option<f64> {
    let aps: Vec<f64> = queries
        .iter()
        .enumerate()
        .filter_map(|(q, code)| naive_average_precision(code, db, &|i| rel(q, i)))
        .collect();
    if aps.is_empty() {
        None
    } else {
        Some(aps.iter().sum::<f64>() / aps.len() as f64)
    }
}

/// Ridge solution through a QR factorization of the stacked system
/// `[X; sqrt(gamma) I] W = [B; 0]`.
pub fn ridge_by_qr(x: &DMatrix<f64>, b: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    let (n, d) = x.shape();
    let mut a = DMatrix::zeros(n + d, d);
    a.view_mut((0, 0), (n, d)).copy_from(x);
    for i in 0..d {
        a[(n + i, i)] = gamma.sqrt();
    }
    let mut rhs = DMatrix::zeros(n + d, b.ncols());
    rhs.view_mut((0, 0), (n, b.ncols())).copy_from(b);
    let qr = a.qr();
    let qtb = qr.q().transpose() * rhs;
    qr.r().solve_upper_triangular(&qtb).expect("full-rank stacked system")
}
