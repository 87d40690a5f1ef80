mod common;

use common::*;
use dlfh::model::{
    closed_form_update, grad_u_col, grad_u_col_sampled, grad_v_col, grad_v_col_sampled,
    hess_bound_coeff, log_likelihood, relaxed_grad_u_col, relaxed_grad_v_col,
    relaxed_log_likelihood, surrogate_value,
};
use dlfh::similarity::SimilaritySource;
use dlfh::{
    init_codes, similarity_from_labels, synth_labels, train, Hyperparams, TrainConfig, TrainMode,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn relaxed_matches_binary_on_sign_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let n = rng.random_range(2..15);
        let c = rng.random_range(1..10);
        let lambda = rng.random_range(0.5..10.0);
        let u = random_codes(&mut rng, n, c);
        let v = random_codes(&mut rng, n, c);
        let s = random_similarity(&mut rng, n, n, 0.4);
        let (ur, vr) = (to_real(&u), to_real(&v));
        let l = log_likelihood(&u, &v, &s, lambda).unwrap();
        let lr = relaxed_log_likelihood(&ur, &vr, &s, lambda).unwrap();
        assert!((l - lr).abs() <= 1e-12 * l.abs().max(1.0));
        for k in 0..c {
            let gu = grad_u_col(k, &u, &v, &s, lambda).unwrap();
            let gv = grad_v_col(k, &u, &v, &s, lambda).unwrap();
            assert!(relative_error(&gu, &relaxed_grad_u_col(k, &ur, &vr, &s, lambda).unwrap()) < 1e-12);
            assert!(relative_error(&gv, &relaxed_grad_v_col(k, &ur, &vr, &s, lambda).unwrap()) < 1e-12);
        }
    }
}

#[test]
fn binary_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let n = rng.random_range(2..20);
        let c = rng.random_range(1..8);
        let lambda = rng.random_range(0.5..8.0);
        let u = random_codes(&mut rng, n, c);
        let v = random_codes(&mut rng, n, c);
        let s = random_similarity(&mut rng, n, n, 0.5);
        let sim = |i: usize, j: usize| s.similar(i, j);
        let k = rng.random_range(0..c);
        let fd_u = fd_column_gradient(&to_real(&u), &to_real(&v), &sim, lambda, k, false, 1e-5);
        let fd_v = fd_column_gradient(&to_real(&u), &to_real(&v), &sim, lambda, k, true, 1e-5);
        assert!(relative_error(&grad_u_col(k, &u, &v, &s, lambda).unwrap(), &fd_u) < 1e-5);
        assert!(relative_error(&grad_v_col(k, &u, &v, &s, lambda).unwrap(), &fd_v) < 1e-5);
    }
}

#[test]
fn sampled_gradients_sum_over_the_sample_only() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (n, c, lambda) = (12, 5, 3.0);
    let u = random_codes(&mut rng, n, c);
    let v = random_codes(&mut rng, n, c);
    let s = random_similarity(&mut rng, n, n, 0.3);
    let sample = [1usize, 4, 5, 9];
    let keep = |j: usize| sample.contains(&j);
    for k in 0..c {
        let g = grad_u_col_sampled(k, &u, &v, &s, lambda, &sample).unwrap();
        for (i, &got) in g.iter().enumerate() {
            let mut expected = 0.0;
            for j in (0..n).filter(|&j| keep(j)) {
                let theta = lambda / c as f64 * u.inner(i, &v, j) as f64;
                let a = 1.0 / (1.0 + (-theta).exp());
                expected += (s.similar(i, j) as u8 as f64 - a) * v.get(j, k) as f64;
            }
            expected *= lambda / c as f64;
            assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        }
        let gv = grad_v_col_sampled(k, &u, &v, &s, lambda, &sample).unwrap();
        assert_eq!(gv.len(), n);
    }
    assert!(grad_u_col_sampled(0, &u, &v, &s, lambda, &[n]).is_err());
}

/// One outer iteration with one-bit codes, every column update chosen by
/// enumerating the surrogate over all sign vectors.
#[test]
fn one_bit_one_iteration_matches_hand_trace() {
    let mut changed = 0;
    for seed in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = rng.random_range(2..=8);
        let lambda = rng.random_range(0.2..3.0);
        let s = random_similarity(&mut rng, n, n, 0.5);
        let sim = |i: usize, j: usize| s.similar(i, j);

        let (u0, v0) = init_codes(n, 1, seed).unwrap();
        let mut u = to_real(&u0);
        let mut v = to_real(&v0);
        let h = -(n as f64) * lambda * lambda / 4.0;
        let best = |anchor: Vec<i8>, g: &[f64], l0: f64| {
            let mut best: Option<(f64, Vec<i8>)> = None;
            for x in all_sign_vectors(n) {
                let val = quadratic_bound(&x, &anchor, g, h, l0);
                if best.as_ref().is_none_or(|(b, _)| val > *b) {
                    best = Some((val, x));
                }
            }
            best.unwrap().1
        };

        let l0 = naive_objective(&u, &v, &sim, lambda);
        let g = one_bit_gradient(&u, &v, &sim, lambda, false);
        let anchor: Vec<i8> = (0..n).map(|i| u[(i, 0)] as i8).collect();
        for (i, x) in best(anchor, &g, l0).into_iter().enumerate() {
            u[(i, 0)] = x as f64;
        }
        let l1 = naive_objective(&u, &v, &sim, lambda);
        let g = one_bit_gradient(&u, &v, &sim, lambda, true);
        let anchor: Vec<i8> = (0..n).map(|i| v[(i, 0)] as i8).collect();
        for (i, x) in best(anchor, &g, l1).into_iter().enumerate() {
            v[(i, 0)] = x as f64;
        }

        let hyper = Hyperparams { lambda, code_len: 1, max_iter: 1, seed, ..Default::default() };
        let state = train(&s, &TrainConfig::new(hyper, TrainMode::Full)).unwrap();
        let got_u: Vec<f64> = state.u.column(0).iter().map(|&x| x as f64).collect();
        let got_v: Vec<f64> = state.v.column(0).iter().map(|&x| x as f64).collect();
        assert_eq!(got_u, u.column(0).iter().copied().collect::<Vec<_>>(), "seed {seed}");
        assert_eq!(got_v, v.column(0).iter().copied().collect::<Vec<_>>(), "seed {seed}");
        if state.u != u0 || state.v != v0 {
            changed += 1;
        }
    }
    assert!(changed > 5, "only {changed} traces moved away from the initial codes");
}

/// Column gradient from its closed form, for one-bit codes.
fn one_bit_gradient(
    u: &nalgebra::DMatrix<f64>,
    v: &nalgebra::DMatrix<f64>,
    s: &dyn Fn(usize, usize) -> bool,
    lambda: f64,
    wrt_v: bool,
) -> Vec<f64> {
    let n = u.nrows();
    (0..n)
        .map(|a| {
            let mut acc = 0.0;
            for b in 0..n {
                let (i, j) = if wrt_v { (b, a) } else { (a, b) };
                let theta = lambda * u[(i, 0)] * v[(j, 0)];
                let p = 1.0 / (1.0 + (-theta).exp());
                let other = if wrt_v { u[(i, 0)] } else { v[(j, 0)] };
                acc += (s(i, j) as u8 as f64 - p) * other;
            }
            lambda * acc
        })
        .collect()
}

#[test]
fn stochastic_with_full_sample_reproduces_full() {
    let labels = synth_labels(120, 3, 4).unwrap();
    let s = similarity_from_labels(&labels, &labels).unwrap();
    let hyper = Hyperparams { code_len: 16, max_iter: 6, sample_size: Some(120), seed: 8, ..Default::default() };
    let full = train(&s, &TrainConfig::new(hyper.clone(), TrainMode::Full)).unwrap();
    let stoch = train(&s, &TrainConfig::new(hyper, TrainMode::Stochastic)).unwrap();
    assert_eq!(full.u, stoch.u);
    assert_eq!(full.v, stoch.v);
}

#[test]
fn codes_do_not_depend_on_thread_count() {
    let labels = synth_labels(400, 4, 2).unwrap();
    let s = similarity_from_labels(&labels, &labels).unwrap();
    let hyper = Hyperparams { code_len: 24, max_iter: 5, seed: 3, ..Default::default() };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| train(&s, &TrainConfig::new(hyper.clone(), TrainMode::Full).with_trace()).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.u, four.u);
    assert_eq!(one.v, four.v);
    assert_eq!(one.objective_trace, four.objective_trace);
}

#[test]
fn hessian_bound_dominates_true_curvature() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n = rng.random_range(2..12);
        let c = rng.random_range(1..6);
        let lambda = rng.random_range(0.1..10.0);
        let u = random_codes(&mut rng, n, c);
        let v = random_codes(&mut rng, n, c);
        let h = hess_bound_coeff(n, lambda, c);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                let theta = lambda / c as f64 * u.inner(i, &v, j) as f64;
                let a = 1.0 / (1.0 + (-theta).exp());
                diag -= (lambda / c as f64).powi(2) * a * (1.0 - a);
            }
            assert!(diag >= h);
        }
    }
}

proptest! {
    #[test]
    fn closed_form_beats_every_single_flip(
        grad in proptest::collection::vec(-50.0f64..50.0, 1..9),
        seed in any::<u64>(),
        count in 1usize..40,
        lambda in 0.1f64..10.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let anchor = random_signs(&mut rng, grad.len());
        let h = hess_bound_coeff(count, lambda, 4);
        let x = closed_form_update(&grad, h, &anchor);
        let best = surrogate_value(&x, &anchor, &grad, h, 0.0);
        for i in 0..x.len() {
            let mut y = x.clone();
            y[i] = -y[i];
            prop_assert!(surrogate_value(&y, &anchor, &grad, h, 0.0) <= best + 1e-9);
        }
    }
}
