mod common;

use common::*;
use dlfh::data::{center, synth_crossmodal, synth_xor, FeatureMatrix};
use dlfh::oos::{fit_kernel, fit_linear, HashFunction, LinearHashModel};
use dlfh::params::{Bandwidth, KernelParams};
use dlfh::CodeMatrix;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian_features(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
    let v: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    FeatureMatrix::from_row_major(n, d, &v).unwrap()
}

fn bit_agreement(a: &CodeMatrix, b: &CodeMatrix) -> f64 {
    let same: usize = (0..a.rows())
        .map(|i| (0..a.bits()).filter(|&k| a.get(i, k) == b.get(i, k)).count())
        .sum();
    same as f64 / (a.rows() * a.bits()) as f64
}

#[test]
fn ridge_weights_match_qr_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for gamma in [0.0, 0.3, 5.0] {
        let x = center(&gaussian_features(&mut rng, 50, 8));
        let codes = random_codes(&mut rng, 50, 6);
        let model = fit_linear(&x, &codes, gamma).unwrap();
        let oracle = ridge_by_qr(x.matrix(), &to_real(&codes), gamma);
        let rel = (model.weights() - &oracle).amax() / oracle.amax();
        assert!(rel < 1e-8, "gamma {gamma}: relative difference {rel}");
    }
}

#[test]
fn ridge_satisfies_normal_equations_certificate() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let x = center(&gaussian_features(&mut rng, 200, 12));
    let codes = random_codes(&mut rng, 200, 16);
    let gamma = 1.0;
    let w = fit_linear(&x, &codes, gamma).unwrap();
    let xm = x.matrix();
    let lhs = (xm.tr_mul(xm) + DMatrix::identity(12, 12) * gamma) * w.weights();
    let rhs = xm.tr_mul(&to_real(&codes));
    assert!((lhs - &rhs).amax() <= 1e-6 * rhs.amax());
}

#[test]
fn realizable_codes_are_reproduced() {
    // features are a noisy linear image of the codes, so a linear map recovers them
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (n, c, d) = (400, 16, 24);
    let codes = random_codes(&mut rng, n, c);
    let mix = DMatrix::from_fn(c, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut x = to_real(&codes) * mix;
    x.iter_mut().for_each(|v| *v += 0.05 * rng.sample::<f64, _>(StandardNormal));
    let flat: Vec<f64> = (0..n).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| x[(i, j)]).collect();
    let x = center(&FeatureMatrix::from_row_major(n, d, &flat).unwrap());
    let model = fit_linear(&x, &codes, 1e-3).unwrap();
    let agree = bit_agreement(&model.encode(&x).unwrap(), &codes);
    assert!(agree >= 0.99, "agreement {agree}");
}

/// One code per class, with every bit taking both values across classes.
fn class_codes(rng: &mut ChaCha8Rng, classes: usize, bits: usize) -> Vec<Vec<i8>> {
    loop {
        let codes: Vec<Vec<i8>> = (0..classes).map(|_| random_signs(rng, bits)).collect();
        if (0..bits).all(|k| codes.iter().any(|r| r[k] != codes[0][k])) {
            return codes;
        }
    }
}

#[test]
fn separated_training_points_keep_their_codes() {
    let d = synth_crossmodal(300, 20, 20, 4, 0.2, 5).unwrap();
    let x = center(&d.x);
    let classes: Vec<usize> = (0..300).map(|i| (0..4).find(|&l| d.labels.get(i, l)).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let class_codes = class_codes(&mut rng, 4, 12);
    let rows: Vec<Vec<i8>> = classes.iter().map(|&c| class_codes[c].clone()).collect();
    let codes = CodeMatrix::from_rows(&rows).unwrap();
    let model = fit_linear(&x, &codes, 1.0).unwrap();
    let hashed = model.encode(&x).unwrap();
    let exact = (0..300).filter(|&i| hashed.row(i) == codes.row(i)).count();
    assert!(exact as f64 >= 0.9 * 300.0, "{exact} of 300 rows reproduced");
}

#[test]
fn null_space_directions_do_not_change_codes() {
    // W has a zero third row, so the third coordinate is invisible
    let w = DMatrix::from_row_slice(3, 2, &[1.0, -0.5, 0.25, 2.0, 0.0, 0.0]);
    let model = LinearHashModel::new(w, vec![0.5, -1.0, 2.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let q: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut shifted = q.clone();
        shifted[2] += rng.random_range(-100.0..100.0);
        assert_eq!(model.hash(&q).unwrap(), model.hash(&shifted).unwrap());
    }
}

fn xor_bit(n: usize, seed: u64) -> (FeatureMatrix, CodeMatrix) {
    let d = synth_xor(n, 2, 0.15, seed).unwrap();
    let x = center(&d.x);
    let signs: Vec<i8> = (0..n).map(|i| if d.labels.get(i, 1) { 1 } else { -1 }).collect();
    (x, CodeMatrix::from_signs(n, 1, &signs).unwrap())
}

#[test]
fn kernel_separates_xor_where_linear_cannot() {
    let (x, codes) = xor_bit(400, 8);
    let linear = fit_linear(&x, &codes, 1.0).unwrap();
    let linear_acc = bit_agreement(&linear.encode(&x).unwrap(), &codes);
    let params = KernelParams { anchors: 100, ..Default::default() };
    let kernel = fit_kernel(&x, &codes, &params, 1).unwrap();
    let kernel_acc = bit_agreement(&kernel.encode(&x).unwrap(), &codes);
    assert!(kernel_acc >= 0.95, "kernel accuracy {kernel_acc}");
    assert!(linear_acc <= 0.75, "linear accuracy {linear_acc}");
}

#[test]
fn kernel_reproduces_codes_on_separable_data() {
    let d = synth_crossmodal(300, 10, 10, 3, 0.3, 9).unwrap();
    let x = center(&d.x);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let class_codes = class_codes(&mut rng, 3, 8);
    let rows: Vec<Vec<i8>> = (0..300)
        .map(|i| class_codes[(0..3).find(|&l| d.labels.get(i, l)).unwrap()].clone())
        .collect();
    let codes = CodeMatrix::from_rows(&rows).unwrap();
    let params = KernelParams { anchors: 60, ..Default::default() };
    let model = fit_kernel(&x, &codes, &params, 2).unwrap();
    let agree = bit_agreement(&model.encode(&x).unwrap(), &codes);
    assert!(agree >= 0.95, "agreement {agree}");
    assert!(model.weights().iter().all(|w| w.is_finite()));
    for i in 0..20 {
        let phi = model.kernel_features(&x.row(i));
        assert!(phi.iter().all(|&p| p > 0.0 && p <= 1.0));
    }
}

#[test]
fn kernel_anchor_count_is_clamped_and_bandwidth_fixed_is_kept() {
    let (x, codes) = xor_bit(30, 3);
    let params = KernelParams { anchors: 500, bandwidth: Bandwidth::Fixed(0.7), ..Default::default() };
    let model = fit_kernel(&x, &codes, &params, 0).unwrap();
    assert_eq!(model.anchors().nrows(), 30);
    assert_eq!(model.bandwidth(), 0.7);
    let bad = KernelParams { bandwidth: Bandwidth::Fixed(0.0), ..params };
    assert!(fit_kernel(&x, &codes, &bad, 0).is_err());
}
