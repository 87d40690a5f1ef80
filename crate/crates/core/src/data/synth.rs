//! Seeded synthetic cross-modal datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{FeatureMatrix, LabelMatrix};
use crate::error::{Error, Result};

/// Paired features for two modalities plus one label row per item.
#[derive(Clone, Debug)]
pub struct SynthData {
    pub x: FeatureMatrix,
    pub y: FeatureMatrix,
    pub labels: LabelMatrix,
}

/// Gaussian class blobs in both modalities.
///
/// Each class gets an independent standard-normal center in each modality;
/// a point is its class center plus `noise` times standard-normal noise.
/// Labels are one-hot. With `noise == 0` every point coincides with its class
/// center, so the retrieval problem is perfectly solvable.
pub fn synth_crossmodal(
    n: usize,
    dim_x: usize,
    dim_y: usize,
    classes: usize,
    noise: f64,
    seed: u64,
) -> Result<SynthData> {
    if classes < 2 {
        return Err(Error::Config(format!("need at least 2 classes, got {classes}")));
    }
    if n == 0 || dim_x == 0 || dim_y == 0 {
        return Err(Error::Config("synthetic data needs n, dim_x, dim_y >= 1".into()));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::Config(format!("noise must be finite and >= 0, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers_x = gaussian(&mut rng, classes * dim_x);
    let centers_y = gaussian(&mut rng, classes * dim_y);
    let class: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();

    let mut x = Vec::with_capacity(n * dim_x);
    let mut y = Vec::with_capacity(n * dim_y);
    for &c in &class {
        for j in 0..dim_x {
            x.push(centers_x[c * dim_x + j] + noise * normal(&mut rng));
        }
        for j in 0..dim_y {
            y.push(centers_y[c * dim_y + j] + noise * normal(&mut rng));
        }
    }
    Ok(SynthData {
        x: FeatureMatrix::from_row_major(n, dim_x, &x)?,
        y: FeatureMatrix::from_row_major(n, dim_y, &y)?,
        labels: LabelMatrix::one_hot(&class, classes)?,
    })
}

/// Two classes arranged as XOR over quadrants in both modalities.
///
/// The first two feature dimensions hold a point near one of `(+-1, +-1)`;
/// class 1 is the pair of quadrants where the signs agree. Each modality is
/// rotated by its own random angle, and any extra dimensions are pure noise.
/// No linear function of the features separates the classes.
pub fn synth_xor(n: usize, dim: usize, noise: f64, seed: u64) -> Result<SynthData> {
    if dim < 2 {
        return Err(Error::Config(format!("xor data needs dim >= 2, got {dim}")));
    }
    if n == 0 || !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::Config("xor data needs n >= 1 and finite noise >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angle_x: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let angle_y: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let class: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();

    let draw = |rng: &mut ChaCha8Rng, c: usize, angle: f64| -> Vec<f64> {
        let sx: f64 = if rng.random::<bool>() { 1.0 } else { -1.0 };
        // class 1 <=> signs agree
        let sy = if c == 1 { sx } else { -sx };
        let px = sx + noise * normal(rng);
        let py = sy + noise * normal(rng);
        let (s, co) = angle.sin_cos();
        let mut row = vec![co * px - s * py, s * px + co * py];
        row.extend((2..dim).map(|_| noise * normal(rng)));
        row
    };
    let mut x = Vec::with_capacity(n * dim);
    let mut y = Vec::with_capacity(n * dim);
    for &c in &class {
        x.extend(draw(&mut rng, c, angle_x));
        y.extend(draw(&mut rng, c, angle_y));
    }
    Ok(SynthData {
        x: FeatureMatrix::from_row_major(n, dim, &x)?,
        y: FeatureMatrix::from_row_major(n, dim, &y)?,
        labels: LabelMatrix::one_hot(&class, 2)?,
    })
}

/// Random one-hot labels only, for training-time benchmarks.
pub fn synth_labels(n: usize, classes: usize, seed: u64) -> Result<LabelMatrix> {
    if classes < 2 {
        return Err(Error::Config(format!("need at least 2 classes, got {classes}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let class: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
    LabelMatrix::one_hot(&class, classes)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn gaussian(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| normal(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_data() {
        let a = synth_crossmodal(50, 4, 3, 3, 0.5, 9).unwrap();
        let b = synth_crossmodal(50, 4, 3, 3, 0.5, 9).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        assert_eq!(a.labels, b.labels);
        let c = synth_crossmodal(50, 4, 3, 3, 0.5, 10).unwrap();
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn labels_are_one_hot() {
        let d = synth_crossmodal(100, 2, 2, 4, 1.0, 1).unwrap();
        for i in 0..100 {
            assert_eq!(d.labels.row(i).iter().map(|&v| v as usize).sum::<usize>(), 1);
        }
    }

    #[test]
    fn zero_noise_points_sit_on_class_centers() {
        let d = synth_crossmodal(40, 3, 2, 2, 0.0, 4).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                let same = d.labels.shares_label(i, &d.labels, j);
                assert_eq!(same, d.x.row(i) == d.x.row(j));
                assert_eq!(same, d.y.row(i) == d.y.row(j));
            }
        }
    }

    #[test]
    fn needs_two_classes() {
        assert!(synth_crossmodal(10, 2, 2, 1, 0.0, 0).is_err());
    }

    #[test]
    fn xor_classes_follow_quadrant_signs() {
        let d = synth_xor(200, 2, 0.0, 5).unwrap();
        // noiseless points sit on the rotated quadrant centers, radius sqrt(2)
        for i in 0..200 {
            let r = d.x.row(i);
            assert!((r[0] * r[0] + r[1] * r[1] - 2.0).abs() < 1e-12);
        }
        let ones = (0..200).filter(|&i| d.labels.get(i, 1)).count();
        assert!(ones > 60 && ones < 140);
    }
}
