use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Dataset, Label};

/// +1 iff the checkerboard cell containing `(x, y)` has even parity.
pub fn checkerboard_label(x: f64, y: f64, cells: usize) -> Label {
    let cell = |v: f64| ((v * cells as f64).floor() as i64).clamp(0, cells as i64 - 1);
    if (cell(x) + cell(y)) % 2 == 0 {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// `n` uniform points in the unit square labeled by a `cells × cells` board.
pub fn gen_checkerboard(n: usize, cells: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.random();
        let y: f64 = rng.random();
        values.extend([x, y]);
        labels.push(checkerboard_label(x, y, cells.max(1)));
    }
    let mut ds = Dataset::new(DMatrix::from_row_slice(n, 2, &values), labels)
        .expect("one label per row");
    ds.feature_names = Some(vec!["x".into(), "y".into()]);
    ds
}

fn gaussian_block(rng: &mut ChaCha8Rng, n: usize, dims: usize, separation: f64) -> Dataset {
    let offset = 0.5 * separation / (dims as f64).sqrt();
    let mut labels: Vec<Label> = (0..n)
        .map(|i| if i < n.div_ceil(2) { Label::Positive } else { Label::Negative })
        .collect();
    labels.shuffle(rng);
    let mut values = Vec::with_capacity(n * dims);
    for label in &labels {
        let shift = label.as_f64() * offset;
        for _ in 0..dims {
            let z: f64 = rng.sample(StandardNormal);
            values.push(z + shift);
        }
    }
    Dataset::new(DMatrix::from_row_slice(n, dims, &values), labels).expect("one label per row")
}

/// Two identity-covariance Gaussians with means `±(separation/2)·1/√dims`,
/// classes balanced and shuffled. Returns independent `(train, test)` draws.
pub fn gen_two_gaussian_mixture(
    n_train: usize,
    n_test: usize,
    dims: usize,
    separation: f64,
    seed: u64,
) -> (Dataset, Dataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = gaussian_block(&mut rng, n_train, dims, separation);
    let test = gaussian_block(&mut rng, n_test, dims, separation);
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkerboard_parity() {
        assert_eq!(checkerboard_label(0.1, 0.1, 4), Label::Positive);
        assert_eq!(checkerboard_label(0.1, 0.3, 4), Label::Negative);
        assert_eq!(checkerboard_label(1.0, 1.0, 4), Label::Positive);
    }

    #[test]
    fn checkerboard_shape_and_labels() {
        let d = gen_checkerboard(1000, 4, 9);
        assert_eq!((d.len(), d.dim()), (1000, 2));
        for i in 0..d.len() {
            let (x, y) = (d.samples[(i, 0)], d.samples[(i, 1)]);
            assert!((0.0..1.0).contains(&x) && (0.0..1.0).contains(&y));
            assert_eq!(d.labels[i], checkerboard_label(x, y, 4));
        }
        assert_eq!(d, gen_checkerboard(1000, 4, 9));
    }

    #[test]
    fn mixture_shapes_and_determinism() {
        let (train, test) = gen_two_gaussian_mixture(10_000, 1_000, 32, 2.0, 5);
        assert_eq!((train.len(), train.dim()), (10_000, 32));
        assert_eq!((test.len(), test.dim()), (1_000, 32));
        assert_eq!(train.class_counts(), (5_000, 5_000));
        let (again, _) = gen_two_gaussian_mixture(10_000, 1_000, 32, 2.0, 5);
        assert_eq!(train, again);
        assert_ne!(train.samples.row(0), test.samples.row(0));
    }

    #[test]
    fn mixture_means_are_separated() {
        let (train, _) = gen_two_gaussian_mixture(4000, 10, 4, 4.0, 1);
        let mean_of = |label| {
            let idx = train.class_indices(label);
            idx.iter().map(|&i| train.samples.row(i).sum()).sum::<f64>() / idx.len() as f64
        };
        // sum of coordinates of the mean is ±(sep/2)·√dims = ±4
        assert!((mean_of(Label::Positive) - 4.0).abs() < 0.2);
        assert!((mean_of(Label::Negative) + 4.0).abs() < 0.2);
    }
}
