//! Labeled datasets, min-max normalization, stratified folds and synthetic
//! generators.

mod csv_io;
mod folds;
mod synth;

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use csv_io::{load_csv, write_csv, CsvOptions, LabelColumn, LabelMap};
pub use folds::{read_fold_csv, stratified_folds, write_fold_csv, FoldPlan};
pub use synth::{checkerboard_label, gen_checkerboard, gen_two_gaussian_mixture};

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.sign())
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }

    pub fn from_sign(sign: i8) -> Option<Label> {
        match sign {
            1 => Some(Label::Positive),
            -1 => Some(Label::Negative),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Positive => f.write_str("+1"),
            Label::Negative => f.write_str("-1"),
        }
    }
}

/// Per-feature `(min, max)` pairs recorded by [`normalize_minmax`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormParams {
    pub ranges: Vec<(f64, f64)>,
}

impl NormParams {
    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    /// Scales `(x - min) / (max - min)`; constant features map to 0. Values
    /// outside the training range are not clipped.
    pub fn apply_value(&self, feature: usize, x: f64) -> f64 {
        let (lo, hi) = self.ranges[feature];
        let span = hi - lo;
        if span > 0.0 {
            (x - lo) / span
        } else {
            0.0
        }
    }

    pub fn apply_matrix(&self, samples: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if samples.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: samples.ncols(),
            });
        }
        let mut out = samples.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            for v in col.iter_mut() {
                *v = self.apply_value(j, *v);
            }
        }
        Ok(out)
    }
}

/// `n × d` samples with ±1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: DMatrix<f64>,
    pub labels: Vec<Label>,
    pub feature_names: Option<Vec<String>>,
    pub norm_params: Option<NormParams>,
}

impl Dataset {
    pub fn new(samples: DMatrix<f64>, labels: Vec<Label>) -> Result<Self> {
        if samples.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.nrows(),
                found: labels.len(),
            });
        }
        Ok(Dataset {
            samples,
            labels,
            feature_names: None,
            norm_params: None,
        })
    }

    /// Builds a dataset from row slices; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<Label>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        let samples = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Dataset::new(samples, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.ncols()
    }

    /// `(n1, n2)`: counts of +1 and -1 labels.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == Label::Positive).count();
        (pos, self.len() - pos)
    }

    pub fn class_indices(&self, label: Label) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == label).then_some(i))
            .collect()
    }

    /// Rejects datasets that cannot be trained on: an empty class.
    pub fn require_both_classes(&self) -> Result<()> {
        let (pos, neg) = self.class_counts();
        for (label, size) in [(Label::Positive, pos), (Label::Negative, neg)] {
            if size == 0 {
                return Err(Error::ClassTooSmall {
                    label: label.sign(),
                    size,
                    required: 1,
                });
            }
        }
        Ok(())
    }

    /// Rows `indices` in the given order; normalization metadata is kept.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let samples = self.samples.select_rows(indices.iter());
        Dataset {
            samples,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            norm_params: self.norm_params.clone(),
        }
    }

    /// Same samples with every label flipped.
    pub fn with_flipped_labels(&self) -> Dataset {
        let mut out = self.clone();
        for l in &mut out.labels {
            *l = l.flip();
        }
        out
    }
}

/// Scales every feature into `[0, 1]` using this dataset's own min and max,
/// recording the parameters on the result.
pub fn normalize_minmax(d: &Dataset) -> Dataset {
    let ranges = d
        .samples
        .column_iter()
        .map(|col| {
            col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
        })
        .map(|(lo, hi)| if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) })
        .collect();
    let params = NormParams { ranges };
    let samples = params
        .apply_matrix(&d.samples)
        .expect("parameters derived from the same matrix");
    Dataset {
        samples,
        labels: d.labels.clone(),
        feature_names: d.feature_names.clone(),
        norm_params: Some(params),
    }
}

/// Scales `d` with previously recorded (training) parameters.
pub fn apply_normalization(d: &Dataset, params: &NormParams) -> Result<Dataset> {
    if d.is_empty() && d.dim() == 0 {
        return Ok(Dataset {
            norm_params: Some(params.clone()),
            ..d.clone()
        });
    }
    let samples = params.apply_matrix(&d.samples)?;
    Ok(Dataset {
        samples,
        labels: d.labels.clone(),
        feature_names: d.feature_names.clone(),
        norm_params: Some(params.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn column(values: &[f64]) -> Dataset {
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        let labels = (0..values.len())
            .map(|i| if i % 2 == 0 { Label::Positive } else { Label::Negative })
            .collect();
        Dataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn minmax_endpoints() {
        let n = normalize_minmax(&column(&[2.0, 4.0, 6.0]));
        assert_eq!(n.samples.as_slice(), &[0.0, 0.5, 1.0]);
        assert_eq!(n.norm_params.unwrap().ranges, vec![(2.0, 6.0)]);
    }

    #[test]
    fn constant_feature_maps_to_zero() {
        let n = normalize_minmax(&column(&[5.0, 5.0, 5.0]));
        assert_eq!(n.samples.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn features_scale_independently() {
        let d = Dataset::from_rows(
            &[vec![0.0, -1.0], vec![10.0, 1.0]],
            vec![Label::Positive, Label::Negative],
        )
        .unwrap();
        let n = normalize_minmax(&d);
        assert_eq!(n.samples, DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]));
    }

    #[test]
    fn apply_extends_without_clipping() {
        let params = NormParams {
            ranges: vec![(2.0, 6.0)],
        };
        let d = column(&[12.0, 2.0]);
        let out = apply_normalization(&d, &params).unwrap();
        assert_eq!(out.samples.as_slice(), &[2.5, 0.0]);
    }

    #[test]
    fn apply_to_empty_and_mismatched() {
        let params = NormParams {
            ranges: vec![(0.0, 1.0)],
        };
        let empty = Dataset::new(DMatrix::zeros(0, 1), vec![]).unwrap();
        assert!(apply_normalization(&empty, &params).unwrap().is_empty());

        let two = Dataset::from_rows(&[vec![1.0, 2.0]], vec![Label::Positive]).unwrap();
        assert!(matches!(
            apply_normalization(&two, &params),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn class_bookkeeping() {
        let d = column(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(d.class_counts(), (3, 2));
        assert_eq!(d.class_indices(Label::Negative), vec![1, 3]);
        assert!(d.require_both_classes().is_ok());
        let one = d.subset(&[0, 2]);
        assert!(one.require_both_classes().is_err());
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent_and_bounded(
            rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..30)
        ) {
            let labels = vec![Label::Positive; rows.len()];
            let d = Dataset::from_rows(&rows, labels).unwrap();
            let once = normalize_minmax(&d);
            prop_assert!(once.samples.iter().all(|&v| (0.0..=1.0).contains(&v)));
            let twice = normalize_minmax(&once);
            for (a, b) in once.samples.iter().zip(twice.samples.iter()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
