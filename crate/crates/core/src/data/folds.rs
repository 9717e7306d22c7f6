use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Label};
use crate::error::{Error, Result};

/// Assignment of every row to one of `fold_count` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub fold_count: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// `(train, test)` row indices for `fold`, each ascending.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.assignments.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.fold_count];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified random folds. Each class is shuffled with the seeded RNG and
/// dealt round-robin; the second class continues where the first stopped so
/// that total fold sizes also differ by at most one.
pub fn stratified_folds(d: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("fold count {k} must be at least 2")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; d.len()];
    let mut next = 0;
    for label in [Label::Positive, Label::Negative] {
        let mut idx = d.class_indices(label);
        if idx.len() < k {
            return Err(Error::ClassTooSmall {
                label: label.sign(),
                size: idx.len(),
                required: k,
            });
        }
        idx.shuffle(&mut rng);
        for i in idx {
            assignments[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldPlan {
        fold_count: k,
        assignments,
        seed,
    })
}

/// Two-column `row_index,fold_id` CSV with header.
pub fn write_fold_csv(plan: &FoldPlan, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io)?);
    writeln!(out, "row_index,fold_id").map_err(io)?;
    for (i, f) in plan.assignments.iter().enumerate() {
        writeln!(out, "{i},{f}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_fold_csv(path: impl AsRef<Path>, seed: u64) -> Result<FoldPlan> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Csv {
            path: path.to_path_buf(),
            message: format!("line {}: expected row_index,fold_id", lineno + 1),
        };
        let (a, b) = line.split_once(',').ok_or_else(bad)?;
        let row: usize = a.trim().parse().map_err(|_| bad())?;
        let fold: usize = b.trim().parse().map_err(|_| bad())?;
        pairs.push((row, fold));
    }
    pairs.sort_unstable();
    let fold_count = pairs.iter().map(|p| p.1 + 1).max().unwrap_or(0);
    Ok(FoldPlan {
        fold_count,
        assignments: pairs.into_iter().map(|p| p.1).collect(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn balanced(n_pos: usize, n_neg: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n_pos + n_neg).map(|i| vec![i as f64]).collect();
        let labels = (0..n_pos + n_neg)
            .map(|i| if i < n_pos { Label::Positive } else { Label::Negative })
            .collect();
        Dataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn exact_division_gives_one_of_each() {
        let d = balanced(5, 5);
        let plan = stratified_folds(&d, 5, 7).unwrap();
        for f in 0..5 {
            let (_, test) = plan.split(f);
            assert_eq!(test.len(), 2);
            let pos = test.iter().filter(|&&i| d.labels[i] == Label::Positive).count();
            assert_eq!(pos, 1);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let d = balanced(20, 13);
        assert_eq!(stratified_folds(&d, 5, 3).unwrap(), stratified_folds(&d, 5, 3).unwrap());
        assert_ne!(
            stratified_folds(&d, 5, 3).unwrap().assignments,
            stratified_folds(&d, 5, 4).unwrap().assignments
        );
    }

    #[test]
    fn eleven_samples_pigeonhole() {
        let plan = stratified_folds(&balanced(6, 5), 5, 1).unwrap();
        let sizes = plan.fold_sizes();
        assert!(sizes.iter().all(|&s| s == 2 || s == 3), "{sizes:?}");
    }

    #[test]
    fn small_class_is_rejected() {
        assert!(matches!(
            stratified_folds(&balanced(10, 3), 5, 0),
            Err(Error::ClassTooSmall { label: -1, size: 3, required: 5 })
        ));
        assert!(stratified_folds(&balanced(10, 10), 1, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let plan = stratified_folds(&balanced(8, 9), 4, 11).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_fold_csv(&plan, f.path()).unwrap();
        assert_eq!(read_fold_csv(f.path(), 11).unwrap(), plan);
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(n_pos in 5usize..40, n_neg in 5usize..40, k in 2usize..6, seed: u64) {
            let d = balanced(n_pos, n_neg);
            let plan = stratified_folds(&d, k, seed).unwrap();
            let mut seen = vec![0u32; d.len()];
            for f in 0..k {
                let (train, test) = plan.split(f);
                prop_assert_eq!(train.len() + test.len(), d.len());
                prop_assert!(!test.is_empty());
                for &i in &test {
                    seen[i] += 1;
                }
                for (label, total) in [(Label::Positive, n_pos), (Label::Negative, n_neg)] {
                    let count = test.iter().filter(|&&i| d.labels[i] == label).count() as f64;
                    let ideal = total as f64 / k as f64;
                    prop_assert!((count - ideal).abs() < 1.0 + 1e-12);
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            let sizes = plan.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
