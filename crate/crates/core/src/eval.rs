//! Cross-validation, grid search, Friedman test, win/draw/loss records,
//! speedups and the result tables.

use std::cmp::Ordering;
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::data::{normalize_minmax, Dataset, FoldPlan, Label};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernel::{KernelKind, KernelSpec};
use crate::tsvm::{predict, train_twin, HyperParams, TwinConfig, TwinModel, Weighting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassifierKind {
    /// Uses `c1`, `c2` and the kernel.
    Tsvm,
    /// Uses `c1` as its single penalty, `k` and the kernel.
    Wltsvm,
    RknnLinear,
    RknnKernel,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Tsvm => "tsvm",
            ClassifierKind::Wltsvm => "wltsvm",
            ClassifierKind::RknnLinear => "rknn-linear",
            ClassifierKind::RknnKernel => "rknn",
        }
    }

    fn uses_k(self) -> bool {
        self != ClassifierKind::Tsvm
    }
}

/// A classifier family together with one parameter setting.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub params: HyperParams,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind, params: HyperParams) -> Self {
        ClassifierSpec { kind, params }
    }

    pub fn config(&self) -> TwinConfig {
        let hp = &self.params;
        let base = match self.kind {
            ClassifierKind::Tsvm => TwinConfig::tsvm(hp.c1, hp.c2, hp.kernel),
            ClassifierKind::Wltsvm => {
                let mut cfg = TwinConfig::wltsvm(hp.c1, hp.k, hp.kernel);
                if let Weighting::Graph { algorithm, .. } = &mut cfg.weighting {
                    *algorithm = hp.knn_algorithm;
                }
                cfg
            }
            ClassifierKind::RknnLinear => return TwinConfig::rknn_linear(hp),
            ClassifierKind::RknnKernel => return TwinConfig::rknn_kernel(hp),
        };
        TwinConfig {
            rect_ratio: hp.rect_ratio,
            seed: hp.seed,
            execution: hp.execution,
            solver: hp.solver.clone(),
            ..base
        }
    }

    pub fn train(&self, data: &Dataset) -> Result<TwinModel> {
        if matches!(self.kind, ClassifierKind::RknnLinear | ClassifierKind::RknnKernel) {
            self.params.validate()?;
        }
        train_twin(data, &self.config())
    }

    fn gaussian(&self) -> bool {
        self.kind != ClassifierKind::RknnLinear && self.params.kernel.kind == KernelKind::Gaussian
    }
}

impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hp = &self.params;
        match self.kind {
            ClassifierKind::Tsvm => write!(f, "c1={} c2={}", format_sig(hp.c1), format_sig(hp.c2))?,
            ClassifierKind::Wltsvm => write!(f, "c={} k={}", format_sig(hp.c1), hp.k)?,
            ClassifierKind::RknnLinear | ClassifierKind::RknnKernel => write!(
                f,
                "c1={} c2={} c3={} k={} knn={}",
                format_sig(hp.c1),
                format_sig(hp.c2),
                format_sig(hp.c3),
                hp.k,
                hp.knn_algorithm.name()
            )?,
        }
        if self.gaussian() {
            write!(f, " sigma={}", format_sig(hp.kernel.sigma))?;
        }
        Ok(())
    }
}

/// Rounds to 6 significant digits and prints the shortest representation.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() || x == 0.0 {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// Percentage of matching labels.
pub fn accuracy(predicted: &[Label], truth: &[Label]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    100.0 * hits as f64 / truth.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldOutcome {
    /// Percent.
    pub accuracy: f64,
    pub train_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub mean_accuracy: f64,
    /// Sample standard deviation over folds.
    pub std_accuracy: f64,
    pub mean_train_time: f64,
    pub per_fold: Vec<FoldOutcome>,
    pub best_params: ClassifierSpec,
}

impl CvResult {
    pub fn from_folds(per_fold: Vec<FoldOutcome>, params: ClassifierSpec) -> Self {
        let n = per_fold.len() as f64;
        let mean = per_fold.iter().map(|f| f.accuracy).sum::<f64>() / n;
        let var = if per_fold.len() > 1 {
            per_fold.iter().map(|f| (f.accuracy - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        CvResult {
            mean_accuracy: mean,
            std_accuracy: var.sqrt(),
            mean_train_time: per_fold.iter().map(|f| f.train_seconds).sum::<f64>() / n,
            per_fold,
            best_params: params,
        }
    }
}

/// Trains on a copy of `train` scaled into `[0, 1]` and reports the wall-clock
/// training time.
pub fn timed_train(spec: &ClassifierSpec, train: &Dataset) -> Result<(TwinModel, f64)> {
    let scaled = normalize_minmax(train);
    let start = Instant::now();
    let model = spec.train(&scaled)?;
    Ok((model, start.elapsed().as_secs_f64()))
}

/// Per fold: normalize on the training part, train, predict the held-out
/// part. Folds run one after another so the timings are comparable.
pub fn cross_validate(spec: &ClassifierSpec, data: &Dataset, folds: &FoldPlan) -> Result<CvResult> {
    if folds.assignments.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            found: folds.assignments.len(),
        });
    }
    let mut per_fold = Vec::with_capacity(folds.fold_count);
    for fold in 0..folds.fold_count {
        let wrap = |e| Error::Fold {
            fold,
            source: Box::new(e),
        };
        let (train_idx, test_idx) = folds.split(fold);
        if test_idx.is_empty() {
            return Err(wrap(Error::InvalidParameter("empty test fold".into())));
        }
        let train = data.subset(&train_idx);
        let test = data.subset(&test_idx);
        let (model, seconds) = timed_train(spec, &train).map_err(wrap)?;
        let predicted = predict(&model, &test.samples).map_err(wrap)?;
        per_fold.push(FoldOutcome {
            accuracy: accuracy(&predicted, &test.labels),
            train_seconds: seconds,
        });
    }
    Ok(CvResult::from_folds(per_fold, spec.clone()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub penalty_range: Vec<f64>,
    pub sigma_range: Vec<f64>,
    pub k_range: Vec<usize>,
    /// Use one value for `c2` and `c3`.
    pub tie_c2_c3: bool,
}

fn powers_of_two(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|i| 2f64.powi(i)).collect()
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            penalty_range: powers_of_two(-8, 2),
            sigma_range: powers_of_two(-10, 2),
            k_range: (2..=15).collect(),
            tie_c2_c3: true,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.penalty_range.is_empty() || self.sigma_range.is_empty() || self.k_range.is_empty() {
            return Err(Error::InvalidParameter("grid ranges must be non-empty".into()));
        }
        Ok(())
    }
}

/// One grid point with its position in each range, used for tie-breaking.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub spec: ClassifierSpec,
    /// `(c1, sigma, k, c2, c3)` positions.
    pub key: [usize; 5],
}

/// Every parameter combination relevant to `base.kind`, in a fixed order.
pub fn grid_points(base: &ClassifierSpec, grid: &GridSpec) -> Vec<GridPoint> {
    let p = grid.penalty_range.len();
    let single = [0usize];
    let uses_sigma = base.gaussian();
    let sigmas: Vec<usize> = if uses_sigma { (0..grid.sigma_range.len()).collect() } else { single.to_vec() };
    let ks: Vec<usize> = if base.kind.uses_k() { (0..grid.k_range.len()).collect() } else { single.to_vec() };
    let (c2s, c3_free): (Vec<usize>, bool) = match base.kind {
        ClassifierKind::Wltsvm => (single.to_vec(), false),
        ClassifierKind::Tsvm => ((0..p).collect(), false),
        _ => ((0..p).collect(), !grid.tie_c2_c3),
    };
    let c3s: Vec<usize> = if c3_free { (0..p).collect() } else { single.to_vec() };

    let mut out = Vec::new();
    for c1 in 0..p {
        for &s in &sigmas {
            for &k in &ks {
                for &c2 in &c2s {
                    for &c3 in &c3s {
                        let mut hp = base.params.clone();
                        hp.c1 = grid.penalty_range[c1];
                        if base.kind != ClassifierKind::Wltsvm {
                            hp.c2 = grid.penalty_range[c2];
                            hp.c3 = if c3_free { grid.penalty_range[c3] } else { hp.c2 };
                        }
                        if uses_sigma {
                            hp.kernel.sigma = grid.sigma_range[s];
                        }
                        if base.kind.uses_k() {
                            hp.k = grid.k_range[k];
                        }
                        out.push(GridPoint {
                            spec: ClassifierSpec::new(base.kind, hp),
                            key: [c1, s, k, c2, c3],
                        });
                    }
                }
            }
        }
    }
    out
}

/// Number of combinations [`grid_points`] enumerates.
pub fn grid_size(base: &ClassifierSpec, grid: &GridSpec) -> usize {
    let p = grid.penalty_range.len();
    let s = if base.gaussian() { grid.sigma_range.len() } else { 1 };
    let k = if base.kind.uses_k() { grid.k_range.len() } else { 1 };
    let c23 = match base.kind {
        ClassifierKind::Wltsvm => 1,
        ClassifierKind::Tsvm => p,
        _ if grid.tie_c2_c3 => p,
        _ => p * p,
    };
    p * s * k * c23
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub best: CvResult,
    /// Every evaluated point with its mean accuracy, in enumeration order.
    pub points: Vec<(GridPoint, f64)>,
}

/// Higher accuracy first; on ties the lexicographically smaller key.
fn better(a: (&[usize; 5], f64), b: (&[usize; 5], f64)) -> Ordering {
    a.1.total_cmp(&b.1).then_with(|| b.0.cmp(a.0))
}

/// Exhaustive search; grid points are evaluated concurrently under
/// `exec` while each training run uses the execution mode in `base`.
pub fn grid_search_report(
    data: &Dataset,
    grid: &GridSpec,
    folds: &FoldPlan,
    base: &ClassifierSpec,
    exec: Execution,
) -> Result<GridReport> {
    grid.validate()?;
    let points = grid_points(base, grid);
    let results = exec.map(points.len(), |i| cross_validate(&points[i].spec, data, folds));
    let mut best: Option<(usize, CvResult)> = None;
    let mut scored = Vec::with_capacity(points.len());
    for (i, r) in results.into_iter().enumerate() {
        let r = r?;
        scored.push((points[i].clone(), r.mean_accuracy));
        let replace = match &best {
            None => true,
            Some((j, b)) => better((&points[i].key, r.mean_accuracy), (&points[*j].key, b.mean_accuracy)) == Ordering::Greater,
        };
        if replace {
            best = Some((i, r));
        }
    }
    let (_, best) = best.expect("grid is non-empty");
    Ok(GridReport { best, points: scored })
}

pub fn grid_search(
    data: &Dataset,
    grid: &GridSpec,
    folds: &FoldPlan,
    base: &ClassifierSpec,
    exec: Execution,
) -> Result<CvResult> {
    Ok(grid_search_report(data, grid, folds, base, exec)?.best)
}

/// Friedman statistics from an `N × k` rank matrix (rows are datasets):
/// `χ²_F = 12N / (k(k+1)) · (Σ R_j² − k(k+1)²/4)` with `R_j` the column mean
/// ranks, and `F_F = (N−1)χ²_F / (N(k−1) − χ²_F)`.
pub fn friedman_test(ranks: &[Vec<f64>]) -> Result<(f64, f64)> {
    let n = ranks.len();
    let k = ranks.first().map_or(0, Vec::len);
    if n < 2 || k < 2 {
        return Err(Error::InvalidParameter(format!(
            "friedman test needs at least 2 datasets and 2 algorithms, got {n}x{k}"
        )));
    }
    if ranks.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidParameter("rank rows differ in length".into()));
    }
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = (0..k)
        .map(|j| {
            let mean = ranks.iter().map(|r| r[j]).sum::<f64>() / nf;
            mean * mean
        })
        .sum();
    let chi_sq = 12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0);
    let denom = nf * (kf - 1.0) - chi_sq;
    let f_stat = if denom > 0.0 { (nf - 1.0) * chi_sq / denom } else { f64::INFINITY };
    Ok((chi_sq, f_stat))
}

/// Ranks within each row (1 = highest score), ties sharing the average rank.
pub fn average_ranks(scores: &[Vec<f64>]) -> Vec<Vec<f64>> {
    scores
        .iter()
        .map(|row| {
            let mut order: Vec<usize> = (0..row.len()).collect();
            order.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
            let mut ranks = vec![0.0; row.len()];
            let mut i = 0;
            while i < order.len() {
                let mut j = i;
                while j + 1 < order.len() && row[order[j + 1]] == row[order[i]] {
                    j += 1;
                }
                let avg = (i + j) as f64 / 2.0 + 1.0;
                for &o in &order[i..=j] {
                    ranks[o] = avg;
                }
                i = j + 1;
            }
            ranks
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WinDrawLoss {
    pub win: usize,
    pub draw: usize,
    pub loss: usize,
}

impl fmt::Display for WinDrawLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.win, self.draw, self.loss)
    }
}

/// Per-dataset comparison of `ours` against `theirs`; accuracies equal after
/// rounding to two decimals count as draws. `NaN` marks a missing cell.
pub fn win_draw_loss(ours: &[f64], theirs: &[f64]) -> Result<WinDrawLoss> {
    if ours.len() != theirs.len() {
        return Err(Error::DimensionMismatch {
            expected: ours.len(),
            found: theirs.len(),
        });
    }
    let mut out = WinDrawLoss::default();
    for (i, (&a, &b)) in ours.iter().zip(theirs).enumerate() {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("missing accuracy for dataset {i}")));
        }
        match (a * 100.0).round().total_cmp(&(b * 100.0).round()) {
            Ordering::Greater => out.win += 1,
            Ordering::Equal => out.draw += 1,
            Ordering::Less => out.loss += 1,
        }
    }
    Ok(out)
}

pub fn timed_speedup(time_fsa: f64, time_ldmdba: f64) -> Result<f64> {
    if !(time_fsa > 0.0 && time_ldmdba > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "training times must be positive, got {time_fsa} and {time_ldmdba}"
        )));
    }
    Ok(time_fsa / time_ldmdba)
}

/// One line of an accuracy table.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub dataset: String,
    pub algorithm: String,
    pub result: CvResult,
}

pub fn write_accuracy_table(rows: &[AccuracyRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io)?);
    writeln!(out, "dataset,algorithm,mean_accuracy,std_accuracy,mean_train_time,params").map_err(io)?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.dataset,
            r.algorithm,
            format_sig(r.result.mean_accuracy),
            format_sig(r.result.std_accuracy),
            format_sig(r.result.mean_train_time),
            r.result.best_params
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

/// One line of a scaling table: training time per algorithm and the
/// FSA/LDMDBA speedup.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub dataset: String,
    pub samples: usize,
    /// `(algorithm, seconds)` pairs in column order.
    pub times: Vec<(String, f64)>,
    pub speedup: Option<f64>,
}

pub fn write_timing_table(rows: &[TimingRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io)?);
    writeln!(out, "dataset,samples,algorithm,train_seconds,speedup").map_err(io)?;
    for r in rows {
        let speedup = r.speedup.map(format_sig).unwrap_or_default();
        for (algo, t) in &r.times {
            writeln!(out, "{},{},{},{},{}", r.dataset, r.samples, algo, format_sig(*t), speedup).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

/// Settings of the scaling experiments: all penalties 1, Gaussian
/// coefficient `γ = 2⁻¹⁵`, `k = 5`.
pub fn scaling_params(knn: crate::neighbors::KnnAlgorithm) -> HyperParams {
    HyperParams {
        c1: 1.0,
        c2: 1.0,
        c3: 1.0,
        k: 5,
        kernel: KernelSpec::gaussian_gamma(2f64.powi(-15)),
        knn_algorithm: knn,
        execution: Execution::Sequential,
        ..Default::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::stratified_folds;
    use proptest::prelude::*;

    // accuracy columns for eleven datasets
    const LDMDBA: [f64; 11] = [87.97, 85.56, 73.91, 80.32, 98.59, 88.39, 93.17, 76.79, 78.91, 91.00, 97.01];
    const TSVM: [f64; 11] = [87.10, 84.81, 74.78, 79.27, 98.24, 85.81, 90.89, 75.46, 78.65, 88.00, 96.55];
    const TBSVM: [f64; 11] = [87.39, 85.93, 73.62, 78.81, 98.24, 87.10, 92.02, 75.82, 78.26, 89.00, 97.01];
    const WLTSVM: [f64; 11] = [86.52, 83.70, 73.91, 78.82, 97.54, 85.16, 92.60, 76.11, 77.22, 88.00, 96.55];
    const FSA: [f64; 11] = [87.54, 85.93, 73.91, 80.29, 98.59, 87.74, 93.73, 76.77, 78.78, 90.00, 97.01];

    fn brute_friedman(ranks: &[Vec<f64>]) -> f64 {
        // χ² = 12/(N k (k+1)) Σ_j S_j² − 3N(k+1), S_j the rank sums
        let n = ranks.len() as f64;
        let k = ranks[0].len();
        let mut total = 0.0;
        for j in 0..k {
            let s: f64 = ranks.iter().map(|r| r[j]).sum();
            total += s * s;
        }
        let kf = k as f64;
        12.0 / (n * kf * (kf + 1.0)) * total - 3.0 * n * (kf + 1.0)
    }

    #[test]
    fn wdl_against_baselines() {
        let wdl = |b: &[f64]| win_draw_loss(&LDMDBA, b).unwrap().to_string();
        assert_eq!(wdl(&TSVM), "10/0/1");
        assert_eq!(wdl(&TBSVM), "9/1/1");
        assert_eq!(wdl(&WLTSVM), "10/1/0");
        assert_eq!(wdl(&FSA), "6/3/2");
        assert_eq!(win_draw_loss(&TSVM, &TSVM).unwrap().draw, 11);
        assert!(win_draw_loss(&TSVM, &FSA[..3]).is_err());
        assert!(win_draw_loss(&[f64::NAN], &[1.0]).is_err());
        // 2-decimal rounding
        assert_eq!(win_draw_loss(&[90.004], &[90.0]).unwrap().draw, 1);
    }

    #[test]
    fn ranks_from_the_accuracy_columns() {
        let rows: Vec<Vec<f64>> = (0..11).map(|i| vec![TSVM[i], TBSVM[i], WLTSVM[i], FSA[i], LDMDBA[i]]).collect();
        let ranks = average_ranks(&rows);
        let sums: Vec<f64> = (0..5).map(|j| ranks.iter().map(|r| r[j]).sum()).collect();
        assert_eq!(sums, vec![41.5, 38.0, 47.0, 21.0, 17.5]);
        let (chi, f) = friedman_test(&ranks).unwrap();
        assert!((chi - 24.636).abs() < 0.01, "{chi}");
        assert!((f - 12.723).abs() < 0.01, "{f}");
    }

    #[test]
    fn friedman_edge_cases() {
        let same = vec![vec![2.0, 2.0, 2.0]; 4];
        assert_eq!(friedman_test(&same).unwrap().0, 0.0);
        // two algorithms, always (1, 2): χ² = N
        let fixed = vec![vec![1.0, 2.0]; 7];
        let (chi, _) = friedman_test(&fixed).unwrap();
        assert!((chi - 7.0).abs() < 1e-12);
        assert!((chi - brute_friedman(&fixed)).abs() < 1e-12);
        assert!(friedman_test(&[vec![1.0, 2.0]]).is_err());
        assert!(friedman_test(&[vec![1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn speedups() {
        assert_eq!(timed_speedup(2.0, 2.0).unwrap(), 1.0);
        assert!((timed_speedup(52.867, 16.25).unwrap() - 3.25).abs() < 0.005);
        assert!((timed_speedup(963.341, 67.485).unwrap() - 14.27).abs() < 0.005);
        assert!(timed_speedup(0.0, 1.0).is_err());
        assert!(timed_speedup(1.0, -1.0).is_err());
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.1234567), "0.123457");
        assert_eq!(format_sig(98.59), "98.59");
        assert_eq!(format_sig(1234567.0), "1234570");
        assert_eq!(format_sig(0.0), "0");
    }

    #[test]
    fn default_grid_size() {
        let base = ClassifierSpec::new(ClassifierKind::RknnKernel, HyperParams::default());
        let grid = GridSpec::default();
        assert_eq!(grid.penalty_range.len(), 11);
        assert_eq!(grid.sigma_range.len(), 13);
        assert_eq!(grid.k_range.len(), 14);
        assert_eq!(grid_size(&base, &grid), 11 * 11 * 13 * 14);
        assert_eq!(grid_points(&base, &grid).len(), 22022);
        let wl = ClassifierSpec::new(ClassifierKind::Wltsvm, HyperParams::default());
        assert_eq!(grid_points(&wl, &grid).len(), grid_size(&wl, &grid));
        let untied = GridSpec {
            tie_c2_c3: false,
            ..GridSpec::default()
        };
        let lin = ClassifierSpec::new(ClassifierKind::RknnLinear, HyperParams::default());
        assert_eq!(grid_points(&lin, &untied).len(), 11 * 11 * 11 * 14);
        assert_eq!(grid_size(&lin, &untied), 11 * 11 * 11 * 14);
    }

    fn clusters(n: usize, gap: f64) -> Dataset {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                vec![s * gap + rng.random::<f64>(), rng.random::<f64>()]
            })
            .collect();
        let labels = (0..n).map(|i| if i % 2 == 0 { Label::Positive } else { Label::Negative }).collect();
        Dataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn separable_clusters_cross_validate_perfectly() {
        let data = clusters(60, 2.0);
        let folds = stratified_folds(&data, 5, 1).unwrap();
        let spec = ClassifierSpec::new(
            ClassifierKind::RknnLinear,
            HyperParams {
                k: 3,
                ..Default::default()
            },
        );
        let r = cross_validate(&spec, &data, &folds).unwrap();
        assert_eq!(r.mean_accuracy, 100.0);
        assert_eq!(r.std_accuracy, 0.0);
        assert_eq!(r.per_fold.len(), 5);
        let again = cross_validate(&spec, &data, &folds).unwrap();
        let acc = |r: &CvResult| r.per_fold.iter().map(|f| f.accuracy).collect::<Vec<_>>();
        assert_eq!(acc(&r), acc(&again));
    }

    #[test]
    fn fold_errors_carry_the_fold_id() {
        let data = clusters(20, 1.0);
        let folds = stratified_folds(&data, 2, 1).unwrap();
        let spec = ClassifierSpec::new(
            ClassifierKind::RknnLinear,
            HyperParams {
                k: 15,
                ..Default::default()
            },
        );
        assert!(matches!(cross_validate(&spec, &data, &folds), Err(Error::Fold { fold: 0, .. })));
    }

    #[test]
    fn grid_search_picks_best_with_deterministic_ties() {
        let data = clusters(40, 0.3);
        let folds = stratified_folds(&data, 4, 2).unwrap();
        let base = ClassifierSpec::new(ClassifierKind::Wltsvm, HyperParams { kernel: KernelSpec::linear(), ..Default::default() });
        let grid = GridSpec {
            penalty_range: vec![0.01, 0.1, 1.0],
            sigma_range: vec![1.0],
            k_range: vec![2, 3],
            tie_c2_c3: true,
        };
        let report = grid_search_report(&data, &grid, &folds, &base, Execution::Parallel).unwrap();
        let best_acc = report.points.iter().map(|p| p.1).fold(f64::MIN, f64::max);
        assert_eq!(report.best.mean_accuracy, best_acc);
        let first_best = report.points.iter().find(|p| p.1 == best_acc).unwrap();
        assert_eq!(report.best.best_params, first_best.0.spec);

        let seq = grid_search(&data, &grid, &folds, &base, Execution::Sequential).unwrap();
        assert_eq!(seq.best_params, report.best.best_params);

        // single-point grid equals plain cross-validation
        let one = GridSpec {
            penalty_range: vec![0.1],
            sigma_range: vec![1.0],
            k_range: vec![3],
            tie_c2_c3: true,
        };
        let g = grid_search(&data, &one, &folds, &base, Execution::Sequential).unwrap();
        let mut hp = base.params.clone();
        hp.c1 = 0.1;
        hp.k = 3;
        let cv = cross_validate(&ClassifierSpec::new(ClassifierKind::Wltsvm, hp), &data, &folds).unwrap();
        assert_eq!(g.mean_accuracy, cv.mean_accuracy);
    }

    #[test]
    fn tables_are_written_with_headers() {
        let spec = ClassifierSpec::new(ClassifierKind::Tsvm, HyperParams { kernel: KernelSpec::linear(), ..Default::default() });
        let result = CvResult::from_folds(
            vec![
                FoldOutcome { accuracy: 90.0, train_seconds: 0.5 },
                FoldOutcome { accuracy: 100.0, train_seconds: 1.5 },
            ],
            spec,
        );
        assert_eq!(result.mean_accuracy, 95.0);
        assert!((result.std_accuracy - 50f64.sqrt()).abs() < 1e-12);
        let dir = tempfile::tempdir().unwrap();
        let acc = dir.path().join("acc.csv");
        write_accuracy_table(
            &[AccuracyRow {
                dataset: "toy".into(),
                algorithm: "tsvm".into(),
                result,
            }],
            &acc,
        )
        .unwrap();
        let text = std::fs::read_to_string(&acc).unwrap();
        assert_eq!(
            text,
            "dataset,algorithm,mean_accuracy,std_accuracy,mean_train_time,params\ntoy,tsvm,95,7.07107,1,c1=1 c2=1\n"
        );
        let timing = dir.path().join("t.csv");
        write_timing_table(
            &[TimingRow {
                dataset: "ndc".into(),
                samples: 1000,
                times: vec![("rknn-fsa".into(), 2.0), ("rknn-ldmdba".into(), 1.0)],
                speedup: Some(2.0),
            }],
            &timing,
        )
        .unwrap();
        let text = std::fs::read_to_string(&timing).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().all(|l| l.split(',').count() == 5));
    }

    proptest! {
        #[test]
        fn friedman_matches_rank_sum_form(seed: u64, n in 2usize..15, k in 2usize..7) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let scores: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..k).map(|_| (rng.random::<f64>() * 4.0).floor()).collect())
                .collect();
            let ranks = average_ranks(&scores);
            for r in &ranks {
                let total: f64 = r.iter().sum();
                prop_assert!((total - (k * (k + 1)) as f64 / 2.0).abs() < 1e-12);
            }
            let (chi, _) = friedman_test(&ranks).unwrap();
            prop_assert!((chi - brute_friedman(&ranks)).abs() < 1e-10 * chi.abs().max(1.0));
        }

        #[test]
        fn grid_choice_ignores_enumeration_order(seed: u64) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut entries: Vec<([usize; 5], f64)> = (0..30)
                .map(|i| ([i % 3, i % 5, i % 2, 0, 0], ((i * 7) % 4) as f64))
                .collect();
            let pick = |e: &[([usize; 5], f64)]| {
                e.iter().max_by(|a, b| better((&a.0, a.1), (&b.0, b.1))).unwrap().0
            };
            let first = pick(&entries);
            entries.shuffle(&mut rng);
            prop_assert_eq!(first, pick(&entries));
        }
    }
}
