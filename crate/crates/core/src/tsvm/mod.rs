//! Twin-hyperplane classifiers: RKNN-TSVM (linear and kernel) and the TSVM
//! and WLTSVM baselines.
//!
//! All four share one training core, [`train_twin`]. For the plane of class
//! `s` with own-class rows `H` (augmented with a bias column), per-row
//! weights `D` and retained opposite-class rows `G`, the dual is
//!
//! ```text
//! min ½ αᵀ G M⁻¹ Gᵀ α − eᵀα,  0 ≤ α ≤ c,   M = HᵀDH + r·I
//! ```
//!
//! and the plane is `u = −M⁻¹Gᵀα`. `M` is factored once by Cholesky and
//! reused for both the dual matrix and the recovery.

mod model_io;

use std::time::Instant;

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};

use crate::affinity::{class_affinity, WeightScheme};
use crate::data::{Dataset, Label, NormParams};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernel::{gram_rows, KernelBasis, KernelKind, KernelSpec, Rows};
use crate::neighbors::{knn_search, KnnAlgorithm, SearchSpace};
use crate::solver::{clipdcd_solve_with, DualProblem, SolverOptions, SolverReport};

pub use model_io::{load_model, read_model, save_model, write_model, MODEL_FORMAT_VERSION};

/// Regularizer added to the baselines' `HᵀH` and `GᵀG`.
pub const BASELINE_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    /// Box bound of both duals.
    pub c1: f64,
    /// Stabilizer of the positive-class plane.
    pub c2: f64,
    /// Stabilizer of the negative-class plane.
    pub c3: f64,
    pub k: usize,
    pub kernel: KernelSpec,
    pub knn_algorithm: KnnAlgorithm,
    /// Fraction of training rows used as kernel basis.
    pub rect_ratio: f64,
    pub weight_scheme: WeightScheme,
    /// Keep only margin points in the constraints.
    pub filter_margins: bool,
    pub seed: u64,
    pub execution: Execution,
    pub solver: SolverOptions,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            k: 5,
            kernel: KernelSpec::gaussian(1.0),
            knn_algorithm: KnnAlgorithm::Fsa,
            rect_ratio: 1.0,
            weight_scheme: WeightScheme::Distance,
            filter_margins: true,
            seed: 0,
            execution: Execution::default(),
            solver: SolverOptions::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        positive("c1", self.c1)?;
        positive("c2", self.c2)?;
        positive("c3", self.c3)?;
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if !(self.rect_ratio > 0.0 && self.rect_ratio <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rect ratio must lie in (0, 1], got {}",
                self.rect_ratio
            )));
        }
        positive("solver tolerance", self.solver.tol)?;
        self.kernel.validate()
    }
}

/// How per-row weights and margin flags are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weighting {
    /// Every weight 1.
    Uniform,
    /// From a KNN graph over the training set.
    Graph {
        k: usize,
        scheme: WeightScheme,
        algorithm: KnnAlgorithm,
    },
}

/// Full description of one twin-plane training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinConfig {
    /// Box bound of the positive plane's dual.
    pub c_pos: f64,
    pub c_neg: f64,
    /// Ridge added to the positive plane's system matrix.
    pub reg_pos: f64,
    pub reg_neg: f64,
    pub weighting: Weighting,
    /// Only meaningful with [`Weighting::Graph`].
    pub filter_margins: bool,
    /// `None` trains a primal linear model.
    pub kernel: Option<KernelSpec>,
    pub rect_ratio: f64,
    pub seed: u64,
    pub execution: Execution,
    pub solver: SolverOptions,
}

impl TwinConfig {
    pub fn rknn_linear(hp: &HyperParams) -> Self {
        TwinConfig {
            c_pos: hp.c1,
            c_neg: hp.c1,
            reg_pos: hp.c2,
            reg_neg: hp.c3,
            weighting: Weighting::Graph {
                k: hp.k,
                scheme: hp.weight_scheme,
                algorithm: hp.knn_algorithm,
            },
            filter_margins: hp.filter_margins,
            kernel: None,
            rect_ratio: 1.0,
            seed: hp.seed,
            execution: hp.execution,
            solver: hp.solver.clone(),
        }
    }

    pub fn rknn_kernel(hp: &HyperParams) -> Self {
        TwinConfig {
            kernel: Some(hp.kernel),
            rect_ratio: hp.rect_ratio,
            ..Self::rknn_linear(hp)
        }
    }

    /// A linear `kernel` selects the primal linear model.
    pub fn tsvm(c1: f64, c2: f64, kernel: KernelSpec) -> Self {
        TwinConfig {
            c_pos: c1,
            c_neg: c2,
            reg_pos: BASELINE_EPSILON,
            reg_neg: BASELINE_EPSILON,
            weighting: Weighting::Uniform,
            filter_margins: false,
            kernel: (kernel.kind == KernelKind::Gaussian).then_some(kernel),
            rect_ratio: 1.0,
            seed: 0,
            execution: Execution::default(),
            solver: SolverOptions::default(),
        }
    }

    pub fn wltsvm(c: f64, k: usize, kernel: KernelSpec) -> Self {
        TwinConfig {
            weighting: Weighting::Graph {
                k,
                scheme: WeightScheme::Binary,
                algorithm: KnnAlgorithm::Fsa,
            },
            filter_margins: true,
            ..Self::tsvm(c, c, kernel)
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("c (positive plane)", self.c_pos)?;
        positive("c (negative plane)", self.c_neg)?;
        positive("regularizer (positive plane)", self.reg_pos)?;
        positive("regularizer (negative plane)", self.reg_neg)?;
        if let Weighting::Graph { k, .. } = self.weighting {
            if k == 0 {
                return Err(Error::InvalidParameter("k must be at least 1".into()));
            }
        }
        if !(self.rect_ratio > 0.0 && self.rect_ratio <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rect ratio must lie in (0, 1], got {}",
                self.rect_ratio
            )));
        }
        positive("solver tolerance", self.solver.tol)?;
        if let Some(spec) = &self.kernel {
            spec.validate()?;
        }
        Ok(())
    }
}

/// `xᵀw + b = 0` (or `K(x, basis)μ + b = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub normal: DVector<f64>,
    pub bias: f64,
}

impl Plane {
    fn from_augmented(u: &DVector<f64>) -> Self {
        let p = u.len() - 1;
        Plane {
            normal: u.rows(0, p).into_owned(),
            bias: u[p],
        }
    }

    pub fn scaled(&self, factor: f64) -> Plane {
        Plane {
            normal: &self.normal * factor,
            bias: self.bias * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Linear,
    Kernel,
}

/// Per-plane facts about one training run. Index 0 is the positive plane.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainDiagnostics {
    /// Number of constraint rows kept in each dual.
    pub dual_dims: [usize; 2],
    /// Margin points found by the graph (0 without a graph).
    pub margin_counts: [usize; 2],
    /// The graph found no margin point and every row was kept.
    pub margin_fallback: [bool; 2],
    pub iterations: [usize; 2],
    pub converged: [bool; 2],
    /// Opposite-class positions (within that class) of the rows kept in
    /// each dual.
    pub kept_rows: [Vec<usize>; 2],
    /// Dual solutions, aligned with `kept_rows`.
    pub duals: [DVector<f64>; 2],
    pub train_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwinModel {
    kind: ModelKind,
    plane_pos: Plane,
    plane_neg: Plane,
    kernel: KernelSpec,
    basis: Option<KernelBasis>,
    norm_params: Option<NormParams>,
    norms: (f64, f64),
    /// Filled by training, absent on loaded models.
    pub diagnostics: Option<TrainDiagnostics>,
}

impl TwinModel {
    pub fn linear(plane_pos: Plane, plane_neg: Plane, norm_params: Option<NormParams>) -> Result<Self> {
        if plane_pos.normal.len() != plane_neg.normal.len() {
            return Err(Error::DimensionMismatch {
                expected: plane_pos.normal.len(),
                found: plane_neg.normal.len(),
            });
        }
        if let Some(np) = &norm_params {
            if np.dim() != plane_pos.normal.len() {
                return Err(Error::DimensionMismatch {
                    expected: plane_pos.normal.len(),
                    found: np.dim(),
                });
            }
        }
        let norms = (plane_pos.normal.norm(), plane_neg.normal.norm());
        Ok(TwinModel {
            kind: ModelKind::Linear,
            plane_pos,
            plane_neg,
            kernel: KernelSpec::linear(),
            basis: None,
            norm_params,
            norms,
            diagnostics: None,
        })
    }

    /// Plane lengths are measured in feature space, `sqrt(μᵀ K(basis, basis) μ)`.
    pub fn kernel(
        plane_pos: Plane,
        plane_neg: Plane,
        kernel: KernelSpec,
        basis: KernelBasis,
        norm_params: Option<NormParams>,
    ) -> Result<Self> {
        kernel.validate()?;
        for plane in [&plane_pos, &plane_neg] {
            if plane.normal.len() != basis.len() {
                return Err(Error::DimensionMismatch {
                    expected: basis.len(),
                    found: plane.normal.len(),
                });
            }
        }
        if let Some(np) = &norm_params {
            if np.dim() != basis.rows.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: basis.rows.ncols(),
                    found: np.dim(),
                });
            }
        }
        let b = Rows::new(&basis.rows);
        let kbb = gram_rows(&kernel, &b, &b, Execution::default());
        let feature_norm = |mu: &DVector<f64>| mu.dot(&(&kbb * mu)).max(0.0).sqrt();
        let norms = (feature_norm(&plane_pos.normal), feature_norm(&plane_neg.normal));
        Ok(TwinModel {
            kind: ModelKind::Kernel,
            plane_pos,
            plane_neg,
            kernel,
            basis: Some(basis),
            norm_params,
            norms,
            diagnostics: None,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn plane_pos(&self) -> &Plane {
        &self.plane_pos
    }

    pub fn plane_neg(&self) -> &Plane {
        &self.plane_neg
    }

    pub fn kernel_spec(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn basis(&self) -> Option<&KernelBasis> {
        self.basis.as_ref()
    }

    pub fn norm_params(&self) -> Option<&NormParams> {
        self.norm_params.as_ref()
    }

    /// Lengths of the two plane normals used to turn function values into
    /// distances.
    pub fn plane_norms(&self) -> (f64, f64) {
        self.norms
    }

    /// Input dimension expected by [`decision_values`].
    pub fn input_dim(&self) -> usize {
        match &self.basis {
            Some(b) => b.rows.ncols(),
            None => self.plane_pos.normal.len(),
        }
    }

    /// Same model with both planes scaled by positive factors.
    pub fn with_scaled_planes(&self, pos: f64, neg: f64) -> Result<Self> {
        let (pp, pn) = (self.plane_pos.scaled(pos), self.plane_neg.scaled(neg));
        match self.kind {
            ModelKind::Linear => TwinModel::linear(pp, pn, self.norm_params.clone()),
            ModelKind::Kernel => TwinModel::kernel(
                pp,
                pn,
                self.kernel,
                self.basis.clone().expect("kernel model has a basis"),
                self.norm_params.clone(),
            ),
        }
    }
}

/// `[x 1]`.
fn augment(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = x.shape();
    let mut out = x.clone().resize_horizontally(p + 1, 1.0);
    if n == 0 {
        out = DMatrix::zeros(0, p + 1);
    }
    out
}

/// Solves `L·Y = B` in place, a row block at a time with a gemm update of
/// the trailing rows. Only the lower triangle of `l` is read.
fn solve_lower_blocked(l: &DMatrix<f64>, mut b: DMatrix<f64>) -> Result<DMatrix<f64>> {
    const BLOCK: usize = 128;
    let n = l.nrows();
    let mut k0 = 0;
    while k0 < n {
        let w = BLOCK.min(n - k0);
        let diag = l.view((k0, k0), (w, w)).lower_triangle();
        let mut head = b.rows_mut(k0, w);
        if !diag.solve_lower_triangular_mut(&mut head) {
            return Err(Error::NotPositiveDefinite("plane system matrix"));
        }
        let rest = n - k0 - w;
        if rest > 0 {
            let solved = b.rows(k0, w).clone_owned();
            b.rows_mut(k0 + w, rest)
                .gemm(-1.0, &l.view((k0 + w, k0), (rest, w)), &solved, 1.0);
        }
        k0 += w;
    }
    Ok(b)
}

/// `YᵀY`, computed block column by block column on and below the diagonal
/// and mirrored.
fn gram_of_columns(y: &DMatrix<f64>) -> DMatrix<f64> {
    const BLOCK: usize = 256;
    let n = y.ncols();
    let yt = y.transpose();
    let mut q = DMatrix::<f64>::zeros(n, n);
    let mut j0 = 0;
    while j0 < n {
        let w = BLOCK.min(n - j0);
        let rows = n - j0;
        q.view_mut((j0, j0), (rows, w))
            .gemm(1.0, &yt.rows(j0, rows), &y.columns(j0, w), 0.0);
        j0 += w;
    }
    for j in 0..n {
        for i in 0..j {
            q[(i, j)] = q[(j, i)];
        }
    }
    q
}

struct PlaneFit {
    u: DVector<f64>,
    report: SolverReport,
}

/// Solves one plane's dual. `own` and `other` are augmented row blocks.
fn fit_plane(
    own: &DMatrix<f64>,
    own_weights: &[f64],
    other: &DMatrix<f64>,
    kept_rows: &[usize],
    c: f64,
    reg: f64,
    solver: &SolverOptions,
) -> Result<PlaneFit> {
    let p = own.ncols();
    let mut weighted = own.clone();
    for (i, mut row) in weighted.row_iter_mut().enumerate() {
        row *= own_weights[i];
    }
    let mut m = own.transpose() * weighted;
    for i in 0..p {
        m[(i, i)] += reg;
    }
    let chol = m
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("plane system matrix"))?;

    let g = other.select_rows(kept_rows.iter());
    let gt = g.transpose();
    let y = solve_lower_blocked(chol.l_dirty(), gt.clone())?;
    let q = gram_of_columns(&y);
    let problem = DualProblem::with_unit_term(q, c)?;
    let report = clipdcd_solve_with(&problem, solver)?;
    let u = -chol.solve(&(&gt * &report.alpha));
    Ok(PlaneFit { u, report })
}

/// Rows of one class in the (possibly kernelized) feature representation.
struct Blocks {
    pos: DMatrix<f64>,
    neg: DMatrix<f64>,
}

pub fn train_twin(train: &Dataset, cfg: &TwinConfig) -> Result<TwinModel> {
    cfg.validate()?;
    train.require_both_classes()?;
    let start = Instant::now();
    let exec = cfg.execution;
    let pos_idx = train.class_indices(Label::Positive);
    let neg_idx = train.class_indices(Label::Negative);

    // weights and margin flags
    let mut diag = TrainDiagnostics::default();
    let (pos_weights, neg_weights, pos_keep, neg_keep) = match cfg.weighting {
        Weighting::Uniform => (
            vec![1.0; pos_idx.len()],
            vec![1.0; neg_idx.len()],
            (0..neg_idx.len()).collect::<Vec<_>>(),
            (0..pos_idx.len()).collect::<Vec<_>>(),
        ),
        Weighting::Graph { k, scheme, algorithm } => {
            let space = match cfg.kernel {
                Some(spec) => SearchSpace::Kernel(spec),
                None => SearchSpace::Input,
            };
            let index = knn_search(&train.samples, k, space, algorithm, exec)?;
            let aff_pos = class_affinity(&index, &train.labels, Label::Positive, scheme)?;
            let aff_neg = class_affinity(&index, &train.labels, Label::Negative, scheme)?;
            diag.margin_counts = [aff_pos.margin_count, aff_neg.margin_count];
            let keep = |aff: &crate::affinity::AffinityResult, plane: usize, diag: &mut TrainDiagnostics| {
                if !cfg.filter_margins {
                    return (0..aff.margin_flags.len()).collect::<Vec<_>>();
                }
                if aff.margin_count == 0 {
                    warn!(
                        "no margin points for the {} plane; keeping every constraint row",
                        if plane == 0 { "positive" } else { "negative" }
                    );
                    diag.margin_fallback[plane] = true;
                    return (0..aff.margin_flags.len()).collect();
                }
                aff.margin_positions()
            };
            let pos_keep = keep(&aff_pos, 0, &mut diag);
            let neg_keep = keep(&aff_neg, 1, &mut diag);
            (aff_pos.weights, aff_neg.weights, pos_keep, neg_keep)
        }
    };

    let (blocks, basis) = match &cfg.kernel {
        None => (
            Blocks {
                pos: augment(&train.samples.select_rows(pos_idx.iter())),
                neg: augment(&train.samples.select_rows(neg_idx.iter())),
            },
            None,
        ),
        Some(spec) => {
            let basis = KernelBasis::rectangular(&train.samples, cfg.rect_ratio, cfg.seed)?;
            let gram = gram_rows(spec, &Rows::new(&train.samples), &Rows::new(&basis.rows), exec);
            (
                Blocks {
                    pos: augment(&gram.select_rows(pos_idx.iter())),
                    neg: augment(&gram.select_rows(neg_idx.iter())),
                },
                Some(basis),
            )
        }
    };
    debug!(
        "training twin planes: {} features, duals {}x{}",
        blocks.pos.ncols(),
        pos_keep.len(),
        neg_keep.len()
    );

    let (fit_pos, fit_neg) = exec.join(
        || fit_plane(&blocks.pos, &pos_weights, &blocks.neg, &pos_keep, cfg.c_pos, cfg.reg_pos, &cfg.solver),
        || fit_plane(&blocks.neg, &neg_weights, &blocks.pos, &neg_keep, cfg.c_neg, cfg.reg_neg, &cfg.solver),
    );
    let (fit_pos, fit_neg) = (fit_pos?, fit_neg?);
    diag.dual_dims = [pos_keep.len(), neg_keep.len()];
    diag.iterations = [fit_pos.report.iterations, fit_neg.report.iterations];
    diag.converged = [fit_pos.report.converged, fit_neg.report.converged];
    diag.duals = [fit_pos.report.alpha.clone(), fit_neg.report.alpha.clone()];
    diag.kept_rows = [pos_keep, neg_keep];
    for (plane, report) in [("positive", &fit_pos.report), ("negative", &fit_neg.report)] {
        if !report.converged {
            warn!(
                "{plane} dual stopped at the iteration cap ({} iterations, criterion {:.3e})",
                report.iterations, report.final_criterion
            );
        }
    }

    let plane_pos = Plane::from_augmented(&fit_pos.u);
    // the negative plane's recovery carries the opposite sign
    let plane_neg = Plane::from_augmented(&(-fit_neg.u));
    let mut model = match (basis, &cfg.kernel) {
        (Some(basis), Some(spec)) => TwinModel::kernel(plane_pos, plane_neg, *spec, basis, train.norm_params.clone())?,
        _ => TwinModel::linear(plane_pos, plane_neg, train.norm_params.clone())?,
    };
    diag.train_seconds = start.elapsed().as_secs_f64();
    model.diagnostics = Some(diag);
    Ok(model)
}

pub fn train_rknn_tsvm_linear(train: &Dataset, hp: &HyperParams) -> Result<TwinModel> {
    hp.validate()?;
    train_twin(train, &TwinConfig::rknn_linear(hp))
}

pub fn train_rknn_tsvm_kernel(train: &Dataset, hp: &HyperParams) -> Result<TwinModel> {
    hp.validate()?;
    train_twin(train, &TwinConfig::rknn_kernel(hp))
}

pub fn train_tsvm(train: &Dataset, c1: f64, c2: f64, kernel: KernelSpec) -> Result<TwinModel> {
    train_twin(train, &TwinConfig::tsvm(c1, c2, kernel))
}

pub fn train_wltsvm(train: &Dataset, c: f64, k: usize, kernel: KernelSpec) -> Result<TwinModel> {
    train_twin(train, &TwinConfig::wltsvm(c, k, kernel))
}

fn prepared_inputs(model: &TwinModel, samples: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if samples.ncols() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            found: samples.ncols(),
        });
    }
    match &model.norm_params {
        Some(np) => np.apply_matrix(samples),
        None => Ok(samples.clone()),
    }
}

fn plane_distance(value: f64, norm: f64) -> f64 {
    if norm > 0.0 {
        value.abs() / norm
    } else if value == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `(distance to the positive plane, distance to the negative plane)` per
/// row of raw (unnormalized) `samples`.
pub fn decision_values(model: &TwinModel, samples: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    decision_values_with(model, samples, Execution::default())
}

pub fn decision_values_with(model: &TwinModel, samples: &DMatrix<f64>, exec: Execution) -> Result<Vec<(f64, f64)>> {
    let x = prepared_inputs(model, samples)?;
    let features = match &model.basis {
        None => x,
        Some(basis) => gram_rows(&model.kernel, &Rows::new(&x), &Rows::new(&basis.rows), exec),
    };
    let f_pos = &features * &model.plane_pos.normal;
    let f_neg = &features * &model.plane_neg.normal;
    Ok((0..features.nrows())
        .map(|i| {
            (
                plane_distance(f_pos[i] + model.plane_pos.bias, model.norms.0),
                plane_distance(f_neg[i] + model.plane_neg.bias, model.norms.1),
            )
        })
        .collect())
}

/// Nearest plane wins; a tie goes to the negative class.
pub fn label_from_distances(d_pos: f64, d_neg: f64) -> Label {
    if d_pos < d_neg {
        Label::Positive
    } else {
        Label::Negative
    }
}

pub fn predict(model: &TwinModel, samples: &DMatrix<f64>) -> Result<Vec<Label>> {
    Ok(decision_values(model, samples)?
        .into_iter()
        .map(|(a, b)| label_from_distances(a, b))
        .collect())
}
