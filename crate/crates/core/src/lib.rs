//! # rknn-tsvm
//!
//! Training and evaluation toolkit for twin support vector machines whose
//! samples are weighted through a distance-weighted k-nearest-neighbor graph
//! (RKNN-TSVM), together with the TSVM and WLTSVM baselines.
//!
//! The pipeline for one training run is:
//!
//! 1. [`neighbors`]: k-nearest neighbors of every training sample, either by
//!    exhaustive search or by the reference-point (LDMDBA) approximation, in
//!    input space or in the kernel-induced feature space.
//! 2. [`affinity`]: intra-class and inter-class weight graphs, giving a
//!    density weight per sample and the margin points of the opposite class.
//! 3. [`tsvm`]: two regularized dual problems, solved by the clipped dual
//!    coordinate descent solver in [`solver`], followed by hyperplane recovery
//!    through SPD linear solves.
//!
//! [`eval`] wraps this in cross-validation, grid search, Friedman tests and
//! timing helpers. [`data`] covers CSV ingestion, normalization, folds and the
//! synthetic generators.
//!
//! ## Feature Flags
//!
//! - `parallel` (default): data-parallel inner loops through rayon. Without
//!   it every [`Execution`] mode runs sequentially.

pub mod affinity;
pub mod data;
pub mod error;
pub mod eval;
pub mod exec;
pub mod kernel;
pub mod neighbors;
pub mod solver;
pub mod tsvm;

pub use data::{Dataset, FoldPlan, Label, NormParams};
pub use error::{Error, Result};
pub use exec::Execution;
pub use kernel::{KernelBasis, KernelKind, KernelSpec};
pub use neighbors::{KnnAlgorithm, NeighborIndex, SearchSpace};
pub use solver::{DualProblem, SolverOptions, SolverReport};
pub use affinity::WeightScheme;
pub use tsvm::{HyperParams, Plane, TwinModel};
