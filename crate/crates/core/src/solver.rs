//! Clipped dual coordinate descent (clipDCD) for
//!
//! ```text
//! min  ½ αᵀQα − eᵀα    s.t.  0 ≤ α ≤ c
//! ```
//!
//! with `Q` symmetric positive definite. Each step picks the single
//! coordinate whose unconstrained update would decrease the objective the
//! most and clips the new value into the box.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DualProblem {
    pub q_matrix: DMatrix<f64>,
    /// Usually the all-ones vector.
    pub linear_term: DVector<f64>,
    pub upper_bound: f64,
}

impl DualProblem {
    pub fn new(q_matrix: DMatrix<f64>, linear_term: DVector<f64>, upper_bound: f64) -> Result<Self> {
        let p = DualProblem {
            q_matrix,
            linear_term,
            upper_bound,
        };
        p.validate()?;
        Ok(p)
    }

    /// Problem with `e = 1`.
    pub fn with_unit_term(q_matrix: DMatrix<f64>, upper_bound: f64) -> Result<Self> {
        let m = q_matrix.nrows();
        Self::new(q_matrix, DVector::from_element(m, 1.0), upper_bound)
    }

    pub fn dim(&self) -> usize {
        self.linear_term.len()
    }

    pub fn validate(&self) -> Result<()> {
        let q = &self.q_matrix;
        let m = self.linear_term.len();
        if q.nrows() != m || q.ncols() != m {
            return Err(Error::InvalidProblem(format!(
                "Q is {}x{} but the linear term has length {m}",
                q.nrows(),
                q.ncols()
            )));
        }
        if !(self.upper_bound >= 0.0 && self.upper_bound.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "upper bound must be finite and nonnegative, got {}",
                self.upper_bound
            )));
        }
        if q.iter().chain(self.linear_term.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("non-finite entry in Q or e".into()));
        }
        for i in 0..m {
            if q[(i, i)] <= 0.0 {
                return Err(Error::NotPositiveDefinite("dual matrix has a nonpositive diagonal entry"));
            }
            for j in 0..i {
                let scale = q[(i, j)].abs().max(q[(j, i)].abs()).max(1.0);
                if (q[(i, j)] - q[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::InvalidProblem(format!("Q is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    pub fn objective(&self, alpha: &DVector<f64>) -> f64 {
        0.5 * alpha.dot(&(&self.q_matrix * alpha)) - self.linear_term.dot(alpha)
    }

    /// `Qα − e`.
    pub fn gradient(&self, alpha: &DVector<f64>) -> DVector<f64> {
        &self.q_matrix * alpha - &self.linear_term
    }

    /// Largest violation of the box KKT conditions: `g_i ≥ 0` at the lower
    /// bound, `g_i ≤ 0` at the upper bound, `g_i = 0` strictly inside.
    pub fn kkt_violation(&self, alpha: &DVector<f64>) -> f64 {
        let g = self.gradient(alpha);
        let c = self.upper_bound;
        alpha
            .iter()
            .zip(g.iter())
            .map(|(&a, &gi)| {
                if c == 0.0 {
                    0.0
                } else if a <= 0.0 {
                    (-gi).max(0.0)
                } else if a >= c {
                    gi.max(0.0)
                } else {
                    gi.abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Stop once the best achievable single-step decrease measure falls
    /// below this.
    pub tol: f64,
    /// Defaults to `5000·m`.
    pub max_iter: Option<usize>,
    /// Record one [`StepRecord`] per iteration.
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-5,
            max_iter: None,
            record_trace: false,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions {
            tol,
            ..Default::default()
        }
    }
}

/// One coordinate update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub coordinate: usize,
    /// Objective after the update.
    pub objective: f64,
    /// `r_L² / (2 Q_LL)`, the decrease of an unclipped step.
    pub unclipped_decrease: f64,
    pub clipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub alpha: DVector<f64>,
    pub iterations: usize,
    /// Value of `r_L² / Q_LL` at termination (0 when no coordinate can move).
    pub final_criterion: f64,
    pub converged: bool,
    pub trace: Vec<StepRecord>,
}

pub fn clipdcd_solve(p: &DualProblem, tol: f64, max_iter: usize) -> Result<SolverReport> {
    clipdcd_solve_with(
        p,
        &SolverOptions {
            tol,
            max_iter: Some(max_iter),
            record_trace: false,
        },
    )
}

pub fn clipdcd_solve_with(p: &DualProblem, opts: &SolverOptions) -> Result<SolverReport> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("solver tol must be positive, got {}", opts.tol)));
    }
    let m = p.dim();
    let max_iter = opts.max_iter.unwrap_or(5000 * m.max(1));
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be positive".into()));
    }
    p.validate()?;

    let q = &p.q_matrix;
    let c = p.upper_bound;
    let diag: Vec<f64> = (0..m).map(|i| q[(i, i)]).collect();
    let mut alpha = DVector::<f64>::zeros(m);
    // residual r = e − Qα; the gradient is −r
    let mut r = p.linear_term.clone();
    let mut objective = 0.0;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let final_criterion;
    let mut converged = false;

    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..m {
            let ri = r[i];
            let movable = (ri < 0.0 && alpha[i] > 0.0) || (ri > 0.0 && alpha[i] < c);
            if movable {
                let score = ri * ri / diag[i];
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((i, score));
                }
            }
        }
        let Some((l, score)) = best else {
            final_criterion = 0.0;
            converged = true;
            break;
        };
        if score < opts.tol {
            final_criterion = score;
            converged = true;
            break;
        }
        if iterations == max_iter {
            final_criterion = score;
            break;
        }

        let lambda = r[l] / diag[l];
        let unclipped = alpha[l] + lambda;
        let new = unclipped.clamp(0.0, c);
        let delta = new - alpha[l];
        alpha[l] = new;
        r.axpy(-delta, &q.column(l), 1.0);
        iterations += 1;
        if opts.record_trace {
            // f changes by δ·(−r_old) + ½δ²Q_LL; r_old = r_new + δ·Q_LL
            let r_old = r[l] + delta * diag[l];
            objective += -delta * r_old + 0.5 * delta * delta * diag[l];
            trace.push(StepRecord {
                coordinate: l,
                objective,
                unclipped_decrease: 0.5 * score,
                clipped: new != unclipped,
            });
        }
    }

    Ok(SolverReport {
        alpha,
        iterations,
        final_criterion,
        converged,
        trace,
    })
}

/// Reference solver: accelerated projected gradient with step `1/L` (`L` a
/// Gershgorin bound on the largest eigenvalue of Q) and adaptive restart,
/// run until the projected-gradient residual is below `tol`. Meant for small
/// test problems only.
pub fn qp_oracle_solve(p: &DualProblem, tol: f64) -> DVector<f64> {
    let m = p.dim();
    let c = p.upper_bound;
    let q = &p.q_matrix;
    let lip = (0..m)
        .map(|i| q.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if m == 0 || c == 0.0 || lip == 0.0 {
        return DVector::zeros(m);
    }
    let step = 1.0 / lip;
    let project = |v: &mut DVector<f64>| v.apply(|x| *x = x.clamp(0.0, c));
    let residual = |a: &DVector<f64>| {
        let mut moved = a - p.gradient(a);
        project(&mut moved);
        (a - moved).amax()
    };

    let mut x = DVector::<f64>::zeros(m);
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..5_000_000 {
        if residual(&x) < tol {
            break;
        }
        let mut next = &y - p.gradient(&y) * step;
        project(&mut next);
        if (&y - &next).dot(&(&next - &x)) > 0.0 {
            // momentum points uphill: restart from a plain projected step
            t = 1.0;
            next = &x - p.gradient(&x) * step;
            project(&mut next);
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &next + (&next - &x) * ((t - 1.0) / t_next);
        x = next;
        t = t_next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pd(m: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(m, m, |_, _| rng.random::<f64>() - 0.5);
        a.transpose() * &a + DMatrix::identity(m, m) * 0.1
    }

    fn solve(p: &DualProblem, tol: f64) -> SolverReport {
        clipdcd_solve_with(
            p,
            &SolverOptions {
                tol,
                max_iter: None,
                record_trace: true,
            },
        )
        .unwrap()
    }

    #[test]
    fn identity_interior_optimum() {
        let p = DualProblem::with_unit_term(DMatrix::identity(2, 2), 10.0).unwrap();
        let r = clipdcd_solve(&p, 1e-5, 100).unwrap();
        assert_eq!(r.alpha, DVector::from_vec(vec![1.0, 1.0]));
        assert_eq!(p.objective(&r.alpha), -1.0);
        assert!(r.converged);
    }

    #[test]
    fn identity_clipped_optimum() {
        let p = DualProblem::with_unit_term(DMatrix::identity(2, 2), 0.5).unwrap();
        let r = clipdcd_solve(&p, 1e-5, 100).unwrap();
        assert_eq!(r.alpha, DVector::from_vec(vec![0.5, 0.5]));
        assert!(r.converged);
    }

    #[test]
    fn separable_diagonal() {
        let p = DualProblem::with_unit_term(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0])), 10.0).unwrap();
        let r = clipdcd_solve(&p, 1e-5, 100).unwrap();
        assert_eq!(r.alpha, DVector::from_vec(vec![1.0, 0.25]));
        let o = qp_oracle_solve(&p, 1e-10);
        assert_relative_eq!(o, r.alpha, epsilon = 1e-5);
        // first pick maximizes r²/Q: 1/1 > 1/4
        assert_eq!(solve(&p, 1e-5).trace[0].coordinate, 0);
    }

    #[test]
    fn random_six_by_six_against_oracle() {
        let p = DualProblem::with_unit_term(random_pd(6, 42), 1.0).unwrap();
        let r = solve(&p, 1e-12);
        let o = qp_oracle_solve(&p, 1e-12);
        assert!((p.objective(&r.alpha) - p.objective(&o)).abs() < 1e-6);
        for case in [
            DualProblem::with_unit_term(DMatrix::identity(2, 2), 10.0).unwrap(),
            DualProblem::with_unit_term(DMatrix::identity(2, 2), 0.5).unwrap(),
        ] {
            let r = solve(&case, 1e-12);
            assert_relative_eq!(qp_oracle_solve(&case, 1e-12), r.alpha, epsilon = 1e-5);
        }
    }

    #[test]
    fn zero_box_is_trivial() {
        let p = DualProblem::with_unit_term(random_pd(4, 1), 0.0).unwrap();
        assert_eq!(qp_oracle_solve(&p, 1e-9), DVector::zeros(4));
        let r = clipdcd_solve(&p, 1e-5, 10).unwrap();
        assert_eq!(r.alpha, DVector::zeros(4));
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn empty_problem() {
        let p = DualProblem::with_unit_term(DMatrix::zeros(0, 0), 1.0).unwrap();
        let r = clipdcd_solve_with(&p, &SolverOptions::default()).unwrap();
        assert!(r.converged && r.alpha.is_empty());
    }

    #[test]
    fn invalid_inputs() {
        let bad_diag = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            DualProblem::with_unit_term(bad_diag, 1.0),
            Err(Error::NotPositiveDefinite(_))
        ));
        let nan = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 1.0]);
        assert!(DualProblem::with_unit_term(nan, 1.0).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(DualProblem::with_unit_term(asym, 1.0).is_err());
        assert!(DualProblem::with_unit_term(DMatrix::identity(2, 2), -1.0).is_err());
        let p = DualProblem::with_unit_term(DMatrix::identity(2, 2), 1.0).unwrap();
        assert!(clipdcd_solve(&p, 0.0, 10).is_err());
        assert!(clipdcd_solve(&p, 1e-5, 0).is_err());
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let p = DualProblem::with_unit_term(random_pd(10, 3), 100.0).unwrap();
        let r = clipdcd_solve(&p, 1e-14, 2).unwrap();
        assert_eq!(r.iterations, 2);
        assert!(!r.converged);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn monotone_and_exact_unclipped_decrease(seed: u64, m in 1usize..30, c in 0.01f64..20.0) {
            let p = DualProblem::with_unit_term(random_pd(m, seed), c).unwrap();
            let r = solve(&p, 1e-10);
            let mut prev = 0.0f64;
            for step in &r.trace {
                prop_assert!(step.objective <= prev + 1e-12 * prev.abs().max(1.0));
                if !step.clipped {
                    let decrease = prev - step.objective;
                    prop_assert!((decrease - step.unclipped_decrease).abs() <= 1e-9 * decrease.abs().max(1.0));
                }
                prev = step.objective;
            }
            // incremental bookkeeping matches a direct evaluation
            prop_assert!((prev - p.objective(&r.alpha)).abs() < 1e-8 * prev.abs().max(1.0));
            prop_assert!(r.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
        }

        #[test]
        fn agrees_with_oracle(seed: u64, m in 1usize..25, c in 0.05f64..5.0) {
            let p = DualProblem::with_unit_term(random_pd(m, seed), c).unwrap();
            let tol = 1e-10;
            let r = solve(&p, tol);
            prop_assert!(r.converged);
            let o = qp_oracle_solve(&p, 1e-10);
            prop_assert!((p.objective(&r.alpha) - p.objective(&o)).abs() <= 10.0 * 1e-5);
            prop_assert!(p.kkt_violation(&r.alpha) < 1e-4);
        }
    }
}
