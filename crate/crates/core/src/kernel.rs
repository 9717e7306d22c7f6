//! Kernel functions, Gram assembly and rectangular-kernel bases.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Linear,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Gaussian width; ignored for the linear kernel.
    pub sigma: f64,
    /// `exp(-‖x−y‖² / 2σ²)` when true, `exp(-‖x−y‖ / 2σ²)` otherwise.
    pub squared_exponent: bool,
}

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            sigma: 1.0,
            squared_exponent: true,
        }
    }

    pub fn gaussian(sigma: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Gaussian,
            sigma,
            squared_exponent: true,
        }
    }

    /// Gaussian kernel written with a coefficient, `exp(-γ‖x−y‖²)`.
    /// Equivalent to `gaussian(1/sqrt(2γ))`.
    pub fn gaussian_gamma(gamma: f64) -> Self {
        Self::gaussian((0.5 / gamma).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == KernelKind::Gaussian && !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gaussian sigma must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    fn gaussian_arg(&self, sq_dist: f64) -> f64 {
        let dist = if self.squared_exponent {
            sq_dist
        } else {
            sq_dist.sqrt()
        };
        dist / (2.0 * self.sigma * self.sigma)
    }

    /// Kernel value without the dimension check.
    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => dot(x, y),
            KernelKind::Gaussian => (-self.gaussian_arg(sq_dist(x, y))).exp(),
        }
    }

    /// Distance between the feature-space images,
    /// `sqrt(K(x,x) − 2K(x,y) + K(y,y))`, in cancellation-free form.
    #[inline]
    pub fn feature_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => sq_dist(x, y).sqrt(),
            KernelKind::Gaussian => (-2.0 * (-self.gaussian_arg(sq_dist(x, y))).exp_m1()).sqrt(),
        }
    }
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let t = a - b;
            t * t
        })
        .sum()
}

/// Checked kernel evaluation.
pub fn kernel_value(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(spec.eval(x, y))
}

/// Row-major copy of a sample matrix, so rows are contiguous slices.
#[derive(Debug, Clone)]
pub(crate) struct Rows {
    pub n: usize,
    pub d: usize,
    data: Vec<f64>,
}

impl Rows {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let (n, d) = m.shape();
        let mut data = Vec::with_capacity(n * d);
        for i in 0..n {
            data.extend(m.row(i).iter());
        }
        Rows { n, d, data }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

/// Basis samples the kernel columns are evaluated against.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBasis {
    pub rows: DMatrix<f64>,
    pub ratio: f64,
}

impl KernelBasis {
    pub fn full(samples: &DMatrix<f64>) -> Self {
        KernelBasis {
            rows: samples.clone(),
            ratio: 1.0,
        }
    }

    /// `ceil(ratio·n)` rows drawn uniformly without replacement, kept in
    /// ascending row order. `ratio = 1` returns the full set unchanged.
    pub fn rectangular(samples: &DMatrix<f64>, ratio: f64, seed: u64) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rectangular kernel ratio must lie in (0, 1], got {ratio}"
            )));
        }
        let n = samples.nrows();
        let m = ((ratio * n as f64).ceil() as usize).clamp(1.min(n), n);
        if m == n {
            return Ok(KernelBasis {
                rows: samples.clone(),
                ratio,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = index::sample(&mut rng, n, m).into_vec();
        picked.sort_unstable();
        Ok(KernelBasis {
            rows: samples.select_rows(picked.iter()),
            ratio,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }
}

/// `a × m` matrix of `K(rows[i], basis[j])`.
pub fn gram_matrix(spec: &KernelSpec, rows: &DMatrix<f64>, basis: &KernelBasis) -> Result<DMatrix<f64>> {
    gram_matrix_with(spec, rows, basis, Execution::default())
}

pub fn gram_matrix_with(
    spec: &KernelSpec,
    rows: &DMatrix<f64>,
    basis: &KernelBasis,
    exec: Execution,
) -> Result<DMatrix<f64>> {
    if rows.ncols() != basis.rows.ncols() {
        return Err(Error::DimensionMismatch {
            expected: basis.rows.ncols(),
            found: rows.ncols(),
        });
    }
    spec.validate()?;
    let a = Rows::new(rows);
    let b = Rows::new(&basis.rows);
    Ok(gram_rows(spec, &a, &b, exec))
}

pub(crate) fn gram_rows(spec: &KernelSpec, a: &Rows, b: &Rows, exec: Execution) -> DMatrix<f64> {
    let m = b.n;
    let mut out = vec![0.0; a.n * m];
    exec.for_each_chunk(&mut out, m, |i, chunk| {
        let x = a.row(i);
        for (j, v) in chunk.iter_mut().enumerate() {
            *v = spec.eval(x, b.row(j));
        }
    });
    DMatrix::from_row_slice(a.n, m, &out)
}
