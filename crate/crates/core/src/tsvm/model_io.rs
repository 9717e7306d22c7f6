//! Binary model container.
//!
//! Layout (little-endian throughout):
//!
//! ```text
//! magic        8 bytes  "RKNNTSVM"
//! version      u32
//! model kind   u8       0 = linear, 1 = kernel
//! kernel kind  u8       0 = linear, 1 = gaussian
//! sigma        f64
//! squared exp  u8
//! plane +      u64 len, len × f64 normal, f64 bias
//! plane −      same
//! basis        u64 rows, u64 cols, rows·cols × f64 (row-major), f64 ratio   (kernel models only)
//! norm params  u8 present, then u64 dim, dim × (f64 min, f64 max)
//! ```

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{ModelKind, Plane, TwinModel};
use crate::data::NormParams;
use crate::error::{Error, Result};
use crate::kernel::{KernelBasis, KernelKind, KernelSpec};

const MAGIC: &[u8; 8] = b"RKNNTSVM";
pub const MODEL_FORMAT_VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u64).to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn plane(&mut self, p: &Plane) {
        self.u64(p.normal.len());
        for &v in p.normal.iter() {
            self.f64(v);
        }
        self.f64(p.bias);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::ModelFormat(format!("truncated model file at byte {}", self.pos))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| Error::ModelFormat(format!("length {v} out of range")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn len(&mut self, elem_bytes: usize) -> Result<usize> {
        let n = self.u64()?;
        if n.saturating_mul(elem_bytes) > self.bytes.len() - self.pos {
            return Err(Error::ModelFormat(format!("truncated model file: {n} elements announced")));
        }
        Ok(n)
    }
    fn plane(&mut self) -> Result<Plane> {
        let n = self.len(8)?;
        let normal = (0..n).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
        Ok(Plane {
            normal: DVector::from_vec(normal),
            bias: self.f64()?,
        })
    }
}

pub fn write_model(model: &TwinModel) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(MODEL_FORMAT_VERSION);
    w.u8(match model.kind {
        ModelKind::Linear => 0,
        ModelKind::Kernel => 1,
    });
    w.u8(match model.kernel.kind {
        KernelKind::Linear => 0,
        KernelKind::Gaussian => 1,
    });
    w.f64(model.kernel.sigma);
    w.u8(u8::from(model.kernel.squared_exponent));
    w.plane(&model.plane_pos);
    w.plane(&model.plane_neg);
    if let Some(basis) = &model.basis {
        let (r, c) = basis.rows.shape();
        w.u64(r);
        w.u64(c);
        for i in 0..r {
            for j in 0..c {
                w.f64(basis.rows[(i, j)]);
            }
        }
        w.f64(basis.ratio);
    }
    match &model.norm_params {
        None => w.u8(0),
        Some(np) => {
            w.u8(1);
            w.u64(np.dim());
            for &(lo, hi) in &np.ranges {
                w.f64(lo);
                w.f64(hi);
            }
        }
    }
    w.0
}

pub fn read_model(bytes: &[u8]) -> Result<TwinModel> {
    let mut r = Reader { bytes, pos: 0 };
    if bytes.len() < MAGIC.len() || r.take(MAGIC.len())? != MAGIC {
        return Err(Error::ModelFormat("not a model file (bad magic bytes)".into()));
    }
    let version = r.u32()?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported model format version {version} (expected {MODEL_FORMAT_VERSION})"
        )));
    }
    let kind = match r.u8()? {
        0 => ModelKind::Linear,
        1 => ModelKind::Kernel,
        t => return Err(Error::ModelFormat(format!("unknown model kind {t}"))),
    };
    let kernel_kind = match r.u8()? {
        0 => KernelKind::Linear,
        1 => KernelKind::Gaussian,
        t => return Err(Error::ModelFormat(format!("unknown kernel kind {t}"))),
    };
    let sigma = r.f64()?;
    let squared_exponent = r.u8()? != 0;
    let kernel = KernelSpec {
        kind: kernel_kind,
        sigma,
        squared_exponent,
    };
    let plane_pos = r.plane()?;
    let plane_neg = r.plane()?;
    let basis = match kind {
        ModelKind::Linear => None,
        ModelKind::Kernel => {
            let rows = r.u64()?;
            let cols = r.len(8 * rows.max(1))?;
            let mut values = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                values.push(r.f64()?);
            }
            let ratio = r.f64()?;
            Some(KernelBasis {
                rows: DMatrix::from_row_slice(rows, cols, &values),
                ratio,
            })
        }
    };
    let norm_params = match r.u8()? {
        0 => None,
        1 => {
            let dim = r.len(16)?;
            let ranges = (0..dim)
                .map(|_| Ok((r.f64()?, r.f64()?)))
                .collect::<Result<Vec<_>>>()?;
            Some(NormParams { ranges })
        }
        t => return Err(Error::ModelFormat(format!("bad normalization flag {t}"))),
    };
    if r.pos != bytes.len() {
        return Err(Error::ModelFormat(format!(
            "{} trailing bytes after model",
            bytes.len() - r.pos
        )));
    }
    match basis {
        None => TwinModel::linear(plane_pos, plane_neg, norm_params),
        Some(basis) => TwinModel::kernel(plane_pos, plane_neg, kernel, basis, norm_params),
    }
}

pub fn save_model(model: &TwinModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TwinModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_model(&bytes)
}
