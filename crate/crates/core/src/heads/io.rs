//! Single-file model format.
//!
//! ```text
//! magic        8 bytes  "UQHEADv1"
//! head kind    u8       0 = DNN, 1 = BNN, 2 = SNGP
//! config       input_dim u64, hidden u64, rff_dim u64, spectral_bound f64, ridge f64,
//!              mean_field_lambda f64, k_samples u64, prior_std f64
//! train seed   u64
//! tensors      until end of file, each:
//!              name_len u32, name (UTF-8), rank u32, dims u64 × rank, values f64 × Π dims
//! ```
//!
//! All integers and floats are little-endian.

use std::collections::BTreeMap;
use std::path::Path;

use super::sngp::CovFactor;
use super::{BnnParams, DnnParams, HeadConfig, HeadKind, HeadParams, Model, SngpParams};
use crate::numerics::Matrix;
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 8] = b"UQHEADv1";

struct Tensor {
    dims: Vec<usize>,
    values: Vec<f64>,
}

fn put_tensor(out: &mut Vec<u8>, name: &str, dims: &[usize], values: &[f64]) {
    debug_assert_eq!(dims.iter().product::<usize>(), values.len());
    out.extend_from_slice(&(name.len() as u32).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn put_matrix(out: &mut Vec<u8>, name: &str, m: &Matrix) {
    put_tensor(out, name, &[m.rows(), m.cols()], m.as_slice());
}

fn put_vec(out: &mut Vec<u8>, name: &str, v: &[f64]) {
    put_tensor(out, name, &[v.len()], v);
}

fn put_scalar(out: &mut Vec<u8>, name: &str, v: f64) {
    put_tensor(out, name, &[], &[v]);
}

/// Encodes a model into the on-disk byte layout.
pub fn model_to_bytes(model: &Model) -> Vec<u8> {
    let cfg = &model.config;
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.push(model.kind().to_byte());
    out.extend_from_slice(&(cfg.input_dim as u64).to_le_bytes());
    out.extend_from_slice(&(cfg.hidden as u64).to_le_bytes());
    out.extend_from_slice(&(cfg.rff_dim as u64).to_le_bytes());
    out.extend_from_slice(&cfg.spectral_bound.to_le_bytes());
    out.extend_from_slice(&cfg.ridge.to_le_bytes());
    out.extend_from_slice(&cfg.mean_field_lambda.to_le_bytes());
    out.extend_from_slice(&(cfg.k_samples as u64).to_le_bytes());
    out.extend_from_slice(&cfg.prior_std.to_le_bytes());
    out.extend_from_slice(&model.train_seed.to_le_bytes());

    match &model.params {
        HeadParams::Dnn(p) => {
            put_matrix(&mut out, "w1", &p.w1);
            put_vec(&mut out, "b1", &p.b1);
            put_vec(&mut out, "w2", &p.w2);
            put_scalar(&mut out, "b2", p.b2);
        }
        HeadParams::Bnn(p) => {
            put_matrix(&mut out, "w1.mu", &p.w1_mu);
            put_matrix(&mut out, "w1.rho", &p.w1_rho);
            put_vec(&mut out, "b1.mu", &p.b1_mu);
            put_vec(&mut out, "b1.rho", &p.b1_rho);
            put_vec(&mut out, "w2.mu", &p.w2_mu);
            put_vec(&mut out, "w2.rho", &p.w2_rho);
            put_scalar(&mut out, "b2.mu", p.b2_mu);
            put_scalar(&mut out, "b2.rho", p.b2_rho);
        }
        HeadParams::Sngp(p) => {
            put_matrix(&mut out, "w_hid", &p.w_hid);
            put_vec(&mut out, "sn_u", &p.sn_u);
            put_vec(&mut out, "sn_v", &p.sn_v);
            put_vec(&mut out, "b_hid", &p.b_hid);
            put_matrix(&mut out, "w_rff", &p.w_rff);
            put_vec(&mut out, "b_rff", &p.b_rff);
            put_vec(&mut out, "beta", &p.beta);
            put_matrix(&mut out, "precision", &p.precision);
            if let Some(c) = &p.covariance {
                put_matrix(&mut out, "covariance", c);
            }
            put_scalar(&mut out, "finalized", if p.finalized { 1.0 } else { 0.0 });
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::format(
                self.path,
                format!(
                    "truncated {what}: need {n} bytes at offset {}, file has {}",
                    self.pos,
                    self.buf.len()
                ),
            )),
        }
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let v = self.u64(what)?;
        usize::try_from(v).map_err(|_| Error::format(self.path, format!("{what} {v} too large")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

/// Decodes the on-disk byte layout; `path` only labels errors.
pub fn model_from_bytes(buf: &[u8], path: &Path) -> Result<Model> {
    let mut c = Cursor { buf, pos: 0, path };
    if c.take(8, "magic")? != MODEL_MAGIC {
        return Err(Error::format(path, "bad magic (expected \"UQHEADv1\")"));
    }
    let kind_byte = c.u8("head kind")?;
    let kind = HeadKind::from_byte(kind_byte)
        .ok_or_else(|| Error::format(path, format!("unknown head kind byte {kind_byte}")))?;
    let config = HeadConfig {
        input_dim: c.usize("input_dim")?,
        hidden: c.usize("hidden")?,
        rff_dim: c.usize("rff_dim")?,
        spectral_bound: c.f64("spectral_bound")?,
        ridge: c.f64("ridge")?,
        mean_field_lambda: c.f64("mean_field_lambda")?,
        k_samples: c.usize("k_samples")?,
        prior_std: c.f64("prior_std")?,
    };
    config
        .validate()
        .map_err(|e| Error::format(path, e.to_string()))?;
    let train_seed = c.u64("train seed")?;

    let mut tensors = BTreeMap::new();
    while !c.done() {
        let len = c.u32("tensor name length")? as usize;
        let name = std::str::from_utf8(c.take(len, "tensor name")?)
            .map_err(|_| Error::format(path, "tensor name is not UTF-8"))?
            .to_owned();
        let rank = c.u32("tensor rank")? as usize;
        if rank > 2 {
            return Err(Error::format(path, format!("tensor '{name}' has rank {rank}")));
        }
        let dims = (0..rank)
            .map(|_| c.usize("tensor dim"))
            .collect::<Result<Vec<_>>>()?;
        let count = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .filter(|&n| n.checked_mul(8).is_some())
            .ok_or_else(|| Error::format(path, format!("tensor '{name}' is too large")))?;
        let raw = c.take(count * 8, &format!("tensor '{name}' values"))?;
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::format(path, format!("tensor '{name}' has non-finite values")));
        }
        if tensors.insert(name.clone(), Tensor { dims, values }).is_some() {
            return Err(Error::format(path, format!("duplicate tensor '{name}'")));
        }
    }

    let mut reader = TensorSet { tensors, path };
    let (d, h, dd) = (config.input_dim, config.hidden, config.rff_dim);
    let params = match kind {
        HeadKind::Dnn => HeadParams::Dnn(DnnParams {
            w1: reader.matrix("w1", h, d)?,
            b1: reader.vec("b1", h)?,
            w2: reader.vec("w2", h)?,
            b2: reader.scalar("b2")?,
        }),
        HeadKind::Bnn => HeadParams::Bnn(BnnParams {
            w1_mu: reader.matrix("w1.mu", h, d)?,
            w1_rho: reader.matrix("w1.rho", h, d)?,
            b1_mu: reader.vec("b1.mu", h)?,
            b1_rho: reader.vec("b1.rho", h)?,
            w2_mu: reader.vec("w2.mu", h)?,
            w2_rho: reader.vec("w2.rho", h)?,
            b2_mu: reader.scalar("b2.mu")?,
            b2_rho: reader.scalar("b2.rho")?,
        }),
        HeadKind::Sngp => {
            let covariance = if reader.tensors.contains_key("covariance") {
                Some(reader.matrix("covariance", dd, dd)?)
            } else {
                None
            };
            let finalized = reader.scalar("finalized")? != 0.0;
            let cov_factor = match (&covariance, finalized) {
                (None, true) => {
                    return Err(Error::format(path, "finalized SNGP model without covariance"))
                }
                (Some(c), true) => Some(CovFactor::new(c).map_err(|_| {
                    Error::format(path, "SNGP covariance is not positive definite")
                })?),
                _ => None,
            };
            HeadParams::Sngp(SngpParams {
                w_hid: reader.matrix("w_hid", h, d)?,
                sn_u: reader.vec("sn_u", h)?,
                sn_v: reader.vec("sn_v", d)?,
                b_hid: reader.vec("b_hid", h)?,
                w_rff: reader.matrix("w_rff", dd, h)?,
                b_rff: reader.vec("b_rff", dd)?,
                beta: reader.vec("beta", dd)?,
                precision: reader.matrix("precision", dd, dd)?,
                covariance,
                finalized,
                cov_factor,
            })
        }
    };
    if let Some(extra) = reader.tensors.keys().next() {
        return Err(Error::format(path, format!("unexpected tensor '{extra}'")));
    }
    Ok(Model {
        config,
        params,
        train_seed,
    })
}

struct TensorSet<'a> {
    tensors: BTreeMap<String, Tensor>,
    path: &'a Path,
}

impl TensorSet<'_> {
    fn get(&mut self, name: &str, dims: &[usize]) -> Result<Vec<f64>> {
        let t = self
            .tensors
            .remove(name)
            .ok_or_else(|| Error::format(self.path, format!("missing tensor '{name}'")))?;
        if t.dims != dims {
            return Err(Error::format(
                self.path,
                format!("tensor '{name}' has dims {:?}, expected {dims:?}", t.dims),
            ));
        }
        Ok(t.values)
    }

    fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<Matrix> {
        let v = self.get(name, &[rows, cols])?;
        Matrix::from_vec(rows, cols, v)
    }

    fn vec(&mut self, name: &str, len: usize) -> Result<Vec<f64>> {
        self.get(name, &[len])
    }

    fn scalar(&mut self, name: &str) -> Result<f64> {
        Ok(self.get(name, &[])?[0])
    }
}

pub fn write_model(path: impl AsRef<Path>, model: &Model) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&buf, path)
}
