//! Dense head: `logit = w2 · relu(W1 x + b1) + b2`.

use super::{relu_inplace, HeadConfig, Tensors};
use crate::numerics::{dot, gemm, Matrix, RngStream, Trans};
use crate::training::bce_loss;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DnnParams {
    /// `hidden × d`
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl DnnParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        DnnParams {
            w1: Matrix::zeros(hidden, input_dim),
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    /// Uniform `±1/√fan_in` initialization for both layers.
    pub fn init(cfg: &HeadConfig, rng: &mut RngStream) -> Self {
        let (d, h) = (cfg.input_dim, cfg.hidden);
        let a1 = 1.0 / (d as f64).sqrt();
        let a2 = 1.0 / (h as f64).sqrt();
        let w1 = Matrix::from_fn(h, d, |_, _| rng.uniform_range(-a1, a1));
        let b1 = (0..h).map(|_| rng.uniform_range(-a1, a1)).collect();
        let w2 = (0..h).map(|_| rng.uniform_range(-a2, a2)).collect();
        let b2 = rng.uniform_range(-a2, a2);
        DnnParams { w1, b1, w2, b2 }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn hidden(&self) -> usize {
        self.w1.rows()
    }
}

impl Tensors for DnnParams {
    fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("w1", self.w1.as_slice()),
            ("b1", &self.b1),
            ("w2", &self.w2),
            ("b2", std::slice::from_ref(&self.b2)),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("w1", self.w1.as_mut_slice()),
            ("b1", &mut self.b1),
            ("w2", &mut self.w2),
            ("b2", std::slice::from_mut(&mut self.b2)),
        ]
    }
}

struct Cache {
    /// pre-activations, `n × hidden`
    z1: Matrix,
    /// `relu(z1)`
    a1: Matrix,
    logits: Vec<f64>,
}

fn forward_cached(p: &DnnParams, x: &Matrix) -> Result<Cache> {
    if x.cols() != p.input_dim() {
        return Err(Error::Dimension(format!(
            "input has {} columns, dense head expects {}",
            x.cols(),
            p.input_dim()
        )));
    }
    let mut z1 = gemm(1.0, x, Trans::No, &p.w1, Trans::Yes);
    z1.add_row_vector(&p.b1);
    let mut a1 = z1.clone();
    relu_inplace(&mut a1);
    let logits = (0..x.rows()).map(|i| dot(a1.row(i), &p.w2) + p.b2).collect();
    Ok(Cache { z1, a1, logits })
}

/// Logits for each row of `x`.
pub fn dnn_forward(p: &DnnParams, x: &Matrix) -> Result<Vec<f64>> {
    forward_cached(p, x).map(|c| c.logits)
}

pub(crate) fn dnn_gradient(p: &DnnParams, x: &Matrix, labels: &[u8]) -> Result<(f64, DnnParams)> {
    let cache = forward_cached(p, x)?;
    let (loss, dlogits) = bce_loss(&cache.logits, labels)?;
    let n = x.rows();
    let h = p.hidden();

    let mut g = DnnParams::zeros(p.input_dim(), h);
    g.b2 = dlogits.iter().sum();
    // dz1 = dlogit · w2 ⊙ 1[z1 > 0]
    let mut dz1 = Matrix::zeros(n, h);
    for i in 0..n {
        let dl = dlogits[i];
        let a = cache.a1.row(i);
        let z = cache.z1.row(i);
        for j in 0..h {
            g.w2[j] += dl * a[j];
        }
        let row = dz1.row_mut(i);
        for j in 0..h {
            row[j] = if z[j] > 0.0 { dl * p.w2[j] } else { 0.0 };
        }
    }
    g.w1 = gemm(1.0, &dz1, Trans::Yes, x, Trans::No);
    g.b1 = dz1.column_sums();
    Ok((loss, g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_params_give_zero_logits() {
        let p = DnnParams::zeros(3, 5);
        let x = Matrix::from_fn(4, 3, |i, j| (i * j) as f64 - 1.5);
        assert_eq!(dnn_forward(&p, &x).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn hand_arithmetic() {
        let p = DnnParams {
            w1: Matrix::from_vec(1, 1, vec![1.0]).unwrap(),
            b1: vec![0.0],
            w2: vec![2.0],
            b2: 1.0,
        };
        let x = Matrix::from_vec(1, 1, vec![3.0]).unwrap();
        assert_eq!(dnn_forward(&p, &x).unwrap(), vec![7.0]);
        let x = Matrix::from_vec(1, 1, vec![-3.0]).unwrap();
        assert_eq!(dnn_forward(&p, &x).unwrap(), vec![1.0]);
    }

    #[test]
    fn shape_mismatch() {
        let p = DnnParams::zeros(3, 2);
        assert!(matches!(dnn_forward(&p, &Matrix::zeros(1, 4)), Err(Error::Dimension(_))));
    }

    #[test]
    fn saturated_correct_logits_have_vanishing_gradient() {
        let p = DnnParams {
            w1: Matrix::from_vec(1, 1, vec![1.0]).unwrap(),
            b1: vec![0.0],
            w2: vec![20.0],
            b2: 0.0,
        };
        // logits 40 and 60 with positive labels
        let x = Matrix::from_vec(2, 1, vec![2.0, 3.0]).unwrap();
        let (_, g) = dnn_gradient(&p, &x, &[1, 1]).unwrap();
        let norm: f64 = g.tensors().iter().flat_map(|(_, t)| t.iter()).map(|v| v * v).sum();
        assert!(norm.sqrt() < 1e-10);
    }
}
