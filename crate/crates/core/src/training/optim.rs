use crate::heads::Tensors;
use crate::{Error, Result};

/// Adam moments and step counter for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl OptimizerState {
    pub fn new(params: &dyn Tensors) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        OptimizerState {
            first_moment: zeros.clone(),
            second_moment: zeros,
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Whether decoupled weight decay applies to the named tensor. Posterior scale parameters
/// (`*.rho`) are exempt.
pub fn decays(name: &str) -> bool {
    !name.ends_with(".rho")
}

/// One AdamW update: `θ ← θ·(1 − lr·wd)` for decayed tensors, then the bias-corrected Adam
/// step `θ ← θ − lr·m̂/(√v̂ + ε)`.
pub fn adamw_step(
    state: &mut OptimizerState,
    params: &mut dyn Tensors,
    grads: &dyn Tensors,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    let grads = grads.tensors();
    let mut params = params.tensors_mut();
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(Error::Dimension(format!(
            "{} parameter tensors, {} gradient tensors, {} optimizer slots",
            params.len(),
            grads.len(),
            state.first_moment.len()
        )));
    }
    for (k, ((pname, p), (gname, g))) in params.iter().zip(&grads).enumerate() {
        if pname != gname || p.len() != g.len() || state.first_moment[k].len() != p.len() {
            return Err(Error::Dimension(format!(
                "tensor {k}: parameter '{pname}' ({}) vs gradient '{gname}' ({})",
                p.len(),
                g.len()
            )));
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (k, ((name, p), (_, g))) in params.iter_mut().zip(&grads).enumerate() {
        let decay = if decays(name) { 1.0 - lr * weight_decay } else { 1.0 };
        let m = &mut state.first_moment[k];
        let v = &mut state.second_moment[k];
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
            let mhat = m[i] / c1;
            let vhat = v[i] / c2;
            p[i] = p[i] * decay - lr * mhat / (vhat.sqrt() + state.eps);
        }
    }
    Ok(())
}
