use crate::error::{Error, Result};
use crate::model::ParameterSet;

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &ParameterSet) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .named_tensors()
            .iter()
            .map(|(_, t)| vec![0.0; t.data().len()])
            .collect();
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update of every tensor in `params`.
pub fn adam_step(
    params: &mut ParameterSet,
    grads: &ParameterSet,
    state: &mut AdamState,
    learning_rate: f64,
) -> Result<()> {
    let grad_tensors = grads.named_tensors();
    let mut targets = params.tensors_mut();
    if targets.len() != grad_tensors.len() || targets.len() != state.m.len() {
        return Err(Error::Dimension {
            expected: targets.len(),
            found: grad_tensors.len(),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for (i, theta) in targets.iter_mut().enumerate() {
        let (name, g) = &grad_tensors[i];
        if theta.shape() != g.shape() {
            return Err(Error::Config(format!("gradient shape mismatch for `{name}`")));
        }
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for (k, (w, &gk)) in theta.data_mut().iter_mut().zip(g.data()).enumerate() {
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * gk;
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * gk * gk;
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            *w -= learning_rate * m_hat / (v_hat.sqrt() + state.eps);
        }
    }
    Ok(())
}
