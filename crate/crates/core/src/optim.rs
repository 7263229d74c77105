//! Adam optimizer and polyak (soft) target-network updates.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::nn::{GradientBundle, MlpNetwork};

/// Per-parameter Adam moment estimates for one network.
#[derive(Debug, Clone)]
pub struct AdamState {
    m_weights: Vec<Array2<f64>>,
    v_weights: Vec<Array2<f64>>,
    m_biases: Vec<Array1<f64>>,
    v_biases: Vec<Array1<f64>>,
    step_count: u64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
}

impl AdamState {
    /// Fresh state shaped like `net`'s parameters, with the standard
    /// moment decays (0.9, 0.999) and epsilon 1e-8.
    pub fn new(net: &MlpNetwork) -> Self {
        AdamState {
            m_weights: net.weights().iter().map(|w| Array2::zeros(w.dim())).collect(),
            v_weights: net.weights().iter().map(|w| Array2::zeros(w.dim())).collect(),
            m_biases: net.biases().iter().map(|b| Array1::zeros(b.len())).collect(),
            v_biases: net.biases().iter().map(|b| Array1::zeros(b.len())).collect(),
            step_count: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// One Adam step on `net` in the direction that *decreases* the loss
    /// whose gradient is `grads`. If any gradient component is non-finite
    /// the update is rejected: parameters and moments are left untouched
    /// and a numerical-fault error is returned.
    pub fn step(&mut self, net: &mut MlpNetwork, grads: &GradientBundle, lr: f64) -> Result<()> {
        if !grads.all_finite() {
            return Err(Error::Numerical(
                "non-finite gradient component; update rejected".into(),
            ));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        let (beta1, beta2, eps) = (self.beta1, self.beta2, self.epsilon);
        let (weights, biases) = net.params_mut();
        for l in 0..weights.len() {
            ndarray::Zip::from(&mut weights[l])
                .and(&mut self.m_weights[l])
                .and(&mut self.v_weights[l])
                .and(&grads.d_weights[l])
                .for_each(|w, m, v, &g| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *w -= lr * (*m / bias1) / ((*v / bias2).sqrt() + eps);
                });
            ndarray::Zip::from(&mut biases[l])
                .and(&mut self.m_biases[l])
                .and(&mut self.v_biases[l])
                .and(&grads.d_biases[l])
                .for_each(|w, m, v, &g| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *w -= lr * (*m / bias1) / ((*v / bias2).sqrt() + eps);
                });
        }
        Ok(())
    }
}

/// Polyak-average `online` into `target`: `target ← tau·online + (1-tau)·target`.
/// Both networks must share a topology.
pub fn soft_update(target: &mut MlpNetwork, online: &MlpNetwork, tau: f64) {
    assert_eq!(target.layer_dims(), online.layer_dims(), "topology mismatch");
    assert!((0.0..=1.0).contains(&tau), "tau out of range: {tau}");
    let online_w: Vec<_> = online.weights().to_vec();
    let online_b: Vec<_> = online.biases().to_vec();
    let (weights, biases) = target.params_mut();
    for l in 0..weights.len() {
        ndarray::Zip::from(&mut weights[l])
            .and(&online_w[l])
            .for_each(|t, &o| *t = tau * o + (1.0 - tau) * *t);
        ndarray::Zip::from(&mut biases[l])
            .and(&online_b[l])
            .for_each(|t, &o| *t = tau * o + (1.0 - tau) * *t);
    }
}
