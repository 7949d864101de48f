//! ADAM and input dropout.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::{Gradients, NetworkParams};
use super::Feature;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected ADAM step at time `t` (starting from 1).
pub fn adam_update(param: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64], t: u64, config: &AdamConfig) {
    let c1 = 1.0 - config.beta1.powi(t as i32);
    let c2 = 1.0 - config.beta2.powi(t as i32);
    for k in 0..param.len() {
        m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * grad[k];
        v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * grad[k] * grad[k];
        let m_hat = m[k] / c1;
        let v_hat = v[k] / c2;
        param[k] -= config.lr * m_hat / (v_hat.sqrt() + config.eps);
    }
}

/// Inverted dropout: zeroes each entry with probability `p` and scales the
/// survivors by `1 / (1 - p)`. Returns the result and the applied scale.
pub fn apply_dropout<R: Rng>(x: &Array1<f64>, p: f64, rng: &mut R) -> (Array1<f64>, Array1<f64>) {
    assert!((0.0..1.0).contains(&p), "dropout rate must be in [0, 1)");
    let keep = 1.0 / (1.0 - p);
    let mask = x.mapv(|_| if rng.gen::<f64>() < p { 0.0 } else { keep });
    (x * &mask, mask)
}

/// ADAM state for a whole network.
///
/// Embedding rows are only updated once they have received a gradient; an
/// untouched row has zero moments, so skipping it is the same as updating it.
#[derive(Clone, Debug)]
pub struct Adam {
    pub config: AdamConfig,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    emb_m: [Array2<f64>; 4],
    emb_v: [Array2<f64>; 4],
    touched: [Vec<bool>; 4],
}

impl Adam {
    pub fn new(params: &NetworkParams, config: AdamConfig) -> Self {
        let dense: Vec<Vec<f64>> = params.tensors()[4..].iter().map(|t| vec![0.0; t.len()]).collect();
        let shape = |f: usize| params.embeddings.tables[f].matrix.raw_dim();
        Adam {
            config,
            t: 0,
            m: dense.clone(),
            v: dense,
            emb_m: std::array::from_fn(|f| Array2::zeros(shape(f))),
            emb_v: std::array::from_fn(|f| Array2::zeros(shape(f))),
            touched: std::array::from_fn(|f| vec![false; shape(f)[0]]),
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Applies one step. With `freeze_word` the word embeddings stay fixed.
    pub fn step(&mut self, params: &mut NetworkParams, grads: &Gradients, freeze_word: bool) {
        self.t += 1;
        let t = self.t;
        let config = self.config;

        for f in Feature::ALL {
            let k = f as usize;
            if f == Feature::Word && freeze_word {
                continue;
            }
            for &row in grads.embeddings[k].keys() {
                self.touched[k][row] = true;
            }
            let table = &mut params.embeddings.tables[k].matrix;
            let width = table.ncols();
            let zero = vec![0.0; width];
            for row in 0..self.touched[k].len() {
                if !self.touched[k][row] {
                    continue;
                }
                let g = grads.embeddings[k].get(&row);
                let g = g.map(|a| a.as_slice().expect("standard layout")).unwrap_or(&zero);
                adam_update(
                    table.row_mut(row).into_slice().expect("standard layout"),
                    g,
                    self.emb_m[k].row_mut(row).into_slice().expect("standard layout"),
                    self.emb_v[k].row_mut(row).into_slice().expect("standard layout"),
                    t,
                    &config,
                );
            }
        }

        let dense = grads.dense_without_embeddings();
        let mut tensors = params.tensors_mut();
        for (i, g) in dense.iter().enumerate() {
            adam_update(&mut *tensors[4 + i], g, &mut self.m[i], &mut self.v[i], t, &config);
        }
    }
}

impl Gradients {
    pub(crate) fn dense_without_embeddings(&self) -> Vec<&[f64]> {
        let mut out = self.forward.tensors();
        out.extend(self.backward.tensors());
        if let Some(m) = &self.m_higher {
            out.push(m.as_slice().expect("standard layout"));
        }
        out.push(self.m_out.as_slice().expect("standard layout"));
        out
    }
}
