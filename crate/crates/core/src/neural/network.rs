//! Full network: embeddings, bi-LSTM, pooling and softmax heads.

use std::collections::BTreeMap;

use ndarray::{s, Array1, Array2};
use rand::Rng;

use super::embedding::{embed_rows, EmbeddingTables, Vocabulary, INIT_RANGE};
use super::lstm::{add_outer, backprop_direction, max_over_time_with_argmax, run_direction, LstmDirectionParams, StepCache};
use super::optim::apply_dropout;
use super::{Feature, ModelConfig, Task};
use crate::dpath::DepPath;
use crate::error::{Error, Result};

/// Anything that maps a dependency path to a distribution over named classes.
pub trait PathClassifier {
    fn classes(&self) -> &[String];

    /// Class probabilities in the order of [`PathClassifier::classes`].
    fn predict(&self, path: &DepPath) -> Vec<f64>;
}

/// Numerically stable softmax.
pub fn softmax(z: &Array1<f64>) -> Array1<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e = z.mapv(|v| (v - max).exp());
    let total = e.sum();
    e / total
}

/// `-log softmax(z)[target]`.
pub fn cross_entropy(logits: &Array1<f64>, target: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    lse - logits[target]
}

/// Output distribution of a head for a pooled vector `h`.
///
/// With `m_higher` this is `softmax(M_out · tanh(M_higher · h))`, otherwise
/// `softmax(M_out · h)`.
pub fn head_forward(h: &Array1<f64>, m_higher: Option<&Array2<f64>>, m_out: &Array2<f64>) -> Result<Array1<f64>> {
    let hidden = match m_higher {
        Some(m) => {
            if m.ncols() != h.len() {
                return Err(Error::Config(format!(
                    "M_higher expects {} inputs, got {}",
                    m.ncols(),
                    h.len()
                )));
            }
            m.dot(h).mapv(f64::tanh)
        }
        None => h.clone(),
    };
    if m_out.ncols() != hidden.len() {
        return Err(Error::Config(format!(
            "M_out expects {} inputs, got {}",
            m_out.ncols(),
            hidden.len()
        )));
    }
    Ok(softmax(&m_out.dot(&hidden)))
}

/// Everything the backward pass needs from a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub(crate) rows: Vec<[usize; 4]>,
    pub(crate) xs: Vec<Array1<f64>>,
    pub(crate) masks: Option<Vec<Array1<f64>>>,
    pub(crate) fw_steps: Vec<StepCache>,
    pub(crate) bw_steps: Vec<StepCache>,
    pub(crate) argmax: Vec<usize>,
    pub pooled: Array1<f64>,
    pub hidden: Option<Array1<f64>>,
    pub logits: Array1<f64>,
    pub probs: Array1<f64>,
}

impl ForwardCache {
    /// Summed bi-directional output at each position.
    pub fn outputs(&self) -> Vec<Array1<f64>> {
        let n = self.fw_steps.len();
        (0..n)
            .map(|t| &self.fw_steps[t].h + &self.bw_steps[n - 1 - t].h)
            .collect()
    }

    pub fn predicted(&self) -> usize {
        argmax(&self.probs)
    }
}

/// Index of the largest entry; the first wins on ties.
pub(crate) fn argmax(v: &Array1<f64>) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = k;
        }
    }
    best
}

/// Network weights together with vocabularies and class names.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    pub config: ModelConfig,
    pub classes: Vec<String>,
    pub embeddings: EmbeddingTables,
    pub forward: LstmDirectionParams,
    pub backward: LstmDirectionParams,
    /// `dim_higher × dim_lstm`; argument head only.
    pub m_higher: Option<Array2<f64>>,
    /// `classes × (dim_higher | dim_lstm)`.
    pub m_out: Array2<f64>,
}

fn check_shape(config: &ModelConfig, classes: &[String]) -> Result<()> {
    if classes.is_empty() {
        return Err(Error::Config("a network needs at least one class".into()));
    }
    if config.input_dim() == 0 || config.dim_lstm == 0 {
        return Err(Error::Config("input and LSTM dimensions must be positive".into()));
    }
    if config.task == Task::Argument && config.dim_higher == 0 {
        return Err(Error::Config("dim_higher must be positive for the argument head".into()));
    }
    Ok(())
}

impl NetworkParams {
    /// Randomly initialized network.
    pub fn random<R: Rng>(config: ModelConfig, classes: Vec<String>, vocabs: [Vocabulary; 4], rng: &mut R) -> Result<Self> {
        check_shape(&config, &classes)?;
        let embeddings = EmbeddingTables::random(&config, vocabs, rng);
        let dim_in = config.input_dim();
        let forward = LstmDirectionParams::random(dim_in, config.dim_lstm, rng);
        let backward = LstmDirectionParams::random(dim_in, config.dim_lstm, rng);
        let mut uniform =
            |r, c| Array2::from_shape_simple_fn((r, c), || rng.gen_range(-INIT_RANGE..=INIT_RANGE));
        let (m_higher, out_in) = match config.task {
            Task::Argument => (Some(uniform(config.dim_higher, config.dim_lstm)), config.dim_higher),
            Task::Preposition => (None, config.dim_lstm),
        };
        let m_out = uniform(classes.len(), out_in);
        Ok(NetworkParams {
            config,
            classes,
            embeddings,
            forward,
            backward,
            m_higher,
            m_out,
        })
    }

    /// All-zero network of the right shape.
    pub fn zeros(config: ModelConfig, classes: Vec<String>, vocabs: [Vocabulary; 4]) -> Result<Self> {
        let mut params = Self::random(config, classes, vocabs, &mut rand::rngs::mock::StepRng::new(0, 0))?;
        for t in params.tensors_mut() {
            t.fill(0.0);
        }
        Ok(params)
    }

    pub fn class_index(&self, class: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == class)
    }

    /// Names of all tensors, in the order of [`NetworkParams::tensors`].
    pub fn tensor_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Feature::ALL.iter().map(|f| format!("M_{}", f.name())).collect();
        names.extend(LstmDirectionParams::tensor_names("fw"));
        names.extend(LstmDirectionParams::tensor_names("bw"));
        if self.m_higher.is_some() {
            names.push("M_higher".into());
        }
        names.push("M_out".into());
        names
    }

    pub fn tensor_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes: Vec<Vec<usize>> = self.embeddings.tables.iter().map(|t| t.matrix.shape().to_vec()).collect();
        for dir in [&self.forward, &self.backward] {
            for m in dir.w.iter().chain(&dir.u).chain(&dir.v) {
                shapes.push(m.shape().to_vec());
            }
            for b in &dir.b {
                shapes.push(b.shape().to_vec());
            }
        }
        if let Some(m) = &self.m_higher {
            shapes.push(m.shape().to_vec());
        }
        shapes.push(self.m_out.shape().to_vec());
        shapes
    }

    /// Flat views of every tensor in row-major order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self
            .embeddings
            .tables
            .iter()
            .map(|t| t.matrix.as_slice().expect("standard layout"))
            .collect();
        out.extend(self.forward.tensors());
        out.extend(self.backward.tensors());
        if let Some(m) = &self.m_higher {
            out.push(m.as_slice().expect("standard layout"));
        }
        out.push(self.m_out.as_slice().expect("standard layout"));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self
            .embeddings
            .tables
            .iter_mut()
            .map(|t| t.matrix.as_slice_mut().expect("standard layout"))
            .collect();
        out.extend(self.forward.tensors_mut());
        out.extend(self.backward.tensors_mut());
        if let Some(m) = &mut self.m_higher {
            out.push(m.as_slice_mut().expect("standard layout"));
        }
        out.push(self.m_out.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Forward pass without dropout.
    pub fn forward(&self, path: &DepPath) -> ForwardCache {
        let rows: Vec<[usize; 4]> = path.nodes.iter().map(|n| self.embeddings.rows(n)).collect();
        let xs = rows.iter().map(|r| embed_rows(r, &self.embeddings)).collect();
        self.forward_inputs(rows, xs, None)
    }

    /// Forward pass with inverted dropout of rate `p` on the inputs.
    pub fn forward_dropout<R: Rng>(&self, path: &DepPath, p: f64, rng: &mut R) -> ForwardCache {
        if p <= 0.0 {
            return self.forward(path);
        }
        let rows: Vec<[usize; 4]> = path.nodes.iter().map(|n| self.embeddings.rows(n)).collect();
        let mut xs = Vec::with_capacity(rows.len());
        let mut masks = Vec::with_capacity(rows.len());
        for r in &rows {
            let (x, mask) = apply_dropout(&embed_rows(r, &self.embeddings), p, rng);
            xs.push(x);
            masks.push(mask);
        }
        self.forward_inputs(rows, xs, Some(masks))
    }

    fn forward_inputs(&self, rows: Vec<[usize; 4]>, xs: Vec<Array1<f64>>, masks: Option<Vec<Array1<f64>>>) -> ForwardCache {
        let fw_in: Vec<&Array1<f64>> = xs.iter().collect();
        let bw_in: Vec<&Array1<f64>> = xs.iter().rev().collect();
        let fw_steps = run_direction(&self.forward, &fw_in);
        let bw_steps = run_direction(&self.backward, &bw_in);
        let n = xs.len();
        let hs: Vec<Array1<f64>> = (0..n).map(|t| &fw_steps[t].h + &bw_steps[n - 1 - t].h).collect();
        let (pooled, argmax) = max_over_time_with_argmax(&hs);
        let hidden = self.m_higher.as_ref().map(|m| m.dot(&pooled).mapv(f64::tanh));
        let logits = self.m_out.dot(hidden.as_ref().unwrap_or(&pooled));
        let probs = softmax(&logits);
        ForwardCache {
            rows,
            xs,
            masks,
            fw_steps,
            bw_steps,
            argmax,
            pooled,
            hidden,
            logits,
            probs,
        }
    }

    /// Cross-entropy loss of `target` and its gradient for a cached forward pass.
    pub fn backward(&self, cache: &ForwardCache, target: usize) -> (f64, Gradients) {
        let mut grads = Gradients::zeros(self);
        let loss = cross_entropy(&cache.logits, target);
        let mut dlogits = cache.probs.clone();
        dlogits[target] -= 1.0;

        let top = cache.hidden.as_ref().unwrap_or(&cache.pooled);
        add_outer(&mut grads.m_out, &dlogits, top);
        let dtop = self.m_out.t().dot(&dlogits);
        let dpooled = match (&self.m_higher, &cache.hidden, &mut grads.m_higher) {
            (Some(m), Some(a), Some(gm)) => {
                let dpre = dtop * a.mapv(|v| 1.0 - v * v);
                add_outer(gm, &dpre, &cache.pooled);
                m.t().dot(&dpre)
            }
            _ => dtop,
        };

        let n = cache.xs.len();
        let dim = self.config.dim_lstm;
        let mut dh = vec![Array1::<f64>::zeros(dim); n];
        for (k, &t) in cache.argmax.iter().enumerate() {
            dh[t][k] += dpooled[k];
        }
        let fw_in: Vec<&Array1<f64>> = cache.xs.iter().collect();
        let bw_in: Vec<&Array1<f64>> = cache.xs.iter().rev().collect();
        let dh_rev: Vec<Array1<f64>> = dh.iter().rev().cloned().collect();
        let dx_fw = backprop_direction(&self.forward, &fw_in, &cache.fw_steps, &dh, &mut grads.forward);
        let dx_bw = backprop_direction(&self.backward, &bw_in, &cache.bw_steps, &dh_rev, &mut grads.backward);

        for t in 0..n {
            let mut dx = &dx_fw[t] + &dx_bw[n - 1 - t];
            if let Some(masks) = &cache.masks {
                dx *= &masks[t];
            }
            let mut offset = 0;
            for (f, table) in self.embeddings.tables.iter().enumerate() {
                let width = table.dim();
                if width > 0 {
                    let slice = dx.slice(s![offset..offset + width]);
                    grads.embeddings[f]
                        .entry(cache.rows[t][f])
                        .and_modify(|g| *g += &slice)
                        .or_insert_with(|| slice.to_owned());
                }
                offset += width;
            }
        }
        (loss, grads)
    }

    /// Loss and gradients for one path without dropout.
    pub fn loss_and_gradients(&self, path: &DepPath, target: usize) -> (f64, Gradients) {
        let cache = self.forward(path);
        self.backward(&cache, target)
    }

    /// Loss for one path without dropout.
    pub fn loss(&self, path: &DepPath, target: usize) -> f64 {
        cross_entropy(&self.forward(path).logits, target)
    }
}

impl PathClassifier for NetworkParams {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn predict(&self, path: &DepPath) -> Vec<f64> {
        self.forward(path).probs.to_vec()
    }
}

/// Parameter gradients. Embedding gradients are kept per touched row.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub embeddings: [BTreeMap<usize, Array1<f64>>; 4],
    pub forward: LstmDirectionParams,
    pub backward: LstmDirectionParams,
    pub m_higher: Option<Array2<f64>>,
    pub m_out: Array2<f64>,
}

impl Gradients {
    pub fn zeros(params: &NetworkParams) -> Self {
        let dim_in = params.forward.input_dim();
        let dim_l = params.config.dim_lstm;
        Gradients {
            embeddings: Default::default(),
            forward: LstmDirectionParams::zeros(dim_in, dim_l),
            backward: LstmDirectionParams::zeros(dim_in, dim_l),
            m_higher: params.m_higher.as_ref().map(|m| Array2::zeros(m.raw_dim())),
            m_out: Array2::zeros(params.m_out.raw_dim()),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (mine, theirs) in self.embeddings.iter_mut().zip(&other.embeddings) {
            for (&row, g) in theirs {
                mine.entry(row).and_modify(|m| *m += g).or_insert_with(|| g.clone());
            }
        }
        self.forward.add_assign(&other.forward);
        self.backward.add_assign(&other.backward);
        if let (Some(a), Some(b)) = (&mut self.m_higher, &other.m_higher) {
            *a += b;
        }
        self.m_out += &other.m_out;
    }

    pub fn scale(&mut self, factor: f64) {
        for table in &mut self.embeddings {
            for g in table.values_mut() {
                *g *= factor;
            }
        }
        self.forward.scale(factor);
        self.backward.scale(factor);
        if let Some(m) = &mut self.m_higher {
            *m *= factor;
        }
        self.m_out *= factor;
    }

    /// Dense copies of all gradients, aligned with [`NetworkParams::tensors`].
    pub fn dense(&self, params: &NetworkParams) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for (f, table) in params.embeddings.tables.iter().enumerate() {
            let mut m = Array2::<f64>::zeros(table.matrix.raw_dim());
            for (&row, g) in &self.embeddings[f] {
                m.row_mut(row).assign(g);
            }
            out.push(m.into_raw_vec_and_offset().0);
        }
        out.extend(self.forward.tensors().into_iter().map(<[f64]>::to_vec));
        out.extend(self.backward.tensors().into_iter().map(<[f64]>::to_vec));
        if let Some(m) = &self.m_higher {
            out.push(m.as_slice().expect("standard layout").to_vec());
        }
        out.push(self.m_out.as_slice().expect("standard layout").to_vec());
        out
    }
}
