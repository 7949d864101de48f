//! Peephole LSTM directions.
//!
//! One step, with `h'`, `c'` the state of the previous step in processing
//! order (`t-1` forward, `t+1` backward):
//!
//! ```text
//! f = σ(W_f x + U_f h' + V_f c' + b_f)
//! i = σ(W_i x + U_i h' + V_i c' + b_i)
//! g = tanh(W_g x + U_g h' + b_g)
//! c = i ⊙ g + f ⊙ c'
//! o = σ(W_o x + U_o h' + V_o c + b_o)
//! h = o ⊙ tanh(c)
//! ```
//!
//! The backward direction is the forward recurrence run over the reversed
//! sequence, with its outputs reversed back into position order.

use ndarray::{Array1, Array2};
use rand::Rng;

use super::embedding::INIT_RANGE;

/// Gate order used for the `w`, `u` and `b` arrays.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Forget = 0,
    Input = 1,
    Candidate = 2,
    Output = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Forget, Gate::Input, Gate::Candidate, Gate::Output];

    /// Position in the peephole array; the candidate gate has none.
    pub fn peephole(self) -> Option<usize> {
        match self {
            Gate::Forget => Some(0),
            Gate::Input => Some(1),
            Gate::Candidate => None,
            Gate::Output => Some(2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gate::Forget => "f",
            Gate::Input => "i",
            Gate::Candidate => "g",
            Gate::Output => "o",
        }
    }
}

/// Parameters of one LSTM direction.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmDirectionParams {
    /// Input weights, `dim_lstm × dim_in`, gates f, i, g, o.
    pub w: [Array2<f64>; 4],
    /// Recurrent weights, `dim_lstm × dim_lstm`.
    pub u: [Array2<f64>; 4],
    /// Peephole weights for f, i and o, `dim_lstm × dim_lstm`.
    pub v: [Array2<f64>; 3],
    pub b: [Array1<f64>; 4],
}

impl LstmDirectionParams {
    pub fn zeros(dim_in: usize, dim_lstm: usize) -> Self {
        LstmDirectionParams {
            w: std::array::from_fn(|_| Array2::zeros((dim_lstm, dim_in))),
            u: std::array::from_fn(|_| Array2::zeros((dim_lstm, dim_lstm))),
            v: std::array::from_fn(|_| Array2::zeros((dim_lstm, dim_lstm))),
            b: std::array::from_fn(|_| Array1::zeros(dim_lstm)),
        }
    }

    /// Uniform weights in ±0.05, forget-gate bias 1, other biases 0.
    pub fn random<R: Rng>(dim_in: usize, dim_lstm: usize, rng: &mut R) -> Self {
        let mut uniform = |rows, cols| {
            Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-INIT_RANGE..=INIT_RANGE))
        };
        let w = std::array::from_fn(|_| uniform(dim_lstm, dim_in));
        let u = std::array::from_fn(|_| uniform(dim_lstm, dim_lstm));
        let v = std::array::from_fn(|_| uniform(dim_lstm, dim_lstm));
        let mut b: [Array1<f64>; 4] = std::array::from_fn(|_| Array1::zeros(dim_lstm));
        b[Gate::Forget as usize].fill(1.0);
        LstmDirectionParams { w, u, v, b }
    }

    pub fn hidden_dim(&self) -> usize {
        self.b[0].len()
    }

    pub fn input_dim(&self) -> usize {
        self.w[0].ncols()
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(15);
        for m in self.w.iter_mut().chain(self.u.iter_mut()).chain(self.v.iter_mut()) {
            out.push(m.as_slice_mut().expect("standard layout"));
        }
        for b in self.b.iter_mut() {
            out.push(b.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub(crate) fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(15);
        for m in self.w.iter().chain(self.u.iter()).chain(self.v.iter()) {
            out.push(m.as_slice().expect("standard layout"));
        }
        for b in self.b.iter() {
            out.push(b.as_slice().expect("standard layout"));
        }
        out
    }

    pub(crate) fn tensor_names(prefix: &str) -> Vec<String> {
        let mut names = Vec::with_capacity(15);
        for g in Gate::ALL {
            names.push(format!("{}.W_{}", prefix, g.name()));
        }
        for g in Gate::ALL {
            names.push(format!("{}.U_{}", prefix, g.name()));
        }
        for g in [Gate::Forget, Gate::Input, Gate::Output] {
            names.push(format!("{}.V_{}", prefix, g.name()));
        }
        for g in Gate::ALL {
            names.push(format!("{}.b_{}", prefix, g.name()));
        }
        names
    }

    pub(crate) fn add_assign(&mut self, other: &LstmDirectionParams) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Intermediate values of one step.
#[derive(Clone, Debug)]
pub(crate) struct StepCache {
    pub h_prev: Array1<f64>,
    pub c_prev: Array1<f64>,
    pub f: Array1<f64>,
    pub i: Array1<f64>,
    pub g: Array1<f64>,
    pub c: Array1<f64>,
    pub o: Array1<f64>,
    pub tanh_c: Array1<f64>,
    pub h: Array1<f64>,
}

/// Runs the recurrence over `xs` in the given order.
pub(crate) fn run_direction(params: &LstmDirectionParams, xs: &[&Array1<f64>]) -> Vec<StepCache> {
    let dim = params.hidden_dim();
    let mut h_prev = Array1::zeros(dim);
    let mut c_prev = Array1::zeros(dim);
    let mut steps = Vec::with_capacity(xs.len());
    let pre = |gate: Gate, x: &Array1<f64>, h: &Array1<f64>| {
        let k = gate as usize;
        params.w[k].dot(x) + params.u[k].dot(h) + &params.b[k]
    };
    for x in xs {
        let f = (pre(Gate::Forget, x, &h_prev) + params.v[0].dot(&c_prev)).mapv(sigmoid);
        let i = (pre(Gate::Input, x, &h_prev) + params.v[1].dot(&c_prev)).mapv(sigmoid);
        let g = pre(Gate::Candidate, x, &h_prev).mapv(f64::tanh);
        let c = &i * &g + &f * &c_prev;
        let o = (pre(Gate::Output, x, &h_prev) + params.v[2].dot(&c)).mapv(sigmoid);
        let tanh_c = c.mapv(f64::tanh);
        let h = &o * &tanh_c;
        steps.push(StepCache {
            h_prev: h_prev.clone(),
            c_prev: c_prev.clone(),
            f,
            i,
            g,
            c: c.clone(),
            o,
            tanh_c,
            h: h.clone(),
        });
        h_prev = h;
        c_prev = c;
    }
    steps
}

/// `m += a ⊗ b`.
pub(crate) fn add_outer(m: &mut Array2<f64>, a: &Array1<f64>, b: &Array1<f64>) {
    for (mut row, &ai) in m.rows_mut().into_iter().zip(a.iter()) {
        if ai != 0.0 {
            row.scaled_add(ai, b);
        }
    }
}

/// Backpropagation through time for one direction.
///
/// `dh` holds the loss gradient with respect to each output, in processing
/// order. Parameter gradients are accumulated into `grads`; the gradients
/// with respect to the inputs are returned in processing order.
pub(crate) fn backprop_direction(
    params: &LstmDirectionParams,
    xs: &[&Array1<f64>],
    steps: &[StepCache],
    dh: &[Array1<f64>],
    grads: &mut LstmDirectionParams,
) -> Vec<Array1<f64>> {
    let dim = params.hidden_dim();
    let mut dh_next = Array1::<f64>::zeros(dim);
    let mut dc_next = Array1::<f64>::zeros(dim);
    let mut dxs = vec![Array1::zeros(params.input_dim()); xs.len()];
    let d_sigmoid = |y: &Array1<f64>| y.mapv(|v| v * (1.0 - v));

    for t in (0..steps.len()).rev() {
        let s = &steps[t];
        let x = xs[t];
        let dh_t = &dh[t] + &dh_next;

        let da_o = &dh_t * &s.tanh_c * d_sigmoid(&s.o);
        let dc = &dh_t * &s.o * s.tanh_c.mapv(|v| 1.0 - v * v) + &dc_next + params.v[2].t().dot(&da_o);
        let da_i = &dc * &s.g * d_sigmoid(&s.i);
        let da_g = &dc * &s.i * s.g.mapv(|v| 1.0 - v * v);
        let da_f = &dc * &s.c_prev * d_sigmoid(&s.f);

        let das = [&da_f, &da_i, &da_g, &da_o];
        let mut dx = Array1::zeros(params.input_dim());
        let mut dh_prev = Array1::zeros(dim);
        for gate in Gate::ALL {
            let k = gate as usize;
            let da = das[k];
            add_outer(&mut grads.w[k], da, x);
            add_outer(&mut grads.u[k], da, &s.h_prev);
            grads.b[k] += da;
            dx += &params.w[k].t().dot(da);
            dh_prev += &params.u[k].t().dot(da);
        }
        add_outer(&mut grads.v[0], &da_f, &s.c_prev);
        add_outer(&mut grads.v[1], &da_i, &s.c_prev);
        add_outer(&mut grads.v[2], &da_o, &s.c);

        dc_next = &dc * &s.f + params.v[0].t().dot(&da_f) + params.v[1].t().dot(&da_i);
        dh_next = dh_prev;
        dxs[t] = dx;
    }
    dxs
}

/// Forward-direction outputs `h_1..h_T` with zero initial state.
pub fn lstm_forward(xs: &[Array1<f64>], params: &LstmDirectionParams) -> Vec<Array1<f64>> {
    let refs: Vec<&Array1<f64>> = xs.iter().collect();
    run_direction(params, &refs).into_iter().map(|s| s.h).collect()
}

/// Backward-direction outputs `h_1..h_T`, each computed from `x_t..x_T`
/// with zero state after `x_T`.
pub fn lstm_backward_dir(xs: &[Array1<f64>], params: &LstmDirectionParams) -> Vec<Array1<f64>> {
    let refs: Vec<&Array1<f64>> = xs.iter().rev().collect();
    let mut out: Vec<Array1<f64>> = run_direction(params, &refs).into_iter().map(|s| s.h).collect();
    out.reverse();
    out
}

/// Element-wise sum of the two directional outputs.
pub fn bi_sum(forward: &Array1<f64>, backward: &Array1<f64>) -> Array1<f64> {
    forward + backward
}

/// Per-dimension maximum over time, with the first time step attaining it.
pub(crate) fn max_over_time_with_argmax(hs: &[Array1<f64>]) -> (Array1<f64>, Vec<usize>) {
    let dim = hs[0].len();
    let mut best = hs[0].clone();
    let mut arg = vec![0; dim];
    for (t, h) in hs.iter().enumerate().skip(1) {
        for k in 0..dim {
            if h[k] > best[k] {
                best[k] = h[k];
                arg[k] = t;
            }
        }
    }
    (best, arg)
}

/// Per-dimension maximum over a non-empty sequence.
pub fn max_over_time(hs: &[Array1<f64>]) -> Array1<f64> {
    assert!(!hs.is_empty(), "max over an empty sequence");
    max_over_time_with_argmax(hs).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_parameters_give_zero_outputs() {
        let params = LstmDirectionParams::zeros(3, 4);
        let xs = vec![array![1.0, -2.0, 0.5], array![0.3, 0.3, 0.3]];
        for h in lstm_forward(&xs, &params).iter().chain(&lstm_backward_dir(&xs, &params)) {
            assert!(h.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn single_step_depends_only_on_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = LstmDirectionParams::random(2, 3, &mut rng);
        let x = array![0.4, -0.1];
        let fw = lstm_forward(&[x.clone()], &params);
        let bw = lstm_backward_dir(&[x.clone()], &params);
        assert_eq!(fw, bw);
        let again = lstm_forward(&[x], &params);
        assert_eq!(fw, again);
    }

    #[test]
    fn palindrome_backward_is_reversed_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let params = LstmDirectionParams::random(2, 3, &mut rng);
        let a = array![0.5, -0.5];
        let b = array![-1.0, 2.0];
        let xs = vec![a.clone(), b.clone(), a];
        let mut fw = lstm_forward(&xs, &params);
        let bw = lstm_backward_dir(&xs, &params);
        fw.reverse();
        assert_eq!(fw, bw);
    }

    #[test]
    fn outputs_are_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut params = LstmDirectionParams::random(3, 5, &mut rng);
        for t in params.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= 40.0);
        }
        let xs: Vec<Array1<f64>> = (0..6)
            .map(|k| Array1::from_elem(3, (k as f64 - 2.5) * 3.0))
            .collect();
        for h in lstm_forward(&xs, &params) {
            assert!(h.iter().all(|v| v.abs() <= 1.0 && v.is_finite()));
        }
    }

    #[test]
    fn max_over_time_examples() {
        let single = vec![array![0.2, -0.7]];
        assert_eq!(max_over_time(&single), single[0]);
        let hs = vec![array![1.0, -2.0], array![0.0, 3.0]];
        assert_eq!(max_over_time(&hs), array![1.0, 3.0]);
        let (_, arg) = max_over_time_with_argmax(&hs);
        assert_eq!(arg, vec![0, 1]);
        let swapped = vec![hs[1].clone(), hs[0].clone()];
        assert_eq!(max_over_time(&swapped), max_over_time(&hs));
    }

    #[test]
    fn bi_sum_examples() {
        let a = array![0.25, -1.0];
        assert_eq!(bi_sum(&a, &Array1::zeros(2)), a);
        assert_eq!(bi_sum(&Array1::zeros(2), &Array1::zeros(2)), Array1::<f64>::zeros(2));
        assert_eq!(bi_sum(&a, &array![0.5, 0.5]), array![0.75, -0.5]);
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = LstmDirectionParams::random(2, 3, &mut rng);
        assert!(p.b[0].iter().all(|&v| v == 1.0));
        for k in 1..4 {
            assert!(p.b[k].iter().all(|&v| v == 0.0));
        }
        assert!(p.w[0].iter().all(|v| v.abs() <= INIT_RANGE));
    }
}
