//! Small fully-connected networks with explicit forward/backward passes.
//!
//! Layout convention: a batch is `(n, in_dim)` row-per-sample; layer `l`
//! computes `act(x · Wـlᵀ + b_l)` with `W_l` shaped `(out, in)`. Gradients
//! returned by the backward passes are *sums* over the batch rows; callers
//! that want a mean scale the upstream signal by `1/n` before calling.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::rng::Prng;

/// Elementwise nonlinearity. Derivatives are computed from the *output*
/// value, which every supported activation permits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Identity => x,
        }
    }

    /// d(output)/d(pre-activation) expressed through the output `y`.
    pub fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }

    /// Stable one-byte tag used by the checkpoint format.
    pub fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Sigmoid => 2,
            Activation::Identity => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Tanh),
            2 => Some(Activation::Sigmoid),
            3 => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// Parameter gradients for one network, summed over the batch.
#[derive(Debug, Clone)]
pub struct GradientBundle {
    pub d_weights: Vec<Array2<f64>>,
    pub d_biases: Vec<Array1<f64>>,
}

impl GradientBundle {
    /// Zero gradients shaped like `net`'s parameters.
    pub fn zeros_like(net: &MlpNetwork) -> Self {
        GradientBundle {
            d_weights: net.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            d_biases: net.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.d_weights.iter().all(|w| w.iter().all(|x| x.is_finite()))
            && self.d_biases.iter().all(|b| b.iter().all(|x| x.is_finite()))
    }

    /// Accumulate `other` into `self` (same shapes required).
    pub fn add_assign(&mut self, other: &GradientBundle) {
        assert_eq!(self.d_weights.len(), other.d_weights.len());
        for (a, b) in self.d_weights.iter_mut().zip(&other.d_weights) {
            *a += b;
        }
        for (a, b) in self.d_biases.iter_mut().zip(&other.d_biases) {
            *a += b;
        }
    }
}

/// Post-activation values saved by a cached forward pass, consumed by the
/// backward passes.
#[derive(Debug)]
pub struct ForwardCache {
    input: Array2<f64>,
    /// Post-activation output of every layer, last entry = network output.
    activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("network has at least one layer")
    }
}

/// Multilayer perceptron: ReLU hidden layers, configurable output activation.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    layer_dims: Vec<usize>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    hidden_activation: Activation,
    output_activation: Activation,
}

/// Scale applied to the output layer's weights at init so initial outputs
/// sit near zero regardless of the head activation.
const FINAL_LAYER_INIT_SCALE: f64 = 1e-3;

impl MlpNetwork {
    /// Random-initialized network: weights uniform in `±1/sqrt(fan_in)`
    /// (drawn layer by layer in row-major order), output-layer weights
    /// additionally scaled by `1e-3`, biases zero.
    pub fn new(layer_dims: &[usize], output_activation: Activation, rng: &mut Prng) -> Self {
        assert!(layer_dims.len() >= 2, "need at least input and output dims");
        let n_layers = layer_dims.len() - 1;
        let mut weights = Vec::with_capacity(n_layers);
        let mut biases = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let (fan_in, fan_out) = (layer_dims[l], layer_dims[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let scale = if l == n_layers - 1 { FINAL_LAYER_INIT_SCALE } else { 1.0 };
            let mut w = Array2::zeros((fan_out, fan_in));
            for row in 0..fan_out {
                for col in 0..fan_in {
                    w[[row, col]] = scale * rng.range(-bound, bound);
                }
            }
            weights.push(w);
            biases.push(Array1::zeros(fan_out));
        }
        MlpNetwork {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
            hidden_activation: Activation::Relu,
            output_activation,
        }
    }

    /// Reassemble a network from raw parts (checkpoint loading).
    pub fn from_parts(
        layer_dims: Vec<usize>,
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Self {
        assert_eq!(weights.len(), layer_dims.len() - 1);
        assert_eq!(biases.len(), layer_dims.len() - 1);
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            assert_eq!(w.dim(), (layer_dims[l + 1], layer_dims[l]));
            assert_eq!(b.len(), layer_dims[l + 1]);
        }
        MlpNetwork { layer_dims, weights, biases, hidden_activation, output_activation }
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn output_activation(&self) -> Activation {
        self.output_activation
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn all_parameters_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|x| x.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|x| x.is_finite()))
    }

    /// Mutable parameter access for the optimizer.
    pub fn params_mut(&mut self) -> (&mut [Array2<f64>], &mut [Array1<f64>]) {
        (&mut self.weights, &mut self.biases)
    }

    fn activation_for_layer(&self, layer: usize) -> Activation {
        if layer == self.weights.len() - 1 {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    /// Single-sample forward pass.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.input_dim(), "input dimension mismatch");
        let x = ArrayView2::from_shape((1, input.len()), input).unwrap();
        let out = self.forward_batch(&x);
        out.row(0).to_vec()
    }

    /// Batched forward pass without saving intermediates.
    pub fn forward_batch(&self, input: &ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(input.ncols(), self.input_dim(), "input dimension mismatch");
        let mut x = input.to_owned();
        for l in 0..self.weights.len() {
            x = self.layer_forward(l, &x);
        }
        x
    }

    /// Batched forward pass that records post-activations for backprop.
    pub fn forward_batch_cached(&self, input: &ArrayView2<f64>) -> ForwardCache {
        assert_eq!(input.ncols(), self.input_dim(), "input dimension mismatch");
        let mut activations = Vec::with_capacity(self.weights.len());
        let mut x = input.to_owned();
        for l in 0..self.weights.len() {
            x = self.layer_forward(l, &x);
            activations.push(x.clone());
        }
        ForwardCache { input: input.to_owned(), activations }
    }

    fn layer_forward(&self, l: usize, x: &Array2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights[l].t());
        z += &self.biases[l];
        let act = self.activation_for_layer(l);
        z.mapv_inplace(|v| act.apply(v));
        z
    }

    /// Full backward pass from `d(loss)/d(output)` (shape `(n, out_dim)`).
    /// Returns parameter gradients summed over the batch plus the gradient
    /// with respect to the input rows.
    pub fn backward_batch(
        &self,
        cache: &ForwardCache,
        upstream: &Array2<f64>,
    ) -> (GradientBundle, Array2<f64>) {
        let (grads, input_grad) = self.backward_impl(cache, upstream, true);
        (grads.expect("parameter gradients requested"), input_grad)
    }

    /// Input-gradient-only backward pass; skips the parameter-gradient
    /// matrix products (used when differentiating the critic with respect
    /// to its action inputs during the policy update).
    pub fn backward_batch_input_only(
        &self,
        cache: &ForwardCache,
        upstream: &Array2<f64>,
    ) -> Array2<f64> {
        self.backward_impl(cache, upstream, false).1
    }

    fn backward_impl(
        &self,
        cache: &ForwardCache,
        upstream: &Array2<f64>,
        want_params: bool,
    ) -> (Option<GradientBundle>, Array2<f64>) {
        let n_layers = self.weights.len();
        assert_eq!(upstream.dim(), cache.output().dim(), "upstream shape mismatch");
        let mut d_weights = Vec::new();
        let mut d_biases = Vec::new();
        let mut signal = upstream.clone();
        for l in (0..n_layers).rev() {
            let act = self.activation_for_layer(l);
            // delta = upstream ⊙ act'(y) computed from the stored outputs.
            let mut delta = signal;
            delta.zip_mut_with(&cache.activations[l], |d, &y| *d *= act.grad_from_output(y));
            let layer_input: ArrayView2<f64> = if l == 0 {
                cache.input.view()
            } else {
                cache.activations[l - 1].view()
            };
            if want_params {
                d_weights.push(delta.t().dot(&layer_input));
                d_biases.push(delta.sum_axis(Axis(0)));
            }
            signal = delta.dot(&self.weights[l]);
        }
        let grads = want_params.then(|| {
            d_weights.reverse();
            d_biases.reverse();
            GradientBundle { d_weights, d_biases }
        });
        (grads, signal)
    }

    /// Single-sample backward pass; returns `(parameter grads, input grad)`.
    pub fn backward(&self, input: &[f64], upstream: &[f64]) -> (GradientBundle, Vec<f64>) {
        assert_eq!(upstream.len(), self.output_dim(), "upstream dimension mismatch");
        let x = ArrayView2::from_shape((1, input.len()), input).unwrap();
        let cache = self.forward_batch_cached(&x);
        let up = Array2::from_shape_vec((1, upstream.len()), upstream.to_vec()).unwrap();
        let (grads, input_grad) = self.backward_batch(&cache, &up);
        (grads, input_grad.row(0).to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Prng, Stream};
    use ndarray::Array2;

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!(
            (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs())),
            "{what}: {a} vs {b}"
        );
    }

    /// Independent straight-line evaluation used as the forward oracle.
    fn forward_oracle(net: &MlpNetwork, input: &[f64]) -> Vec<f64> {
        let mut x = input.to_vec();
        let n_layers = net.weights().len();
        for l in 0..n_layers {
            let w = &net.weights()[l];
            let b = &net.biases()[l];
            let act = if l == n_layers - 1 {
                net.output_activation()
            } else {
                net.hidden_activation()
            };
            let mut y = vec![0.0; w.nrows()];
            for (row, out) in y.iter_mut().enumerate() {
                let mut sum = b[row];
                for (col, xv) in x.iter().enumerate() {
                    sum += w[[row, col]] * xv;
                }
                *out = act.apply(sum);
            }
            x = y;
        }
        x
    }

    #[test]
    fn forward_matches_straight_line_oracle() {
        let mut rng = Prng::new(11, Stream::Init);
        for &out_act in &[Activation::Identity, Activation::Tanh, Activation::Sigmoid] {
            let net = MlpNetwork::new(&[6, 16, 16, 4], out_act, &mut rng);
            let input: Vec<f64> = (0..6).map(|_| rng.range(-1.0, 1.0)).collect();
            let got = net.forward(&input);
            let want = forward_oracle(&net, &input);
            for (g, w) in got.iter().zip(&want) {
                assert_close(*g, *w, 1e-12, "forward output");
            }
        }
    }

    #[test]
    fn batch_forward_matches_per_row() {
        let mut rng = Prng::new(12, Stream::Init);
        let net = MlpNetwork::new(&[5, 32, 3], Activation::Tanh, &mut rng);
        let n = 17;
        let mut batch = Array2::zeros((n, 5));
        for mut row in batch.rows_mut() {
            for v in row.iter_mut() {
                *v = rng.range(-2.0, 2.0);
            }
        }
        let out = net.forward_batch(&batch.view());
        for i in 0..n {
            let single = net.forward(batch.row(i).as_slice().unwrap());
            for j in 0..3 {
                assert_close(out[[i, j]], single[j], 1e-12, "batch row");
            }
        }
    }

    /// Central finite differences over every parameter of a small network,
    /// against the analytic backward pass. Loss: L = sum(c ⊙ output).
    #[test]
    fn parameter_gradients_match_finite_differences() {
        let mut rng = Prng::new(13, Stream::Init);
        let mut net = MlpNetwork::new(&[4, 12, 8, 3], Activation::Tanh, &mut rng);
        let input: Vec<f64> = (0..4).map(|_| rng.range(-1.0, 1.0)).collect();
        let probe: Vec<f64> = (0..3).map(|_| rng.range(-1.0, 1.0)).collect();
        let loss = |net: &MlpNetwork| -> f64 {
            net.forward(&input).iter().zip(&probe).map(|(y, c)| y * c).sum()
        };
        let (grads, _) = net.backward(&input, &probe);
        let h = 1e-6;
        for l in 0..net.weights().len() {
            let (rows, cols) = net.weights()[l].dim();
            for r in 0..rows {
                for c in 0..cols {
                    let orig = net.weights()[l][[r, c]];
                    net.params_mut().0[l][[r, c]] = orig + h;
                    let up = loss(&net);
                    net.params_mut().0[l][[r, c]] = orig - h;
                    let down = loss(&net);
                    net.params_mut().0[l][[r, c]] = orig;
                    let fd = (up - down) / (2.0 * h);
                    let an = grads.d_weights[l][[r, c]];
                    assert!(
                        (fd - an).abs() <= 1e-5 * (1.0 + fd.abs().max(an.abs())),
                        "weight grad [{l}][{r},{c}]: fd={fd} analytic={an}"
                    );
                }
            }
            for r in 0..net.biases()[l].len() {
                let orig = net.biases()[l][r];
                net.params_mut().1[l][r] = orig + h;
                let up = loss(&net);
                net.params_mut().1[l][r] = orig - h;
                let down = loss(&net);
                net.params_mut().1[l][r] = orig;
                let fd = (up - down) / (2.0 * h);
                let an = grads.d_biases[l][r];
                assert!(
                    (fd - an).abs() <= 1e-5 * (1.0 + fd.abs().max(an.abs())),
                    "bias grad [{l}][{r}]: fd={fd} analytic={an}"
                );
            }
        }
    }

    #[test]
    fn input_gradients_match_finite_differences() {
        let mut rng = Prng::new(14, Stream::Init);
        let net = MlpNetwork::new(&[6, 16, 1], Activation::Sigmoid, &mut rng);
        let input: Vec<f64> = (0..6).map(|_| rng.range(-1.0, 1.0)).collect();
        let (_, input_grad) = net.backward(&input, &[1.0]);
        let h = 1e-6;
        for i in 0..input.len() {
            let mut probe = input.clone();
            probe[i] = input[i] + h;
            let up = net.forward(&probe)[0];
            probe[i] = input[i] - h;
            let down = net.forward(&probe)[0];
            let fd = (up - down) / (2.0 * h);
            assert!(
                (fd - input_grad[i]).abs() <= 1e-5 * (1.0 + fd.abs().max(input_grad[i].abs())),
                "input grad [{i}]: fd={fd} analytic={}",
                input_grad[i]
            );
        }
    }

    #[test]
    fn input_only_backward_matches_full_backward() {
        let mut rng = Prng::new(15, Stream::Init);
        let net = MlpNetwork::new(&[7, 24, 24, 1], Activation::Sigmoid, &mut rng);
        let n = 9;
        let mut batch = Array2::zeros((n, 7));
        for v in batch.iter_mut() {
            *v = rng.range(-1.0, 1.0);
        }
        let cache = net.forward_batch_cached(&batch.view());
        let upstream = Array2::from_elem((n, 1), 1.0);
        let (_, full_input_grad) = net.backward_batch(&cache, &upstream);
        let only = net.backward_batch_input_only(&cache, &upstream);
        assert_eq!(full_input_grad, only);
    }

    #[test]
    fn batch_gradients_are_sums_of_single_sample_gradients() {
        let mut rng = Prng::new(16, Stream::Init);
        let net = MlpNetwork::new(&[3, 10, 2], Activation::Identity, &mut rng);
        let n = 5;
        let mut batch = Array2::zeros((n, 3));
        let mut upstream = Array2::zeros((n, 2));
        for v in batch.iter_mut() {
            *v = rng.range(-1.0, 1.0);
        }
        for v in upstream.iter_mut() {
            *v = rng.range(-1.0, 1.0);
        }
        let cache = net.forward_batch_cached(&batch.view());
        let (batch_grads, _) = net.backward_batch(&cache, &upstream);
        let mut summed = GradientBundle::zeros_like(&net);
        for i in 0..n {
            let (g, _) = net.backward(
                batch.row(i).as_slice().unwrap(),
                upstream.row(i).as_slice().unwrap(),
            );
            summed.add_assign(&g);
        }
        for l in 0..net.weights().len() {
            for (a, b) in batch_grads.d_weights[l].iter().zip(summed.d_weights[l].iter()) {
                assert_close(*a, *b, 1e-10, "summed weight grad");
            }
            for (a, b) in batch_grads.d_biases[l].iter().zip(summed.d_biases[l].iter()) {
                assert_close(*a, *b, 1e-10, "summed bias grad");
            }
        }
    }

    #[test]
    fn init_respects_bounds_and_final_layer_scale() {
        let mut rng = Prng::new(17, Stream::Init);
        let net = MlpNetwork::new(&[20, 256, 256, 5], Activation::Tanh, &mut rng);
        assert_eq!(net.parameter_count(), 20 * 256 + 256 + 256 * 256 + 256 + 256 * 5 + 5);
        let bounds = [1.0 / (20f64).sqrt(), 1.0 / 16.0, 1e-3 / 16.0];
        for (l, w) in net.weights().iter().enumerate() {
            let max = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(max <= bounds[l], "layer {l} max |w| = {max}");
            assert!(max > bounds[l] * 0.5, "layer {l} suspiciously small: {max}");
        }
        for b in net.biases() {
            assert!(b.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    #[should_panic(expected = "input dimension mismatch")]
    fn dimension_mismatch_panics() {
        let mut rng = Prng::new(18, Stream::Init);
        let net = MlpNetwork::new(&[4, 8, 2], Activation::Tanh, &mut rng);
        net.forward(&[0.0; 3]);
    }
}
