//! Dense feed-forward networks with manual backpropagation.
//!
//! Inputs are processed row-wise: a batch is an `(n, input_size)` matrix and
//! every layer computes `z = a · Wᵀ + b`, `a' = act(z)`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Relu => z.mapv(|v| v.max(0.0)),
            Activation::Linear => z.clone(),
            Activation::Sigmoid => z.mapv(sigmoid),
        }
    }

    /// Multiplies `grad` (w.r.t. the activation) by the activation derivative
    /// evaluated at the pre-activation `z`.
    fn backprop(self, z: &Array2<f64>, grad: &mut Array2<f64>) {
        match self {
            Activation::Relu => grad.zip_mut_with(z, |g, &v| {
                if v <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Linear => {}
            Activation::Sigmoid => grad.zip_mut_with(z, |g, &v| {
                let s = sigmoid(v);
                *g *= s * (1.0 - s);
            }),
        }
    }
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// Row-major `(out, in)` weight matrix.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Layer {
    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, zero biases.
    pub fn init<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let bound = 1.0 / (inputs.max(1) as f64).sqrt();
        let weights = Array2::from_shape_fn((outputs, inputs), |_| rng.random_range(-bound..=bound));
        Layer {
            weights,
            bias: Array1::zeros(outputs),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

/// Per-layer parameter gradients, shaped like the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| (Array2::zeros(l.weights.raw_dim()), Array1::zeros(l.outputs())))
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|(w, b)| w.iter().chain(b.iter()).all(|v| v.is_finite()))
    }
}

/// Intermediate values of a batched forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `activations[0]` is the input batch, `activations[i + 1]` the output of layer `i`.
    activations: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
}

impl Trace {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("trace always holds the input")
    }

    /// Pre-activation values of the final layer.
    pub fn logits(&self) -> &Array2<f64> {
        self.pre_activations
            .last()
            .expect("network has at least one layer")
    }
}

/// Which quantity an upstream gradient handed to [`Network::backward`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputGrad {
    /// Gradient w.r.t. the final activations.
    Activations,
    /// Gradient w.r.t. the final pre-activations (logits).
    Logits,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    /// Builds a network over `sizes = [input, hidden.., output]` with freshly
    /// initialized weights.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::usage(format!(
                "network needs at least two non-zero layer sizes, got {sizes:?}"
            )));
        }
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last { output } else { hidden };
                Layer::init(w[0], w[1], act, rng)
            })
            .collect();
        Ok(Network { layers })
    }

    /// Wraps explicitly constructed layers, checking that dimensions chain and
    /// all parameters are finite.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::usage("network needs at least one layer"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.outputs() {
                return Err(Error::usage(format!(
                    "layer {i}: bias length {} does not match {} rows",
                    l.bias.len(),
                    l.outputs()
                )));
            }
            if l.weights.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::usage(format!("layer {i}: non-finite parameter")));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::usage(format!(
                    "layer {i} emits {} values but layer {} expects {}",
                    pair[0].outputs(),
                    i + 1,
                    pair[1].inputs()
                )));
            }
        }
        Ok(Network { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_size(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    /// Layer widths from input to output.
    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_size())
            .chain(self.layers.iter().map(Layer::outputs))
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("non-finite network input"));
        }
        let x = ArrayView2::from_shape((1, input.len()), input)
            .map_err(|e| Error::usage(e.to_string()))?;
        Ok(self.forward_batch(x)?.into_raw_vec_and_offset().0)
    }

    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let mut a = x.to_owned();
        for layer in &self.layers {
            let z = a.dot(&layer.weights.t()) + &layer.bias;
            a = layer.activation.apply(&z);
        }
        Ok(a)
    }

    /// Final-layer pre-activations for a batch.
    pub fn logits_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_trace(x)?.logits().clone())
    }

    pub fn forward_trace(&self, x: ArrayView2<f64>) -> Result<Trace> {
        self.check_input(x)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        activations.push(x.to_owned());
        for layer in &self.layers {
            let z = activations.last().unwrap().dot(&layer.weights.t()) + &layer.bias;
            activations.push(layer.activation.apply(&z));
            pre_activations.push(z);
        }
        Ok(Trace {
            activations,
            pre_activations,
        })
    }

    /// Backpropagates `upstream` through the traced batch. Returns parameter
    /// gradients and the gradient w.r.t. the network input.
    pub fn backward(
        &self,
        trace: &Trace,
        upstream: ArrayView2<f64>,
        wrt: OutputGrad,
    ) -> (Gradients, Array2<f64>) {
        let n_layers = self.layers.len();
        let mut delta = upstream.to_owned();
        if wrt == OutputGrad::Activations {
            self.layers[n_layers - 1]
                .activation
                .backprop(&trace.pre_activations[n_layers - 1], &mut delta);
        }
        let mut grads = Vec::with_capacity(n_layers);
        for i in (0..n_layers).rev() {
            let layer = &self.layers[i];
            let dw = delta.t().dot(&trace.activations[i]);
            let db = delta.sum_axis(Axis(0));
            grads.push((dw, db));
            let mut below = delta.dot(&layer.weights);
            if i > 0 {
                self.layers[i - 1]
                    .activation
                    .backprop(&trace.pre_activations[i - 1], &mut below);
            }
            delta = below;
        }
        grads.reverse();
        (Gradients { layers: grads }, delta)
    }

    /// Adds one unit to the final layer. Lower layers are untouched; the
    /// final layer is re-drawn from the standard initialization.
    pub fn extend_output_layer<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let last = self.layers.last_mut().expect("non-empty network");
        *last = Layer::init(last.inputs(), last.outputs() + 1, last.activation, rng);
    }

    fn check_input(&self, x: ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_size() {
            return Err(Error::usage(format!(
                "input width {} does not match network input size {}",
                x.ncols(),
                self.input_size()
            )));
        }
        Ok(())
    }
}
