//! Small dense networks, manual backprop, Adadelta and JSON snapshots.

mod adadelta;
mod loss;
mod network;

pub use adadelta::{adadelta_update, Accumulator, AdadeltaState, DEFAULT_DECAY, DEFAULT_EPSILON};
pub use loss::{mse, softmax, softmax_cross_entropy, Loss};
pub use network::{Activation, Gradients, Layer, Network, OutputGrad, Trace};

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Supervision for one batch.
#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    /// One target vector per row, for [`Loss::Mse`].
    Vectors(ArrayView2<'a, f64>),
    /// One category index per row, for [`Loss::CrossEntropy`].
    Categories(&'a [usize]),
}

/// Loss on the current parameters plus parameter gradients, without updating.
pub fn loss_and_gradients(
    net: &Network,
    inputs: ArrayView2<f64>,
    targets: Targets<'_>,
    loss: Loss,
) -> Result<(f64, Gradients)> {
    if inputs.nrows() == 0 {
        return Err(Error::usage("empty training batch"));
    }
    let trace = net.forward_trace(inputs)?;
    let (value, upstream, wrt) = match (loss, targets) {
        (Loss::Mse, Targets::Vectors(t)) => {
            if t.dim() != trace.output().dim() {
                return Err(Error::usage(format!(
                    "mse targets shaped {:?}, outputs {:?}",
                    t.dim(),
                    trace.output().dim()
                )));
            }
            let (v, g) = mse(trace.output().view(), t);
            (v, g, OutputGrad::Activations)
        }
        (Loss::CrossEntropy, Targets::Categories(c)) => {
            if c.len() != inputs.nrows() {
                return Err(Error::usage("one category per row required"));
            }
            if let Some(&bad) = c.iter().find(|&&c| c >= net.output_size()) {
                return Err(Error::usage(format!(
                    "category {bad} out of range for {} outputs",
                    net.output_size()
                )));
            }
            let (v, g) = softmax_cross_entropy(trace.logits().view(), c);
            (v, g, OutputGrad::Logits)
        }
        _ => return Err(Error::usage("targets do not match the chosen loss")),
    };
    if !value.is_finite() {
        return Err(Error::Divergence(format!("loss evaluated to {value}")));
    }
    let (grads, _) = net.backward(&trace, upstream.view(), wrt);
    Ok((value, grads))
}

/// One backprop + Adadelta step. Returns the batch loss measured before the
/// update.
pub fn train_step(
    net: &mut Network,
    inputs: ArrayView2<f64>,
    targets: Targets<'_>,
    loss: Loss,
    opt: &mut AdadeltaState,
) -> Result<f64> {
    let (value, grads) = loss_and_gradients(net, inputs, targets, loss)?;
    if !grads.is_finite() {
        return Err(Error::Divergence("non-finite gradient".into()));
    }
    opt.apply(net, &grads);
    Ok(value)
}

/// Flat JSON form of a network, for debugging dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSnapshot {
    pub sizes: Vec<usize>,
    pub activations: Vec<Activation>,
    /// Row-major weights per layer.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl From<&Network> for NetworkSnapshot {
    fn from(net: &Network) -> Self {
        NetworkSnapshot {
            sizes: net.sizes(),
            activations: net.layers().iter().map(|l| l.activation).collect(),
            weights: net.layers().iter().map(|l| l.weights.iter().copied().collect()).collect(),
            biases: net.layers().iter().map(|l| l.bias.to_vec()).collect(),
        }
    }
}

impl TryFrom<NetworkSnapshot> for Network {
    type Error = Error;

    fn try_from(s: NetworkSnapshot) -> Result<Self> {
        let n = s.activations.len();
        if s.sizes.len() != n + 1 || s.weights.len() != n || s.biases.len() != n {
            return Err(Error::usage("snapshot layer counts disagree"));
        }
        let layers = (0..n)
            .map(|i| {
                let weights = Array2::from_shape_vec((s.sizes[i + 1], s.sizes[i]), s.weights[i].clone())
                    .map_err(|e| Error::usage(format!("layer {i}: {e}")))?;
                Ok(Layer {
                    weights,
                    bias: Array1::from(s.biases[i].clone()),
                    activation: s.activations[i],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Network::from_layers(layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_net(w: f64) -> Network {
        Network::from_layers(vec![Layer {
            weights: array![[w]],
            bias: array![0.0],
            activation: Activation::Linear,
        }])
        .unwrap()
    }

    #[test]
    fn mse_loss_drops_on_second_step() {
        let mut net = scalar_net(0.0);
        let mut opt = AdadeltaState::new(&net);
        let x = array![[1.0], [2.0], [-1.5]];
        let l1 = train_step(&mut net, x.view(), Targets::Vectors(x.view()), Loss::Mse, &mut opt).unwrap();
        let l2 = train_step(&mut net, x.view(), Targets::Vectors(x.view()), Loss::Mse, &mut opt).unwrap();
        assert!(l2 < l1);
    }

    #[test]
    fn mse_loss_decreases_over_100_steps() {
        let mut net = scalar_net(0.0);
        let mut opt = AdadeltaState::new(&net);
        let x = array![[0.5], [1.0], [-2.0], [3.0]];
        let y = &x * 3.0;
        let mut prev = f64::INFINITY;
        for _ in 0..100 {
            let l = train_step(&mut net, x.view(), Targets::Vectors(y.view()), Loss::Mse, &mut opt).unwrap();
            assert!(l <= prev);
            prev = l;
        }
    }

    #[test]
    fn loss_reported_before_update() {
        let mut net = Network::from_layers(vec![Layer {
            weights: Array2::zeros((2, 3)),
            bias: Array1::zeros(2),
            activation: Activation::Sigmoid,
        }])
        .unwrap();
        let mut opt = AdadeltaState::new(&net);
        let x = array![[1.0, -1.0, 0.5]];
        let l = train_step(&mut net, x.view(), Targets::Categories(&[0]), Loss::CrossEntropy, &mut opt).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn mismatched_targets_rejected() {
        let mut net = scalar_net(1.0);
        let mut opt = AdadeltaState::new(&net);
        let x = array![[1.0]];
        let err = train_step(&mut net, x.view(), Targets::Categories(&[0]), Loss::Mse, &mut opt);
        assert!(matches!(err, Err(Error::Usage(_))));
        let empty = Array2::<f64>::zeros((0, 1));
        let err = train_step(&mut net, empty.view(), Targets::Vectors(empty.view()), Loss::Mse, &mut opt);
        assert!(matches!(err, Err(Error::Usage(_))));
    }

    #[test]
    fn divergent_loss_is_reported() {
        let mut net = scalar_net(f64::MAX);
        let mut opt = AdadeltaState::new(&net);
        let x = array![[1e300]];
        let err = train_step(&mut net, x.view(), Targets::Vectors(x.view()), Loss::Mse, &mut opt);
        assert!(matches!(err, Err(Error::Divergence(_))));
    }

    #[test]
    fn snapshot_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = Network::new(&[3, 5, 2], Activation::Relu, Activation::Sigmoid, &mut rng).unwrap();
        let json = serde_json::to_string(&NetworkSnapshot::from(&net)).unwrap();
        let back: NetworkSnapshot = serde_json::from_str(&json).unwrap();
        assert_eq!(Network::try_from(back).unwrap(), net);
    }
}
