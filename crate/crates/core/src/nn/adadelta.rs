//! Adadelta: per-parameter step sizes from running averages of squared
//! gradients and squared updates, no global learning rate.

use ndarray::{Array1, Array2, Zip};

use super::network::{Gradients, Network};

pub const DEFAULT_DECAY: f64 = 0.95;
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Running averages for a single scalar parameter.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    pub sq_grad: f64,
    pub sq_update: f64,
}

/// Applies one Adadelta update to `param` and returns the step taken.
pub fn adadelta_update(
    param: &mut f64,
    grad: f64,
    acc: &mut Accumulator,
    decay: f64,
    epsilon: f64,
) -> f64 {
    acc.sq_grad = decay * acc.sq_grad + (1.0 - decay) * grad * grad;
    let step = -((acc.sq_update + epsilon) / (acc.sq_grad + epsilon)).sqrt() * grad;
    acc.sq_update = decay * acc.sq_update + (1.0 - decay) * step * step;
    *param += step;
    step
}

#[derive(Debug, Clone)]
struct LayerState {
    w_sq_grad: Array2<f64>,
    w_sq_update: Array2<f64>,
    b_sq_grad: Array1<f64>,
    b_sq_update: Array1<f64>,
}

/// Optimizer state for a whole network, shaped like its parameters.
#[derive(Debug, Clone)]
pub struct AdadeltaState {
    pub decay: f64,
    pub epsilon: f64,
    layers: Vec<LayerState>,
}

impl AdadeltaState {
    pub fn new(net: &Network) -> Self {
        Self::with_constants(net, DEFAULT_DECAY, DEFAULT_EPSILON)
    }

    pub fn with_constants(net: &Network, decay: f64, epsilon: f64) -> Self {
        assert!(decay > 0.0 && decay < 1.0, "decay must lie in (0, 1)");
        assert!(epsilon > 0.0, "epsilon must be positive");
        let layers = net
            .layers()
            .iter()
            .map(|l| LayerState {
                w_sq_grad: Array2::zeros(l.weights.raw_dim()),
                w_sq_update: Array2::zeros(l.weights.raw_dim()),
                b_sq_grad: Array1::zeros(l.bias.len()),
                b_sq_update: Array1::zeros(l.bias.len()),
            })
            .collect();
        AdadeltaState {
            decay,
            epsilon,
            layers,
        }
    }

    /// True if the state was built for a network of this exact shape.
    pub fn matches(&self, net: &Network) -> bool {
        self.layers.len() == net.layers().len()
            && self
                .layers
                .iter()
                .zip(net.layers())
                .all(|(s, l)| s.w_sq_grad.dim() == l.weights.dim())
    }

    pub fn apply(&mut self, net: &mut Network, grads: &Gradients) {
        assert!(self.matches(net), "optimizer state shape mismatch");
        let (decay, eps) = (self.decay, self.epsilon);
        let update = |p: &mut f64, &g: &f64, sg: &mut f64, su: &mut f64| {
            let mut acc = Accumulator {
                sq_grad: *sg,
                sq_update: *su,
            };
            adadelta_update(p, g, &mut acc, decay, eps);
            *sg = acc.sq_grad;
            *su = acc.sq_update;
        };
        for ((layer, state), (gw, gb)) in net
            .layers_mut()
            .iter_mut()
            .zip(&mut self.layers)
            .zip(&grads.layers)
        {
            Zip::from(&mut layer.weights)
                .and(gw)
                .and(&mut state.w_sq_grad)
                .and(&mut state.w_sq_update)
                .for_each(update);
            Zip::from(&mut layer.bias)
                .and(gb)
                .and(&mut state.b_sq_grad)
                .and(&mut state.b_sq_update)
                .for_each(update);
        }
    }
}
