//! Oracles shared by the integration tests. Nothing here calls the crate's
//! own loss or gradient code.

#![allow(dead_code)]

use ndarray::{Array2, ArrayView2};

use driftgan::nn::{Loss, Network, NetworkSnapshot};

/// Loss recomputed from forward outputs: mean squared error over all
/// elements, or mean negative log-softmax of the target logit.
pub fn oracle_loss(net: &Network, x: ArrayView2<f64>, vec_t: &Array2<f64>, cats: &[usize], loss: Loss) -> f64 {
    match loss {
        Loss::Mse => {
            let out = net.forward_batch(x).expect("width");
            let n = out.len() as f64;
            out.iter().zip(vec_t.iter()).map(|(o, t)| (o - t).powi(2)).sum::<f64>() / n
        }
        Loss::CrossEntropy => {
            let logits = net.logits_batch(x).expect("width");
            let mut total = 0.0;
            for (row, &c) in logits.rows().into_iter().zip(cats) {
                let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                total += lse - row[c];
            }
            total / cats.len() as f64
        }
    }
}

/// Central differences of `f` for every parameter, in layer order, weights
/// (row-major) before biases.
pub fn numeric_gradients(net: &Network, f: impl Fn(&Network) -> f64) -> Vec<f64> {
    let h = 1e-5;
    let base = NetworkSnapshot::from(net);
    let eval = |snap: &NetworkSnapshot| f(&Network::try_from(snap.clone()).expect("valid snapshot"));
    let mut out = Vec::new();
    for layer in 0..base.weights.len() {
        for which in 0..2 {
            let len = if which == 0 { base.weights[layer].len() } else { base.biases[layer].len() };
            for i in 0..len {
                let mut up = base.clone();
                let mut down = base.clone();
                let (u, d) = if which == 0 {
                    (&mut up.weights[layer][i], &mut down.weights[layer][i])
                } else {
                    (&mut up.biases[layer][i], &mut down.biases[layer][i])
                };
                *u += h;
                *d -= h;
                out.push((eval(&up) - eval(&down)) / (2.0 * h));
            }
        }
    }
    out
}
