//! Fits a small ReLU network to XOR with Adadelta, then spot-checks one
//! analytic gradient against a central difference.
//!
//! ```text
//! cargo run --release --example train_network
//! ```

use ndarray::array;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use driftgan::nn::{loss_and_gradients, train_step, Activation, AdadeltaState, Loss, Network, NetworkSnapshot, Targets};

fn main() -> driftgan::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut net = Network::new(&[2, 16, 2], Activation::Relu, Activation::Sigmoid, &mut rng)?;
    let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
    let y = [0, 1, 1, 0];
    let mut opt = AdadeltaState::new(&net);

    for epoch in 0..=2000 {
        let loss = train_step(&mut net, x.view(), Targets::Categories(&y), Loss::CrossEntropy, &mut opt)?;
        if epoch % 400 == 0 {
            println!("epoch {epoch:4}: cross-entropy {loss:.4}");
        }
    }
    let out = net.forward_batch(x.view())?;
    for (row, target) in out.rows().into_iter().zip(y) {
        println!("outputs {:.3} {:.3}  target {target}", row[0], row[1]);
    }

    // The first-layer weight with the largest gradient, checked both ways.
    let (_, grads) = loss_and_gradients(&net, x.view(), Targets::Categories(&y), Loss::CrossEntropy)?;
    let g0 = &grads.layers[0].0;
    let (flat, analytic) = g0
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("non-empty layer");
    let h = 1e-5;
    let eval = |delta: f64| -> driftgan::Result<f64> {
        let mut snap = NetworkSnapshot::from(&net);
        snap.weights[0][flat] += delta;
        let moved = Network::try_from(snap)?;
        Ok(loss_and_gradients(&moved, x.view(), Targets::Categories(&y), Loss::CrossEntropy)?.0)
    };
    let numeric = (eval(h)? - eval(-h)?) / (2.0 * h);
    let (r, c) = (flat / g0.ncols(), flat % g0.ncols());
    println!("dL/dw[{r}][{c}]: analytic {analytic:.3e}, numeric {numeric:.3e}");
    Ok(())
}
