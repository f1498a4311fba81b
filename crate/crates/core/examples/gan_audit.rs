//! Trains the GAN on a single window of concept A and reports how the
//! discriminator labels the window, the generator's outputs, fresh A
//! vectors and vectors from concept B.
//!
//! ```text
//! cargo run --release --example gan_audit -- 3
//! ```

use std::time::Instant;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use driftgan::detector::{classify_batch, standardize, train_gan, DistributionId, DistributionRegistry, GanConfig};
use driftgan::stream::{synth_recurring, SyntheticSpec};

fn share(net: &driftgan::nn::Network, rows: &[Vec<f64>], id: usize) -> driftgan::Result<f64> {
    let x = Array2::from_shape_vec((rows.len(), rows[0].len()), rows.concat()).expect("rectangular");
    let ids = classify_batch(net, x.view())?;
    Ok(ids.iter().filter(|&&i| i == DistributionId(id)).count() as f64 / ids.len() as f64)
}

fn main() -> driftgan::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let stream = synth_recurring(&SyntheticSpec::recurring("A,B", 1000, seed)?)?;
    let z: Vec<Vec<f64>> = stream.iter().map(|i| standardize(&i.features)).collect();
    let (window, rest) = z.split_at(100);

    let registry = DistributionRegistry::new(window.to_vec(), 10_000);
    let cfg = GanConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = Instant::now();
    let (gan, stats) = train_gan(&registry, 4, &cfg, &mut rng)?;
    println!(
        "trained {} epochs in {:.1?}; discriminator loss {:.4}, generator loss {:.4}",
        stats.epochs,
        t.elapsed(),
        stats.discriminator_loss,
        stats.generator_loss
    );

    let generated: Vec<Vec<f64>> = gan.generate(window, 4)?.rows().into_iter().map(|r| r.to_vec()).collect();
    let d = &gan.discriminator;
    println!("window      -> 1: {:.3}", share(d, window, 1)?);
    println!("generated   -> 0: {:.3}", share(d, &generated, 0)?);
    println!("held-out A  -> 1: {:.3}", share(d, &rest[..900], 1)?);
    println!("concept B   -> 0: {:.3}", share(d, &rest[900..], 0)?);
    Ok(())
}
