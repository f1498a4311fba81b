//! Learns `y = x[2] > 0.3` incrementally and shows the split the tree picks.
//!
//! ```text
//! cargo run --release --example hoeffding_tree
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use driftgan::tree::{hoeffding_bound, HoeffdingTree, TreeConfig};

fn main() -> driftgan::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut tree = HoeffdingTree::new(4, 2, TreeConfig::default())?;
    let mut correct = 0;
    for i in 1..=5000 {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = usize::from(x[2] > 0.3);
        correct += usize::from(tree.predict(&x)? == y);
        tree.partial_fit(&x, y)?;
        if i % 1000 == 0 {
            println!(
                "{i:5} seen: accuracy {:.3}, {} leaves, split features {:?}",
                correct as f64 / i as f64,
                tree.leaf_count(),
                tree.split_features()
            );
        }
    }
    for n in [200.0, 1000.0, 5000.0] {
        println!("bound after {n} instances: {:.4}", hoeffding_bound(1.0, 1e-7, n));
    }
    Ok(())
}
