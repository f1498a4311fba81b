//! Prequential accuracy of the drift-aware strategy and the three baselines
//! on one recurring stream.
//!
//! ```text
//! cargo run --release --example compare_strategies -- A,B,A,B 2000
//! ```

use driftgan::eval::prequential_run;
use driftgan::strategy::{Strategy, StrategyConfig, StrategyKind};
use driftgan::stream::{synth_recurring, SyntheticSpec};

fn main() -> driftgan::Result<()> {
    let mut args = std::env::args().skip(1);
    let order = args.next().unwrap_or_else(|| "A,B,A,B".into());
    let len = args.next().and_then(|s| s.parse().ok()).unwrap_or(2000);
    let stream = synth_recurring(&SyntheticSpec::recurring(&order, len, 3)?)?;

    println!("{:<16} {:>8} {:>7} {:>8}", "strategy", "accuracy", "drifts", "seconds");
    for kind in StrategyKind::ALL {
        let cfg = StrategyConfig::new(kind);
        let max_delay = 3 * cfg.detector.batch_size;
        let mut s = Strategy::new(cfg, stream.info.features, stream.info.labels.len())?;
        let r = prequential_run(&stream, &mut s, max_delay)?;
        println!("{:<16} {:>8.4} {:>7} {:>8.1}", kind, r.accuracy, r.drift_count(), r.wall_time_secs);
    }
    Ok(())
}
