//! One prequential run of the drift-aware strategy with detection scoring,
//! written out as a JSON report and a CSV drift log.
//!
//! ```text
//! cargo run --release --example prequential_report -- out/example
//! ```

use std::path::PathBuf;

use driftgan::eval::{prequential_trace, read_report, write_drift_log, write_report};
use driftgan::strategy::{Strategy, StrategyConfig, StrategyKind};
use driftgan::stream::{synth_recurring, SyntheticSpec};

fn main() -> driftgan::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/example".into()));
    std::fs::create_dir_all(&out).map_err(|e| driftgan::Error::io(&out, e))?;

    let stream = synth_recurring(&SyntheticSpec::recurring("A,B,A", 1500, 4)?)?;
    let cfg = StrategyConfig::new(StrategyKind::DriftGan);
    let max_delay = 3 * cfg.detector.batch_size;
    let mut strategy = Strategy::new(cfg, stream.info.features, stream.info.labels.len())?;
    let (report, trace) = prequential_trace(&stream, &mut strategy, max_delay)?;

    // Accuracy per 500 scored instances shows the dip after each change.
    for chunk in trace.chunks(500) {
        let hits = chunk.iter().filter(|p| p.predicted == p.label).count();
        println!("instances {:5}..{:5}: {:.3}", chunk[0].index, chunk[chunk.len() - 1].index, hits as f64 / chunk.len() as f64);
    }
    if let Some(d) = &report.detection {
        println!("delays {:?}, false alarms {}, recurrence-id accuracy {:?}", d.delays, d.false_alarms, d.recurrence_id_accuracy);
    }

    let path = out.join("report.json");
    write_report(&report, &path)?;
    write_drift_log(&report.drift_events, out.join("drifts.csv"))?;
    let again = read_report(&path)?;
    println!("accuracy {:.4} ({} / {}), report at {}", again.accuracy, again.correct, again.scored, path.display());
    Ok(())
}
