//! Feeds a synthetic A,B,A,C,B stream through the detector alone and prints
//! every drift it signals next to the true change points.
//!
//! ```text
//! cargo run --release --example detect_drift
//! ```

use driftgan::detector::{DetectorConfig, DriftDetector, DriftKind};
use driftgan::stream::{synth_recurring, SyntheticSpec};

fn main() -> driftgan::Result<()> {
    let stream = synth_recurring(&SyntheticSpec::recurring("A,B,A,C,B", 1500, 11)?)?;
    let truth = stream.info.ground_truth.clone().expect("synthetic streams carry ground truth");
    println!("change points {:?}, concepts {:?}", truth.change_points, truth.segment_concepts);

    let config = DetectorConfig {
        seed: 11,
        ..DetectorConfig::default()
    };
    let rho = config.rho;
    let mut detector = DriftDetector::fit(&stream.instances[..rho], config)?;
    for inst in &stream.instances[rho..] {
        let Some(decision) = detector.push(inst)? else { continue };
        match decision.kind {
            DriftKind::None => {}
            DriftKind::New(id) => println!("{:6}  new distribution {id}", decision.instance_index),
            DriftKind::Recurring(id) => println!("{:6}  back to distribution {id}", decision.instance_index),
        }
    }
    println!("{} distributions registered", detector.registry().len());
    Ok(())
}
