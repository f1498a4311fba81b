//! Builds a synthetic stream, round-trips it through CSV, and parses a small
//! ARFF file with a nominal class.
//!
//! ```text
//! cargo run --release --example streams
//! ```

use std::fs;

use driftgan::stream::{self, FileFormat, StreamSource, StreamSpec, SyntheticSpec};

const ARFF: &str = "\
@relation weather
@attribute temperature numeric
@attribute humidity numeric
@attribute play {yes,no}
@data
85,85,no
80,90,no
83,86,yes
70,96,yes
% a comment
68,80,yes
";

fn main() -> driftgan::Result<()> {
    let spec = SyntheticSpec::from_config_str(
        "features = 4\norder = A,B,A\nsegment_length = 500,300,500\nnoise = 0.05\nseed = 9\n",
    )?;
    let s = stream::synth_recurring(&spec)?;
    println!("{}: {} instances, labels {:?}", s.info.name, s.len(), s.info.labels);
    println!("ground truth {:?}", s.info.ground_truth);
    println!("concept A means: {:?} / {:?}", spec.concept_mean('A', 0), spec.concept_mean('A', 1));

    let dir = std::env::temp_dir().join("driftgan-streams-example");
    fs::create_dir_all(&dir).map_err(|e| driftgan::Error::io(&dir, e))?;
    let csv = dir.join("stream.csv");
    stream::write_csv(&s, &csv)?;
    let back = stream::load(&StreamSpec {
        source: StreamSource::File {
            path: csv.clone(),
            format: FileFormat::Csv,
        },
        max_instances: Some(600),
    })?;
    println!("reloaded first {} rows of {}", back.len(), csv.display());

    let arff = dir.join("weather.arff");
    fs::write(&arff, ARFF).map_err(|e| driftgan::Error::io(&arff, e))?;
    let w = stream::load_arff(&arff)?;
    for inst in w.iter() {
        println!("{:?} -> {}", inst.features, w.label_name(inst.label).unwrap_or("?"));
    }
    Ok(())
}
