//! Synthetic streams with abrupt, recurring concept changes and known
//! ground truth.
//!
//! Concepts are named by single letters. Concept `c` (the c-th letter,
//! zero-based) is a two-label Gaussian mixture over `features` dimensions
//! with unit noise:
//!
//! - its center on the first `features - 1` coordinates is
//!   `±separation / 2`, signed by the Walsh function of index `c + 1`, so two
//!   concepts differ by `separation` on every coordinate where their sign
//!   patterns disagree (about half of them) and stay distinct after
//!   per-vector standardization;
//! - the label is carried by the last coordinate, whose per-label mean is
//!   `±label_offset`, with the sign flipped for odd-numbered concepts so a
//!   classifier fit on one concept mislabels its neighbour.
//!
//! `noise` flips each label independently with that probability.
//!
//! # Config file grammar
//!
//! Flat `key = value` lines; `#` starts a comment; blank lines are ignored.
//!
//! ```text
//! features       = 10          # >= 2
//! separation     = 4.0         # center offset in noise standard deviations
//! label_offset   = 2.0
//! noise          = 0.0         # label flip probability
//! order          = A,B,A,B     # concept letters, one per segment
//! segment_length = 2000        # one value, or one per segment: 2000,1500,...
//! seed           = 1
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{GroundTruth, LabeledInstance, Stream, StreamInfo};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub features: usize,
    pub separation: f64,
    pub label_offset: f64,
    pub noise: f64,
    /// Concept letter per segment.
    pub order: Vec<char>,
    pub segment_lengths: Vec<usize>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            features: 10,
            separation: 4.0,
            label_offset: 2.0,
            noise: 0.0,
            order: vec!['A', 'B', 'A', 'B'],
            segment_lengths: vec![2000; 4],
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    /// `order` as concept letters, each segment `length` long.
    pub fn recurring(order: &str, length: usize, seed: u64) -> Result<Self> {
        let order = parse_order(order)?;
        Ok(SyntheticSpec {
            segment_lengths: vec![length; order.len()],
            order,
            seed,
            ..Default::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.features < 2 {
            return Err(Error::usage("synthetic streams need at least 2 features"));
        }
        if self.order.is_empty() {
            return Err(Error::usage("segment order is empty"));
        }
        if let Some(c) = self.order.iter().find(|c| !c.is_ascii_uppercase()) {
            return Err(Error::usage(format!("concept '{c}' is not a letter A-Z")));
        }
        if self.segment_lengths.len() != self.order.len() {
            return Err(Error::usage(format!(
                "{} segment lengths for {} segments",
                self.segment_lengths.len(),
                self.order.len()
            )));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::usage("noise must lie in [0, 1]"));
        }
        if !self.separation.is_finite() || !self.label_offset.is_finite() {
            return Err(Error::usage("separation and label_offset must be finite"));
        }
        Ok(())
    }

    /// Mean of `label` under `concept`.
    pub fn concept_mean(&self, concept: char, label: usize) -> Vec<f64> {
        let c = (concept as u8 - b'A') as usize;
        let mut mean: Vec<f64> = (0..self.features - 1)
            .map(|j| 0.5 * self.separation * walsh(c + 1, j))
            .collect();
        let sign = if c.is_multiple_of(2) { 1.0 } else { -1.0 };
        let side = if label == 1 { 1.0 } else { -1.0 };
        mean.push(sign * side * self.label_offset);
        mean
    }

    pub fn from_config_str(text: &str) -> Result<Self> {
        let path = Path::new("<synthetic config>");
        let map = parse_key_values(text, path)?;
        let mut spec = SyntheticSpec::default();
        let mut lengths: Option<Vec<usize>> = None;
        for (key, (line, value)) in &map {
            let bad = |m: String| Error::Parse {
                path: path.into(),
                line: *line,
                message: m,
            };
            match key.as_str() {
                "features" => spec.features = value.parse().map_err(|e| bad(format!("features: {e}")))?,
                "separation" => spec.separation = value.parse().map_err(|e| bad(format!("separation: {e}")))?,
                "label_offset" => {
                    spec.label_offset = value.parse().map_err(|e| bad(format!("label_offset: {e}")))?
                }
                "noise" => spec.noise = value.parse().map_err(|e| bad(format!("noise: {e}")))?,
                "seed" => spec.seed = value.parse().map_err(|e| bad(format!("seed: {e}")))?,
                "order" => spec.order = parse_order(value).map_err(|e| bad(e.to_string()))?,
                "segment_length" => {
                    lengths = Some(
                        value
                            .split(',')
                            .map(|v| v.trim().parse::<usize>())
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|e| bad(format!("segment_length: {e}")))?,
                    )
                }
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        spec.segment_lengths = match lengths {
            Some(l) if l.len() == 1 => vec![l[0]; spec.order.len()],
            Some(l) => l,
            None => vec![2000; spec.order.len()],
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_config_string(&self) -> String {
        let order: Vec<String> = self.order.iter().map(char::to_string).collect();
        let lengths: Vec<String> = self.segment_lengths.iter().map(usize::to_string).collect();
        format!(
            "features = {}\nseparation = {}\nlabel_offset = {}\nnoise = {}\norder = {}\nsegment_length = {}\nseed = {}\n",
            self.features,
            self.separation,
            self.label_offset,
            self.noise,
            order.join(","),
            lengths.join(","),
            self.seed
        )
    }
}

/// Walsh function `(-1)^popcount(m & j)`.
fn walsh(m: usize, j: usize) -> f64 {
    if (m & j).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn parse_order(text: &str) -> Result<Vec<char>> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) if c.is_ascii_uppercase() => Ok(c),
                _ => Err(Error::usage(format!("bad concept name '{s}' (expected A-Z)"))),
            }
        })
        .collect()
}

/// Parses flat `key = value` lines into a map of key to (line number, value).
pub fn parse_key_values(text: &str, path: &Path) -> Result<BTreeMap<String, (usize, String)>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.into(),
            line: i + 1,
            message: format!("expected key = value, got '{line}'"),
        })?;
        map.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
    }
    Ok(map)
}

/// Generates the stream described by `spec`. Deterministic per seed.
pub fn synth_recurring(spec: &SyntheticSpec) -> Result<Stream> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let total: usize = spec.segment_lengths.iter().sum();
    let mut instances = Vec::with_capacity(total);
    let mut change_points = Vec::new();
    for (seg, (&concept, &len)) in spec.order.iter().zip(&spec.segment_lengths).enumerate() {
        if seg > 0 {
            change_points.push(instances.len());
        }
        let means = [spec.concept_mean(concept, 0), spec.concept_mean(concept, 1)];
        for _ in 0..len {
            let label = rng.random_range(0..2usize);
            let features = means[label].iter().map(|m| m + unit.sample(&mut rng)).collect();
            let label = if spec.noise > 0.0 && rng.random_bool(spec.noise) {
                1 - label
            } else {
                label
            };
            let index = instances.len();
            instances.push(LabeledInstance {
                features,
                label,
                index,
            });
        }
    }
    Ok(Stream {
        instances,
        info: StreamInfo {
            name: format!("synthetic-{}", spec.order.iter().collect::<String>()),
            features: spec.features,
            labels: vec!["0".into(), "1".into()],
            ground_truth: Some(GroundTruth {
                change_points,
                segment_concepts: spec.order.iter().map(char::to_string).collect(),
            }),
        },
    })
}
