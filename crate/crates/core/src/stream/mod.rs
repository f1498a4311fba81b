//! Stream sources: CSV and ARFF files, and synthetic recurring-drift streams.

mod files;
mod synthetic;

pub use files::{load_arff, load_csv, write_csv};
pub use synthetic::{parse_key_values, synth_recurring, SyntheticSpec};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One stream element: features plus the label revealed after prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub features: Vec<f64>,
    pub label: usize,
    /// Position in the stream, from 0.
    pub index: usize,
}

/// Known change points of a synthetic stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Index of the first instance of every segment after the first.
    pub change_points: Vec<usize>,
    /// Concept name per segment.
    pub segment_concepts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamInfo {
    pub name: String,
    pub features: usize,
    /// Label names; index `i` is encoded as label `i`.
    pub labels: Vec<String>,
    pub ground_truth: Option<GroundTruth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub instances: Vec<LabeledInstance>,
    pub info: StreamInfo,
}

impl Stream {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledInstance> {
        self.instances.iter()
    }

    pub fn label_name(&self, label: usize) -> Option<&str> {
        self.info.labels.get(label).map(String::as_str)
    }

    /// Keeps at most the first `max` instances; ground truth beyond the cut
    /// is dropped.
    pub fn truncate(&mut self, max: usize) {
        self.instances.truncate(max);
        if let Some(gt) = self.info.ground_truth.as_mut() {
            let kept = gt.change_points.iter().take_while(|&&c| c < max).count();
            gt.change_points.truncate(kept);
            gt.segment_concepts.truncate(kept + 1);
        }
    }
}

impl<'a> IntoIterator for &'a Stream {
    type Item = &'a LabeledInstance;
    type IntoIter = std::slice::Iter<'a, LabeledInstance>;

    fn into_iter(self) -> Self::IntoIter {
        self.instances.iter()
    }
}

impl IntoIterator for Stream {
    type Item = LabeledInstance;
    type IntoIter = std::vec::IntoIter<LabeledInstance>;

    fn into_iter(self) -> Self::IntoIter {
        self.instances.into_iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Csv,
    Arff,
}

impl FileFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(FileFormat::Csv),
            "arff" => Some(FileFormat::Arff),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StreamSource {
    File { path: PathBuf, format: FileFormat },
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub source: StreamSource,
    pub max_instances: Option<usize>,
}

/// Materializes the stream described by `spec`, in source order.
pub fn load(spec: &StreamSpec) -> Result<Stream> {
    let mut stream = match &spec.source {
        StreamSource::File { path, format } => match format {
            FileFormat::Csv => load_csv(path)?,
            FileFormat::Arff => load_arff(path)?,
        },
        StreamSource::Synthetic(s) => synth_recurring(s)?,
    };
    if let Some(max) = spec.max_instances {
        if max == 0 {
            return Err(Error::usage("max_instances must be positive"));
        }
        stream.truncate(max);
    }
    Ok(stream)
}
