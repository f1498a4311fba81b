//! Prequential (test-then-train) evaluation, drift scoring and report files.
//!
//! The first `warmup` instances initialize the learner and are never scored;
//! every later instance is predicted, scored, then learned.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::detector::{DriftDecision, DriftKind};
use crate::error::{Error, Result};
use crate::strategy::StreamLearner;
use crate::stream::{GroundTruth, Stream};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    New,
    Recurring,
}

/// One row of the drift log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftEvent {
    pub instance_index: usize,
    pub kind: EventKind,
    pub distribution_id: usize,
}

impl DriftEvent {
    pub fn from_decision(d: &DriftDecision) -> Option<Self> {
        let (kind, id) = match d.kind {
            DriftKind::None => return None,
            DriftKind::New(id) => (EventKind::New, id),
            DriftKind::Recurring(id) => (EventKind::Recurring, id),
        };
        Some(DriftEvent {
            instance_index: d.instance_index,
            kind,
            distribution_id: id.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionScore {
    /// Delay per change point, `None` when it was missed.
    pub delays: Vec<Option<usize>>,
    pub mean_delay: Option<f64>,
    pub false_alarms: usize,
    /// Unmatched events per segment, including the first.
    pub false_alarms_per_segment: Vec<usize>,
    /// Share of repeated-concept segments detected with the id the concept
    /// was first registered under; `None` if no concept repeats.
    pub recurrence_id_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub dataset: String,
    pub strategy: String,
    pub config: serde_json::Value,
    pub instances: usize,
    pub warmup: usize,
    pub scored: usize,
    pub correct: usize,
    /// `correct / scored`.
    pub accuracy: f64,
    pub drift_events: Vec<DriftEvent>,
    pub detection: Option<DetectionScore>,
    pub wall_time_secs: f64,
}

impl RunReport {
    pub fn drift_count(&self) -> usize {
        self.drift_events.len()
    }
}

/// Per-instance record of a scored prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    pub index: usize,
    pub predicted: usize,
    pub label: usize,
}

impl Prediction {
    pub fn correct(&self) -> bool {
        self.predicted == self.label
    }
}

/// Runs `learner` over `stream`. `max_delay` bounds how late an event may be
/// and still count as detecting a change point.
pub fn prequential_run(
    stream: &Stream,
    learner: &mut dyn StreamLearner,
    max_delay: usize,
) -> Result<RunReport> {
    prequential_trace(stream, learner, max_delay).map(|(r, _)| r)
}

/// [`prequential_run`] that also returns every scored prediction.
pub fn prequential_trace(
    stream: &Stream,
    learner: &mut dyn StreamLearner,
    max_delay: usize,
) -> Result<(RunReport, Vec<Prediction>)> {
    let warmup = learner.warmup();
    if stream.len() <= warmup {
        return Err(Error::usage(format!(
            "stream has {} instances; need more than the {warmup}-instance initial window",
            stream.len()
        )));
    }
    let start = Instant::now();
    learner.initialize(&stream.instances[..warmup])?;
    let mut trace = Vec::with_capacity(stream.len() - warmup);
    let mut events = Vec::new();
    for inst in &stream.instances[warmup..] {
        let step = learner.step(inst)?;
        trace.push(Prediction {
            index: inst.index,
            predicted: step.prediction,
            label: inst.label,
        });
        events.extend(step.drift.as_ref().and_then(DriftEvent::from_decision));
    }
    let correct = trace.iter().filter(|p| p.correct()).count();
    let detection = stream
        .info
        .ground_truth
        .as_ref()
        .map(|gt| score_detection(&events, gt, stream.len(), max_delay));
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        dataset: stream.info.name.clone(),
        strategy: learner.name(),
        config: learner.config_snapshot(),
        instances: stream.len(),
        warmup,
        scored: trace.len(),
        correct,
        accuracy: correct as f64 / trace.len() as f64,
        drift_events: events,
        detection,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok((report, trace))
}

/// Matches each change point to the first event in `[change, change + max_delay]`
/// within its segment. Every other event is a false alarm in the segment it
/// falls in.
pub fn score_detection(
    events: &[DriftEvent],
    truth: &GroundTruth,
    stream_len: usize,
    max_delay: usize,
) -> DetectionScore {
    let mut bounds = vec![0];
    bounds.extend(&truth.change_points);
    bounds.push(stream_len.max(*bounds.last().unwrap_or(&0)));
    let segments = bounds.len() - 1;

    let mut matched = vec![false; events.len()];
    let mut delays = Vec::with_capacity(segments.saturating_sub(1));
    let mut matched_id: Vec<Option<usize>> = vec![None; segments];
    for s in 1..segments {
        let (lo, hi) = (bounds[s], bounds[s + 1]);
        let limit = hi.min(lo.saturating_add(max_delay).saturating_add(1));
        let hit = events
            .iter()
            .position(|e| e.instance_index >= lo && e.instance_index < limit);
        match hit {
            Some(i) => {
                matched[i] = true;
                delays.push(Some(events[i].instance_index - lo));
                matched_id[s] = Some(events[i].distribution_id);
            }
            None => delays.push(None),
        }
    }

    let mut false_alarms_per_segment = vec![0; segments];
    for (e, _) in events.iter().zip(&matched).filter(|(_, m)| !**m) {
        let s = bounds[1..].iter().position(|&b| e.instance_index < b).unwrap_or(segments - 1);
        false_alarms_per_segment[s] += 1;
    }

    // Concept name -> id of its first registration.
    let mut first_id: HashMap<&str, Option<usize>> = HashMap::new();
    let (mut repeats, mut right) = (0usize, 0usize);
    for (s, concept) in truth.segment_concepts.iter().enumerate().take(segments) {
        let registered = if s == 0 { Some(1) } else { matched_id[s] };
        match first_id.get(concept.as_str()) {
            None => {
                first_id.insert(concept, registered);
            }
            Some(expected) => {
                repeats += 1;
                if expected.is_some() && *expected == matched_id[s] {
                    right += 1;
                }
            }
        }
    }

    let found: Vec<usize> = delays.iter().flatten().copied().collect();
    DetectionScore {
        mean_delay: (!found.is_empty()).then(|| found.iter().sum::<usize>() as f64 / found.len() as f64),
        delays,
        false_alarms: false_alarms_per_segment.iter().sum(),
        false_alarms_per_segment,
        recurrence_id_accuracy: (repeats > 0).then(|| right as f64 / repeats as f64),
    }
}

pub fn write_report(report: &RunReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(report)?;
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<RunReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let report: RunReport = serde_json::from_str(&text)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(Error::usage(format!(
            "{}: unsupported report schema_version {}",
            path.display(),
            report.schema_version
        )));
    }
    Ok(report)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse {
            path: path.into(),
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

/// One row per report: `dataset,strategy,accuracy,instances,scored,drifts`.
pub fn compare_reports(reports: &[RunReport], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["dataset", "strategy", "accuracy", "instances", "scored", "drifts"])
        .map_err(|e| csv_err(path, e))?;
    for r in reports {
        w.write_record([
            r.dataset.clone(),
            r.strategy.clone(),
            format!("{:.6}", r.accuracy),
            r.instances.to_string(),
            r.scored.to_string(),
            r.drift_count().to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `instance_index,kind,distribution_id` rows.
pub fn write_drift_log(events: &[DriftEvent], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    if events.is_empty() {
        w.write_record(["instance_index", "kind", "distribution_id"])
            .map_err(|e| csv_err(path, e))?;
    }
    for e in events {
        w.serialize(e).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_drift_log(path: impl AsRef<Path>) -> Result<Vec<DriftEvent>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_err(path, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{LabeledInstance, StreamInfo};
    use crate::strategy::Step;

    fn event(i: usize, kind: EventKind, id: usize) -> DriftEvent {
        DriftEvent {
            instance_index: i,
            kind,
            distribution_id: id,
        }
    }

    fn aba() -> GroundTruth {
        GroundTruth {
            change_points: vec![2000, 4000],
            segment_concepts: vec!["A".into(), "B".into(), "A".into()],
        }
    }

    struct Constant(usize);

    impl StreamLearner for Constant {
        fn name(&self) -> String {
            "constant".into()
        }
        fn warmup(&self) -> usize {
            10
        }
        fn initialize(&mut self, _: &[LabeledInstance]) -> Result<()> {
            Ok(())
        }
        fn step(&mut self, _: &LabeledInstance) -> Result<Step> {
            Ok(Step {
                prediction: self.0,
                drift: None,
            })
        }
    }

    fn toy(labels: &[usize]) -> Stream {
        Stream {
            instances: labels
                .iter()
                .enumerate()
                .map(|(index, &label)| LabeledInstance {
                    features: vec![index as f64],
                    label,
                    index,
                })
                .collect(),
            info: StreamInfo {
                name: "toy".into(),
                features: 1,
                labels: vec!["0".into(), "1".into()],
                ground_truth: None,
            },
        }
    }

    #[test]
    fn exact_events_have_zero_delay() {
        let ev = [event(2000, EventKind::New, 2), event(4000, EventKind::Recurring, 1)];
        let s = score_detection(&ev, &aba(), 6000, 300);
        assert_eq!(s.delays, vec![Some(0), Some(0)]);
        assert_eq!(s.mean_delay, Some(0.0));
        assert_eq!(s.false_alarms, 0);
        assert_eq!(s.recurrence_id_accuracy, Some(1.0));
    }

    #[test]
    fn extra_event_is_a_false_alarm() {
        let ev = [
            event(1000, EventKind::New, 2),
            event(2099, EventKind::New, 3),
            event(4199, EventKind::Recurring, 2),
        ];
        let s = score_detection(&ev, &aba(), 6000, 300);
        assert_eq!(s.false_alarms_per_segment, vec![1, 0, 0]);
        assert_eq!(s.delays, vec![Some(99), Some(199)]);
        // A was first seen as distribution 1.
        assert_eq!(s.recurrence_id_accuracy, Some(0.0));
    }

    #[test]
    fn late_event_counts_as_missed() {
        let ev = [event(2500, EventKind::New, 2)];
        let s = score_detection(&ev, &aba(), 6000, 300);
        assert_eq!(s.delays, vec![None, None]);
        assert_eq!(s.false_alarms, 1);
        assert_eq!(s.mean_delay, None);
    }

    #[test]
    fn constant_prediction_scores_the_majority_share() {
        let labels: Vec<usize> = (0..110).map(|i| usize::from(i % 5 < 3)).collect();
        let (report, trace) = prequential_trace(&toy(&labels), &mut Constant(1), 0).unwrap();
        assert_eq!(report.scored, 100);
        assert_eq!(trace.len(), 100);
        assert!((report.accuracy - 0.6).abs() < 1e-12);
        assert_eq!(report.schema_version, 1);
    }

    #[test]
    fn short_stream_rejected() {
        let s = toy(&[0; 10]);
        assert!(matches!(prequential_run(&s, &mut Constant(0), 0), Err(Error::Usage(_))));
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (report, _) = prequential_trace(&toy(&[1; 30]), &mut Constant(1), 0).unwrap();
        let mut report = report;
        report.drift_events = vec![event(12, EventKind::New, 2), event(25, EventKind::Recurring, 1)];
        let p = dir.path().join("r.json");
        write_report(&report, &p).unwrap();
        assert_eq!(read_report(&p).unwrap(), report);
        let first = fs::read_to_string(&p).unwrap();
        write_report(&read_report(&p).unwrap(), &p).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), first);

        let log = dir.path().join("d.csv");
        write_drift_log(&report.drift_events, &log).unwrap();
        assert_eq!(
            fs::read_to_string(&log).unwrap(),
            "instance_index,kind,distribution_id\n12,new,2\n25,recurring,1\n"
        );
        assert_eq!(read_drift_log(&log).unwrap(), report.drift_events);
        write_drift_log(&[], &log).unwrap();
        assert!(read_drift_log(&log).unwrap().is_empty());

        let table = dir.path().join("c.csv");
        let reports: Vec<RunReport> = ["a", "b", "c", "d"]
            .iter()
            .map(|s| RunReport {
                strategy: s.to_string(),
                ..report.clone()
            })
            .collect();
        compare_reports(&reports, &table).unwrap();
        assert_eq!(fs::read_to_string(&table).unwrap().lines().count(), 5);
    }
}
