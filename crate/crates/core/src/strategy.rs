//! Streaming strategies: a Hoeffding tree kept up to date by the GAN drift
//! detector, or by one of three detector-free baselines.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detector::{DetectorConfig, DriftDecision, DriftDetector, DriftKind};
use crate::error::{Error, Result};
use crate::stream::LabeledInstance;
use crate::tree::{HoeffdingTree, TreeConfig};

/// What one test-then-train step produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    /// Made before the label was seen.
    pub prediction: usize,
    pub drift: Option<DriftDecision>,
}

/// Anything the prequential harness can drive.
pub trait StreamLearner {
    fn name(&self) -> String;

    /// Leading instances consumed by [`initialize`](Self::initialize) and
    /// excluded from scoring.
    fn warmup(&self) -> usize;

    fn initialize(&mut self, initial: &[LabeledInstance]) -> Result<()>;

    /// Predicts `inst`, then learns from its label.
    fn step(&mut self, inst: &LabeledInstance) -> Result<Step>;

    /// Settings recorded in run reports.
    fn config_snapshot(&self) -> serde_json::Value {
        serde_json::Value::Null
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// Reset and retrain the tree whenever the detector signals a drift.
    DriftGan,
    /// Train once on the initial window.
    InitialLearn,
    /// Learn every instance and rebuild from the trailing window at a fixed interval.
    RegularRetrain,
    /// Learn every instance.
    RegularUpdate,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::DriftGan,
        StrategyKind::InitialLearn,
        StrategyKind::RegularRetrain,
        StrategyKind::RegularUpdate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::DriftGan => "driftgan",
            StrategyKind::InitialLearn => "initial_learn",
            StrategyKind::RegularRetrain => "regular_retrain",
            StrategyKind::RegularUpdate => "regular_update",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::usage(format!(
                    "unknown strategy '{s}' (expected driftgan, initial_learn, regular_retrain or regular_update)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    /// Rebuild interval for `regular_retrain`; `None` means `detector.rho`.
    pub retrain_interval: Option<usize>,
    pub tree: TreeConfig,
    /// `rho` also sets every strategy's initial window.
    pub detector: DetectorConfig,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind) -> Self {
        StrategyConfig {
            kind,
            retrain_interval: None,
            tree: TreeConfig::default(),
            detector: DetectorConfig::default(),
        }
    }

    pub fn interval(&self) -> usize {
        self.retrain_interval.unwrap_or(self.detector.rho)
    }

    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        if self.interval() == 0 {
            return Err(Error::usage("retrain_interval must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Strategy {
    config: StrategyConfig,
    tree: HoeffdingTree,
    detector: Option<DriftDetector>,
    /// The most recent instances: the last batch for `driftgan`, the last
    /// `rho` for `regular_retrain`.
    recent: VecDeque<LabeledInstance>,
    since_retrain: usize,
}

impl Strategy {
    pub fn new(config: StrategyConfig, features: usize, labels: usize) -> Result<Self> {
        config.validate()?;
        let tree = HoeffdingTree::new(features, labels, config.tree.clone())?;
        Ok(Strategy {
            config,
            tree,
            detector: None,
            recent: VecDeque::new(),
            since_retrain: 0,
        })
    }

    pub fn kind(&self) -> StrategyKind {
        self.config.kind
    }

    pub fn config(&self) -> &StrategyConfig {
        &self.config
    }

    pub fn tree(&self) -> &HoeffdingTree {
        &self.tree
    }

    /// The drift detector, once a `driftgan` strategy is initialized.
    pub fn detector(&self) -> Option<&DriftDetector> {
        self.detector.as_ref()
    }

    fn remember(&mut self, inst: &LabeledInstance, cap: usize) {
        self.recent.push_back(inst.clone());
        while self.recent.len() > cap {
            self.recent.pop_front();
        }
    }

    fn retrain_after(&mut self, decision: DriftDecision) -> Result<()> {
        let detector = self.detector.as_mut().expect("driftgan has a detector");
        let batch: Vec<LabeledInstance> = self.recent.iter().cloned().collect();
        let mut replay = Vec::new();
        if let DriftKind::Recurring(id) = decision.kind {
            // The triggering batch is already filed under `id`; skip it here.
            let in_batch: HashSet<usize> = batch.iter().map(|i| i.index).collect();
            replay = detector.historical_sample(id)?;
            replay.retain(|i| !in_batch.contains(&i.index));
        }
        self.tree.reset();
        for inst in replay.iter().chain(&batch) {
            self.tree.partial_fit(&inst.features, inst.label)?;
        }
        Ok(())
    }
}

impl StreamLearner for Strategy {
    fn name(&self) -> String {
        self.config.kind.to_string()
    }

    fn warmup(&self) -> usize {
        self.config.detector.rho
    }

    fn initialize(&mut self, initial: &[LabeledInstance]) -> Result<()> {
        let rho = self.config.detector.rho;
        if initial.len() < rho {
            return Err(Error::usage(format!(
                "need {rho} initial instances, got {}",
                initial.len()
            )));
        }
        let initial = &initial[..rho];
        self.tree.reset();
        self.recent.clear();
        self.since_retrain = 0;
        for inst in initial {
            self.tree.partial_fit(&inst.features, inst.label)?;
        }
        match self.config.kind {
            StrategyKind::DriftGan => {
                self.detector = Some(DriftDetector::fit(initial, self.config.detector.clone())?);
            }
            StrategyKind::RegularRetrain => self.recent.extend(initial.iter().cloned()),
            StrategyKind::InitialLearn | StrategyKind::RegularUpdate => {}
        }
        Ok(())
    }

    fn step(&mut self, inst: &LabeledInstance) -> Result<Step> {
        let prediction = self.tree.predict(&inst.features)?;
        let mut drift = None;
        match self.config.kind {
            StrategyKind::InitialLearn => {}
            StrategyKind::RegularUpdate => self.tree.partial_fit(&inst.features, inst.label)?,
            StrategyKind::RegularRetrain => {
                self.tree.partial_fit(&inst.features, inst.label)?;
                self.remember(inst, self.config.detector.rho);
                self.since_retrain += 1;
                if self.since_retrain >= self.config.interval() {
                    self.since_retrain = 0;
                    self.tree.reset();
                    for i in &self.recent {
                        self.tree.partial_fit(&i.features, i.label)?;
                    }
                }
            }
            StrategyKind::DriftGan => {
                self.tree.partial_fit(&inst.features, inst.label)?;
                self.remember(inst, self.config.detector.batch_size);
                let detector = self
                    .detector
                    .as_mut()
                    .ok_or_else(|| Error::usage("driftgan strategy used before initialize"))?;
                if let Some(decision) = detector.push(inst)? {
                    if decision.is_drift() {
                        self.retrain_after(decision)?;
                        drift = Some(decision);
                    }
                }
            }
        }
        Ok(Step { prediction, drift })
    }

    fn config_snapshot(&self) -> serde_json::Value {
        serde_json::to_value(&self.config).unwrap_or(serde_json::Value::Null)
    }
}
