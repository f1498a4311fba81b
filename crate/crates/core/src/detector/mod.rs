//! Unsupervised drift detection with a dynamically extended GAN
//! discriminator.
//!
//! Incoming vectors are standardized and grouped into batches. A drift is
//! signalled only when every vector of a batch is assigned the same
//! distribution and that distribution is not the current one. Consensus on
//! a registered distribution is a recurrence; consensus on the unseen class
//! registers a new distribution, grows the discriminator by one output and
//! retrains the pair on all stored windows.

mod gan;
mod registry;
mod standardize;

pub use gan::{retrain_gan, train_gan, Gan, GanConfig, TrainStats};
pub use registry::{DistributionId, DistributionRecord, DistributionRegistry};
pub use standardize::standardize;

use log::info;
use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::LabeledInstance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Vectors used to train the GAN for each distribution.
    pub rho: usize,
    /// Vectors that must agree before a drift is signalled.
    pub batch_size: usize,
    /// Length of the vector sequences the generator reads.
    pub seq_len: usize,
    /// Fraction of stored exemplars replayed to the classifier on recurrence.
    pub lambda: f64,
    /// Maximum exemplars kept per distribution.
    pub per_dist_cap: usize,
    pub seed: u64,
    pub gan: GanConfig,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            rho: 100,
            batch_size: 100,
            seq_len: 4,
            lambda: 1.0,
            per_dist_cap: 10_000,
            seed: 0,
            gan: GanConfig::default(),
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seq_len == 0 {
            return Err(Error::usage("seq_len must be at least 1"));
        }
        if self.rho < self.seq_len + 1 {
            return Err(Error::usage(format!(
                "rho = {} must be at least seq_len + 1 = {}",
                self.rho,
                self.seq_len + 1
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::usage("batch_size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::usage(format!("lambda = {} outside [0, 1]", self.lambda)));
        }
        self.gan.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum DriftKind {
    None,
    Recurring(DistributionId),
    New(DistributionId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftDecision {
    pub kind: DriftKind,
    /// Stream index of the last instance in the deciding batch.
    pub instance_index: usize,
}

impl DriftDecision {
    pub fn is_drift(&self) -> bool {
        self.kind != DriftKind::None
    }

    pub fn distribution(&self) -> Option<DistributionId> {
        match self.kind {
            DriftKind::None => None,
            DriftKind::Recurring(id) | DriftKind::New(id) => Some(id),
        }
    }
}

/// Per-instance argmax over discriminator outputs, ties to the lowest id.
/// Uses the pre-sigmoid logits, whose ordering matches the sigmoid outputs
/// without saturating to equal values.
pub fn classify_batch(discriminator: &crate::nn::Network, batch: ArrayView2<f64>) -> Result<Vec<DistributionId>> {
    if batch.nrows() == 0 {
        return Ok(Vec::new());
    }
    let logits = discriminator.logits_batch(batch)?;
    Ok(logits
        .axis_iter(Axis(0))
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            DistributionId(best)
        })
        .collect())
}

/// A new distribution waiting for `rho` vectors before it is registered.
#[derive(Debug, Clone)]
struct Pending {
    id: DistributionId,
    window: Vec<Vec<f64>>,
    exemplars: Vec<LabeledInstance>,
}

/// Streaming detector state: the GAN, the registry and partially filled
/// batches.
#[derive(Debug, Clone)]
pub struct DriftDetector {
    config: DetectorConfig,
    gan: Gan,
    registry: DistributionRegistry,
    rng: ChaCha8Rng,
    batch: Vec<Vec<f64>>,
    batch_instances: Vec<LabeledInstance>,
    pending: Option<Pending>,
    last_stats: TrainStats,
}

fn rows(vectors: &[Vec<f64>]) -> Result<Array2<f64>> {
    let d = vectors.first().map_or(0, Vec::len);
    if vectors.iter().any(|v| v.len() != d) {
        return Err(Error::usage("vectors of different widths in one batch"));
    }
    Array2::from_shape_vec((vectors.len(), d), vectors.concat()).map_err(|e| Error::usage(e.to_string()))
}

impl DriftDetector {
    /// Trains the initial GAN on the first `rho` instances, which become
    /// distribution 1.
    pub fn fit(initial: &[LabeledInstance], config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        if initial.len() < config.rho {
            return Err(Error::usage(format!(
                "need {} initial instances, got {}",
                config.rho,
                initial.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let window: Vec<Vec<f64>> = initial[..config.rho]
            .iter()
            .map(|i| standardize(&i.features))
            .collect();
        let mut registry = DistributionRegistry::new(window, config.per_dist_cap);
        for inst in initial {
            registry.add_exemplar(DistributionId(1), inst.clone())?;
        }
        let (gan, stats) = train_gan(&registry, config.seq_len, &config.gan, &mut rng)?;
        info!(
            "initial GAN trained: {} epochs, discriminator loss {:.4}",
            stats.epochs, stats.discriminator_loss
        );
        Ok(DriftDetector {
            config,
            gan,
            registry,
            rng,
            batch: Vec::new(),
            batch_instances: Vec::new(),
            pending: None,
            last_stats: stats,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn registry(&self) -> &DistributionRegistry {
        &self.registry
    }

    pub fn gan(&self) -> &Gan {
        &self.gan
    }

    pub fn current(&self) -> DistributionId {
        self.registry.current()
    }

    pub fn last_train_stats(&self) -> TrainStats {
        self.last_stats
    }

    /// True while a new distribution is collecting vectors for registration.
    pub fn is_pending(&self) -> bool {
        self.pending.is_some()
    }

    /// Classifies already standardized vectors.
    pub fn classify(&self, standardized: &[Vec<f64>]) -> Result<Vec<DistributionId>> {
        classify_batch(&self.gan.discriminator, rows(standardized)?.view())
    }

    /// Applies the batch-consensus rule to a batch of raw vectors. `instance_index`
    /// is the stream index of the batch's last element.
    pub fn detect(&mut self, batch: &[Vec<f64>], instance_index: usize) -> Result<DriftDecision> {
        let standardized: Vec<Vec<f64>> = batch.iter().map(|x| standardize(x)).collect();
        self.decide(standardized, instance_index)
    }

    fn decide(&mut self, batch: Vec<Vec<f64>>, instance_index: usize) -> Result<DriftDecision> {
        let none = DriftDecision {
            kind: DriftKind::None,
            instance_index,
        };
        if batch.is_empty() || self.pending.is_some() {
            return Ok(none);
        }
        let ids = self.classify(&batch)?;
        let first = ids[0];
        if first == self.current() || ids.iter().any(|&id| id != first) {
            return Ok(none);
        }
        if !first.is_unseen() {
            self.registry.set_current(first)?;
            info!("recurring distribution {first} at instance {instance_index}");
            return Ok(DriftDecision {
                kind: DriftKind::Recurring(first),
                instance_index,
            });
        }
        let id = DistributionId(self.registry.len() + 1);
        info!("new distribution {id} at instance {instance_index}");
        self.pending = Some(Pending {
            id,
            window: batch,
            exemplars: Vec::new(),
        });
        self.try_complete_registration()?;
        Ok(DriftDecision {
            kind: DriftKind::New(id),
            instance_index,
        })
    }

    fn try_complete_registration(&mut self) -> Result<()> {
        let ready = self
            .pending
            .as_ref()
            .is_some_and(|p| p.window.len() >= self.config.rho);
        if !ready {
            return Ok(());
        }
        let pending = self.pending.take().expect("checked above");
        let mut window = pending.window;
        window.truncate(self.config.rho);
        let id = self.register_distribution(window)?;
        debug_assert_eq!(id, pending.id);
        for inst in pending.exemplars {
            self.registry.add_exemplar(id, inst)?;
        }
        Ok(())
    }

    /// Adds a distribution described by standardized `window`, grows the
    /// discriminator and retrains on every stored window.
    pub fn register_distribution(&mut self, window: Vec<Vec<f64>>) -> Result<DistributionId> {
        if window.len() <= self.config.seq_len {
            return Err(Error::usage(format!(
                "registration window of {} vectors is too short",
                window.len()
            )));
        }
        let id = self.registry.push(window);
        self.gan.discriminator.extend_output_layer(&mut self.rng);
        self.last_stats = retrain_gan(
            &mut self.gan,
            &self.registry,
            self.config.seq_len,
            &self.config.gan,
            &mut self.rng,
        )?;
        info!(
            "registered distribution {id}; retrained {} epochs, discriminator loss {:.4}",
            self.last_stats.epochs, self.last_stats.discriminator_loss
        );
        Ok(id)
    }

    /// Stored labeled exemplars of `id`, sampled at the configured fraction.
    pub fn historical_sample(&mut self, id: DistributionId) -> Result<Vec<LabeledInstance>> {
        self.registry
            .historical_sample(id, self.config.lambda, &mut self.rng)
    }

    /// Feeds one labeled instance. Labels are only stored as exemplars; the
    /// decision uses features alone. Returns a decision whenever a batch
    /// completes.
    pub fn push(&mut self, inst: &LabeledInstance) -> Result<Option<DriftDecision>> {
        let z = standardize(&inst.features);
        if let Some(p) = self.pending.as_mut() {
            p.window.push(z);
            p.exemplars.push(inst.clone());
            self.try_complete_registration()?;
            return Ok(None);
        }
        self.batch.push(z);
        self.batch_instances.push(inst.clone());
        if self.batch.len() < self.config.batch_size {
            return Ok(None);
        }
        let batch = std::mem::take(&mut self.batch);
        let instances = std::mem::take(&mut self.batch_instances);
        let decision = self.decide(batch, inst.index)?;
        // The batch belongs to whatever distribution the decision left current.
        match (&mut self.pending, decision.kind) {
            (Some(p), DriftKind::New(_)) => p.exemplars.extend(instances),
            _ => {
                let current = self.current();
                for i in instances {
                    self.registry.add_exemplar(current, i)?;
                }
            }
        }
        Ok(Some(decision))
    }
}
