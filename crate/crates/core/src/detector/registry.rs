use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::LabeledInstance;

/// Identifier of a seen distribution. `0` is the discriminator's "unseen"
/// class; registered distributions are numbered densely from `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DistributionId(pub usize);

impl DistributionId {
    pub const UNSEEN: DistributionId = DistributionId(0);

    pub fn is_unseen(self) -> bool {
        self.0 == 0
    }
}

impl std::fmt::Display for DistributionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct DistributionRecord {
    pub id: DistributionId,
    /// Labeled instances seen while this distribution was current, oldest first.
    pub exemplars: VecDeque<LabeledInstance>,
    /// Standardized vectors the GAN trains on for this distribution, in
    /// stream order.
    pub window: Vec<Vec<f64>>,
}

/// The set of seen distributions and which one is current.
#[derive(Debug, Clone)]
pub struct DistributionRegistry {
    records: Vec<DistributionRecord>,
    current: DistributionId,
    per_dist_cap: usize,
}

impl DistributionRegistry {
    /// Starts a registry whose first distribution is described by `window`.
    pub fn new(window: Vec<Vec<f64>>, per_dist_cap: usize) -> Self {
        let mut reg = DistributionRegistry {
            records: Vec::new(),
            current: DistributionId(1),
            per_dist_cap,
        };
        reg.push(window);
        reg
    }

    /// Appends a new distribution, makes it current and returns its id.
    pub fn push(&mut self, window: Vec<Vec<f64>>) -> DistributionId {
        let id = DistributionId(self.records.len() + 1);
        self.records.push(DistributionRecord {
            id,
            exemplars: VecDeque::new(),
            window,
        });
        self.current = id;
        id
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[DistributionRecord] {
        &self.records
    }

    pub fn get(&self, id: DistributionId) -> Option<&DistributionRecord> {
        id.0.checked_sub(1).and_then(|i| self.records.get(i))
    }

    pub fn contains(&self, id: DistributionId) -> bool {
        self.get(id).is_some()
    }

    pub fn current(&self) -> DistributionId {
        self.current
    }

    pub fn set_current(&mut self, id: DistributionId) -> Result<()> {
        if !self.contains(id) {
            return Err(Error::usage(format!("unknown distribution {id}")));
        }
        self.current = id;
        Ok(())
    }

    pub fn per_dist_cap(&self) -> usize {
        self.per_dist_cap
    }

    /// Stores a labeled instance under `id`, evicting the oldest exemplar
    /// once the cap is reached.
    pub fn add_exemplar(&mut self, id: DistributionId, inst: LabeledInstance) -> Result<()> {
        let cap = self.per_dist_cap;
        let rec = id
            .0
            .checked_sub(1)
            .and_then(|i| self.records.get_mut(i))
            .ok_or_else(|| Error::usage(format!("unknown distribution {id}")))?;
        if cap == 0 {
            return Ok(());
        }
        while rec.exemplars.len() >= cap {
            rec.exemplars.pop_front();
        }
        rec.exemplars.push_back(inst);
        Ok(())
    }

    /// Uniform sample without replacement of `ceil(fraction * n)` stored
    /// exemplars of `id`, returned in stream order.
    pub fn historical_sample<R: Rng + ?Sized>(
        &self,
        id: DistributionId,
        fraction: f64,
        rng: &mut R,
    ) -> Result<Vec<LabeledInstance>> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::usage(format!("fraction {fraction} outside [0, 1]")));
        }
        let rec = self
            .get(id)
            .ok_or_else(|| Error::usage(format!("unknown distribution {id}")))?;
        let n = rec.exemplars.len();
        let k = ((fraction * n as f64).ceil() as usize).min(n);
        let mut picked = sample(rng, n, k).into_vec();
        picked.sort_unstable();
        Ok(picked.into_iter().map(|i| rec.exemplars[i].clone()).collect())
    }
}
