//! Hoeffding tree (VFDT) for numeric features with majority-class leaves.
//!
//! Each leaf keeps per-label counts and, for every (feature, label) pair, a
//! Gaussian estimate of the feature. Every `grace_period` instances a leaf
//! scores binary splits at evenly spaced thresholds by information gain and
//! splits once the Hoeffding bound separates the best candidate from the
//! runner-up (or the two are tied within `tie_threshold`).

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// `sqrt(R² ln(1/δ) / 2n)`.
pub fn hoeffding_bound(range: f64, delta: f64, n: f64) -> f64 {
    (range * range * (1.0 / delta).ln() / (2.0 * n)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub grace_period: usize,
    pub split_confidence: f64,
    pub tie_threshold: f64,
    /// Candidate thresholds tried per feature.
    pub split_candidates: usize,
    /// Minimum share of the weight each branch must receive.
    pub min_branch_fraction: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            grace_period: 200,
            split_confidence: 1e-7,
            tie_threshold: 0.05,
            split_candidates: 10,
            min_branch_fraction: 0.01,
        }
    }
}

/// Running mean/variance (Welford) with observed range.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Gaussian {
    n: f64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Default for Gaussian {
    fn default() -> Self {
        Gaussian {
            n: 0.0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl Gaussian {
    fn add(&mut self, v: f64) {
        self.n += 1.0;
        let d = v - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (v - self.mean);
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    fn std_dev(&self) -> f64 {
        if self.n > 1.0 {
            (self.m2 / (self.n - 1.0)).sqrt()
        } else {
            0.0
        }
    }

    /// Estimated weight at or below `t`.
    fn weight_below(&self, t: f64) -> f64 {
        if self.n == 0.0 || t < self.min {
            return 0.0;
        }
        if t >= self.max {
            return self.n;
        }
        let sd = self.std_dev();
        if sd == 0.0 {
            return if t >= self.mean { self.n } else { 0.0 };
        }
        self.n * normal_cdf((t - self.mean) / sd)
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn entropy(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            p * p.log2()
        })
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
struct Leaf {
    class_counts: Vec<f64>,
    /// `stats[feature][label]`
    stats: Vec<Vec<Gaussian>>,
    weight_at_last_eval: f64,
}

impl Leaf {
    fn new(features: usize, labels: usize, class_counts: Vec<f64>) -> Self {
        Leaf {
            weight_at_last_eval: class_counts.iter().sum(),
            class_counts,
            stats: vec![vec![Gaussian::default(); labels]; features],
        }
    }

    fn weight(&self) -> f64 {
        self.class_counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(Leaf),
    Split {
        feature: usize,
        threshold: f64,
        /// Child for `x[feature] <= threshold`.
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    merit: f64,
    feature: usize,
    threshold: f64,
    left: Vec<f64>,
    right: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoeffdingTree {
    features: usize,
    labels: usize,
    config: TreeConfig,
    nodes: Vec<Node>,
}

impl HoeffdingTree {
    pub fn new(features: usize, labels: usize, config: TreeConfig) -> Result<Self> {
        if features == 0 || labels == 0 {
            return Err(Error::usage("tree needs at least one feature and one label"));
        }
        if config.grace_period == 0 || !(0.0 < config.split_confidence && config.split_confidence < 1.0) {
            return Err(Error::usage("grace_period must be positive and split_confidence in (0, 1)"));
        }
        let mut tree = HoeffdingTree {
            features,
            labels,
            config,
            nodes: Vec::new(),
        };
        tree.reset();
        Ok(tree)
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    /// Returns to a single empty leaf, keeping features, labels and config.
    pub fn reset(&mut self) {
        self.nodes = vec![Node::Leaf(Leaf::new(
            self.features,
            self.labels,
            vec![0.0; self.labels],
        ))];
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    /// Features used by split nodes, root first.
    pub fn split_features(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf(_) => None,
            })
            .collect()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.features {
            return Err(Error::usage(format!(
                "instance has {} features, tree expects {}",
                x.len(),
                self.features
            )));
        }
        Ok(())
    }

    fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(_) => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Label counts at the leaf `x` routes to.
    pub fn leaf_counts(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        match &self.nodes[self.leaf_index(x)] {
            Node::Leaf(l) => Ok(l.class_counts.clone()),
            Node::Split { .. } => unreachable!("leaf_index returns leaves"),
        }
    }

    /// Majority label at the leaf `x` reaches; ties and empty leaves give the
    /// lowest label.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let counts = self.leaf_counts(x)?;
        let mut best = 0;
        for (i, &c) in counts.iter().enumerate() {
            if c > counts[best] {
                best = i;
            }
        }
        Ok(best)
    }

    pub fn partial_fit(&mut self, x: &[f64], label: usize) -> Result<()> {
        self.check(x)?;
        if label >= self.labels {
            return Err(Error::usage(format!(
                "label {label} outside the {}-label alphabet",
                self.labels
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("non-finite feature value"));
        }
        let idx = self.leaf_index(x);
        let Node::Leaf(leaf) = &mut self.nodes[idx] else {
            unreachable!("leaf_index returns leaves")
        };
        leaf.class_counts[label] += 1.0;
        for (f, &v) in x.iter().enumerate() {
            leaf.stats[f][label].add(v);
        }
        let weight = leaf.weight();
        let pure = leaf.class_counts.iter().filter(|&&c| c > 0.0).count() < 2;
        if weight - leaf.weight_at_last_eval >= self.config.grace_period as f64 {
            leaf.weight_at_last_eval = weight;
            if !pure {
                self.attempt_split(idx);
            }
        }
        Ok(())
    }

    fn best_candidate(&self, leaf: &Leaf, feature: usize) -> Option<Candidate> {
        let per_label = &leaf.stats[feature];
        let lo = per_label.iter().map(|g| g.min).fold(f64::INFINITY, f64::min);
        let hi = per_label.iter().map(|g| g.max).fold(f64::NEG_INFINITY, f64::max);
        if lo >= hi {
            return None;
        }
        let parent = entropy(&leaf.class_counts);
        let total = leaf.weight();
        let k = self.config.split_candidates;
        let mut best: Option<Candidate> = None;
        for i in 1..=k {
            let threshold = lo + (hi - lo) * i as f64 / (k + 1) as f64;
            let left: Vec<f64> = per_label.iter().map(|g| g.weight_below(threshold)).collect();
            let right: Vec<f64> = per_label
                .iter()
                .zip(&left)
                .map(|(g, l)| (g.n - l).max(0.0))
                .collect();
            let (wl, wr): (f64, f64) = (left.iter().sum(), right.iter().sum());
            let min_branch = self.config.min_branch_fraction * total;
            if wl < min_branch || wr < min_branch {
                continue;
            }
            let merit = parent - (wl * entropy(&left) + wr * entropy(&right)) / (wl + wr);
            if best.as_ref().is_none_or(|b| merit > b.merit) {
                best = Some(Candidate {
                    merit,
                    feature,
                    threshold,
                    left,
                    right,
                });
            }
        }
        best
    }

    fn attempt_split(&mut self, idx: usize) {
        let Node::Leaf(leaf) = &self.nodes[idx] else {
            return;
        };
        let mut candidates: Vec<Candidate> = (0..self.features)
            .filter_map(|f| self.best_candidate(leaf, f))
            .collect();
        // A zero-merit "do not split" option guards against useless splits.
        candidates.sort_by(|a, b| b.merit.total_cmp(&a.merit));
        let Some(best) = candidates.first() else {
            return;
        };
        let second = candidates.get(1).map_or(0.0, |c| c.merit.max(0.0));
        let range = (self.labels.max(2) as f64).log2();
        let eps = hoeffding_bound(range, self.config.split_confidence, leaf.weight());
        let gap = best.merit - second;
        if best.merit <= 0.0 || !(gap > eps || eps < self.config.tie_threshold) {
            return;
        }
        let best = best.clone();
        let left = self.nodes.len();
        self.nodes.push(Node::Leaf(Leaf::new(self.features, self.labels, best.left)));
        self.nodes.push(Node::Leaf(Leaf::new(self.features, self.labels, best.right)));
        self.nodes[idx] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right: left + 1,
        };
    }
}
