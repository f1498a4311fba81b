//! Generator/discriminator training over the windows of all seen
//! distributions.
//!
//! The generator reads `seq_len` consecutive standardized vectors and
//! predicts the next one. The discriminator assigns a vector to one of the
//! registered distributions (`1..=n`) or to the unseen class `0`, whose
//! examples are generator outputs plus standardized background noise.

use log::{debug, warn};
use ndarray::{concatenate, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::registry::DistributionRegistry;
use super::standardize::standardize;
use crate::error::{Error, Result};
use crate::nn::{
    mse, softmax_cross_entropy, train_step, Activation, AdadeltaState, Loss, Network, OutputGrad,
    Targets,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanConfig {
    pub generator_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub minibatch: usize,
    pub max_epochs: usize,
    /// Training stops once an epoch's mean discriminator loss falls below this.
    pub loss_threshold: f64,
    /// Discriminator updates per generator update.
    pub discriminator_steps: usize,
    /// Standardized isotropic Gaussian vectors added to every discriminator
    /// minibatch as unseen-class examples. The generator imitates the seen
    /// distributions, so without these the unseen class only ever covers
    /// their immediate neighbourhood.
    pub background_samples: usize,
    /// Background draws closer to a stored vector than this many median
    /// nearest-neighbour spacings are discarded, so the unseen class does
    /// not claim the seen distributions' own support.
    pub background_margin: f64,
    /// Real vectors are perturbed by Gaussian noise of this many spacings
    /// (spread over all coordinates) and re-standardized each time they are
    /// shown to the discriminator.
    pub real_jitter: f64,
    /// Generated vectors within this many spacings of a stored vector are
    /// left out of the unseen class.
    pub fake_exclusion: f64,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            generator_hidden: vec![128, 4096],
            discriminator_hidden: vec![1024, 1024],
            minibatch: 16,
            max_epochs: 200,
            loss_threshold: 0.1,
            discriminator_steps: 8,
            background_samples: 16,
            background_margin: 2.5,
            real_jitter: 1.0,
            fake_exclusion: 0.5,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.minibatch == 0 || self.discriminator_steps == 0 {
            return Err(Error::usage("GAN minibatch and discriminator_steps must be at least 1"));
        }
        if self.generator_hidden.contains(&0) || self.discriminator_hidden.contains(&0) {
            return Err(Error::usage("hidden layer sizes must be non-zero"));
        }
        let spreads = [self.background_margin, self.real_jitter, self.fake_exclusion];
        if spreads.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::usage(
                "background_margin, real_jitter and fake_exclusion must be finite and non-negative",
            ));
        }
        if !(self.loss_threshold.is_finite() && self.loss_threshold >= 0.0) {
            return Err(Error::usage("loss_threshold must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Gan {
    pub generator: Network,
    pub discriminator: Network,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub epochs: usize,
    pub discriminator_loss: f64,
    pub generator_loss: f64,
}

impl Gan {
    /// Fresh networks for `features`-wide vectors and `classes` discriminator outputs.
    pub fn init<R: Rng + ?Sized>(
        features: usize,
        seq_len: usize,
        classes: usize,
        cfg: &GanConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let mut g_sizes = vec![seq_len * features];
        g_sizes.extend(&cfg.generator_hidden);
        g_sizes.push(features);
        let mut d_sizes = vec![features];
        d_sizes.extend(&cfg.discriminator_hidden);
        d_sizes.push(classes);
        Ok(Gan {
            generator: Network::new(&g_sizes, Activation::Relu, Activation::Linear, rng)?,
            discriminator: Network::new(&d_sizes, Activation::Relu, Activation::Sigmoid, rng)?,
        })
    }

    /// Runs the generator on each `seq_len`-long run of `window`, returning
    /// one predicted vector per run.
    pub fn generate(&self, window: &[Vec<f64>], seq_len: usize) -> Result<Array2<f64>> {
        let seqs = sequences(window, seq_len);
        if seqs.is_empty() {
            return Ok(Array2::zeros((0, self.discriminator.input_size())));
        }
        let idx: Vec<usize> = (0..seqs.len()).collect();
        let (inputs, _) = stack_sequences(&seqs, &idx);
        self.generator.forward_batch(inputs.view())
    }
}

struct Sequence<'a> {
    history: &'a [Vec<f64>],
    next: &'a [f64],
    label: usize,
}

fn sequences(window: &[Vec<f64>], seq_len: usize) -> Vec<Sequence<'_>> {
    labelled_sequences(window, seq_len, 0)
}

fn labelled_sequences(window: &[Vec<f64>], seq_len: usize, label: usize) -> Vec<Sequence<'_>> {
    if window.len() <= seq_len {
        return Vec::new();
    }
    (0..window.len() - seq_len)
        .map(|i| Sequence {
            history: &window[i..i + seq_len],
            next: &window[i + seq_len],
            label,
        })
        .collect()
}

fn stack_sequences(seqs: &[Sequence<'_>], idx: &[usize]) -> (Array2<f64>, Array2<f64>) {
    let k = seqs[0].history.len();
    let d = seqs[0].next.len();
    let mut inputs = Array2::zeros((idx.len(), k * d));
    let mut targets = Array2::zeros((idx.len(), d));
    for (row, &i) in idx.iter().enumerate() {
        let s = &seqs[i];
        for (j, v) in s.history.iter().flatten().enumerate() {
            inputs[[row, j]] = *v;
        }
        for (j, v) in s.next.iter().enumerate() {
            targets[[row, j]] = *v;
        }
    }
    (inputs, targets)
}

/// Trains a fresh generator/discriminator pair on every window in the
/// registry. A divergent run is retried once from a new initialization.
pub fn train_gan<R: Rng + ?Sized>(
    registry: &DistributionRegistry,
    seq_len: usize,
    cfg: &GanConfig,
    rng: &mut R,
) -> Result<(Gan, TrainStats)> {
    let features = feature_width(registry)?;
    let classes = registry.len() + 1;
    let mut gan = Gan::init(features, seq_len, classes, cfg, rng)?;
    match fit(&mut gan, registry, seq_len, cfg, rng) {
        Ok(stats) => Ok((gan, stats)),
        Err(Error::Divergence(first)) => {
            warn!("GAN training diverged ({first}); retrying from a fresh initialization");
            let mut gan = Gan::init(features, seq_len, classes, cfg, rng)?;
            let stats = fit(&mut gan, registry, seq_len, cfg, rng).map_err(|e| {
                Error::Divergence(format!("second attempt failed after first ({first}): {e}"))
            })?;
            Ok((gan, stats))
        }
        Err(e) => Err(e),
    }
}

/// Continues training an existing pair, e.g. after the discriminator head has
/// been extended for a new distribution.
pub fn retrain_gan<R: Rng + ?Sized>(
    gan: &mut Gan,
    registry: &DistributionRegistry,
    seq_len: usize,
    cfg: &GanConfig,
    rng: &mut R,
) -> Result<TrainStats> {
    if gan.discriminator.output_size() != registry.len() + 1 {
        return Err(Error::usage(format!(
            "discriminator has {} outputs for {} distributions",
            gan.discriminator.output_size(),
            registry.len()
        )));
    }
    let backup = gan.clone();
    match fit(gan, registry, seq_len, cfg, rng) {
        Err(Error::Divergence(first)) => {
            warn!("GAN retraining diverged ({first}); retrying from a fresh initialization");
            let (fresh, stats) = train_gan(registry, seq_len, cfg, rng).inspect_err(|_| *gan = backup)?;
            *gan = fresh;
            Ok(stats)
        }
        other => other,
    }
}

fn feature_width(registry: &DistributionRegistry) -> Result<usize> {
    let first = registry
        .records()
        .first()
        .and_then(|r| r.window.first())
        .ok_or_else(|| Error::usage("cannot train on an empty registry"))?;
    Ok(first.len())
}

fn fit<R: Rng + ?Sized>(
    gan: &mut Gan,
    registry: &DistributionRegistry,
    seq_len: usize,
    cfg: &GanConfig,
    rng: &mut R,
) -> Result<TrainStats> {
    let features = feature_width(registry)?;
    cfg.validate()?;
    let mut real: Vec<(&[f64], usize)> = Vec::new();
    let mut seqs: Vec<Sequence<'_>> = Vec::new();
    for rec in registry.records() {
        if rec.window.len() <= seq_len {
            return Err(Error::usage(format!(
                "distribution {} has {} vectors; need more than seq_len = {seq_len}",
                rec.id,
                rec.window.len()
            )));
        }
        if rec.window.iter().any(|v| v.len() != features) {
            return Err(Error::usage("inconsistent feature widths across windows"));
        }
        real.extend(rec.window.iter().map(|v| (v.as_slice(), rec.id.0)));
        seqs.extend(labelled_sequences(&rec.window, seq_len, rec.id.0));
    }

    let support = Support::new(real.iter().map(|(v, _)| *v), cfg.background_margin);
    let mut d_opt = AdadeltaState::new(&gan.discriminator);
    let mut g_opt = AdadeltaState::new(&gan.generator);
    let mut real_order: Vec<usize> = (0..real.len()).collect();
    let mut seq_order: Vec<usize> = (0..seqs.len()).collect();
    let mut stats = TrainStats {
        epochs: 0,
        discriminator_loss: f64::INFINITY,
        generator_loss: f64::INFINITY,
    };

    for epoch in 0..cfg.max_epochs {
        real_order.shuffle(rng);
        seq_order.shuffle(rng);
        let mut d_total = 0.0;
        let mut g_total = 0.0;
        let (mut d_steps, mut g_steps) = (0usize, 0usize);
        for (step, chunk) in real_order.chunks(cfg.minibatch).enumerate() {
            let seq_idx: Vec<usize> = (0..chunk.len())
                .map(|j| seq_order[(step * cfg.minibatch + j) % seq_order.len()])
                .collect();
            let (seq_in, seq_next) = stack_sequences(&seqs, &seq_idx);
            let seq_labels: Vec<usize> = seq_idx.iter().map(|&i| seqs[i].label).collect();

            // Discriminator: real vectors carry their distribution id;
            // generated vectors and background draws form the unseen class.
            let fake = gan.generator.forward_batch(seq_in.view())?;
            let fake = if cfg.fake_exclusion > 0.0 {
                let keep: Vec<usize> = (0..fake.nrows())
                    .filter(|&r| {
                        let x = fake.row(r);
                        !support.near(x.as_slice().expect("standard layout"), cfg.fake_exclusion)
                    })
                    .collect();
                fake.select(Axis(0), &keep)
            } else {
                fake
            };
            let background = background_batch(cfg.background_samples, &support, rng);
            let mut real_rows = Array2::zeros((chunk.len(), features));
            let mut cats = Vec::with_capacity(chunk.len() * 2 + background.nrows());
            let jitter = cfg.real_jitter * support.spacing / (features as f64).sqrt();
            for (row, &i) in chunk.iter().enumerate() {
                if jitter > 0.0 {
                    let moved: Vec<f64> = real[i]
                        .0
                        .iter()
                        .map(|v| v + jitter * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    real_rows.row_mut(row).assign(&ArrayView1::from(&standardize(&moved)));
                } else {
                    real_rows.row_mut(row).assign(&ArrayView1::from(real[i].0));
                }
                cats.push(real[i].1);
            }
            cats.extend(std::iter::repeat_n(0, fake.nrows() + background.nrows()));
            let d_in = concatenate(Axis(0), &[real_rows.view(), fake.view(), background.view()])
                .expect("matching widths");
            d_total += train_step(
                &mut gan.discriminator,
                d_in.view(),
                Targets::Categories(&cats),
                Loss::CrossEntropy,
                &mut d_opt,
            )?;
            d_steps += 1;

            if step % cfg.discriminator_steps != 0 {
                continue;
            }
            // Generator: predict the next vector and pass as its source distribution.
            let g_trace = gan.generator.forward_trace(seq_in.view())?;
            let (mse_loss, mut upstream) = mse(g_trace.output().view(), seq_next.view());
            let d_trace = gan.discriminator.forward_trace(g_trace.output().view())?;
            let (ce_loss, ce_grad) = softmax_cross_entropy(d_trace.logits().view(), &seq_labels);
            let (_, input_grad) = gan
                .discriminator
                .backward(&d_trace, ce_grad.view(), OutputGrad::Logits);
            upstream += &input_grad;
            let g_loss = mse_loss + ce_loss;
            if !g_loss.is_finite() {
                return Err(Error::Divergence(format!(
                    "generator loss {g_loss} at epoch {epoch}"
                )));
            }
            let (g_grads, _) = gan
                .generator
                .backward(&g_trace, upstream.view(), OutputGrad::Activations);
            if !g_grads.is_finite() {
                return Err(Error::Divergence("non-finite generator gradient".into()));
            }
            g_opt.apply(&mut gan.generator, &g_grads);
            g_total += g_loss;
            g_steps += 1;
        }
        stats = TrainStats {
            epochs: epoch + 1,
            discriminator_loss: d_total / d_steps.max(1) as f64,
            generator_loss: g_total / g_steps.max(1) as f64,
        };
        debug!(
            "epoch {}: discriminator {:.4}, generator {:.4}",
            stats.epochs, stats.discriminator_loss, stats.generator_loss
        );
        if stats.discriminator_loss < cfg.loss_threshold {
            break;
        }
    }
    Ok(stats)
}

/// Stored vectors and the exclusion radius around each of them.
struct Support<'a> {
    vectors: Vec<&'a [f64]>,
    radius_sq: f64,
    /// Median nearest-neighbour distance among the stored vectors.
    spacing: f64,
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl<'a> Support<'a> {
    fn new(vectors: impl Iterator<Item = &'a [f64]>, margin: f64) -> Self {
        let vectors: Vec<&[f64]> = vectors.collect();
        let mut nearest: Vec<f64> = vectors
            .iter()
            .enumerate()
            .map(|(i, a)| {
                vectors
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, b)| dist_sq(a, b))
                    .fold(f64::INFINITY, f64::min)
            })
            .filter(|d| d.is_finite())
            .collect();
        nearest.sort_by(f64::total_cmp);
        let median = nearest.get(nearest.len() / 2).map_or(0.0, |d| d.sqrt());
        let radius = margin * median;
        Support {
            vectors,
            radius_sq: radius * radius,
            spacing: median,
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.vectors.iter().any(|v| dist_sq(v, x) < self.radius_sq)
    }

    fn near(&self, x: &[f64], spacings: f64) -> bool {
        let r = spacings * self.spacing;
        self.vectors.iter().any(|v| dist_sq(v, x) < r * r)
    }
}

/// Draws standardized isotropic Gaussian vectors outside `support`. Gives up
/// on a row after a bounded number of rejections and keeps the last draw.
fn background_batch<R: Rng + ?Sized>(rows: usize, support: &Support<'_>, rng: &mut R) -> Array2<f64> {
    let features = support.vectors.first().map_or(0, |v| v.len());
    let mut out = Array2::zeros((rows, features));
    for mut row in out.axis_iter_mut(Axis(0)) {
        let mut z = Vec::new();
        for _ in 0..100 {
            let draw: Vec<f64> = (0..features).map(|_| rng.sample(StandardNormal)).collect();
            z = standardize(&draw);
            if !support.contains(&z) {
                break;
            }
        }
        row.assign(&ArrayView1::from(&z));
    }
    out
}
