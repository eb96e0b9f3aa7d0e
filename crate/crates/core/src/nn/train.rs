use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::adam::{adam_step, AdamHyper, AdamState};
use super::config::CnnConfig;
use super::model::{argmax, backward, cross_entropy, forward, predict_probs, CnnParams, Mode};
use crate::error::{Error, Result};
use crate::pairing::{PairSample, PairTensor, Similarity};
use crate::scalar::Scalar;

/// Splits sample indices into (train, validation), taking
/// `round(n_c * val_fraction)` of each class `c` for validation.
///
/// Both lists come back in ascending index order.
pub fn stratified_split(
    labels: &[usize],
    val_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>) {
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for c in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(rng);
        let n_val = (members.len() as f64 * val_fraction).round() as usize;
        val.extend_from_slice(&members[..n_val]);
        train.extend_from_slice(&members[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Copies the selected samples into one contiguous batch buffer.
pub fn stack_inputs<T: Scalar>(pairs: &[&PairTensor<T>]) -> Vec<T> {
    let mut out = Vec::with_capacity(pairs.iter().map(|p| p.data().len()).sum());
    for p in pairs {
        out.extend_from_slice(p.data());
    }
    out
}

fn check_input_dims<T: Scalar>(cfg: &CnnConfig, pair: &PairTensor<T>) -> Result<()> {
    if pair.width() != cfg.input_width || pair.height() != cfg.input_height {
        return Err(Error::ShapeMismatch(format!(
            "pair is {}x{}, network expects {}x{}",
            pair.width(),
            pair.height(),
            cfg.input_width,
            cfg.input_height
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    /// Accuracy of the training-mode (dropout) predictions seen during the
    /// epoch.
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub schema: &'static str,
    pub seed: u64,
    pub n_train: usize,
    pub n_val: usize,
    pub steps: u64,
    pub epochs: Vec<EpochStats>,
    /// Excluded from the JSON form so reports of identical runs compare
    /// equal.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

/// Owns the parameters, optimizer state and RNG of one training run.
pub struct Trainer<T> {
    pub config: CnnConfig,
    pub params: CnnParams<T>,
    pub adam: AdamState<T>,
    rng: ChaCha8Rng,
}

pub struct StepResult<T> {
    pub loss: T,
    pub correct: usize,
}

impl<T: Scalar> Trainer<T> {
    /// Seeds the RNG from `config.rng_seed` and initializes parameters.
    pub fn new(config: CnnConfig) -> Result<Self> {
        let rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        Self::with_rng(config, rng)
    }

    pub fn with_rng(config: CnnConfig, mut rng: ChaCha8Rng) -> Result<Self> {
        config.validate()?;
        let params = CnnParams::init(&config, &mut rng);
        let adam = AdamState::new(&config);
        Ok(Trainer {
            config,
            params,
            adam,
            rng,
        })
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// One optimizer step on a batch.
    pub fn step(&mut self, input: &[T], labels: &[usize]) -> Result<StepResult<T>> {
        let cfg = &self.config;
        if labels.iter().any(|&y| y >= cfg.num_classes) {
            return Err(Error::ShapeMismatch("label out of range".into()));
        }
        let fwd = forward(
            &self.params,
            cfg,
            input,
            labels.len(),
            Mode::Train(&mut self.rng),
        )?;
        let loss = cross_entropy(&fwd.probs, labels, cfg.num_classes);
        let correct = fwd
            .probs
            .chunks(cfg.num_classes)
            .zip(labels)
            .filter(|(row, &y)| argmax(row) == y)
            .count();
        let grads = backward(&self.params, cfg, input, labels, &fwd)?;
        adam_step(
            &mut self.params,
            &grads,
            &mut self.adam,
            AdamHyper::from(cfg),
        );
        if !self.params.is_finite() {
            return Err(Error::NonFinite(format!(
                "parameters after step {}",
                self.adam.t
            )));
        }
        Ok(StepResult { loss, correct })
    }

    pub fn accuracy(&self, samples: &[&PairSample<T>]) -> Result<f64> {
        accuracy(&self.params, &self.config, samples)
    }
}

/// Inference-mode accuracy, evaluated in batches of `cfg.batch_size`.
pub fn accuracy<T: Scalar>(
    params: &CnnParams<T>,
    cfg: &CnnConfig,
    samples: &[&PairSample<T>],
) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for chunk in samples.chunks(cfg.batch_size) {
        let pairs: Vec<&PairTensor<T>> = chunk.iter().map(|s| &s.pair).collect();
        for p in &pairs {
            check_input_dims(cfg, p)?;
        }
        let probs = predict_probs(params, cfg, &stack_inputs(&pairs), chunk.len())?;
        correct += probs
            .chunks(cfg.num_classes)
            .zip(chunk)
            .filter(|(row, s)| argmax(row) == s.label.label())
            .count();
    }
    Ok(correct as f64 / samples.len() as f64)
}

/// Label and probability of the predicted class. Dropout is never applied.
pub fn predict<T: Scalar>(
    params: &CnnParams<T>,
    cfg: &CnnConfig,
    pair: &PairTensor<T>,
) -> Result<(Similarity, T)> {
    check_input_dims(cfg, pair)?;
    let probs = predict_probs(params, cfg, pair.data(), 1)?;
    let best = argmax(&probs);
    let label = if best == Similarity::Similar.label() {
        Similarity::Similar
    } else {
        Similarity::Dissimilar
    };
    Ok((label, probs[best]))
}

/// Shuffle, stratified 9:1 split, then `config.epochs` epochs of
/// minibatch Adam. Deterministic for a given seed.
pub fn train<T: Scalar>(
    dataset: &[PairSample<T>],
    config: &CnnConfig,
) -> Result<(CnnParams<T>, TrainReport)> {
    train_with_progress(dataset, config, |_| {})
}

pub fn train_with_progress<T: Scalar>(
    dataset: &[PairSample<T>],
    config: &CnnConfig,
    mut progress: impl FnMut(&EpochStats),
) -> Result<(CnnParams<T>, TrainReport)> {
    config.validate()?;
    if dataset.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} samples (need at least 10)",
            dataset.len()
        )));
    }
    let labels: Vec<usize> = dataset.iter().map(|s| s.label.label()).collect();
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::InsufficientData("dataset has a single class".into()));
    }
    for s in dataset {
        check_input_dims(config, &s.pair)?;
    }

    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let (mut train_idx, val_idx) = stratified_split(&labels, 0.1, &mut rng);
    let mut trainer = Trainer::with_rng(config.clone(), rng)?;
    let val: Vec<&PairSample<T>> = val_idx.iter().map(|&i| &dataset[i]).collect();

    let mut epochs = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        train_idx.shuffle(trainer.rng_mut());
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for chunk in train_idx.chunks(config.batch_size) {
            let pairs: Vec<&PairTensor<T>> = chunk.iter().map(|&i| &dataset[i].pair).collect();
            let batch_labels: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let step = trainer.step(&stack_inputs(&pairs), &batch_labels)?;
            loss_sum += step.loss.to_f64().unwrap_or(f64::NAN) * chunk.len() as f64;
            correct += step.correct;
        }
        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / train_idx.len() as f64,
            train_accuracy: correct as f64 / train_idx.len() as f64,
            val_accuracy: if val.is_empty() {
                None
            } else {
                Some(trainer.accuracy(&val)?)
            },
        };
        progress(&stats);
        epochs.push(stats);
    }

    let report = TrainReport {
        schema: "pf/1",
        seed: config.rng_seed,
        n_train: train_idx.len(),
        n_val: val.len(),
        steps: trainer.adam.t,
        epochs,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok((trainer.params, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_stratified_and_complete() {
        let labels: Vec<usize> = (0..37).map(|i| usize::from(i % 4 == 0)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (train, val) = stratified_split(&labels, 0.1, &mut rng);
        let mut all: Vec<usize> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..37).collect::<Vec<_>>());
        // 10 positives -> 1 held out, 27 negatives -> 3 held out.
        let val_pos = val.iter().filter(|&&i| labels[i] == 1).count();
        assert_eq!((val_pos, val.len() - val_pos), (1, 3));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(stratified_split(&labels, 0.1, &mut rng), (train, val));
    }
}
