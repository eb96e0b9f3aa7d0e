//! Cosine baseline, accuracy reports and distance histograms.

use std::fmt::Write as _;

use serde::Serialize;

use super::dataset::{featurize_records, PairRecord};
use crate::error::{Error, Result};
use crate::nn::{argmax, predict_probs, stack_inputs, CnnConfig, CnnParams};
use crate::pairing::{PairTensor, Similarity};
use crate::pipeline::Featurizer;
use crate::raster::PhoneticFeature;
use crate::scalar::Scalar;

fn cosine_of_slices<T: Scalar>(a: &[T], b: &[T]) -> Result<f64> {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x.to_f64().unwrap_or(0.0), y.to_f64().unwrap_or(0.0));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    if a == b {
        return Ok(0.0);
    }
    Ok((1.0 - dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 2.0))
}

/// `1 - cos(a, b)` over the flattened images, clamped to `[0, 2]`.
pub fn cosine_distance<T: Scalar>(a: &PhoneticFeature<T>, b: &PhoneticFeature<T>) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            found: b.dims(),
        });
    }
    cosine_of_slices(a.pixels(), b.pixels())
}

/// Cosine distance between the two channels of a composed pair.
pub fn pair_distance<T: Scalar>(pair: &PairTensor<T>) -> Result<f64> {
    cosine_of_slices(pair.channel(0), pair.channel(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub tau: f64,
    pub train_accuracy: f64,
}

/// Accuracy of "similar iff distance < tau".
pub fn threshold_accuracy(samples: &[(f64, Similarity)], tau: f64) -> f64 {
    let correct = samples
        .iter()
        .filter(|(d, s)| (*d < tau) == (*s == Similarity::Similar))
        .count();
    correct as f64 / samples.len() as f64
}

/// Picks the accuracy-maximizing cut among the midpoints of consecutive
/// distinct distances, plus one cut below and one above all of them.
/// Ties go to the smaller cut.
pub fn fit_threshold(samples: &[(f64, Similarity)]) -> Result<Threshold> {
    let similar = samples
        .iter()
        .filter(|(_, s)| *s == Similarity::Similar)
        .count();
    if similar == 0 || similar == samples.len() {
        return Err(Error::InsufficientData(
            "threshold fitting needs both classes".into(),
        ));
    }
    let mut sorted: Vec<(f64, Similarity)> = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Sweep left to right: before cut k, samples [0, k) are called similar.
    let mut correct = sorted.len() - similar;
    let mut best = Threshold {
        tau: sorted[0].0,
        train_accuracy: correct as f64 / sorted.len() as f64,
    };
    let mut k = 0;
    while k < sorted.len() {
        let d = sorted[k].0;
        while k < sorted.len() && sorted[k].0 == d {
            if sorted[k].1 == Similarity::Similar {
                correct += 1;
            } else {
                correct -= 1;
            }
            k += 1;
        }
        let tau = if k < sorted.len() {
            (d + sorted[k].0) / 2.0
        } else {
            d + 1.0
        };
        let accuracy = correct as f64 / sorted.len() as f64;
        if accuracy > best.train_accuracy {
            best = Threshold {
                tau,
                train_accuracy: accuracy,
            };
        }
    }
    Ok(best)
}

/// Positive class is "similar".
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub n_samples: usize,
}

impl EvalReport {
    pub fn from_predictions(pairs: impl IntoIterator<Item = (Similarity, Similarity)>) -> Self {
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (predicted, actual) in pairs {
            match (predicted, actual) {
                (Similarity::Similar, Similarity::Similar) => tp += 1,
                (Similarity::Similar, Similarity::Dissimilar) => fp += 1,
                (Similarity::Dissimilar, Similarity::Dissimilar) => tn += 1,
                (Similarity::Dissimilar, Similarity::Similar) => fn_ += 1,
            }
        }
        let n = tp + fp + tn + fn_;
        EvalReport {
            accuracy: if n == 0 {
                0.0
            } else {
                (tp + tn) as f64 / n as f64
            },
            tp,
            fp,
            tn,
            fn_,
            threshold: None,
            n_samples: n,
        }
    }
}

/// Distance and label of each record, through the full pipeline.
pub fn record_distances(
    records: &[PairRecord],
    featurizer: &Featurizer,
) -> Result<Vec<(f64, Similarity)>> {
    records
        .iter()
        .map(|r| {
            let wrap = |e| Error::Record {
                id: r.id.clone(),
                source: Box::new(e),
            };
            let a = featurizer.feature(&r.text_a, r.script_a).map_err(wrap)?;
            let b = featurizer.feature(&r.text_b, r.script_b).map_err(wrap)?;
            Ok((cosine_distance(&a, &b).map_err(wrap)?, r.similarity()))
        })
        .collect()
}

/// Fits the threshold on `train`, reports on `test`.
pub fn evaluate_baseline(
    train: &[PairRecord],
    test: &[PairRecord],
    featurizer: &Featurizer,
) -> Result<EvalReport> {
    let fitted = fit_threshold(&record_distances(train, featurizer)?)?;
    Ok(baseline_report(
        &record_distances(test, featurizer)?,
        fitted.tau,
    ))
}

pub fn baseline_report(samples: &[(f64, Similarity)], tau: f64) -> EvalReport {
    let mut report = EvalReport::from_predictions(samples.iter().map(|&(d, actual)| {
        let predicted = if d < tau {
            Similarity::Similar
        } else {
            Similarity::Dissimilar
        };
        (predicted, actual)
    }));
    report.threshold = Some(tau);
    report
}

pub fn evaluate_cnn(
    params: &CnnParams<f32>,
    cfg: &CnnConfig,
    records: &[PairRecord],
    featurizer: &Featurizer,
) -> Result<EvalReport> {
    let samples = featurize_records(records, featurizer)?;
    let mut outcomes = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(cfg.batch_size.max(1)) {
        let pairs: Vec<&PairTensor<f32>> = chunk.iter().map(|s| &s.pair).collect();
        let probs = predict_probs(params, cfg, &stack_inputs(&pairs), chunk.len())?;
        for (row, s) in probs.chunks(cfg.num_classes).zip(chunk) {
            let predicted = if argmax(row) == Similarity::Similar.label() {
                Similarity::Similar
            } else {
                Similarity::Dissimilar
            };
            outcomes.push((predicted, s.label));
        }
    }
    Ok(EvalReport::from_predictions(outcomes))
}

/// Per-class counts over uniform bins on `[0, 1]`. Distances past 1 land
/// in the last bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramSpec {
    pub edges: Vec<f64>,
    pub similar: Vec<usize>,
    pub dissimilar: Vec<usize>,
    pub mean_similar: Option<f64>,
    pub mean_dissimilar: Option<f64>,
}

impl HistogramSpec {
    pub fn from_distances(samples: &[(f64, Similarity)], bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::Config(format!("need at least 2 bins, got {bins}")));
        }
        let mut similar = vec![0; bins];
        let mut dissimilar = vec![0; bins];
        let (mut sums, mut counts) = ([0.0f64; 2], [0usize; 2]);
        for &(d, s) in samples {
            let bin = ((d * bins as f64).floor().max(0.0) as usize).min(bins - 1);
            match s {
                Similarity::Similar => similar[bin] += 1,
                Similarity::Dissimilar => dissimilar[bin] += 1,
            }
            sums[s.label()] += d;
            counts[s.label()] += 1;
        }
        let mean = |c: usize| (counts[c] > 0).then(|| sums[c] / counts[c] as f64);
        Ok(HistogramSpec {
            edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
            similar,
            dissimilar,
            mean_similar: mean(Similarity::Similar.label()),
            mean_dissimilar: mean(Similarity::Dissimilar.label()),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count_similar,count_dissimilar\n");
        for i in 0..self.similar.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                self.edges[i],
                self.edges[i + 1],
                self.similar[i],
                self.dissimilar[i]
            );
        }
        out
    }
}

pub fn distance_histogram(
    records: &[PairRecord],
    featurizer: &Featurizer,
    bins: usize,
) -> Result<HistogramSpec> {
    HistogramSpec::from_distances(&record_distances(records, featurizer)?, bins)
}
