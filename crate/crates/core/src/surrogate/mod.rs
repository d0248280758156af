//! Learned performance model: a dense-network regressor from scaled
//! encodings to accuracy in `(0, 1)`, plus a multi-stage variant that routes
//! each input to an expert for its accuracy range.

mod checkpoint;
mod multistage;
mod net;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_VERSION};
pub use multistage::MultiStageModel;
pub use net::{gradient_check, Activation, DenseNet, Trace};
pub use train::TrainConfig;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::EncodedArch;
use multistage::layer_dims;
use train::{fit, Target};

/// Hidden widths used unless configured otherwise.
pub const DEFAULT_HIDDEN: [usize; 3] = [64, 128, 64];

/// Number of accuracy ranges in the default multi-stage model.
pub const DEFAULT_BINS: usize = 4;

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training set is empty")]
    EmptyDataset,
    #[error("series have zero variance")]
    DegenerateVariance,
    #[error("series lengths differ or are shorter than 2 ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid surrogate configuration: {0}")]
    InvalidConfig(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One labelled architecture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSample {
    pub x: EncodedArch,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Surrogate {
    Mlp { max_digit: u8, net: DenseNet },
    MultiStage { max_digit: u8, model: MultiStageModel },
}

impl Surrogate {
    pub fn mlp<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        max_digit: u8,
        init_range: f64,
        rng: &mut R,
    ) -> Result<Self, SurrogateError> {
        let net = DenseNet::uniform(
            layer_dims(input_dim, hidden, 1),
            Activation::Relu,
            Activation::Sigmoid,
            init_range,
            rng,
        )?;
        Ok(Surrogate::Mlp { max_digit, net })
    }

    pub fn multi_stage<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        max_digit: u8,
        num_bins: usize,
        init_range: f64,
        rng: &mut R,
    ) -> Result<Self, SurrogateError> {
        let model = MultiStageModel::new(input_dim, hidden, num_bins, init_range, rng)?;
        Ok(Surrogate::MultiStage { max_digit, model })
    }

    pub fn max_digit(&self) -> u8 {
        match self {
            Surrogate::Mlp { max_digit, .. } | Surrogate::MultiStage { max_digit, .. } => *max_digit,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Surrogate::Mlp { net, .. } => net.input_dim(),
            Surrogate::MultiStage { model, .. } => model.input_dim(),
        }
    }

    /// Same architecture and widths with freshly drawn parameters.
    pub fn reinitialized<R: Rng + ?Sized>(&self, init_range: f64, rng: &mut R) -> Result<Self, SurrogateError> {
        match self {
            Surrogate::Mlp { max_digit, net } => {
                let dims = net.dims();
                Self::mlp(dims[0], &dims[1..dims.len() - 1], *max_digit, init_range, rng)
            }
            Surrogate::MultiStage { max_digit, model } => {
                let dims = model.router().dims();
                Self::multi_stage(
                    dims[0],
                    &dims[1..dims.len() - 1],
                    *max_digit,
                    model.bins().len(),
                    init_range,
                    rng,
                )
            }
        }
    }

    pub fn predict(&self, x: &EncodedArch) -> Result<f64, SurrogateError> {
        self.predict_scaled(&x.scaled(self.max_digit()))
    }

    pub fn predict_scaled(&self, x: &[f64]) -> Result<f64, SurrogateError> {
        match self {
            Surrogate::Mlp { net, .. } => Ok(net.forward(x)?[0]),
            Surrogate::MultiStage { model, .. } => model.predict(x),
        }
    }

    /// Fits the model to `samples`; returns the mean loss after each epoch.
    pub fn train<R: Rng + ?Sized>(
        &mut self,
        samples: &[TrainSample],
        cfg: &TrainConfig,
        rng: &mut R,
    ) -> Result<Vec<f64>, SurrogateError> {
        let max_digit = self.max_digit();
        let input_dim = self.input_dim();
        for s in samples {
            if s.x.len() != input_dim {
                return Err(SurrogateError::DimensionMismatch {
                    expected: input_dim,
                    found: s.x.len(),
                });
            }
        }
        match self {
            Surrogate::Mlp { net, .. } => {
                let data: Vec<_> = samples
                    .iter()
                    .map(|s| (s.x.scaled(max_digit), Target::Value(s.y)))
                    .collect();
                fit(net, &data, cfg, rng)
            }
            Surrogate::MultiStage { model, .. } => {
                let data: Vec<_> = samples.iter().map(|s| (s.x.scaled(max_digit), s.y)).collect();
                model.train(&data, cfg, rng)
            }
        }
    }
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<(), SurrogateError> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(SurrogateError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Pearson product-moment correlation.
pub fn pearson(preds: &[f64], truths: &[f64]) -> Result<f64, SurrogateError> {
    check_pair(preds, truths)?;
    let n = preds.len() as f64;
    let mx = preds.iter().sum::<f64>() / n;
    let my = truths.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in preds.iter().zip(truths) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(SurrogateError::DegenerateVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(preds: &[f64], truths: &[f64]) -> Result<f64, SurrogateError> {
    check_pair(preds, truths)?;
    pearson(&ranks(preds), &ranks(truths))
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Correlations of a model trained on one part of a table and scored on
/// the rest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub train_size: usize,
    pub holdout_size: usize,
    pub train_pearson: Option<f64>,
    pub train_spearman: Option<f64>,
    pub holdout_pearson: Option<f64>,
    pub holdout_spearman: Option<f64>,
    pub loss_history: Vec<f64>,
}

/// Splits `rows` uniformly at random (by `rng`), trains `model` on the
/// `1 - holdout` share and reports both correlations on each part.
/// Correlations that are undefined (fewer than two points, constant series)
/// are `None`.
pub fn holdout_study<R: Rng + ?Sized>(
    model: &mut Surrogate,
    rows: &[TrainSample],
    holdout: f64,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<HoldoutReport, SurrogateError> {
    if !(0.0..1.0).contains(&holdout) {
        return Err(SurrogateError::InvalidConfig(format!("holdout {holdout} must be in [0, 1)")));
    }
    let mut shuffled = rows.to_vec();
    shuffled.shuffle(rng);
    let held = ((rows.len() as f64) * holdout).round() as usize;
    let (test, train) = shuffled.split_at(held.min(rows.len()));
    let loss_history = model.train(train, cfg, rng)?;
    let score = |part: &[TrainSample]| -> Result<(Option<f64>, Option<f64>), SurrogateError> {
        let preds = part.iter().map(|s| model.predict(&s.x)).collect::<Result<Vec<_>, _>>()?;
        let truths: Vec<f64> = part.iter().map(|s| s.y).collect();
        Ok((pearson(&preds, &truths).ok(), spearman(&preds, &truths).ok()))
    };
    let (train_pearson, train_spearman) = score(train)?;
    let (holdout_pearson, holdout_spearman) = score(test)?;
    Ok(HoldoutReport {
        train_size: train.len(),
        holdout_size: test.len(),
        train_pearson,
        train_spearman,
        holdout_pearson,
        holdout_spearman,
        loss_history,
    })
}
