use rand::Rng;
use serde::{Deserialize, Serialize};

use super::net::{Activation, DenseNet};
use super::train::{mean_loss, train_epoch, Adam, Target};
use super::{SurrogateError, TrainConfig};

/// Accuracy-range experts behind a hard router.
///
/// `bins` partitions `[0, 1]` into half-open ranges (the last one closed);
/// the router classifies an input into a bin and that bin's expert answers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiStageModel {
    bins: Vec<(f64, f64)>,
    experts: Vec<DenseNet>,
    router: DenseNet,
}

impl MultiStageModel {
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        num_bins: usize,
        init_range: f64,
        rng: &mut R,
    ) -> Result<Self, SurrogateError> {
        if num_bins == 0 {
            return Err(SurrogateError::InvalidConfig("multi-stage model needs at least one bin".into()));
        }
        let width = 1.0 / num_bins as f64;
        let bins = (0..num_bins)
            .map(|i| (i as f64 * width, if i + 1 == num_bins { 1.0 } else { (i + 1) as f64 * width }))
            .collect();
        let expert_dims = layer_dims(input_dim, hidden, 1);
        let experts = (0..num_bins)
            .map(|_| DenseNet::uniform(expert_dims.clone(), Activation::Relu, Activation::Sigmoid, init_range, rng))
            .collect::<Result<_, _>>()?;
        let router = DenseNet::uniform(
            layer_dims(input_dim, hidden, num_bins),
            Activation::Relu,
            Activation::Identity,
            init_range,
            rng,
        )?;
        Ok(Self { bins, experts, router })
    }

    pub fn bins(&self) -> &[(f64, f64)] {
        &self.bins
    }

    pub fn experts(&self) -> &[DenseNet] {
        &self.experts
    }

    pub fn router(&self) -> &DenseNet {
        &self.router
    }

    pub fn router_mut(&mut self) -> &mut DenseNet {
        &mut self.router
    }

    pub fn input_dim(&self) -> usize {
        self.router.input_dim()
    }

    /// Bin whose range contains `y`.
    pub fn bin_of(&self, y: f64) -> usize {
        self.bins
            .iter()
            .position(|&(_, hi)| y < hi)
            .unwrap_or(self.bins.len() - 1)
    }

    /// Bin chosen by the router (lowest index on ties).
    pub fn route(&self, x: &[f64]) -> Result<usize, SurrogateError> {
        let scores = self.router.forward(x)?;
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        Ok(best)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, SurrogateError> {
        let bin = self.route(x)?;
        Ok(self.experts[bin].forward(x)?[0])
    }

    /// Interleaves one router epoch and one epoch per expert; returns the
    /// routed model's mean squared error after each round.
    pub fn train<R: Rng + ?Sized>(
        &mut self,
        data: &[(Vec<f64>, f64)],
        cfg: &TrainConfig,
        rng: &mut R,
    ) -> Result<Vec<f64>, SurrogateError> {
        cfg.check()?;
        if data.is_empty() {
            return Err(SurrogateError::EmptyDataset);
        }
        let routed: Vec<(Vec<f64>, Target)> = data
            .iter()
            .map(|(x, y)| (x.clone(), Target::Class(self.bin_of(*y))))
            .collect();
        let mut per_bin: Vec<Vec<(Vec<f64>, Target)>> = vec![Vec::new(); self.bins.len()];
        for (x, y) in data {
            per_bin[self.bin_of(*y)].push((x.clone(), Target::Value(*y)));
        }
        let mut router_adam = Adam::new(self.router.params().len());
        let mut expert_adams: Vec<Adam> = self.experts.iter().map(|e| Adam::new(e.params().len())).collect();
        let mut history = Vec::with_capacity(cfg.epochs);
        for _ in 0..cfg.epochs {
            train_epoch(&mut self.router, &mut router_adam, &routed, cfg, rng)?;
            for ((expert, adam), subset) in self.experts.iter_mut().zip(&mut expert_adams).zip(&per_bin) {
                if !subset.is_empty() {
                    train_epoch(expert, adam, subset, cfg, rng)?;
                }
            }
            let mut total = 0.0;
            for (x, y) in data {
                total += (self.predict(x)? - y).powi(2);
            }
            history.push(total / data.len() as f64);
        }
        Ok(history)
    }

    /// Mean cross-entropy of the router against the true bins.
    pub fn router_loss(&self, data: &[(Vec<f64>, f64)]) -> Result<f64, SurrogateError> {
        let routed: Vec<_> = data
            .iter()
            .map(|(x, y)| (x.clone(), Target::Class(self.bin_of(*y))))
            .collect();
        mean_loss(&self.router, &routed)
    }

    pub(crate) fn from_parts(bins: Vec<(f64, f64)>, experts: Vec<DenseNet>, router: DenseNet) -> Result<Self, SurrogateError> {
        if bins.is_empty() || bins.len() != experts.len() || router.output_dim() != bins.len() {
            return Err(SurrogateError::InvalidConfig("inconsistent multi-stage parts".into()));
        }
        Ok(Self { bins, experts, router })
    }
}

pub(crate) fn layer_dims(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut dims = Vec::with_capacity(hidden.len() + 2);
    dims.push(input);
    dims.extend_from_slice(hidden);
    dims.push(output);
    dims
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RunRng;

    #[test]
    fn equal_bins_cover_unit_interval() {
        let m = MultiStageModel::new(3, &[4], 4, 0.1, &mut RunRng::new(0)).unwrap();
        assert_eq!(m.bins(), &[(0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)]);
        assert_eq!(m.bin_of(0.0), 0);
        assert_eq!(m.bin_of(0.25), 1);
        assert_eq!(m.bin_of(0.74), 2);
        assert_eq!(m.bin_of(1.0), 3);
    }

    #[test]
    fn forced_route_returns_that_expert() {
        let mut m = MultiStageModel::new(3, &[4], 4, 0.1, &mut RunRng::new(1)).unwrap();
        let router = m.router_mut();
        let n = router.params().len();
        let params = router.params_mut();
        params.iter_mut().for_each(|p| *p = 0.0);
        // The last four parameters are the router's output biases.
        params[n - 4 + 2] = 1.0;
        let x = [0.2, 0.9, 0.4];
        assert_eq!(m.route(&x).unwrap(), 2);
        assert_eq!(m.predict(&x).unwrap(), m.experts()[2].forward(&x).unwrap()[0]);
    }
}
