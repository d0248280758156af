use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::net::{DenseNet, Trace};
use super::SurrogateError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Half-width of the uniform weight initialisation.
    pub init_range: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 128,
            learning_rate: 2e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            init_range: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<(), SurrogateError> {
        let ok = self.epochs > 0
            && self.batch_size > 0
            && self.learning_rate >= 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.init_range >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(SurrogateError::InvalidConfig(format!("{self:?}")))
        }
    }
}

/// What a sample asks the network to produce.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Target {
    /// Regress the single output onto a value with squared error.
    Value(f64),
    /// Classify with softmax cross-entropy over the outputs.
    Class(usize),
}

pub(crate) struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub(crate) fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

fn loss_and_grad(output: &[f64], target: Target, d_out: &mut Vec<f64>) -> f64 {
    d_out.clear();
    match target {
        Target::Value(y) => {
            let r = output[0] - y;
            d_out.push(2.0 * r);
            r * r
        }
        Target::Class(k) => {
            let max = output.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = output.iter().map(|z| (z - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            for (i, e) in exps.iter().enumerate() {
                let p = e / total;
                d_out.push(if i == k { p - 1.0 } else { p });
            }
            -(exps[k] / total).ln()
        }
    }
}

/// Mean loss of `net` over `data` in its stored order.
pub(crate) fn mean_loss(net: &DenseNet, data: &[(Vec<f64>, Target)]) -> Result<f64, SurrogateError> {
    let mut trace = Trace::default();
    let mut scratch = Vec::new();
    let mut total = 0.0;
    for (x, t) in data {
        net.forward_trace(x, &mut trace)?;
        total += loss_and_grad(trace.output(), *t, &mut scratch);
    }
    Ok(total / data.len() as f64)
}

/// One shuffled pass of mini-batch Adam over `data`.
pub(crate) fn train_epoch<R: Rng + ?Sized>(
    net: &mut DenseNet,
    adam: &mut Adam,
    data: &[(Vec<f64>, Target)],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<(), SurrogateError> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(rng);
    let mut grad = vec![0.0; net.params().len()];
    let mut trace = Trace::default();
    let mut d_out = Vec::new();
    for batch in order.chunks(cfg.batch_size) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let scale = 1.0 / batch.len() as f64;
        for &i in batch {
            let (x, t) = &data[i];
            net.forward_trace(x, &mut trace)?;
            loss_and_grad(trace.output(), *t, &mut d_out);
            d_out.iter_mut().for_each(|d| *d *= scale);
            net.backward(&trace, &d_out, &mut grad);
        }
        adam.step(net.params_mut(), &grad, cfg);
    }
    Ok(())
}

/// Trains for `cfg.epochs` epochs and returns the mean loss over `data`
/// measured after each epoch.
pub(crate) fn fit<R: Rng + ?Sized>(
    net: &mut DenseNet,
    data: &[(Vec<f64>, Target)],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<Vec<f64>, SurrogateError> {
    cfg.check()?;
    if data.is_empty() {
        return Err(SurrogateError::EmptyDataset);
    }
    let mut adam = Adam::new(net.params().len());
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        train_epoch(net, &mut adam, data, cfg, rng)?;
        history.push(mean_loss(net, data)?);
    }
    Ok(history)
}
