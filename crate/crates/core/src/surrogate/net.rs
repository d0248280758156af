use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SurrogateError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
    Sigmoid,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Identity => 1,
            Activation::Sigmoid => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Identity),
            2 => Some(Activation::Sigmoid),
            _ => None,
        }
    }
}

/// Fully connected network with one flat parameter vector.
///
/// Layer `l` maps `dims[l]` inputs to `dims[l + 1]` outputs; its weights are
/// stored row-major (`[out][in]`) followed by its biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    dims: Vec<usize>,
    hidden: Activation,
    output: Activation,
    params: Vec<f64>,
}

/// Per-layer activations recorded by a forward pass.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl DenseNet {
    /// Network with all parameters zero.
    pub fn zeros(dims: Vec<usize>, hidden: Activation, output: Activation) -> Result<Self, SurrogateError> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(SurrogateError::InvalidConfig(format!("bad layer dims {dims:?}")));
        }
        let count = param_count(&dims);
        Ok(Self {
            dims,
            hidden,
            output,
            params: vec![0.0; count],
        })
    }

    /// Weights uniform in `[-range, range]`, biases zero.
    pub fn uniform<R: Rng + ?Sized>(
        dims: Vec<usize>,
        hidden: Activation,
        output: Activation,
        range: f64,
        rng: &mut R,
    ) -> Result<Self, SurrogateError> {
        let mut net = Self::zeros(dims, hidden, output)?;
        let mut offset = 0;
        for l in 0..net.dims.len() - 1 {
            let (inp, out) = (net.dims[l], net.dims[l + 1]);
            for w in &mut net.params[offset..offset + inp * out] {
                *w = if range > 0.0 { rng.gen_range(-range..=range) } else { 0.0 };
            }
            offset += inp * out + out;
        }
        Ok(net)
    }

    pub fn from_params(
        dims: Vec<usize>,
        hidden: Activation,
        output: Activation,
        params: Vec<f64>,
    ) -> Result<Self, SurrogateError> {
        let mut net = Self::zeros(dims, hidden, output)?;
        if params.len() != net.params.len() {
            return Err(SurrogateError::DimensionMismatch {
                expected: net.params.len(),
                found: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("dims has at least two entries")
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn check_input(&self, x: &[f64]) -> Result<(), SurrogateError> {
        if x.len() != self.input_dim() {
            return Err(SurrogateError::DimensionMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, SurrogateError> {
        let mut trace = Trace::default();
        self.forward_trace(x, &mut trace)?;
        Ok(trace.acts.pop().unwrap_or_default())
    }

    pub fn forward_trace(&self, x: &[f64], trace: &mut Trace) -> Result<(), SurrogateError> {
        self.check_input(x)?;
        let layers = self.dims.len() - 1;
        trace.acts.resize(layers + 1, Vec::new());
        trace.acts[0].clear();
        trace.acts[0].extend_from_slice(x);
        let mut offset = 0;
        for l in 0..layers {
            let (inp, out) = (self.dims[l], self.dims[l + 1]);
            let act = if l + 1 == layers { self.output } else { self.hidden };
            let (before, after) = trace.acts.split_at_mut(l + 1);
            let input = &before[l];
            let next = &mut after[0];
            next.clear();
            let weights = &self.params[offset..offset + inp * out];
            let biases = &self.params[offset + inp * out..offset + inp * out + out];
            for o in 0..out {
                let row = &weights[o * inp..(o + 1) * inp];
                let z = biases[o] + row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>();
                next.push(act.apply(z));
            }
            offset += inp * out + out;
        }
        Ok(())
    }

    /// Accumulates into `grad` the parameter gradient given `d_out`, the
    /// loss derivative with respect to the network's (post-activation)
    /// outputs.
    pub fn backward(&self, trace: &Trace, d_out: &[f64], grad: &mut [f64]) {
        let layers = self.dims.len() - 1;
        let mut delta: Vec<f64> = d_out
            .iter()
            .zip(&trace.acts[layers])
            .map(|(d, y)| d * self.output.derivative(*y))
            .collect();
        let mut offset_end = self.params.len();
        for l in (0..layers).rev() {
            let (inp, out) = (self.dims[l], self.dims[l + 1]);
            let offset = offset_end - (inp * out + out);
            let input = &trace.acts[l];
            {
                let (gw, gb) = grad[offset..offset_end].split_at_mut(inp * out);
                for o in 0..out {
                    let d = delta[o];
                    gb[o] += d;
                    if d != 0.0 {
                        for (g, a) in gw[o * inp..(o + 1) * inp].iter_mut().zip(input) {
                            *g += d * a;
                        }
                    }
                }
            }
            if l > 0 {
                let weights = &self.params[offset..offset + inp * out];
                let mut prev = vec![0.0; inp];
                for o in 0..out {
                    let d = delta[o];
                    if d != 0.0 {
                        for (p, w) in prev.iter_mut().zip(&weights[o * inp..(o + 1) * inp]) {
                            *p += d * w;
                        }
                    }
                }
                for (p, a) in prev.iter_mut().zip(input) {
                    *p *= self.hidden.derivative(*a);
                }
                delta = prev;
            }
            offset_end = offset;
        }
    }

    /// Squared-error loss `(f(x) - y)^2` of a single-output network.
    pub fn squared_error(&self, x: &[f64], y: f64) -> Result<f64, SurrogateError> {
        let out = self.forward(x)?;
        Ok((out[0] - y).powi(2))
    }

    /// Gradient of [`DenseNet::squared_error`] with respect to every parameter.
    pub fn squared_error_gradient(&self, x: &[f64], y: f64) -> Result<Vec<f64>, SurrogateError> {
        let mut trace = Trace::default();
        self.forward_trace(x, &mut trace)?;
        let mut grad = vec![0.0; self.params.len()];
        let d = 2.0 * (trace.output()[0] - y);
        self.backward(&trace, &[d], &mut grad);
        Ok(grad)
    }
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Largest parameter-wise relative error between the analytic squared-error
/// gradient and a central finite difference with step `epsilon`.
pub fn gradient_check(net: &DenseNet, x: &[f64], y: f64, epsilon: f64) -> Result<f64, SurrogateError> {
    let analytic = net.squared_error_gradient(x, y)?;
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for i in 0..net.params.len() {
        let base = net.params[i];
        probe.params[i] = base + epsilon;
        let up = probe.squared_error(x, y)?;
        probe.params[i] = base - epsilon;
        let down = probe.squared_error(x, y)?;
        probe.params[i] = base;
        let numeric = (up - down) / (2.0 * epsilon);
        let scale = analytic[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RunRng;

    fn tiny() -> DenseNet {
        // hidden: h0 = relu(0.5 x0 - 0.3 x1 + 0.1), h1 = relu(-0.2 x0 + 0.8 x1 + 0.05)
        // output: sigmoid(0.7 h0 - 0.4 h1 + 0.2)
        DenseNet::from_params(
            vec![2, 2, 1],
            Activation::Relu,
            Activation::Sigmoid,
            vec![0.5, -0.3, -0.2, 0.8, 0.1, 0.05, 0.7, -0.4, 0.2],
        )
        .unwrap()
    }

    #[test]
    fn zero_net_predicts_half() {
        let net = DenseNet::zeros(vec![5, 4, 1], Activation::Relu, Activation::Sigmoid).unwrap();
        assert_eq!(net.forward(&[0.3, 1.0, 0.0, 0.2, 0.9]).unwrap(), vec![0.5]);
    }

    #[test]
    fn tiny_net_forward_by_hand() {
        // x = [1, 0]: h0 = 0.6, h1 = relu(-0.15) = 0, z = 0.42 + 0.2 = 0.62
        let expected = 1.0 / (1.0 + (-0.62f64).exp());
        let out = tiny().forward(&[1.0, 0.0]).unwrap();
        assert!((out[0] - expected).abs() < 1e-15);
        assert!((expected - 0.650_218_548_573_827_1).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_input_length() {
        assert!(matches!(
            tiny().forward(&[1.0]),
            Err(SurrogateError::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let err = gradient_check(&tiny(), &[0.9, 0.4], 0.3, 1e-5).unwrap();
        assert!(err <= 1e-4, "relative error {err}");
        let mut rng = RunRng::new(3);
        let net = DenseNet::uniform(vec![6, 5, 4, 1], Activation::Relu, Activation::Sigmoid, 0.5, &mut rng).unwrap();
        let err = gradient_check(&net, &[0.1, 0.5, 0.9, 0.3, 0.7, 0.2], 0.8, 1e-5).unwrap();
        assert!(err <= 1e-4, "relative error {err}");
    }

    #[test]
    fn zero_loss_has_zero_gradient() {
        let net = tiny();
        let x = [0.2, 0.6];
        let y = net.forward(&x).unwrap()[0];
        let g = net.squared_error_gradient(&x, y).unwrap();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm <= 1e-8);
    }

    #[test]
    fn linear_net_gradient_is_least_squares() {
        // f(x) = w.x + b; d/dw (f - y)^2 = 2 (f - y) x, d/db = 2 (f - y)
        let net = DenseNet::from_params(vec![3, 1], Activation::Identity, Activation::Identity, vec![0.4, -1.0, 2.0, 0.5])
            .unwrap();
        let x = [1.0, 2.0, -0.5];
        let y = 3.0;
        let f = 0.4 - 2.0 - 1.0 + 0.5;
        let r = 2.0 * (f - y);
        let g = net.squared_error_gradient(&x, y).unwrap();
        let expected = [r * 1.0, r * 2.0, r * -0.5, r];
        for (a, e) in g.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12);
        }
    }
}
