//! One-hidden-layer sigmoid network trained by per-pattern gradient descent
//! with momentum.
//!
//! Each output activation, `y_k = sigma(W_k . sigma(V x + b_h) + b_o,k)`, is
//! a closed-form function of the input bits and the learned weights; the
//! genetic algorithm maximizes it through [`Network::class_score`].

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::schema::{AttributeSchema, EncodedVector};
use crate::seed;

pub fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_epochs: usize,
    pub target_mse: f64,
    /// Defaults to `2 * ceil(sqrt(input_size))`.
    pub hidden_size: Option<usize>,
    /// Half-width of the uniform initialization interval. Defaults to
    /// `0.5 / sqrt(fan_in)` per layer.
    pub init_range: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.2,
            momentum: 0.9,
            max_epochs: 5000,
            target_mse: 0.01,
            hidden_size: None,
            init_range: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must lie in [0, 1)".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max epochs must be at least 1".into()));
        }
        if !(self.target_mse > 0.0) {
            return Err(Error::Config("target mse must be positive".into()));
        }
        if self.hidden_size == Some(0) {
            return Err(Error::Config("hidden layer must have at least one unit".into()));
        }
        if let Some(r) = self.init_range {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::Config("init range must be finite and non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn hidden_for(&self, input_size: usize) -> usize {
        self.hidden_size
            .unwrap_or_else(|| 2 * (input_size as f64).sqrt().ceil().max(1.0) as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub input_size: usize,
    pub hidden_size: usize,
    pub output_size: usize,
    /// `hidden_size x input_size`, row-major.
    pub hidden_weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    /// `output_size x hidden_size`, row-major.
    pub output_weights: Vec<f64>,
    pub output_bias: Vec<f64>,
}

/// Activations of one forward pass.
pub struct Activations {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

pub fn init_network(schema: &AttributeSchema, config: &TrainConfig) -> Result<Network> {
    let input = schema.total_predictive_bits();
    Network::random(input, config.hidden_for(input), schema.target_bits(), config)
}

impl Network {
    pub fn zeros(input_size: usize, hidden_size: usize, output_size: usize) -> Self {
        Network {
            input_size,
            hidden_size,
            output_size,
            hidden_weights: vec![0.0; hidden_size * input_size],
            hidden_bias: vec![0.0; hidden_size],
            output_weights: vec![0.0; output_size * hidden_size],
            output_bias: vec![0.0; output_size],
        }
    }

    pub fn random(input_size: usize, hidden_size: usize, output_size: usize, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        if input_size == 0 || output_size == 0 {
            return Err(Error::Config("network needs at least one input and one output".into()));
        }
        let mut net = Network::zeros(input_size, hidden_size, output_size);
        let mut rng = seed::rng(seed::derive_seed(config.seed, "init", 0));
        let hidden_range = config.init_range.unwrap_or(0.5 / (input_size as f64).sqrt());
        let output_range = config.init_range.unwrap_or(0.5 / (hidden_size as f64).sqrt());
        let mut fill = |values: &mut [f64], range: f64| {
            for v in values.iter_mut() {
                *v = if range > 0.0 { rng.random_range(-range..=range) } else { 0.0 };
            }
        };
        fill(&mut net.hidden_weights, hidden_range);
        fill(&mut net.hidden_bias, hidden_range);
        fill(&mut net.output_weights, output_range);
        fill(&mut net.output_bias, output_range);
        Ok(net)
    }

    /// Checks matrix shapes and finiteness, e.g. after deserialization.
    pub fn validate(&self) -> Result<()> {
        let shapes = [
            (self.hidden_weights.len(), self.hidden_size * self.input_size),
            (self.hidden_bias.len(), self.hidden_size),
            (self.output_weights.len(), self.output_size * self.hidden_size),
            (self.output_bias.len(), self.output_size),
        ];
        for (actual, expected) in shapes {
            if actual != expected {
                return Err(Error::Dimension { expected, actual });
            }
        }
        if self.parameters().iter().any(|w| !w.is_finite()) {
            return Err(Error::Domain("network has non-finite weights".into()));
        }
        Ok(())
    }

    pub fn activations(&self, input: &[f64]) -> Result<Activations> {
        if input.len() != self.input_size {
            return Err(Error::Dimension {
                expected: self.input_size,
                actual: input.len(),
            });
        }
        let hidden: Vec<f64> = (0..self.hidden_size)
            .map(|j| {
                let row = &self.hidden_weights[j * self.input_size..(j + 1) * self.input_size];
                let u: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum();
                sigmoid(u + self.hidden_bias[j])
            })
            .collect();
        let output = (0..self.output_size)
            .map(|k| {
                let row = &self.output_weights[k * self.hidden_size..(k + 1) * self.hidden_size];
                let u: f64 = row.iter().zip(&hidden).map(|(w, h)| w * h).sum();
                sigmoid(u + self.output_bias[k])
            })
            .collect();
        Ok(Activations { hidden, output })
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.activations(input)?.output)
    }

    pub fn forward_bits(&self, input: &BitString) -> Result<Vec<f64>> {
        self.forward(&input.to_input())
    }

    /// Output activation of `class_index` for a chromosome: the GA fitness.
    pub fn class_score(&self, chromosome: &BitString, class_index: usize) -> Result<f64> {
        if class_index >= self.output_size {
            return Err(Error::Domain(format!(
                "class index {class_index} out of range for {} outputs",
                self.output_size
            )));
        }
        Ok(self.forward_bits(chromosome)?[class_index])
    }

    pub fn predict(&self, input: &BitString) -> Result<usize> {
        let out = self.forward_bits(input)?;
        Ok(argmax(&out))
    }

    /// All weights and biases, flattened in declaration order.
    pub fn parameters(&self) -> Vec<f64> {
        [&self.hidden_weights, &self.hidden_bias, &self.output_weights, &self.output_bias]
            .into_iter()
            .flat_map(|v| v.iter().copied())
            .collect()
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        let total = self.hidden_weights.len()
            + self.hidden_bias.len()
            + self.output_weights.len()
            + self.output_bias.len();
        if params.len() != total {
            return Err(Error::Dimension {
                expected: total,
                actual: params.len(),
            });
        }
        let mut rest = params;
        for dst in [
            &mut self.hidden_weights,
            &mut self.hidden_bias,
            &mut self.output_weights,
            &mut self.output_bias,
        ] {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    /// Adds `delta` (laid out like [`Network::parameters`]) to the weights.
    fn add_to_parameters(&mut self, delta: &[f64]) {
        let mut rest = delta;
        for dst in [
            &mut self.hidden_weights,
            &mut self.hidden_bias,
            &mut self.output_weights,
            &mut self.output_bias,
        ] {
            let (head, tail) = rest.split_at(dst.len());
            for (w, d) in dst.iter_mut().zip(head) {
                *w += d;
            }
            rest = tail;
        }
    }

    /// Pattern loss `0.5 * sum_k (y_k - t_k)^2`.
    pub fn loss(&self, input: &[f64], target: &[f64]) -> Result<f64> {
        let y = self.forward(input)?;
        Ok(0.5 * y.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
    }

    /// Gradient of [`Network::loss`] with respect to [`Network::parameters`].
    pub fn gradient(&self, input: &[f64], target: &[f64]) -> Result<Vec<f64>> {
        if target.len() != self.output_size {
            return Err(Error::Dimension {
                expected: self.output_size,
                actual: target.len(),
            });
        }
        let act = self.activations(input)?;
        let (ni, nh, no) = (self.input_size, self.hidden_size, self.output_size);

        let delta_out: Vec<f64> = act
            .output
            .iter()
            .zip(target)
            .map(|(y, t)| (y - t) * y * (1.0 - y))
            .collect();
        let delta_hidden: Vec<f64> = (0..nh)
            .map(|j| {
                let back: f64 = (0..no).map(|k| self.output_weights[k * nh + j] * delta_out[k]).sum();
                back * act.hidden[j] * (1.0 - act.hidden[j])
            })
            .collect();

        let mut grad = Vec::with_capacity(nh * ni + nh + no * nh + no);
        for &dh in &delta_hidden {
            grad.extend(input.iter().map(|x| dh * x));
        }
        grad.extend_from_slice(&delta_hidden);
        for &dout in &delta_out {
            grad.extend(act.hidden.iter().map(|h| dout * h));
        }
        grad.extend_from_slice(&delta_out);
        Ok(grad)
    }

    /// Mean over patterns and outputs of the squared error against one-hot
    /// targets.
    pub fn mse(&self, dataset: &[EncodedVector]) -> Result<f64> {
        let mut total = 0.0;
        for ev in dataset {
            let y = self.forward_bits(&ev.bits)?;
            total += y
                .iter()
                .enumerate()
                .map(|(k, yk)| {
                    let t = if k == ev.target_index { 1.0 } else { 0.0 };
                    (yk - t) * (yk - t)
                })
                .sum::<f64>();
        }
        Ok(total / (dataset.len() * self.output_size) as f64)
    }

    pub fn accuracy(&self, dataset: &[EncodedVector]) -> Result<f64> {
        let mut hits = 0usize;
        for ev in dataset {
            if self.predict(&ev.bits)? == ev.target_index {
                hits += 1;
            }
        }
        Ok(hits as f64 / dataset.len() as f64)
    }
}

pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub network: Network,
    /// Full-dataset mse after each epoch.
    pub history: Vec<f64>,
    pub epochs: usize,
    pub final_mse: f64,
    pub converged: bool,
}

/// Trains `net` until the full-dataset mse reaches the target or the epoch
/// budget runs out. Patterns are visited in a fresh seeded permutation each
/// epoch.
pub fn train(mut net: Network, dataset: &[EncodedVector], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    net.validate()?;
    if dataset.is_empty() {
        return Err(Error::InsufficientData("training set is empty".into()));
    }
    for ev in dataset {
        if ev.bits.len() != net.input_size {
            return Err(Error::Dimension {
                expected: net.input_size,
                actual: ev.bits.len(),
            });
        }
        if ev.target_index >= net.output_size {
            return Err(Error::Record(format!(
                "target index {} out of range for {} outputs",
                ev.target_index, net.output_size
            )));
        }
    }

    let inputs: Vec<Vec<f64>> = dataset.iter().map(|ev| ev.bits.to_input()).collect();
    let targets: Vec<Vec<f64>> = dataset
        .iter()
        .map(|ev| (0..net.output_size).map(|k| if k == ev.target_index { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut rng = seed::rng(seed::derive_seed(config.seed, "shuffle", 0));
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut velocity = vec![0.0; net.parameters().len()];
    let mut history = Vec::new();
    let mut converged = false;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let grad = net.gradient(&inputs[i], &targets[i])?;
            for (v, g) in velocity.iter_mut().zip(&grad) {
                *v = config.momentum * *v - config.learning_rate * g;
            }
            net.add_to_parameters(&velocity);
        }
        let mse = net.mse(dataset)?;
        if !mse.is_finite() || net.parameters().iter().any(|w| !w.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        history.push(mse);
        log::debug!("epoch {epoch}: mse {mse:.6}");
        if mse <= config.target_mse {
            converged = true;
            break;
        }
    }
    let final_mse = *history.last().expect("at least one epoch");
    Ok(TrainOutcome {
        network: net,
        epochs: history.len(),
        history,
        final_mse,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{paper_default_schema, Attribute, AttributeSchema, Role};

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn deterministic_init() {
        let schema = paper_default_schema();
        let cfg = TrainConfig { seed: 9, ..TrainConfig::default() };
        let a = init_network(&schema, &cfg).unwrap();
        let b = init_network(&schema, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.output_size, 4);
        assert_eq!(a.input_size, schema.total_predictive_bits());
        assert_eq!(a.hidden_size, 2 * 9);
        let bound = 0.5 / (a.input_size as f64).sqrt();
        assert!(a.hidden_weights.iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn zero_range_gives_zero_weights() {
        let cfg = TrainConfig { init_range: Some(0.0), ..TrainConfig::default() };
        let net = Network::random(5, 3, 2, &cfg).unwrap();
        assert!(net.parameters().iter().all(|&w| w == 0.0));
        let out = net.forward(&[1.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(out.iter().all(|&y| y == 0.5));
        assert_eq!(net.class_score(&bits("10110"), 1).unwrap(), 0.5);
    }

    #[test]
    fn hand_evaluated_tiny_net() {
        let mut net = Network::zeros(1, 1, 1);
        net.hidden_weights = vec![1.0];
        net.output_weights = vec![1.0];
        let act = net.activations(&[1.0]).unwrap();
        let h = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((act.hidden[0] - h).abs() < 1e-15);
        assert!((act.hidden[0] - 0.7311).abs() < 1e-4);
        assert!((act.output[0] - 0.6750).abs() < 1e-4);
    }

    #[test]
    fn outputs_stay_in_open_interval() {
        let mut rng = seed::rng(1);
        for _ in 0..10_000 {
            let cfg = TrainConfig {
                init_range: Some(rng.random_range(0.0..6.0)),
                seed: rng.random(),
                ..TrainConfig::default()
            };
            let net = Network::random(6, 3, 2, &cfg).unwrap();
            let x: Vec<f64> = (0..6).map(|_| f64::from(rng.random_range(0..2u8))).collect();
            for y in net.forward(&x).unwrap() {
                assert!(y > 0.0 && y < 1.0);
            }
        }
    }

    #[test]
    fn length_and_index_errors() {
        let net = Network::zeros(3, 2, 2);
        assert!(net.forward(&[1.0]).is_err());
        assert!(net.class_score(&bits("101"), 2).is_err());
        let score = net.class_score(&bits("101"), 1).unwrap();
        assert_eq!(score, net.forward_bits(&bits("101")).unwrap()[1]);
    }

    #[test]
    fn memorizes_single_pattern() {
        let cfg = TrainConfig { max_epochs: 500, seed: 4, ..TrainConfig::default() };
        let net = Network::random(4, 3, 2, &cfg).unwrap();
        let data = vec![EncodedVector { bits: bits("1001"), target_index: 1 }];
        let out = train(net, &data, &cfg).unwrap();
        assert!(out.final_mse < 0.01, "{}", out.final_mse);
        assert!(out.converged);
    }

    #[test]
    fn learns_separable_toy_task() {
        // Two binary attributes; class = value of the first one.
        let schema = AttributeSchema::new(vec![
            Attribute::new("A", &["a0", "a1"], Role::Predictive),
            Attribute::new("B", &["b0", "b1"], Role::Predictive),
            Attribute::new("T", &["t0", "t1"], Role::Target),
        ])
        .unwrap();
        let data: Vec<EncodedVector> = [("1010", 0), ("1001", 0), ("0110", 1), ("0101", 1)]
            .iter()
            .map(|&(b, t)| EncodedVector { bits: bits(b), target_index: t })
            .collect();
        let cfg = TrainConfig { seed: 2, ..TrainConfig::default() };
        let net = init_network(&schema, &cfg).unwrap();
        let out = train(net, &data, &cfg).unwrap();
        for ev in &data {
            assert_eq!(out.network.predict(&ev.bits).unwrap(), ev.target_index);
        }
        assert_eq!(out.epochs, out.history.len());
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = TrainConfig { seed: 8, max_epochs: 30, ..TrainConfig::default() };
        let data: Vec<EncodedVector> = [("1010", 0), ("0101", 1), ("0110", 1)]
            .iter()
            .map(|&(b, t)| EncodedVector { bits: bits(b), target_index: t })
            .collect();
        let a = train(Network::random(4, 3, 2, &cfg).unwrap(), &data, &cfg).unwrap();
        let b = train(Network::random(4, 3, 2, &cfg).unwrap(), &data, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_and_empty_data() {
        let cfg = TrainConfig::default();
        let net = Network::zeros(2, 2, 2);
        assert!(matches!(train(net.clone(), &[], &cfg), Err(Error::InsufficientData(_))));
        let mut bad = net;
        bad.output_bias[0] = f64::NAN;
        let data = vec![EncodedVector { bits: bits("10"), target_index: 0 }];
        assert!(train(bad, &data, &cfg).is_err());
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = seed::rng(77);
        for _ in 0..5 {
            let cfg = TrainConfig { init_range: Some(1.5), seed: rng.random(), ..TrainConfig::default() };
            let mut net = Network::random(6, 3, 2, &cfg).unwrap();
            let x: Vec<f64> = (0..6).map(|_| f64::from(rng.random_range(0..2u8))).collect();
            let t = [1.0, 0.0];
            let analytic = net.gradient(&x, &t).unwrap();
            let base = net.parameters();
            for (i, &g) in analytic.iter().enumerate() {
                let eps = 1e-4;
                let mut p = base.clone();
                p[i] += eps;
                net.set_parameters(&p).unwrap();
                let up = net.loss(&x, &t).unwrap();
                p[i] -= 2.0 * eps;
                net.set_parameters(&p).unwrap();
                let down = net.loss(&x, &t).unwrap();
                net.set_parameters(&base).unwrap();
                let numeric = (up - down) / (2.0 * eps);
                let scale = g.abs().max(numeric.abs()).max(1e-8);
                assert!((g - numeric).abs() / scale <= 1e-5, "param {i}: {g} vs {numeric}");
            }
        }
    }

    #[test]
    fn output_increases_with_positive_hidden_link() {
        let mut rng = seed::rng(5);
        for _ in 0..200 {
            let cfg = TrainConfig { init_range: Some(2.0), seed: rng.random(), ..TrainConfig::default() };
            let mut net = Network::random(4, 3, 2, &cfg).unwrap();
            let x = [1.0, 0.0, 1.0, 1.0];
            let before = net.forward(&x).unwrap();
            let (k, j) = (rng.random_range(0..2), rng.random_range(0..3));
            net.output_weights[k * 3 + j] += 0.1;
            let after = net.forward(&x).unwrap();
            assert!(after[k] >= before[k]);
        }
    }
}
