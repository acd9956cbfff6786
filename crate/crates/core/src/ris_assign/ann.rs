//! Lightweight fully connected network mapping (ξ₁..ξ_N, x, y) to one
//! N-way softmax head per RIS element.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Assignment, TrainingSet};
use crate::error::{Error, Result};

const FORMAT_TAG: &str = "ris-ann";
const FORMAT_VERSION: u32 = 1;

/// Affine layer, weights row-major `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.inputs).zip(&self.bias).map(|(row, b)| {
            b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        }));
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// The assignment network. Hidden layers use ReLU; the output holds
/// `M` groups of `N` logits, one softmax per element.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnModel {
    n_aps: usize,
    n_elements: usize,
    /// Room width and depth; positions are divided by these.
    input_scale: (f64, f64),
    layers: Vec<Dense>,
}

/// Gradient with the same layout as the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            batch_size: 64,
            learning_rate: 1e-3,
            epochs: 40,
            seed: 7,
            optimizer: Optimizer::Adam,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    /// Mean loss over the full set before the first update.
    pub initial_loss: f64,
    /// Mean loss over the full set after each epoch.
    pub loss_history: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.loss_history.last().copied().unwrap_or(self.initial_loss)
    }
}

/// Forward pass intermediates: `pre[l]` and `post[l]` for every layer.
struct Trace {
    post: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl AnnModel {
    /// He-uniform initialization, zero biases.
    pub fn new(
        n_aps: usize,
        n_elements: usize,
        hidden: &[usize],
        input_scale: (f64, f64),
        seed: u64,
    ) -> Result<Self> {
        let mut model = Self::zeros(n_aps, n_elements, hidden, input_scale)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut model.layers {
            let limit = (6.0 / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.gen_range(-limit..limit);
            }
        }
        Ok(model)
    }

    /// All weights and biases zero.
    pub fn zeros(
        n_aps: usize,
        n_elements: usize,
        hidden: &[usize],
        input_scale: (f64, f64),
    ) -> Result<Self> {
        if n_aps == 0 || n_elements == 0 {
            return Err(Error::Config("ANN needs at least one AP and one element".into()));
        }
        if hidden.contains(&0) {
            return Err(Error::Config("hidden layer widths must be >= 1".into()));
        }
        if !(input_scale.0 > 0.0 && input_scale.1 > 0.0) {
            return Err(Error::Config("ANN input scale must be positive".into()));
        }
        let mut widths = vec![n_aps + 2];
        widths.extend_from_slice(hidden);
        widths.push(n_aps * n_elements);
        let layers = widths.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Ok(AnnModel {
            n_aps,
            n_elements,
            input_scale,
            layers,
        })
    }

    pub fn n_aps(&self) -> usize {
        self.n_aps
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn input_scale(&self) -> (f64, f64) {
        self.input_scale
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    /// Layer widths from input to output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].inputs];
        w.extend(self.layers.iter().map(|l| l.outputs));
        w
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    fn param_slot(&mut self, mut k: usize) -> &mut f64 {
        for layer in &mut self.layers {
            if k < layer.weights.len() {
                return &mut layer.weights[k];
            }
            k -= layer.weights.len();
            if k < layer.bias.len() {
                return &mut layer.bias[k];
            }
            k -= layer.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Parameter `k` in the order of [`Gradients::flatten`].
    pub fn param(&self, k: usize) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .nth(k)
            .copied()
            .expect("parameter index out of range")
    }

    pub fn set_param(&mut self, k: usize, value: f64) {
        *self.param_slot(k) = value;
    }

    /// Network input for blockage degrees and a floor position (meters).
    pub fn features(&self, degrees: &[f64], x: f64, y: f64) -> Result<Vec<f64>> {
        if degrees.len() != self.n_aps {
            return Err(Error::Domain(format!(
                "ANN expects {} blockage degrees, got {}",
                self.n_aps,
                degrees.len()
            )));
        }
        let mut f = degrees.to_vec();
        f.push(x / self.input_scale.0);
        f.push(y / self.input_scale.1);
        Ok(f)
    }

    fn trace(&self, input: &[f64]) -> Trace {
        let mut post = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        post.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.apply(&post[l], &mut z);
            let a = if l == last {
                z.clone()
            } else {
                z.iter().map(|&v| if v < 0.0 { 0.0 } else { v }).collect()
            };
            pre.push(z);
            post.push(a);
        }
        Trace { post, pre }
    }

    /// Output logits for a raw feature vector.
    pub fn logits(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.layers[0].inputs {
            return Err(Error::Domain(format!(
                "ANN input has {} values, model expects {}",
                input.len(),
                self.layers[0].inputs
            )));
        }
        Ok(self.trace(input).post.pop().expect("output layer"))
    }

    /// Per-element probability vectors over the `N` APs.
    pub fn forward(&self, degrees: &[f64], x: f64, y: f64) -> Result<Vec<Vec<f64>>> {
        let logits = self.logits(&self.features(degrees, x, y)?)?;
        Ok(logits.chunks_exact(self.n_aps).map(softmax).collect())
    }

    /// Per-head argmax as AP ids, optionally restricted to `allowed` ids.
    /// Ties go to the lowest id.
    pub fn predict(
        &self,
        degrees: &[f64],
        x: f64,
        y: f64,
        allowed: Option<&[usize]>,
    ) -> Result<Assignment> {
        let heads = self.forward(degrees, x, y)?;
        Ok(heads.iter().map(|p| argmax_id(p, allowed)).collect())
    }

    /// Mean over the batch of the per-sample summed cross-entropy.
    pub fn loss(&self, batch: &[(Vec<f64>, Assignment)]) -> Result<f64> {
        let mut total = 0.0;
        for (x, label) in batch {
            let logits = self.logits(x)?;
            total += self.sample_loss(&logits, label)?;
        }
        Ok(total / batch.len().max(1) as f64)
    }

    fn sample_loss(&self, logits: &[f64], label: &[usize]) -> Result<f64> {
        if label.len() != self.n_elements {
            return Err(Error::Domain("label length differs from element count".into()));
        }
        let mut loss = 0.0;
        for (head, &id) in logits.chunks_exact(self.n_aps).zip(label) {
            if id == 0 || id > self.n_aps {
                return Err(Error::Domain(format!("label AP id {id} out of range")));
            }
            let max = head.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + head.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
            loss += lse - head[id - 1];
        }
        Ok(loss)
    }

    /// Loss and its exact gradient by backpropagation.
    pub fn loss_and_gradient(&self, batch: &[(Vec<f64>, Assignment)]) -> Result<(f64, Gradients)> {
        let mut grads = Gradients {
            layers: self.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
        };
        let scale = 1.0 / batch.len().max(1) as f64;
        let mut total = 0.0;
        for (x, label) in batch {
            if x.len() != self.layers[0].inputs {
                return Err(Error::Domain("ANN input width mismatch".into()));
            }
            let tr = self.trace(x);
            let logits = tr.post.last().expect("output layer");
            total += self.sample_loss(logits, label)?;

            // dL/dz at the output: softmax − one-hot, per head.
            let mut delta: Vec<f64> = Vec::with_capacity(logits.len());
            for (head, &id) in logits.chunks_exact(self.n_aps).zip(label) {
                let p = softmax(head);
                delta.extend(p.iter().enumerate().map(|(k, &pk)| {
                    scale * (pk - if k + 1 == id { 1.0 } else { 0.0 })
                }));
            }

            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let input = &tr.post[l];
                let g = &mut grads.layers[l];
                for (o, &d) in delta.iter().enumerate() {
                    g.bias[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (w, &a) in row.iter_mut().zip(input) {
                        *w += d * a;
                    }
                }
                if l == 0 {
                    break;
                }
                let mut back = vec![0.0; layer.inputs];
                for (o, &d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (b, &w) in back.iter_mut().zip(row) {
                        *b += d * w;
                    }
                }
                for (b, &z) in back.iter_mut().zip(&tr.pre[l - 1]) {
                    if z <= 0.0 {
                        *b = 0.0;
                    }
                }
                delta = back;
            }
        }
        Ok((total * scale, grads))
    }

    /// Mini-batch training on summed per-head cross-entropy.
    ///
    /// Deterministic for a given `hyper.seed` (shuffling only; weights are
    /// taken as given).
    pub fn train(&mut self, set: &TrainingSet, hyper: &Hyperparams) -> Result<TrainReport> {
        if set.rows.is_empty() {
            return Err(Error::Domain("training set is empty".into()));
        }
        if set.n_aps != self.n_aps || set.n_elements != self.n_elements {
            return Err(Error::Domain(format!(
                "training set is for N={}, M={} but the model is N={}, M={}",
                set.n_aps, set.n_elements, self.n_aps, self.n_elements
            )));
        }
        if hyper.batch_size == 0 || !(hyper.learning_rate > 0.0) {
            return Err(Error::Config("batch size and learning rate must be positive".into()));
        }
        let samples: Vec<(Vec<f64>, Assignment)> = set
            .rows
            .iter()
            .map(|r| Ok((self.features(&r.xi, r.x, r.y)?, r.label.clone())))
            .collect::<Result<_>>()?;

        let initial_loss = self.loss(&samples)?;
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut adam = AdamState::new(self.param_count());
        let mut history = Vec::with_capacity(hyper.epochs);
        let mut batch = Vec::with_capacity(hyper.batch_size);

        for epoch in 0..hyper.epochs {
            order.shuffle(&mut rng);
            for (b, chunk) in order.chunks(hyper.batch_size).enumerate() {
                batch.clear();
                batch.extend(chunk.iter().map(|&i| samples[i].clone()));
                let (loss, grads) = self.loss_and_gradient(&batch)?;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        batch: b,
                        loss,
                    });
                }
                match hyper.optimizer {
                    Optimizer::Sgd => self.apply_sgd(&grads, hyper.learning_rate),
                    Optimizer::Adam => adam.apply(self, &grads, hyper.learning_rate),
                }
            }
            let loss = self.loss(&samples)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: usize::MAX,
                    loss,
                });
            }
            history.push(loss);
        }
        Ok(TrainReport {
            initial_loss,
            loss_history: history,
        })
    }

    fn apply_sgd(&mut self, grads: &Gradients, lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, d) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= lr * d;
            }
            for (b, d) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= lr * d;
            }
        }
    }

    /// Text serialization: version tag, shape, input scale, then every
    /// layer's row-major weights followed by its biases.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{FORMAT_TAG} {FORMAT_VERSION}");
        let _ = writeln!(s, "aps {}", self.n_aps);
        let _ = writeln!(s, "elements {}", self.n_elements);
        let _ = writeln!(s, "scale {} {}", self.input_scale.0, self.input_scale.1);
        let widths: Vec<String> = self.widths().iter().map(usize::to_string).collect();
        let _ = writeln!(s, "widths {}", widths.join(" "));
        for (l, layer) in self.layers.iter().enumerate() {
            let _ = writeln!(s, "weights {}", l + 1);
            for row in layer.weights.chunks_exact(layer.inputs) {
                let _ = writeln!(s, "{}", join_floats(row));
            }
            let _ = writeln!(s, "bias {}", l + 1);
            let _ = writeln!(s, "{}", join_floats(&layer.bias));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let ctx = "ANN model";
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(ctx, format!("unexpected end of file, wanted {what}")))
        };
        let header = next("header")?;
        if header != format!("{FORMAT_TAG} {FORMAT_VERSION}") {
            return Err(Error::parse(ctx, format!("unsupported header `{header}`")));
        }
        let n_aps: usize = keyed(next("aps")?, "aps", ctx)?;
        let n_elements: usize = keyed(next("elements")?, "elements", ctx)?;
        let scale = values::<f64>(next("scale")?, "scale", ctx)?;
        let widths = values::<usize>(next("widths")?, "widths", ctx)?;
        if scale.len() != 2 || widths.len() < 2 {
            return Err(Error::parse(ctx, "malformed scale or widths line"));
        }
        let hidden = &widths[1..widths.len() - 1];
        let mut model = AnnModel::zeros(n_aps, n_elements, hidden, (scale[0], scale[1]))?;
        if model.widths() != widths {
            return Err(Error::parse(ctx, "layer widths do not match N and M"));
        }
        for l in 0..model.layers.len() {
            let tag = next("weights tag")?;
            if tag != format!("weights {}", l + 1) {
                return Err(Error::parse(ctx, format!("expected `weights {}`, got `{tag}`", l + 1)));
            }
            let (inputs, outputs) = (model.layers[l].inputs, model.layers[l].outputs);
            let mut w = Vec::with_capacity(inputs * outputs);
            for _ in 0..outputs {
                let row = floats(next("weight row")?, ctx)?;
                if row.len() != inputs {
                    return Err(Error::parse(ctx, format!("layer {} row width mismatch", l + 1)));
                }
                w.extend(row);
            }
            let tag = next("bias tag")?;
            if tag != format!("bias {}", l + 1) {
                return Err(Error::parse(ctx, format!("expected `bias {}`, got `{tag}`", l + 1)));
            }
            let b = floats(next("bias row")?, ctx)?;
            if b.len() != outputs {
                return Err(Error::parse(ctx, format!("layer {} bias length mismatch", l + 1)));
            }
            if w.iter().chain(&b).any(|v| !v.is_finite()) {
                return Err(Error::parse(ctx, "non-finite parameter"));
            }
            model.layers[l].weights = w;
            model.layers[l].bias = b;
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl AdamState {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn apply(&mut self, model: &mut AnnModel, grads: &Gradients, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let params = model
            .layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()));
        let grads = grads.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias));
        for (((p, &g), m), v) in params.zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn argmax_id(p: &[f64], allowed: Option<&[usize]>) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (k, &pk) in p.iter().enumerate() {
        let id = k + 1;
        if allowed.is_some_and(|a| !a.contains(&id)) {
            continue;
        }
        if best.is_none_or(|(_, b)| pk > b) {
            best = Some((id, pk));
        }
    }
    best.map_or(1, |(id, _)| id)
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

fn floats(line: &str, ctx: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| Error::parse(ctx, format!("`{t}`: {e}"))))
        .collect()
}

fn values<T: std::str::FromStr>(line: &str, key: &str, ctx: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let rest = line
        .strip_prefix(key)
        .ok_or_else(|| Error::parse(ctx, format!("expected `{key}`, got `{line}`")))?;
    rest.split_whitespace()
        .map(|t| t.parse::<T>().map_err(|e| Error::parse(ctx, format!("`{t}`: {e}"))))
        .collect()
}

fn keyed<T: std::str::FromStr>(line: &str, key: &str, ctx: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let mut v = values::<T>(line, key, ctx)?;
    if v.len() != 1 {
        return Err(Error::parse(ctx, format!("`{key}` takes one value")));
    }
    Ok(v.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ris_assign::{Oracle, TrainingRow};

    fn tiny(seed: u64) -> AnnModel {
        AnnModel::new(4, 4, &[8, 8, 6], (5.0, 5.0), seed).unwrap()
    }

    #[test]
    fn zero_model_gives_uniform_heads() {
        let m = AnnModel::zeros(4, 3, &[64, 64, 32], (5.0, 5.0)).unwrap();
        let heads = m.forward(&[0.1, 0.9, 0.0, 0.5], 1.0, 2.0).unwrap();
        assert_eq!(heads.len(), 3);
        for h in heads {
            assert!(h.iter().all(|&p| (p - 0.25).abs() < 1e-15));
        }
        // Uniform heads break ties toward the lowest id.
        assert_eq!(m.predict(&[0.0; 4], 1.0, 1.0, None).unwrap(), vec![1, 1, 1]);
        assert_eq!(m.predict(&[0.0; 4], 1.0, 1.0, Some(&[2, 3])).unwrap(), vec![2, 2, 2]);
    }

    #[test]
    fn widths_follow_layout() {
        let m = AnnModel::zeros(5, 3, &[64, 64, 32], (5.0, 5.0)).unwrap();
        assert_eq!(m.widths(), vec![7, 64, 64, 32, 15]);
    }

    #[test]
    fn heads_are_distributions() {
        let m = tiny(3);
        let heads = m.forward(&[0.3, 0.2, 1.0, 0.0], 4.0, 0.5).unwrap();
        for h in heads {
            assert!(h.iter().all(|&p| p >= 0.0));
            assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn softmax_shift_invariance() {
        let z = [0.3, -1.2, 2.5, 0.0];
        let shifted: Vec<f64> = z.iter().map(|v| v + 17.0).collect();
        for (a, b) in softmax(&z).iter().zip(softmax(&shifted)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn masked_argmax_respects_candidates() {
        let p = [0.7, 0.1, 0.2];
        assert_eq!(argmax_id(&p, None), 1);
        assert_eq!(argmax_id(&p, Some(&[2, 3])), 3);
        let certain = [0.0, 1.0, 0.0];
        assert_eq!(argmax_id(&certain, None), 2);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = tiny(1);
        assert!(m.forward(&[0.0; 3], 0.0, 0.0).is_err());
        assert!(m.logits(&[0.0; 5]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // Random biases keep every pre-activation off the ReLU kink at 0.
        let mut m = tiny(11);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for layer in &mut m.layers {
            for b in &mut layer.bias {
                *b = rng.gen_range(-0.5..0.5);
            }
        }
        let batch: Vec<(Vec<f64>, Assignment)> = (0..6)
            .map(|_| {
                let xi: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
                let x = m.features(&xi, rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0)).unwrap();
                (x, (0..4).map(|_| rng.gen_range(1..=4)).collect())
            })
            .collect();
        let (_, g) = m.loss_and_gradient(&batch).unwrap();
        let analytic = g.flatten();
        let h = 1e-5;
        let mut probe = m.clone();
        let mut worst: f64 = 0.0;
        for k in 0..m.param_count() {
            let p = m.param(k);
            probe.set_param(k, p + h);
            let up = probe.loss(&batch).unwrap();
            probe.set_param(k, p - h);
            let down = probe.loss(&batch).unwrap();
            probe.set_param(k, p);
            let numeric = (up - down) / (2.0 * h);
            let rel = (analytic[k] - numeric).abs() / analytic[k].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    fn one_row_set() -> TrainingSet {
        TrainingSet {
            n_aps: 4,
            n_elements: 4,
            rows: vec![TrainingRow {
                xi: vec![0.0, 0.8, 0.1, 0.0],
                x: 1.2,
                y: 3.4,
                label: vec![3, 1, 3, 4],
                oracle: Oracle::BruteForce,
                candidates: vec![1, 3, 4],
            }],
        }
    }

    #[test]
    fn memorizes_a_single_sample() {
        let mut m = tiny(2);
        let set = one_row_set();
        let hyper = Hyperparams { epochs: 300, batch_size: 1, learning_rate: 1e-2, ..Default::default() };
        let report = m.train(&set, &hyper).unwrap();
        assert!(report.final_loss() < report.initial_loss);
        let r = &set.rows[0];
        assert_eq!(m.predict(&r.xi, r.x, r.y, None).unwrap(), r.label);
    }

    #[test]
    fn sgd_also_reduces_loss() {
        let mut m = tiny(2);
        let hyper = Hyperparams { epochs: 50, batch_size: 1, learning_rate: 0.05, optimizer: Optimizer::Sgd, ..Default::default() };
        let report = m.train(&one_row_set(), &hyper).unwrap();
        assert!(report.final_loss() < report.initial_loss);
    }

    #[test]
    fn training_is_reproducible() {
        let hyper = Hyperparams { epochs: 5, batch_size: 1, ..Default::default() };
        let mut a = tiny(9);
        let mut b = tiny(9);
        a.train(&one_row_set(), &hyper).unwrap();
        b.train(&one_row_set(), &hyper).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn diverging_training_aborts() {
        let mut m = tiny(2);
        m.layers[0].weights[0] = f64::NAN;
        let err = m.train(&one_row_set(), &Hyperparams::default()).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss { .. }));
    }

    #[test]
    fn text_format_round_trips() {
        let m = tiny(5);
        let back = AnnModel::from_text(&m.to_text()).unwrap();
        assert_eq!(m, back);
        assert!(m.to_text().starts_with("ris-ann 1\n"));
        assert!(AnnModel::from_text("ris-ann 2\n").is_err());
        let truncated: String = m.to_text().lines().take(8).collect::<Vec<_>>().join("\n");
        assert!(AnnModel::from_text(&truncated).is_err());
    }
}
