//! Sigmoid MLP classifier with a softmax output and cross-entropy loss.

use std::sync::Arc;

use super::dense::{layer_shapes, stack_from_layout, Activation, Dense};
use super::params::{Layout, ParamVector};
use super::Objective;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub num_classes: usize,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, num_classes: usize) -> Result<Self> {
        let spec = MlpSpec {
            input_dim,
            hidden_dims,
            num_classes,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dims.contains(&0) {
            return Err(Error::Config(format!("MLP dimensions must be positive: {self:?}")));
        }
        if self.num_classes < 2 {
            return Err(Error::Config(format!(
                "MLP needs at least 2 classes, got {}",
                self.num_classes
            )));
        }
        Ok(())
    }

    fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim];
        w.extend(&self.hidden_dims);
        w.push(self.num_classes);
        w
    }

    pub fn layout(&self) -> Layout {
        let widths = self.widths();
        let last = widths.len() - 2;
        Layout::new(widths.windows(2).enumerate().flat_map(|(i, pair)| {
            let prefix = if i == last { "out" } else { "hidden" };
            layer_shapes(prefix, i + 1, pair[0], pair[1])
        }))
    }

    fn stack(&self, layout: &Layout) -> Vec<Dense> {
        let mut acts = vec![Activation::Sigmoid; self.hidden_dims.len()];
        acts.push(Activation::Identity);
        stack_from_layout(layout, &acts)
    }

    fn check(&self, model: &ParamVector) -> Result<()> {
        let widths = self.widths();
        let expected: usize = widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        if model.len() != expected || model.layout().blocks().len() != 2 * (widths.len() - 1) {
            return Err(Error::Shape(format!(
                "parameter vector of length {} does not match {:?}",
                model.len(),
                self
            )));
        }
        Ok(())
    }
}

fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in logits.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in logits.iter_mut() {
        *v /= sum;
    }
}

fn logits(model: &ParamVector, spec: &MlpSpec, inputs: &[f64], rows: usize) -> Vec<Vec<f64>> {
    let layers = spec.stack(model.layout());
    let mut acts = Vec::with_capacity(layers.len() + 1);
    acts.push(inputs.to_vec());
    for layer in &layers {
        let next = layer.forward(model.values(), acts.last().unwrap(), rows);
        acts.push(next);
    }
    acts
}

/// Class probabilities for one feature vector.
pub fn mlp_forward(model: &ParamVector, spec: &MlpSpec, x: &[f64]) -> Result<Vec<f64>> {
    spec.check(model)?;
    if x.len() != spec.input_dim {
        return Err(Error::Shape(format!(
            "{} features, model expects {}",
            x.len(),
            spec.input_dim
        )));
    }
    let mut out = logits(model, spec, x, 1).pop().unwrap();
    softmax_in_place(&mut out);
    Ok(out)
}

pub fn predict(model: &ParamVector, spec: &MlpSpec, x: &[f64]) -> Result<usize> {
    let probs = mlp_forward(model, spec, x)?;
    Ok(argmax(&probs))
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Mean cross-entropy over `batch` and its exact gradient.
pub fn mlp_loss_and_gradient(
    model: &ParamVector,
    spec: &MlpSpec,
    batch: &[(&[f64], usize)],
) -> Result<(f64, ParamVector)> {
    spec.check(model)?;
    if batch.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    let rows = batch.len();
    let c = spec.num_classes;
    let mut inputs = Vec::with_capacity(rows * spec.input_dim);
    for &(x, label) in batch {
        if x.len() != spec.input_dim {
            return Err(Error::Shape(format!(
                "{} features, model expects {}",
                x.len(),
                spec.input_dim
            )));
        }
        if label >= c {
            return Err(Error::Shape(format!("label {label} outside [0, {c})")));
        }
        inputs.extend_from_slice(x);
    }
    let acts = logits(model, spec, &inputs, rows);
    let out = acts.last().unwrap();
    let mut loss = 0.0;
    let mut upstream = vec![0.0; rows * c];
    for (r, &(_, label)) in batch.iter().enumerate() {
        let z = &out[r * c..(r + 1) * c];
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - z[label];
        for k in 0..c {
            let p = (z[k] - lse).exp();
            upstream[r * c + k] = (p - if k == label { 1.0 } else { 0.0 }) / rows as f64;
        }
    }
    let mut grad = ParamVector::zeros(model.layout().clone());
    let layers = spec.stack(model.layout());
    for (li, layer) in layers.iter().enumerate().rev() {
        upstream = layer.backward(
            model.values(),
            &acts[li],
            &acts[li + 1],
            &upstream,
            rows,
            grad.values_mut(),
        );
    }
    Ok((loss / rows as f64, grad))
}

/// A labelled feature row.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: usize,
}

/// Cross-entropy plus `alpha` times the sum of squared parameters; one
/// instance is a mini-batch of examples.
#[derive(Debug, Clone)]
pub struct MlpObjective {
    pub spec: MlpSpec,
    pub alpha: f64,
}

impl Objective for MlpObjective {
    type Instance = Vec<Example>;

    fn layout(&self) -> Arc<Layout> {
        Arc::new(self.spec.layout())
    }

    fn loss_and_gradient(&self, model: &ParamVector, instance: &Vec<Example>) -> Result<(f64, ParamVector)> {
        let batch: Vec<(&[f64], usize)> = instance.iter().map(|e| (e.features.as_slice(), e.label)).collect();
        let (ce, mut grad) = mlp_loss_and_gradient(model, &self.spec, &batch)?;
        if self.alpha == 0.0 {
            return Ok((ce, grad));
        }
        for (g, &p) in grad.values_mut().iter_mut().zip(model.values()) {
            *g += 2.0 * self.alpha * p;
        }
        Ok((ce + self.alpha * model.sum_of_squares(), grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_is_uniform() {
        let spec = MlpSpec::new(3, vec![4], 2).unwrap();
        let model = ParamVector::zeros(Arc::new(spec.layout()));
        let p = mlp_forward(&model, &spec, &[0.3, 0.1, 0.9]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn hand_computed_one_hidden_unit() {
        let spec = MlpSpec::new(1, vec![1], 2).unwrap();
        // hidden.w1, hidden.b1, out.w2 (2x1), out.b2 (2)
        let model = ParamVector::from_values(Arc::new(spec.layout()), vec![2.0, -1.0, 1.0, -1.0, 0.5, 0.0]).unwrap();
        let h = 1.0 / (1.0 + (-(2.0 * 0.4 - 1.0f64)).exp());
        let (l0, l1) = (h + 0.5, -h);
        let p0 = l0.exp() / (l0.exp() + l1.exp());
        let p = mlp_forward(&model, &spec, &[0.4]).unwrap();
        assert!((p[0] - p0).abs() < 1e-15);
        assert!((p[1] - (1.0 - p0)).abs() < 1e-15);
    }

    #[test]
    fn uniform_predictor_loss_is_ln_c() {
        let spec = MlpSpec::new(2, vec![3], 5).unwrap();
        let model = ParamVector::zeros(Arc::new(spec.layout()));
        let x = [0.1, 0.2];
        let (loss, _) = mlp_loss_and_gradient(&model, &spec, &[(&x, 0), (&x, 4)]).unwrap();
        assert!((loss - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_prediction_has_near_zero_loss() {
        let spec = MlpSpec::new(1, vec![], 2).unwrap();
        // logit gap of 28 gives p(true) ~ 1 - 7e-13
        let model = ParamVector::from_values(Arc::new(spec.layout()), vec![0.0, 0.0, 28.0, 0.0]).unwrap();
        let (loss, _) = mlp_loss_and_gradient(&model, &spec, &[(&[1.0], 0)]).unwrap();
        assert!((0.0..1e-11).contains(&loss));
    }

    #[test]
    fn rejects_bad_labels_and_dims() {
        let spec = MlpSpec::new(2, vec![2], 3).unwrap();
        let model = ParamVector::zeros(Arc::new(spec.layout()));
        assert!(mlp_loss_and_gradient(&model, &spec, &[(&[0.0, 0.0], 3)]).is_err());
        assert!(mlp_forward(&model, &spec, &[0.0]).is_err());
        assert!(MlpSpec::new(2, vec![2], 1).is_err());
    }
}
