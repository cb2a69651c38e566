//! Fully connected layers evaluated row-wise over a batch, with backprop.

use super::params::{Block, Layout};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Activation {
    Sigmoid,
    Identity,
}

#[derive(Debug, Clone)]
pub(crate) struct Dense {
    weight: usize,
    bias: usize,
    fan_in: usize,
    fan_out: usize,
    activation: Activation,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Layer shapes `(name_w, fan_out, fan_in)` then `(name_b, fan_out, 1)` per layer.
pub(crate) fn layer_shapes(prefix: &str, index: usize, fan_in: usize, fan_out: usize) -> [(String, usize, usize); 2] {
    [
        (format!("{prefix}.w{index}"), fan_out, fan_in),
        (format!("{prefix}.b{index}"), fan_out, 1),
    ]
}

/// Reads consecutive (weight, bias) block pairs out of a layout.
pub(crate) fn stack_from_layout(layout: &Layout, activations: &[Activation]) -> Vec<Dense> {
    let blocks: &[Block] = layout.blocks();
    assert_eq!(blocks.len(), 2 * activations.len(), "layout does not match layer count");
    blocks
        .chunks(2)
        .zip(activations)
        .map(|(pair, &activation)| Dense {
            weight: pair[0].offset,
            bias: pair[1].offset,
            fan_in: pair[0].cols,
            fan_out: pair[0].rows,
            activation,
        })
        .collect()
}

impl Dense {
    pub(crate) fn fan_out(&self) -> usize {
        self.fan_out
    }

    /// Output activations for `rows` inputs laid out row-major.
    pub(crate) fn forward(&self, params: &[f64], input: &[f64], rows: usize) -> Vec<f64> {
        let (w, b) = (&params[self.weight..], &params[self.bias..]);
        let mut out = vec![0.0; rows * self.fan_out];
        for r in 0..rows {
            let x = &input[r * self.fan_in..(r + 1) * self.fan_in];
            for o in 0..self.fan_out {
                let wrow = &w[o * self.fan_in..(o + 1) * self.fan_in];
                let pre = b[o] + wrow.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
                out[r * self.fan_out + o] = match self.activation {
                    Activation::Sigmoid => sigmoid(pre),
                    Activation::Identity => pre,
                };
            }
        }
        out
    }

    /// Accumulates parameter gradients into `grad` and returns the gradient
    /// with respect to `input`. `grad_output` is dL/d(output activation).
    pub(crate) fn backward(
        &self,
        params: &[f64],
        input: &[f64],
        output: &[f64],
        grad_output: &[f64],
        rows: usize,
        grad: &mut [f64],
    ) -> Vec<f64> {
        let w = &params[self.weight..self.weight + self.fan_in * self.fan_out];
        let mut grad_input = vec![0.0; rows * self.fan_in];
        for r in 0..rows {
            let x = &input[r * self.fan_in..(r + 1) * self.fan_in];
            for o in 0..self.fan_out {
                let idx = r * self.fan_out + o;
                let delta = match self.activation {
                    Activation::Sigmoid => grad_output[idx] * output[idx] * (1.0 - output[idx]),
                    Activation::Identity => grad_output[idx],
                };
                if delta == 0.0 {
                    continue;
                }
                grad[self.bias + o] += delta;
                let gw = &mut grad[self.weight + o * self.fan_in..self.weight + (o + 1) * self.fan_in];
                for (g, xi) in gw.iter_mut().zip(x) {
                    *g += delta * xi;
                }
                let wrow = &w[o * self.fan_in..(o + 1) * self.fan_in];
                let gi = &mut grad_input[r * self.fan_in..(r + 1) * self.fan_in];
                for (g, wi) in gi.iter_mut().zip(wrow) {
                    *g += delta * wi;
                }
            }
        }
        grad_input
    }
}
