//! Sigmoid autoencoder over adjacency rows with the reconstruction plus
//! signed-proximity objective.

use std::sync::Arc;

use super::dense::{layer_shapes, stack_from_layout, Activation, Dense};
use super::params::{Layout, ParamVector};
use super::{LossBreakdown, Objective};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::sampling::SubNetwork;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AutoencoderSpec {
    pub input_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub latent_dim: usize,
}

impl AutoencoderSpec {
    pub fn new(input_dim: usize, encoder_hidden: Vec<usize>, latent_dim: usize) -> Result<Self> {
        let spec = AutoencoderSpec {
            input_dim,
            encoder_hidden,
            latent_dim,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.latent_dim == 0 || self.encoder_hidden.contains(&0) {
            return Err(Error::Config(format!(
                "autoencoder dimensions must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// Widths from input to reconstruction: `n', h1..ho, d, ho..h1, n'`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim];
        w.extend(&self.encoder_hidden);
        w.push(self.latent_dim);
        w.extend(self.encoder_hidden.iter().rev());
        w.push(self.input_dim);
        w
    }

    /// Number of encoder layers; the latent code is the output of the last one.
    pub fn encoder_depth(&self) -> usize {
        self.encoder_hidden.len() + 1
    }

    pub fn layout(&self) -> Layout {
        let widths = self.widths();
        let depth = self.encoder_depth();
        let shapes = widths.windows(2).enumerate().flat_map(|(i, pair)| {
            if i < depth {
                layer_shapes("enc", i + 1, pair[0], pair[1])
            } else {
                layer_shapes("dec", i + 1 - depth, pair[0], pair[1])
            }
        });
        Layout::new(shapes)
    }

    fn stack(&self, layout: &Layout) -> Vec<Dense> {
        stack_from_layout(layout, &vec![Activation::Sigmoid; 2 * self.encoder_depth()])
    }
}

/// Per-layer activations kept for backpropagation; entry 0 is the input.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Vec<f64>>,
    rows: usize,
}

#[derive(Debug, Clone)]
pub struct AutoencoderOutput {
    /// Latent codes, one row per node.
    pub z: Matrix,
    /// Reconstructed adjacency rows.
    pub reconstruction: Matrix,
    pub cache: ForwardCache,
}

fn check_layout(model: &ParamVector, spec: &AutoencoderSpec) -> Result<()> {
    let widths = spec.widths();
    let blocks = model.layout().blocks();
    let matches = blocks.len() == 2 * (widths.len() - 1)
        && widths
            .windows(2)
            .zip(blocks.chunks(2))
            .all(|(w, pair)| (pair[0].rows, pair[0].cols, pair[1].rows, pair[1].cols) == (w[1], w[0], w[1], 1));
    if !matches {
        return Err(Error::Shape(format!(
            "parameter layout of length {} does not match {:?}",
            model.len(),
            spec
        )));
    }
    Ok(())
}

/// Runs encoder and decoder over every row of `adjacency`.
pub fn forward(model: &ParamVector, spec: &AutoencoderSpec, adjacency: &Matrix) -> Result<AutoencoderOutput> {
    check_layout(model, spec)?;
    if adjacency.cols() != spec.input_dim {
        return Err(Error::Shape(format!(
            "adjacency has {} columns, model expects {}",
            adjacency.cols(),
            spec.input_dim
        )));
    }
    let rows = adjacency.rows();
    let layers = spec.stack(model.layout());
    let mut activations = Vec::with_capacity(layers.len() + 1);
    activations.push(adjacency.as_slice().to_vec());
    for layer in &layers {
        let next = layer.forward(model.values(), activations.last().unwrap(), rows);
        activations.push(next);
    }
    let depth = spec.encoder_depth();
    Ok(AutoencoderOutput {
        z: Matrix::from_vec(rows, spec.latent_dim, activations[depth].clone()),
        reconstruction: Matrix::from_vec(rows, spec.input_dim, activations.last().unwrap().clone()),
        cache: ForwardCache { activations, rows },
    })
}

pub fn adjacency_matrix(g: &SubNetwork) -> Matrix {
    let n = g.len();
    Matrix::from_vec(n, n, g.adjacency().iter().map(|&a| a as f64).collect())
}

/// Signed pair weight: +1 for an edge, -1 otherwise.
fn sign(g: &SubNetwork, i: usize, k: usize) -> f64 {
    if g.adjacent(i, k) {
        1.0
    } else {
        -1.0
    }
}

/// `sum_{i<k} s(i,k) * ||z_i - z_k||^2` over unordered node pairs.
pub fn proximity_pairwise(z: &Matrix, g: &SubNetwork) -> f64 {
    let n = z.rows();
    let mut total = 0.0;
    for i in 0..n {
        for k in (i + 1)..n {
            let dist: f64 = z.row(i).iter().zip(z.row(k)).map(|(a, b)| (a - b).powi(2)).sum();
            total += sign(g, i, k) * dist;
        }
    }
    total
}

/// `Tr(Z^T L Z)` with `L = D - S`, `S(i,k) = s(i,k)` off the diagonal and
/// `D(i,i) = sum_k S(i,k)`.
pub fn proximity_laplacian(z: &Matrix, g: &SubNetwork) -> f64 {
    let n = z.rows();
    let mut laplacian = Matrix::zeros(n, n);
    for i in 0..n {
        let mut degree = 0.0;
        for k in 0..n {
            if i != k {
                let s = sign(g, i, k);
                laplacian[(i, k)] = -s;
                degree += s;
            }
        }
        laplacian[(i, i)] = degree;
    }
    z.transpose().matmul(&laplacian.matmul(z)).trace()
}

pub fn reconstruction_error(adjacency: &Matrix, reconstruction: &Matrix) -> f64 {
    adjacency
        .as_slice()
        .iter()
        .zip(reconstruction.as_slice())
        .map(|(a, b)| (a - b).powi(2))
        .sum()
}

fn check_instance(spec: &AutoencoderSpec, g: &SubNetwork) -> Result<()> {
    if g.len() != spec.input_dim {
        return Err(Error::Shape(format!(
            "sub-network has {} nodes, model input is {}",
            g.len(),
            spec.input_dim
        )));
    }
    Ok(())
}

pub fn compute_losses(
    model: &ParamVector,
    spec: &AutoencoderSpec,
    g: &SubNetwork,
    alpha: f64,
) -> Result<LossBreakdown> {
    check_instance(spec, g)?;
    let a = adjacency_matrix(g);
    let out = forward(model, spec, &a)?;
    Ok(LossBreakdown::new(
        reconstruction_error(&a, &out.reconstruction),
        proximity_pairwise(&out.z, g),
        model.sum_of_squares(),
        alpha,
    ))
}

/// Losses and the exact gradient of `total` with respect to every parameter.
pub fn loss_and_gradient(
    model: &ParamVector,
    spec: &AutoencoderSpec,
    g: &SubNetwork,
    alpha: f64,
) -> Result<(LossBreakdown, ParamVector)> {
    check_instance(spec, g)?;
    let a = adjacency_matrix(g);
    let out = forward(model, spec, &a)?;
    let n = g.len();
    let d = spec.latent_dim;
    let params = model.values();
    let layers = spec.stack(model.layout());
    let depth = spec.encoder_depth();
    let acts = &out.cache.activations;

    let mut grad = ParamVector::zeros(model.layout().clone());
    // d/dA_hat of ||A - A_hat||^2
    let mut upstream: Vec<f64> = out
        .reconstruction
        .as_slice()
        .iter()
        .zip(a.as_slice())
        .map(|(r, t)| 2.0 * (r - t))
        .collect();

    for (li, layer) in layers.iter().enumerate().rev() {
        if li + 1 == depth {
            // dL_c/dz_i = 2 * sum_{k != i} s(i,k) (z_i - z_k)
            let z = &out.z;
            for i in 0..n {
                for k in 0..n {
                    if i == k {
                        continue;
                    }
                    let s2 = 2.0 * sign(g, i, k);
                    for c in 0..d {
                        upstream[i * d + c] += s2 * (z[(i, c)] - z[(k, c)]);
                    }
                }
            }
        }
        upstream = layer.backward(
            params,
            &acts[li],
            &acts[li + 1],
            &upstream,
            out.cache.rows,
            grad.values_mut(),
        );
        debug_assert_eq!(layer.fan_out(), acts[li + 1].len() / n.max(1));
    }
    for (gv, &p) in grad.values_mut().iter_mut().zip(params) {
        *gv += 2.0 * alpha * p;
    }

    let losses = LossBreakdown::new(
        reconstruction_error(&a, &out.reconstruction),
        proximity_pairwise(&out.z, g),
        model.sum_of_squares(),
        alpha,
    );
    Ok((losses, grad))
}

/// Training objective over single sub-networks.
#[derive(Debug, Clone)]
pub struct AutoencoderObjective {
    pub spec: AutoencoderSpec,
    pub alpha: f64,
}

impl Objective for AutoencoderObjective {
    type Instance = SubNetwork;

    fn layout(&self) -> Arc<Layout> {
        Arc::new(self.spec.layout())
    }

    fn loss_and_gradient(&self, model: &ParamVector, instance: &SubNetwork) -> Result<(f64, ParamVector)> {
        let (losses, grad) = loss_and_gradient(model, &self.spec, instance, self.alpha)?;
        Ok((losses.total, grad))
    }
}
