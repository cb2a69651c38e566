//! Output assembly from the final generation.
//!
//! Node embeddings concatenate, model by model and pool graph by pool graph,
//! the latent code each model assigns the node inside each sub-network. Slots
//! for sub-networks that do not contain the node are filled with uniform
//! `[0, 1)` padding drawn from a stream keyed by (node, model, graph), so the
//! same run always pads the same way.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::evolution::Generation;
use crate::matrix::Matrix;
use crate::model::autoencoder::{adjacency_matrix, forward, AutoencoderSpec};
use crate::model::ParamVector;
use crate::rng::{self, Purpose};
use crate::sampling::{Pool, SubNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleStrategy {
    Concatenate,
    BestModel,
}

impl FromStr for EnsembleStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "concat" | "concatenate" => Ok(EnsembleStrategy::Concatenate),
            "best" | "best-model" => Ok(EnsembleStrategy::BestModel),
            other => Err(format!("unknown ensemble strategy `{other}` (concat, best)")),
        }
    }
}

impl fmt::Display for EnsembleStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnsembleStrategy::Concatenate => "concat",
            EnsembleStrategy::BestModel => "best",
        })
    }
}

/// Per-node embedding vectors of one common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    node_ids: Vec<u64>,
    index: HashMap<u64, usize>,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        EmbeddingTable {
            dimension,
            node_ids: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    /// Appends a row; fails on a wrong length or a repeated id.
    pub fn push(&mut self, node: u64, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::Shape(format!(
                "vector for node {node} has {} entries, table dimension is {}",
                vector.len(),
                self.dimension
            )));
        }
        if self.index.contains_key(&node) {
            return Err(Error::Shape(format!("node {node} appears twice")));
        }
        self.index.insert(node, self.node_ids.len());
        self.node_ids.push(node);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn node_ids(&self) -> &[u64] {
        &self.node_ids
    }

    pub fn get(&self, node: u64) -> Option<&[f64]> {
        self.index
            .get(&node)
            .map(|&i| &self.data[i * self.dimension..(i + 1) * self.dimension])
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &[f64])> + '_ {
        self.node_ids
            .iter()
            .copied()
            .zip(self.data.chunks(self.dimension.max(1)))
    }
}

/// Reproducible padding for `node` in slot (`model_index`, `graph_index`).
pub fn padding(seed: u64, node: u64, model_index: usize, graph_index: usize, dim: usize) -> Vec<f64> {
    let mut r = rng::stream(seed, Purpose::Padding, &[node, model_index as u64, graph_index as u64]);
    (0..dim).map(|_| r.random::<f64>()).collect()
}

/// Latent code of `node` from one model on one sub-network, or its padding.
pub fn model_graph_embedding(
    model: &ParamVector,
    spec: &AutoencoderSpec,
    g: &SubNetwork,
    node: u64,
    slot: (usize, usize),
    seed: u64,
) -> Result<Vec<f64>> {
    match g.local_index(node) {
        Some(i) => {
            let out = forward(model, spec, &adjacency_matrix(g))?;
            Ok(out.z.row(i).to_vec())
        }
        None => Ok(padding(seed, node, slot.0, slot.1, spec.latent_dim)),
    }
}

/// Latent matrices `Z` for every (model, pool graph) pair, model-major.
pub fn pool_latents(models: &[ParamVector], spec: &AutoencoderSpec, pool: &Pool) -> Result<Vec<Vec<Matrix>>> {
    let adjacency: Vec<Matrix> = pool.iter().map(adjacency_matrix).collect();
    let per_model = |model: &ParamVector| -> Result<Vec<Matrix>> {
        adjacency.iter().map(|a| Ok(forward(model, spec, a)?.z)).collect()
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        models.par_iter().map(per_model).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        models.iter().map(per_model).collect()
    }
}

/// Concatenated embeddings for every node in `nodes`.
///
/// `model_keys[j]` is the padding key of `models[j]`, normally its index in
/// the generation.
pub fn assemble_from_latents(
    latents: &[Vec<Matrix>],
    model_keys: &[usize],
    pool: &Pool,
    nodes: &[u64],
    latent_dim: usize,
    seed: u64,
) -> Result<EmbeddingTable> {
    if latents.is_empty() || pool.is_empty() {
        return Err(Error::Evaluation("need at least one model and one pool graph".into()));
    }
    let p = pool.len();
    let d = latent_dim;
    let dim = latents.len() * p * d;
    // position of each node inside each pool graph
    let mut where_present: HashMap<u64, Vec<(usize, usize)>> = HashMap::new();
    for (t, g) in pool.iter().enumerate() {
        for (i, &id) in g.nodes().iter().enumerate() {
            where_present.entry(id).or_default().push((t, i));
        }
    }
    let row = |node: u64| -> Vec<f64> {
        let mut v = Vec::with_capacity(dim);
        let present = where_present.get(&node).map(Vec::as_slice).unwrap_or(&[]);
        for (j, zs) in latents.iter().enumerate() {
            let mut cursor = 0;
            for (t, z) in zs.iter().enumerate() {
                if cursor < present.len() && present[cursor].0 == t {
                    v.extend_from_slice(z.row(present[cursor].1));
                    cursor += 1;
                } else {
                    v.extend(padding(seed, node, model_keys[j], t, d));
                }
            }
        }
        v
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        nodes.par_iter().map(|&n| row(n)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<f64>> = nodes.iter().map(|&n| row(n)).collect();

    let mut table = EmbeddingTable::new(dim);
    for (&node, r) in nodes.iter().zip(&rows) {
        table.push(node, r)?;
    }
    Ok(table)
}

/// Full concatenation over all models of the generation.
pub fn assemble_embeddings(
    generation: &Generation,
    spec: &AutoencoderSpec,
    pool: &Pool,
    nodes: &[u64],
    seed: u64,
) -> Result<EmbeddingTable> {
    if generation.models.is_empty() {
        return Err(Error::Evaluation("empty population".into()));
    }
    let latents = pool_latents(&generation.models, spec, pool)?;
    let keys: Vec<usize> = (0..generation.models.len()).collect();
    assemble_from_latents(&latents, &keys, pool, nodes, spec.latent_dim, seed)
}

/// Embeddings from the single best model of the generation.
pub fn assemble_best_model(
    generation: &Generation,
    spec: &AutoencoderSpec,
    pool: &Pool,
    nodes: &[u64],
    seed: u64,
) -> Result<EmbeddingTable> {
    let best = select_best_model(generation)?;
    let latents = pool_latents(std::slice::from_ref(&generation.models[best]), spec, pool)?;
    assemble_from_latents(&latents, &[best], pool, nodes, spec.latent_dim, seed)
}

/// Index of the lowest raw validation loss; ties go to the lowest index.
pub fn select_best_model(generation: &Generation) -> Result<usize> {
    let losses = generation
        .raw_losses()
        .ok_or_else(|| Error::Evaluation("generation has not been evaluated".into()))?;
    argmin(&losses).ok_or_else(|| Error::Evaluation("generation has no fitness values".into()))
}

pub(crate) fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| v < values[b]) {
            best = Some(i);
        }
    }
    best
}
