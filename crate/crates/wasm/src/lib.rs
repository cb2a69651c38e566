//! Browser bindings for three small demos: sub-network sampling on an SBM,
//! the selection and genetic-operator calculus, and a short evolution run.
//!
//! Every function returns a JSON string so the page needs no glue beyond
//! `JSON.parse`.

use std::fmt::Write as _;

use evonet_core::ensemble::assemble_embeddings;
use evonet_core::eval::{default_k, evaluate_links, sample_link_instances, Scorer};
use evonet_core::evolution::{
    self, crossover, mutate, normalize_fitness, selection_probabilities, EvolutionConfig, GraphTask,
};
use evonet_core::graph::{generate_sbm, sbm_blocks, Graph};
use evonet_core::model::Layout;
use evonet_core::model::{AutoencoderSpec, ParamVector, TrainConfig};
use evonet_core::rng::{self, Purpose};
use evonet_core::sampling::{build_pool, sample_subnetwork, SamplerConfig, Strategy};
use wasm_bindgen::prelude::*;

type Out = Result<String, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "null".into()
    }
}

fn array<T>(items: impl IntoIterator<Item = T>, f: impl Fn(T) -> String) -> String {
    let parts: Vec<String> = items.into_iter().map(f).collect();
    format!("[{}]", parts.join(","))
}

fn two_block_sbm(seed: u32, block_size: usize, p_in: f64, p_out: f64) -> Result<Graph, String> {
    if block_size == 0 || block_size > 500 {
        return Err("block size must be between 1 and 500".to_string());
    }
    generate_sbm(
        &[block_size, block_size],
        p_in,
        p_out,
        &mut rng::stream(seed as u64, Purpose::Graph, &[]),
    )
    .map_err(err)
}

/// Generates a two-block SBM and samples one sub-network from it.
///
/// Returns `{nodes, blocks, edges, sample, sample_edges}`; `sample` lists the
/// chosen node ids in sampling order.
pub fn sample_demo_json(
    seed: u32,
    block_size: usize,
    p_in: f64,
    p_out: f64,
    strategy: &str,
    sub_network_size: usize,
) -> Out {
    let graph = two_block_sbm(seed, block_size, p_in, p_out)?;
    let config = SamplerConfig {
        strategy: strategy.parse::<Strategy>()?,
        sub_network_size,
    };
    let g = sample_subnetwork(&graph, &config, &mut rng::stream(seed as u64, Purpose::Pool, &[])).map_err(err)?;
    let edges = array(graph.edges(), |(a, b)| {
        format!("[{},{}]", graph.id_of(a), graph.id_of(b))
    });
    Ok(format!(
        "{{\"nodes\":{},\"blocks\":{},\"edges\":{},\"sample\":{},\"sample_edges\":{}}}",
        array(graph.node_ids(), |id| id.to_string()),
        array(sbm_blocks(&[block_size, block_size]), |b| b.to_string()),
        edges,
        array(g.nodes(), |id| id.to_string()),
        g.edge_count()
    ))
}

/// Min-max normalization and selection probabilities for comma-separated
/// losses. Returns `{normalized, probabilities}`.
pub fn selection_demo_json(losses: &str) -> Out {
    let raw = losses
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{}` is not a number", s.trim()))
        })
        .collect::<Result<Vec<f64>, String>>()?;
    let normalized = normalize_fitness(&raw).map_err(err)?;
    let probs = selection_probabilities(&normalized);
    Ok(format!(
        "{{\"normalized\":{},\"probabilities\":{}}}",
        array(normalized, num),
        array(probs, num)
    ))
}

/// Crosses two random parents of `length` entries and mutates the child.
///
/// Returns `{parent_a, parent_b, child, source}` where `source[i]` is `"a"`,
/// `"b"` or `"m"` (mutated).
pub fn operators_demo_json(seed: u32, length: usize, p_a: f64, p_b: f64, mutation: f64) -> Out {
    if length == 0 || length > 10_000 {
        return Err("length must be between 1 and 10000".to_string());
    }
    if !(0.0..=1.0).contains(&mutation) {
        return Err("mutation probability must lie in [0, 1]".to_string());
    }
    let layout = std::sync::Arc::new(Layout::new([("theta".to_string(), length, 1)]));
    let seed = seed as u64;
    // parents live in disjoint ranges so provenance is visible
    let a = ParamVector::uniform(layout.clone(), 0.0, 0.5, &mut rng::stream(seed, Purpose::Init, &[0]));
    let b = ParamVector::uniform(layout, 0.5, 1.0, &mut rng::stream(seed, Purpose::Init, &[1]));
    let crossed = crossover(&a, &b, p_a, p_b, &mut rng::stream(seed, Purpose::Breed, &[0])).map_err(err)?;
    let child = mutate(&crossed, mutation, &mut rng::stream(seed, Purpose::Breed, &[1]));
    let source = (0..length).map(|i| {
        let v = child.values()[i];
        if v.to_bits() != crossed.values()[i].to_bits() {
            "\"m\""
        } else if v.to_bits() == a.values()[i].to_bits() {
            "\"a\""
        } else {
            "\"b\""
        }
    });
    Ok(format!(
        "{{\"parent_a\":{},\"parent_b\":{},\"child\":{},\"source\":{}}}",
        array(a.values().iter().copied(), num),
        array(b.values().iter().copied(), num),
        array(child.values().iter().copied(), num),
        array(source, str::to_string)
    ))
}

/// Settings of the evolution demo.
#[wasm_bindgen]
#[derive(Debug, Clone, Copy)]
pub struct EvolveSettings {
    pub seed: u32,
    pub block_size: usize,
    pub generations: usize,
    pub population: usize,
    pub sub_network_size: usize,
    pub pool_size: usize,
    pub learning_rate: f64,
    pub epochs_per_batch: usize,
}

#[wasm_bindgen]
impl EvolveSettings {
    #[wasm_bindgen(constructor)]
    pub fn new() -> EvolveSettings {
        EvolveSettings::default()
    }
}

impl Default for EvolveSettings {
    fn default() -> Self {
        EvolveSettings {
            seed: 1,
            block_size: 40,
            generations: 10,
            population: 6,
            sub_network_size: 10,
            pool_size: 60,
            learning_rate: 0.03,
            epochs_per_batch: 20,
        }
    }
}

/// Evolves autoencoders on a two-block SBM (p_in 0.3, p_out 0.02) and scores
/// the concatenated embeddings.
///
/// Returns `{history: [{generation, best, mean, delta_lc}], auc, dimension}`.
pub fn evolve_demo_json(settings: &EvolveSettings) -> Out {
    let s = *settings;
    if s.generations * s.population * s.epochs_per_batch > 20_000 {
        return Err("demo budget too large; lower generations, population or epochs".to_string());
    }
    let seed = s.seed as u64;
    let graph = two_block_sbm(s.seed, s.block_size, 0.3, 0.02)?;
    let sampler = SamplerConfig {
        strategy: Strategy::Bfs,
        sub_network_size: s.sub_network_size,
    };
    let pool = build_pool(
        &graph,
        s.pool_size,
        &sampler,
        &mut rng::stream(seed, Purpose::Pool, &[]),
    )
    .map_err(err)?;
    let spec = AutoencoderSpec::new(s.sub_network_size, vec![8], 4).map_err(err)?;
    let train = TrainConfig {
        learning_rate: s.learning_rate,
        epochs_per_batch: s.epochs_per_batch,
        ..TrainConfig::default()
    };
    let evo = EvolutionConfig {
        generations: s.generations,
        population: s.population,
        batch_size: 5,
        validation_size: 5,
        seed,
        ..EvolutionConfig::default()
    };
    let task = GraphTask::new(spec.clone(), &pool, train, &evo).map_err(err)?;
    let outcome = evolution::run(&task, &evo).map_err(err)?;
    let table = assemble_embeddings(&outcome.final_generation, &spec, &pool, graph.node_ids(), seed).map_err(err)?;
    let samples = sample_link_instances(&graph, 1, &mut rng::stream(seed, Purpose::Links, &[])).map_err(err)?;
    let (auc, _) = evaluate_links(&table, &samples, Scorer::Cosine, default_k(samples.len())).map_err(err)?;
    let mut history = String::from("[");
    for (i, r) in outcome.history.records.iter().enumerate() {
        if i > 0 {
            history.push(',');
        }
        let _ = write!(
            history,
            "{{\"generation\":{},\"best\":{},\"mean\":{},\"delta_lc\":{}}}",
            r.generation,
            num(r.best_loss),
            num(r.mean_loss),
            num(r.delta_proximity)
        );
    }
    history.push(']');
    Ok(format!(
        "{{\"history\":{history},\"auc\":{},\"dimension\":{}}}",
        num(auc),
        table.dimension()
    ))
}

#[wasm_bindgen]
pub fn sample_demo(
    seed: u32,
    block_size: usize,
    p_in: f64,
    p_out: f64,
    strategy: &str,
    sub_network_size: usize,
) -> Result<String, JsError> {
    sample_demo_json(seed, block_size, p_in, p_out, strategy, sub_network_size).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn selection_demo(losses: &str) -> Result<String, JsError> {
    selection_demo_json(losses).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn operators_demo(seed: u32, length: usize, p_a: f64, p_b: f64, mutation: f64) -> Result<String, JsError> {
    operators_demo_json(seed, length, p_a, p_b, mutation).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn evolve_demo(settings: &EvolveSettings) -> Result<String, JsError> {
    evolve_demo_json(settings).map_err(|e| JsError::new(&e))
}
