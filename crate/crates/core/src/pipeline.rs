//! End-to-end runs: load, sample, evolve, assemble, evaluate and write.

use std::path::{Path, PathBuf};

use crate::config::{RunConfig, Task};
use crate::ensemble::{self, EmbeddingTable, EnsembleStrategy};
use crate::error::{Error, Result};
use crate::eval::{self, default_k, evaluate_links, sample_link_instances, Label, StageTimes};
use crate::evolution::{self, GraphTask, RunOutcome, TabularTask};
use crate::graph::{generate_sbm, load_edge_list, Graph};
use crate::io::{self, MetricsFile};
use crate::matrix::Matrix;
use crate::model::MlpObjective;
use crate::rng::{self, Purpose};
use crate::sampling::{build_pool, Pool};
use crate::tabular::{build_batch_pool, load_tabular_csv, predict_all, train_baseline, TabularDataset};

pub const EMBEDDINGS_FILE: &str = "embeddings.tsv";
pub const PREDICTIONS_FILE: &str = "predictions.tsv";
pub const HISTORY_FILE: &str = "history.tsv";
pub const METRICS_FILE: &str = "metrics.tsv";
pub const CONFIG_FILE: &str = "config.resolved";
pub const POOL_FILE: &str = "pool.tsv";

trait StageExt<T> {
    fn stage(self, name: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, name: &'static str) -> Result<T> {
        self.map_err(|e| e.at_stage(name))
    }
}

/// Reads the configured edge list, or generates the configured SBM.
pub fn load_graph(config: &RunConfig) -> Result<Graph> {
    match &config.input {
        Some(path) => load_edge_list(&std::fs::read_to_string(path)?),
        None => generate_sbm(
            &config.sbm_blocks,
            config.sbm_p_in,
            config.sbm_p_out,
            &mut rng::stream(config.seed, Purpose::Graph, &[]),
        ),
    }
}

pub fn sample_pool(graph: &Graph, config: &RunConfig) -> Result<Pool> {
    build_pool(
        graph,
        config.pool_size,
        &config.sampler_config(),
        &mut rng::stream(config.seed, Purpose::Pool, &[]),
    )
}

/// The learned part of a graph run, before embedding assembly.
#[derive(Debug, Clone)]
pub struct GraphModel {
    pub pool: Pool,
    pub outcome: RunOutcome,
    /// Latent matrices of the models the ensemble uses, model-major.
    pub latents: Vec<Vec<Matrix>>,
    /// Padding keys of those models.
    pub model_keys: Vec<usize>,
}

/// Samples the pool, evolves the population and runs every kept model over
/// every pool graph. Cost is linear in the pool size.
pub fn learn_graph(graph: &Graph, config: &RunConfig, times: &mut StageTimes) -> Result<GraphModel> {
    let spec = config.autoencoder_spec().stage("config")?;
    let evo = config.evolution_config();
    let pool = times.time("sample", || sample_pool(graph, config)).stage("sample")?;
    let outcome = times
        .time("evolve", || {
            let task = GraphTask::new(spec.clone(), &pool, config.train_config(), &evo)?;
            evolution::run(&task, &evo)
        })
        .stage("evolve")?;
    let (latents, model_keys) = times
        .time("infer", || -> Result<_> {
            let generation = &outcome.final_generation;
            match config.ensemble_strategy() {
                EnsembleStrategy::Concatenate => Ok((
                    ensemble::pool_latents(&generation.models, &spec, &pool)?,
                    (0..generation.len()).collect(),
                )),
                EnsembleStrategy::BestModel => {
                    let best = ensemble::select_best_model(generation)?;
                    let model = std::slice::from_ref(&generation.models[best]);
                    Ok((ensemble::pool_latents(model, &spec, &pool)?, vec![best]))
                }
            }
        })
        .stage("infer")?;
    Ok(GraphModel {
        pool,
        outcome,
        latents,
        model_keys,
    })
}

#[derive(Debug, Clone)]
pub struct GraphReport {
    pub graph: Graph,
    pub model: GraphModel,
    pub embeddings: EmbeddingTable,
    pub metrics: MetricsFile,
    pub auc: f64,
    pub precision_at_k: f64,
    pub warnings: Vec<String>,
}

/// The graph-embed pipeline, in memory.
pub fn run_graph(config: &RunConfig) -> Result<GraphReport> {
    let mut times = StageTimes::default();
    let graph = times.time("load", || load_graph(config)).stage("load")?;
    let model = learn_graph(&graph, config, &mut times)?;
    let embeddings = times
        .time("ensemble", || {
            ensemble::assemble_from_latents(
                &model.latents,
                &model.model_keys,
                &model.pool,
                graph.node_ids(),
                config.latent_dim,
                config.seed,
            )
        })
        .stage("ensemble")?;
    let eval_config = config.eval_config();
    let (samples, auc, prec, k) = times
        .time("evaluate", || -> Result<_> {
            let samples = sample_link_instances(
                &graph,
                eval_config.np_ratio,
                &mut rng::stream(config.seed, Purpose::Links, &[]),
            )?;
            let k = eval_config.k.unwrap_or_else(|| default_k(samples.len()));
            let (auc, prec) = evaluate_links(&embeddings, &samples, eval_config.scorer, k)?;
            Ok((samples, auc, prec, k))
        })
        .stage("evaluate")?;

    let coverage = model.pool.coverage(&graph);
    let mut warnings = Vec::new();
    if coverage < 1.0 {
        warnings.push(format!(
            "pool covers {:.1}% of nodes; uncovered nodes get padding only",
            100.0 * coverage
        ));
    }
    let positives = samples.iter().filter(|s| s.label == Label::Positive).count();
    let last = model.outcome.history.records.last().copied();
    let mut m = MetricsFile::default();
    m.push("task", Task::GraphEmbed);
    m.push("nodes", graph.node_count());
    m.push("edges", graph.edge_count());
    m.push_real("pool_coverage", coverage);
    m.push("pool_memory_bytes", model.pool.memory_bytes());
    m.push("dimension", embeddings.dimension());
    m.push("ensemble", config.ensemble_strategy());
    m.push("np_ratio", eval_config.np_ratio);
    m.push("positives", positives);
    m.push("negatives", samples.len() - positives);
    m.push("scorer", eval_config.scorer);
    m.push("k", k);
    m.push_real("auc", auc);
    m.push_real("prec_at_k", prec);
    if let Some(r) = last {
        m.push_real("final_best_loss", r.best_loss);
    }
    push_times(&mut m, &times);
    Ok(GraphReport {
        graph,
        model,
        embeddings,
        metrics: m,
        auc,
        precision_at_k: prec,
        warnings,
    })
}

fn push_times(m: &mut MetricsFile, times: &StageTimes) {
    for (name, secs) in &times.stages {
        m.push_seconds(&format!("wall_seconds_{name}"), *secs);
    }
    m.push_seconds("wall_seconds", times.total());
}

#[derive(Debug, Clone)]
pub struct TabularReport {
    pub dataset: TabularDataset,
    pub outcome: RunOutcome,
    pub best_model: usize,
    pub predictions: Vec<usize>,
    pub accuracy: f64,
    pub baseline_accuracy: f64,
    pub baseline_steps: usize,
    pub metrics: MetricsFile,
}

/// The tabular-classify pipeline, in memory. A single MLP trained for the
/// same number of SGD steps as the whole population is reported alongside.
pub fn run_tabular(config: &RunConfig) -> Result<TabularReport> {
    if config.ensemble_strategy() != EnsembleStrategy::BestModel {
        return Err(Error::config_key(
            "ensemble",
            None,
            "tabular-classify supports only `best`",
        ))
        .stage("config");
    }
    let path = config
        .input
        .as_ref()
        .ok_or_else(|| Error::config_key("input", None, "tabular-classify needs a CSV input"))
        .stage("config")?;
    let mut times = StageTimes::default();
    let dataset = times
        .time("load", || load_tabular_csv(path, config.seed))
        .stage("load")?;
    let train = dataset.examples(&dataset.train);
    let validation = dataset.examples(&dataset.validation);
    let test = dataset.examples(&dataset.test);
    let spec = config
        .mlp_spec(dataset.column_count(), dataset.class_count())
        .stage("config")?;
    let tc = config.train_config();
    let evo = config.evolution_config();
    let pool = times
        .time("sample", || {
            build_batch_pool(
                &train,
                config.pool_size,
                config.sub_network_size,
                &mut rng::stream(config.seed, Purpose::Pool, &[]),
            )
        })
        .stage("sample")?;
    let outcome = times
        .time("evolve", || {
            let task = TabularTask {
                objective: MlpObjective {
                    spec: spec.clone(),
                    alpha: tc.alpha,
                },
                pool: &pool,
                validation: &validation,
                train: tc,
                batch_size: evo.batch_size,
            };
            evolution::run(&task, &evo)
        })
        .stage("evolve")?;
    let truth: Vec<usize> = test.iter().map(|e| e.label).collect();
    let (best_model, predictions, accuracy) = times
        .time("evaluate", || -> Result<_> {
            let best = ensemble::select_best_model(&outcome.final_generation)?;
            let predicted = predict_all(&outcome.final_generation.models[best], &spec, &test)?;
            let acc = eval::accuracy(&predicted, &truth)?;
            Ok((best, predicted, acc))
        })
        .stage("evaluate")?;
    let baseline_steps = evo.generations * evo.population * evo.batch_size * tc.epochs_per_batch;
    let baseline_accuracy = times
        .time("baseline", || -> Result<f64> {
            let model = train_baseline(&spec, &tc, &pool, baseline_steps, config.seed)?;
            eval::accuracy(&predict_all(&model, &spec, &test)?, &truth)
        })
        .stage("baseline")?;

    let mut m = MetricsFile::default();
    m.push("task", Task::TabularClassify);
    m.push("rows", dataset.len());
    m.push("features", dataset.column_count());
    m.push("classes", dataset.class_count());
    m.push("split", "stratified 70/15/15");
    m.push("scaling", "min-max fit on train");
    m.push("train_rows", dataset.train.len());
    m.push("validation_rows", dataset.validation.len());
    m.push("test_rows", dataset.test.len());
    m.push("best_model", best_model);
    m.push_real("accuracy", accuracy);
    m.push("baseline_steps", baseline_steps);
    m.push_real("baseline_accuracy", baseline_accuracy);
    push_times(&mut m, &times);
    Ok(TabularReport {
        dataset,
        outcome,
        best_model,
        predictions,
        accuracy,
        baseline_accuracy,
        baseline_steps,
        metrics: m,
    })
}

/// Paths of the files a run wrote.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifacts {
    /// Embeddings for graphs, predictions for tables.
    pub output: PathBuf,
    pub history: PathBuf,
    pub metrics: PathBuf,
    pub config: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub artifacts: Artifacts,
    pub metrics: MetricsFile,
    pub warnings: Vec<String>,
}

/// Runs the configured task and writes its four artifact files.
pub fn run_pipeline(config: &RunConfig) -> Result<RunSummary> {
    config.validate().stage("config")?;
    let dir = &config.output;
    std::fs::create_dir_all(dir).map_err(Error::from).stage("write")?;
    let artifacts = Artifacts {
        output: dir.join(match config.task {
            Task::GraphEmbed => EMBEDDINGS_FILE,
            Task::TabularClassify => PREDICTIONS_FILE,
        }),
        history: dir.join(HISTORY_FILE),
        metrics: dir.join(METRICS_FILE),
        config: dir.join(CONFIG_FILE),
    };
    io::write_atomic(&artifacts.config, &config.to_config_text()).stage("write")?;
    let (history, metrics, warnings) = match config.task {
        Task::GraphEmbed => {
            let report = run_graph(config)?;
            io::write_embeddings(&report.embeddings, &artifacts.output).stage("write")?;
            (report.model.outcome.history, report.metrics, report.warnings)
        }
        Task::TabularClassify => {
            let report = run_tabular(config)?;
            let d = &report.dataset;
            let truth: Vec<usize> = d.test.iter().map(|&r| d.labels[r]).collect();
            let text = io::format_predictions(&d.test, &report.predictions, &truth, &d.class_names);
            io::write_atomic(&artifacts.output, &text).stage("write")?;
            (report.outcome.history, report.metrics, Vec::new())
        }
    };
    io::write_history(&history, &artifacts.history).stage("write")?;
    metrics.write(&artifacts.metrics).stage("write")?;
    Ok(RunSummary {
        artifacts,
        metrics,
        warnings,
    })
}

/// Builds the pool only and writes it to `pool.tsv` in the output directory.
pub fn sample_only(config: &RunConfig) -> Result<(PathBuf, MetricsFile)> {
    if config.task != Task::GraphEmbed {
        return Err(Error::config_key("task", None, "`sample` works on graph-embed configs")).stage("config");
    }
    let graph = load_graph(config).stage("load")?;
    let pool = sample_pool(&graph, config).stage("sample")?;
    let path = config.output.join(POOL_FILE);
    io::write_atomic(&path, &io::format_pool(&pool)).stage("write")?;
    let mut m = MetricsFile::default();
    m.push("pool_size", pool.len());
    m.push("sub_network_size", pool.sub_network_size());
    m.push_real("pool_coverage", pool.coverage(&graph));
    m.push("pool_memory_bytes", pool.memory_bytes());
    Ok((path, m))
}

/// Scores an embeddings file against an edge list.
pub fn evaluate_files(embeddings: &Path, edges: &Path, config: &RunConfig) -> Result<MetricsFile> {
    let table = io::read_embeddings(embeddings).stage("load")?;
    let graph = std::fs::read_to_string(edges)
        .map_err(Error::from)
        .and_then(|t| load_edge_list(&t))
        .stage("load")?;
    let e = config.eval_config();
    let mut times = StageTimes::default();
    let (auc, prec, k) = times
        .time("evaluate", || -> Result<_> {
            let samples =
                sample_link_instances(&graph, e.np_ratio, &mut rng::stream(config.seed, Purpose::Links, &[]))?;
            let k = e.k.unwrap_or_else(|| default_k(samples.len()));
            let (auc, prec) = evaluate_links(&table, &samples, e.scorer, k)?;
            Ok((auc, prec, k))
        })
        .stage("evaluate")?;
    let mut m = MetricsFile::default();
    m.push("np_ratio", e.np_ratio);
    m.push("scorer", e.scorer);
    m.push("k", k);
    m.push_real("auc", auc);
    m.push_real("prec_at_k", prec);
    push_times(&mut m, &times);
    Ok(m)
}
