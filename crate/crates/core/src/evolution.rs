//! The generation loop: train, validate, select, cross over and mutate.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::model::autoencoder::{self, AutoencoderObjective, AutoencoderSpec};
use crate::model::{init_with_layout, mlp, train_on_batch, Example, Layout, MlpObjective, ParamVector, TrainConfig};
use crate::rng::{self, Purpose, Rng};
use crate::sampling::{draw_indices, Pool, SubNetwork};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    /// Number of generations `K`, counting the initial one.
    pub generations: usize,
    /// Unit models per generation `m`.
    pub population: usize,
    pub mutation_probability: f64,
    pub batch_size: usize,
    pub validation_size: usize,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            generations: 20,
            population: 10,
            mutation_probability: 0.01,
            batch_size: 10,
            validation_size: 10,
            seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.generations == 0 {
            return Err(Error::config_key("generations", None, "must be at least 1"));
        }
        if self.population < 2 {
            return Err(Error::config_key("population", None, "must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.mutation_probability) {
            return Err(Error::config_key("mutation_probability", None, "must lie in [0, 1]"));
        }
        if self.batch_size == 0 {
            return Err(Error::config_key("batch_size", None, "must be positive"));
        }
        if self.validation_size == 0 {
            return Err(Error::config_key("validation_size", None, "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessRecord {
    pub raw_loss: f64,
    pub normalized_loss: f64,
    pub selection_probability: f64,
}

#[derive(Debug, Clone)]
pub struct Generation {
    /// 1-based generation number.
    pub index: usize,
    pub models: Vec<ParamVector>,
    pub fitness: Option<Vec<FitnessRecord>>,
}

impl Generation {
    pub fn new(index: usize, models: Vec<ParamVector>) -> Result<Self> {
        if models.len() < 2 {
            return Err(Error::Config(format!(
                "a generation needs at least 2 models, got {}",
                models.len()
            )));
        }
        if models.iter().any(|m| !m.same_layout(&models[0])) {
            return Err(Error::Shape("models in a generation must share one layout".into()));
        }
        Ok(Generation {
            index,
            models,
            fitness: None,
        })
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn raw_losses(&self) -> Option<Vec<f64>> {
        self.fitness.as_ref().map(|f| f.iter().map(|r| r.raw_loss).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRecord {
    pub generation: usize,
    pub best_loss: f64,
    pub mean_loss: f64,
    /// Mean over models of the proximity loss summed on the validation draw.
    pub proximity: f64,
    /// `proximity` minus the previous trained generation's mean proximity on
    /// the same validation draw; 0 for the first generation.
    pub delta_proximity: f64,
    pub best_so_far: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunHistory {
    pub records: Vec<HistoryRecord>,
}

impl RunHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Validation outcome for one model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fitness {
    /// Lower is better.
    pub raw_loss: f64,
    /// Proximity part of `raw_loss`; zero for tasks without one.
    pub proximity: f64,
}

/// What the evolution driver needs from a learning problem.
pub trait UnitTask: Sync {
    type Validation: Sync;

    fn layout(&self) -> Arc<Layout>;

    fn train_config(&self) -> &TrainConfig;

    /// Draws a training batch from `rng` and trains `model` on it.
    fn train(&self, model: &ParamVector, rng: &mut Rng) -> Result<ParamVector>;

    fn draw_validation(&self, rng: &mut Rng) -> Result<Self::Validation>;

    fn fitness(&self, model: &ParamVector, validation: &Self::Validation) -> Result<Fitness>;
}

/// `sum_g (L_e(g) + L_c(g))` over the validation sub-networks, without the
/// regularizer.
pub fn evaluate_fitness(model: &ParamVector, spec: &AutoencoderSpec, validation: &[&SubNetwork]) -> Result<f64> {
    Ok(validation_terms(model, spec, validation)?.raw_loss)
}

fn validation_terms(model: &ParamVector, spec: &AutoencoderSpec, validation: &[&SubNetwork]) -> Result<Fitness> {
    if validation.is_empty() {
        return Err(Error::Sampling("validation set is empty".into()));
    }
    let mut raw = 0.0;
    let mut proximity = 0.0;
    for g in validation {
        let l = autoencoder::compute_losses(model, spec, g, 0.0)?;
        raw += l.reconstruction + l.proximity;
        proximity += l.proximity;
    }
    Ok(Fitness {
        raw_loss: raw,
        proximity,
    })
}

/// Min-max scaling to `[0, 1]`; a constant list maps to all zeros.
pub fn normalize_fitness(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::Evaluation("no fitness values to normalize".into()));
    }
    if let Some(bad) = raw.iter().find(|v| !v.is_finite()) {
        return Err(Error::Evaluation(format!("non-finite fitness value {bad}")));
    }
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if span == 0.0 {
        return Ok(vec![0.0; raw.len()]);
    }
    Ok(raw.iter().map(|&v| ((v - min) / span).clamp(0.0, 1.0)).collect())
}

/// Softmax of the negated normalized losses.
pub fn selection_probabilities(normalized: &[f64]) -> Vec<f64> {
    let weights: Vec<f64> = normalized.iter().map(|&l| (-l).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// `m` parent pairs from `2m` independent categorical draws.
pub fn select_parent_pairs(probabilities: &[f64], rng: &mut Rng) -> Result<Vec<(usize, usize)>> {
    let dist = WeightedIndex::new(probabilities)
        .map_err(|e| Error::Evaluation(format!("invalid selection probabilities: {e}")))?;
    Ok((0..probabilities.len())
        .map(|_| (dist.sample(rng), dist.sample(rng)))
        .collect())
}

/// Entry-wise crossover: each entry comes from `parent_a` with probability
/// `p_a / (p_a + p_b)`, otherwise from `parent_b`.
pub fn crossover(
    parent_a: &ParamVector,
    parent_b: &ParamVector,
    p_a: f64,
    p_b: f64,
    rng: &mut Rng,
) -> Result<ParamVector> {
    if !parent_a.same_layout(parent_b) {
        return Err(Error::Shape("crossover parents have different layouts".into()));
    }
    if !(p_a >= 0.0 && p_b >= 0.0 && p_a + p_b > 0.0) {
        return Err(Error::Evaluation(format!("invalid parent weights {p_a}, {p_b}")));
    }
    let share_a = p_a / (p_a + p_b);
    let values = parent_a
        .values()
        .iter()
        .zip(parent_b.values())
        .map(|(&a, &b)| if rng.random::<f64>() < share_a { a } else { b })
        .collect();
    ParamVector::from_values(parent_a.layout().clone(), values)
}

/// Replaces each entry by a fresh uniform `[0, 1)` value with probability `p_hat`.
pub fn mutate(theta: &ParamVector, p_hat: f64, rng: &mut Rng) -> ParamVector {
    let mut out = theta.clone();
    for v in out.values_mut() {
        if rng.random::<f64>() < p_hat {
            *v = rng.random::<f64>();
        }
    }
    out
}

fn parallel_map<T, R, F>(items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> Result<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

/// Generation 1: freshly initialized models, one stream per model.
pub fn initial_generation<T: UnitTask>(task: &T, config: &EvolutionConfig) -> Result<Generation> {
    config.validate()?;
    let layout = task.layout();
    let models = (0..config.population)
        .map(|i| {
            let mut r = rng::stream(config.seed, Purpose::Init, &[i as u64]);
            init_with_layout(layout.clone(), task.train_config(), &mut r)
        })
        .collect();
    Generation::new(1, models)
}

/// Result of training and validating one generation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// The trained generation with fitness records attached.
    pub generation: Generation,
    pub fitness: Vec<Fitness>,
    /// Mean proximity of the previous trained generation on this
    /// generation's validation draw, when a previous generation was given.
    pub previous_proximity: Option<f64>,
}

/// Trains every model of `current` and scores it on a shared validation draw.
///
/// `previous`, the trained generation before `current`, is scored on the same
/// draw so that the proximity change between generations is measured on
/// identical sub-networks.
pub fn train_and_evaluate<T: UnitTask>(
    task: &T,
    current: &Generation,
    previous: Option<&Generation>,
    config: &EvolutionConfig,
) -> Result<Evaluation> {
    let j = current.index as u64;
    let seed = config.seed;
    let trained = parallel_map(&current.models, |i, model| {
        let mut r = rng::stream(seed, Purpose::Train, &[j, i as u64]);
        task.train(model, &mut r)
    })?;
    let validation = task.draw_validation(&mut rng::stream(seed, Purpose::Validation, &[j]))?;
    let fitness = parallel_map(&trained, |_, model| task.fitness(model, &validation))?;
    let previous_proximity = match previous {
        Some(prev) => {
            let f = parallel_map(&prev.models, |_, model| task.fitness(model, &validation))?;
            Some(f.iter().map(|x| x.proximity).sum::<f64>() / f.len() as f64)
        }
        None => None,
    };

    let raw: Vec<f64> = fitness.iter().map(|f| f.raw_loss).collect();
    let normalized = normalize_fitness(&raw)?;
    let probs = selection_probabilities(&normalized);
    let records = raw
        .iter()
        .zip(&normalized)
        .zip(&probs)
        .map(
            |((&raw_loss, &normalized_loss), &selection_probability)| FitnessRecord {
                raw_loss,
                normalized_loss,
                selection_probability,
            },
        )
        .collect();
    let mut generation = Generation::new(current.index, trained)?;
    generation.fitness = Some(records);
    Ok(Evaluation {
        generation,
        fitness,
        previous_proximity,
    })
}

/// Selection, crossover and mutation on an evaluated generation.
pub fn breed(evaluated: &Generation, config: &EvolutionConfig) -> Result<Generation> {
    let records = evaluated
        .fitness
        .as_ref()
        .ok_or_else(|| Error::Evaluation("generation has no fitness records".into()))?;
    let probs: Vec<f64> = records.iter().map(|r| r.selection_probability).collect();
    let j = evaluated.index as u64;
    let pairs = select_parent_pairs(&probs, &mut rng::stream(config.seed, Purpose::Selection, &[j]))?;
    let children = pairs
        .iter()
        .enumerate()
        .map(|(l, &(a, b))| {
            let mut r = rng::stream(config.seed, Purpose::Breed, &[j, l as u64]);
            let child = crossover(&evaluated.models[a], &evaluated.models[b], probs[a], probs[b], &mut r)?;
            Ok(mutate(&child, config.mutation_probability, &mut r))
        })
        .collect::<Result<Vec<_>>>()?;
    Generation::new(evaluated.index + 1, children)
}

fn record(eval: &Evaluation, previous: Option<&HistoryRecord>) -> HistoryRecord {
    let fitness = &eval.fitness;
    let m = fitness.len() as f64;
    let best_loss = fitness.iter().map(|f| f.raw_loss).fold(f64::INFINITY, f64::min);
    let mean_loss = fitness.iter().map(|f| f.raw_loss).sum::<f64>() / m;
    let proximity = fitness.iter().map(|f| f.proximity).sum::<f64>() / m;
    HistoryRecord {
        generation: eval.generation.index,
        best_loss,
        mean_loss,
        proximity,
        delta_proximity: eval.previous_proximity.map_or(0.0, |p| proximity - p),
        best_so_far: previous.map_or(best_loss, |p| p.best_so_far.min(best_loss)),
    }
}

/// The trained generation before the current one, with its history record.
pub type Lineage<'a> = Option<(&'a Generation, &'a HistoryRecord)>;

#[derive(Debug, Clone)]
pub struct GenerationStep {
    /// The input generation after training, with fitness attached.
    pub evaluated: Generation,
    pub next: Generation,
    pub record: HistoryRecord,
}

/// One full step from generation `j` to `j + 1`.
pub fn evolve_one_generation<T: UnitTask>(
    task: &T,
    current: &Generation,
    config: &EvolutionConfig,
    previous: Lineage<'_>,
) -> Result<GenerationStep> {
    let eval = train_and_evaluate(task, current, previous.map(|p| p.0), config)?;
    let record = record(&eval, previous.map(|p| p.1));
    let next = breed(&eval.generation, config)?;
    Ok(GenerationStep {
        evaluated: eval.generation,
        next,
        record,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Generation `K`, trained and evaluated.
    pub final_generation: Generation,
    pub history: RunHistory,
}

pub fn run<T: UnitTask>(task: &T, config: &EvolutionConfig) -> Result<RunOutcome> {
    run_with(task, config, |_| {})
}

/// Like [`run`], calling `observe` after each generation is evaluated.
pub fn run_with<T: UnitTask>(
    task: &T,
    config: &EvolutionConfig,
    mut observe: impl FnMut(&HistoryRecord),
) -> Result<RunOutcome> {
    let tag = |generation: usize| {
        move |e: Error| Error::Generation {
            generation,
            source: Box::new(e),
        }
    };
    let mut current = initial_generation(task, config)?;
    let mut history = RunHistory::default();
    let mut previous: Option<Generation> = None;
    for j in 1..config.generations {
        let lineage = previous.as_ref().zip(history.records.last());
        let step = evolve_one_generation(task, &current, config, lineage).map_err(tag(j))?;
        observe(&step.record);
        history.records.push(step.record);
        previous = Some(step.evaluated);
        current = step.next;
    }
    let k = config.generations;
    let eval = train_and_evaluate(task, &current, previous.as_ref(), config).map_err(tag(k))?;
    let last = record(&eval, history.records.last());
    observe(&last);
    history.records.push(last);
    Ok(RunOutcome {
        final_generation: eval.generation,
        history,
    })
}

/// Autoencoders trained on sub-network batches drawn from a pool.
#[derive(Debug, Clone)]
pub struct GraphTask<'a> {
    pub objective: AutoencoderObjective,
    pub pool: &'a Pool,
    pub train: TrainConfig,
    pub batch_size: usize,
    pub validation_size: usize,
}

impl<'a> GraphTask<'a> {
    pub fn new(spec: AutoencoderSpec, pool: &'a Pool, train: TrainConfig, evolution: &EvolutionConfig) -> Result<Self> {
        spec.validate()?;
        train.validate()?;
        if spec.input_dim != pool.sub_network_size() {
            return Err(Error::Shape(format!(
                "model input {} does not match sub-network size {}",
                spec.input_dim,
                pool.sub_network_size()
            )));
        }
        Ok(GraphTask {
            objective: AutoencoderObjective {
                spec,
                alpha: train.alpha,
            },
            pool,
            train,
            batch_size: evolution.batch_size,
            validation_size: evolution.validation_size,
        })
    }

    pub fn spec(&self) -> &AutoencoderSpec {
        &self.objective.spec
    }
}

impl UnitTask for GraphTask<'_> {
    type Validation = Vec<usize>;

    fn layout(&self) -> Arc<Layout> {
        Arc::new(self.objective.spec.layout())
    }

    fn train_config(&self) -> &TrainConfig {
        &self.train
    }

    fn train(&self, model: &ParamVector, rng: &mut Rng) -> Result<ParamVector> {
        let batch: Vec<&SubNetwork> = draw_indices(self.pool.len(), self.batch_size, rng)?
            .into_iter()
            .map(|i| self.pool.get(i))
            .collect();
        train_on_batch(model, &self.objective, &batch, &self.train)
    }

    fn draw_validation(&self, rng: &mut Rng) -> Result<Vec<usize>> {
        draw_indices(self.pool.len(), self.validation_size, rng)
    }

    fn fitness(&self, model: &ParamVector, validation: &Vec<usize>) -> Result<Fitness> {
        let graphs: Vec<&SubNetwork> = validation.iter().map(|&i| self.pool.get(i)).collect();
        validation_terms(model, &self.objective.spec, &graphs)
    }
}

/// MLP classifiers trained on mini-batches from a pool of training batches,
/// scored by mean cross-entropy on a fixed validation split.
#[derive(Debug, Clone)]
pub struct TabularTask<'a> {
    pub objective: MlpObjective,
    pub pool: &'a [Vec<Example>],
    pub validation: &'a [Example],
    pub train: TrainConfig,
    pub batch_size: usize,
}

impl UnitTask for TabularTask<'_> {
    type Validation = ();

    fn layout(&self) -> Arc<Layout> {
        Arc::new(self.objective.spec.layout())
    }

    fn train_config(&self) -> &TrainConfig {
        &self.train
    }

    fn train(&self, model: &ParamVector, rng: &mut Rng) -> Result<ParamVector> {
        let batch: Vec<&Vec<Example>> = draw_indices(self.pool.len(), self.batch_size, rng)?
            .into_iter()
            .map(|i| &self.pool[i])
            .collect();
        train_on_batch(model, &self.objective, &batch, &self.train)
    }

    fn draw_validation(&self, _rng: &mut Rng) -> Result<()> {
        if self.validation.is_empty() {
            return Err(Error::Sampling("validation split is empty".into()));
        }
        Ok(())
    }

    fn fitness(&self, model: &ParamVector, _: &()) -> Result<Fitness> {
        let batch: Vec<(&[f64], usize)> = self
            .validation
            .iter()
            .map(|e| (e.features.as_slice(), e.label))
            .collect();
        let (ce, _) = mlp::mlp_loss_and_gradient(model, &self.objective.spec, &batch)?;
        Ok(Fitness {
            raw_loss: ce,
            proximity: 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::from_seed;

    fn layout(n: usize) -> Arc<Layout> {
        Arc::new(Layout::new([("w".to_string(), n, 1)]))
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_fitness(&[2.0, 5.0, 8.0]).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(normalize_fitness(&[4.0, 4.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(normalize_fitness(&[-3.0, 1.0]).unwrap(), vec![0.0, 1.0]);
        assert!(normalize_fitness(&[1.0, f64::NAN]).is_err());
        assert!(normalize_fitness(&[1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn selection_examples() {
        let e = std::f64::consts::E;
        let p = selection_probabilities(&[0.0, 1.0]);
        assert!((p[0] - 1.0 / (1.0 + 1.0 / e)).abs() < 1e-12);
        assert!((p[0] - 0.7311).abs() < 1e-4 && (p[1] - 0.2689).abs() < 1e-4);
        let q = selection_probabilities(&[0.0, 0.5, 1.0]);
        for (got, want) in q.iter().zip([0.5065, 0.3072, 0.1863]) {
            assert!((got - want).abs() < 1e-4, "{q:?}");
        }
        let u = selection_probabilities(&[0.3; 4]);
        assert!(u.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn forced_parent_pairs() {
        let pairs = select_parent_pairs(&[1.0, 0.0, 0.0], &mut from_seed(3)).unwrap();
        assert_eq!(pairs, vec![(0, 0); 3]);
        let a = select_parent_pairs(&[0.2, 0.5, 0.3], &mut from_seed(9)).unwrap();
        let b = select_parent_pairs(&[0.2, 0.5, 0.3], &mut from_seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn crossover_edge_cases() {
        let a = ParamVector::uniform(layout(64), 0.0, 1.0, &mut from_seed(1));
        let b = ParamVector::uniform(layout(64), 0.0, 1.0, &mut from_seed(2));
        let same = crossover(&a, &a, 0.3, 0.7, &mut from_seed(0)).unwrap();
        assert!(same.bit_eq(&a));
        assert!(crossover(&a, &b, 0.4, 0.0, &mut from_seed(0)).unwrap().bit_eq(&a));
        assert!(crossover(&a, &b, 0.0, 0.4, &mut from_seed(0)).unwrap().bit_eq(&b));
        let other = ParamVector::zeros(layout(63));
        assert!(matches!(
            crossover(&a, &other, 0.5, 0.5, &mut from_seed(0)),
            Err(Error::Shape(_))
        ));
        assert!(crossover(&a, &b, 0.0, 0.0, &mut from_seed(0)).is_err());
    }

    #[test]
    fn mutation_edge_cases() {
        let a = ParamVector::uniform(layout(500), 5.0, 6.0, &mut from_seed(1));
        assert!(mutate(&a, 0.0, &mut from_seed(4)).bit_eq(&a));
        let all = mutate(&a, 1.0, &mut from_seed(4));
        assert!(all.values().iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn config_validation() {
        assert!(EvolutionConfig::default().validate().is_ok());
        let bad = EvolutionConfig {
            population: 1,
            ..EvolutionConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = EvolutionConfig {
            mutation_probability: 1.5,
            ..EvolutionConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
