//! Run configuration: `key = value` files, presets and command-line overrides.
//!
//! Resolution order, weakest first: built-in defaults, the named preset, the
//! config file, then overrides. The preset itself may come from the file or
//! from an override.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::ensemble::EnsembleStrategy;
use crate::error::{Error, Result};
use crate::eval::{EvalConfig, Scorer};
use crate::evolution::EvolutionConfig;
use crate::model::{AutoencoderSpec, MlpSpec, TrainConfig};
use crate::sampling::{SamplerConfig, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    GraphEmbed,
    TabularClassify,
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "graph-embed" => Ok(Task::GraphEmbed),
            "tabular-classify" => Ok(Task::TabularClassify),
            other => Err(format!("unknown task `{other}` (graph-embed, tabular-classify)")),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::GraphEmbed => "graph-embed",
            Task::TabularClassify => "tabular-classify",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// n'=10, p=200, b=10, m=10, K=20
    Ps1,
    /// n'=30, p=400, b=35, m=20, K=20
    Ps2,
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "PS1" => Ok(Preset::Ps1),
            "PS2" => Ok(Preset::Ps2),
            _ => Err(format!("unknown preset `{s}` (PS1, PS2)")),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Ps1 => "PS1",
            Preset::Ps2 => "PS2",
        })
    }
}

/// Every setting of a run. Field names are the config keys.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    /// Edge list or CSV; for graphs, `None` generates an SBM.
    pub input: Option<PathBuf>,
    pub output: PathBuf,
    pub seed: u64,
    pub preset: Option<Preset>,

    pub strategy: Strategy,
    pub sub_network_size: usize,
    pub pool_size: usize,

    pub learning_rate: f64,
    pub epochs_per_batch: usize,
    pub alpha: f64,
    pub init_low: f64,
    pub init_high: f64,
    pub encoder_hidden: Vec<usize>,
    pub latent_dim: usize,
    pub mlp_hidden: Vec<usize>,

    pub generations: usize,
    pub population: usize,
    pub mutation_probability: f64,
    pub batch_size: usize,
    /// Defaults to `batch_size`.
    pub validation_size: Option<usize>,

    pub np_ratio: usize,
    pub prec_k: Option<usize>,
    pub scorer: Scorer,
    /// Defaults to concatenation for graphs and best-model for tables.
    pub ensemble: Option<EnsembleStrategy>,

    pub sbm_blocks: Vec<usize>,
    pub sbm_p_in: f64,
    pub sbm_p_out: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let evo = EvolutionConfig::default();
        RunConfig {
            task: Task::GraphEmbed,
            input: None,
            output: PathBuf::from("out"),
            seed: 0,
            preset: None,
            strategy: Strategy::Bfs,
            sub_network_size: 10,
            pool_size: 200,
            learning_rate: train.learning_rate,
            epochs_per_batch: train.epochs_per_batch,
            alpha: train.alpha,
            init_low: train.init_low,
            init_high: train.init_high,
            encoder_hidden: vec![8],
            latent_dim: 4,
            mlp_hidden: vec![16],
            generations: evo.generations,
            population: evo.population,
            mutation_probability: evo.mutation_probability,
            batch_size: evo.batch_size,
            validation_size: None,
            np_ratio: 1,
            prec_k: None,
            scorer: Scorer::Cosine,
            ensemble: None,
            sbm_blocks: vec![100, 100],
            sbm_p_in: 0.3,
            sbm_p_out: 0.02,
        }
    }
}

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
}

impl Origin {
    fn line(self) -> Option<usize> {
        match self {
            Origin::Line(l) => Some(l),
            Origin::Override => None,
        }
    }
}

/// One `key = value` assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Setting {
    pub key: String,
    pub value: String,
    pub origin: Origin,
}

/// Splits config text into settings; blank lines and `#` lines are skipped.
pub fn parse_settings(text: &str) -> Result<Vec<Setting>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        out.push(Setting {
            key: key.trim().to_string(),
            value: value.trim().to_string(),
            origin: Origin::Line(i + 1),
        });
    }
    Ok(out)
}

/// Parses a command-line `key=value` override.
pub fn parse_override(text: &str) -> Result<Setting> {
    let (key, value) = text
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{text}` is not of the form key=value")))?;
    Ok(Setting {
        key: key.trim().to_string(),
        value: value.trim().to_string(),
        origin: Origin::Override,
    })
}

/// Resolves defaults, preset, file text and overrides into a checked config.
pub fn parse_config(file_text: &str, overrides: &[Setting]) -> Result<RunConfig> {
    let file = parse_settings(file_text)?;
    resolve(&file, overrides)
}

pub fn resolve(file: &[Setting], overrides: &[Setting]) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    let preset = file.iter().chain(overrides).rfind(|s| s.key == "preset");
    if let Some(s) = preset {
        config.set(s)?;
        if let Some(p) = config.preset {
            config.apply_preset(p);
        }
    }
    for s in file.iter().chain(overrides) {
        if s.key != "preset" {
            config.set(s)?;
        }
    }
    config.validate()?;
    Ok(config)
}

fn parse_named<T: FromStr<Err = String>>(s: &Setting) -> Result<T> {
    s.value
        .parse()
        .map_err(|m| Error::config_key(&s.key, s.origin.line(), m))
}

fn parse_list(value: &str) -> Option<Vec<usize>> {
    if value.is_empty() {
        return Some(Vec::new());
    }
    value.split(',').map(|v| v.trim().parse().ok()).collect()
}

fn join(values: &[usize]) -> String {
    values.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn apply_preset(&mut self, preset: Preset) {
        let (n, p, b, m) = match preset {
            Preset::Ps1 => (10, 200, 10, 10),
            Preset::Ps2 => (30, 400, 35, 20),
        };
        self.preset = Some(preset);
        self.sub_network_size = n;
        self.pool_size = p;
        self.batch_size = b;
        self.population = m;
        self.generations = 20;
        self.mutation_probability = 0.01;
        self.np_ratio = 1;
    }

    /// Applies one setting; fails on unknown keys and unparsable values.
    pub fn set(&mut self, s: &Setting) -> Result<()> {
        let v = s.value.as_str();
        let bad = |what: &str| Error::config_key(&s.key, s.origin.line(), format!("expected {what}, got `{v}`"));
        let uint = || v.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        let real = || {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad("a finite number"))
        };
        let list = || parse_list(v).ok_or_else(|| bad("a comma-separated list of integers"));
        match s.key.as_str() {
            "task" => self.task = parse_named(s)?,
            "input" => self.input = (!v.is_empty()).then(|| PathBuf::from(v)),
            "output" => self.output = PathBuf::from(v),
            "seed" => self.seed = v.parse().map_err(|_| bad("a non-negative integer"))?,
            "preset" => self.preset = if v.is_empty() { None } else { Some(parse_named(s)?) },
            "strategy" => self.strategy = parse_named(s)?,
            "sub_network_size" => self.sub_network_size = uint()?,
            "pool_size" => self.pool_size = uint()?,
            "learning_rate" => self.learning_rate = real()?,
            "epochs_per_batch" => self.epochs_per_batch = uint()?,
            "alpha" => self.alpha = real()?,
            "init_low" => self.init_low = real()?,
            "init_high" => self.init_high = real()?,
            "encoder_hidden" => self.encoder_hidden = list()?,
            "latent_dim" => self.latent_dim = uint()?,
            "mlp_hidden" => self.mlp_hidden = list()?,
            "generations" => self.generations = uint()?,
            "population" => self.population = uint()?,
            "mutation_probability" => self.mutation_probability = real()?,
            "batch_size" => self.batch_size = uint()?,
            "validation_size" => self.validation_size = if v == "auto" { None } else { Some(uint()?) },
            "np_ratio" => self.np_ratio = uint()?,
            "prec_k" => self.prec_k = if v == "auto" { None } else { Some(uint()?) },
            "scorer" => self.scorer = parse_named(s)?,
            "ensemble" => self.ensemble = if v == "auto" { None } else { Some(parse_named(s)?) },
            "sbm_blocks" => self.sbm_blocks = list()?,
            "sbm_p_in" => self.sbm_p_in = real()?,
            "sbm_p_out" => self.sbm_p_out = real()?,
            other => return Err(Error::config_key(other, s.origin.line(), "unknown key")),
        }
        Ok(())
    }

    /// Checks every range and cross-field invariant.
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: usize| {
            if v == 0 {
                Err(Error::config_key(key, None, "must be positive"))
            } else {
                Ok(())
            }
        };
        positive("sub_network_size", self.sub_network_size)?;
        positive("pool_size", self.pool_size)?;
        positive("latent_dim", self.latent_dim)?;
        positive("np_ratio", self.np_ratio)?;
        if self.prec_k == Some(0) {
            return Err(Error::config_key("prec_k", None, "must be positive"));
        }
        if self.encoder_hidden.contains(&0) {
            return Err(Error::config_key("encoder_hidden", None, "widths must be positive"));
        }
        if self.mlp_hidden.contains(&0) {
            return Err(Error::config_key("mlp_hidden", None, "widths must be positive"));
        }
        if self.sbm_blocks.is_empty() || self.sbm_blocks.contains(&0) {
            return Err(Error::config_key(
                "sbm_blocks",
                None,
                "need at least one positive block size",
            ));
        }
        for (key, p) in [("sbm_p_in", self.sbm_p_in), ("sbm_p_out", self.sbm_p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config_key(key, None, "must lie in [0, 1]"));
            }
        }
        if self.sbm_p_out >= self.sbm_p_in {
            return Err(Error::config_key("sbm_p_out", None, "must be below sbm_p_in"));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::config_key("learning_rate", None, "must be positive"));
        }
        self.train_config().validate()?;
        self.evolution_config().validate()?;
        Ok(())
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            strategy: self.strategy,
            sub_network_size: self.sub_network_size,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs_per_batch: self.epochs_per_batch,
            alpha: self.alpha,
            init_low: self.init_low,
            init_high: self.init_high,
        }
    }

    pub fn evolution_config(&self) -> EvolutionConfig {
        EvolutionConfig {
            generations: self.generations,
            population: self.population,
            mutation_probability: self.mutation_probability,
            batch_size: self.batch_size,
            validation_size: self.validation_size.unwrap_or(self.batch_size),
            seed: self.seed,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            np_ratio: self.np_ratio,
            k: self.prec_k,
            scorer: self.scorer,
        }
    }

    pub fn autoencoder_spec(&self) -> Result<AutoencoderSpec> {
        AutoencoderSpec::new(self.sub_network_size, self.encoder_hidden.clone(), self.latent_dim)
    }

    pub fn mlp_spec(&self, input_dim: usize, classes: usize) -> Result<MlpSpec> {
        MlpSpec::new(input_dim, self.mlp_hidden.clone(), classes)
    }

    pub fn ensemble_strategy(&self) -> EnsembleStrategy {
        self.ensemble.unwrap_or(match self.task {
            Task::GraphEmbed => EnsembleStrategy::Concatenate,
            Task::TabularClassify => EnsembleStrategy::BestModel,
        })
    }

    /// Every key with its resolved value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let auto = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        vec![
            ("task", self.task.to_string()),
            (
                "input",
                self.input.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            ),
            ("output", self.output.display().to_string()),
            ("seed", self.seed.to_string()),
            ("strategy", self.strategy.to_string()),
            ("sub_network_size", self.sub_network_size.to_string()),
            ("pool_size", self.pool_size.to_string()),
            ("learning_rate", format!("{:?}", self.learning_rate)),
            ("epochs_per_batch", self.epochs_per_batch.to_string()),
            ("alpha", format!("{:?}", self.alpha)),
            ("init_low", format!("{:?}", self.init_low)),
            ("init_high", format!("{:?}", self.init_high)),
            ("encoder_hidden", join(&self.encoder_hidden)),
            ("latent_dim", self.latent_dim.to_string()),
            ("mlp_hidden", join(&self.mlp_hidden)),
            ("generations", self.generations.to_string()),
            ("population", self.population.to_string()),
            ("mutation_probability", format!("{:?}", self.mutation_probability)),
            ("batch_size", self.batch_size.to_string()),
            ("validation_size", auto(self.validation_size.map(|v| v.to_string()))),
            ("np_ratio", self.np_ratio.to_string()),
            ("prec_k", auto(self.prec_k.map(|v| v.to_string()))),
            ("scorer", self.scorer.to_string()),
            ("ensemble", auto(self.ensemble.map(|v| v.to_string()))),
            ("sbm_blocks", join(&self.sbm_blocks)),
            ("sbm_p_in", format!("{:?}", self.sbm_p_in)),
            ("sbm_p_out", format!("{:?}", self.sbm_p_out)),
        ]
    }

    /// Re-parsable `key = value` text of the resolved config.
    pub fn to_config_text(&self) -> String {
        let mut out = String::from("# resolved configuration\n");
        if let Some(p) = self.preset {
            out.push_str(&format!("# preset {p} applied before file values and overrides\n"));
        }
        for (k, v) in self.entries() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}
