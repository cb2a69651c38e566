//! Labelled tables: CSV loading, stratified splits, scaling and batch pools.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::model::mlp::{predict, MlpSpec};
use crate::model::{init_with_layout, train_on_batch, Example, MlpObjective, ParamVector, TrainConfig};
use crate::rng::{self, Purpose, Rng};
use crate::sampling::draw_indices;

/// Split fractions for train and validation; test takes the rest.
pub const TRAIN_FRACTION: f64 = 0.70;
pub const VALIDATION_FRACTION: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    /// Scaled features, one row per instance.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Label tokens in order of first appearance.
    pub class_names: Vec<String>,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl TabularDataset {
    pub fn column_count(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn examples(&self, rows: &[usize]) -> Vec<Example> {
        rows.iter()
            .map(|&r| Example {
                features: self.features[r].clone(),
                label: self.labels[r],
            })
            .collect()
    }
}

pub fn load_tabular_csv(path: &Path, split_seed: u64) -> Result<TabularDataset> {
    parse_tabular_csv(&std::fs::read_to_string(path)?, split_seed)
}

/// Comma-separated numeric features with a trailing label token. Blank lines
/// and lines starting with `#` are skipped.
pub fn parse_tabular_csv(text: &str, split_seed: u64) -> Result<TabularDataset> {
    let mut raw: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(Error::Parse {
                line: line_no,
                message: "need at least one feature and a label".into(),
            });
        }
        let (label, feats) = fields.split_last().unwrap();
        if let Some(first) = raw.first() {
            if first.len() != feats.len() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("{} features, earlier rows have {}", feats.len(), first.len()),
                });
            }
        }
        let row = feats
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        message: format!("feature `{f}` is not a finite number"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        let next = class_names.len();
        let c = *class_index.entry(label.to_string()).or_insert_with(|| {
            class_names.push(label.to_string());
            next
        });
        raw.push(row);
        labels.push(c);
    }
    if raw.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no data rows".into(),
        });
    }
    let (train, validation, test) = stratified_split(&labels, class_names.len(), split_seed);
    let features = min_max_scale(&raw, &train);
    Ok(TabularDataset {
        features,
        labels,
        class_names,
        train,
        validation,
        test,
    })
}

/// Stratified train/validation/test split.
///
/// Rows of each class are shuffled; the row at rank `r` of a class of size
/// `n` goes to train when `(r + 0.5) / n < 0.70`, to validation below `0.85`,
/// otherwise to test. Every non-empty class keeps at least one train row.
pub fn stratified_split(labels: &[usize], classes: usize, seed: u64) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (row, &c) in labels.iter().enumerate() {
        by_class[c].push(row);
    }
    let (mut train, mut validation, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (c, rows) in by_class.iter_mut().enumerate() {
        rows.shuffle(&mut rng::stream(seed, Purpose::Split, &[c as u64]));
        let n = rows.len() as f64;
        for (r, &row) in rows.iter().enumerate() {
            let u = (r as f64 + 0.5) / n;
            if u < TRAIN_FRACTION {
                train.push(row);
            } else if u < TRAIN_FRACTION + VALIDATION_FRACTION {
                validation.push(row);
            } else {
                test.push(row);
            }
        }
    }
    train.sort_unstable();
    validation.sort_unstable();
    test.sort_unstable();
    (train, validation, test)
}

/// Columnwise min-max scaling fit on `fit_rows`. Constant columns map to 0;
/// rows outside the fitted range may leave `[0, 1]`.
pub fn min_max_scale(rows: &[Vec<f64>], fit_rows: &[usize]) -> Vec<Vec<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut lo = vec![f64::INFINITY; cols];
    let mut hi = vec![f64::NEG_INFINITY; cols];
    for &r in fit_rows {
        for (j, &v) in rows[r].iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    rows.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| {
                    let span = hi[j] - lo[j];
                    if span > 0.0 {
                        (v - lo[j]) / span
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// `pool_size` mini-batches of `batch_rows` distinct training examples each.
pub fn build_batch_pool(
    train: &[Example],
    pool_size: usize,
    batch_rows: usize,
    rng: &mut Rng,
) -> Result<Vec<Vec<Example>>> {
    if pool_size == 0 {
        return Err(Error::config_key("pool_size", None, "must be positive"));
    }
    if batch_rows == 0 || batch_rows > train.len() {
        return Err(Error::Sampling(format!(
            "mini-batch of {batch_rows} rows from a train split of {}",
            train.len()
        )));
    }
    (0..pool_size)
        .map(|_| {
            Ok(draw_indices(train.len(), batch_rows, rng)?
                .into_iter()
                .map(|i| train[i].clone())
                .collect())
        })
        .collect()
}

/// Single MLP trained for exactly `steps` SGD steps on pool mini-batches.
pub fn train_baseline(
    spec: &MlpSpec,
    config: &TrainConfig,
    pool: &[Vec<Example>],
    steps: usize,
    seed: u64,
) -> Result<ParamVector> {
    let objective = MlpObjective {
        spec: spec.clone(),
        alpha: config.alpha,
    };
    let mut model = init_with_layout(
        Arc::new(spec.layout()),
        config,
        &mut rng::stream(seed, Purpose::Baseline, &[0]),
    );
    let mut r = rng::stream(seed, Purpose::Baseline, &[1]);
    let once = TrainConfig {
        epochs_per_batch: 1,
        ..*config
    };
    for _ in 0..steps {
        let i = draw_indices(pool.len(), 1, &mut r)?[0];
        model = train_on_batch(&model, &objective, &[&pool[i]], &once)?;
    }
    Ok(model)
}

pub fn predict_all(model: &ParamVector, spec: &MlpSpec, examples: &[Example]) -> Result<Vec<usize>> {
    examples.iter().map(|e| predict(model, spec, &e.features)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEN_ROWS: &str = "1,2,a\n2,3,a\n3,4,a\n4,5,a\n5,6,a\n6,1,b\n7,2,b\n8,3,b\n9,4,b\n10,5,b\n";

    #[test]
    fn ten_row_split_sizes() {
        let d = parse_tabular_csv(TEN_ROWS, 1).unwrap();
        assert_eq!(d.class_names, vec!["a", "b"]);
        assert_eq!((d.train.len(), d.validation.len(), d.test.len()), (6, 2, 2));
        for c in 0..2 {
            assert!(d.train.iter().any(|&r| d.labels[r] == c));
        }
        let mut all: Vec<usize> = d.train.iter().chain(&d.validation).chain(&d.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn scaling_fit_on_train() {
        let d = parse_tabular_csv(TEN_ROWS, 3).unwrap();
        for &r in &d.train {
            assert!(d.features[r].iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn split_is_seeded() {
        let a = parse_tabular_csv(TEN_ROWS, 5).unwrap();
        let b = parse_tabular_csv(TEN_ROWS, 5).unwrap();
        assert_eq!((a.train, a.validation, a.test), (b.train, b.validation, b.test));
    }

    #[test]
    fn parse_errors_name_the_row() {
        let e = parse_tabular_csv("1,2,a\n1,a\n", 0).unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = parse_tabular_csv("1,2,a\n1,x,b\n", 0).unwrap_err();
        assert!(e.to_string().contains("line 2") && e.to_string().contains("`x`"), "{e}");
    }
}
