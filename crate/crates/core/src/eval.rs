//! Network-recovery and classification metrics.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng as _;

use crate::ensemble::EmbeddingTable;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LinkSample {
    pub u: u64,
    pub v: u64,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scorer {
    Cosine,
    Dot,
    NegEuclidean,
}

impl FromStr for Scorer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cosine" => Ok(Scorer::Cosine),
            "dot" => Ok(Scorer::Dot),
            "neg-euclidean" => Ok(Scorer::NegEuclidean),
            other => Err(format!("unknown scorer `{other}` (cosine, dot, neg-euclidean)")),
        }
    }
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scorer::Cosine => "cosine",
            Scorer::Dot => "dot",
            Scorer::NegEuclidean => "neg-euclidean",
        })
    }
}

/// All edges as positives plus `np_ratio * |E|` distinct uniformly sampled
/// non-edges as negatives. Pairs are reported with `u < v` by node index.
pub fn sample_link_instances(graph: &Graph, np_ratio: usize, rng: &mut Rng) -> Result<Vec<LinkSample>> {
    if np_ratio == 0 {
        return Err(Error::Evaluation("np_ratio must be at least 1".into()));
    }
    let positives = graph.edge_count();
    let wanted = np_ratio * positives;
    let available = graph.non_edge_count();
    if wanted > available {
        let max_ratio = available.checked_div(positives).unwrap_or(0);
        return Err(Error::Evaluation(format!(
            "need {wanted} non-edges but the graph has {available}; the largest feasible np_ratio is {max_ratio}"
        )));
    }
    let mut samples: Vec<LinkSample> = graph
        .edges()
        .map(|(a, b)| LinkSample {
            u: graph.id_of(a),
            v: graph.id_of(b),
            label: Label::Positive,
        })
        .collect();

    let n = graph.node_count();
    let negatives: Vec<(usize, usize)> = if wanted * 2 <= available {
        // rejection sampling while non-edges are plentiful
        let mut seen = HashSet::with_capacity(wanted);
        let mut out = Vec::with_capacity(wanted);
        while out.len() < wanted {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a == b || graph.has_edge_index(a, b) {
                continue;
            }
            let pair = (a.min(b), a.max(b));
            if seen.insert(pair) {
                out.push(pair);
            }
        }
        out
    } else {
        let all: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
            .filter(|&(a, b)| !graph.has_edge_index(a, b))
            .collect();
        rand::seq::index::sample(rng, all.len(), wanted)
            .into_iter()
            .map(|i| all[i])
            .collect()
    };
    samples.extend(negatives.into_iter().map(|(a, b)| LinkSample {
        u: graph.id_of(a),
        v: graph.id_of(b),
        label: Label::Negative,
    }));
    Ok(samples)
}

pub fn score_vectors(a: &[f64], b: &[f64], scorer: Scorer) -> f64 {
    let dot = || a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    match scorer {
        Scorer::Dot => dot(),
        Scorer::Cosine => {
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            if na == 0.0 || nb == 0.0 {
                0.0
            } else {
                dot() / (na * nb)
            }
        }
        Scorer::NegEuclidean => -a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt(),
    }
}

pub fn score_link(table: &EmbeddingTable, u: u64, v: u64, scorer: Scorer) -> Result<f64> {
    let lookup = |n: u64| {
        table
            .get(n)
            .ok_or_else(|| Error::Evaluation(format!("node {n} has no embedding")))
    };
    Ok(score_vectors(lookup(u)?, lookup(v)?, scorer))
}

fn class_counts(labels: &[Label]) -> (usize, usize) {
    let p = labels.iter().filter(|l| l.is_positive()).count();
    (p, labels.len() - p)
}

/// Area under the ROC curve via the Mann-Whitney rank sum, with tied scores
/// sharing their average rank.
pub fn auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Evaluation(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::Evaluation(
            "AUC needs at least one positive and one negative".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the rank sum keeps average ranks integral
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 averaged: (i+1 + j+1) / 2
        let twice_avg = (i + j + 2) as u128;
        let tied_pos = order[i..=j].iter().filter(|&&k| labels[k].is_positive()).count() as u128;
        twice_rank_sum += twice_avg * tied_pos;
        i = j + 1;
    }
    let (p, n) = (pos as u128, neg as u128);
    // 2 * U = 2 * R_pos - P(P+1)
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok((twice_u as f64 / 2.0) / (p * n) as f64)
}

/// Share of positives among the `k` highest scores; ties keep input order.
pub fn precision_at_k(scores: &[f64], labels: &[Label], k: usize) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Evaluation("scores and labels differ in length".into()));
    }
    if k == 0 || k > scores.len() {
        return Err(Error::Evaluation(format!("k = {k} is outside 1..={}", scores.len())));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let hits = order[..k].iter().filter(|&&i| labels[i].is_positive()).count();
    Ok(hits as f64 / k as f64)
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::Evaluation(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Evaluation("accuracy of an empty set".into()));
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Default Precision@K cut-off: 500, or a tenth of the samples when fewer.
pub fn default_k(samples: usize) -> usize {
    500.min(samples / 10).max(1)
}

/// Runs `f` and returns its result with the elapsed wall time in seconds.
pub fn timed<R>(f: impl FnOnce() -> R) -> (R, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// Named wall-clock stage durations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageTimes {
    pub stages: Vec<(String, f64)>,
}

impl StageTimes {
    pub fn time<R>(&mut self, name: &str, f: impl FnOnce() -> R) -> R {
        let (out, secs) = timed(f);
        self.stages.push((name.to_string(), secs));
        out
    }

    pub fn total(&self) -> f64 {
        self.stages.iter().map(|(_, s)| s).sum()
    }
}

/// Link-evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub np_ratio: usize,
    /// Precision@K cutoff; `None` means [`default_k`] of the sample count.
    pub k: Option<usize>,
    pub scorer: Scorer,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            np_ratio: 1,
            k: None,
            scorer: Scorer::Cosine,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub auc: Option<f64>,
    pub precision_at_k: Option<f64>,
    pub k: Option<usize>,
    pub accuracy: Option<f64>,
    pub wall_seconds: f64,
}

/// Scores every sample and computes AUC and Precision@K.
pub fn evaluate_links(table: &EmbeddingTable, samples: &[LinkSample], scorer: Scorer, k: usize) -> Result<(f64, f64)> {
    let scores = samples
        .iter()
        .map(|s| score_link(table, s.u, s.v, scorer))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<Label> = samples.iter().map(|s| s.label).collect();
    Ok((auc(&scores, &labels)?, precision_at_k(&scores, &labels, k)?))
}
