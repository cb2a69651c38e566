#![allow(dead_code)]

use evonet_core::eval::Label;
use evonet_core::model::autoencoder::{loss_and_gradient, AutoencoderSpec};
use evonet_core::model::mlp::{mlp_loss_and_gradient, MlpSpec};
use evonet_core::model::ParamVector;
use evonet_core::rng::Rng;
use evonet_core::sampling::SubNetwork;
use rand::Rng as _;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;

/// Random symmetric 0/1 adjacency with zero diagonal.
pub fn random_subnetwork(n: usize, density: f64, rng: &mut Rng) -> SubNetwork {
    let mut adj = vec![0u8; n * n];
    for i in 0..n {
        for k in i + 1..n {
            if rng.random::<f64>() < density {
                adj[i * n + k] = 1;
                adj[k * n + i] = 1;
            }
        }
    }
    let ids = (0..n as u64).map(|i| 100 + 7 * i).collect();
    SubNetwork::from_adjacency(ids, adj).unwrap()
}

/// `|a - b| / max(|a|, |b|)`, with the denominator floored at 1e-6 so that
/// near-zero entries are compared on an absolute scale.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Central differences of `loss` at every coordinate of `theta`.
pub fn numeric_gradient(theta: &ParamVector, loss: impl Fn(&ParamVector) -> f64) -> Vec<f64> {
    let mut probe = theta.clone();
    (0..theta.len())
        .map(|i| {
            let x = theta.values()[i];
            probe.values_mut()[i] = x + FD_STEP;
            let up = loss(&probe);
            probe.values_mut()[i] = x - FD_STEP;
            let down = loss(&probe);
            probe.values_mut()[i] = x;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Worst relative error between the analytic and numeric autoencoder
/// gradients on one instance.
pub fn autoencoder_gradient_error(theta: &ParamVector, spec: &AutoencoderSpec, g: &SubNetwork, alpha: f64) -> f64 {
    let (_, analytic) = loss_and_gradient(theta, spec, g, alpha).unwrap();
    let numeric = numeric_gradient(theta, |t| loss_and_gradient(t, spec, g, alpha).unwrap().0.total);
    worst(analytic.values(), &numeric)
}

pub fn mlp_gradient_error(theta: &ParamVector, spec: &MlpSpec, batch: &[(Vec<f64>, usize)]) -> f64 {
    let refs: Vec<(&[f64], usize)> = batch.iter().map(|(x, y)| (x.as_slice(), *y)).collect();
    let (_, analytic) = mlp_loss_and_gradient(theta, spec, &refs).unwrap();
    let numeric = numeric_gradient(theta, |t| mlp_loss_and_gradient(t, spec, &refs).unwrap().0);
    worst(analytic.values(), &numeric)
}

fn worst(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

/// Direct sum of `s(i,k) ||z_i - z_k||^2` over unordered pairs, s = +1 on
/// edges and -1 on non-edges.
pub fn brute_proximity(z: &[f64], d: usize, g: &SubNetwork) -> f64 {
    let n = g.len();
    let mut total = 0.0;
    for i in 0..n {
        for k in i + 1..n {
            let s = if g.adjacent(i, k) { 1.0 } else { -1.0 };
            let dist: f64 = (0..d).map(|c| (z[i * d + c] - z[k * d + c]).powi(2)).sum();
            total += s * dist;
        }
    }
    total
}

/// AUC by comparing every positive with every negative; ties count half.
pub fn brute_auc(scores: &[f64], labels: &[Label]) -> f64 {
    let mut twice_wins: u64 = 0;
    let (mut p, mut n) = (0u64, 0u64);
    for (i, li) in labels.iter().enumerate() {
        if !li.is_positive() {
            n += 1;
            continue;
        }
        p += 1;
        for (j, lj) in labels.iter().enumerate() {
            if lj.is_positive() {
                continue;
            }
            if scores[i] > scores[j] {
                twice_wins += 2;
            } else if scores[i] == scores[j] {
                twice_wins += 1;
            }
        }
    }
    (twice_wins as f64 / 2.0) / (p * n) as f64
}

/// Precision@K by repeatedly taking the highest remaining score, earliest
/// index first among ties.
pub fn brute_precision(scores: &[f64], labels: &[Label], k: usize) -> f64 {
    let mut taken = vec![false; scores.len()];
    let mut hits = 0;
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for i in 0..scores.len() {
            if !taken[i] && best.is_none_or(|b| scores[i] > scores[b]) {
                best = Some(i);
            }
        }
        let b = best.unwrap();
        taken[b] = true;
        if labels[b].is_positive() {
            hits += 1;
        }
    }
    hits as f64 / k as f64
}

/// Scores on a coarse grid so that ties are common.
pub fn random_scored_labels(len: usize, rng: &mut Rng) -> (Vec<f64>, Vec<Label>) {
    let mut labels: Vec<Label> = (0..len)
        .map(|_| {
            if rng.random::<bool>() {
                Label::Positive
            } else {
                Label::Negative
            }
        })
        .collect();
    labels[0] = Label::Positive;
    labels[len - 1] = Label::Negative;
    let scores = (0..len).map(|_| (rng.random_range(0..12) as f64) / 4.0 - 1.0).collect();
    (scores, labels)
}
