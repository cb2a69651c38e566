use std::sync::Arc;

use evonet_core::evolution::{crossover, mutate};
use evonet_core::model::{Layout, ParamVector};
use evonet_core::rng::{self, Purpose};

fn parents(len: usize, seed: u64) -> (ParamVector, ParamVector) {
    let layout = Arc::new(Layout::new([("w".to_string(), len, 1)]));
    let a = ParamVector::uniform(layout.clone(), 0.0, 0.5, &mut rng::stream(seed, Purpose::Init, &[0]));
    let b = ParamVector::uniform(layout, 0.5, 1.0, &mut rng::stream(seed, Purpose::Init, &[1]));
    (a, b)
}

/// Count of `hits` out of `n` lies within three binomial standard deviations.
fn within_three_sigma(hits: usize, n: usize, p: f64) -> bool {
    let mean = n as f64 * p;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    (hits as f64 - mean).abs() <= 3.0 * sigma
}

#[test]
fn crossover_share_follows_parent_weights() {
    let n = 10_000;
    let (a, b) = parents(n, 1);
    for (pa, pb) in [(0.5, 0.5), (0.3072, 0.5065), (0.9, 0.1)] {
        let child = crossover(&a, &b, pa, pb, &mut rng::stream(2, Purpose::Breed, &[])).unwrap();
        let from_a = child
            .values()
            .iter()
            .zip(a.values())
            .filter(|(c, x)| c.to_bits() == x.to_bits())
            .count();
        let from_b = child
            .values()
            .iter()
            .zip(b.values())
            .filter(|(c, y)| c.to_bits() == y.to_bits())
            .count();
        assert_eq!(from_a + from_b, n);
        let share = pa / (pa + pb);
        assert!(within_three_sigma(from_a, n, share), "{from_a} of {n} at share {share}");
    }
}

#[test]
fn mutation_rate_matches_probability() {
    let n = 1_000_000;
    let (a, _) = parents(n, 3);
    for p_hat in [0.01, 0.1] {
        let m = mutate(&a, p_hat, &mut rng::stream(4, Purpose::Breed, &[]));
        let changed = m
            .values()
            .iter()
            .zip(a.values())
            .filter(|(x, y)| x.to_bits() != y.to_bits())
            .count();
        assert!(within_three_sigma(changed, n, p_hat), "{changed} of {n} at {p_hat}");
        assert!(m.values().iter().all(|v| (0.0..1.0).contains(v)));
    }
    assert!(mutate(&a, 0.0, &mut rng::from_seed(5)).bit_eq(&a));
    let all = mutate(&a, 1.0, &mut rng::from_seed(5));
    assert!(all.values().iter().zip(a.values()).all(|(x, y)| x != y));
}

#[test]
fn one_sided_weights_copy_a_single_parent() {
    let (a, b) = parents(500, 6);
    let only_a = crossover(&a, &b, 1.0, 0.0, &mut rng::from_seed(1)).unwrap();
    assert!(only_a.bit_eq(&a));
    let only_b = crossover(&a, &b, 0.0, 1.0, &mut rng::from_seed(1)).unwrap();
    assert!(only_b.bit_eq(&b));
    assert!(crossover(&a, &b, 0.0, 0.0, &mut rng::from_seed(1)).is_err());
}
