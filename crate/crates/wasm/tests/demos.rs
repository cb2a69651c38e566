use evonet_wasm::{evolve_demo_json, operators_demo_json, sample_demo_json, selection_demo_json, EvolveSettings};

#[test]
fn selection_matches_reference_values() {
    let out = selection_demo_json("2, 5, 8").unwrap();
    assert!(out.starts_with("{\"normalized\":[0,0.5,1],"), "{out}");
    let out = selection_demo_json("0,0.5,1").unwrap();
    let probs = out.split("\"probabilities\":[").nth(1).unwrap().trim_end_matches("]}");
    let p: Vec<f64> = probs.split(',').map(|v| v.parse().unwrap()).collect();
    for (got, want) in p.iter().zip([0.5065, 0.3072, 0.1863]) {
        assert!((got - want).abs() < 1e-3);
    }
    assert!(selection_demo_json("1, x").is_err());
    assert!(selection_demo_json("").is_err());
}

#[test]
fn sample_demo_is_deterministic() {
    let a = sample_demo_json(7, 20, 0.3, 0.02, "bfs", 8).unwrap();
    assert_eq!(a, sample_demo_json(7, 20, 0.3, 0.02, "bfs", 8).unwrap());
    let sample = a.split("\"sample\":[").nth(1).unwrap().split(']').next().unwrap();
    assert_eq!(sample.split(',').count(), 8);
    assert!(sample_demo_json(7, 20, 0.3, 0.02, "zigzag", 8).is_err());
    assert!(sample_demo_json(7, 20, 0.02, 0.3, "bfs", 8).is_err());
}

#[test]
fn operators_demo_labels_sources() {
    let out = operators_demo_json(3, 200, 1.0, 0.0, 0.0).unwrap();
    let source = out.split("\"source\":[").nth(1).unwrap();
    assert!(!source.contains("\"b\"") && !source.contains("\"m\""));
    let out = operators_demo_json(3, 200, 0.5, 0.5, 1.0).unwrap();
    let source = out.split("\"source\":[").nth(1).unwrap();
    assert!(!source.contains("\"a\""));
    assert!(operators_demo_json(3, 10, 0.5, 0.5, 2.0).is_err());
}

#[test]
fn evolve_demo_reports_history() {
    let s = EvolveSettings {
        generations: 3,
        population: 3,
        epochs_per_batch: 5,
        pool_size: 20,
        block_size: 15,
        ..EvolveSettings::default()
    };
    let out = evolve_demo_json(&s).unwrap();
    assert_eq!(out.matches("\"generation\":").count(), 3);
    assert!(out.contains("\"dimension\":240"), "{out}");
}
