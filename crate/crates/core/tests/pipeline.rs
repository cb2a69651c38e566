use std::fs;
use std::path::Path;

use evonet_core::config::{parse_config, parse_override, RunConfig};
use evonet_core::ensemble::padding;
use evonet_core::io::{parse_embeddings, parse_history, MetricsFile};
use evonet_core::pipeline::{self, CONFIG_FILE, EMBEDDINGS_FILE, HISTORY_FILE, METRICS_FILE, PREDICTIONS_FILE};

const TINY: &[&str] = &[
    "sbm_blocks=15,15",
    "sub_network_size=6",
    "pool_size=12",
    "generations=3",
    "population=3",
    "batch_size=3",
    "epochs_per_batch=5",
    "learning_rate=0.03",
    "encoder_hidden=4",
    "latent_dim=2",
];

fn config(out: &Path, settings: &[&str]) -> RunConfig {
    let mut overrides: Vec<_> = settings.iter().map(|s| parse_override(s).unwrap()).collect();
    overrides.push(parse_override(&format!("output={}", out.display())).unwrap());
    parse_config("", &overrides).unwrap()
}

/// Metrics text with every wall-clock entry blanked out.
fn without_timings(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("wall_seconds"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn graph_run_writes_four_consistent_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), TINY);
    let summary = pipeline::run_pipeline(&cfg).unwrap();
    for name in [EMBEDDINGS_FILE, HISTORY_FILE, METRICS_FILE, CONFIG_FILE] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let table = parse_embeddings(&fs::read_to_string(dir.path().join(EMBEDDINGS_FILE)).unwrap()).unwrap();
    assert_eq!(table.len(), 30);
    assert_eq!(table.dimension(), 3 * 12 * 2);
    let history = parse_history(&fs::read_to_string(dir.path().join(HISTORY_FILE)).unwrap()).unwrap();
    assert_eq!(history.len(), 3);
    assert_eq!(history[0].3, 0.0);
    let metrics = MetricsFile::parse(&fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap()).unwrap();
    assert_eq!(metrics.get("dimension"), Some("72"));
    assert_eq!(metrics.get("nodes"), Some("30"));
    let auc: f64 = metrics.get("auc").unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&auc));
    assert!(metrics.get("wall_seconds").is_some());
    assert_eq!(summary.metrics, metrics);

    // the resolved config reproduces the run's settings
    let echoed = parse_config(&fs::read_to_string(dir.path().join(CONFIG_FILE)).unwrap(), &[]).unwrap();
    assert_eq!(echoed, cfg);
}

#[test]
fn identical_runs_are_bit_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline::run_pipeline(&config(a.path(), TINY)).unwrap();
    pipeline::run_pipeline(&config(b.path(), TINY)).unwrap();
    for name in [EMBEDDINGS_FILE, HISTORY_FILE] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name} differs"
        );
    }
    let metrics = |d: &Path| without_timings(&fs::read_to_string(d.join(METRICS_FILE)).unwrap());
    assert_eq!(metrics(a.path()), metrics(b.path()));

    let mut other = TINY.to_vec();
    other.push("seed=1");
    let c = tempfile::tempdir().unwrap();
    pipeline::run_pipeline(&config(c.path(), &other)).unwrap();
    assert_ne!(
        fs::read(a.path().join(EMBEDDINGS_FILE)).unwrap(),
        fs::read(c.path().join(EMBEDDINGS_FILE)).unwrap()
    );
}

#[test]
fn absent_nodes_receive_their_padding() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), TINY);
    let report = pipeline::run_graph(&cfg).unwrap();
    let d = cfg.latent_dim;
    let p = cfg.pool_size;
    let mut padded = 0;
    for (node, row) in report.embeddings.iter() {
        for j in 0..cfg.population {
            for (t, g) in report.model.pool.iter().enumerate() {
                let slot = &row[(j * p + t) * d..(j * p + t + 1) * d];
                if g.local_index(node).is_none() {
                    assert_eq!(slot, padding(cfg.seed, node, j, t, d).as_slice());
                    padded += 1;
                }
            }
        }
    }
    assert!(padded > 0);
}

#[test]
fn sample_and_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), TINY);
    fs::create_dir_all(dir.path()).unwrap();
    let (path, metrics) = pipeline::sample_only(&cfg).unwrap();
    let pool = evonet_core::io::parse_pool(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(pool.len(), 12);
    assert_eq!(
        metrics.get("pool_memory_bytes"),
        Some(pool.memory_bytes().to_string().as_str())
    );

    pipeline::run_pipeline(&cfg).unwrap();
    let graph = pipeline::load_graph(&cfg).unwrap();
    let edges: String = graph
        .edges()
        .map(|(a, b)| format!("{} {}\n", graph.id_of(a), graph.id_of(b)))
        .collect();
    let edge_path = dir.path().join("edges.txt");
    fs::write(&edge_path, edges).unwrap();
    let scored = pipeline::evaluate_files(&dir.path().join(EMBEDDINGS_FILE), &edge_path, &cfg).unwrap();
    let run = MetricsFile::parse(&fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap()).unwrap();
    assert_eq!(scored.get("auc"), run.get("auc"));
    assert_eq!(scored.get("prec_at_k"), run.get("prec_at_k"));
}

#[test]
fn failures_name_their_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut bad = TINY.to_vec();
    bad.push("learning_rate=1e9");
    let err = pipeline::run_pipeline(&config(dir.path(), &bad)).unwrap_err();
    assert!(!err.is_configuration());
    assert!(err.to_string().contains("evolve"), "{err}");

    let missing = dir.path().join("absent.txt");
    let mut cfg = config(dir.path(), TINY);
    cfg.input = Some(missing);
    let err = pipeline::run_pipeline(&cfg).unwrap_err();
    assert!(err.to_string().contains("load"), "{err}");
}

fn tiny_table() -> String {
    let mut text = String::from("# f1,f2,f3,label\n");
    for i in 0..90 {
        let class = i % 3;
        let base = class as f64 * 2.0;
        text.push_str(&format!(
            "{:.3},{:.3},{:.3},c{class}\n",
            base + (i as f64 * 0.37).sin(),
            -base + (i as f64 * 0.11).cos(),
            (i % 7) as f64
        ));
    }
    text
}

#[test]
fn tabular_run_reports_accuracy_and_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("table.csv");
    fs::write(&csv, tiny_table()).unwrap();
    let out = dir.path().join("out");
    let cfg = config(
        &out,
        &[
            "task=tabular-classify",
            &format!("input={}", csv.display()),
            "sub_network_size=5",
            "pool_size=20",
            "generations=4",
            "population=3",
            "batch_size=3",
            "epochs_per_batch=10",
            "learning_rate=0.3",
            "mlp_hidden=8",
            "alpha=0",
            "init_low=-1",
        ],
    );
    let summary = pipeline::run_pipeline(&cfg).unwrap();
    assert!(out.join(PREDICTIONS_FILE).is_file());
    let accuracy: f64 = summary.metrics.get("accuracy").unwrap().parse().unwrap();
    assert!(accuracy > 0.5, "separable classes, accuracy {accuracy}");
    assert_eq!(
        summary.metrics.get("baseline_steps"),
        Some((4 * 3 * 3 * 10).to_string().as_str())
    );
    let predictions = fs::read_to_string(out.join(PREDICTIONS_FILE)).unwrap();
    let test_rows: usize = summary.metrics.get("test_rows").unwrap().parse().unwrap();
    assert_eq!(predictions.lines().next(), Some("row\tpredicted\ttruth"));
    assert_eq!(predictions.lines().count(), test_rows + 1);
}
