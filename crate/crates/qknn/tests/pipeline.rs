//! End-to-end runs over the bundled iris pairs.

use std::path::PathBuf;

use qknn::dataset::{load_csv, Dataset, LabelColumn};
use qknn::encode::EncodingKind;
use qknn::estimate::DistanceEstimateKind;
use qknn::harness::{
    export_results, run_experiment, ExperimentConfig, Modality, DEFAULT_PSEUDOCOUNTS,
};

fn iris(name: &str) -> Dataset {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name);
    load_csv(&path, LabelColumn::Last, true).unwrap()
}

fn base_config(modality: Modality) -> ExperimentConfig {
    ExperimentConfig {
        modality,
        encoding: Some(EncodingKind::Extension),
        estimate: Some(DistanceEstimateKind::Avg),
        k: 5,
        folds: 5,
        fold_seed: 42,
        shots: None,
        pseudocounts: None,
        runs: None,
        root_seed: None,
        share_counts_across_k: false,
    }
}

#[test]
fn statevector_tracks_the_classical_run_on_iris() {
    let ds = iris("01_iris_setosa_versicolor.csv");
    let classical_cfg = ExperimentConfig {
        encoding: None,
        estimate: None,
        ..base_config(Modality::Classical)
    };
    let classical = run_experiment(&classical_cfg, &ds).unwrap();
    let quantum = run_experiment(&base_config(Modality::Statevector), &ds).unwrap();

    assert_eq!(classical.len(), 5);
    assert_eq!(quantum.len(), 5);
    for (c, q) in classical.iter().zip(&quantum) {
        assert_eq!(c.instances.len(), 20);
        // Setosa and versicolor are linearly separable, so both modalities should
        // classify essentially everything correctly.
        assert!(c.accuracy >= 0.9, "classical fold accuracy {}", c.accuracy);
        assert!((c.accuracy - q.accuracy).abs() <= 0.05);
        assert!(q.mean_ji >= 0.9, "fold mean JI {}", q.mean_ji);
    }
}

#[test]
fn simulation_on_iris_is_deterministic_and_exports_cleanly() {
    let ds = iris("01_iris_versicolor_virginica.csv");
    let cfg = ExperimentConfig {
        modality: Modality::Simulation,
        shots: Some(512),
        pseudocounts: Some(DEFAULT_PSEUDOCOUNTS),
        runs: Some(2),
        root_seed: Some(7),
        ..base_config(Modality::Simulation)
    };
    let a = run_experiment(&cfg, &ds).unwrap();
    let b = run_experiment(&cfg, &ds).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 10, "2 runs x 5 folds");

    let dir = tempfile::tempdir().unwrap();
    export_results(&[(cfg, a)], dir.path()).unwrap();
    let per_fold = std::fs::read_to_string(dir.path().join("per_fold.csv")).unwrap();
    assert_eq!(per_fold.lines().count(), 1 + 10);
    let per_instance = std::fs::read_to_string(dir.path().join("per_instance.csv")).unwrap();
    assert_eq!(per_instance.lines().count(), 1 + 2 * 100);
    let header = per_instance.lines().next().unwrap();
    assert_eq!(
        header,
        "modality,encoding,estimate,k,shots,run,fold,instance,true_label,predicted_label,k_set,ji,aj,clamp_events"
    );
}

#[test]
fn shot_noise_shrinks_with_the_budget() {
    let ds = iris("01_iris_setosa_virginica.csv");
    let mut mean_ji = Vec::new();
    for shots in [64, 4096] {
        let cfg = ExperimentConfig {
            modality: Modality::Simulation,
            shots: Some(shots),
            pseudocounts: Some(DEFAULT_PSEUDOCOUNTS),
            runs: Some(2),
            root_seed: Some(1234),
            ..base_config(Modality::Simulation)
        };
        let results = run_experiment(&cfg, &ds).unwrap();
        let total: f64 = results.iter().map(|f| f.mean_ji).sum();
        mean_ji.push(total / results.len() as f64);
    }
    assert!(
        mean_ji[1] > mean_ji[0],
        "4096 shots should rank better than 64: {mean_ji:?}"
    );
}
