//! Cross-validated experiment orchestration, ranking metrics, and result export.

use std::path::Path;

use rayon::prelude::*;

use crate::circuit::{apply_bell_h, exact_joint, sample_counts, smooth_counts};
use crate::dataset::{stratified_folds, Dataset};
use crate::encode::{build_initial_state, EncodingKind};
use crate::error::{Error, Result};
use crate::estimate::{estimate_distances, DistanceEstimateKind};
use crate::knn::{classical_distances, classify, NeighborResult};
use crate::preprocess::Normalizer;

/// Default fold count.
pub const DEFAULT_FOLDS: usize = 5;
/// Default measurement shots per circuit evaluation.
pub const DEFAULT_SHOTS: u64 = 1024;
/// Default Laplace pseudocounts granted to each significant cell.
pub const DEFAULT_PSEUDOCOUNTS: u64 = 10;
/// Default number of repeated simulation runs.
pub const DEFAULT_RUNS: u32 = 5;

/// How measurement probabilities are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modality {
    /// No circuit at all: exact Euclidean distances.
    Classical,
    /// Exact probabilities from the final statevector, the infinite-shots ideal.
    Statevector,
    /// Finite seeded measurement sampling with additive smoothing.
    Simulation,
}

impl std::str::FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(Modality::Classical),
            "statevector" => Ok(Modality::Statevector),
            "simulation" => Ok(Modality::Simulation),
            other => Err(Error::InvalidConfig(format!(
                "unknown modality {other:?}, expected \"classical\", \"statevector\" or \"simulation\""
            ))),
        }
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Modality::Classical => "classical",
            Modality::Statevector => "statevector",
            Modality::Simulation => "simulation",
        })
    }
}

/// A complete experiment description. Simulation-only fields must be present exactly
/// when the modality is `Simulation`; encoding and estimate are ignored by the
/// classical modality but required by the other two.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub modality: Modality,
    pub encoding: Option<EncodingKind>,
    pub estimate: Option<DistanceEstimateKind>,
    pub k: usize,
    pub folds: usize,
    pub fold_seed: u64,
    pub shots: Option<u64>,
    pub pseudocounts: Option<u64>,
    pub runs: Option<u32>,
    pub root_seed: Option<u64>,
    /// When set, every k value draws from the same seed stream, so neighbor sets for
    /// different k are computed from identical measurement counts. Off by default:
    /// each (k, run) pair gets its own stream.
    pub share_counts_across_k: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(Error::InvalidConfig("folds must be at least 2".into()));
        }
        let sim_only = [
            ("shots", self.shots.is_none()),
            ("pseudocounts", self.pseudocounts.is_none()),
            ("runs", self.runs.is_none()),
            ("root seed", self.root_seed.is_none()),
        ];
        match self.modality {
            Modality::Classical | Modality::Statevector => {
                for (name, absent) in sim_only {
                    if !absent {
                        return Err(Error::InvalidConfig(format!(
                            "{name} only applies to the simulation modality"
                        )));
                    }
                }
                if self.modality == Modality::Statevector {
                    self.require_pipeline_fields()?;
                }
            }
            Modality::Simulation => {
                self.require_pipeline_fields()?;
                match self.shots {
                    None => {
                        return Err(Error::InvalidConfig(
                            "the simulation modality requires shots".into(),
                        ))
                    }
                    Some(0) => {
                        return Err(Error::InvalidConfig("shots must be at least 1".into()))
                    }
                    Some(_) => {}
                }
                if self.pseudocounts.is_none() {
                    return Err(Error::InvalidConfig(
                        "the simulation modality requires pseudocounts".into(),
                    ));
                }
                match self.runs {
                    None => {
                        return Err(Error::InvalidConfig(
                            "the simulation modality requires a run count".into(),
                        ))
                    }
                    Some(0) => {
                        return Err(Error::InvalidConfig("runs must be at least 1".into()))
                    }
                    Some(_) => {}
                }
                if self.root_seed.is_none() {
                    return Err(Error::InvalidConfig(
                        "the simulation modality requires an explicit root seed".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn require_pipeline_fields(&self) -> Result<()> {
        if self.encoding.is_none() {
            return Err(Error::InvalidConfig(format!(
                "the {} modality requires an encoding",
                self.modality
            )));
        }
        if self.estimate.is_none() {
            return Err(Error::InvalidConfig(format!(
                "the {} modality requires a distance estimate kind",
                self.modality
            )));
        }
        Ok(())
    }
}

/// Outcome for one test instance. Index sets are dataset row indices in rank order.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceRecord {
    pub row: usize,
    pub true_label: String,
    pub predicted_label: String,
    pub k_set: Vec<usize>,
    pub correct_k_set: Vec<usize>,
    pub ji: f64,
    pub aj: f64,
    pub clamp_events: u32,
}

/// Aggregated outcome of one fold within one run.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldResult {
    pub run: u32,
    pub fold: usize,
    pub accuracy: f64,
    pub mean_ji: f64,
    pub mean_aj: f64,
    pub instances: Vec<InstanceRecord>,
}

/// Set overlap |A intersect B| / |A union B| between two duplicate-free index sets.
pub fn jaccard_index(s_correct: &[usize], s_found: &[usize]) -> Result<f64> {
    if s_correct.is_empty() && s_found.is_empty() {
        return Err(Error::InvalidConfig(
            "the Jaccard index of two empty sets is undefined".into(),
        ));
    }
    let inter = s_correct.iter().filter(|a| s_found.contains(a)).count();
    let union = s_correct.len() + s_found.len() - inter;
    Ok(inter as f64 / union as f64)
}

/// Mean Jaccard index over all ranking prefixes of length 1..=k.
pub fn average_jaccard(ranked_correct: &[usize], ranked_found: &[usize]) -> Result<f64> {
    if ranked_correct.len() != ranked_found.len() {
        return Err(Error::InvalidConfig(format!(
            "ranked lists of different lengths: {} vs {}",
            ranked_correct.len(),
            ranked_found.len()
        )));
    }
    let k = ranked_correct.len();
    if k == 0 {
        return Err(Error::InvalidConfig(
            "the average Jaccard of empty rankings is undefined".into(),
        ));
    }
    let mut total = 0.0;
    for m in 1..=k {
        total += jaccard_index(&ranked_correct[..m], &ranked_found[..m])?;
    }
    Ok(total / k as f64)
}

fn splitmix_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the sampling seed for one test-instance evaluation.
///
/// The derivation is position-based so parallel and serial execution sample identical
/// streams: starting from `mix(root_seed xor 0x9E3779B97F4A7C15)`, each field of
/// (k_tag, run, fold, dataset row) is folded in as `h = mix(h xor field)`, where `mix`
/// is the SplitMix64 finalizer. The k tag is k itself, or `u64::MAX` when counts are
/// shared across k values. The estimate rule and the shot count are deliberately not
/// part of the derivation, so avg and diff, as well as different shot budgets, consume
/// the same underlying streams.
pub fn derive_instance_seed(root_seed: u64, k_tag: u64, run: u32, fold: usize, row: usize) -> u64 {
    let mut h = splitmix_mix(root_seed ^ 0x9E37_79B9_7F4A_7C15);
    for field in [k_tag, run as u64, fold as u64, row as u64] {
        h = splitmix_mix(h ^ field);
    }
    h
}

/// Which intermediate artifacts to collect while running an experiment.
#[derive(Clone, Copy, Debug, Default)]
pub struct DumpSpec {
    pub statevector: bool,
    pub joint: bool,
    pub distances: bool,
}

/// One amplitude of a prepared initial state (before the circuit gates run).
/// States do not depend on the run index, so they are collected for run 0 only.
#[derive(Clone, Debug, PartialEq)]
pub struct StatevectorRow {
    pub fold: usize,
    pub row: usize,
    pub basis_index: usize,
    pub amplitude: f64,
}

/// One cell of a joint (qubit 0, index register) distribution, padding slots included.
#[derive(Clone, Debug, PartialEq)]
pub struct JointRow {
    pub run: u32,
    pub fold: usize,
    pub row: usize,
    pub b: u8,
    pub j: usize,
    pub probability: f64,
}

/// One estimated (or classical) distance, keyed by the training row it points at.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceRow {
    pub run: u32,
    pub fold: usize,
    pub row: usize,
    pub train_row: usize,
    pub distance: f64,
}

/// Intermediate artifacts collected during a run, in deterministic order.
#[derive(Clone, Debug, Default)]
pub struct DumpData {
    pub statevector_rows: Vec<StatevectorRow>,
    pub joint_rows: Vec<JointRow>,
    pub distance_rows: Vec<DistanceRow>,
}

struct FoldContext {
    fold: usize,
    train_rows: Vec<usize>,
    test_rows: Vec<usize>,
    train_norm: Vec<Vec<f64>>,
    test_norm: Vec<Vec<f64>>,
    train_labels: Vec<String>,
    test_labels: Vec<String>,
}

struct InstanceOutcome {
    record: InstanceRecord,
    statevector: Vec<f64>,
    joint: [Vec<f64>; 2],
    distances: Vec<f64>,
}

/// Runs the configured experiment over every fold (and run, for simulation).
pub fn run_experiment(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Vec<FoldResult>> {
    Ok(run_experiment_collecting(cfg, ds, DumpSpec::default())?.0)
}

/// Like [`run_experiment`] but also collects the artifacts selected by `dumps`.
pub fn run_experiment_collecting(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    dumps: DumpSpec,
) -> Result<(Vec<FoldResult>, DumpData)> {
    cfg.validate()?;
    let split = stratified_folds(ds, cfg.folds, cfg.fold_seed)?;

    let mut contexts = Vec::with_capacity(cfg.folds);
    for fold in 0..cfg.folds {
        let train_rows = split.train_rows(fold);
        let test_rows = split.test_rows(fold);
        if cfg.k > train_rows.len() {
            return Err(Error::InvalidConfig(format!(
                "k = {} exceeds the training size {} of fold {}",
                cfg.k,
                train_rows.len(),
                fold
            )));
        }
        let train_refs: Vec<&[f64]> = train_rows.iter().map(|&r| ds.instance(r)).collect();
        let nrm = Normalizer::fit(&train_refs)?;
        let train_norm = train_refs
            .iter()
            .map(|v| nrm.transform_train(v))
            .collect::<Result<Vec<_>>>()?;
        let test_norm = test_rows
            .iter()
            .map(|&r| nrm.transform_test(ds.instance(r)))
            .collect::<Result<Vec<_>>>()?;
        contexts.push(FoldContext {
            fold,
            train_labels: train_rows.iter().map(|&r| ds.label(r).to_string()).collect(),
            test_labels: test_rows.iter().map(|&r| ds.label(r).to_string()).collect(),
            train_rows,
            test_rows,
            train_norm,
            test_norm,
        });
    }

    let runs = match cfg.modality {
        Modality::Simulation => cfg.runs.expect("validated"),
        _ => 1,
    };

    let mut items = Vec::new();
    for run in 0..runs {
        for ctx in &contexts {
            for t in 0..ctx.test_rows.len() {
                items.push((run, ctx.fold, t));
            }
        }
    }

    // Work items are independent; the indexed collect keeps their order, so the
    // outcome is the same no matter how many worker threads execute them.
    let outcomes: Vec<InstanceOutcome> = items
        .par_iter()
        .map(|&(run, fold, t)| evaluate_instance(cfg, &contexts[fold], run, t, dumps))
        .collect::<Result<_>>()?;

    let mut results: Vec<FoldResult> = Vec::with_capacity(runs as usize * cfg.folds);
    let mut dump = DumpData::default();
    for (&(run, fold, _), outcome) in items.iter().zip(&outcomes) {
        if results.last().map(|f: &FoldResult| (f.run, f.fold)) != Some((run, fold)) {
            results.push(FoldResult {
                run,
                fold,
                accuracy: 0.0,
                mean_ji: 0.0,
                mean_aj: 0.0,
                instances: Vec::new(),
            });
        }
        let ctx = &contexts[fold];
        let record = &outcome.record;
        for (basis_index, &amplitude) in outcome.statevector.iter().enumerate() {
            dump.statevector_rows.push(StatevectorRow {
                fold,
                row: record.row,
                basis_index,
                amplitude,
            });
        }
        for (b, row_probs) in outcome.joint.iter().enumerate() {
            for (j, &probability) in row_probs.iter().enumerate() {
                dump.joint_rows.push(JointRow {
                    run,
                    fold,
                    row: record.row,
                    b: b as u8,
                    j,
                    probability,
                });
            }
        }
        for (j, &distance) in outcome.distances.iter().enumerate() {
            dump.distance_rows.push(DistanceRow {
                run,
                fold,
                row: record.row,
                train_row: ctx.train_rows[j],
                distance,
            });
        }
        results.last_mut().expect("just pushed").instances.push(record.clone());
    }

    for fr in &mut results {
        let total = fr.instances.len() as f64;
        let correct = fr
            .instances
            .iter()
            .filter(|r| r.predicted_label == r.true_label)
            .count() as f64;
        fr.accuracy = correct / total;
        fr.mean_ji = fr.instances.iter().map(|r| r.ji).sum::<f64>() / total;
        fr.mean_aj = fr.instances.iter().map(|r| r.aj).sum::<f64>() / total;
    }

    Ok((results, dump))
}

fn evaluate_instance(
    cfg: &ExperimentConfig,
    ctx: &FoldContext,
    run: u32,
    t: usize,
    dumps: DumpSpec,
) -> Result<InstanceOutcome> {
    let row = ctx.test_rows[t];
    let v_prime = &ctx.test_norm[t];
    let n = ctx.train_rows.len();

    // The classical ranking doubles as the correctness oracle for the metrics,
    // using the same tie-break as every other modality.
    let classical = classical_distances(&ctx.train_norm, v_prime)?;
    let oracle = classify(&classical, cfg.k, &ctx.train_labels)?;

    let mut statevector = Vec::new();
    let mut joint: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut distances = Vec::new();

    let (found, clamp_events): (NeighborResult, u32) = match cfg.modality {
        Modality::Classical => {
            if dumps.distances {
                distances = classical.distances.clone();
            }
            (oracle.clone(), 0)
        }
        Modality::Statevector | Modality::Simulation => {
            let encoding = cfg.encoding.expect("validated");
            let estimate = cfg.estimate.expect("validated");
            let state = build_initial_state(encoding, &ctx.train_norm, v_prime)?;
            if dumps.statevector && run == 0 {
                statevector = state.amplitudes().to_vec();
            }
            let after = apply_bell_h(state);
            let jd = if cfg.modality == Modality::Statevector {
                exact_joint(&after)
            } else {
                let k_tag = if cfg.share_counts_across_k {
                    u64::MAX
                } else {
                    cfg.k as u64
                };
                let seed =
                    derive_instance_seed(cfg.root_seed.expect("validated"), k_tag, run, ctx.fold, row);
                let shots = cfg.shots.expect("validated");
                let counts = sample_counts(&after, shots, seed);
                smooth_counts(&counts, shots, cfg.pseudocounts.expect("validated"), n)?
            };
            if dumps.joint {
                for b in 0..2 {
                    joint[b] = (0..jd.index_slots()).map(|j| jd.p(b, j)).collect();
                }
            }
            let v_sq: f64 = v_prime.iter().map(|x| x * x).sum();
            let table = estimate_distances(&jd, estimate, encoding, n, v_sq)?;
            if dumps.distances {
                distances = table.distances.clone();
            }
            let clamps = table.clamp_events;
            (classify(&table, cfg.k, &ctx.train_labels)?, clamps)
        }
    };

    let ji = jaccard_index(oracle.ranking.k_set(), found.ranking.k_set())?;
    let aj = average_jaccard(oracle.ranking.k_set(), found.ranking.k_set())?;
    let to_rows = |s: &[usize]| s.iter().map(|&j| ctx.train_rows[j]).collect::<Vec<_>>();

    Ok(InstanceOutcome {
        record: InstanceRecord {
            row,
            true_label: ctx.test_labels[t].clone(),
            predicted_label: found.predicted,
            k_set: to_rows(found.ranking.k_set()),
            correct_k_set: to_rows(oracle.ranking.k_set()),
            ji,
            aj,
            clamp_events,
        },
        statevector,
        joint,
        distances,
    })
}

fn effective_columns(cfg: &ExperimentConfig) -> (String, String, String) {
    match cfg.modality {
        Modality::Classical => (String::new(), String::new(), String::new()),
        _ => (
            cfg.encoding.expect("validated").to_string(),
            cfg.estimate.expect("validated").to_string(),
            cfg.shots.map(|s| s.to_string()).unwrap_or_default(),
        ),
    }
}

/// Writes `per_fold.csv` and `per_instance.csv` into `dir`, one row block per
/// configuration. Rows are emitted in deterministic order, so identical inputs
/// produce byte-identical files.
pub fn export_results(
    blocks: &[(ExperimentConfig, Vec<FoldResult>)],
    dir: &Path,
) -> Result<()> {
    let open = |name: &str| -> Result<csv::Writer<std::fs::File>> {
        let path = dir.join(name);
        let file = std::fs::File::create(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        Ok(csv::Writer::from_writer(file))
    };
    let csv_err = |name: &str, e: csv::Error| Error::Io {
        path: dir.join(name),
        source: std::io::Error::other(e),
    };

    let mut per_fold = open("per_fold.csv")?;
    per_fold
        .write_record([
            "modality", "encoding", "estimate", "k", "shots", "run", "fold", "accuracy",
            "mean_ji", "mean_aj",
        ])
        .map_err(|e| csv_err("per_fold.csv", e))?;

    let mut per_instance = open("per_instance.csv")?;
    per_instance
        .write_record([
            "modality", "encoding", "estimate", "k", "shots", "run", "fold", "instance",
            "true_label", "predicted_label", "k_set", "ji", "aj", "clamp_events",
        ])
        .map_err(|e| csv_err("per_instance.csv", e))?;

    for (cfg, results) in blocks {
        let (encoding, estimate, shots) = effective_columns(cfg);
        let modality = cfg.modality.to_string();
        let k = cfg.k.to_string();
        for fr in results {
            per_fold
                .write_record([
                    modality.as_str(),
                    encoding.as_str(),
                    estimate.as_str(),
                    k.as_str(),
                    shots.as_str(),
                    &fr.run.to_string(),
                    &fr.fold.to_string(),
                    &fr.accuracy.to_string(),
                    &fr.mean_ji.to_string(),
                    &fr.mean_aj.to_string(),
                ])
                .map_err(|e| csv_err("per_fold.csv", e))?;
            for rec in &fr.instances {
                let k_set = rec
                    .k_set
                    .iter()
                    .map(|r| r.to_string())
                    .collect::<Vec<_>>()
                    .join(";");
                per_instance
                    .write_record([
                        modality.as_str(),
                        encoding.as_str(),
                        estimate.as_str(),
                        k.as_str(),
                        shots.as_str(),
                        &fr.run.to_string(),
                        &fr.fold.to_string(),
                        &rec.row.to_string(),
                        &rec.true_label,
                        &rec.predicted_label,
                        &k_set,
                        &rec.ji.to_string(),
                        &rec.aj.to_string(),
                        &rec.clamp_events.to_string(),
                    ])
                    .map_err(|e| csv_err("per_instance.csv", e))?;
            }
        }
    }

    per_fold
        .flush()
        .map_err(|source| Error::Io { path: dir.join("per_fold.csv"), source })?;
    per_instance
        .flush()
        .map_err(|source| Error::Io { path: dir.join("per_instance.csv"), source })?;
    Ok(())
}
