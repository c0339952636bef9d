//! Argument resolution and the `run` orchestration behind the qknn binary.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use qknn::dataset::{load_csv, stratified_folds, Dataset, LabelColumn};
use qknn::encode::EncodingKind;
use qknn::estimate::DistanceEstimateKind;
use qknn::harness::{
    export_results, run_experiment_collecting, DumpSpec, ExperimentConfig, FoldResult, Modality,
    DEFAULT_FOLDS, DEFAULT_PSEUDOCOUNTS, DEFAULT_RUNS, DEFAULT_SHOTS,
};
use qknn::{Error, Result};

use crate::config::parse_config_file;

#[derive(Parser)]
#[command(name = "qknn", version, about = "Cross-validated quantum k-NN experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a cross-validated experiment over a CSV dataset.
    Run(RunArgs),
}

#[derive(Args, Clone, Debug, Default)]
struct RunArgs {
    /// CSV dataset to classify.
    #[arg(long, value_name = "PATH")]
    dataset: Option<PathBuf>,
    /// key=value configuration file; command-line flags take precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// classical, statevector, or simulation.
    #[arg(long)]
    modality: Option<String>,
    /// extension or translation (ignored by the classical modality).
    #[arg(long)]
    encoding: Option<String>,
    /// avg or diff (ignored by the classical modality).
    #[arg(long)]
    estimate: Option<String>,
    /// Neighbor count.
    #[arg(long)]
    k: Option<usize>,
    /// Cross-validation fold count.
    #[arg(long)]
    folds: Option<usize>,
    /// Seed for the stratified fold shuffle.
    #[arg(long, value_name = "SEED")]
    fold_seed: Option<u64>,
    /// Measurement shots per circuit evaluation (simulation only).
    #[arg(long)]
    shots: Option<u64>,
    /// Comma-separated shot budgets; one result block per value (simulation only).
    #[arg(long, value_name = "LIST", conflicts_with = "shots")]
    grid_shots: Option<String>,
    /// Laplace pseudocounts per significant cell (simulation only).
    #[arg(long)]
    pseudocounts: Option<u64>,
    /// Repeated sampling runs (simulation only).
    #[arg(long)]
    runs: Option<u32>,
    /// Root seed for measurement sampling (simulation only).
    #[arg(long, value_name = "SEED")]
    root_seed: Option<u64>,
    /// Draw one measurement stream per instance instead of one per (k, instance).
    #[arg(long)]
    share_counts_across_k: bool,
    /// Output directory; must be new or empty unless --force.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Replace an existing output directory.
    #[arg(long)]
    force: bool,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    threads: Option<usize>,
    /// Label column: "last" or a zero-based column index.
    #[arg(long, value_name = "COL")]
    label_column: Option<String>,
    /// Treat the first CSV row as data instead of a header.
    #[arg(long)]
    no_header: bool,
    /// Dump prepared initial statevectors to dumps/statevectors.csv.
    #[arg(long)]
    dump_statevector: bool,
    /// Dump joint distributions to dumps/joint_distributions.csv.
    #[arg(long)]
    dump_joint: bool,
    /// Dump distance tables to dumps/distance_tables.csv.
    #[arg(long)]
    dump_distances: bool,
}

/// Exit status: 0 success, 1 usage error, 2 data error, 3 internal error.
pub fn run_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(args) => run_command(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) => 1,
        Error::Io { .. } | Error::Parse { .. } | Error::Ragged { .. } | Error::InvalidData(_) => 2,
        Error::DimensionMismatch { .. } | Error::Internal(_) => 3,
    }
}

fn set_if_unset<T: std::str::FromStr>(
    slot: &mut Option<T>,
    key: &str,
    value: &str,
) -> Result<()>
where
    T::Err: std::fmt::Display,
{
    if slot.is_none() {
        let parsed = value.parse().map_err(|e| {
            Error::InvalidConfig(format!("configuration key {key:?}: invalid value {value:?}: {e}"))
        })?;
        *slot = Some(parsed);
    }
    Ok(())
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::InvalidConfig(format!(
            "configuration key {key:?}: expected true or false, got {other:?}"
        ))),
    }
}

/// Fills in every argument the command line left unset. Boolean keys can only turn
/// flags on, mirroring flag semantics.
fn apply_config_entries(args: &mut RunArgs, entries: &[(String, String)]) -> Result<()> {
    for (key, value) in entries {
        match key.as_str() {
            "dataset" => set_if_unset(&mut args.dataset, key, value)?,
            "modality" => set_if_unset(&mut args.modality, key, value)?,
            "encoding" => set_if_unset(&mut args.encoding, key, value)?,
            "estimate" => set_if_unset(&mut args.estimate, key, value)?,
            "k" => set_if_unset(&mut args.k, key, value)?,
            "folds" => set_if_unset(&mut args.folds, key, value)?,
            "fold-seed" => set_if_unset(&mut args.fold_seed, key, value)?,
            "shots" => set_if_unset(&mut args.shots, key, value)?,
            "grid-shots" => set_if_unset(&mut args.grid_shots, key, value)?,
            "pseudocounts" => set_if_unset(&mut args.pseudocounts, key, value)?,
            "runs" => set_if_unset(&mut args.runs, key, value)?,
            "root-seed" => set_if_unset(&mut args.root_seed, key, value)?,
            "share-counts-across-k" => args.share_counts_across_k |= parse_bool(key, value)?,
            "out" => set_if_unset(&mut args.out, key, value)?,
            "force" => args.force |= parse_bool(key, value)?,
            "threads" => set_if_unset(&mut args.threads, key, value)?,
            "label-column" => set_if_unset(&mut args.label_column, key, value)?,
            "no-header" => args.no_header |= parse_bool(key, value)?,
            "dump-statevector" => args.dump_statevector |= parse_bool(key, value)?,
            "dump-joint" => args.dump_joint |= parse_bool(key, value)?,
            "dump-distances" => args.dump_distances |= parse_bool(key, value)?,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown configuration key {other:?}"
                )))
            }
        }
    }
    Ok(())
}

#[derive(Debug)]
struct Resolved {
    dataset: PathBuf,
    modality: Modality,
    encoding: Option<EncodingKind>,
    estimate: Option<DistanceEstimateKind>,
    k: usize,
    folds: usize,
    fold_seed: u64,
    /// One entry per result block; None for modalities without sampling.
    shots_grid: Vec<Option<u64>>,
    grid_requested: bool,
    pseudocounts: Option<u64>,
    runs: Option<u32>,
    root_seed: Option<u64>,
    share_counts_across_k: bool,
    out: PathBuf,
    force: bool,
    threads: Option<usize>,
    label_column: LabelColumn,
    has_header: bool,
    dumps: DumpSpec,
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::InvalidConfig(format!("missing required option --{flag}")))
}

fn resolve(args: RunArgs) -> Result<Resolved> {
    let dataset = require(args.dataset, "dataset")?;
    let out = require(args.out, "out")?;
    let k = require(args.k, "k")?;
    let fold_seed = require(args.fold_seed, "fold-seed")?;
    let modality: Modality = require(args.modality, "modality")?.parse()?;

    let label_column = match args.label_column.as_deref() {
        None | Some("last") => LabelColumn::Last,
        Some(s) => LabelColumn::Index(s.parse().map_err(|_| {
            Error::InvalidConfig(format!(
                "label column must be \"last\" or a zero-based index, got {s:?}"
            ))
        })?),
    };

    let (encoding, estimate) = match modality {
        // The classical modality runs no circuit, so these are ignored if present.
        Modality::Classical => (None, None),
        _ => (
            args.encoding.as_deref().map(str::parse).transpose()?,
            args.estimate.as_deref().map(str::parse).transpose()?,
        ),
    };

    if args.shots.is_some() && args.grid_shots.is_some() {
        return Err(Error::InvalidConfig(
            "set only one of shots and grid-shots".into(),
        ));
    }

    let grid_requested = args.grid_shots.is_some();
    let (shots_grid, pseudocounts, runs, root_seed) = match modality {
        Modality::Simulation => {
            let shots_grid = match args.grid_shots.as_deref() {
                Some(list) => {
                    let mut grid = Vec::new();
                    for part in list.split(',') {
                        let shots: u64 = part.trim().parse().map_err(|_| {
                            Error::InvalidConfig(format!(
                                "grid-shots: invalid shot count {:?}",
                                part.trim()
                            ))
                        })?;
                        if grid.contains(&Some(shots)) {
                            return Err(Error::InvalidConfig(format!(
                                "grid-shots: duplicate shot count {shots}"
                            )));
                        }
                        grid.push(Some(shots));
                    }
                    grid
                }
                None => vec![Some(args.shots.unwrap_or(DEFAULT_SHOTS))],
            };
            (
                shots_grid,
                Some(args.pseudocounts.unwrap_or(DEFAULT_PSEUDOCOUNTS)),
                Some(args.runs.unwrap_or(DEFAULT_RUNS)),
                Some(require(args.root_seed, "root-seed")?),
            )
        }
        _ => {
            for (name, present) in [
                ("shots", args.shots.is_some()),
                ("grid-shots", args.grid_shots.is_some()),
                ("pseudocounts", args.pseudocounts.is_some()),
                ("runs", args.runs.is_some()),
                ("root-seed", args.root_seed.is_some()),
            ] {
                if present {
                    return Err(Error::InvalidConfig(format!(
                        "--{name} only applies to the simulation modality"
                    )));
                }
            }
            (vec![None], None, None, None)
        }
    };

    Ok(Resolved {
        dataset,
        modality,
        encoding,
        estimate,
        k,
        folds: args.folds.unwrap_or(DEFAULT_FOLDS),
        fold_seed,
        shots_grid,
        grid_requested,
        pseudocounts,
        runs,
        root_seed,
        share_counts_across_k: args.share_counts_across_k,
        out,
        force: args.force,
        threads: args.threads,
        label_column,
        has_header: !args.no_header,
        dumps: DumpSpec {
            statevector: args.dump_statevector,
            joint: args.dump_joint,
            distances: args.dump_distances,
        },
    })
}

impl Resolved {
    fn experiment_config(&self, shots: Option<u64>) -> ExperimentConfig {
        ExperimentConfig {
            modality: self.modality,
            encoding: self.encoding,
            estimate: self.estimate,
            k: self.k,
            folds: self.folds,
            fold_seed: self.fold_seed,
            shots,
            pseudocounts: self.pseudocounts,
            runs: self.runs,
            root_seed: self.root_seed,
            share_counts_across_k: self.share_counts_across_k,
        }
    }

    /// The effective settings, echoed in a fixed order.
    fn echo(&self) -> String {
        let mut lines = Vec::new();
        let mut push = |key: &str, value: String| lines.push(format!("{key}={value}"));
        push("dataset", self.dataset.display().to_string());
        push("modality", self.modality.to_string());
        if let Some(encoding) = self.encoding {
            push("encoding", encoding.to_string());
        }
        if let Some(estimate) = self.estimate {
            push("estimate", estimate.to_string());
        }
        push("k", self.k.to_string());
        push("folds", self.folds.to_string());
        push("fold-seed", self.fold_seed.to_string());
        if self.grid_requested {
            let list = self
                .shots_grid
                .iter()
                .map(|s| s.expect("grid implies simulation").to_string())
                .collect::<Vec<_>>()
                .join(",");
            push("grid-shots", list);
        } else if let Some(Some(shots)) = self.shots_grid.first() {
            push("shots", shots.to_string());
        }
        if let Some(p) = self.pseudocounts {
            push("pseudocounts", p.to_string());
        }
        if let Some(r) = self.runs {
            push("runs", r.to_string());
        }
        if let Some(s) = self.root_seed {
            push("root-seed", s.to_string());
        }
        if self.modality == Modality::Simulation {
            push(
                "share-counts-across-k",
                self.share_counts_across_k.to_string(),
            );
        }
        push(
            "label-column",
            match self.label_column {
                LabelColumn::Last => "last".to_string(),
                LabelColumn::Index(i) => i.to_string(),
            },
        );
        push("no-header", (!self.has_header).to_string());
        push("dump-statevector", self.dumps.statevector.to_string());
        push("dump-joint", self.dumps.joint.to_string());
        push("dump-distances", self.dumps.distances.to_string());
        lines.join("\n") + "\n"
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_io_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(source),
    }
}

fn run_command(mut args: RunArgs) -> Result<()> {
    if let Some(path) = args.config.clone() {
        let text = std::fs::read_to_string(&path).map_err(|e| {
            Error::InvalidConfig(format!(
                "cannot read configuration file {}: {e}",
                path.display()
            ))
        })?;
        let entries = parse_config_file(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        apply_config_entries(&mut args, &entries)?;
    }
    let resolved = resolve(args)?;
    resolved.experiment_config(resolved.shots_grid[0]).validate()?;

    let out = resolved.out.clone();
    if out.exists() {
        let occupied = out
            .read_dir()
            .map_err(io_err(&out))?
            .next()
            .is_some();
        if occupied && !resolved.force {
            return Err(Error::InvalidConfig(format!(
                "output directory {} is not empty (use --force to replace it)",
                out.display()
            )));
        }
    }

    let ds = load_csv(&resolved.dataset, resolved.label_column, resolved.has_header)?;

    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&parent).map_err(io_err(&parent))?;
    let staging = tempfile::Builder::new()
        .prefix(".qknn-staging-")
        .tempdir_in(&parent)
        .map_err(io_err(&parent))?;

    let body = || -> Result<()> { execute(&resolved, &ds, staging.path()) };
    match resolved.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot build a {threads}-thread pool: {e}")))?
            .install(body)?,
        None => body()?,
    }

    // The staged directory replaces the destination in one rename, so a failed or
    // interrupted run never leaves a partial output directory behind.
    if out.exists() {
        std::fs::remove_dir_all(&out).map_err(io_err(&out))?;
    }
    let staged = staging.keep();
    if let Err(e) = std::fs::rename(&staged, &out) {
        let _ = std::fs::remove_dir_all(&staged);
        return Err(io_err(&out)(e));
    }
    Ok(())
}

fn execute(resolved: &Resolved, ds: &Dataset, dir: &Path) -> Result<()> {
    let config_path = dir.join("run_config.txt");
    std::fs::write(&config_path, resolved.echo()).map_err(io_err(&config_path))?;

    let split = stratified_folds(ds, resolved.folds, resolved.fold_seed)?;
    let folds_path = dir.join("folds.csv");
    let folds_file = std::fs::File::create(&folds_path).map_err(io_err(&folds_path))?;
    split.write_csv(folds_file)?;

    let mut blocks: Vec<(ExperimentConfig, Vec<FoldResult>)> = Vec::new();
    let mut dumps_by_block = Vec::new();
    for (index, &shots) in resolved.shots_grid.iter().enumerate() {
        let cfg = resolved.experiment_config(shots);
        // Initial states do not depend on the shot budget, so only the first block
        // collects them.
        let spec = DumpSpec {
            statevector: resolved.dumps.statevector && index == 0,
            ..resolved.dumps
        };
        let (results, dump) = run_experiment_collecting(&cfg, ds, spec)?;
        for fr in &results {
            let prefix = match shots {
                Some(s) => format!("shots={s} "),
                None => String::new(),
            };
            println!(
                "{prefix}run={} fold={} accuracy={:.4} mean_ji={:.4} mean_aj={:.4}",
                fr.run, fr.fold, fr.accuracy, fr.mean_ji, fr.mean_aj
            );
        }
        blocks.push((cfg, results));
        dumps_by_block.push((shots, dump));
    }

    export_results(&blocks, dir)?;

    if resolved.dumps.statevector || resolved.dumps.joint || resolved.dumps.distances {
        let dumps_dir = dir.join("dumps");
        std::fs::create_dir(&dumps_dir).map_err(io_err(&dumps_dir))?;
        write_dumps(resolved, &dumps_by_block, &dumps_dir)?;
    }
    Ok(())
}

fn write_dumps(
    resolved: &Resolved,
    dumps_by_block: &[(Option<u64>, qknn::harness::DumpData)],
    dir: &Path,
) -> Result<()> {
    if resolved.dumps.statevector {
        let path = dir.join("statevectors.csv");
        let file = std::fs::File::create(&path).map_err(io_err(&path))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["fold", "row", "basis_index", "amplitude"])
            .map_err(csv_io_err(&path))?;
        for (_, dump) in dumps_by_block {
            for r in &dump.statevector_rows {
                w.write_record([
                    r.fold.to_string(),
                    r.row.to_string(),
                    r.basis_index.to_string(),
                    r.amplitude.to_string(),
                ])
                .map_err(csv_io_err(&path))?;
            }
        }
        w.flush().map_err(io_err(&path))?;
    }

    if resolved.dumps.joint {
        let path = dir.join("joint_distributions.csv");
        let file = std::fs::File::create(&path).map_err(io_err(&path))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["shots", "run", "fold", "row", "b", "j", "probability"])
            .map_err(csv_io_err(&path))?;
        for (shots, dump) in dumps_by_block {
            let shots = shots.map(|s| s.to_string()).unwrap_or_default();
            for r in &dump.joint_rows {
                w.write_record([
                    shots.clone(),
                    r.run.to_string(),
                    r.fold.to_string(),
                    r.row.to_string(),
                    r.b.to_string(),
                    r.j.to_string(),
                    r.probability.to_string(),
                ])
                .map_err(csv_io_err(&path))?;
            }
        }
        w.flush().map_err(io_err(&path))?;
    }

    if resolved.dumps.distances {
        let path = dir.join("distance_tables.csv");
        let file = std::fs::File::create(&path).map_err(io_err(&path))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["shots", "run", "fold", "row", "train_row", "distance"])
            .map_err(csv_io_err(&path))?;
        for (shots, dump) in dumps_by_block {
            let shots = shots.map(|s| s.to_string()).unwrap_or_default();
            for r in &dump.distance_rows {
                w.write_record([
                    shots.clone(),
                    r.run.to_string(),
                    r.fold.to_string(),
                    r.row.to_string(),
                    r.train_row.to_string(),
                    r.distance.to_string(),
                ])
                .map_err(csv_io_err(&path))?;
            }
        }
        w.flush().map_err(io_err(&path))?;
    }
    Ok(())
}
