//! CSV-backed labeled datasets and seeded stratified fold assignment.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Which CSV column holds the class label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    /// The last column of every row.
    Last,
    /// A 0-based column index.
    Index(usize),
}

/// An immutable labeled dataset: N feature vectors of uniform dimension plus class labels.
#[derive(Clone, Debug)]
pub struct Dataset {
    name: String,
    instances: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        instances: Vec<Vec<f64>>,
        labels: Vec<String>,
    ) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::InvalidData("dataset has no rows".into()));
        }
        if labels.len() != instances.len() {
            return Err(Error::InvalidData(format!(
                "{} instances but {} labels",
                instances.len(),
                labels.len()
            )));
        }
        let dim = instances[0].len();
        if dim == 0 {
            return Err(Error::InvalidData("dataset has no feature columns".into()));
        }
        for (i, row) in instances.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Ragged {
                    row: i + 1,
                    expected: dim,
                    found: row.len(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            instances,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of instances N.
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the constructor rejects empty datasets
    }

    /// Feature dimension d.
    pub fn dim(&self) -> usize {
        self.instances[0].len()
    }

    pub fn instance(&self, row: usize) -> &[f64] {
        &self.instances[row]
    }

    pub fn label(&self, row: usize) -> &str {
        &self.labels[row]
    }

    pub fn instances(&self) -> &[Vec<f64>] {
        &self.instances
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Distinct labels in first-appearance order.
    pub fn classes(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for label in &self.labels {
            if !seen.iter().any(|s| s == label) {
                seen.push(label);
            }
        }
        seen
    }
}

/// Loads a dataset from a CSV file. The file stem becomes the dataset name.
pub fn load_csv(path: &Path, label_column: LabelColumn, has_header: bool) -> Result<Dataset> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    load_csv_from_reader(file, &name, label_column, has_header)
}

/// Loads a dataset from any reader producing CSV text.
///
/// Feature cells must parse as finite reals; the label cell is kept as an opaque token.
/// Rows and columns in errors are 1-based, with the header row (when present) not counted.
pub fn load_csv_from_reader<R: Read>(
    reader: R,
    name: &str,
    label_column: LabelColumn,
    has_header: bool,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut instances = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;

    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: 1,
            message: e.to_string(),
        })?;

        let w = match width {
            Some(w) => {
                if record.len() != w {
                    return Err(Error::Ragged {
                        row,
                        expected: w,
                        found: record.len(),
                    });
                }
                w
            }
            None => {
                if record.len() < 2 {
                    return Err(Error::InvalidData(
                        "need at least one feature column and one label column".into(),
                    ));
                }
                width = Some(record.len());
                record.len()
            }
        };

        let label_idx = match label_column {
            LabelColumn::Last => w - 1,
            LabelColumn::Index(i) => {
                if i >= w {
                    return Err(Error::InvalidConfig(format!(
                        "label column {i} out of range for {w} columns"
                    )));
                }
                i
            }
        };

        let mut features = Vec::with_capacity(w - 1);
        for (c, cell) in record.iter().enumerate() {
            if c == label_idx {
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: c + 1,
                message: format!("expected a real number, found {cell:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: c + 1,
                    message: format!("expected a finite value, found {cell:?}"),
                });
            }
            features.push(value);
        }
        instances.push(features);
        labels.push(record[label_idx].to_string());
    }

    Dataset::new(name, instances, labels)
}

/// A complete assignment of dataset rows to cross-validation folds.
#[derive(Clone, Debug)]
pub struct FoldSplit {
    assignments: Vec<usize>,
    folds: usize,
    seed: u64,
}

impl FoldSplit {
    /// Fold index per dataset row.
    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Rows held out for testing by the given fold, ascending.
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&r| self.assignments[r] == fold)
            .collect()
    }

    /// Rows available for training in the given fold, ascending.
    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&r| self.assignments[r] != fold)
            .collect()
    }

    /// Writes the assignment as a two-column CSV (row index, fold).
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io_err = |e: csv::Error| Error::InvalidData(format!("fold export failed: {e}"));
        w.write_record(["row_index", "fold"]).map_err(io_err)?;
        for (row, fold) in self.assignments.iter().enumerate() {
            w.write_record([row.to_string(), fold.to_string()])
                .map_err(io_err)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidData(format!("fold export failed: {e}")))?;
        Ok(())
    }
}

/// Assigns every row to one of `folds` folds, keeping per-class counts within one of
/// each other across folds.
///
/// Rows are grouped by label, each group is shuffled with a ChaCha8 generator seeded by
/// `seed`, and the groups are dealt round-robin. The dealing cursor carries over from one
/// class to the next so overall fold sizes also stay within one of each other.
pub fn stratified_folds(ds: &Dataset, folds: usize, seed: u64) -> Result<FoldSplit> {
    if folds < 2 {
        return Err(Error::InvalidConfig(format!(
            "folds must be at least 2, got {folds}"
        )));
    }
    if folds > ds.len() {
        return Err(Error::InvalidConfig(format!(
            "{} folds requested but the dataset has only {} rows",
            folds,
            ds.len()
        )));
    }

    // Group rows by label in first-appearance order.
    let mut groups: Vec<(&str, Vec<usize>)> = Vec::new();
    for row in 0..ds.len() {
        let label = ds.label(row);
        match groups.iter_mut().find(|(l, _)| *l == label) {
            Some((_, rows)) => rows.push(row),
            None => groups.push((label, vec![row])),
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0usize; ds.len()];
    let mut cursor = 0usize;
    for (_, mut rows) in groups {
        rows.shuffle(&mut rng);
        for row in rows {
            assignments[row] = cursor % folds;
            cursor += 1;
        }
    }

    Ok(FoldSplit {
        assignments,
        folds,
        seed,
    })
}
