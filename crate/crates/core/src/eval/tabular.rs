use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{EvalError, Evaluator};
use crate::space::{Architecture, EncodedArch, Space};

const HEADER: &str = "encoding,accuracy";

/// Precomputed accuracies keyed by encoding, loaded from a CSV file with the
/// header `encoding,accuracy`.
#[derive(Debug, Clone)]
pub struct TabularBenchmark {
    space: Space,
    table: HashMap<EncodedArch, f64>,
    best: (EncodedArch, f64),
    source: String,
}

impl TabularBenchmark {
    pub fn load(path: impl AsRef<Path>, space: Space) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, space, path.display().to_string())
    }

    /// Parses CSV text. Line numbers in errors are 1-based and count the
    /// header.
    pub fn parse(text: &str, space: Space, source: impl Into<String>) -> Result<Self, EvalError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
        match lines.next() {
            Some((_, HEADER)) => {}
            Some((line, other)) => {
                return Err(EvalError::Parse {
                    line,
                    message: format!("expected header {HEADER:?}, found {other:?}"),
                })
            }
            None => return Err(EvalError::EmptyTable),
        }
        let mut table = HashMap::new();
        let mut best: Option<(EncodedArch, f64)> = None;
        for (line, row) in lines {
            if row.trim().is_empty() {
                continue;
            }
            let (key, value) = row.split_once(',').ok_or_else(|| EvalError::Parse {
                line,
                message: "expected two comma-separated fields".into(),
            })?;
            let accuracy: f64 = value.trim().parse().map_err(|_| EvalError::Parse {
                line,
                message: format!("bad accuracy {value:?}"),
            })?;
            if !(0.0..=1.0).contains(&accuracy) {
                return Err(EvalError::AccuracyOutOfRange { line, value: accuracy });
            }
            let encoding: EncodedArch = key.trim().parse().map_err(|e: crate::space::SpaceError| {
                EvalError::InvalidEncoding {
                    line,
                    message: e.to_string(),
                }
            })?;
            let arch = space.decode(&encoding).map_err(|e| EvalError::InvalidEncoding {
                line,
                message: e.to_string(),
            })?;
            if let Some(v) = space.validate(&arch).first() {
                return Err(EvalError::InvalidEncoding {
                    line,
                    message: v.to_string(),
                });
            }
            if table.contains_key(&encoding) {
                return Err(EvalError::DuplicateKey {
                    line,
                    key: encoding.to_text(),
                });
            }
            if best.as_ref().map_or(true, |(_, b)| accuracy > *b) {
                best = Some((encoding.clone(), accuracy));
            }
            table.insert(encoding, accuracy);
        }
        let best = best.ok_or(EvalError::EmptyTable)?;
        Ok(Self {
            space,
            table,
            best,
            source: source.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Highest-accuracy entry; the first such row on ties.
    pub fn best(&self) -> (&EncodedArch, f64) {
        (&self.best.0, self.best.1)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn lookup(&self, encoding: &EncodedArch) -> Result<f64, EvalError> {
        self.table
            .get(encoding)
            .copied()
            .ok_or_else(|| EvalError::NotInTable(encoding.to_text()))
    }

    /// Rows sorted by encoding.
    pub fn rows(&self) -> Vec<(EncodedArch, f64)> {
        let mut rows: Vec<_> = self.table.iter().map(|(k, v)| (k.clone(), *v)).collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        rows
    }
}

impl Evaluator for TabularBenchmark {
    fn space(&self) -> &Space {
        &self.space
    }

    fn accuracy(&self, arch: &Architecture) -> Result<f64, EvalError> {
        self.lookup(&self.space.encode(arch))
    }

    fn optimum(&self) -> Result<Option<(EncodedArch, f64)>, EvalError> {
        Ok(Some(self.best.clone()))
    }

    fn accuracy_of(&self, encoding: &EncodedArch) -> Result<f64, EvalError> {
        self.lookup(encoding)
    }
}

/// Writes rows in the tabular CSV format with six-decimal accuracies.
pub fn write_tabular<W: Write>(
    mut out: W,
    rows: impl IntoIterator<Item = (EncodedArch, f64)>,
) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for (enc, acc) in rows {
        writeln!(out, "{enc},{acc:.6}")?;
    }
    Ok(())
}

/// Evaluates every architecture with `evaluator` and writes the table to
/// `path`; returns the number of rows.
pub fn export_tabular(
    path: impl AsRef<Path>,
    evaluator: &dyn Evaluator,
    archs: impl IntoIterator<Item = Architecture>,
) -> Result<usize, EvalError> {
    let path = path.as_ref();
    let io_err = |source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut rows = Vec::new();
    for arch in archs {
        let acc = evaluator.accuracy(&arch)?;
        rows.push((evaluator.space().encode(&arch), acc));
    }
    let count = rows.len();
    let file = fs::File::create(path).map_err(io_err)?;
    let mut buf = std::io::BufWriter::new(file);
    write_tabular(&mut buf, rows).map_err(io_err)?;
    buf.flush().map_err(io_err)?;
    Ok(count)
}
