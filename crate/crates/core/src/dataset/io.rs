//! Text formats.
//!
//! Feature file:
//! ```text
//! EMB v1 m=<int>
//! <id>,<train|test>,<class-id|_>,<v1>,...,<vm>
//! ```
//! Semantic file:
//! ```text
//! SEM v1 d=<int>
//! <class-id>,<name>,<seen|unseen>,<v1>,...,<vd>
//! ```
//! Reals are written in shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{ClassId, Dataset, EmbeddingRecord, SemanticClass, SemanticTable, Split};
use crate::error::{Error, Result};

const FEATURE_MAGIC: &str = "EMB";
const SEMANTIC_MAGIC: &str = "SEM";
const VERSION: &str = "v1";

/// Reads and validates a dataset, then rescales its features into the
/// tanh-compatible range.
pub fn load_dataset(features: &Path, semantics: &Path) -> Result<Dataset> {
    let sem_text = fs::read_to_string(semantics).map_err(|e| Error::io(semantics, e))?;
    let table = parse_semantics(&sem_text, &semantics.display().to_string())?;
    let feat_text = fs::read_to_string(features).map_err(|e| Error::io(features, e))?;
    let (m, records) = parse_features(&feat_text, &features.display().to_string(), &table)?;
    let mut ds = Dataset::new(records, table, m)?;
    ds.normalize_features();
    Ok(ds)
}

pub fn save_dataset(dataset: &Dataset, features: &Path, semantics: &Path) -> Result<()> {
    let feat = write_features(dataset)?;
    let sem = write_semantics(dataset.semantics())?;
    fs::write(features, feat).map_err(|e| Error::io(features, e))?;
    fs::write(semantics, sem).map_err(|e| Error::io(semantics, e))?;
    Ok(())
}

pub fn write_features(dataset: &Dataset) -> Result<String> {
    let mut out = format!("{FEATURE_MAGIC} {VERSION} m={}\n", dataset.feature_dim());
    for r in dataset.records() {
        check_token(&r.id, "record id")?;
        let split = match r.split {
            Split::SeenTrain => "train",
            Split::UnlabeledTest => "test",
        };
        out.push_str(&r.id);
        out.push(',');
        out.push_str(split);
        out.push(',');
        match r.label {
            Some(id) => write!(out, "{id}").unwrap(),
            None => out.push('_'),
        }
        push_reals(&mut out, &r.feature);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_semantics(table: &SemanticTable) -> Result<String> {
    let mut out = format!("{SEMANTIC_MAGIC} {VERSION} d={}\n", table.dim());
    for c in table.classes() {
        check_token(&c.name, "class name")?;
        write!(
            out,
            "{},{},{}",
            c.id,
            c.name,
            if c.seen { "seen" } else { "unseen" }
        )
        .unwrap();
        push_reals(&mut out, &c.vector);
        out.push('\n');
    }
    Ok(out)
}

fn push_reals(out: &mut String, values: &[f64]) {
    for v in values {
        write!(out, ",{v:?}").unwrap();
    }
}

fn check_token(s: &str, what: &str) -> Result<()> {
    if s.is_empty() || s.contains([',', '\n', '\r']) {
        Err(Error::Invalid(format!(
            "{what} {s:?} is empty or contains a separator"
        )))
    } else {
        Ok(())
    }
}

/// Parses `<MAGIC> v1 <key>=<int>`.
fn parse_header(line: Option<&str>, magic: &str, key: &str, path: &str) -> Result<usize> {
    let parse_err = |message: String| Error::Parse {
        path: path.to_string(),
        line: 1,
        message,
    };
    let line = line.ok_or_else(|| parse_err("missing header".into()))?;
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != magic {
        return Err(parse_err(format!("malformed header {line:?}")));
    }
    if parts[1] != VERSION {
        return Err(Error::Version(format!("{path}: {magic} {}", parts[1])));
    }
    parts[2]
        .strip_prefix(key)
        .and_then(|s| s.strip_prefix('='))
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| parse_err(format!("malformed dimension field {:?}", parts[2])))
}

fn parse_reals(fields: &[&str], expected: usize, path: &str, line: usize) -> Result<Vec<f64>> {
    if fields.len() != expected {
        return Err(Error::RowDimension {
            path: path.to_string(),
            line,
            expected,
            actual: fields.len(),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    path: path.to_string(),
                    line,
                    message: format!("bad real {f:?}"),
                })
        })
        .collect()
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.is_empty())
}

pub(crate) fn parse_semantics(text: &str, path: &str) -> Result<SemanticTable> {
    let d = parse_header(text.lines().next(), SEMANTIC_MAGIC, "d", path)?;
    let mut classes = Vec::new();
    let mut ids = std::collections::HashSet::new();
    for (line, row) in data_lines(text) {
        let fields: Vec<&str> = row.split(',').collect();
        let bad = |message: String| Error::Parse {
            path: path.to_string(),
            line,
            message,
        };
        if fields.len() < 3 {
            return Err(bad("expected <class-id>,<name>,<seen|unseen>,...".into()));
        }
        let id = fields[0]
            .parse::<u32>()
            .map_err(|_| bad(format!("bad class id {:?}", fields[0])))?;
        let seen = match fields[2] {
            "seen" => true,
            "unseen" => false,
            other => return Err(bad(format!("bad partition {other:?}"))),
        };
        if !ids.insert(id) {
            return Err(Error::DuplicateClass(id));
        }
        classes.push(SemanticClass {
            id: ClassId(id),
            name: fields[1].to_string(),
            vector: parse_reals(&fields[3..], d, path, line)?,
            seen,
        });
    }
    SemanticTable::new(d, classes)
}

pub(crate) fn parse_features(
    text: &str,
    path: &str,
    table: &SemanticTable,
) -> Result<(usize, Vec<EmbeddingRecord>)> {
    let m = parse_header(text.lines().next(), FEATURE_MAGIC, "m", path)?;
    let mut records = Vec::new();
    for (line, row) in data_lines(text) {
        let fields: Vec<&str> = row.split(',').collect();
        let bad = |message: String| Error::Parse {
            path: path.to_string(),
            line,
            message,
        };
        if fields.len() < 3 {
            return Err(bad("expected <id>,<train|test>,<label|_>,...".into()));
        }
        let split = match fields[1] {
            "train" => Split::SeenTrain,
            "test" => Split::UnlabeledTest,
            other => return Err(bad(format!("bad split {other:?}"))),
        };
        let label = match fields[2] {
            "_" => None,
            s => {
                let id = s
                    .parse::<u32>()
                    .map_err(|_| bad(format!("bad label {s:?}")))?;
                let Some(idx) = table.index_of(ClassId(id)) else {
                    return Err(Error::UnknownClass {
                        path: path.to_string(),
                        line,
                        class: id,
                    });
                };
                if split == Split::SeenTrain && !table.class(idx).seen {
                    return Err(bad(format!(
                        "training record labeled with unseen class {id}"
                    )));
                }
                Some(ClassId(id))
            }
        };
        if split == Split::SeenTrain && label.is_none() {
            return Err(bad("training record without a label".into()));
        }
        records.push(EmbeddingRecord {
            id: fields[0].to_string(),
            feature: parse_reals(&fields[3..], m, path, line)?,
            label,
            split,
        });
    }
    Ok((m, records))
}
