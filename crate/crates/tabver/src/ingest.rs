//! File formats and parsing: datasets (`.tvd`), score files (`.logits`),
//! and evidence predictions (`.evd`).
//!
//! All writers are atomic (temp file in the target directory, then rename)
//! and canonical: writing the same in-memory value twice produces identical
//! bytes, and for datasets `write(load(write(d)))` is byte-stable.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    validate_dataset, BinaryLabel, CellCoord, Dataset, EvidencePrediction, Label, Statement, Table,
    Violation,
};

/// Which binary decision a score file feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    /// Neutral gate: positive class is "non-neutral".
    One,
    /// Entailment decision: positive class is "entailed".
    Two,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::One => "stage1",
            Stage::Two => "stage2",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "stage1" | "1" => Ok(Stage::One),
            "stage2" | "2" => Ok(Stage::Two),
            other => Err(format!("unknown stage '{other}' (expected stage1 or stage2)")),
        }
    }
}

/// One model run's logits for one stage, keyed by statement id.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub stage: Stage,
    pub model_id: String,
    pub scores: BTreeMap<String, f64>,
}

impl ScoreSet {
    pub fn new(stage: Stage, model_id: impl Into<String>) -> Self {
        ScoreSet {
            stage,
            model_id: model_id.into(),
            scores: BTreeMap::new(),
        }
    }

    pub fn get(&self, statement_id: &str) -> Option<f64> {
        self.scores.get(statement_id).copied()
    }
}

/// Write `bytes` to `path` atomically: the file either keeps its old
/// content or holds the new bytes in full, never a torn prefix.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

// Serialization shells pinning the on-disk key order. serde_json preserves
// struct field order, so the canonical layout lives in these definitions.

#[derive(Serialize)]
struct TableOut<'a> {
    kind: &'static str,
    id: &'a str,
    caption: &'a str,
    header: &'a [String],
    rows: &'a [Vec<String>],
}

#[derive(Serialize)]
struct StatementOut<'a> {
    kind: &'static str,
    id: &'a str,
    table_id: &'a str,
    text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    gold: Option<Label>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableIn {
    #[allow(dead_code)]
    kind: String,
    id: String,
    caption: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StatementIn {
    #[allow(dead_code)]
    kind: String,
    id: String,
    table_id: String,
    text: String,
    #[serde(default)]
    gold: Option<Label>,
}

/// Render a dataset in canonical `.tvd` form: one JSON object per line,
/// all tables sorted by id, then all statements sorted by id.
pub fn dataset_to_canonical_bytes(d: &Dataset) -> Vec<u8> {
    let mut out = Vec::new();
    for table in d.tables.values() {
        let rec = TableOut {
            kind: "table",
            id: &table.id,
            caption: &table.caption,
            header: &table.header,
            rows: &table.rows,
        };
        serde_json::to_writer(&mut out, &rec).expect("table record serializes");
        out.push(b'\n');
    }
    let mut statements: Vec<&Statement> = d.statements.iter().collect();
    statements.sort_by(|a, b| a.id.cmp(&b.id));
    for s in statements {
        let rec = StatementOut {
            kind: "statement",
            id: &s.id,
            table_id: &s.table_id,
            text: &s.text,
            gold: s.gold,
        };
        serde_json::to_writer(&mut out, &rec).expect("statement record serializes");
        out.push(b'\n');
    }
    out
}

pub fn write_dataset(path: &Path, d: &Dataset) -> Result<()> {
    write_atomic(path, &dataset_to_canonical_bytes(d))
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = match String::from_utf8(bytes) {
        Ok(t) => t,
        Err(e) => {
            let prefix = &e.as_bytes()[..e.utf8_error().valid_up_to()];
            let line = prefix.iter().filter(|&&b| b == b'\n').count() + 1;
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: "invalid UTF-8".to_string(),
            });
        }
    };
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.to_string()))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect())
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Parse a `.tvd` file without enforcing referential integrity.
///
/// Structural problems (bad JSON, unknown kinds, duplicate table ids) are
/// hard errors; semantic violations are returned alongside the dataset so
/// callers can choose to report all of them.
pub fn load_dataset_lenient(path: &Path) -> Result<(Dataset, Vec<Violation>)> {
    let mut dataset = Dataset::new();
    let mut parse_violations = Vec::new();

    for (line, text) in read_lines(path)? {
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| parse_error(path, line, format!("invalid JSON: {e}")))?;
        let kind = value
            .get("kind")
            .and_then(|k| k.as_str())
            .ok_or_else(|| parse_error(path, line, "record is missing string field 'kind'"))?;
        match kind {
            "table" => {
                let rec: TableIn = serde_json::from_value(value)
                    .map_err(|e| parse_error(path, line, format!("bad table record: {e}")))?;
                let table = Table::new(rec.id, rec.caption, rec.header, rec.rows);
                match dataset.tables.entry(table.id.clone()) {
                    Entry::Vacant(slot) => {
                        slot.insert(table);
                    }
                    Entry::Occupied(_) => parse_violations.push(Violation::DuplicateTableId {
                        table_id: table.id,
                    }),
                }
            }
            "statement" => {
                let rec: StatementIn = serde_json::from_value(value)
                    .map_err(|e| parse_error(path, line, format!("bad statement record: {e}")))?;
                dataset
                    .statements
                    .push(Statement::new(rec.id, rec.table_id, rec.text, rec.gold));
            }
            other => {
                return Err(parse_error(
                    path,
                    line,
                    format!("unknown record kind '{other}' (expected table or statement)"),
                ))
            }
        }
    }

    let mut violations = parse_violations;
    violations.extend(validate_dataset(&dataset));
    Ok((dataset, violations))
}

/// Parse a `.tvd` file and fail if any invariant is broken.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let (dataset, violations) = load_dataset_lenient(path)?;
    if violations.is_empty() {
        Ok(dataset)
    } else {
        Err(Error::Validation(violations))
    }
}

/// Shortest round-trip decimal for a logit; `f64` `Display` is exact for
/// read-back and never switches to scientific notation in our magnitude
/// range.
pub(crate) fn format_logit(x: f64) -> String {
    let mut s = x.to_string();
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

/// Write a `.logits` file: `<statement_id> <logit>` per line, sorted by id.
pub fn write_scoreset(path: &Path, scores: &ScoreSet) -> Result<()> {
    let mut out = String::new();
    for (id, logit) in &scores.scores {
        writeln!(out, "{id} {}", format_logit(*logit)).expect("string write");
    }
    write_atomic(path, out.as_bytes())
}

/// Parse a `.logits` file. The model id is taken from the file stem; the
/// caller assigns the stage since the format does not carry it.
pub fn load_scoreset(path: &Path, stage: Stage) -> Result<ScoreSet> {
    let model_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scores")
        .to_string();
    let mut set = ScoreSet::new(stage, model_id);

    for (line, text) in read_lines(path)? {
        let mut parts = text.split_whitespace();
        let (id, raw) = match (parts.next(), parts.next(), parts.next()) {
            (Some(id), Some(raw), None) => (id, raw),
            _ => {
                return Err(parse_error(
                    path,
                    line,
                    "expected exactly two fields: <statement_id> <logit>",
                ))
            }
        };
        let logit: f64 = raw
            .parse()
            .map_err(|_| parse_error(path, line, format!("'{raw}' is not a number")))?;
        if !logit.is_finite() {
            return Err(Error::NonFinite {
                path: path.to_path_buf(),
                line,
                id: id.to_string(),
            });
        }
        if set.scores.insert(id.to_string(), logit).is_some() {
            return Err(Error::DuplicateRecord {
                path: path.to_path_buf(),
                line,
                id: id.to_string(),
            });
        }
    }
    Ok(set)
}

#[derive(Serialize)]
struct EvidenceOut<'a> {
    statement_id: &'a str,
    model_id: &'a str,
    predicted_label: BinaryLabel,
    cells: Vec<[usize; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvidenceIn {
    statement_id: String,
    model_id: String,
    predicted_label: BinaryLabel,
    cells: Vec<[usize; 2]>,
}

/// Write an `.evd` file: one JSON evidence record per line, sorted by
/// statement id then model id.
pub fn write_evidence_predictions(path: &Path, preds: &[EvidencePrediction]) -> Result<()> {
    let mut sorted: Vec<&EvidencePrediction> = preds.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.statement_id, &a.model_id).cmp(&(&b.statement_id, &b.model_id))
    });
    let mut out = Vec::new();
    for p in sorted {
        let rec = EvidenceOut {
            statement_id: &p.statement_id,
            model_id: &p.model_id,
            predicted_label: p.predicted_label,
            cells: p.cells.iter().map(|c| [c.row, c.col]).collect(),
        };
        serde_json::to_writer(&mut out, &rec).expect("evidence record serializes");
        out.push(b'\n');
    }
    write_atomic(path, &out)
}

/// Parse an `.evd` file, resolving each record against `dataset`: the
/// statement must exist and every cell must lie inside its table's body.
pub fn load_evidence_predictions(path: &Path, dataset: &Dataset) -> Result<Vec<EvidencePrediction>> {
    let mut preds = Vec::new();
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();

    for (line, text) in read_lines(path)? {
        let rec: EvidenceIn = serde_json::from_str(&text)
            .map_err(|e| parse_error(path, line, format!("bad evidence record: {e}")))?;
        let statement = dataset.statement(&rec.statement_id).ok_or_else(|| {
            Error::UnknownStatement {
                id: rec.statement_id.clone(),
                context: "evidence predictions".to_string(),
            }
        })?;
        let table = dataset.table_for(statement).ok_or_else(|| {
            Error::UnknownStatement {
                id: rec.statement_id.clone(),
                context: "evidence predictions (statement has no table)".to_string(),
            }
        })?;
        let mut cells = BTreeSet::new();
        for [row, col] in rec.cells {
            let coord = CellCoord::new(row, col);
            if !coord.in_bounds(table) {
                return Err(Error::CellOutOfBounds {
                    statement_id: rec.statement_id.clone(),
                    row,
                    col,
                    rows: table.row_count(),
                    cols: table.column_count(),
                });
            }
            cells.insert(coord);
        }
        if !seen.insert((rec.statement_id.clone(), rec.model_id.clone())) {
            return Err(Error::DuplicateRecord {
                path: path.to_path_buf(),
                line,
                id: format!("{}/{}", rec.statement_id, rec.model_id),
            });
        }
        preds.push(EvidencePrediction {
            statement_id: rec.statement_id,
            model_id: rec.model_id,
            predicted_label: rec.predicted_label,
            cells,
        });
    }
    Ok(preds)
}
