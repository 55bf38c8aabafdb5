//! Core domain types shared by every other module: labels, tables,
//! statements, datasets, and evidence cells, plus dataset validation.
//!
//! All types are immutable values after construction; nothing here holds
//! interior mutability, so everything is safe to share across threads.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Three-class verdict for a statement against its table.
///
/// Serializes to `"entailed"`, `"refuted"`, `"neutral"`; parsing is
/// case-insensitive. "Neutral" and "unknown" are one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Entailed,
    Refuted,
    Neutral,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Entailed, Label::Refuted, Label::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Entailed => "entailed",
            Label::Refuted => "refuted",
            Label::Neutral => "neutral",
        }
    }

    pub fn is_neutral(self) -> bool {
        self == Label::Neutral
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "entailed" => Ok(Label::Entailed),
            "refuted" => Ok(Label::Refuted),
            "neutral" => Ok(Label::Neutral),
            other => Err(format!(
                "unknown label '{other}' (expected entailed, refuted or neutral)"
            )),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Binary entailment decision emitted by evidence models; never neutral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinaryLabel {
    Entailed,
    Refuted,
}

impl BinaryLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BinaryLabel::Entailed => "entailed",
            BinaryLabel::Refuted => "refuted",
        }
    }
}

impl From<BinaryLabel> for Label {
    fn from(b: BinaryLabel) -> Label {
        match b {
            BinaryLabel::Entailed => Label::Entailed,
            BinaryLabel::Refuted => Label::Refuted,
        }
    }
}

impl TryFrom<Label> for BinaryLabel {
    type Error = String;

    fn try_from(l: Label) -> Result<Self, Self::Error> {
        match l {
            Label::Entailed => Ok(BinaryLabel::Entailed),
            Label::Refuted => Ok(BinaryLabel::Refuted),
            Label::Neutral => Err("neutral is not a binary entailment label".to_string()),
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BinaryLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "entailed" => Ok(BinaryLabel::Entailed),
            "refuted" => Ok(BinaryLabel::Refuted),
            other => Err(format!(
                "unknown binary label '{other}' (expected entailed or refuted)"
            )),
        }
    }
}

impl Serialize for BinaryLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for BinaryLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// The entailment premise: a rectangular grid of opaque string cells with
/// a caption and a mandatory header row. Sources without headers must
/// synthesize `col0..colN` names at ingest so columns keep a stable
/// identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub id: String,
    pub caption: String,
    pub header: Vec<String>,
    /// Body rows only; the header is not stored as a row.
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(
        id: impl Into<String>,
        caption: impl Into<String>,
        header: Vec<String>,
        rows: Vec<Vec<String>>,
    ) -> Self {
        Table {
            id: id.into(),
            caption: caption.into(),
            header,
            rows,
        }
    }

    pub fn column_count(&self) -> usize {
        self.header.len()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }
}

/// A natural-language claim bound to a table, optionally gold-labeled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub id: String,
    pub table_id: String,
    pub text: String,
    pub gold: Option<Label>,
}

impl Statement {
    pub fn new(
        id: impl Into<String>,
        table_id: impl Into<String>,
        text: impl Into<String>,
        gold: Option<Label>,
    ) -> Self {
        Statement {
            id: id.into(),
            table_id: table_id.into(),
            text: text.into(),
            gold,
        }
    }
}

/// Tables keyed by id plus an ordered statement list.
///
/// Construction does not validate; run [`validate_dataset`] (or load
/// through ingest, which does) before trusting the invariants.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub tables: BTreeMap<String, Table>,
    pub statements: Vec<Statement>,
}

impl Dataset {
    pub fn new() -> Self {
        Dataset::default()
    }

    pub fn from_parts(tables: Vec<Table>, statements: Vec<Statement>) -> Self {
        let tables = tables.into_iter().map(|t| (t.id.clone(), t)).collect();
        Dataset { tables, statements }
    }

    pub fn table(&self, id: &str) -> Option<&Table> {
        self.tables.get(id)
    }

    pub fn statement(&self, id: &str) -> Option<&Statement> {
        self.statements.iter().find(|s| s.id == id)
    }

    /// Table backing the given statement, if both sides resolve.
    pub fn table_for(&self, statement: &Statement) -> Option<&Table> {
        self.tables.get(&statement.table_id)
    }
}

/// 0-based position of a body cell; the header row is excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellCoord {
    pub row: usize,
    pub col: usize,
}

impl CellCoord {
    pub fn new(row: usize, col: usize) -> Self {
        CellCoord { row, col }
    }

    pub fn in_bounds(self, table: &Table) -> bool {
        self.row < table.row_count() && self.col < table.column_count()
    }
}

/// One evidence model's output for one statement: its binary entailment
/// call and the cells it marked as evidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvidencePrediction {
    pub statement_id: String,
    pub model_id: String,
    pub predicted_label: BinaryLabel,
    pub cells: BTreeSet<CellCoord>,
}

/// A single broken dataset invariant. Violations are data, not failures:
/// [`validate_dataset`] reports all of them instead of stopping at the
/// first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DanglingTableRef {
        statement_id: String,
        table_id: String,
    },
    RaggedRow {
        table_id: String,
        row_index: usize,
        expected: usize,
        actual: usize,
    },
    EmptyHeader {
        table_id: String,
    },
    EmptyTableId,
    DuplicateStatementId {
        statement_id: String,
    },
    DuplicateTableId {
        table_id: String,
    },
    EmptyStatementId,
    EmptyStatementText {
        statement_id: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DanglingTableRef {
                statement_id,
                table_id,
            } => write!(
                f,
                "statement '{statement_id}': references unknown table '{table_id}'"
            ),
            Violation::RaggedRow {
                table_id,
                row_index,
                expected,
                actual,
            } => write!(
                f,
                "table '{table_id}': row {row_index} has {actual} cells under a {expected}-column header"
            ),
            Violation::EmptyHeader { table_id } => {
                write!(f, "table '{table_id}': header must have at least one column")
            }
            Violation::EmptyTableId => f.write_str("table with empty id"),
            Violation::DuplicateStatementId { statement_id } => {
                write!(f, "statement id '{statement_id}' occurs more than once")
            }
            Violation::DuplicateTableId { table_id } => {
                write!(f, "table id '{table_id}' occurs more than once")
            }
            Violation::EmptyStatementId => f.write_str("statement with empty id"),
            Violation::EmptyStatementText { statement_id } => {
                write!(f, "statement '{statement_id}': text must be non-empty")
            }
        }
    }
}

/// Check every dataset invariant and report each breakage.
///
/// Returns an empty list iff the dataset is well-formed. Duplicate table
/// ids cannot survive the keyed map and are reported at parse time by
/// ingest instead.
pub fn validate_dataset(d: &Dataset) -> Vec<Violation> {
    let mut violations = Vec::new();

    for table in d.tables.values() {
        if table.id.is_empty() {
            violations.push(Violation::EmptyTableId);
        }
        if table.header.is_empty() {
            violations.push(Violation::EmptyHeader {
                table_id: table.id.clone(),
            });
        }
        let expected = table.header.len();
        for (row_index, row) in table.rows.iter().enumerate() {
            if row.len() != expected {
                violations.push(Violation::RaggedRow {
                    table_id: table.id.clone(),
                    row_index,
                    expected,
                    actual: row.len(),
                });
            }
        }
    }

    let mut seen: HashSet<&str> = HashSet::new();
    for statement in &d.statements {
        if statement.id.is_empty() {
            violations.push(Violation::EmptyStatementId);
        } else if !seen.insert(&statement.id) {
            violations.push(Violation::DuplicateStatementId {
                statement_id: statement.id.clone(),
            });
        }
        if statement.text.is_empty() {
            violations.push(Violation::EmptyStatementText {
                statement_id: statement.id.clone(),
            });
        }
        if !d.tables.contains_key(&statement.table_id) {
            violations.push(Violation::DanglingTableRef {
                statement_id: statement.id.clone(),
                table_id: statement.table_id.clone(),
            });
        }
    }

    violations
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_table_dataset() -> Dataset {
        let t1 = Table::new(
            "t1",
            "first",
            vec!["model".into(), "acc".into()],
            vec![vec!["a".into(), "0.9".into()], vec!["b".into(), "0.8".into()]],
        );
        let t2 = Table::new(
            "t2",
            "second",
            vec!["x".into(), "y".into(), "z".into()],
            vec![vec!["1".into(), "2".into(), "3".into()]],
        );
        let statements = vec![
            Statement::new("s1", "t1", "a scores 0.9", Some(Label::Entailed)),
            Statement::new("s2", "t1", "b beats a", Some(Label::Refuted)),
            Statement::new("s3", "t2", "z is 3", Some(Label::Neutral)),
        ];
        Dataset::from_parts(vec![t1, t2], statements)
    }

    #[test]
    fn label_round_trips_through_strings() {
        for label in Label::ALL {
            assert_eq!(label.as_str().parse::<Label>().unwrap(), label);
        }
        assert_eq!("Entailed".parse::<Label>().unwrap(), Label::Entailed);
        assert_eq!("NEUTRAL".parse::<Label>().unwrap(), Label::Neutral);
        assert!("maybe".parse::<Label>().is_err());
    }

    #[test]
    fn label_serde_uses_lowercase_strings() {
        let json = serde_json::to_string(&Label::Refuted).unwrap();
        assert_eq!(json, "\"refuted\"");
        let back: Label = serde_json::from_str("\"REFUTED\"").unwrap();
        assert_eq!(back, Label::Refuted);
    }

    #[test]
    fn well_formed_dataset_has_no_violations() {
        assert_eq!(validate_dataset(&two_table_dataset()), vec![]);
    }

    #[test]
    fn dangling_reference_is_reported() {
        let mut d = two_table_dataset();
        d.statements
            .push(Statement::new("s4", "tX", "orphan", None));
        let violations = validate_dataset(&d);
        assert_eq!(violations.len(), 1);
        assert!(matches!(
            &violations[0],
            Violation::DanglingTableRef { statement_id, table_id }
                if statement_id == "s4" && table_id == "tX"
        ));
    }

    #[test]
    fn ragged_row_is_reported() {
        let mut d = two_table_dataset();
        let t = d.tables.get_mut("t2").unwrap();
        t.rows.push(vec!["only".into(), "two".into()]);
        let violations = validate_dataset(&d);
        assert_eq!(violations.len(), 1);
        assert!(matches!(
            &violations[0],
            Violation::RaggedRow { table_id, row_index: 1, expected: 3, actual: 2 }
                if table_id == "t2"
        ));
    }

    #[test]
    fn duplicate_statement_ids_and_empty_text_are_reported() {
        let mut d = two_table_dataset();
        d.statements
            .push(Statement::new("s1", "t1", "", Some(Label::Entailed)));
        let violations = validate_dataset(&d);
        assert!(violations.contains(&Violation::DuplicateStatementId {
            statement_id: "s1".into()
        }));
        assert!(violations.contains(&Violation::EmptyStatementText {
            statement_id: "s1".into()
        }));
    }

    #[test]
    fn cell_coord_bounds_follow_body_dimensions() {
        let d = two_table_dataset();
        let t = d.table("t1").unwrap();
        assert!(CellCoord::new(1, 1).in_bounds(t));
        assert!(!CellCoord::new(2, 0).in_bounds(t));
        assert!(!CellCoord::new(0, 2).in_bounds(t));
    }
}
