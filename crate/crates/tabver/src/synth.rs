//! Artificial neutral generation and the balanced binary training set for
//! the neutral gate.
//!
//! Neutrals come from two sources: pairing a statement with a foreign
//! table, and deleting an evidence column from the statement's own table.
//! A statement about a table it was never written for, or whose supporting
//! column is gone, can no longer be verified, so it is labeled neutral.
//! Refuted statements arguably stay refuted after column removal; that
//! label noise is accepted deliberately, not filtered.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{BinaryLabel, Dataset, EvidencePrediction, Label, Statement, Table};

/// How a neutral example was manufactured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeutralSource {
    RandomPairing,
    ColumnRemoval,
}

/// Where a generated example came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub original_statement_id: String,
    pub original_table_id: String,
    /// Present iff the source is column removal.
    pub removed_col: Option<usize>,
}

/// A generated neutral statement plus, for column removal, the table it
/// now points at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeutralExample {
    pub statement: Statement,
    pub source: NeutralSource,
    pub derived_table: Option<Table>,
    pub provenance: Provenance,
}

/// Uniform draw over tables excluding `own`; `ids` is the sorted table id
/// list. Falls back to an unrestricted draw if `own` is not present.
fn draw_foreign_table<'a>(ids: &'a [&'a str], own: &str, rng: &mut ChaCha8Rng) -> &'a str {
    match ids.binary_search(&own) {
        Ok(own_pos) => {
            let mut t = rng.gen_range(0..ids.len() - 1);
            if t >= own_pos {
                t += 1;
            }
            ids[t]
        }
        Err(_) => ids[rng.gen_range(0..ids.len())],
    }
}

fn draw_random_pairing(
    d: &Dataset,
    table_ids: &[&str],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> NeutralExample {
    let source = &d.statements[rng.gen_range(0..d.statements.len())];
    let foreign = draw_foreign_table(table_ids, &source.table_id, rng);
    NeutralExample {
        statement: Statement::new(
            format!("{}#rp{k}", source.id),
            foreign,
            source.text.clone(),
            Some(Label::Neutral),
        ),
        source: NeutralSource::RandomPairing,
        derived_table: None,
        provenance: Provenance {
            original_statement_id: source.id.clone(),
            original_table_id: source.table_id.clone(),
            removed_col: None,
        },
    }
}

/// Draw `n` neutral examples by pairing statements with foreign tables,
/// uniformly and with replacement on both sides. Ids are
/// `<source_statement_id>#rp<draw_index>`.
pub fn pair_random_neutrals(d: &Dataset, n: usize, seed: u64) -> Result<Vec<NeutralExample>> {
    if d.tables.len() < 2 {
        return Err(Error::TooFewTables {
            found: d.tables.len(),
        });
    }
    if d.statements.is_empty() {
        return Err(Error::EmptyInput("dataset has no statements to pair"));
    }
    let table_ids: Vec<&str> = d.tables.keys().map(String::as_str).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|k| draw_random_pairing(d, &table_ids, k, &mut rng))
        .collect())
}

/// Columns eligible for removal: a strict majority of the ensemble got the
/// entailment label right, and a strict majority marked at least one
/// evidence cell in the column. Column 0 is never eligible; it usually
/// names the entity a row is about, so dropping it changes the whole
/// table's meaning rather than hiding one fact.
pub fn extract_evidence_columns(
    t: &Table,
    gold: BinaryLabel,
    preds: &[EvidencePrediction],
) -> Result<BTreeSet<usize>> {
    if let Some(first) = preds.first() {
        for p in &preds[1..] {
            if p.statement_id != first.statement_id {
                return Err(Error::MixedStatements {
                    expected: first.statement_id.clone(),
                    found: p.statement_id.clone(),
                });
            }
        }
    }

    let n = preds.len();
    let correct = preds
        .iter()
        .filter(|p| p.predicted_label == gold)
        .count();
    if correct * 2 <= n {
        return Ok(BTreeSet::new());
    }

    let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
    for p in preds {
        let cols: BTreeSet<usize> = p.cells.iter().map(|c| c.col).collect();
        for col in cols {
            *votes.entry(col).or_insert(0) += 1;
        }
    }
    Ok(votes
        .into_iter()
        .filter(|&(col, v)| col >= 1 && col < t.column_count() && v * 2 > n)
        .map(|(col, _)| col)
        .collect())
}

/// Delete column `c` from the table, producing a fresh table with id
/// `<old_id>#drop<c>`. Column 0 is protected.
pub fn remove_column(t: &Table, c: usize) -> Result<Table> {
    if c == 0 {
        return Err(Error::ProtectedColumn);
    }
    if c >= t.column_count() {
        return Err(Error::ColumnOutOfRange {
            col: c,
            cols: t.column_count(),
        });
    }
    let drop_at = |row: &[String]| -> Vec<String> {
        row.iter()
            .enumerate()
            .filter(|&(i, _)| i != c)
            .map(|(_, cell)| cell.clone())
            .collect()
    };
    Ok(Table::new(
        format!("{}#drop{c}", t.id),
        t.caption.clone(),
        drop_at(&t.header),
        t.rows.iter().map(|r| drop_at(r)).collect(),
    ))
}

/// Generate every column-removal neutral the evidence supports: one per
/// (statement, eligible column), deduplicated and sorted on
/// (original statement id, original table id, removed column). Statements
/// absent from `gold_map` contribute nothing.
pub fn gen_column_removal_neutrals(
    d: &Dataset,
    evidence: &[EvidencePrediction],
    gold_map: &BTreeMap<String, BinaryLabel>,
) -> Result<Vec<NeutralExample>> {
    let mut by_statement: BTreeMap<&str, Vec<&EvidencePrediction>> = BTreeMap::new();
    for p in evidence {
        by_statement.entry(&p.statement_id).or_default().push(p);
    }

    let mut unique: BTreeMap<(String, String, usize), NeutralExample> = BTreeMap::new();
    for (statement_id, preds) in by_statement {
        let Some(&gold) = gold_map.get(statement_id) else {
            continue;
        };
        let Some(statement) = d.statement(statement_id) else {
            continue;
        };
        let Some(table) = d.table_for(statement) else {
            continue;
        };
        let owned: Vec<EvidencePrediction> = preds.into_iter().cloned().collect();
        for col in extract_evidence_columns(table, gold, &owned)? {
            let derived = remove_column(table, col)?;
            let key = (statement.id.clone(), table.id.clone(), col);
            unique.entry(key).or_insert_with(|| NeutralExample {
                statement: Statement::new(
                    format!("{}#cr{col}", statement.id),
                    derived.id.clone(),
                    statement.text.clone(),
                    Some(Label::Neutral),
                ),
                source: NeutralSource::ColumnRemoval,
                derived_table: Some(derived),
                provenance: Provenance {
                    original_statement_id: statement.id.clone(),
                    original_table_id: table.id.clone(),
                    removed_col: Some(col),
                },
            });
        }
    }
    Ok(unique.into_values().collect())
}

/// Build the balanced neutral-gate training set: every original statement
/// as a positive (its entailed/refuted gold kept; both mean "non-neutral"
/// here), matched 1:1 by generated neutrals. Half the negatives (rounded
/// down) are fresh random pairings; the rest are drawn with replacement
/// from `removal_pool`. Repeat draws of a pool entry get `-dup<k>` id
/// suffixes so ids stay unique.
pub fn build_stage1_trainset(
    d: &Dataset,
    removal_pool: &[NeutralExample],
    seed: u64,
) -> Result<Dataset> {
    for s in &d.statements {
        match s.gold {
            Some(Label::Entailed) | Some(Label::Refuted) => {}
            _ => {
                return Err(Error::NonBinaryGold {
                    statement_id: s.id.clone(),
                })
            }
        }
    }
    if d.tables.len() < 2 {
        return Err(Error::TooFewTables {
            found: d.tables.len(),
        });
    }
    if removal_pool.is_empty() {
        return Err(Error::EmptyPool);
    }

    let n = d.statements.len();
    let n_pairing = n / 2;
    let n_removal = n - n_pairing;
    let table_ids: Vec<&str> = d.tables.keys().map(String::as_str).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut out = Dataset::new();
    out.tables = d.tables.clone();
    out.statements = d.statements.clone();

    for k in 0..n_pairing {
        out.statements
            .push(draw_random_pairing(d, &table_ids, k, &mut rng).statement);
    }

    let mut draw_counts: BTreeMap<usize, usize> = BTreeMap::new();
    for _ in 0..n_removal {
        let idx = rng.gen_range(0..removal_pool.len());
        let example = &removal_pool[idx];
        let repeat = draw_counts.entry(idx).or_insert(0);
        let mut statement = example.statement.clone();
        if *repeat > 0 {
            statement.id = format!("{}-dup{}", statement.id, repeat);
        }
        *repeat += 1;
        out.statements.push(statement);
        if let Some(derived) = &example.derived_table {
            out.tables
                .entry(derived.id.clone())
                .or_insert_with(|| derived.clone());
        }
    }

    Ok(out)
}

/// Package generated examples as a dataset: the derived tables they carry,
/// the source tables they reference, and their statements. The result is
/// self-contained and passes validation.
pub fn pool_to_dataset(examples: &[NeutralExample], source: &Dataset) -> Dataset {
    let mut out = Dataset::new();
    for e in examples {
        if let Some(derived) = &e.derived_table {
            out.tables
                .entry(derived.id.clone())
                .or_insert_with(|| derived.clone());
        } else if let Some(table) = source.table(&e.statement.table_id) {
            out.tables
                .entry(table.id.clone())
                .or_insert_with(|| table.clone());
        }
        out.statements.push(e.statement.clone());
    }
    out.statements.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

fn pool_entry_error(statement_id: &str, reason: impl Into<String>) -> Error {
    Error::InvalidPoolEntry {
        statement_id: statement_id.to_string(),
        reason: reason.into(),
    }
}

/// Reconstruct a column-removal pool from its dataset form. Statement ids
/// must follow `<orig>#cr<col>`, table ids `<orig>#drop<col>`, and both
/// columns must agree; anything else is rejected.
pub fn pool_from_dataset(d: &Dataset) -> Result<Vec<NeutralExample>> {
    let mut pool = Vec::new();
    for s in &d.statements {
        if s.gold != Some(Label::Neutral) {
            return Err(pool_entry_error(&s.id, "pool statements must be gold-neutral"));
        }
        let cut = s
            .id
            .rfind("#cr")
            .ok_or_else(|| pool_entry_error(&s.id, "id lacks a '#cr<col>' suffix"))?;
        let (orig_statement, col_text) = (&s.id[..cut], &s.id[cut + 3..]);
        let col: usize = col_text
            .parse()
            .map_err(|_| pool_entry_error(&s.id, format!("'{col_text}' is not a column index")))?;

        let table = d.table(&s.table_id).ok_or_else(|| {
            pool_entry_error(&s.id, format!("derived table '{}' missing from pool", s.table_id))
        })?;
        let tcut = table
            .id
            .rfind("#drop")
            .ok_or_else(|| pool_entry_error(&s.id, "table id lacks a '#drop<col>' suffix"))?;
        let (orig_table, tcol_text) = (&table.id[..tcut], &table.id[tcut + 5..]);
        let tcol: usize = tcol_text.parse().map_err(|_| {
            pool_entry_error(&s.id, format!("'{tcol_text}' is not a column index"))
        })?;
        if tcol != col {
            return Err(pool_entry_error(
                &s.id,
                format!("statement column {col} disagrees with table column {tcol}"),
            ));
        }
        if col == 0 {
            return Err(pool_entry_error(&s.id, "column 0 can never have been removed"));
        }

        pool.push(NeutralExample {
            statement: s.clone(),
            source: NeutralSource::ColumnRemoval,
            derived_table: Some(table.clone()),
            provenance: Provenance {
                original_statement_id: orig_statement.to_string(),
                original_table_id: orig_table.to_string(),
                removed_col: Some(col),
            },
        });
    }
    Ok(pool)
}
