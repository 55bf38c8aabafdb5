//! Shared test helpers: an independent reimplementation of the task
//! metric, small dataset builders, and process-level CLI drivers.
//!
//! The oracle below recomputes micro-F1 from first principles (explicit
//! per-class true/false positive/negative enumeration, precision and
//! recall, then their harmonic mean). It deliberately shares no code or
//! algebraic shortcuts with the library implementation so the two can
//! check each other.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use tabver::model::{Dataset, Label, Statement, Table};

/// Brute-force per-table micro-F1.
///
/// `two_way` drops gold-neutral statements before counting and scores
/// only the entailed/refuted classes; a neutral prediction then matches
/// no counted class, so it can only cost recall. Returns None when the
/// filter leaves nothing.
pub fn oracle_micro_f1(gold: &[Label], pred: &[Label], two_way: bool) -> Option<f64> {
    assert_eq!(gold.len(), pred.len(), "oracle inputs must align");

    let pairs: Vec<(Label, Label)> = gold
        .iter()
        .zip(pred)
        .filter(|(g, _)| !two_way || **g != Label::Neutral)
        .map(|(g, p)| (*g, *p))
        .collect();
    if two_way && pairs.is_empty() {
        return None;
    }

    let classes: &[Label] = if two_way {
        &[Label::Entailed, Label::Refuted]
    } else {
        &[Label::Entailed, Label::Refuted, Label::Neutral]
    };

    let mut tp: BTreeMap<Label, u64> = BTreeMap::new();
    let mut fp: BTreeMap<Label, u64> = BTreeMap::new();
    let mut fn_: BTreeMap<Label, u64> = BTreeMap::new();
    for &class in classes {
        for &(g, p) in &pairs {
            match (g == class, p == class) {
                (true, true) => *tp.entry(class).or_insert(0) += 1,
                (false, true) => *fp.entry(class).or_insert(0) += 1,
                (true, false) => *fn_.entry(class).or_insert(0) += 1,
                (false, false) => {}
            }
        }
    }

    let tp_sum: u64 = tp.values().sum();
    let fp_sum: u64 = fp.values().sum();
    let fn_sum: u64 = fn_.values().sum();
    if tp_sum == 0 {
        return Some(0.0);
    }
    let precision = tp_sum as f64 / (tp_sum + fp_sum) as f64;
    let recall = tp_sum as f64 / (tp_sum + fn_sum) as f64;
    Some(2.0 * precision * recall / (precision + recall))
}

/// A rectangular table whose cells are distinct deterministic strings.
pub fn grid_table(id: &str, cols: usize, rows: usize) -> Table {
    Table::new(
        id,
        format!("caption for {id}"),
        (0..cols).map(|c| format!("{id}h{c}")).collect(),
        (0..rows)
            .map(|r| (0..cols).map(|c| format!("{id}v{r}x{c}")).collect())
            .collect(),
    )
}

/// Dataset of `shape.len()` tables; `shape[i]` gold labels become that
/// table's statements, in order.
pub fn dataset_from_shape(shape: &[Vec<Label>]) -> Dataset {
    let mut tables = Vec::new();
    let mut statements = Vec::new();
    for (ti, labels) in shape.iter().enumerate() {
        let tid = format!("t{ti}");
        tables.push(grid_table(&tid, 3, 2));
        for (si, &gold) in labels.iter().enumerate() {
            statements.push(Statement::new(
                format!("t{ti}s{si}"),
                &tid,
                format!("statement {si} about table {ti}"),
                Some(gold),
            ));
        }
    }
    Dataset::from_parts(tables, statements)
}

/// Run the compiled binary with the given args in `dir`.
pub fn run_tabver(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tabver"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

/// Run the binary and require success, returning stdout.
pub fn run_tabver_ok(dir: &Path, args: &[&str]) -> String {
    let out = run_tabver(dir, args);
    assert!(
        out.status.success(),
        "tabver {args:?} failed with {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout is UTF-8")
}

/// Path of a bundled fixture file.
pub fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Three models that unanimously predict each statement's gold label and
/// all mark cell (0, `col`): the strongest possible removal signal for
/// that column. Statements without binary gold are skipped.
pub fn unanimous_evidence(
    d: &Dataset,
    ids: &[&str],
    col: usize,
) -> (
    Vec<tabver::model::EvidencePrediction>,
    BTreeMap<String, tabver::model::BinaryLabel>,
) {
    use tabver::model::{BinaryLabel, CellCoord, EvidencePrediction};

    let mut evidence = Vec::new();
    let mut gold_map = BTreeMap::new();
    for id in ids {
        let statement = d.statement(id).expect("statement exists");
        let gold = match statement.gold {
            Some(Label::Entailed) => BinaryLabel::Entailed,
            Some(Label::Refuted) => BinaryLabel::Refuted,
            _ => continue,
        };
        gold_map.insert(statement.id.clone(), gold);
        for model in ["m1", "m2", "m3"] {
            evidence.push(EvidencePrediction {
                statement_id: statement.id.clone(),
                model_id: model.to_string(),
                predicted_label: gold,
                cells: [CellCoord::new(0, col)].into_iter().collect(),
            });
        }
    }
    (evidence, gold_map)
}
