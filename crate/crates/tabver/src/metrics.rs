//! Task metrics: per-table micro-F1 (2-way and 3-way), cross-table
//! aggregation, confusion matrices, and per-class precision/recall.
//!
//! All scores here are raw fractions in [0, 1] (or percents only where a
//! function says so); percentage formatting belongs to the report module.

use std::collections::BTreeMap;

use crate::cascade::Prediction;
use crate::error::{Error, Result};
use crate::model::{Dataset, Label, Statement};

/// Which statements an F1 score covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum F1Mode {
    /// Entailed vs refuted, with gold-neutral statements removed first.
    TwoWay,
    /// All three classes over all statements.
    ThreeWay,
}

/// How per-table scores combine into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Unweighted mean over tables; tables with an undefined score are
    /// skipped. The task metric.
    #[default]
    PerTable,
    /// One micro-F1 over all statements pooled, ignoring table bounds.
    Global,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::PerTable => "per-table",
            Aggregation::Global => "global",
        }
    }
}

impl std::fmt::Display for Aggregation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "per-table" | "per_table" | "table" => Ok(Aggregation::PerTable),
            "global" => Ok(Aggregation::Global),
            other => Err(format!(
                "unknown aggregation '{other}' (expected per-table or global)"
            )),
        }
    }
}

fn micro_from_counts(tp: u64, fp: u64, fn_: u64) -> f64 {
    // Zero scores stay an exact 0 even when every denominator vanishes;
    // sweeps need a total order over grid points.
    if tp == 0 {
        return 0.0;
    }
    (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
}

/// Micro-averaged F1 for one table's statements.
///
/// 3-way counts all statements over all three classes; with exhaustive
/// single-label predictions this equals plain accuracy. 2-way drops
/// gold-neutral statements first and counts only entailed/refuted: a
/// neutral prediction on a kept statement is a false negative for its
/// gold class and a false positive for nothing. Returns None when the
/// 2-way filter leaves nothing to score.
pub fn per_table_f1(gold: &[Label], pred: &[Label], mode: F1Mode) -> Result<Option<f64>> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: gold.len(),
            right: pred.len(),
        });
    }
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    match mode {
        F1Mode::ThreeWay => {
            for (&g, &p) in gold.iter().zip(pred) {
                if g == p {
                    tp += 1;
                } else {
                    // The wrong class was predicted: one FN for the gold
                    // class, one FP for the predicted class.
                    fn_ += 1;
                    fp += 1;
                }
            }
        }
        F1Mode::TwoWay => {
            let mut kept = 0usize;
            for (&g, &p) in gold.iter().zip(pred) {
                if g == Label::Neutral {
                    continue;
                }
                kept += 1;
                if g == p {
                    tp += 1;
                } else if p == Label::Neutral {
                    fn_ += 1;
                } else {
                    fn_ += 1;
                    fp += 1;
                }
            }
            if kept == 0 {
                return Ok(None);
            }
        }
    }
    Ok(Some(micro_from_counts(tp, fp, fn_)))
}

/// One statement matched with its gold and predicted labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aligned<'a> {
    pub statement: &'a Statement,
    pub gold: Label,
    pub pred: Label,
}

/// Join predictions onto dataset statements, in dataset order.
///
/// Every statement needs gold and exactly one prediction; every
/// prediction must match a statement.
pub fn align_predictions<'a>(
    d: &'a Dataset,
    preds: &'a [Prediction],
) -> Result<Vec<Aligned<'a>>> {
    let mut by_id: BTreeMap<&str, &Prediction> = BTreeMap::new();
    for p in preds {
        if by_id.insert(&p.statement_id, p).is_some() {
            return Err(Error::DuplicatePrediction {
                statement_id: p.statement_id.clone(),
            });
        }
    }
    for p in preds {
        if d.statement(&p.statement_id).is_none() {
            return Err(Error::UnknownStatement {
                id: p.statement_id.clone(),
                context: "predictions".to_string(),
            });
        }
    }

    let mut out = Vec::with_capacity(d.statements.len());
    for s in &d.statements {
        let gold = s.gold.ok_or_else(|| Error::MissingGold {
            statement_id: s.id.clone(),
        })?;
        let pred = by_id.get(s.id.as_str()).ok_or_else(|| Error::CoverageGap {
            model_id: "predictions".to_string(),
            statement_id: s.id.clone(),
        })?;
        out.push(Aligned {
            statement: s,
            gold,
            pred: pred.label,
        });
    }
    Ok(out)
}

/// Scores for one table's statements.
#[derive(Debug, Clone, PartialEq)]
pub struct TableScores {
    pub f1_2way: Option<f64>,
    pub f1_3way: f64,
    /// Statements surviving the 2-way gold filter.
    pub counted_2way: usize,
    /// All statements on the table.
    pub n: usize,
}

/// Full evaluation output: per-table scores plus the cross-table
/// aggregates under the chosen aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_table: BTreeMap<String, TableScores>,
    pub aggregate_2way: Option<f64>,
    pub aggregate_3way: f64,
    pub aggregation: Aggregation,
}

/// Score predictions against gold, grouped by table.
pub fn evaluate(d: &Dataset, preds: &[Prediction], agg: Aggregation) -> Result<EvalReport> {
    let aligned = align_predictions(d, preds)?;

    let mut by_table: BTreeMap<&str, (Vec<Label>, Vec<Label>)> = BTreeMap::new();
    for a in &aligned {
        let entry = by_table.entry(&a.statement.table_id).or_default();
        entry.0.push(a.gold);
        entry.1.push(a.pred);
    }

    let mut per_table = BTreeMap::new();
    for (table_id, (gold, pred)) in &by_table {
        let f1_2way = per_table_f1(gold, pred, F1Mode::TwoWay)?;
        let f1_3way = per_table_f1(gold, pred, F1Mode::ThreeWay)?
            .expect("3-way is always defined");
        per_table.insert(
            table_id.to_string(),
            TableScores {
                f1_2way,
                f1_3way,
                counted_2way: gold.iter().filter(|&&g| g != Label::Neutral).count(),
                n: gold.len(),
            },
        );
    }

    let (aggregate_2way, aggregate_3way) = match agg {
        Aggregation::PerTable => {
            let defined: Vec<f64> = per_table.values().filter_map(|t| t.f1_2way).collect();
            let two = if defined.is_empty() {
                None
            } else {
                Some(defined.iter().sum::<f64>() / defined.len() as f64)
            };
            let three = if per_table.is_empty() {
                0.0
            } else {
                per_table.values().map(|t| t.f1_3way).sum::<f64>() / per_table.len() as f64
            };
            (two, three)
        }
        Aggregation::Global => {
            let gold: Vec<Label> = aligned.iter().map(|a| a.gold).collect();
            let pred: Vec<Label> = aligned.iter().map(|a| a.pred).collect();
            let two = per_table_f1(&gold, &pred, F1Mode::TwoWay)?;
            let three = per_table_f1(&gold, &pred, F1Mode::ThreeWay)?.unwrap_or(0.0);
            (two, three)
        }
    };

    Ok(EvalReport {
        per_table,
        aggregate_2way,
        aggregate_3way,
        aggregation: agg,
    })
}

/// Square gold-by-predicted count grid; `counts[i][j]` is the number of
/// statements with gold class `i` predicted as class `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    fn tally(classes: Vec<String>, pairs: impl Iterator<Item = (usize, usize)>) -> Self {
        let k = classes.len();
        let mut counts = vec![vec![0u64; k]; k];
        for (g, p) in pairs {
            counts[g][p] += 1;
        }
        ConfusionMatrix { classes, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

fn label_index_3way(l: Label) -> usize {
    match l {
        Label::Entailed => 0,
        Label::Refuted => 1,
        Label::Neutral => 2,
    }
}

/// Full three-class confusion over all aligned statements.
pub fn confusion_3way(aligned: &[Aligned<'_>]) -> ConfusionMatrix {
    ConfusionMatrix::tally(
        vec!["entailed".into(), "refuted".into(), "neutral".into()],
        aligned
            .iter()
            .map(|a| (label_index_3way(a.gold), label_index_3way(a.pred))),
    )
}

/// Neutral-gate view: entailed and refuted collapse to "non-neutral".
pub fn confusion_stage1(aligned: &[Aligned<'_>]) -> ConfusionMatrix {
    let idx = |l: Label| usize::from(l == Label::Neutral);
    ConfusionMatrix::tally(
        vec!["non-neutral".into(), "neutral".into()],
        aligned.iter().map(|a| (idx(a.gold), idx(a.pred))),
    )
}

/// Entailment view: refuted vs entailed, restricted to statements that
/// are non-neutral in both gold and prediction.
pub fn confusion_stage2(aligned: &[Aligned<'_>]) -> ConfusionMatrix {
    let idx = |l: Label| match l {
        Label::Refuted => Some(0),
        Label::Entailed => Some(1),
        Label::Neutral => None,
    };
    ConfusionMatrix::tally(
        vec!["refuted".into(), "entailed".into()],
        aligned
            .iter()
            .filter_map(|a| Some((idx(a.gold)?, idx(a.pred)?))),
    )
}

/// Per-class precision and recall in raw percent (not yet rounded for
/// display). A vanishing denominator scores 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPr {
    pub class: String,
    pub precision_pct: f64,
    pub recall_pct: f64,
}

pub fn precision_recall(m: &ConfusionMatrix) -> Vec<ClassPr> {
    let k = m.classes.len();
    (0..k)
        .map(|i| {
            let row: u64 = m.counts[i].iter().sum();
            let col: u64 = (0..k).map(|g| m.counts[g][i]).sum();
            let diag = m.counts[i][i];
            let ratio = |num: u64, den: u64| {
                if den == 0 {
                    0.0
                } else {
                    num as f64 / den as f64 * 100.0
                }
            };
            ClassPr {
                class: m.classes[i].clone(),
                precision_pct: ratio(diag, col),
                recall_pct: ratio(diag, row),
            }
        })
        .collect()
}
