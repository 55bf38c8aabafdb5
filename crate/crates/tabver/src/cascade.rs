//! Ensemble aggregation and the two-stage decision rule.
//!
//! Per statement and stage, the ensemble logit is the median of the model
//! logits. Stage 1 then gates neutral vs non-neutral, Stage 2 splits the
//! survivors into entailed vs refuted. Both gates use strict ">" so a
//! logit exactly at the threshold does not trigger.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::{self, ScoreSet, Stage};
use crate::metrics::{evaluate, Aggregation};
use crate::model::{Dataset, Label};

/// Decision thresholds for the two gates. Stage 1's positive class is
/// "non-neutral"; Stage 2's positive class is "entailed", so a high tau2
/// demands extra confidence before predicting entailed and pushes
/// borderline statements toward refuted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeConfig {
    pub tau1: f64,
    pub tau2: f64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig { tau1: 4.0, tau2: 4.0 }
    }
}

/// Final verdict for one statement with the ensemble logits that led there.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub statement_id: String,
    pub stage1_logit: f64,
    pub stage2_logit: f64,
    pub label: Label,
}

/// Median with the even-length mean-of-middles rule.
pub fn median(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyInput("median of an empty list"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Half the inter-quartile range, the reported error margin for ensemble
/// medians. Quartiles are medians of the lower and upper halves; with an
/// odd count the overall median belongs to neither half.
pub fn iqr_half(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::EmptyInput("error margin needs at least 2 values"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let lower = &v[..n / 2];
    let upper = if n.is_multiple_of(2) { &v[n / 2..] } else { &v[n / 2 + 1..] };
    Ok((median(upper)? - median(lower)?) / 2.0)
}

/// Strictly-greater threshold test; a logit equal to tau does not trigger.
pub fn threshold_decide(logit: f64, tau: f64) -> bool {
    logit > tau
}

/// Compose the two gates into a 3-class label.
pub fn cascade_predict(s1: f64, s2: f64, cfg: &CascadeConfig) -> Label {
    if !threshold_decide(s1, cfg.tau1) {
        Label::Neutral
    } else if threshold_decide(s2, cfg.tau2) {
        Label::Entailed
    } else {
        Label::Refuted
    }
}

fn ensemble_logit(sets: &[ScoreSet], statement_id: &str) -> Result<f64> {
    let mut logits = Vec::with_capacity(sets.len());
    for set in sets {
        match set.get(statement_id) {
            Some(l) => logits.push(l),
            None => {
                return Err(Error::CoverageGap {
                    model_id: set.model_id.clone(),
                    statement_id: statement_id.to_string(),
                })
            }
        }
    }
    median(&logits)
}

fn check_stage(sets: &[ScoreSet], expected: Stage) -> Result<()> {
    if sets.is_empty() {
        return Err(Error::NoScorers { stage: expected.to_string() });
    }
    for set in sets {
        if set.stage != expected {
            return Err(Error::StageMismatch {
                model_id: set.model_id.clone(),
                expected: expected.to_string(),
                found: set.stage.to_string(),
            });
        }
    }
    Ok(())
}

/// Predict every statement: median-ensemble each stage, then cascade.
/// Output follows dataset statement order. Every score set must cover
/// every statement and carry the right stage tag.
pub fn predict_all(
    stage1: &[ScoreSet],
    stage2: &[ScoreSet],
    cfg: &CascadeConfig,
    d: &Dataset,
) -> Result<Vec<Prediction>> {
    check_stage(stage1, Stage::One)?;
    check_stage(stage2, Stage::Two)?;

    let mut out = Vec::with_capacity(d.statements.len());
    for s in &d.statements {
        let s1 = ensemble_logit(stage1, &s.id)?;
        let s2 = ensemble_logit(stage2, &s.id)?;
        out.push(Prediction {
            statement_id: s.id.clone(),
            stage1_logit: s1,
            stage2_logit: s2,
            label: cascade_predict(s1, s2, cfg),
        });
    }
    Ok(out)
}

/// One grid point of a threshold sweep. The 2-way score is absent when no
/// table has a defined 2-way value (for example, all-neutral gold).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub tau1: f64,
    pub tau2: f64,
    pub f1_2way: Option<f64>,
    pub f1_3way: f64,
}

/// Evaluate the cascade at every grid point, in grid order.
pub fn sweep(
    stage1: &[ScoreSet],
    stage2: &[ScoreSet],
    d: &Dataset,
    grid: &[(f64, f64)],
    agg: Aggregation,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(grid.len());
    for &(tau1, tau2) in grid {
        let preds = predict_all(stage1, stage2, &CascadeConfig { tau1, tau2 }, d)?;
        let report = evaluate(d, &preds, agg)?;
        rows.push(SweepRow {
            tau1,
            tau2,
            f1_2way: report.aggregate_2way,
            f1_3way: report.aggregate_3way,
        });
    }
    Ok(rows)
}

/// Write predictions as `<statement_id> <label> <s1_logit> <s2_logit>`
/// lines, in the order given.
pub fn write_predictions(path: &Path, preds: &[Prediction]) -> Result<()> {
    let mut out = String::new();
    for p in preds {
        writeln!(
            out,
            "{} {} {} {}",
            p.statement_id,
            p.label,
            ingest::format_logit(p.stage1_logit),
            ingest::format_logit(p.stage2_logit)
        )
        .expect("string write");
    }
    ingest::write_atomic(path, out.as_bytes())
}

/// Parse a predictions file; ids must be unique and logits finite.
pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: "invalid UTF-8".to_string(),
    })?;

    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut out = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let [id, label, s1, s2] = fields.as_slice() else {
            return Err(parse_err(
                line,
                "expected four fields: <statement_id> <label> <s1_logit> <s2_logit>".to_string(),
            ));
        };
        let label: Label = label
            .parse()
            .map_err(|e: String| parse_err(line, e))?;
        let parse_logit = |raw: &str| -> Result<f64> {
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(line, format!("'{raw}' is not a number")))?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    path: path.to_path_buf(),
                    line,
                    id: id.to_string(),
                });
            }
            Ok(v)
        };
        let stage1_logit = parse_logit(s1)?;
        let stage2_logit = parse_logit(s2)?;
        if seen.insert(id.to_string(), line).is_some() {
            return Err(Error::DuplicateRecord {
                path: path.to_path_buf(),
                line,
                id: id.to_string(),
            });
        }
        out.push(Prediction {
            statement_id: id.to_string(),
            stage1_logit,
            stage2_logit,
            label,
        });
    }
    Ok(out)
}
