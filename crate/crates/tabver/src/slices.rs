//! Error analysis by statement phenomenon: keyword-defined groups, their
//! accuracy and error-rate contributions under three correctness views,
//! and free-form single-keyword probes.
//!
//! A statement belongs to exactly one group: the single base group whose
//! keywords it contains, "Multiple of the above" if it matches several,
//! "Other" if it matches none. Error-rate contributions therefore add up
//! to the overall error rate.

use std::collections::BTreeSet;

use crate::cascade::Prediction;
use crate::error::{Error, Result};
use crate::metrics::{align_predictions, Aligned};
use crate::model::{Dataset, Label, Statement};
use crate::scoring::tokenize;

pub const GROUP_MULTIPLE: &str = "Multiple of the above";
pub const GROUP_OTHER: &str = "Other";

/// Ordered keyword groups; the derived groups are implicit and reserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordGroups {
    groups: Vec<(String, BTreeSet<String>)>,
}

impl KeywordGroups {
    /// Parse `groups.kw` text: one `Name: kw kw ...` line per group,
    /// `#` comments and blank lines ignored. Keywords are lowercased.
    pub fn parse(text: &str) -> Result<Self> {
        let mut groups: Vec<(String, BTreeSet<String>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((name, keywords)) = line.split_once(':') else {
                return Err(Error::Config(format!(
                    "keyword config line {}: expected '<group name>: <keywords>'",
                    i + 1
                )));
            };
            let name = name.trim().to_string();
            if name.is_empty() {
                return Err(Error::Config(format!(
                    "keyword config line {}: empty group name",
                    i + 1
                )));
            }
            if name == GROUP_MULTIPLE || name == GROUP_OTHER {
                return Err(Error::Config(format!(
                    "group name '{name}' is reserved for the derived group"
                )));
            }
            if groups.iter().any(|(n, _)| *n == name) {
                return Err(Error::Config(format!("duplicate group name '{name}'")));
            }
            let words: BTreeSet<String> = keywords
                .split_whitespace()
                .map(|w| w.to_lowercase())
                .collect();
            if words.is_empty() {
                return Err(Error::Config(format!("group '{name}' has no keywords")));
            }
            groups.push((name, words));
        }
        Ok(KeywordGroups { groups })
    }

    /// The groups shipped with the binary.
    pub fn builtin() -> Self {
        KeywordGroups::parse(include_str!("../data/groups.kw"))
            .expect("bundled keyword config is valid")
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.groups.iter().map(|(n, _)| n.as_str())
    }

    /// All row labels in report order, derived groups included.
    pub fn row_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.names().collect();
        names.push(GROUP_MULTIPLE);
        names.push(GROUP_OTHER);
        names
    }
}

/// Group a statement by whole-token keyword matching.
pub fn assign_group<'a>(s: &Statement, kg: &'a KeywordGroups) -> &'a str {
    let tokens = tokenize(&s.text);
    let mut matched: Option<&str> = None;
    for (name, keywords) in &kg.groups {
        if keywords.iter().any(|k| tokens.contains(k)) {
            if matched.is_some() {
                return GROUP_MULTIPLE;
            }
            matched = Some(name);
        }
    }
    matched.unwrap_or(GROUP_OTHER)
}

/// Error-rate contribution of a slice: the share of all statements it
/// holds, discounted by its accuracy. Both inputs and the result are in
/// percent.
pub fn er_contribution(size_pct: f64, acc_pct: f64) -> f64 {
    size_pct * (100.0 - acc_pct) / 100.0
}

/// One row of a slice report; all values raw percents.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceRow {
    pub group: String,
    pub n: usize,
    pub size_pct: f64,
    pub acc_pct: f64,
    /// Within-group frequency of the group's own gold majority class.
    pub baseline_pct: f64,
    pub er_pct: f64,
}

/// One scored statement inside a view: its group, whether the view's
/// decision was correct, and the gold class the baseline counts.
struct ViewItem<'a> {
    group: &'a str,
    correct: bool,
    baseline_class: u8,
}

fn rows_from_items(kg: &KeywordGroups, items: &[ViewItem<'_>]) -> Vec<SliceRow> {
    let total = items.len();
    let row = |group: &str, members: &[&ViewItem<'_>]| -> SliceRow {
        let n = members.len();
        if n == 0 || total == 0 {
            return SliceRow {
                group: group.to_string(),
                n: 0,
                size_pct: 0.0,
                acc_pct: 0.0,
                baseline_pct: 0.0,
                er_pct: 0.0,
            };
        }
        let size_pct = n as f64 / total as f64 * 100.0;
        let correct = members.iter().filter(|m| m.correct).count();
        let acc_pct = correct as f64 / n as f64 * 100.0;
        let mut class_counts: std::collections::BTreeMap<u8, usize> = Default::default();
        for m in members {
            *class_counts.entry(m.baseline_class).or_insert(0) += 1;
        }
        let majority = class_counts.values().copied().max().unwrap_or(0);
        SliceRow {
            group: group.to_string(),
            n,
            size_pct,
            acc_pct,
            baseline_pct: majority as f64 / n as f64 * 100.0,
            er_pct: er_contribution(size_pct, acc_pct),
        }
    };

    let all: Vec<&ViewItem<'_>> = items.iter().collect();
    let mut rows = vec![row("Overall", &all)];
    for name in kg.row_names() {
        let members: Vec<&ViewItem<'_>> =
            items.iter().filter(|m| m.group == name).collect();
        rows.push(row(name, &members));
    }
    rows
}

fn overall_items<'a>(aligned: &[Aligned<'a>], kg: &'a KeywordGroups) -> Vec<ViewItem<'a>> {
    aligned
        .iter()
        .map(|a| ViewItem {
            group: assign_group(a.statement, kg),
            correct: a.gold == a.pred,
            baseline_class: a.gold as u8,
        })
        .collect()
}

/// Accuracy/baseline/error-rate rows under 3-class correctness, one row
/// per group with "Overall" first.
pub fn slice_report(
    d: &Dataset,
    preds: &[Prediction],
    kg: &KeywordGroups,
) -> Result<Vec<SliceRow>> {
    let aligned = align_predictions(d, preds)?;
    Ok(rows_from_items(kg, &overall_items(&aligned, kg)))
}

/// The three analysis views over the same predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceViews {
    /// 3-class correctness on all statements.
    pub overall: Vec<SliceRow>,
    /// Correctness of the neutral/non-neutral decision on all statements.
    pub stage1: Vec<SliceRow>,
    /// Correctness of entailed/refuted, restricted to statements both
    /// gold- and predicted-non-neutral; sizes are within the restriction.
    pub stage2: Vec<SliceRow>,
}

pub fn stage_slice_views(
    d: &Dataset,
    preds: &[Prediction],
    kg: &KeywordGroups,
) -> Result<SliceViews> {
    let aligned = align_predictions(d, preds)?;

    let stage1_items: Vec<ViewItem<'_>> = aligned
        .iter()
        .map(|a| ViewItem {
            group: assign_group(a.statement, kg),
            correct: (a.gold == Label::Neutral) == (a.pred == Label::Neutral),
            baseline_class: u8::from(a.gold == Label::Neutral),
        })
        .collect();

    let stage2_items: Vec<ViewItem<'_>> = aligned
        .iter()
        .filter(|a| a.gold != Label::Neutral && a.pred != Label::Neutral)
        .map(|a| ViewItem {
            group: assign_group(a.statement, kg),
            correct: a.gold == a.pred,
            baseline_class: a.gold as u8,
        })
        .collect();

    Ok(SliceViews {
        overall: rows_from_items(kg, &overall_items(&aligned, kg)),
        stage1: rows_from_items(kg, &stage1_items),
        stage2: rows_from_items(kg, &stage2_items),
    })
}

/// Statistics for statements containing one word; overlaps freely with
/// the keyword groups.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeStats {
    pub word: String,
    pub n: usize,
    pub size_pct: f64,
    pub acc_pct: f64,
    pub er_pct: f64,
}

pub fn keyword_probe(d: &Dataset, preds: &[Prediction], word: &str) -> Result<ProbeStats> {
    let aligned = align_predictions(d, preds)?;
    let needle = word.to_lowercase();
    let total = aligned.len();
    let hits: Vec<&Aligned<'_>> = aligned
        .iter()
        .filter(|a| tokenize(&a.statement.text).contains(&needle))
        .collect();

    if hits.is_empty() || total == 0 {
        return Ok(ProbeStats {
            word: word.to_string(),
            n: 0,
            size_pct: 0.0,
            acc_pct: 0.0,
            er_pct: 0.0,
        });
    }
    let size_pct = hits.len() as f64 / total as f64 * 100.0;
    let correct = hits.iter().filter(|a| a.gold == a.pred).count();
    let acc_pct = correct as f64 / hits.len() as f64 * 100.0;
    Ok(ProbeStats {
        word: word.to_string(),
        n: hits.len(),
        size_pct,
        acc_pct,
        er_pct: er_contribution(size_pct, acc_pct),
    })
}
