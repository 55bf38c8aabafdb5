//! Statement scorers: external logit files, a constant majority baseline,
//! and a lexical-overlap stand-in that lets the full pipeline run with no
//! trained models.
//!
//! Logit sign conventions: Stage 1 positive means "non-neutral", Stage 2
//! positive means "entailed". Scorers only produce logits; thresholding
//! lives in the cascade.

use std::collections::BTreeSet;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::ingest::{load_scoreset, ScoreSet, Stage};
use crate::model::{Dataset, Statement, Table};

/// Constant logit magnitude for the majority scorer. Larger than any sane
/// threshold, so the majority decision always clears the gate.
pub const MAJORITY_LOGIT: f64 = 1e6;

/// Tokens treated as negation markers by the Stage-2 overlap scorer.
pub const NEGATION_LEXICON: [&str; 7] = ["no", "not", "none", "never", "without", "fewer", "less"];

/// One source of logits for one stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScorerSpec {
    pub kind: ScorerKind,
    pub stage: Stage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScorerKind {
    /// A `.logits` file produced elsewhere; the model id is the file stem.
    ExternalFile(PathBuf),
    /// Constant scorer: always the positive class if `positive`, else
    /// always the negative class.
    Majority { positive: bool },
    /// Deterministic token-overlap heuristic.
    LexicalOverlap,
}

/// External logit sets grouped by the stage they feed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StageScores {
    pub stage1: Vec<ScoreSet>,
    pub stage2: Vec<ScoreSet>,
}

/// Lowercased alphanumeric tokens of `text` as a set.
pub(crate) fn tokenize(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

fn table_tokens(t: &Table) -> BTreeSet<String> {
    let mut tokens = tokenize(&t.caption);
    for h in &t.header {
        tokens.extend(tokenize(h));
    }
    for row in &t.rows {
        for cell in row {
            tokens.extend(tokenize(cell));
        }
    }
    tokens
}

/// Fraction of `of` covered by `by`; 0 when `of` is empty.
fn coverage(of: &BTreeSet<String>, by: &BTreeSet<String>) -> f64 {
    if of.is_empty() {
        return 0.0;
    }
    let hits = of.iter().filter(|t| by.contains(*t)).count();
    hits as f64 / of.len() as f64
}

/// Score one statement against its table by token overlap.
///
/// Stage 1: `8·(J − 0.5)` where J is the fraction of statement tokens
/// found anywhere in the table (caption, header, cells); full overlap
/// scores +4, zero overlap −4. Stage 2: `8·(J⁺ − J⁻)` where J⁺ is the
/// same coverage restricted to non-negation statement tokens and J⁻ is
/// the fraction of statement tokens drawn from the negation lexicon, so
/// negated statements always score strictly lower than their positive
/// twins. Pure and bit-exact; range within [−8, 8].
pub fn score_overlap(s: &Statement, t: &Table, stage: Stage) -> f64 {
    let statement_tokens = tokenize(&s.text);
    let table_tokens = table_tokens(t);
    match stage {
        Stage::One => {
            let j = coverage(&statement_tokens, &table_tokens);
            8.0 * (j - 0.5)
        }
        Stage::Two => {
            let negations: BTreeSet<String> =
                NEGATION_LEXICON.iter().map(|w| w.to_string()).collect();
            let positive_tokens: BTreeSet<String> = statement_tokens
                .iter()
                .filter(|t| !negations.contains(*t))
                .cloned()
                .collect();
            let j_pos = coverage(&positive_tokens, &table_tokens);
            let j_neg = if statement_tokens.is_empty() {
                0.0
            } else {
                let negated = statement_tokens
                    .iter()
                    .filter(|t| negations.contains(*t))
                    .count();
                negated as f64 / statement_tokens.len() as f64
            };
            8.0 * (j_pos - j_neg)
        }
    }
}

/// Constant scorer covering every statement: `+10^6` when `positive`,
/// `−10^6` otherwise.
pub fn score_majority(d: &Dataset, stage: Stage, positive: bool) -> ScoreSet {
    let logit = if positive { MAJORITY_LOGIT } else { -MAJORITY_LOGIT };
    let model_id = if positive { "majority+" } else { "majority-" };
    let mut set = ScoreSet::new(stage, model_id);
    for s in &d.statements {
        set.scores.insert(s.id.clone(), logit);
    }
    set
}

/// Run the overlap scorer over a whole dataset.
pub fn score_overlap_all(d: &Dataset, stage: Stage) -> Result<ScoreSet> {
    let mut set = ScoreSet::new(stage, "overlap");
    for s in &d.statements {
        let table = d.table_for(s).ok_or_else(|| Error::UnknownStatement {
            id: s.id.clone(),
            context: "scoring (statement's table is missing)".to_string(),
        })?;
        set.scores.insert(s.id.clone(), score_overlap(s, table, stage));
    }
    Ok(set)
}

fn materialize(spec: &ScorerSpec, d: &Dataset) -> Result<ScoreSet> {
    match &spec.kind {
        ScorerKind::ExternalFile(path) => load_scoreset(path, spec.stage),
        ScorerKind::Majority { positive } => Ok(score_majority(d, spec.stage, *positive)),
        ScorerKind::LexicalOverlap => score_overlap_all(d, spec.stage),
    }
}

/// Resolve every scorer spec, verify full coverage of the dataset, and
/// group the results by stage. Each stage must end up with at least one
/// scorer, and no scorer may miss a statement: a silent default logit
/// would corrupt ensemble medians downstream.
pub fn collect_scores(specs: &[ScorerSpec], d: &Dataset) -> Result<StageScores> {
    let mut out = StageScores::default();
    for spec in specs {
        let set = materialize(spec, d)?;
        for s in &d.statements {
            if !set.scores.contains_key(&s.id) {
                return Err(Error::CoverageGap {
                    model_id: set.model_id.clone(),
                    statement_id: s.id.clone(),
                });
            }
        }
        match spec.stage {
            Stage::One => out.stage1.push(set),
            Stage::Two => out.stage2.push(set),
        }
    }
    if out.stage1.is_empty() {
        return Err(Error::NoScorers { stage: Stage::One.to_string() });
    }
    if out.stage2.is_empty() {
        return Err(Error::NoScorers { stage: Stage::Two.to_string() });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::write_scoreset;
    use crate::model::Label;
    use tempfile::tempdir;

    fn dataset() -> Dataset {
        let t = Table::new(
            "t1",
            "league results",
            vec!["team".into(), "points".into()],
            vec![
                vec!["alpha".into(), "10".into()],
                vec!["beta".into(), "7".into()],
            ],
        );
        Dataset::from_parts(
            vec![t],
            vec![
                Statement::new("s1", "t1", "alpha 10", Some(Label::Entailed)),
                Statement::new("s2", "t1", "gamma delta", Some(Label::Refuted)),
            ],
        )
    }

    #[test]
    fn full_overlap_scores_plus_four_at_stage_one() {
        let d = dataset();
        let s = d.statement("s1").unwrap();
        let t = d.table("t1").unwrap();
        assert_eq!(score_overlap(s, t, Stage::One), 4.0);
    }

    #[test]
    fn zero_overlap_scores_minus_four_at_stage_one() {
        let d = dataset();
        let s = d.statement("s2").unwrap();
        let t = d.table("t1").unwrap();
        assert_eq!(score_overlap(s, t, Stage::One), -4.0);
    }

    #[test]
    fn negation_strictly_lowers_the_stage_two_logit() {
        let d = dataset();
        let t = d.table("t1").unwrap();
        let tables = [
            t.clone(),
            // A table that itself contains "not": the rule must still hold.
            Table::new(
                "t2",
                "not applicable",
                vec!["c".into()],
                vec![vec!["not".into()]],
            ),
        ];
        for table in &tables {
            let plain = Statement::new("a", &table.id, "alpha is beta", None);
            let negated = Statement::new("b", &table.id, "alpha is not beta", None);
            let lo = score_overlap(&negated, table, Stage::Two);
            let hi = score_overlap(&plain, table, Stage::Two);
            assert!(lo < hi, "table {}: {lo} !< {hi}", table.id);
        }
    }

    #[test]
    fn overlap_is_pure_and_bounded() {
        let d = dataset();
        let t = d.table("t1").unwrap();
        for s in &d.statements {
            for stage in [Stage::One, Stage::Two] {
                let a = score_overlap(s, t, stage);
                let b = score_overlap(s, t, stage);
                assert_eq!(a.to_bits(), b.to_bits());
                assert!((-8.0..=8.0).contains(&a));
            }
        }
    }

    #[test]
    fn majority_scorer_is_constant_and_covers_everything() {
        let d = dataset();
        let pos = score_majority(&d, Stage::One, true);
        assert_eq!(pos.model_id, "majority+");
        assert!(pos.scores.values().all(|&l| l == MAJORITY_LOGIT));
        assert_eq!(pos.scores.len(), 2);

        let neg = score_majority(&d, Stage::Two, false);
        assert!(neg.scores.values().all(|&l| l == -MAJORITY_LOGIT));

        let empty = score_majority(&Dataset::new(), Stage::One, true);
        assert!(empty.scores.is_empty());
    }

    #[test]
    fn collect_scores_groups_by_stage() {
        let d = dataset();
        let specs = vec![
            ScorerSpec { kind: ScorerKind::LexicalOverlap, stage: Stage::One },
            ScorerSpec { kind: ScorerKind::Majority { positive: true }, stage: Stage::One },
            ScorerSpec { kind: ScorerKind::LexicalOverlap, stage: Stage::Two },
        ];
        let grouped = collect_scores(&specs, &d).unwrap();
        assert_eq!(grouped.stage1.len(), 2);
        assert_eq!(grouped.stage2.len(), 1);
    }

    #[test]
    fn collect_scores_rejects_coverage_gaps_and_empty_stages() {
        let d = dataset();
        let dir = tempdir().unwrap();
        let path = dir.path().join("partial.logits");
        let mut partial = ScoreSet::new(Stage::One, "partial");
        partial.scores.insert("s1".into(), 1.0);
        write_scoreset(&path, &partial).unwrap();

        let specs = vec![
            ScorerSpec { kind: ScorerKind::ExternalFile(path), stage: Stage::One },
            ScorerSpec { kind: ScorerKind::LexicalOverlap, stage: Stage::Two },
        ];
        match collect_scores(&specs, &d) {
            Err(Error::CoverageGap { model_id, statement_id }) => {
                assert_eq!(model_id, "partial");
                assert_eq!(statement_id, "s2");
            }
            other => panic!("expected coverage gap, got {other:?}"),
        }

        let only_stage1 = vec![ScorerSpec {
            kind: ScorerKind::LexicalOverlap,
            stage: Stage::One,
        }];
        assert!(matches!(
            collect_scores(&only_stage1, &d),
            Err(Error::NoScorers { stage }) if stage == "stage2"
        ));
    }

    #[test]
    fn external_files_keep_exact_logits_and_file_stem_ids() {
        let d = dataset();
        let dir = tempdir().unwrap();
        let path = dir.path().join("run3.logits");
        let mut set = ScoreSet::new(Stage::Two, "ignored");
        set.scores.insert("s1".into(), 2.25);
        set.scores.insert("s2".into(), -3.5);
        write_scoreset(&path, &set).unwrap();

        let specs = vec![
            ScorerSpec { kind: ScorerKind::Majority { positive: true }, stage: Stage::One },
            ScorerSpec { kind: ScorerKind::ExternalFile(path), stage: Stage::Two },
        ];
        let grouped = collect_scores(&specs, &d).unwrap();
        assert_eq!(grouped.stage2[0].model_id, "run3");
        assert_eq!(grouped.stage2[0].get("s1"), Some(2.25));
        assert_eq!(grouped.stage2[0].get("s2"), Some(-3.5));
    }
}
