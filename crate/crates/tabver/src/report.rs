//! Report rendering: fixed-decimal percentage formatting and the
//! tab-separated / JSONL views of evaluation results.
//!
//! Numbers cross module boundaries as raw fractions or raw percents;
//! rounding happens exactly once, here, with half-up semantics.

use std::fmt::Write as _;

use serde::Serialize;

use crate::cascade::SweepRow;
use crate::ingest::format_logit;
use crate::metrics::{ClassPr, ConfusionMatrix, EvalReport};
use crate::slices::{ProbeStats, SliceRow, SliceViews};

/// Round a non-negative value half-up to `decimals` places. The small
/// epsilon keeps values that decimal arithmetic left just under a .5
/// boundary (e.g. 2.4999999999) from rounding down.
pub fn round_half_up(x: f64, decimals: u32) -> f64 {
    let p = 10f64.powi(decimals as i32);
    (x * p + 0.5 + 1e-9).floor() / p
}

/// Format a raw percent with half-up rounding at fixed decimals.
pub fn fmt_pct(pct: f64, decimals: u32) -> String {
    format!("{:.*}", decimals as usize, round_half_up(pct, decimals))
}

/// Fraction in [0,1] as a 2-decimal percent, the F1 display convention.
pub fn fmt_f1(frac: f64) -> String {
    fmt_pct(frac * 100.0, 2)
}

fn fmt_opt_f1(frac: Option<f64>) -> String {
    frac.map(fmt_f1).unwrap_or_else(|| "NA".to_string())
}

/// Per-table scores and aggregates as a tab-separated table.
pub fn render_eval(report: &EvalReport) -> String {
    let mut out = String::new();
    writeln!(out, "table\tn\tn_2way\tf1_2way\tf1_3way").unwrap();
    for (table_id, scores) in &report.per_table {
        writeln!(
            out,
            "{table_id}\t{}\t{}\t{}\t{}",
            scores.n,
            scores.counted_2way,
            fmt_opt_f1(scores.f1_2way),
            fmt_f1(scores.f1_3way)
        )
        .unwrap();
    }
    writeln!(
        out,
        "aggregate[{}]\t\t\t{}\t{}",
        report.aggregation,
        fmt_opt_f1(report.aggregate_2way),
        fmt_f1(report.aggregate_3way)
    )
    .unwrap();
    out
}

#[derive(Serialize)]
struct TableLine<'a> {
    kind: &'static str,
    table_id: &'a str,
    n: usize,
    n_2way: usize,
    f1_2way: Option<f64>,
    f1_3way: f64,
}

#[derive(Serialize)]
struct AggregateLine<'a> {
    kind: &'static str,
    aggregation: &'a str,
    f1_2way: Option<f64>,
    f1_3way: f64,
}

/// Line-delimited JSON mirror of an evaluation report, raw fractions
/// unrounded so downstream tooling can do its own formatting.
pub fn eval_to_jsonl(report: &EvalReport) -> String {
    let mut out = String::new();
    for (table_id, scores) in &report.per_table {
        let line = TableLine {
            kind: "table",
            table_id,
            n: scores.n,
            n_2way: scores.counted_2way,
            f1_2way: scores.f1_2way,
            f1_3way: scores.f1_3way,
        };
        writeln!(out, "{}", serde_json::to_string(&line).unwrap()).unwrap();
    }
    let agg = AggregateLine {
        kind: "aggregate",
        aggregation: report.aggregation.as_str(),
        f1_2way: report.aggregate_2way,
        f1_3way: report.aggregate_3way,
    };
    writeln!(out, "{}", serde_json::to_string(&agg).unwrap()).unwrap();
    out
}

/// Confusion matrix with a recall column and a precision row, percents at
/// one decimal.
pub fn render_confusion(title: &str, m: &ConfusionMatrix, pr: &[ClassPr]) -> String {
    let mut out = String::new();
    write!(out, "# {title}\ngold\\pred").unwrap();
    for class in &m.classes {
        write!(out, "\t{class}").unwrap();
    }
    writeln!(out, "\trecall").unwrap();
    for (i, class) in m.classes.iter().enumerate() {
        write!(out, "{class}").unwrap();
        for count in &m.counts[i] {
            write!(out, "\t{count}").unwrap();
        }
        writeln!(out, "\t{}", fmt_pct(pr[i].recall_pct, 1)).unwrap();
    }
    write!(out, "precision").unwrap();
    for p in pr {
        write!(out, "\t{}", fmt_pct(p.precision_pct, 1)).unwrap();
    }
    writeln!(out).unwrap();
    out
}

fn render_slice_rows(title: &str, rows: &[SliceRow]) -> String {
    let mut out = String::new();
    writeln!(out, "# {title}\ngroup\tn\tsize\tacc\tbaseline\ter").unwrap();
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.group,
            r.n,
            fmt_pct(r.size_pct, 1),
            fmt_pct(r.acc_pct, 1),
            fmt_pct(r.baseline_pct, 1),
            fmt_pct(r.er_pct, 1)
        )
        .unwrap();
    }
    out
}

/// The three slice views as consecutive tab-separated tables.
pub fn render_slice_views(views: &SliceViews) -> String {
    let mut out = render_slice_rows("overall (3-class)", &views.overall);
    out.push('\n');
    out.push_str(&render_slice_rows(
        "stage 1 (neutral vs non-neutral)",
        &views.stage1,
    ));
    out.push('\n');
    out.push_str(&render_slice_rows(
        "stage 2 (entailed vs refuted, both-non-neutral)",
        &views.stage2,
    ));
    out
}

pub fn render_probes(probes: &[ProbeStats]) -> String {
    let mut out = String::new();
    writeln!(out, "# keyword probes\nword\tn\tsize\tacc\ter").unwrap();
    for p in probes {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            p.word,
            p.n,
            fmt_pct(p.size_pct, 1),
            fmt_pct(p.acc_pct, 1),
            fmt_pct(p.er_pct, 1)
        )
        .unwrap();
    }
    out
}

pub fn render_sweep(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    writeln!(out, "tau1\ttau2\tf1_2way\tf1_3way").unwrap();
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            format_logit(r.tau1),
            format_logit(r.tau2),
            fmt_opt_f1(r.f1_2way),
            fmt_f1(r.f1_3way)
        )
        .unwrap();
    }
    out
}
