//! Command-line interface: thin wrappers that wire file loading into the
//! library operations and write results atomically.
//!
//! Every value flag can also come from a `--config` TOML manifest; a flag
//! given on the command line always wins over the manifest.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::cascade::{self, CascadeConfig};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::ingest::{self, ScoreSet, Stage};
use crate::metrics::{
    align_predictions, confusion_3way, confusion_stage1, confusion_stage2, evaluate,
    precision_recall, Aggregation,
};
use crate::model::{BinaryLabel, Dataset, EvidencePrediction};
use crate::report;
use crate::scoring;
use crate::slices::{keyword_probe, stage_slice_views, KeywordGroups};
use crate::synth;

#[derive(Debug, Parser)]
#[command(
    name = "tabver",
    version,
    about = "Two-stage table entailment pipeline: synthesize neutral training data, \
             ensemble statement scorers, calibrate thresholds, and evaluate per-table micro-F1"
)]
pub struct Cli {
    /// TOML manifest supplying defaults for any unset flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Pair statements with foreign tables.
    RandomPairing,
    /// Delete majority-evidence columns.
    ColumnRemoval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerArg {
    /// Token-overlap heuristic scorer.
    Overlap,
    /// Constant positive-class logit (+10^6).
    MajorityPositive,
    /// Constant negative-class logit (-10^6).
    MajorityNegative,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a dataset file against every structural invariant.
    Validate {
        #[arg(long, value_name = "TVD")]
        dataset: Option<PathBuf>,
    },

    /// Generate artificial neutral examples as a dataset file.
    SynthNeutrals {
        #[arg(long, value_name = "TVD")]
        dataset: Option<PathBuf>,
        /// Which neutral source to run.
        #[arg(long, value_enum)]
        kind: SynthKind,
        /// Number of examples (random pairing only).
        #[arg(long)]
        n: Option<usize>,
        /// RNG seed (random pairing only; default 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Evidence prediction files (column removal only).
        #[arg(long, value_name = "EVD", num_args = 1..)]
        evidence: Vec<PathBuf>,
        #[arg(long, value_name = "TVD")]
        out: Option<PathBuf>,
    },

    /// Build the balanced neutral-gate training set.
    #[command(name = "stage1-trainset")]
    Stage1Trainset {
        #[arg(long, value_name = "TVD")]
        dataset: Option<PathBuf>,
        /// Column-removal pool produced by synth-neutrals.
        #[arg(long, value_name = "TVD")]
        pool: Option<PathBuf>,
        /// RNG seed (default 0).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "TVD")]
        out: Option<PathBuf>,
    },

    /// Run a built-in scorer and write a logit file.
    Score {
        #[arg(long, value_name = "TVD")]
        dataset: Option<PathBuf>,
        #[arg(long, value_enum)]
        scorer: ScorerArg,
        /// Which stage the logits feed: stage1 or stage2.
        #[arg(long)]
        stage: String,
        #[arg(long, value_name = "LOGITS")]
        out: Option<PathBuf>,
    },

    /// Median-ensemble logit files and apply the two-stage cascade.
    Predict {
        #[arg(long, value_name = "TVD")]
        dataset: Option<PathBuf>,
        #[arg(long, value_name = "LOGITS", num_args = 1..)]
        stage1_logits: Vec<PathBuf>,
        #[arg(long, value_name = "LOGITS", num_args = 1..)]
        stage2_logits: Vec<PathBuf>,
        /// Stage-1 threshold (default 4.0).
        #[arg(long, allow_negative_numbers = true)]
        tau1: Option<f64>,
        /// Stage-2 threshold (default 4.0).
        #[arg(long, allow_negative_numbers = true)]
        tau2: Option<f64>,
        #[arg(long, value_name = "PRED")]
        out: Option<PathBuf>,
    },

    /// Score a prediction file: per-table micro-F1 and confusion matrices.
    Evaluate {
        #[arg(long, value_name = "TVD")]
        dataset: Option<PathBuf>,
        #[arg(long, value_name = "PRED")]
        pred: Option<PathBuf>,
        /// Aggregation: per-table (default) or global.
        #[arg(long)]
        agg: Option<String>,
        /// Optional structured JSONL output path.
        #[arg(long, value_name = "JSONL")]
        out: Option<PathBuf>,
    },

    /// Keyword-group error analysis over a prediction file.
    Slices {
        #[arg(long, value_name = "TVD")]
        dataset: Option<PathBuf>,
        #[arg(long, value_name = "PRED")]
        pred: Option<PathBuf>,
        /// Keyword group config; bundled defaults when omitted.
        #[arg(long, value_name = "KW")]
        keywords: Option<PathBuf>,
        /// Extra single-keyword probes (repeatable).
        #[arg(long, value_name = "WORD")]
        probe: Vec<String>,
        /// Optional output path for the rendered report.
        #[arg(long, value_name = "TSV")]
        out: Option<PathBuf>,
    },

    /// Evaluate the cascade over a threshold grid.
    Sweep {
        #[arg(long, value_name = "TVD")]
        dataset: Option<PathBuf>,
        #[arg(long, value_name = "LOGITS", num_args = 1..)]
        stage1_logits: Vec<PathBuf>,
        #[arg(long, value_name = "LOGITS", num_args = 1..)]
        stage2_logits: Vec<PathBuf>,
        /// Comma-separated tau1 values, e.g. "-2,0,2".
        #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
        tau1_grid: String,
        /// Comma-separated tau2 values.
        #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
        tau2_grid: String,
        #[arg(long)]
        agg: Option<String>,
        /// Optional output path for the rendered table.
        #[arg(long, value_name = "TSV")]
        out: Option<PathBuf>,
    },
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing '--{flag}' (set the flag or the config key)")))
}

fn parse_stage(s: &str) -> Result<Stage> {
    s.parse().map_err(Error::Config)
}

fn parse_agg(flag: Option<String>, cfg: &RunConfig) -> Result<Aggregation> {
    match flag.or_else(|| cfg.agg.clone()) {
        Some(s) => s.parse().map_err(Error::Config),
        None => Ok(Aggregation::default()),
    }
}

fn parse_grid(text: &str, flag: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = text
        .split(',')
        .map(|part| {
            let part = part.trim();
            part.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::Config(format!("--{flag}: '{part}' is not a finite number"))
                })
        })
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(Error::Config(format!("--{flag}: empty grid")));
    }
    Ok(values)
}

fn load_dataset_arg(flag: Option<PathBuf>, cfg: &RunConfig) -> Result<Dataset> {
    let path = require(flag.or_else(|| cfg.dataset.clone()), "dataset")?;
    ingest::load_dataset(&path)
}

fn load_logit_files(
    flag: Vec<PathBuf>,
    cfg_paths: &Option<Vec<PathBuf>>,
    stage: Stage,
    flag_name: &str,
) -> Result<Vec<ScoreSet>> {
    let paths = if flag.is_empty() {
        cfg_paths.clone().unwrap_or_default()
    } else {
        flag
    };
    if paths.is_empty() {
        return Err(Error::Config(format!(
            "missing '--{flag_name}' (set the flag or the config key)"
        )));
    }
    paths
        .iter()
        .map(|p| ingest::load_scoreset(p, stage))
        .collect()
}

fn load_keyword_groups(flag: Option<PathBuf>, cfg: &RunConfig) -> Result<KeywordGroups> {
    match flag.or_else(|| cfg.keywords.clone()) {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            KeywordGroups::parse(&text)
        }
        None => Ok(KeywordGroups::builtin()),
    }
}

fn binary_gold_map(d: &Dataset) -> BTreeMap<String, BinaryLabel> {
    d.statements
        .iter()
        .filter_map(|s| {
            let gold = BinaryLabel::try_from(s.gold?).ok()?;
            Some((s.id.clone(), gold))
        })
        .collect()
}

fn emit(out: Option<PathBuf>, text: &str) -> Result<()> {
    print!("{text}");
    if let Some(path) = out {
        ingest::write_atomic(&path, text.as_bytes())?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };

    match cli.command {
        Command::Validate { dataset } => {
            let path = require(dataset.or_else(|| cfg.dataset.clone()), "dataset")?;
            let (d, violations) = ingest::load_dataset_lenient(&path)?;
            if violations.is_empty() {
                println!("ok: {} tables, {} statements", d.tables.len(), d.statements.len());
                Ok(())
            } else {
                // The Validation error prints every violation on exit.
                Err(Error::Validation(violations))
            }
        }

        Command::SynthNeutrals { dataset, kind, n, seed, evidence, out } => {
            let d = load_dataset_arg(dataset, &cfg)?;
            let out_path = require(out.or_else(|| cfg.out.clone()), "out")?;
            let examples = match kind {
                SynthKind::RandomPairing => {
                    let n = require(n, "n")?;
                    let seed = seed.or(cfg.seed).unwrap_or(0);
                    synth::pair_random_neutrals(&d, n, seed)?
                }
                SynthKind::ColumnRemoval => {
                    if evidence.is_empty() {
                        return Err(Error::Config(
                            "column removal needs at least one '--evidence' file".to_string(),
                        ));
                    }
                    let mut preds: Vec<EvidencePrediction> = Vec::new();
                    for path in &evidence {
                        preds.extend(ingest::load_evidence_predictions(path, &d)?);
                    }
                    synth::gen_column_removal_neutrals(&d, &preds, &binary_gold_map(&d))?
                }
            };
            let pool = synth::pool_to_dataset(&examples, &d);
            ingest::write_dataset(&out_path, &pool)?;
            println!(
                "wrote {} neutral examples ({} tables) to {}",
                pool.statements.len(),
                pool.tables.len(),
                out_path.display()
            );
            Ok(())
        }

        Command::Stage1Trainset { dataset, pool, seed, out } => {
            let d = load_dataset_arg(dataset, &cfg)?;
            let pool_path = require(pool, "pool")?;
            let out_path = require(out.or_else(|| cfg.out.clone()), "out")?;
            let seed = seed.or(cfg.seed).unwrap_or(0);

            let pool_dataset = ingest::load_dataset(&pool_path)?;
            let pool = synth::pool_from_dataset(&pool_dataset)?;
            let trainset = synth::build_stage1_trainset(&d, &pool, seed)?;
            ingest::write_dataset(&out_path, &trainset)?;
            println!(
                "wrote {} statements ({} tables) to {}",
                trainset.statements.len(),
                trainset.tables.len(),
                out_path.display()
            );
            Ok(())
        }

        Command::Score { dataset, scorer, stage, out } => {
            let d = load_dataset_arg(dataset, &cfg)?;
            let stage = parse_stage(&stage)?;
            let out_path = require(out.or_else(|| cfg.out.clone()), "out")?;
            let scores = match scorer {
                ScorerArg::Overlap => scoring::score_overlap_all(&d, stage)?,
                ScorerArg::MajorityPositive => scoring::score_majority(&d, stage, true),
                ScorerArg::MajorityNegative => scoring::score_majority(&d, stage, false),
            };
            ingest::write_scoreset(&out_path, &scores)?;
            println!(
                "wrote {} {} logits to {}",
                scores.scores.len(),
                stage,
                out_path.display()
            );
            Ok(())
        }

        Command::Predict { dataset, stage1_logits, stage2_logits, tau1, tau2, out } => {
            let d = load_dataset_arg(dataset, &cfg)?;
            let out_path = require(out.or_else(|| cfg.out.clone()), "out")?;
            let s1 = load_logit_files(stage1_logits, &cfg.stage1_logits, Stage::One, "stage1-logits")?;
            let s2 = load_logit_files(stage2_logits, &cfg.stage2_logits, Stage::Two, "stage2-logits")?;
            let default = CascadeConfig::default();
            let cascade_cfg = CascadeConfig {
                tau1: tau1.or(cfg.tau1).unwrap_or(default.tau1),
                tau2: tau2.or(cfg.tau2).unwrap_or(default.tau2),
            };
            let preds = cascade::predict_all(&s1, &s2, &cascade_cfg, &d)?;
            cascade::write_predictions(&out_path, &preds)?;
            println!("wrote {} predictions to {}", preds.len(), out_path.display());
            Ok(())
        }

        Command::Evaluate { dataset, pred, agg, out } => {
            let d = load_dataset_arg(dataset, &cfg)?;
            let pred_path = require(pred, "pred")?;
            let agg = parse_agg(agg, &cfg)?;
            let preds = cascade::load_predictions(&pred_path)?;
            let eval = evaluate(&d, &preds, agg)?;

            let mut text = report::render_eval(&eval);
            let aligned = align_predictions(&d, &preds)?;
            for (title, m) in [
                ("overall (3-class)", confusion_3way(&aligned)),
                ("stage 1 (neutral gate)", confusion_stage1(&aligned)),
                ("stage 2 (both non-neutral)", confusion_stage2(&aligned)),
            ] {
                text.push('\n');
                text.push_str(&report::render_confusion(title, &m, &precision_recall(&m)));
            }
            print!("{text}");
            if let Some(path) = out.or_else(|| cfg.out.clone()) {
                ingest::write_atomic(&path, report::eval_to_jsonl(&eval).as_bytes())?;
            }
            Ok(())
        }

        Command::Slices { dataset, pred, keywords, probe, out } => {
            let d = load_dataset_arg(dataset, &cfg)?;
            let pred_path = require(pred, "pred")?;
            let kg = load_keyword_groups(keywords, &cfg)?;
            let preds = cascade::load_predictions(&pred_path)?;

            let views = stage_slice_views(&d, &preds, &kg)?;
            let mut text = report::render_slice_views(&views);
            if !probe.is_empty() {
                let stats = probe
                    .iter()
                    .map(|word| keyword_probe(&d, &preds, word))
                    .collect::<Result<Vec<_>>>()?;
                text.push('\n');
                text.push_str(&report::render_probes(&stats));
            }
            emit(out.or_else(|| cfg.out.clone()), &text)
        }

        Command::Sweep {
            dataset,
            stage1_logits,
            stage2_logits,
            tau1_grid,
            tau2_grid,
            agg,
            out,
        } => {
            let d = load_dataset_arg(dataset, &cfg)?;
            let agg = parse_agg(agg, &cfg)?;
            let s1 = load_logit_files(stage1_logits, &cfg.stage1_logits, Stage::One, "stage1-logits")?;
            let s2 = load_logit_files(stage2_logits, &cfg.stage2_logits, Stage::Two, "stage2-logits")?;
            let tau1s = parse_grid(&tau1_grid, "tau1-grid")?;
            let tau2s = parse_grid(&tau2_grid, "tau2-grid")?;
            let grid: Vec<(f64, f64)> = tau1s
                .iter()
                .flat_map(|&t1| tau2s.iter().map(move |&t2| (t1, t2)))
                .collect();
            let rows = cascade::sweep(&s1, &s2, &d, &grid, agg)?;
            emit(out.or_else(|| cfg.out.clone()), &report::render_sweep(&rows))
        }
    }
}
