//! `mteval`: command-line front end for the metric data pipeline.
//!
//! Every subcommand writes its artifacts and a `<command>.manifest.json` into
//! the output directory. Logs go to standard error.

mod config;
mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use mteval_core::baseline::{score_ratings, BaselineScorer};
use mteval_core::challenge::{
    build_challenge, challenge_inputs, evaluate_challenge, load_pairs, render_challenge_table, save_pairs,
    score_challenge, ChallengeReport, ChallengeScores,
};
use mteval_core::corpus::{
    load_ratings, load_scores, ratings_to_jsonl, save_scores, Format, LanguagePair, RatedSegment, RatingKind,
};
use mteval_core::metaeval::{evaluate, render_table, EvalReport};
use mteval_core::mixture::{assemble, save_mixture, InputMode};
use mteval_core::ratings::{aggregate_per_segment, znormalize_per_rater};
use mteval_core::selection::{rank, render_ranking, CheckpointEval};
use mteval_core::synthgen::{counts_by_category_lp, load_examples, sample_plan, save_examples};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::manifest::Run;

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "mteval",
    version,
    about = "Data pipeline and meta-evaluation for learned MT metrics"
)]
struct Cli {
    /// Flat `key = value` config file with a `version` key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (also MTEVAL_OUTPUT_DIR).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override a config key, e.g. `--set synth.duplication_label=15`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a ratings file and write it as canonical JSONL.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// tsv or jsonl; guessed from the extension when omitted.
        #[arg(long)]
        format: Option<Format>,
    },
    /// Z-normalize DA ratings per rater, then average ratings per segment.
    Normalize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        format: Option<Format>,
    },
    /// Generate synthetic failure-mode examples.
    Synth {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        format: Option<Format>,
    },
    /// Build paired challenge examples.
    BuildChallenge {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        format: Option<Format>,
        /// Also export serialized inputs for both sides in this mode.
        #[arg(long)]
        export_mode: Option<InputMode>,
    },
    /// Assemble a stage-1 or stage-2 training mixture.
    Mix {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        stage: u8,
        /// Normalized DA ratings for stage 1, MQM ratings for stage 2.
        #[arg(long)]
        ratings: Option<PathBuf>,
        /// Raw DA ratings mixed into stage 2.
        #[arg(long)]
        da: Option<PathBuf>,
        #[arg(long)]
        synthetic: Option<PathBuf>,
    },
    /// Score ratings or challenge pairs with the lexical baseline.
    ScoreBaseline {
        #[arg(long, required_unless_present = "challenge")]
        ratings: Option<PathBuf>,
        #[arg(long)]
        challenge: Option<PathBuf>,
    },
    /// Meta-evaluate metric scores against aggregated human ratings.
    Eval {
        #[arg(long)]
        ratings: PathBuf,
        /// One score file per language pair.
        #[arg(long, required = true, num_args = 1..)]
        scores: Vec<PathBuf>,
        #[arg(long, default_value = "metric")]
        name: String,
    },
    /// Accuracy per category on a challenge set.
    ChallengeEval {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value = "metric")]
        name: String,
    },
    /// Pick the best checkpoint from a directory of eval reports named
    /// `<checkpoint>.json`.
    SelectCheckpoint {
        #[arg(long)]
        reports: PathBuf,
    },
    /// Combine saved reports into text tables. Arguments are `NAME=PATH` or
    /// a bare path named after its file stem.
    Report {
        #[arg(long, num_args = 1..)]
        eval: Vec<String>,
        #[arg(long, num_args = 1..)]
        challenge: Vec<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Normalize { .. } => "normalize",
            Command::Synth { .. } => "synth",
            Command::BuildChallenge { .. } => "build-challenge",
            Command::Mix { .. } => "mix",
            Command::ScoreBaseline { .. } => "score-baseline",
            Command::Eval { .. } => "eval",
            Command::ChallengeEval { .. } => "challenge-eval",
            Command::SelectCheckpoint { .. } => "select-checkpoint",
            Command::Report { .. } => "report",
        }
    }
}

fn effective_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            PipelineConfig::from_text(&text).with_context(|| format!("config {}", path.display()))?
        }
        None => PipelineConfig::default(),
    };
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
        config.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    if let Some(dir) = &cli.output_dir {
        config.output_dir = Some(dir.clone());
    } else if let Some(dir) = std::env::var_os("MTEVAL_OUTPUT_DIR") {
        config.output_dir = Some(PathBuf::from(dir));
    }
    Ok(config)
}

fn guess_format(path: &Path, explicit: Option<Format>) -> Format {
    explicit.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("tsv") => Format::Tsv,
        _ => Format::Jsonl,
    })
}

fn read_ratings(
    run: &mut Run,
    config: &PipelineConfig,
    path: &Path,
    format: Option<Format>,
) -> Result<Vec<RatedSegment>> {
    let records = load_ratings(&run.input(path), guess_format(path, format))?;
    let before = records.len();
    let kept: Vec<RatedSegment> = records.into_iter().filter(|r| config.keeps(&r.lp)).collect();
    if kept.len() < before {
        log::info!(
            "{}: language-pair filter kept {} of {before} records",
            path.display(),
            kept.len()
        );
    }
    Ok(kept)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn named(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((name, path)) => (name.to_string(), PathBuf::from(path)),
        None => {
            let path = PathBuf::from(arg);
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            (stem, path)
        }
    }
}

fn count_by_lp(run: &mut Run, prefix: &str, records: &[RatedSegment]) {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(format!("{prefix}{}", r.lp)).or_default() += 1;
    }
    run.counts.extend(counts);
}

fn run(cli: Cli) -> Result<()> {
    let config = effective_config(&cli)?;
    let output_dir = config.output_dir.clone().unwrap_or_else(|| PathBuf::from("mteval-out"));
    let mut run = Run::new(cli.command.name(), output_dir)?;
    let mut seed_used = None;

    match &cli.command {
        Command::Ingest { input, format } => {
            let records = read_ratings(&mut run, &config, input, *format)?;
            let out = run.output("ratings.jsonl")?;
            write_text(&out, &ratings_to_jsonl(&records)?)?;
            run.count("records", records.len());
            count_by_lp(&mut run, "records.", &records);
        }
        Command::Normalize { input, format } => {
            let records = read_ratings(&mut run, &config, input, *format)?;
            let (da, other): (Vec<_>, Vec<_>) = records.into_iter().partition(|r| r.rating_kind == RatingKind::DaRaw);
            let mut normalized = Vec::new();
            if !da.is_empty() {
                let z = znormalize_per_rater(&da)?;
                run.warn_all(z.warnings);
                normalized.extend(aggregate_per_segment(&z.value)?);
            }
            let mut by_kind: BTreeMap<&str, Vec<RatedSegment>> = BTreeMap::new();
            for r in other {
                by_kind.entry(r.rating_kind.as_str()).or_default().push(r);
            }
            for group in by_kind.values() {
                normalized.extend(aggregate_per_segment(group)?);
            }
            let out = run.output("normalized.jsonl")?;
            write_text(&out, &ratings_to_jsonl(&normalized)?)?;
            run.count("records", normalized.len());
            count_by_lp(&mut run, "records.", &normalized);
        }
        Command::Synth { input, format } => {
            let seed = config.require_seed()?;
            seed_used = Some(seed);
            let records = read_ratings(&mut run, &config, input, *format)?;
            let plan = sample_plan(&records, seed, &config.synth)?;
            run.warn_all(plan.warnings);
            let out = run.output("synthetic.jsonl")?;
            save_examples(&plan.value, &out)?;
            run.count("examples", plan.value.len());
            for ((category, lp), n) in counts_by_category_lp(&plan.value) {
                run.count(format!("{category}.{lp}"), n);
            }
        }
        Command::BuildChallenge {
            input,
            format,
            export_mode,
        } => {
            let seed = config.require_seed()?;
            seed_used = Some(seed);
            let records = read_ratings(&mut run, &config, input, *format)?;
            let pairs = build_challenge(&records, seed, &config.synth)?;
            run.warn_all(pairs.warnings);
            let out = run.output("challenge.jsonl")?;
            save_pairs(&pairs.value, &out)?;
            run.count("pairs", pairs.value.len());
            let mut per_category: BTreeMap<String, usize> = BTreeMap::new();
            for p in &pairs.value {
                *per_category.entry(p.category.to_string()).or_default() += 1;
            }
            run.counts.extend(per_category);
            if let Some(mode) = export_mode {
                let inputs = challenge_inputs(&pairs.value, *mode)?;
                let mut text = String::new();
                for i in &inputs {
                    text.push_str(&serde_json::to_string(i)?);
                    text.push('\n');
                }
                let out = run.output("challenge_inputs.jsonl")?;
                write_text(&out, &text)?;
            }
        }
        Command::Mix {
            stage,
            ratings,
            da,
            synthetic,
        } => {
            let seed = config.require_seed()?;
            seed_used = Some(seed);
            let mut records = Vec::new();
            if let Some(path) = ratings {
                records.extend(read_ratings(&mut run, &config, path, None)?);
            }
            if let Some(path) = da {
                if *stage == 1 {
                    bail!("--da only applies to stage 2");
                }
                records.extend(read_ratings(&mut run, &config, path, None)?);
            }
            if *stage == 2 && !records.iter().any(|r| r.rating_kind == RatingKind::Mqm) {
                bail!("stage 2 needs MQM ratings (--ratings with MQM records)");
            }
            let synthetic = match synthetic {
                Some(path) => load_examples(&run.input(path))?,
                None => Vec::new(),
            };
            let spec = config.mixture_spec(*stage, seed);
            let mixture = assemble(&records, &synthetic, &spec)?;
            run.warn_all(mixture.warnings);
            let out = run.output("mixture.jsonl")?;
            save_mixture(&spec, &mixture.value, &out)?;
            run.count("records", mixture.value.len());
            let mut by_source: BTreeMap<String, usize> = BTreeMap::new();
            for r in &mixture.value {
                *by_source.entry(format!("provenance.{}", r.provenance)).or_default() += 1;
                *by_source.entry(format!("mode.{}", r.mode.as_str())).or_default() += 1;
            }
            run.counts.extend(by_source);
        }
        Command::ScoreBaseline { ratings, challenge } => {
            let scorer = BaselineScorer {
                config: config.baseline,
            };
            if let Some(path) = ratings {
                let records = read_ratings(&mut run, &config, path, None)?;
                let mut lps: Vec<&LanguagePair> = records.iter().map(|r| &r.lp).collect();
                lps.sort();
                lps.dedup();
                for lp in lps {
                    let scores = score_ratings(&records, lp, &scorer)?;
                    run.warn_all(scores.warnings);
                    let out = run.output(&format!("scores.{lp}.jsonl"))?;
                    save_scores(&scores.value, &out)?;
                    run.count(format!("scores.{lp}"), scores.value.len());
                }
            }
            if let Some(path) = challenge {
                let pairs = load_pairs(&run.input(path))?;
                let scores = score_challenge(&pairs, &scorer)?;
                let out = run.output("challenge_scores.jsonl")?;
                write_text(&out, &scores.to_jsonl()?)?;
                run.count("challenge_pairs", pairs.len());
            }
        }
        Command::Eval { ratings, scores, name } => {
            let records = read_ratings(&mut run, &config, ratings, None)?;
            let mut reports = Vec::new();
            for path in scores {
                let set = load_scores(&run.input(path))?;
                if !config.keeps(&set.lp) {
                    log::info!("skipping {} ({} is filtered out)", path.display(), set.lp);
                    continue;
                }
                let report = evaluate(&records, &set).with_context(|| format!("evaluating {}", path.display()))?;
                run.warn_all(report.warnings);
                reports.push(report.value);
            }
            let out = run.output("eval_report.json")?;
            write_json(&out, &reports)?;
            let out = run.output("eval_table.txt")?;
            write_text(&out, &render_table(&[(name.clone(), reports.clone())]))?;
            run.count("language_pairs", reports.len());
        }
        Command::ChallengeEval { pairs, scores, name } => {
            let pairs = load_pairs(&run.input(pairs))?;
            let text =
                fs::read_to_string(run.input(scores)).with_context(|| format!("reading {}", scores.display()))?;
            let scores = ChallengeScores::from_jsonl(&text)?;
            let report = evaluate_challenge(&pairs, &scores);
            run.warn_all(report.warnings);
            let out = run.output("challenge_report.json")?;
            write_json(&out, &report.value)?;
            let out = run.output("challenge_table.txt")?;
            write_text(&out, &render_challenge_table(&[(name.clone(), report.value.clone())]))?;
            for c in &report.value.categories {
                run.count(format!("{}.n", c.category), c.n);
                run.count(format!("{}.correct", c.category), c.correct);
            }
        }
        Command::SelectCheckpoint { reports } => {
            let mut files: Vec<PathBuf> = fs::read_dir(reports)
                .with_context(|| format!("listing {}", reports.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()
                .with_context(|| format!("listing {}", reports.display()))?;
            files.retain(|p| p.extension().is_some_and(|e| e == "json"));
            files.sort();
            if files.is_empty() {
                bail!("no <checkpoint>.json eval reports in {}", reports.display());
            }
            let mut evals = Vec::new();
            for path in files {
                let text =
                    fs::read_to_string(run.input(&path)).with_context(|| format!("reading {}", path.display()))?;
                let parsed: Vec<EvalReport> =
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                let id = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                evals.push(CheckpointEval::from_reports(id, &parsed));
            }
            let ranked = rank(&evals, &config.selection_lps)?;
            log::info!("best checkpoint: {}", ranked[0].0);
            #[derive(Serialize)]
            struct Selection<'a> {
                winner: &'a str,
                lps: &'a [LanguagePair],
                ranking: Vec<RankRow<'a>>,
            }
            #[derive(Serialize)]
            struct RankRow<'a> {
                checkpoint_id: &'a str,
                objective: f64,
            }
            let selection = Selection {
                winner: &ranked[0].0,
                lps: &config.selection_lps,
                ranking: ranked
                    .iter()
                    .map(|(id, objective)| RankRow {
                        checkpoint_id: id,
                        objective: *objective,
                    })
                    .collect(),
            };
            let out = run.output("selection.json")?;
            write_json(&out, &selection)?;
            let out = run.output("ranking.txt")?;
            write_text(&out, &render_ranking(&ranked))?;
            run.count("checkpoints", ranked.len());
        }
        Command::Report { eval, challenge } => {
            if eval.is_empty() && challenge.is_empty() {
                bail!("report needs at least one --eval or --challenge file");
            }
            let mut text = String::new();
            let mut eval_variants = Vec::new();
            for arg in eval {
                let (name, path) = named(arg);
                let body =
                    fs::read_to_string(run.input(&path)).with_context(|| format!("reading {}", path.display()))?;
                let reports: Vec<EvalReport> =
                    serde_json::from_str(&body).with_context(|| format!("parsing {}", path.display()))?;
                eval_variants.push((name, reports));
            }
            if !eval_variants.is_empty() {
                text.push_str(&render_table(&eval_variants));
                text.push('\n');
            }
            let mut challenge_variants = Vec::new();
            for arg in challenge {
                let (name, path) = named(arg);
                let body =
                    fs::read_to_string(run.input(&path)).with_context(|| format!("reading {}", path.display()))?;
                let report: ChallengeReport =
                    serde_json::from_str(&body).with_context(|| format!("parsing {}", path.display()))?;
                challenge_variants.push((name, report));
            }
            if !challenge_variants.is_empty() {
                text.push_str(&render_challenge_table(&challenge_variants));
            }
            let out = run.output("report.txt")?;
            write_text(&out, &text)?;
            run.count("eval_variants", eval_variants.len());
            run.count("challenge_variants", challenge_variants.len());
        }
    }

    let manifest = run.finish(config.manifest_text(), config.hash(), seed_used)?;
    log::info!("wrote {}", manifest.display());
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
        if let Some(core) = cause.downcast_ref::<mteval_core::Error>() {
            return if core.is_io() { EXIT_IO } else { EXIT_VALIDATION };
        }
    }
    EXIT_VALIDATION
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MTEVAL_LOG", "info"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            log::error!("{err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
