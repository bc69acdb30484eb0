//! Synthetic failure-mode examples.
//!
//! Each generator turns one rated record into a manipulated candidate
//! translation labelled on the MQM scale. Generators that draw random numbers
//! take an explicit seed so that an example depends only on (record, seed).

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_text, LanguagePair, RatedSegment};
use crate::seed::{derive_rng, derive_seed, rng_from};
use crate::{Error, Outcome, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SyntheticCategory {
    #[serde(rename = "EMPTY")]
    Empty,
    #[serde(rename = "GIBBERISH")]
    Gibberish,
    #[serde(rename = "UNRELATED")]
    Unrelated,
    #[serde(rename = "UNDERTRANSLATION")]
    Undertranslation,
    #[serde(rename = "DUPLICATION")]
    Duplication,
    #[serde(rename = "MISSING_PUNCT")]
    MissingPunct,
    #[serde(rename = "REF_MATCH")]
    RefMatch,
}

impl SyntheticCategory {
    pub const ALL: [SyntheticCategory; 7] = [
        SyntheticCategory::Empty,
        SyntheticCategory::Gibberish,
        SyntheticCategory::Unrelated,
        SyntheticCategory::Undertranslation,
        SyntheticCategory::Duplication,
        SyntheticCategory::MissingPunct,
        SyntheticCategory::RefMatch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SyntheticCategory::Empty => "EMPTY",
            SyntheticCategory::Gibberish => "GIBBERISH",
            SyntheticCategory::Unrelated => "UNRELATED",
            SyntheticCategory::Undertranslation => "UNDERTRANSLATION",
            SyntheticCategory::Duplication => "DUPLICATION",
            SyntheticCategory::MissingPunct => "MISSING_PUNCT",
            SyntheticCategory::RefMatch => "REF_MATCH",
        }
    }

    /// Short column heading for report tables.
    pub fn short_name(self) -> &'static str {
        match self {
            SyntheticCategory::Empty => "Empty",
            SyntheticCategory::Gibberish => "Gibberish",
            SyntheticCategory::Unrelated => "Unrelated",
            SyntheticCategory::Undertranslation => "Undertransl.",
            SyntheticCategory::Duplication => "Duplication",
            SyntheticCategory::MissingPunct => "Missing punct.",
            SyntheticCategory::RefMatch => "Ref-match",
        }
    }

    /// The synthetic hypothesis is built from the reference rather than the
    /// candidate translation.
    pub fn created_from_reference(self) -> bool {
        matches!(self, SyntheticCategory::MissingPunct | SyntheticCategory::RefMatch)
    }

    /// Whether `label` obeys the category's labelling rule.
    pub fn label_conforms(self, label: f64, duplication_label: f64) -> bool {
        match self {
            SyntheticCategory::Empty | SyntheticCategory::Gibberish | SyntheticCategory::Unrelated => label == 25.0,
            SyntheticCategory::Duplication => label == duplication_label,
            SyntheticCategory::MissingPunct => label == 1.0,
            SyntheticCategory::RefMatch => label == 0.0,
            SyntheticCategory::Undertranslation => (5.0..=25.0).contains(&label),
        }
    }
}

impl fmt::Display for SyntheticCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SyntheticCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown synthetic category {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticExample {
    pub category: SyntheticCategory,
    pub lp: LanguagePair,
    pub origin_segment_id: String,
    pub origin_system_id: String,
    pub source: String,
    pub hypothesis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub label: f64,
    pub seed_trace: u64,
}

/// Sentence-final symbols for undertranslation sentence splitting.
pub const SENTENCE_FINAL: [char; 6] = ['.', '?', '!', '。', '？', '！'];

/// Default end-punctuation symbols for the missing-punctuation category.
pub const DEFAULT_END_PUNCTUATION: [char; 11] = ['.', '?', '!', ')', ']', '"', '\'', '。', '？', '！', '»'];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub categories: Vec<SyntheticCategory>,
    pub end_punctuation: Vec<char>,
    pub duplication_label: f64,
    /// Origin records sampled per language pair and category.
    pub per_lp_sample: usize,
    /// Missing-punctuation records sampled per end symbol, pooled over pairs.
    pub per_symbol_sample: usize,
    /// Relative character-length window for unrelated references.
    pub unrelated_window: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            categories: SyntheticCategory::ALL.to_vec(),
            end_punctuation: DEFAULT_END_PUNCTUATION.to_vec(),
            duplication_label: 25.0,
            per_lp_sample: 500,
            per_symbol_sample: 250,
            unrelated_window: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetVocabulary {
    pub target_lang: String,
    /// Every reference token, with repetition.
    pub words: Vec<String>,
}

impl TargetVocabulary {
    pub fn counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for w in &self.words {
            *counts.entry(w.as_str()).or_insert(0) += 1;
        }
        counts
    }
}

pub fn build_vocabulary(records: &[RatedSegment], target_lang: &str) -> Result<TargetVocabulary> {
    let words: Vec<String> = records
        .iter()
        .filter(|r| r.lp.target_lang() == target_lang)
        .filter_map(|r| r.reference.as_deref())
        .flat_map(str::split_whitespace)
        .map(str::to_string)
        .collect();
    if words.is_empty() {
        return Err(Error::invalid(format!(
            "no reference text with target language {target_lang:?} to build a vocabulary from"
        )));
    }
    Ok(TargetVocabulary {
        target_lang: target_lang.to_string(),
        words,
    })
}

/// Distinct references for one target language, in first-seen order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePool {
    pub target_lang: String,
    pub references: Vec<String>,
}

impl ReferencePool {
    pub fn build(records: &[RatedSegment], target_lang: &str) -> Self {
        let mut seen = HashSet::new();
        let references = records
            .iter()
            .filter(|r| r.lp.target_lang() == target_lang)
            .filter_map(|r| r.reference.as_deref())
            .filter(|r| !r.is_empty() && seen.insert(*r))
            .map(str::to_string)
            .collect();
        Self {
            target_lang: target_lang.to_string(),
            references,
        }
    }

    fn has_other_than(&self, own: &str) -> bool {
        self.references.iter().any(|r| r != own)
    }
}

fn reference_of(record: &RatedSegment) -> Result<&str> {
    match record.reference.as_deref() {
        Some(r) if !r.is_empty() => Ok(r),
        _ => Err(Error::invalid(format!(
            "record {}/{} has no reference",
            record.segment_id, record.system_id
        ))),
    }
}

fn example(
    record: &RatedSegment,
    category: SyntheticCategory,
    hypothesis: String,
    label: f64,
    seed: u64,
) -> SyntheticExample {
    SyntheticExample {
        category,
        lp: record.lp.clone(),
        origin_segment_id: record.segment_id.clone(),
        origin_system_id: record.system_id.clone(),
        source: record.source.clone(),
        hypothesis,
        reference: record.reference.clone(),
        label,
        seed_trace: seed,
    }
}

pub fn gen_empty(record: &RatedSegment) -> Result<SyntheticExample> {
    reference_of(record)?;
    Ok(example(record, SyntheticCategory::Empty, String::new(), 25.0, 0))
}

/// Samples as many vocabulary words as the reference has, with replacement.
pub fn gen_gibberish(record: &RatedSegment, vocab: &TargetVocabulary, seed: u64) -> Result<SyntheticExample> {
    let reference = reference_of(record)?;
    if vocab.words.is_empty() {
        return Err(Error::invalid("empty vocabulary"));
    }
    if vocab.target_lang != record.lp.target_lang() {
        return Err(Error::invalid(format!(
            "vocabulary for {:?} used on a {} record",
            vocab.target_lang, record.lp
        )));
    }
    let n = reference.split_whitespace().count();
    let mut rng = rng_from(seed);
    let words: Vec<&str> = (0..n)
        .map(|_| vocab.words[rng.gen_range(0..vocab.words.len())].as_str())
        .collect();
    Ok(example(
        record,
        SyntheticCategory::Gibberish,
        words.join(" "),
        25.0,
        seed,
    ))
}

/// Picks another reference of similar character length. The relative
/// window starts at `window` and doubles until a candidate qualifies.
pub fn gen_unrelated(record: &RatedSegment, pool: &ReferencePool, window: f64, seed: u64) -> Result<SyntheticExample> {
    let own = reference_of(record)?;
    let candidates: Vec<(&str, usize)> = pool
        .references
        .iter()
        .filter(|r| r.as_str() != own)
        .map(|r| (r.as_str(), r.chars().count()))
        .collect();
    if candidates.is_empty() {
        return Err(Error::invalid(format!(
            "no other {:?} reference available for {}/{}",
            pool.target_lang, record.segment_id, record.system_id
        )));
    }
    let own_len = own.chars().count() as f64;
    let mut w = if window > 0.0 { window } else { 0.2 };
    let within = loop {
        let hits: Vec<&str> = candidates
            .iter()
            .filter(|(_, len)| (*len as f64 - own_len).abs() <= w * own_len)
            .map(|(r, _)| *r)
            .collect();
        if !hits.is_empty() {
            break hits;
        }
        w *= 2.0;
    };
    let mut rng = rng_from(seed);
    let chosen = within[rng.gen_range(0..within.len())].to_string();
    Ok(example(record, SyntheticCategory::Unrelated, chosen, 25.0, seed))
}

/// Byte spans of sentences: a sentence ends after a sentence-final symbol
/// that is followed by whitespace or the end of the text.
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        let s = *start.get_or_insert(i);
        if SENTENCE_FINAL.contains(&c) {
            let end = i + c.len_utf8();
            let boundary = chars.peek().is_none_or(|(_, next)| next.is_whitespace());
            if boundary {
                spans.push((s, end));
                start = None;
            }
        }
    }
    if let Some(s) = start {
        let end = text.trim_end().len();
        spans.push((s, end));
    }
    spans
}

/// Removes sentence `k` together with the whitespace separating it from its
/// neighbour.
pub fn remove_sentence(text: &str, spans: &[(usize, usize)], k: usize) -> String {
    let (cut_from, cut_to) = if k + 1 < spans.len() {
        (spans[k].0, spans[k + 1].0)
    } else {
        (spans[k - 1].1, spans[k].1)
    };
    format!("{}{}", &text[..cut_from], &text[cut_to..])
}

/// Drops `round(fraction * n)` words (at least one, at most n - 1) from the
/// end. Returns the kept prefix and the removed share of the word count, or
/// `None` for fewer than two words.
pub fn truncate_words(text: &str, fraction: f64) -> Option<(String, f64)> {
    let ends: Vec<usize> = word_spans(text).map(|(_, end)| end).collect();
    let n = ends.len();
    if n < 2 {
        return None;
    }
    let removed = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let kept = n - removed;
    Some((text[..ends[kept - 1]].to_string(), removed as f64 / n as f64))
}

fn word_spans(text: &str) -> impl Iterator<Item = (usize, usize)> + '_ {
    let base = text.as_ptr() as usize;
    text.split_whitespace().map(move |w| {
        let start = w.as_ptr() as usize - base;
        (start, start + w.len())
    })
}

pub fn undertranslation_label(removed_fraction: f64) -> f64 {
    (25.0 * removed_fraction).clamp(5.0, 25.0)
}

/// Removes one random sentence from a multi-sentence hypothesis, otherwise
/// 20-80% of its words from the end. `None` when the hypothesis has fewer
/// than two words.
pub fn gen_undertranslation(record: &RatedSegment, seed: u64) -> Result<Option<SyntheticExample>> {
    let hyp = record.hypothesis.as_str();
    let total_words = hyp.split_whitespace().count();
    if total_words < 2 {
        return Ok(None);
    }
    let mut rng = rng_from(seed);
    let spans = split_sentences(hyp);
    let (truncated, removed_fraction) = if spans.len() >= 2 {
        let k = rng.gen_range(0..spans.len());
        let (s, e) = spans[k];
        let removed_words = hyp[s..e].split_whitespace().count();
        (
            remove_sentence(hyp, &spans, k),
            removed_words as f64 / total_words as f64,
        )
    } else {
        let fraction = rng.gen_range(0.2..=0.8);
        truncate_words(hyp, fraction).expect("at least two words")
    };
    Ok(Some(example(
        record,
        SyntheticCategory::Undertranslation,
        truncated,
        undertranslation_label(removed_fraction),
        seed,
    )))
}

pub fn gen_duplication(record: &RatedSegment, label: f64) -> Result<SyntheticExample> {
    if record.hypothesis.is_empty() {
        return Err(Error::invalid("cannot duplicate an empty hypothesis"));
    }
    let doubled = format!("{0} {0}", record.hypothesis);
    Ok(example(record, SyntheticCategory::Duplication, doubled, label, 0))
}

/// The reference with its final punctuation symbol (and any whitespace left
/// in front of it) removed. `None` when the reference does not end in one of
/// `end_punctuation`.
pub fn gen_missing_punct(record: &RatedSegment, end_punctuation: &[char]) -> Result<Option<SyntheticExample>> {
    let reference = reference_of(record)?;
    let Some(last) = reference.chars().last() else {
        return Ok(None);
    };
    if !end_punctuation.contains(&last) {
        return Ok(None);
    }
    let stripped = reference[..reference.len() - last.len_utf8()].trim_end().to_string();
    Ok(Some(example(record, SyntheticCategory::MissingPunct, stripped, 1.0, 0)))
}

pub fn gen_refmatch(record: &RatedSegment) -> Result<SyntheticExample> {
    let reference = reference_of(record)?.to_string();
    Ok(example(record, SyntheticCategory::RefMatch, reference, 0.0, 0))
}

fn has_reference(r: &RatedSegment) -> bool {
    r.reference.as_deref().is_some_and(|s| !s.is_empty())
}

fn sample_up_to<'a, T>(items: &[&'a T], cap: usize, seed: u64, labels: &[&str]) -> Vec<&'a T> {
    if items.len() <= cap {
        return items.to_vec();
    }
    let mut rng = derive_rng(seed, labels);
    let mut picked = index::sample(&mut rng, items.len(), cap).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| items[i]).collect()
}

fn dedupe_by_reference<'a>(records: &[&'a RatedSegment]) -> Vec<&'a RatedSegment> {
    let mut seen = HashSet::new();
    records
        .iter()
        .copied()
        .filter(|r| seen.insert((&r.lp, r.reference.as_deref())))
        .collect()
}

/// Generates the full synthetic set: up to `per_lp_sample` origin records per
/// (category, language pair), and for missing punctuation a sample stratified
/// by end symbol and pooled across language pairs.
///
/// Output is sorted by (category, language pair, origin segment, origin system).
pub fn sample_plan(
    records: &[RatedSegment],
    seed: u64,
    config: &SynthConfig,
) -> Result<Outcome<Vec<SyntheticExample>>> {
    let mut out = Outcome::new(Vec::new());
    let mut by_lp: BTreeMap<&LanguagePair, Vec<&RatedSegment>> = BTreeMap::new();
    for r in records.iter().filter(|r| has_reference(r)) {
        by_lp.entry(&r.lp).or_default().push(r);
    }
    let without_ref = records.len() - by_lp.values().map(Vec::len).sum::<usize>();
    if without_ref > 0 {
        out.warn(format!(
            "{without_ref} records without a reference are not used for synthetic data"
        ));
    }

    let mut vocabularies: BTreeMap<String, TargetVocabulary> = BTreeMap::new();
    let mut pools: BTreeMap<String, ReferencePool> = BTreeMap::new();
    for lp in by_lp.keys() {
        let tgt = lp.target_lang();
        if !vocabularies.contains_key(tgt) {
            vocabularies.insert(tgt.to_string(), build_vocabulary(records, tgt)?);
            pools.insert(tgt.to_string(), ReferencePool::build(records, tgt));
        }
    }

    for &category in &config.categories {
        if category == SyntheticCategory::MissingPunct {
            continue;
        }
        for (lp, lp_records) in &by_lp {
            let lp_name = lp.to_string();
            let tgt = lp.target_lang();
            let candidates: Vec<&RatedSegment> = match category {
                SyntheticCategory::RefMatch => dedupe_by_reference(lp_records),
                _ => lp_records.clone(),
            };
            let eligible: Vec<&RatedSegment> = candidates
                .iter()
                .copied()
                .filter(|r| match category {
                    SyntheticCategory::Undertranslation => r.hypothesis.split_whitespace().count() >= 2,
                    SyntheticCategory::Unrelated => pools[tgt].has_other_than(r.reference.as_deref().unwrap_or("")),
                    _ => true,
                })
                .collect();
            let skipped = candidates.len() - eligible.len();
            if skipped > 0 {
                out.warn(format!("{category} {lp}: skipped {skipped} ineligible records"));
            }
            if eligible.len() < config.per_lp_sample {
                out.warn(format!(
                    "{category} {lp}: only {} eligible records (target {})",
                    eligible.len(),
                    config.per_lp_sample
                ));
            }
            let chosen = sample_up_to(
                &eligible,
                config.per_lp_sample,
                seed,
                &[category.as_str(), &lp_name, "sample"],
            );
            for r in chosen {
                let ex_seed = derive_seed(seed, &[category.as_str(), &lp_name, &r.segment_id, &r.system_id]);
                let generated = match category {
                    SyntheticCategory::Empty => Some(gen_empty(r)?),
                    SyntheticCategory::Gibberish => Some(gen_gibberish(r, &vocabularies[tgt], ex_seed)?),
                    SyntheticCategory::Unrelated => {
                        Some(gen_unrelated(r, &pools[tgt], config.unrelated_window, ex_seed)?)
                    }
                    SyntheticCategory::Undertranslation => gen_undertranslation(r, ex_seed)?,
                    SyntheticCategory::Duplication => Some(gen_duplication(r, config.duplication_label)?),
                    SyntheticCategory::RefMatch => Some(gen_refmatch(r)?),
                    SyntheticCategory::MissingPunct => unreachable!(),
                };
                if let Some(mut ex) = generated {
                    ex.seed_trace = ex_seed;
                    out.value.push(ex);
                }
            }
        }
    }

    if config.categories.contains(&SyntheticCategory::MissingPunct) {
        let all: Vec<&RatedSegment> = by_lp.values().flatten().copied().collect();
        let deduped = dedupe_by_reference(&all);
        for &symbol in &config.end_punctuation {
            let sym = symbol.to_string();
            let bucket: Vec<&RatedSegment> = deduped
                .iter()
                .copied()
                .filter(|r| r.reference.as_deref().and_then(|s| s.chars().last()) == Some(symbol))
                .collect();
            if bucket.len() < config.per_symbol_sample {
                out.warn(format!(
                    "MISSING_PUNCT {sym:?}: only {} eligible records (target {})",
                    bucket.len(),
                    config.per_symbol_sample
                ));
            }
            let category = SyntheticCategory::MissingPunct.as_str();
            for r in sample_up_to(&bucket, config.per_symbol_sample, seed, &[category, &sym, "sample"]) {
                if let Some(mut ex) = gen_missing_punct(r, &config.end_punctuation)? {
                    ex.seed_trace = derive_seed(seed, &[category, &r.lp.to_string(), &r.segment_id, &r.system_id]);
                    out.value.push(ex);
                }
            }
        }
    }

    out.value.sort_by(|a, b| {
        (a.category, &a.lp, &a.origin_segment_id, &a.origin_system_id).cmp(&(
            b.category,
            &b.lp,
            &b.origin_segment_id,
            &b.origin_system_id,
        ))
    });
    Ok(out)
}

pub fn counts_by_category_lp(examples: &[SyntheticExample]) -> BTreeMap<(SyntheticCategory, LanguagePair), usize> {
    let mut counts = BTreeMap::new();
    for ex in examples {
        *counts.entry((ex.category, ex.lp.clone())).or_insert(0) += 1;
    }
    counts
}

pub fn examples_to_jsonl(examples: &[SyntheticExample]) -> Result<String> {
    let mut out = String::new();
    for ex in examples {
        out.push_str(&serde_json::to_string(ex)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn save_examples(examples: &[SyntheticExample], path: &Path) -> Result<()> {
    write_text(path, &examples_to_jsonl(examples)?)
}

pub fn load_examples(path: &Path) -> Result<Vec<SyntheticExample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Field {
                line: i + 1,
                field: "<synthetic example>".into(),
                message: e.to_string(),
            })
        })
        .collect()
}
