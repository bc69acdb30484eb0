//! Lexical baseline metric: character n-gram F-score mapped onto the MQM
//! scale. Whitespace is ignored when extracting n-grams.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{LanguagePair, Orientation, RatedSegment, ScoreEntry, ScoreSet};
use crate::{Error, Outcome, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub max_ngram: usize,
    pub beta: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            max_ngram: 6,
            beta: 2.0,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_ngram < 1 {
            return Err(Error::invalid("max_ngram must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!("beta {} must be positive", self.beta)));
        }
        Ok(())
    }
}

fn ngram_counts(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut counts = HashMap::new();
    if chars.len() >= n {
        for window in chars.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

/// F-beta for a single n-gram order. Orders where either side has no n-grams
/// score 0.
pub fn ngram_f_score(hyp: &[char], reference: &[char], n: usize, beta: f64) -> f64 {
    let h = ngram_counts(hyp, n);
    let r = ngram_counts(reference, n);
    let h_total: usize = h.values().sum();
    let r_total: usize = r.values().sum();
    if h_total == 0 || r_total == 0 {
        return 0.0;
    }
    let matched: usize = h.iter().map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0))).sum();
    let precision = matched as f64 / h_total as f64;
    let recall = matched as f64 / r_total as f64;
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

fn content_chars(text: &str) -> Vec<char> {
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

/// `25 * (1 - F)` where F is the mean n-gram F-score over orders
/// `1..=max_ngram`. Lower is better.
pub fn baseline_score(hypothesis: &str, reference: &str, config: &BaselineConfig) -> Result<f64> {
    config.validate()?;
    if reference.is_empty() {
        return Err(Error::invalid("baseline scoring needs a non-empty reference"));
    }
    let hyp = content_chars(hypothesis);
    let reference = content_chars(reference);
    let f: f64 = (1..=config.max_ngram)
        .map(|n| ngram_f_score(&hyp, &reference, n, config.beta))
        .sum::<f64>()
        / config.max_ngram as f64;
    Ok((25.0 * (1.0 - f)).clamp(0.0, 25.0))
}

/// A segment-level metric. Implementations decide which of the three texts
/// they need and fail when one is missing.
pub trait Scorer {
    fn orientation(&self) -> Orientation;

    fn score(&self, source: &str, hypothesis: &str, reference: Option<&str>) -> Result<f64>;
}

/// [`baseline_score`] as a [`Scorer`]. Ignores the source.
#[derive(Debug, Clone, Copy, Default)]
pub struct BaselineScorer {
    pub config: BaselineConfig,
}

impl Scorer for BaselineScorer {
    fn orientation(&self) -> Orientation {
        Orientation::LowerBetter
    }

    fn score(&self, _source: &str, hypothesis: &str, reference: Option<&str>) -> Result<f64> {
        let reference = reference.ok_or_else(|| Error::invalid("the lexical baseline needs a reference"))?;
        baseline_score(hypothesis, reference, &self.config)
    }
}

/// Scores every record of `lp`. Records the scorer rejects for lacking a
/// reference are skipped with a warning.
pub fn score_ratings(records: &[RatedSegment], lp: &LanguagePair, scorer: &dyn Scorer) -> Result<Outcome<ScoreSet>> {
    let mut entries = Vec::new();
    let mut skipped = 0usize;
    for r in records.iter().filter(|r| &r.lp == lp) {
        let reference = r.reference.as_deref().filter(|s| !s.is_empty());
        if reference.is_none() {
            skipped += 1;
            continue;
        }
        entries.push(ScoreEntry {
            segment_id: r.segment_id.clone(),
            system_id: r.system_id.clone(),
            score: scorer.score(&r.source, &r.hypothesis, reference)?,
        });
    }
    let mut out = Outcome::new(ScoreSet::new(lp.clone(), scorer.orientation(), entries)?);
    if skipped > 0 {
        out.warn(format!("{lp}: {skipped} records without a reference were not scored"));
    }
    Ok(out)
}
