//! Paired challenge set: each synthetic example is matched with the
//! translation it was derived from, and a metric passes a pair when it
//! scores the better side strictly better.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baseline::Scorer;
use crate::corpus::{write_text, LanguagePair, Orientation, RatedSegment};
use crate::mixture::{serialize_input, InputMode};
use crate::synthgen::{sample_plan, SynthConfig, SyntheticCategory};
use crate::{Error, Outcome, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "ORIGINAL")]
    Original,
    #[serde(rename = "SYNTHETIC")]
    Synthetic,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Original => "ORIGINAL",
            Side::Synthetic => "SYNTHETIC",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Translation {
    pub source: String,
    pub hypothesis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengePair {
    pub pair_id: String,
    pub category: SyntheticCategory,
    pub lp: LanguagePair,
    pub good_side: Side,
    pub original: Translation,
    pub synthetic: Translation,
    pub origin_segment_id: String,
    pub origin_system_id: String,
    pub synthetic_label: f64,
}

impl ChallengePair {
    pub fn side(&self, side: Side) -> &Translation {
        match side {
            Side::Original => &self.original,
            Side::Synthetic => &self.synthetic,
        }
    }
}

pub fn good_side_for(category: SyntheticCategory) -> Side {
    if category == SyntheticCategory::RefMatch {
        Side::Synthetic
    } else {
        Side::Original
    }
}

/// Builds challenge pairs from the synthetic sampling plan. The original side
/// of a missing-punctuation pair is the reference itself. Reference-matching
/// pairs compare the reference against a system candidate for the same
/// segment; when every candidate equals the reference the pair is dropped.
pub fn build_challenge(
    records: &[RatedSegment],
    seed: u64,
    config: &SynthConfig,
) -> Result<Outcome<Vec<ChallengePair>>> {
    let mut out = Outcome::new(Vec::new());
    let mut seen = HashSet::new();
    let unique: Vec<RatedSegment> = records
        .iter()
        .filter(|r| seen.insert((&r.lp, r.segment_id.as_str(), r.system_id.as_str())))
        .cloned()
        .collect();
    if unique.len() < records.len() {
        out.warn(format!(
            "{} records repeat a (lp, segment_id, system_id) key; only the first of each is used",
            records.len() - unique.len()
        ));
    }
    let plan = sample_plan(&unique, seed, config)?;
    out.warnings.extend(plan.warnings);

    let origin: HashMap<(&LanguagePair, &str, &str), &RatedSegment> = unique
        .iter()
        .map(|r| ((&r.lp, r.segment_id.as_str(), r.system_id.as_str()), r))
        .collect();
    let mut identical_refmatch = 0usize;
    for ex in plan.value {
        let mut rec = origin[&(&ex.lp, ex.origin_segment_id.as_str(), ex.origin_system_id.as_str())];
        if ex.category == SyntheticCategory::RefMatch && Some(&rec.hypothesis) == rec.reference.as_ref() {
            // Another system's candidate for the same segment and reference.
            if let Some(other) = unique.iter().find(|r| {
                r.lp == rec.lp
                    && r.segment_id == rec.segment_id
                    && r.reference == rec.reference
                    && Some(&r.hypothesis) != r.reference.as_ref()
            }) {
                rec = other;
            }
        }
        let original_hyp = if ex.category == SyntheticCategory::MissingPunct {
            rec.reference.clone().unwrap_or_default()
        } else {
            rec.hypothesis.clone()
        };
        if ex.category == SyntheticCategory::RefMatch && Some(&original_hyp) == rec.reference.as_ref() {
            identical_refmatch += 1;
            continue;
        }
        out.value.push(ChallengePair {
            pair_id: format!("{}/{}/{}/{}", ex.category, ex.lp, ex.origin_segment_id, rec.system_id),
            category: ex.category,
            lp: ex.lp,
            good_side: good_side_for(ex.category),
            original: Translation {
                source: rec.source.clone(),
                hypothesis: original_hyp,
                reference: rec.reference.clone(),
            },
            synthetic: Translation {
                source: ex.source,
                hypothesis: ex.hypothesis,
                reference: ex.reference,
            },
            origin_segment_id: ex.origin_segment_id,
            origin_system_id: rec.system_id.clone(),
            synthetic_label: ex.label,
        });
    }
    if identical_refmatch > 0 {
        out.warn(format!(
            "REF_MATCH: dropped {identical_refmatch} pairs whose candidate already equals the reference"
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeScore {
    pub pair_id: String,
    pub side: Side,
    pub score: f64,
}

/// Metric scores for both sides of challenge pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ChallengeScores {
    pub orientation: Orientation,
    scores: BTreeMap<(String, Side), f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChallengeScoreHeader {
    orientation: Option<Orientation>,
}

impl ChallengeScores {
    pub fn new(orientation: Orientation, rows: Vec<ChallengeScore>) -> Result<Self> {
        let mut scores = BTreeMap::new();
        for row in rows {
            if !row.score.is_finite() {
                return Err(Error::invalid(format!(
                    "non-finite score for {} {}",
                    row.pair_id, row.side
                )));
            }
            let key = (row.pair_id, row.side);
            if scores.contains_key(&key) {
                return Err(Error::invalid(format!(
                    "duplicate score for pair {} side {}",
                    key.0, key.1
                )));
            }
            scores.insert(key, row.score);
        }
        Ok(Self { orientation, scores })
    }

    pub fn get(&self, pair_id: &str, side: Side) -> Option<f64> {
        self.scores.get(&(pair_id.to_string(), side)).copied()
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = serde_json::to_string(&ChallengeScoreHeader {
            orientation: Some(self.orientation),
        })?;
        out.push('\n');
        for ((pair_id, side), score) in &self.scores {
            out.push_str(&serde_json::to_string(&ChallengeScore {
                pair_id: pair_id.clone(),
                side: *side,
                score: *score,
            })?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::Header("empty challenge score file".into()))?;
        let header: ChallengeScoreHeader =
            serde_json::from_str(first).map_err(|e| Error::Header(format!("unreadable header object: {e}")))?;
        let orientation = header
            .orientation
            .ok_or_else(|| Error::Header("header must declare `orientation`".into()))?;
        let rows = lines
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::Field {
                    line: i + 1,
                    field: "<challenge score>".into(),
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<ChallengeScore>>>()?;
        Self::new(orientation, rows)
    }
}

/// Scores both sides of every pair with `scorer`.
pub fn score_challenge(pairs: &[ChallengePair], scorer: &dyn Scorer) -> Result<ChallengeScores> {
    let mut rows = Vec::with_capacity(2 * pairs.len());
    for pair in pairs {
        for side in [Side::Original, Side::Synthetic] {
            let t = pair.side(side);
            rows.push(ChallengeScore {
                pair_id: pair.pair_id.clone(),
                side,
                score: scorer.score(&t.source, &t.hypothesis, t.reference.as_deref())?,
            });
        }
    }
    ChallengeScores::new(scorer.orientation(), rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeInput {
    pub pair_id: String,
    pub side: Side,
    pub mode: InputMode,
    pub input: String,
}

/// Serializes both sides of every pair in the same input mode, for scoring
/// by an external model.
pub fn challenge_inputs(pairs: &[ChallengePair], mode: InputMode) -> Result<Vec<ChallengeInput>> {
    let mut out = Vec::with_capacity(2 * pairs.len());
    for pair in pairs {
        for side in [Side::Original, Side::Synthetic] {
            let t = pair.side(side);
            out.push(ChallengeInput {
                pair_id: pair.pair_id.clone(),
                side,
                mode,
                input: serialize_input(Some(&t.source), &t.hypothesis, t.reference.as_deref(), mode)?,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryResult {
    pub category: SyntheticCategory,
    pub n: usize,
    pub correct: usize,
    /// `None` when the category has no scored pairs.
    pub accuracy: Option<f64>,
    /// Mean of (good - bad), aligned so that positive favours the good side.
    pub mean_score_difference: Option<f64>,
    pub excluded: usize,
    /// Reported but not treated as pass/fail.
    pub advisory: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeReport {
    pub categories: Vec<CategoryResult>,
}

impl ChallengeReport {
    pub fn category(&self, category: SyntheticCategory) -> &CategoryResult {
        self.categories
            .iter()
            .find(|c| c.category == category)
            .expect("every category is reported")
    }
}

pub fn evaluate_challenge(pairs: &[ChallengePair], scores: &ChallengeScores) -> Outcome<ChallengeReport> {
    let mut out = Outcome::new(ChallengeReport { categories: Vec::new() });
    let mut tallies: BTreeMap<SyntheticCategory, (usize, usize, Vec<f64>, usize)> = BTreeMap::new();
    for pair in pairs {
        let slot = tallies.entry(pair.category).or_default();
        let (good, bad) = match pair.good_side {
            Side::Original => (Side::Original, Side::Synthetic),
            Side::Synthetic => (Side::Synthetic, Side::Original),
        };
        match (scores.get(&pair.pair_id, good), scores.get(&pair.pair_id, bad)) {
            (Some(g), Some(b)) => {
                let diff = scores.orientation.align(g) - scores.orientation.align(b);
                slot.0 += 1;
                slot.1 += usize::from(diff > 0.0);
                slot.2.push(diff);
            }
            _ => slot.3 += 1,
        }
    }
    for category in SyntheticCategory::ALL {
        let (n, correct, diffs, excluded) = tallies.remove(&category).unwrap_or_default();
        if excluded > 0 {
            out.warn(format!(
                "{category}: {excluded} pairs lack a score on one side and were excluded"
            ));
        }
        out.value.categories.push(CategoryResult {
            category,
            n,
            correct,
            accuracy: (n > 0).then(|| correct as f64 / n as f64),
            mean_score_difference: (n > 0).then(|| diffs.iter().sum::<f64>() / n as f64),
            excluded,
            advisory: category == SyntheticCategory::RefMatch,
        });
    }
    out
}

/// One row per variant, one column per category, accuracies in percent.
pub fn render_challenge_table(variants: &[(String, ChallengeReport)]) -> String {
    let name_width = variants.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(7);
    let mut out = String::new();
    let _ = write!(out, "{:<name_width$}", "variant");
    for c in SyntheticCategory::ALL {
        let title = if c == SyntheticCategory::RefMatch {
            format!("{}*", c.short_name())
        } else {
            c.short_name().to_string()
        };
        let _ = write!(out, " | {title:>14}");
    }
    out.push('\n');
    for (name, report) in variants {
        let _ = write!(out, "{name:<name_width$}");
        for c in SyntheticCategory::ALL {
            let r = report.category(c);
            let cell = match r.accuracy {
                Some(a) => format!("{:.2}", 100.0 * a),
                None => "n=0".to_string(),
            };
            let _ = write!(out, " | {cell:>14}");
        }
        out.push('\n');
    }
    out.push_str("* advisory: a candidate can legitimately beat its reference\n");
    out
}

pub fn pairs_to_jsonl(pairs: &[ChallengePair]) -> Result<String> {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&serde_json::to_string(p)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn save_pairs(pairs: &[ChallengePair], path: &Path) -> Result<()> {
    write_text(path, &pairs_to_jsonl(pairs)?)
}

pub fn load_pairs(path: &Path) -> Result<Vec<ChallengePair>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Field {
                line: i + 1,
                field: "<challenge pair>".into(),
                message: e.to_string(),
            })
        })
        .collect()
}
