//! Score transforms applied to human ratings before training.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{LanguagePair, RatedSegment, RatingKind};
use crate::{Error, Outcome, Result};

pub const MQM_WORST: f64 = 25.0;
pub const DA_BEST: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetScale {
    /// Negated, clipped z-scores in [-1, 1]; lower is better.
    #[serde(rename = "STAGE1")]
    Stage1,
    /// MQM scale [0, 25]; lower is better.
    #[serde(rename = "MQM")]
    Mqm,
}

impl TargetScale {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            TargetScale::Stage1 => (-1.0, 1.0),
            TargetScale::Mqm => (0.0, MQM_WORST),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScore {
    value: f64,
    scale: TargetScale,
}

impl TargetScore {
    pub fn new(value: f64, scale: TargetScale) -> Result<Self> {
        let (lo, hi) = scale.bounds();
        if !value.is_finite() || value < lo || value > hi {
            return Err(Error::invalid(format!(
                "target {value} outside [{lo}, {hi}] for scale {scale:?}"
            )));
        }
        Ok(Self { value, scale })
    }

    pub fn value(self) -> f64 {
        self.value
    }

    pub fn scale(self) -> TargetScale {
        self.scale
    }
}

/// Sum of values in ascending order, so the result does not depend on the
/// order records arrived in.
fn ordered_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// Z-normalizes raw DA scores within each rater's group, using the population
/// standard deviation. Groups with zero variance get z = 0 and a warning.
pub fn znormalize_per_rater(records: &[RatedSegment]) -> Result<Outcome<Vec<RatedSegment>>> {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if r.rating_kind != RatingKind::DaRaw {
            return Err(Error::invalid(format!(
                "record {i} ({}/{}) has rating_kind {}, expected DA_RAW",
                r.segment_id,
                r.system_id,
                r.rating_kind.as_str()
            )));
        }
        let rater = r.rater_id.as_deref().ok_or_else(|| {
            Error::invalid(format!(
                "record {i} ({}/{}) has no rater_id; per-rater normalization needs one",
                r.segment_id, r.system_id
            ))
        })?;
        groups.entry(rater).or_default().push(r.score);
    }

    let mut out = Outcome::new(Vec::with_capacity(records.len()));
    let mut stats: BTreeMap<&str, Option<(f64, f64)>> = BTreeMap::new();
    for (rater, mut scores) in groups {
        let n = scores.len() as f64;
        let mean = ordered_sum(&mut scores) / n;
        let mut sq: Vec<f64> = scores.iter().map(|s| (s - mean) * (s - mean)).collect();
        let std = (ordered_sum(&mut sq) / n).sqrt();
        if std > 0.0 {
            stats.insert(rater, Some((mean, std)));
        } else {
            out.warn(format!(
                "rater {rater}: zero score variance over {} ratings; assigning z = 0",
                scores.len()
            ));
            stats.insert(rater, None);
        }
    }

    for r in records {
        let rater = r.rater_id.as_deref().unwrap_or_default();
        let z = match stats[rater] {
            Some((mean, std)) => (r.score - mean) / std,
            None => 0.0,
        };
        let mut normalized = r.clone();
        normalized.score = z;
        normalized.rating_kind = RatingKind::DaZ;
        out.value.push(normalized);
    }
    Ok(out)
}

/// Collapses ratings from several raters into one record per
/// (language pair, segment, system), scored by the unweighted mean.
/// Output follows the first appearance of each key.
pub fn aggregate_per_segment(records: &[RatedSegment]) -> Result<Vec<RatedSegment>> {
    if let Some(first) = records.first() {
        if let Some(other) = records.iter().find(|r| r.rating_kind != first.rating_kind) {
            return Err(Error::invalid(format!(
                "cannot aggregate mixed rating kinds {} and {}",
                first.rating_kind.as_str(),
                other.rating_kind.as_str()
            )));
        }
    }
    let mut index: BTreeMap<(&LanguagePair, &str, &str), usize> = BTreeMap::new();
    let mut groups: Vec<(RatedSegment, Vec<f64>)> = Vec::new();
    for r in records {
        let key = (&r.lp, r.segment_id.as_str(), r.system_id.as_str());
        match index.get(&key) {
            Some(&slot) => groups[slot].1.push(r.score),
            None => {
                index.insert(key, groups.len());
                groups.push((r.clone(), vec![r.score]));
            }
        }
    }
    Ok(groups
        .into_iter()
        .map(|(mut rec, mut scores)| {
            let n = scores.len() as f64;
            rec.score = ordered_sum(&mut scores) / n;
            rec.rater_id = None;
            rec
        })
        .collect())
}

/// Stage-one regression target: the negated z-score, clipped to [-1, 1].
pub fn to_stage1_target(z_score: f64) -> Result<TargetScore> {
    if !z_score.is_finite() {
        return Err(Error::invalid(format!("z-score {z_score} is not finite")));
    }
    TargetScore::new((-z_score).clamp(-1.0, 1.0), TargetScale::Stage1)
}

/// Maps a raw DA rating in [0, 100] (higher better) onto the MQM scale
/// [0, 25] (lower better).
pub fn da_to_mqm(da_raw: f64) -> Result<TargetScore> {
    if !(0.0..=DA_BEST).contains(&da_raw) {
        return Err(Error::invalid(format!(
            "DA score {da_raw} outside the DA_RAW scale [0,100]"
        )));
    }
    TargetScore::new(MQM_WORST * (1.0 - da_raw / DA_BEST), TargetScale::Mqm)
}

/// Inverse of [`da_to_mqm`].
pub fn mqm_to_da(mqm: f64) -> f64 {
    DA_BEST * (1.0 - mqm / MQM_WORST)
}
