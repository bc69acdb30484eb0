//! Checkpoint ranking by a weighted sum of segment- and system-level
//! pairwise accuracy, with the system-level part down-weighted.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::LanguagePair;
use crate::metaeval::EvalReport;
use crate::{Error, Result};

pub const SEGMENT_WEIGHT: f64 = 0.75;
pub const SYSTEM_WEIGHT: f64 = 0.25;

pub fn default_selection_lps() -> Vec<LanguagePair> {
    ["en-de", "en-zh", "zh-en"]
        .iter()
        .map(|lp| lp.parse().expect("valid language pair"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEval {
    pub checkpoint_id: String,
    pub seg_acc: BTreeMap<LanguagePair, f64>,
    pub sys_acc: BTreeMap<LanguagePair, f64>,
}

impl CheckpointEval {
    pub fn from_reports(checkpoint_id: impl Into<String>, reports: &[EvalReport]) -> Self {
        Self {
            checkpoint_id: checkpoint_id.into(),
            seg_acc: reports.iter().map(|r| (r.lp.clone(), r.seg_acc)).collect(),
            sys_acc: reports.iter().map(|r| (r.lp.clone(), r.sys_acc)).collect(),
        }
    }
}

pub fn score_checkpoint(eval: &CheckpointEval, lps: &[LanguagePair]) -> Result<f64> {
    let mut seg = 0.0;
    let mut sys = 0.0;
    for lp in lps {
        let missing = || Error::invalid(format!("checkpoint {} has no accuracy for {lp}", eval.checkpoint_id));
        let s = *eval.seg_acc.get(lp).ok_or_else(missing)?;
        let y = *eval.sys_acc.get(lp).ok_or_else(missing)?;
        for v in [s, y] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!(
                    "checkpoint {}: accuracy {v} for {lp} outside [0,1]",
                    eval.checkpoint_id
                )));
            }
        }
        seg += s;
        sys += y;
    }
    Ok(SEGMENT_WEIGHT * seg + SYSTEM_WEIGHT * sys)
}

/// All checkpoints with their objective, best first; equal objectives are
/// ordered by checkpoint id.
pub fn rank(evals: &[CheckpointEval], lps: &[LanguagePair]) -> Result<Vec<(String, f64)>> {
    let mut ranked = evals
        .iter()
        .map(|e| Ok((e.checkpoint_id.clone(), score_checkpoint(e, lps)?)))
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranked)
}

pub fn select_best(evals: &[CheckpointEval], lps: &[LanguagePair]) -> Result<String> {
    rank(evals, lps)?
        .into_iter()
        .next()
        .map(|(id, _)| id)
        .ok_or_else(|| Error::invalid("no checkpoints to select from"))
}

pub fn render_ranking(ranked: &[(String, f64)]) -> String {
    let width = ranked.iter().map(|(id, _)| id.len()).max().unwrap_or(0).max(10);
    let mut out = format!("{:>4}  {:<width$}  {:>10}\n", "rank", "checkpoint", "objective");
    for (i, (id, score)) in ranked.iter().enumerate() {
        out.push_str(&format!("{:>4}  {:<width$}  {:>10.6}\n", i + 1, id, score));
    }
    out
}
