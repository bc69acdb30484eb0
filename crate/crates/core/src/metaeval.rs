//! Meta-evaluation statistics: system- and segment-level pairwise accuracy
//! and Pearson correlation between metric scores and human ratings.
//!
//! All comparisons happen on an aligned, higher-is-better axis (see
//! [`Orientation::align`]), so flipping a metric's sign together with its
//! declared orientation leaves every statistic bit-identical.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{LanguagePair, Orientation, RatedSegment, ScoreSet};
use crate::{Error, Outcome, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemScore {
    pub system_id: String,
    pub human: f64,
    pub metric: f64,
}

/// Human and metric score for one translation, both aligned so that higher
/// is better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub human: f64,
    pub metric: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TieThreshold {
    pub epsilon: f64,
    pub achieved_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub lp: LanguagePair,
    pub seg_acc: f64,
    pub seg_pearson: f64,
    pub sys_acc: f64,
    pub sys_pearson: f64,
    pub tie: TieThreshold,
    pub n_segments: usize,
    pub n_systems: usize,
}

/// One row per joined translation.
#[derive(Debug, Clone)]
pub struct Joined<'a> {
    pub segment_id: &'a str,
    pub system_id: &'a str,
    pub human: f64,
    pub metric: f64,
}

/// Human/metric join on (segment_id, system_id) for the score set's language
/// pair, with raw (unaligned) values. Returns the human orientation too.
pub fn join<'a>(ratings: &'a [RatedSegment], scores: &'a ScoreSet) -> Result<(Vec<Joined<'a>>, Orientation)> {
    let lp_ratings: Vec<&RatedSegment> = ratings.iter().filter(|r| r.lp == scores.lp).collect();
    let Some(first) = lp_ratings.first() else {
        return Err(Error::Degenerate(format!("no ratings for {}", scores.lp)));
    };
    let kind = first.rating_kind;
    if let Some(r) = lp_ratings.iter().find(|r| r.rating_kind != kind) {
        return Err(Error::invalid(format!(
            "{} ratings mix {} and {}",
            scores.lp,
            kind.as_str(),
            r.rating_kind.as_str()
        )));
    }
    let mut human: HashMap<(&str, &str), f64> = HashMap::with_capacity(lp_ratings.len());
    for r in &lp_ratings {
        if human
            .insert((r.segment_id.as_str(), r.system_id.as_str()), r.score)
            .is_some()
        {
            return Err(Error::invalid(format!(
                "several ratings for (segment_id={}, system_id={}); aggregate per segment first",
                r.segment_id, r.system_id
            )));
        }
    }
    let rows: Vec<Joined<'a>> = scores
        .entries()
        .iter()
        .filter_map(|e| {
            human
                .get(&(e.segment_id.as_str(), e.system_id.as_str()))
                .map(|&h| Joined {
                    segment_id: &e.segment_id,
                    system_id: &e.system_id,
                    human: h,
                    metric: e.score,
                })
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::Degenerate(format!(
            "ratings and scores for {} share no (segment_id, system_id) key",
            scores.lp
        )));
    }
    Ok((rows, kind.orientation()))
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean human and metric score per system over the joined segments.
pub fn system_scores(ratings: &[RatedSegment], scores: &ScoreSet) -> Result<Outcome<Vec<SystemScore>>> {
    let (rows, _) = join(ratings, scores)?;
    let mut out = Outcome::new(Vec::new());

    let rated: BTreeSet<&str> = ratings
        .iter()
        .filter(|r| r.lp == scores.lp)
        .map(|r| r.system_id.as_str())
        .collect();
    let scored: BTreeSet<&str> = scores.entries().iter().map(|e| e.system_id.as_str()).collect();
    type Slot<'a> = (Vec<f64>, Vec<f64>, BTreeSet<&'a str>);
    let mut per_system: BTreeMap<&str, Slot<'_>> = BTreeMap::new();
    for row in &rows {
        let slot = per_system.entry(row.system_id).or_default();
        slot.0.push(row.human);
        slot.1.push(row.metric);
        slot.2.insert(row.segment_id);
    }
    for system in rated.union(&scored) {
        if !per_system.contains_key(system) {
            out.warn(format!(
                "{}: system {system} has no joined segments; excluded",
                scores.lp
            ));
        }
    }
    let mut segment_sets = per_system.values().map(|(_, _, segs)| segs);
    if let Some(first) = segment_sets.next() {
        if segment_sets.any(|s| s != first) {
            out.warn(format!(
                "{}: systems are scored on different segment sets; system means are not directly comparable",
                scores.lp
            ));
        }
    }
    out.value = per_system
        .into_iter()
        .map(|(system_id, (h, m, _))| SystemScore {
            system_id: system_id.to_string(),
            human: mean(&h),
            metric: mean(&m),
        })
        .collect();
    Ok(out)
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::Degenerate("pearson needs at least two points".into()));
    }
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("zero variance in the first (human) series".into()));
    }
    if syy == 0.0 {
        return Err(Error::Degenerate("zero variance in the second (metric) series".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Fraction of system pairs with distinct human scores that the metric
/// orders the same way. Metric ties count as errors.
pub fn sys_pairwise_accuracy(
    systems: &[SystemScore],
    human_orientation: Orientation,
    metric_orientation: Orientation,
) -> Result<f64> {
    if systems.len() < 2 {
        return Err(Error::Degenerate("system accuracy needs at least two systems".into()));
    }
    let (mut correct, mut total) = (0usize, 0usize);
    for (i, a) in systems.iter().enumerate() {
        for b in &systems[i + 1..] {
            let dh = human_orientation.align(a.human) - human_orientation.align(b.human);
            if dh == 0.0 {
                continue;
            }
            total += 1;
            let dm = metric_orientation.align(a.metric) - metric_orientation.align(b.metric);
            if dm != 0.0 && (dh > 0.0) == (dm > 0.0) {
                correct += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::Degenerate("all system human scores are tied".into()));
    }
    Ok(correct as f64 / total as f64)
}

/// Groups joined rows by segment, aligned to higher-is-better.
pub fn segment_groups(ratings: &[RatedSegment], scores: &ScoreSet) -> Result<Vec<Vec<ScorePair>>> {
    let (rows, human_orientation) = join(ratings, scores)?;
    let mut groups: BTreeMap<&str, Vec<ScorePair>> = BTreeMap::new();
    for row in rows {
        groups.entry(row.segment_id).or_default().push(ScorePair {
            human: human_orientation.align(row.human),
            metric: scores.orientation.align(row.metric),
        });
    }
    Ok(groups.into_values().collect())
}

fn pair_correct(a: ScorePair, b: ScorePair, epsilon: f64) -> bool {
    let dm = a.metric - b.metric;
    let metric_tie = dm.abs() <= epsilon;
    if a.human == b.human {
        metric_tie
    } else {
        !metric_tie && ((a.human > b.human) == (dm > 0.0))
    }
}

/// Per-group (correct, total) pair counts at `epsilon`.
fn group_counts(groups: &[Vec<ScorePair>], epsilon: f64) -> Vec<(usize, usize)> {
    groups
        .iter()
        .map(|g| {
            let mut correct = 0;
            let mut total = 0;
            for (i, &a) in g.iter().enumerate() {
                for &b in &g[i + 1..] {
                    total += 1;
                    correct += usize::from(pair_correct(a, b, epsilon));
                }
            }
            (correct, total)
        })
        .collect()
}

/// Mean of per-group accuracies over groups that have at least one pair,
/// summed in group order. Both the direct and the calibrated paths reduce
/// through this function.
pub fn mean_group_accuracy(counts: &[(usize, usize)]) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for &(correct, total) in counts {
        if total > 0 {
            sum += correct as f64 / total as f64;
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Group-by-item pairwise accuracy with ties: a pair is correct when the
/// humans tie and the metric difference is at most `epsilon`, or when the
/// humans differ and the metric differs by more than `epsilon` in the same
/// direction. Groups are averaged with equal weight.
pub fn seg_pairwise_accuracy(groups: &[Vec<ScorePair>], epsilon: f64) -> Result<f64> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::invalid(format!("epsilon {epsilon} must be >= 0")));
    }
    mean_group_accuracy(&group_counts(groups, epsilon))
        .ok_or_else(|| Error::Degenerate("no segment has two or more translations".into()))
}

/// Chooses the tie threshold maximizing [`seg_pairwise_accuracy`] on the
/// given groups, preferring the smallest epsilon among equals.
///
/// Accuracy only changes where epsilon crosses an observed absolute metric
/// difference, so the sweep visits 0 and every distinct difference in
/// ascending order; any point strictly between two differences scores the
/// same as the smaller one.
pub fn calibrate_ties(groups: &[Vec<ScorePair>]) -> Result<TieThreshold> {
    struct PairDelta {
        diff: f64,
        group: usize,
        // +1: becomes correct once predicted as a tie; -1: stops being correct.
        delta: i64,
    }

    let mut counts: Vec<(usize, usize)> = Vec::with_capacity(groups.len());
    let mut deltas = Vec::new();
    for (gi, g) in groups.iter().enumerate() {
        let mut correct = 0usize;
        let mut total = 0usize;
        for (i, &a) in g.iter().enumerate() {
            for &b in &g[i + 1..] {
                total += 1;
                let dm = a.metric - b.metric;
                let human_tie = a.human == b.human;
                // Correctness when the pair is not predicted as a tie.
                let untied_ok = !human_tie && ((a.human > b.human) == (dm > 0.0)) && dm != 0.0;
                correct += usize::from(untied_ok);
                let delta = i64::from(human_tie) - i64::from(untied_ok);
                if delta != 0 {
                    deltas.push(PairDelta {
                        diff: dm.abs(),
                        group: gi,
                        delta,
                    });
                }
            }
        }
        counts.push((correct, total));
    }
    let weights: Vec<f64> = counts
        .iter()
        .map(|&(_, t)| if t > 0 { 1.0 / t as f64 } else { 0.0 })
        .collect();
    if mean_group_accuracy(&counts).is_none() {
        return Err(Error::Degenerate("no segment has two or more translations".into()));
    }
    deltas.sort_by(|a, b| a.diff.total_cmp(&b.diff));

    // Running value for screening only; candidates near the best are
    // re-scored through `mean_group_accuracy` so the reported accuracy is
    // bit-identical to a direct evaluation.
    let n_groups = counts.iter().filter(|c| c.1 > 0).count() as f64;
    let mut running: f64 = counts.iter().zip(&weights).map(|(c, w)| c.0 as f64 * w).sum::<f64>() / n_groups;
    let mut best: Option<TieThreshold> = None;
    const SCREEN_SLACK: f64 = 1e-9;

    let mut i = 0;
    let mut candidate = 0.0;
    loop {
        // Predict a tie for every pair whose difference is within the candidate.
        while i < deltas.len() && deltas[i].diff <= candidate {
            let d = &deltas[i];
            let c = &mut counts[d.group];
            c.0 = (c.0 as i64 + d.delta) as usize;
            running += d.delta as f64 * weights[d.group] / n_groups;
            i += 1;
        }
        let worth_checking = best.is_none_or(|b| running > b.achieved_accuracy - SCREEN_SLACK);
        if worth_checking {
            let exact = mean_group_accuracy(&counts).expect("non-empty");
            if best.is_none_or(|b| exact > b.achieved_accuracy) {
                best = Some(TieThreshold {
                    epsilon: candidate,
                    achieved_accuracy: exact,
                });
            }
        }
        if i >= deltas.len() {
            break;
        }
        candidate = deltas[i].diff;
    }
    Ok(best.expect("at least one candidate"))
}

/// Pearson over every joined translation, on aligned values.
pub fn no_grouping_pearson(ratings: &[RatedSegment], scores: &ScoreSet) -> Result<f64> {
    let (rows, human_orientation) = join(ratings, scores)?;
    let h: Vec<f64> = rows.iter().map(|r| human_orientation.align(r.human)).collect();
    let m: Vec<f64> = rows.iter().map(|r| scores.orientation.align(r.metric)).collect();
    pearson(&h, &m)
}

/// All four statistics for one language pair.
pub fn evaluate(ratings: &[RatedSegment], scores: &ScoreSet) -> Result<Outcome<EvalReport>> {
    let (rows, human_orientation) = join(ratings, scores)?;
    let systems = system_scores(ratings, scores)?;
    let groups = segment_groups(ratings, scores)?;
    let tie = calibrate_ties(&groups)?;
    let seg_acc = seg_pairwise_accuracy(&groups, tie.epsilon)?;
    let seg_pearson = no_grouping_pearson(ratings, scores)?;
    let sys_acc = sys_pairwise_accuracy(&systems.value, human_orientation, scores.orientation)?;
    let sys_h: Vec<f64> = systems.value.iter().map(|s| human_orientation.align(s.human)).collect();
    let sys_m: Vec<f64> = systems
        .value
        .iter()
        .map(|s| scores.orientation.align(s.metric))
        .collect();
    let sys_pearson = pearson(&sys_h, &sys_m)?;
    let mut out = Outcome::new(EvalReport {
        lp: scores.lp.clone(),
        seg_acc,
        seg_pearson,
        sys_acc,
        sys_pearson,
        tie,
        n_segments: groups.len(),
        n_systems: systems.value.len(),
    });
    debug_assert!(rows.len() >= out.value.n_segments);
    out.warnings = systems.warnings;
    Ok(out)
}

/// Plain-text table: one row per variant, language pairs as columns,
/// segment-level block first, then system-level. Values are percentages for
/// accuracies and raw coefficients for Pearson.
pub fn render_table(variants: &[(String, Vec<EvalReport>)]) -> String {
    let mut lps: Vec<&LanguagePair> = Vec::new();
    for (_, reports) in variants {
        for r in reports {
            if !lps.contains(&&r.lp) {
                lps.push(&r.lp);
            }
        }
    }
    let name_width = variants.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(7);
    let col = 9usize;
    let block = lps.len() * (col + 1);
    let mut out = String::new();
    let _ = write!(out, "{:<name_width$} |", "variant");
    for title in ["segment acc", "system acc", "segment r", "system r"] {
        let _ = write!(out, " {title:^w$}|", w = block.saturating_sub(1).max(title.len()));
    }
    out.push('\n');
    let _ = write!(out, "{:<name_width$} |", "");
    for _ in 0..4 {
        let w = block.saturating_sub(1).max(11);
        let mut cells = String::new();
        for lp in &lps {
            let _ = write!(cells, "{:>col$} ", lp.to_string());
        }
        let _ = write!(out, "{:>w$}|", cells);
    }
    out.push('\n');
    for (name, reports) in variants {
        let _ = write!(out, "{name:<name_width$} |");
        let cell = |f: &dyn Fn(&EvalReport) -> String| {
            let mut cells = String::new();
            for lp in &lps {
                let v = reports
                    .iter()
                    .find(|r| &r.lp == *lp)
                    .map(f)
                    .unwrap_or_else(|| "-".into());
                let _ = write!(cells, "{v:>col$} ");
            }
            cells
        };
        let w = block.saturating_sub(1).max(11);
        let _ = write!(out, "{:>w$}|", cell(&|r| format!("{:.2}", 100.0 * r.seg_acc)));
        let _ = write!(out, "{:>w$}|", cell(&|r| format!("{:.2}", 100.0 * r.sys_acc)));
        let _ = write!(out, "{:>w$}|", cell(&|r| format!("{:.4}", r.seg_pearson)));
        let _ = write!(out, "{:>w$}|", cell(&|r| format!("{:.4}", r.sys_pearson)));
        out.push('\n');
    }
    out
}
