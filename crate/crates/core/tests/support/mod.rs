#![allow(dead_code)]

use mteval_core::corpus::{LanguagePair, Orientation, RatedSegment, RatingKind, ScoreEntry, ScoreSet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn lp(s: &str) -> LanguagePair {
    s.parse().unwrap()
}

pub fn record(
    lp_name: &str,
    seg: &str,
    sys: &str,
    hyp: &str,
    reference: &str,
    score: f64,
    kind: RatingKind,
) -> RatedSegment {
    RatedSegment {
        lp: lp(lp_name),
        domain: None,
        year: None,
        segment_id: seg.into(),
        system_id: sys.into(),
        rater_id: None,
        source: format!("source of {seg}"),
        hypothesis: hyp.into(),
        reference: Some(reference.into()),
        score,
        rating_kind: kind,
    }
}

/// A metric value drawn so that exact ties, near ties and rounding noise
/// all show up.
pub fn metric_value(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..3) {
        0 => rng.gen_range(0..6) as f64,
        1 => rng.gen_range(0..30) as f64 * 0.1,
        _ => rng.gen_range(-3.0..3.0),
    }
}

/// Groups of (human, metric), higher is better on both.
pub fn random_groups(rng: &mut ChaCha8Rng, max_groups: usize, max_size: usize) -> Vec<Vec<(f64, f64)>> {
    let n_groups = rng.gen_range(1..=max_groups);
    let mut groups: Vec<Vec<(f64, f64)>> = (0..n_groups)
        .map(|_| {
            let k = rng.gen_range(1..=max_size);
            (0..k)
                .map(|_| (rng.gen_range(0..4) as f64, metric_value(rng)))
                .collect()
        })
        .collect();
    if groups.iter().all(|g| g.len() < 2) {
        groups[0].push((1.0, 0.5));
    }
    groups
}

/// A balanced ratings/scores instance: every system translated every
/// segment. Human scores are DA z-scores (higher better).
pub struct Instance {
    pub ratings: Vec<RatedSegment>,
    pub metric: Vec<f64>,
    pub orientation: Orientation,
}

impl Instance {
    pub fn random(rng: &mut ChaCha8Rng, max_segments: usize, max_systems: usize) -> Self {
        loop {
            let n_seg = rng.gen_range(2..=max_segments);
            let n_sys = rng.gen_range(2..=max_systems);
            let mut ratings = Vec::new();
            let mut metric = Vec::new();
            for s in 0..n_seg {
                for y in 0..n_sys {
                    let human = rng.gen_range(-4..4) as f64 * 0.25;
                    ratings.push(record(
                        "en-de",
                        &format!("seg{s}"),
                        &format!("sys{y}"),
                        "h",
                        "r",
                        human,
                        RatingKind::DaZ,
                    ));
                    metric.push(metric_value(rng));
                }
            }
            let orientation = if rng.gen_bool(0.5) {
                Orientation::LowerBetter
            } else {
                Orientation::HigherBetter
            };
            let inst = Self {
                ratings,
                metric,
                orientation,
            };
            if inst.nondegenerate() {
                return inst;
            }
        }
    }

    fn nondegenerate(&self) -> bool {
        let distinct = |xs: Vec<f64>| xs.iter().any(|x| *x != xs[0]);
        let sys_human = self.system_means(self.ratings.iter().map(|r| r.score).collect());
        let sys_metric = self.system_means(self.metric.clone());
        distinct(self.ratings.iter().map(|r| r.score).collect())
            && distinct(self.metric.clone())
            && distinct(sys_human)
            && distinct(sys_metric)
    }

    fn system_means(&self, values: Vec<f64>) -> Vec<f64> {
        let mut by_sys: std::collections::BTreeMap<&str, (f64, usize)> = Default::default();
        for (r, v) in self.ratings.iter().zip(values) {
            let e = by_sys.entry(&r.system_id).or_default();
            e.0 += v;
            e.1 += 1;
        }
        by_sys.values().map(|(s, n)| s / *n as f64).collect()
    }

    pub fn scores(&self) -> ScoreSet {
        self.scores_with(self.orientation, |v| v)
    }

    pub fn scores_with(&self, orientation: Orientation, f: impl Fn(f64) -> f64) -> ScoreSet {
        let entries = self
            .ratings
            .iter()
            .zip(&self.metric)
            .map(|(r, &m)| ScoreEntry {
                segment_id: r.segment_id.clone(),
                system_id: r.system_id.clone(),
                score: f(m),
            })
            .collect();
        ScoreSet::new(lp("en-de"), orientation, entries).unwrap()
    }
}
