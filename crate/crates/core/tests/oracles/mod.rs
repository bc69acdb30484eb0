//! Deliberately naive reference implementations used to cross-check the
//! library. None of these call into `mteval_core` statistics code.

#![allow(dead_code)]

use std::collections::BTreeMap;

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Per-group accuracy by enumerating every unordered pair. `groups` holds
/// (human, metric) with higher = better on both.
pub fn seg_accuracy(groups: &[Vec<(f64, f64)>], eps: f64) -> Option<f64> {
    let mut per_group = Vec::new();
    for g in groups {
        let mut correct = 0usize;
        let mut total = 0usize;
        for i in 0..g.len() {
            for j in 0..g.len() {
                if i >= j {
                    continue;
                }
                total += 1;
                let human = sign(g[i].0 - g[j].0);
                let diff = g[i].1 - g[j].1;
                let metric = if diff.abs() <= eps { 0 } else { sign(diff) };
                if human == metric {
                    correct += 1;
                }
            }
        }
        if total > 0 {
            per_group.push(correct as f64 / total as f64);
        }
    }
    if per_group.is_empty() {
        return None;
    }
    let mut sum = 0.0;
    for a in &per_group {
        sum += a;
    }
    Some(sum / per_group.len() as f64)
}

/// Every threshold worth trying: zero, each observed |difference|, the
/// midpoints between consecutive ones, and one beyond the largest.
pub fn candidate_thresholds(groups: &[Vec<(f64, f64)>]) -> Vec<f64> {
    let mut diffs = vec![0.0];
    for g in groups {
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                diffs.push((g[i].1 - g[j].1).abs());
            }
        }
    }
    diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    diffs.dedup();
    let mut all = diffs.clone();
    for w in diffs.windows(2) {
        all.push(w[0] + (w[1] - w[0]) / 2.0);
    }
    all.push(diffs.last().unwrap() + 1.0);
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all
}

/// Exhaustive sweep: (smallest best threshold, best accuracy).
pub fn calibrate(groups: &[Vec<(f64, f64)>]) -> (f64, f64) {
    let mut best: Option<(f64, f64)> = None;
    for eps in candidate_thresholds(groups) {
        let acc = seg_accuracy(groups, eps).unwrap();
        match best {
            Some((_, b)) if acc <= b => {}
            _ => best = Some((eps, acc)),
        }
    }
    best.unwrap()
}

/// System pairs with distinct human scores; metric ties count as wrong.
pub fn sys_accuracy(systems: &[(f64, f64)]) -> Option<f64> {
    let mut correct = 0;
    let mut total = 0;
    for i in 0..systems.len() {
        for j in 0..systems.len() {
            if i >= j {
                continue;
            }
            let h = sign(systems[i].0 - systems[j].0);
            if h == 0 {
                continue;
            }
            total += 1;
            if h == sign(systems[i].1 - systems[j].1) {
                correct += 1;
            }
        }
    }
    (total > 0).then(|| correct as f64 / total as f64)
}

/// Textbook single-pass form of Pearson's r.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Character n-gram F-beta by listing substrings and greedily pairing equal
/// ones. Whitespace is removed first.
pub fn ngram_f(hyp: &str, reference: &str, n: usize, beta: f64) -> f64 {
    let grams = |s: &str| -> Vec<String> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut out = Vec::new();
        let mut start = 0;
        while start + n <= chars.len() {
            out.push(chars[start..start + n].iter().collect());
            start += 1;
        }
        out
    };
    let h = grams(hyp);
    let r = grams(reference);
    if h.is_empty() || r.is_empty() {
        return 0.0;
    }
    let mut used = vec![false; r.len()];
    let mut matched = 0usize;
    for g in &h {
        if let Some(k) = (0..r.len()).find(|&k| !used[k] && &r[k] == g) {
            used[k] = true;
            matched += 1;
        }
    }
    let p = matched as f64 / h.len() as f64;
    let rc = matched as f64 / r.len() as f64;
    if p + rc == 0.0 {
        return 0.0;
    }
    (1.0 + beta * beta) * p * rc / (beta * beta * p + rc)
}

pub fn baseline(hyp: &str, reference: &str, max_n: usize, beta: f64) -> f64 {
    let mut f = 0.0;
    for n in 1..=max_n {
        f += ngram_f(hyp, reference, n, beta);
    }
    25.0 * (1.0 - f / max_n as f64)
}

/// `(id, segment accuracy per lp, system accuracy per lp)`.
pub type Checkpoint = (String, BTreeMap<String, f64>, BTreeMap<String, f64>);

/// Highest weighted score; ties go to the smallest id.
pub fn select(evals: &[Checkpoint], lps: &[String]) -> String {
    let mut best: Option<(&str, f64)> = None;
    for (id, seg, sys) in evals {
        let mut s = 0.0;
        let mut t = 0.0;
        for lp in lps {
            s += seg[lp];
            t += sys[lp];
        }
        let total = 0.75 * s + 0.25 * t;
        best = match best {
            None => Some((id, total)),
            Some((bid, b)) if total > b || (total == b && id.as_str() < bid) => Some((id, total)),
            keep => keep,
        };
    }
    best.unwrap().0.to_string()
}
