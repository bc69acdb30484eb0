//! Training-input serialization and mixture assembly.
//!
//! An input is the concatenation of labelled sections joined by a single
//! space: `source: ...`, `candidate: ...`, `reference: ...`, in that order,
//! with only the sections the input mode calls for.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::corpus::{write_text, RatedSegment, RatingKind};
use crate::ratings::{da_to_mqm, to_stage1_target, TargetScale, TargetScore};
use crate::seed::derive_rng;
use crate::synthgen::{SyntheticCategory, SyntheticExample};
use crate::{Error, Outcome, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const SECTION_JOINER: &str = " ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InputMode {
    /// source + hypothesis
    #[serde(rename = "QE")]
    Qe,
    /// hypothesis + reference
    #[serde(rename = "REF")]
    Ref,
    /// source + hypothesis + reference
    #[serde(rename = "SRC_REF")]
    SrcRef,
}

impl InputMode {
    pub const ALL: [InputMode; 3] = [InputMode::Qe, InputMode::Ref, InputMode::SrcRef];

    pub fn needs_source(self) -> bool {
        matches!(self, InputMode::Qe | InputMode::SrcRef)
    }

    pub fn needs_reference(self) -> bool {
        matches!(self, InputMode::Ref | InputMode::SrcRef)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InputMode::Qe => "QE",
            InputMode::Ref => "REF",
            InputMode::SrcRef => "SRC_REF",
        }
    }
}

impl FromStr for InputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown input mode {s:?}")))
    }
}

pub fn serialize_input(
    source: Option<&str>,
    hypothesis: &str,
    reference: Option<&str>,
    mode: InputMode,
) -> Result<String> {
    let mut sections = Vec::with_capacity(3);
    if mode.needs_source() {
        let source = source.ok_or_else(|| Error::invalid(format!("{} input needs a source", mode.as_str())))?;
        sections.push(format!("source: {source}"));
    }
    sections.push(format!("candidate: {hypothesis}"));
    if mode.needs_reference() {
        let reference =
            reference.ok_or_else(|| Error::invalid(format!("{} input needs a reference", mode.as_str())))?;
        sections.push(format!("reference: {reference}"));
    }
    Ok(sections.join(SECTION_JOINER))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Stage {
    One,
    Two,
}

impl Stage {
    pub fn target_scale(self) -> TargetScale {
        match self {
            Stage::One => TargetScale::Stage1,
            Stage::Two => TargetScale::Mqm,
        }
    }
}

impl TryFrom<u8> for Stage {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Stage::One),
            2 => Ok(Stage::Two),
            other => Err(Error::invalid(format!("stage must be 1 or 2, got {other}"))),
        }
    }
}

impl From<Stage> for u8 {
    fn from(s: Stage) -> u8 {
        match s {
            Stage::One => 1,
            Stage::Two => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Provenance {
    Da,
    Mqm,
    Synthetic(SyntheticCategory),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Da => f.write_str("DA"),
            Provenance::Mqm => f.write_str("MQM"),
            Provenance::Synthetic(c) => write!(f, "SYNTHETIC:{c}"),
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "DA" => Ok(Provenance::Da),
            "MQM" => Ok(Provenance::Mqm),
            _ => match s.strip_prefix("SYNTHETIC:") {
                Some(c) => Ok(Provenance::Synthetic(c.parse()?)),
                None => Err(Error::invalid(format!("unknown provenance {s:?}"))),
            },
        }
    }
}

impl TryFrom<String> for Provenance {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Provenance> for String {
    fn from(p: Provenance) -> Self {
        p.to_string()
    }
}

/// `left:right`, e.g. 1:100.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Ratio {
    pub left: u64,
    pub right: u64,
}

impl Ratio {
    pub const fn new(left: u64, right: u64) -> Self {
        Self { left, right }
    }

    /// `count * left / right`, rounded half up.
    pub fn scale(self, count: usize) -> usize {
        let num = count as u128 * self.left as u128;
        let den = self.right as u128;
        ((2 * num + den) / (2 * den)) as usize
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.left, self.right)
    }
}

impl FromStr for Ratio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("ratio {s:?} must look like 1:100 with positive parts"));
        let (l, r) = s.split_once(':').ok_or_else(bad)?;
        let left: u64 = l.trim().parse().map_err(|_| bad())?;
        let right: u64 = r.trim().parse().map_err(|_| bad())?;
        if left == 0 || right == 0 {
            return Err(bad());
        }
        Ok(Self { left, right })
    }
}

impl TryFrom<String> for Ratio {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Ratio> for String {
    fn from(r: Ratio) -> Self {
        r.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeWeights {
    pub qe: f64,
    pub reference: f64,
    pub source_reference: f64,
}

impl ModeWeights {
    /// Uniform thirds over the three input modes.
    pub fn hybrid() -> Self {
        Self {
            qe: 1.0 / 3.0,
            reference: 1.0 / 3.0,
            source_reference: 1.0 / 3.0,
        }
    }

    /// Source, hypothesis and reference always present.
    pub fn reference_based() -> Self {
        Self {
            qe: 0.0,
            reference: 0.0,
            source_reference: 1.0,
        }
    }

    pub fn qe_only() -> Self {
        Self {
            qe: 1.0,
            reference: 0.0,
            source_reference: 0.0,
        }
    }

    pub fn weight(&self, mode: InputMode) -> f64 {
        match mode {
            InputMode::Qe => self.qe,
            InputMode::Ref => self.reference,
            InputMode::SrcRef => self.source_reference,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ws = [self.qe, self.reference, self.source_reference];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("mode weights must be finite and non-negative"));
        }
        let sum: f64 = ws.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("mode weights sum to {sum}, expected 1")));
        }
        Ok(())
    }

    /// Exact per-mode counts for `n` items by largest remainder; ties in the
    /// remainder go to the earlier mode.
    pub fn quotas(&self, n: usize) -> [usize; 3] {
        let ideal: Vec<f64> = InputMode::ALL.iter().map(|&m| self.weight(m) * n as f64).collect();
        let mut counts: [usize; 3] = [0; 3];
        for (c, x) in counts.iter_mut().zip(&ideal) {
            *c = x.floor() as usize;
        }
        let mut left = n.saturating_sub(counts.iter().sum());
        let mut order: Vec<usize> = (0..3).filter(|&i| ideal[i] > 0.0).collect();
        order.sort_by(|&a, &b| {
            (ideal[b] - ideal[b].floor())
                .total_cmp(&(ideal[a] - ideal[a].floor()))
                .then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if left == 0 {
                break;
            }
            counts[i] += 1;
            left -= 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub stage: Stage,
    /// Synthetic:real, applied per category.
    pub synthetic_ratio: Ratio,
    pub categories: Vec<SyntheticCategory>,
    /// DA:MQM, stage two only.
    pub da_mqm_ratio: Option<Ratio>,
    pub mode_weights: ModeWeights,
    /// Emit every record once per input mode with non-zero weight instead of
    /// assigning one mode per record.
    pub duplicate_all_modes: bool,
    pub max_input_chars: usize,
    pub seed: u64,
}

fn default_categories() -> Vec<SyntheticCategory> {
    SyntheticCategory::ALL
        .into_iter()
        .filter(|c| *c != SyntheticCategory::Duplication)
        .collect()
}

impl MixtureSpec {
    pub fn stage1(seed: u64) -> Self {
        Self {
            stage: Stage::One,
            synthetic_ratio: Ratio::new(1, 100),
            categories: default_categories(),
            da_mqm_ratio: None,
            mode_weights: ModeWeights::hybrid(),
            duplicate_all_modes: false,
            max_input_chars: 2000,
            seed,
        }
    }

    pub fn stage2(seed: u64) -> Self {
        Self {
            stage: Stage::Two,
            synthetic_ratio: Ratio::new(1, 5000),
            da_mqm_ratio: Some(Ratio::new(1, 4)),
            ..Self::stage1(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mode_weights.validate()?;
        for r in std::iter::once(self.synthetic_ratio).chain(self.da_mqm_ratio) {
            if r.left == 0 || r.right == 0 {
                return Err(Error::invalid(format!("ratio {r} must be positive")));
            }
        }
        if self.stage == Stage::One && self.da_mqm_ratio.is_some() {
            return Err(Error::invalid("a DA:MQM ratio only applies to stage 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TrainingRow", try_from = "TrainingRow")]
pub struct TrainingRecord {
    pub input_text: String,
    pub target: TargetScore,
    pub mode: InputMode,
    pub stage: Stage,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrainingRow {
    input: String,
    target: f64,
    mode: InputMode,
    stage: Stage,
    provenance: Provenance,
}

impl From<TrainingRecord> for TrainingRow {
    fn from(r: TrainingRecord) -> Self {
        Self {
            input: r.input_text,
            target: r.target.value(),
            mode: r.mode,
            stage: r.stage,
            provenance: r.provenance,
        }
    }
}

impl TryFrom<TrainingRow> for TrainingRecord {
    type Error = Error;

    fn try_from(row: TrainingRow) -> Result<Self> {
        Ok(Self {
            target: TargetScore::new(row.target, row.stage.target_scale())?,
            input_text: row.input,
            mode: row.mode,
            stage: row.stage,
            provenance: row.provenance,
        })
    }
}

/// Maps an MQM-scale label onto the stage-one scale: 0 -> -1, 25 -> 1.
pub fn mqm_label_to_stage1(label: f64) -> Result<TargetScore> {
    TargetScore::new(label / 12.5 - 1.0, TargetScale::Stage1)
}

#[derive(Debug, Clone)]
struct Candidate<'a> {
    source: &'a str,
    hypothesis: &'a str,
    reference: Option<&'a str>,
    target: TargetScore,
    provenance: Provenance,
}

/// Exactly `count` items: whole copies of the pool as needed, then a
/// without-replacement sample for the remainder.
fn resample<T: Clone>(pool: &[T], count: usize, seed: u64, label: &str) -> Vec<T> {
    if pool.is_empty() || count == 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count / pool.len() {
        out.extend_from_slice(pool);
    }
    let rest = count % pool.len();
    if rest > 0 {
        let mut rng = derive_rng(seed, &["resample", label]);
        let mut picked = index::sample(&mut rng, pool.len(), rest).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| pool[i].clone()));
    }
    out
}

/// Builds a training mixture for one stage.
///
/// Stage 1 takes z-normalized, aggregated DA records (`DA_Z`). Stage 2 takes
/// MQM records and, optionally, raw DA records (`DA_RAW`) that are mapped to
/// the MQM scale and mixed in at the DA:MQM ratio. Each active synthetic
/// category contributes one example per `ratio.right / ratio.left` real
/// records. The result is shuffled with the mixture seed.
pub fn assemble(
    records: &[RatedSegment],
    synthetic: &[SyntheticExample],
    spec: &MixtureSpec,
) -> Result<Outcome<Vec<TrainingRecord>>> {
    spec.validate()?;
    let mut out = Outcome::new(Vec::new());
    fn candidate(r: &RatedSegment, target: TargetScore, provenance: Provenance) -> Candidate<'_> {
        Candidate {
            source: &r.source,
            hypothesis: &r.hypothesis,
            reference: r.reference.as_deref(),
            target,
            provenance,
        }
    }

    let mut real: Vec<Candidate<'_>> = Vec::new();
    match spec.stage {
        Stage::One => {
            for r in records {
                if r.rating_kind != RatingKind::DaZ {
                    return Err(Error::invalid(format!(
                        "stage 1 expects DA_Z records; {}/{} is {}",
                        r.segment_id,
                        r.system_id,
                        r.rating_kind.as_str()
                    )));
                }
                real.push(candidate(r, to_stage1_target(r.score)?, Provenance::Da));
            }
            if real.is_empty() {
                return Err(Error::Unsatisfiable("stage 1 needs at least one DA_Z record".into()));
            }
        }
        Stage::Two => {
            let mut da_pool = Vec::new();
            for r in records {
                match r.rating_kind {
                    RatingKind::Mqm => real.push(candidate(
                        r,
                        TargetScore::new(r.score, TargetScale::Mqm)?,
                        Provenance::Mqm,
                    )),
                    RatingKind::DaRaw => da_pool.push(candidate(r, da_to_mqm(r.score)?, Provenance::Da)),
                    RatingKind::DaZ => {
                        return Err(Error::invalid(format!(
                            "stage 2 mixes raw DA ratings; {}/{} is DA_Z",
                            r.segment_id, r.system_id
                        )))
                    }
                }
            }
            if real.is_empty() {
                return Err(Error::Unsatisfiable("stage 2 needs at least one MQM record".into()));
            }
            if let Some(ratio) = spec.da_mqm_ratio {
                let wanted = ratio.scale(real.len());
                if da_pool.is_empty() {
                    out.warn(format!("no DA_RAW records supplied; DA:MQM {ratio} mixing skipped"));
                } else {
                    if da_pool.len() < wanted {
                        out.warn(format!("DA pool has {} records, upsampling to {wanted}", da_pool.len()));
                    }
                    real.extend(resample(&da_pool, wanted, spec.seed, "DA"));
                }
            }
        }
    }

    let per_category = spec.synthetic_ratio.scale(real.len());
    let mut items = real;
    for &category in &spec.categories {
        let pool: Vec<&SyntheticExample> = synthetic.iter().filter(|s| s.category == category).collect();
        if per_category > 0 && pool.is_empty() {
            return Err(Error::Unsatisfiable(format!(
                "{category}: {per_category} synthetic examples required but none supplied"
            )));
        }
        if pool.len() < per_category {
            out.warn(format!(
                "{category}: upsampling {} examples to {per_category}",
                pool.len()
            ));
        }
        for ex in resample(&pool, per_category, spec.seed, category.as_str()) {
            let target = match spec.stage {
                Stage::One => mqm_label_to_stage1(ex.label)?,
                Stage::Two => TargetScore::new(ex.label, TargetScale::Mqm)?,
            };
            items.push(Candidate {
                source: &ex.source,
                hypothesis: &ex.hypothesis,
                reference: ex.reference.as_deref(),
                target,
                provenance: Provenance::Synthetic(category),
            });
        }
    }

    let enabled: Vec<InputMode> = InputMode::ALL
        .into_iter()
        .filter(|&m| spec.mode_weights.weight(m) > 0.0)
        .collect();
    let feasible = |c: &Candidate<'_>, m: InputMode| !m.needs_reference() || c.reference.is_some();
    let fallback = |c: &Candidate<'_>| {
        enabled.iter().copied().filter(|&m| feasible(c, m)).max_by(|&a, &b| {
            spec.mode_weights
                .weight(a)
                .total_cmp(&spec.mode_weights.weight(b))
                .then(b.cmp(&a))
        })
    };

    let mut assignments: Vec<(usize, InputMode)> = Vec::new();
    if spec.duplicate_all_modes {
        for (i, _) in items.iter().enumerate() {
            assignments.extend(enabled.iter().map(|&m| (i, m)));
        }
    } else {
        let quotas = spec.mode_weights.quotas(items.len());
        let mut modes: Vec<InputMode> = InputMode::ALL
            .into_iter()
            .zip(quotas)
            .flat_map(|(m, q)| std::iter::repeat_n(m, q))
            .collect();
        modes.shuffle(&mut derive_rng(spec.seed, &["modes"]));
        assignments.extend(modes.into_iter().enumerate());
    }

    let (mut infeasible, mut too_long) = (0usize, 0usize);
    for (i, mode) in assignments {
        let c = &items[i];
        let mode = if feasible(c, mode) {
            mode
        } else {
            match fallback(c) {
                Some(m) => m,
                None => {
                    infeasible += 1;
                    continue;
                }
            }
        };
        let input_text = serialize_input(Some(c.source), c.hypothesis, c.reference, mode)?;
        if input_text.chars().count() > spec.max_input_chars {
            too_long += 1;
            continue;
        }
        out.value.push(TrainingRecord {
            input_text,
            target: c.target,
            mode,
            stage: spec.stage,
            provenance: c.provenance,
        });
    }
    if infeasible > 0 {
        out.warn(format!(
            "dropped {infeasible} records lacking a reference for every enabled mode"
        ));
    }
    if too_long > 0 {
        out.warn(format!(
            "dropped {too_long} records whose input exceeds {} characters",
            spec.max_input_chars
        ));
    }
    out.value.shuffle(&mut derive_rng(spec.seed, &["order"]));
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MixtureHeader {
    format_version: u32,
    joiner: String,
    spec: MixtureSpec,
}

pub fn mixture_to_jsonl(spec: &MixtureSpec, records: &[TrainingRecord]) -> Result<String> {
    let header = MixtureHeader {
        format_version: FORMAT_VERSION,
        joiner: SECTION_JOINER.to_string(),
        spec: spec.clone(),
    };
    let mut out = serde_json::to_string(&header)?;
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn save_mixture(spec: &MixtureSpec, records: &[TrainingRecord], path: &Path) -> Result<()> {
    write_text(path, &mixture_to_jsonl(spec, records)?)
}

pub fn mixture_from_jsonl(text: &str) -> Result<(MixtureSpec, Vec<TrainingRecord>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: MixtureHeader =
        serde_json::from_str(lines.next().ok_or_else(|| Error::Header("empty mixture file".into()))?)
            .map_err(|e| Error::Header(format!("mixture header: {e}")))?;
    if header.format_version != FORMAT_VERSION || header.joiner != SECTION_JOINER {
        return Err(Error::Header(format!(
            "unsupported mixture format version {} with joiner {:?}",
            header.format_version, header.joiner
        )));
    }
    let records = lines
        .map(serde_json::from_str)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((header.spec, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn serialization_formats() {
        assert_eq!(
            serialize_input(Some("s"), "h", Some("r"), InputMode::SrcRef).unwrap(),
            "source: s candidate: h reference: r"
        );
        assert_eq!(
            serialize_input(Some("s"), "h", None, InputMode::Qe).unwrap(),
            "source: s candidate: h"
        );
        assert_eq!(
            serialize_input(None, "h", Some("r"), InputMode::Ref).unwrap(),
            "candidate: h reference: r"
        );
        let err = serialize_input(None, "h", Some("r"), InputMode::SrcRef).unwrap_err();
        assert!(err.to_string().contains("SRC_REF"));
        assert!(serialize_input(Some("s"), "h", None, InputMode::Ref).is_err());
    }

    #[test]
    fn ratio_parsing_and_scaling() {
        let r: Ratio = "1:100".parse().unwrap();
        assert_eq!(r.scale(10_000), 100);
        assert_eq!(r.scale(149), 1);
        assert_eq!(r.scale(150), 2);
        assert_eq!(Ratio::new(1, 4).scale(8000), 2000);
        assert!("0:5".parse::<Ratio>().is_err());
        assert!("1/5".parse::<Ratio>().is_err());
    }

    #[test]
    fn quotas_are_exact() {
        assert_eq!(ModeWeights::hybrid().quotas(9_999), [3333, 3333, 3333]);
        assert_eq!(ModeWeights::hybrid().quotas(10_000).iter().sum::<usize>(), 10_000);
        assert_eq!(ModeWeights::reference_based().quotas(7), [0, 0, 7]);
        assert!(ModeWeights {
            qe: 0.5,
            reference: 0.2,
            source_reference: 0.2
        }
        .validate()
        .is_err());
    }

    #[test]
    fn provenance_strings() {
        let p = Provenance::Synthetic(SyntheticCategory::MissingPunct);
        assert_eq!(p.to_string(), "SYNTHETIC:MISSING_PUNCT");
        assert_eq!("SYNTHETIC:MISSING_PUNCT".parse::<Provenance>().unwrap(), p);
        assert_eq!("DA".parse::<Provenance>().unwrap(), Provenance::Da);
    }

    #[test]
    fn stage1_label_map() {
        assert_eq!(mqm_label_to_stage1(0.0).unwrap().value(), -1.0);
        assert_eq!(mqm_label_to_stage1(25.0).unwrap().value(), 1.0);
    }

    fn rated(i: usize, kind: RatingKind, score: f64) -> RatedSegment {
        RatedSegment {
            lp: "en-de".parse().unwrap(),
            domain: None,
            year: None,
            segment_id: i.to_string(),
            system_id: "sys".into(),
            rater_id: None,
            source: format!("Quelle {i}"),
            hypothesis: format!("hypothesis {i}"),
            reference: Some(format!("reference {i}")),
            score,
            rating_kind: kind,
        }
    }

    fn synth(category: SyntheticCategory, n: usize) -> Vec<SyntheticExample> {
        (0..n)
            .map(|i| SyntheticExample {
                category,
                lp: "en-de".parse().unwrap(),
                origin_segment_id: i.to_string(),
                origin_system_id: "sys".into(),
                source: format!("s{i}"),
                hypothesis: String::new(),
                reference: Some(format!("r{i}")),
                label: 25.0,
                seed_trace: 0,
            })
            .collect()
    }

    #[test]
    fn stage2_without_mqm_is_unsatisfiable() {
        let da: Vec<_> = (0..10).map(|i| rated(i, RatingKind::DaRaw, 50.0)).collect();
        let err = assemble(&da, &[], &MixtureSpec::stage2(1)).unwrap_err();
        assert!(matches!(err, Error::Unsatisfiable(_)));
    }

    #[test]
    fn stage1_rejects_raw_da() {
        let da: Vec<_> = (0..3).map(|i| rated(i, RatingKind::DaRaw, 50.0)).collect();
        assert!(assemble(&da, &[], &MixtureSpec::stage1(1)).is_err());
    }

    #[test]
    fn missing_reference_falls_back_to_qe() {
        let mut recs: Vec<_> = (0..30).map(|i| rated(i, RatingKind::DaZ, 0.1)).collect();
        for r in &mut recs {
            r.reference = None;
        }
        let spec = MixtureSpec {
            categories: vec![],
            ..MixtureSpec::stage1(3)
        };
        let out = assemble(&recs, &[], &spec).unwrap().value;
        assert_eq!(out.len(), 30);
        assert!(out.iter().all(|r| r.mode == InputMode::Qe));

        let spec = MixtureSpec {
            mode_weights: ModeWeights::reference_based(),
            ..spec
        };
        let out = assemble(&recs, &[], &spec).unwrap();
        assert!(out.value.is_empty());
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn long_inputs_dropped() {
        let mut recs: Vec<_> = (0..4).map(|i| rated(i, RatingKind::DaZ, 0.1)).collect();
        recs[0].hypothesis = "x".repeat(3000);
        let spec = MixtureSpec {
            categories: vec![],
            ..MixtureSpec::stage1(3)
        };
        let out = assemble(&recs, &[], &spec).unwrap();
        assert_eq!(out.value.len(), 3);
        assert!(out.warnings[0].contains("2000"));
    }

    #[test]
    fn duplicate_all_modes() {
        let recs: Vec<_> = (0..5).map(|i| rated(i, RatingKind::DaZ, 0.1)).collect();
        let spec = MixtureSpec {
            categories: vec![],
            duplicate_all_modes: true,
            ..MixtureSpec::stage1(3)
        };
        assert_eq!(assemble(&recs, &[], &spec).unwrap().value.len(), 15);
    }

    #[test]
    fn file_round_trip() {
        let recs: Vec<_> = (0..200).map(|i| rated(i, RatingKind::DaZ, -0.4)).collect();
        let syn = synth(SyntheticCategory::Empty, 3);
        let spec = MixtureSpec {
            categories: vec![SyntheticCategory::Empty],
            ..MixtureSpec::stage1(9)
        };
        let out = assemble(&recs, &syn, &spec).unwrap().value;
        assert_eq!(out.len(), 202);
        let text = mixture_to_jsonl(&spec, &out).unwrap();
        let (spec2, back) = mixture_from_jsonl(&text).unwrap();
        assert_eq!(spec2, spec);
        assert_eq!(back, out);
    }

    proptest! {
        #[test]
        fn serialization_is_injective(
            a in ("[a-z ]{0,6}", "[a-z ]{0,6}", "[a-z ]{0,6}"),
            b in ("[a-z ]{0,6}", "[a-z ]{0,6}", "[a-z ]{0,6}"),
            mode in proptest::sample::select(InputMode::ALL.to_vec()),
        ) {
            // Only the fields a mode serializes can distinguish inputs.
            let key = |t: &(String, String, String)| (
                mode.needs_source().then(|| t.0.clone()),
                t.1.clone(),
                mode.needs_reference().then(|| t.2.clone()),
            );
            prop_assume!(key(&a) != key(&b));
            let sa = serialize_input(Some(&a.0), &a.1, Some(&a.2), mode).unwrap();
            let sb = serialize_input(Some(&b.0), &b.1, Some(&b.2), mode).unwrap();
            prop_assert_ne!(sa, sb);
        }
    }
}
