//! Rated translation data and metric score files.
//!
//! Ratings are persisted as JSONL (one [`RatedSegment`] per line). TSV is
//! accepted on ingestion and can be written for records whose text fields
//! contain no tabs or line breaks. Text is never trimmed or normalized.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{Error, Result};

/// Column order for TSV files. JSONL records use the same keys.
pub const TSV_COLUMNS: [&str; 11] = [
    "lp",
    "domain",
    "year",
    "segment_id",
    "system_id",
    "rater_id",
    "source",
    "hypothesis",
    "reference",
    "score",
    "rating_kind",
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguagePair {
    source_lang: String,
    target_lang: String,
}

impl LanguagePair {
    pub fn new(source_lang: &str, target_lang: &str) -> Result<Self> {
        for code in [source_lang, target_lang] {
            if code.is_empty() || !code.bytes().all(|b| b.is_ascii_lowercase()) {
                return Err(Error::invalid(format!(
                    "language code {code:?} must be non-empty lowercase ASCII"
                )));
            }
        }
        Ok(Self {
            source_lang: source_lang.to_string(),
            target_lang: target_lang.to_string(),
        })
    }

    pub fn source_lang(&self) -> &str {
        &self.source_lang
    }

    pub fn target_lang(&self) -> &str {
        &self.target_lang
    }
}

impl fmt::Display for LanguagePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.source_lang, self.target_lang)
    }
}

impl FromStr for LanguagePair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (src, tgt) = s
            .split_once('-')
            .ok_or_else(|| Error::invalid(format!("language pair {s:?} is not of the form xx-yy")))?;
        Self::new(src, tgt)
    }
}

impl TryFrom<String> for LanguagePair {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LanguagePair> for String {
    fn from(lp: LanguagePair) -> Self {
        lp.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    #[serde(rename = "LOWER_BETTER")]
    LowerBetter,
    #[serde(rename = "HIGHER_BETTER")]
    HigherBetter,
}

impl Orientation {
    /// Maps a score onto a higher-is-better axis. Negation is exact, so
    /// aligned values are bit-identical under an orientation flip.
    pub fn align(self, value: f64) -> f64 {
        match self {
            Orientation::HigherBetter => value,
            Orientation::LowerBetter => -value,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::HigherBetter => Orientation::LowerBetter,
            Orientation::LowerBetter => Orientation::HigherBetter,
        }
    }
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LOWER_BETTER" => Ok(Orientation::LowerBetter),
            "HIGHER_BETTER" => Ok(Orientation::HigherBetter),
            other => Err(Error::invalid(format!("unknown orientation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RatingKind {
    #[serde(rename = "DA_RAW")]
    DaRaw,
    #[serde(rename = "DA_Z")]
    DaZ,
    #[serde(rename = "MQM")]
    Mqm,
}

impl RatingKind {
    pub fn orientation(self) -> Orientation {
        match self {
            RatingKind::Mqm => Orientation::LowerBetter,
            RatingKind::DaRaw | RatingKind::DaZ => Orientation::HigherBetter,
        }
    }

    /// Closed range the score must fall in, with its printable form.
    pub fn scale(self) -> Option<(f64, f64, &'static str)> {
        match self {
            RatingKind::DaRaw => Some((0.0, 100.0, "[0,100]")),
            RatingKind::Mqm => Some((0.0, 25.0, "[0,25]")),
            RatingKind::DaZ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RatingKind::DaRaw => "DA_RAW",
            RatingKind::DaZ => "DA_Z",
            RatingKind::Mqm => "MQM",
        }
    }
}

impl FromStr for RatingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "DA_RAW" => Ok(RatingKind::DaRaw),
            "DA_Z" => Ok(RatingKind::DaZ),
            "MQM" => Ok(RatingKind::Mqm),
            other => Err(Error::invalid(format!("unknown rating_kind {other:?}"))),
        }
    }
}

/// One human-rated translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatedSegment {
    pub lp: LanguagePair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    pub segment_id: String,
    pub system_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rater_id: Option<String>,
    pub source: String,
    pub hypothesis: String,
    /// Absent rather than empty when no reference exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub score: f64,
    pub rating_kind: RatingKind,
}

impl RatedSegment {
    /// Checks the record invariants. `line` is used for error reporting only.
    pub fn validate(&self, line: usize) -> Result<()> {
        let field = |field: &str, message: &str| Error::Field {
            line,
            field: field.to_string(),
            message: message.to_string(),
        };
        if self.segment_id.is_empty() {
            return Err(field("segment_id", "must not be empty"));
        }
        if self.system_id.is_empty() {
            return Err(field("system_id", "must not be empty"));
        }
        if self.hypothesis.is_empty() {
            return Err(field("hypothesis", "must not be empty for rated records"));
        }
        if !self.score.is_finite() {
            return Err(field("score", "must be a finite number"));
        }
        if let Some((lo, hi, scale)) = self.rating_kind.scale() {
            if self.score < lo || self.score > hi {
                return Err(Error::OutOfRange {
                    line,
                    kind: self.rating_kind.as_str().to_string(),
                    scale,
                    value: self.score,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Tsv,
    Jsonl,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(Format::Tsv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(Error::invalid(format!("unknown format {other:?}"))),
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_ratings(path: &Path, format: Format) -> Result<Vec<RatedSegment>> {
    let text = read_text(path)?;
    match format {
        Format::Jsonl => parse_ratings_jsonl(&text),
        Format::Tsv => parse_ratings_tsv(&text),
    }
}

pub fn parse_ratings_jsonl(text: &str) -> Result<Vec<RatedSegment>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| Error::Field {
            line: line_no,
            field: "<record>".into(),
            message: e.to_string(),
        })?;
        let Value::Object(map) = value else {
            return Err(Error::Field {
                line: line_no,
                field: "<record>".into(),
                message: "expected a JSON object".into(),
            });
        };
        out.push(record_from_fields(line_no, &map)?);
    }
    Ok(out)
}

pub fn parse_ratings_tsv(text: &str) -> Result<Vec<RatedSegment>> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Ok(Vec::new());
    };
    let columns: Vec<&str> = header.split('\t').collect();
    for required in TSV_COLUMNS {
        if !columns.contains(&required) {
            return Err(Error::Field {
                line: 1,
                field: required.to_string(),
                message: "missing from TSV header".into(),
            });
        }
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != columns.len() {
            let field = columns.get(cells.len()).copied().unwrap_or("<extra column>");
            return Err(Error::Field {
                line: line_no,
                field: field.to_string(),
                message: format!("expected {} columns, found {}", columns.len(), cells.len()),
            });
        }
        let mut map = Map::new();
        for (name, cell) in columns.iter().zip(cells) {
            // An empty TSV cell means the optional field is absent.
            if !cell.is_empty() {
                map.insert((*name).to_string(), Value::String(cell.to_string()));
            }
        }
        out.push(record_from_fields(line_no, &map)?);
    }
    Ok(out)
}

fn record_from_fields(line: usize, map: &Map<String, Value>) -> Result<RatedSegment> {
    let err = |field: &str, message: String| Error::Field {
        line,
        field: field.to_string(),
        message,
    };
    let opt_str = |field: &str| -> Result<Option<String>> {
        match map.get(field) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Err(err(field, format!("expected a string, found {other}"))),
        }
    };
    let req_str = |field: &str| -> Result<String> {
        opt_str(field)?.ok_or_else(|| err(field, "required field is missing".into()))
    };
    let number = |field: &str, value: &Value| -> Result<f64> {
        match value {
            Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| err(field, format!("{n} is not representable as f64"))),
            Value::String(s) => s
                .parse::<f64>()
                .map_err(|_| err(field, format!("{s:?} is not a number"))),
            other => Err(err(field, format!("expected a number, found {other}"))),
        }
    };

    let lp = req_str("lp")?
        .parse::<LanguagePair>()
        .map_err(|e| err("lp", e.to_string()))?;
    let rating_kind = req_str("rating_kind")?
        .parse::<RatingKind>()
        .map_err(|e| err("rating_kind", e.to_string()))?;
    let score = match map.get("score") {
        None | Some(Value::Null) => return Err(err("score", "required field is missing".into())),
        Some(v) => number("score", v)?,
    };
    let year = match map.get("year") {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) => Some(
            n.as_i64()
                .and_then(|y| i32::try_from(y).ok())
                .ok_or_else(|| err("year", format!("{n} is not a valid year")))?,
        ),
        Some(Value::String(s)) => Some(
            s.parse::<i32>()
                .map_err(|_| err("year", format!("{s:?} is not an integer")))?,
        ),
        Some(other) => return Err(err("year", format!("expected an integer, found {other}"))),
    };

    let record = RatedSegment {
        lp,
        domain: opt_str("domain")?,
        year,
        segment_id: req_str("segment_id")?,
        system_id: req_str("system_id")?,
        rater_id: opt_str("rater_id")?,
        source: req_str("source")?,
        hypothesis: req_str("hypothesis")?,
        reference: opt_str("reference")?,
        score,
        rating_kind,
    };
    record.validate(line)?;
    Ok(record)
}

pub fn save_ratings(records: &[RatedSegment], path: &Path, format: Format) -> Result<()> {
    let text = match format {
        Format::Jsonl => ratings_to_jsonl(records)?,
        Format::Tsv => ratings_to_tsv(records)?,
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn ratings_to_jsonl(records: &[RatedSegment]) -> Result<String> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn ratings_to_tsv(records: &[RatedSegment]) -> Result<String> {
    let mut out = TSV_COLUMNS.join("\t");
    out.push('\n');
    for (i, r) in records.iter().enumerate() {
        let cells = [
            r.lp.to_string(),
            r.domain.clone().unwrap_or_default(),
            r.year.map(|y| y.to_string()).unwrap_or_default(),
            r.segment_id.clone(),
            r.system_id.clone(),
            r.rater_id.clone().unwrap_or_default(),
            r.source.clone(),
            r.hypothesis.clone(),
            r.reference.clone().unwrap_or_default(),
            r.score.to_string(),
            r.rating_kind.as_str().to_string(),
        ];
        for (name, cell) in TSV_COLUMNS.iter().zip(&cells) {
            if cell.contains(['\t', '\n', '\r']) {
                return Err(Error::Field {
                    line: i + 2,
                    field: (*name).to_string(),
                    message: "tabs and line breaks cannot be written to TSV; use JSONL".into(),
                });
            }
        }
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub segment_id: String,
    pub system_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScoreHeader {
    lp: Option<LanguagePair>,
    orientation: Option<Orientation>,
}

/// Metric scores for one language pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub lp: LanguagePair,
    pub orientation: Orientation,
    entries: Vec<ScoreEntry>,
}

impl ScoreSet {
    pub fn new(lp: LanguagePair, orientation: Orientation, entries: Vec<ScoreEntry>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !e.score.is_finite() {
                return Err(Error::invalid(format!(
                    "non-finite score for (segment_id={}, system_id={})",
                    e.segment_id, e.system_id
                )));
            }
            if !seen.insert((e.segment_id.as_str(), e.system_id.as_str())) {
                return Err(Error::DuplicateKey {
                    segment_id: e.segment_id.clone(),
                    system_id: e.system_id.clone(),
                });
            }
        }
        Ok(Self {
            lp,
            orientation,
            entries,
        })
    }

    pub fn entries(&self) -> &[ScoreEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let header = ScoreHeader {
            lp: Some(self.lp.clone()),
            orientation: Some(self.orientation),
        };
        let mut out = serde_json::to_string(&header)?;
        out.push('\n');
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::Header("empty score file; a header with lp and orientation is required".into()))?;
        let header: ScoreHeader =
            serde_json::from_str(first).map_err(|e| Error::Header(format!("unreadable header object: {e}")))?;
        let lp = header
            .lp
            .ok_or_else(|| Error::Header("header must declare `lp`".into()))?;
        let orientation = header
            .orientation
            .ok_or_else(|| Error::Header("header must declare `orientation` (LOWER_BETTER or HIGHER_BETTER)".into()))?;
        let mut entries = Vec::new();
        for (idx, line) in lines {
            let entry: ScoreEntry = serde_json::from_str(line).map_err(|e| Error::Field {
                line: idx + 1,
                field: "<score>".into(),
                message: e.to_string(),
            })?;
            entries.push(entry);
        }
        Self::new(lp, orientation, entries)
    }
}

pub fn load_scores(path: &Path) -> Result<ScoreSet> {
    ScoreSet::from_jsonl(&read_text(path)?)
}

pub fn save_scores(scores: &ScoreSet, path: &Path) -> Result<()> {
    write_text(path, &scores.to_jsonl()?)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
