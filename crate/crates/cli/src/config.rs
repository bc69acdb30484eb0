//! Flat `key = value` pipeline configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use mteval_core::baseline::BaselineConfig;
use mteval_core::corpus::LanguagePair;
use mteval_core::mixture::{MixtureSpec, ModeWeights, Ratio};
use mteval_core::selection::default_selection_lps;
use mteval_core::synthgen::{SynthConfig, SyntheticCategory};
use sha2::{Digest, Sha256};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    /// Empty means every language pair.
    pub lp_filter: Vec<LanguagePair>,
    pub synth: SynthConfig,
    pub stage1_synthetic_ratio: Ratio,
    pub stage2_synthetic_ratio: Ratio,
    pub stage2_da_mqm_ratio: Ratio,
    pub mix_categories: Vec<SyntheticCategory>,
    pub mode_weights: ModeWeights,
    pub duplicate_all_modes: bool,
    pub max_input_chars: usize,
    pub baseline: BaselineConfig,
    pub selection_lps: Vec<LanguagePair>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let stage1 = MixtureSpec::stage1(0);
        let stage2 = MixtureSpec::stage2(0);
        Self {
            seed: None,
            output_dir: None,
            lp_filter: Vec::new(),
            synth: SynthConfig::default(),
            stage1_synthetic_ratio: stage1.synthetic_ratio,
            stage2_synthetic_ratio: stage2.synthetic_ratio,
            stage2_da_mqm_ratio: stage2.da_mqm_ratio.expect("stage 2 default has a DA:MQM ratio"),
            mix_categories: stage1.categories,
            mode_weights: stage1.mode_weights,
            duplicate_all_modes: stage1.duplicate_all_modes,
            max_input_chars: stage1.max_input_chars,
            baseline: BaselineConfig::default(),
            selection_lps: default_selection_lps(),
        }
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn split_list<T>(value: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: std::error::Error + Send + Sync + 'static,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().with_context(|| format!("bad list item {s:?}")))
        .collect()
}

fn parse<T>(key: &str, value: &str) -> Result<T>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow!("config key `{key}`: cannot parse {value:?}: {e}"))
}

impl PipelineConfig {
    /// Canonical text form: every key, sorted, one per line.
    pub fn to_text(&self) -> String {
        let mut kv: BTreeMap<&str, String> = BTreeMap::new();
        kv.insert("seed", self.seed.map(|s| s.to_string()).unwrap_or_default());
        kv.insert(
            "output_dir",
            self.output_dir
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        kv.insert("lp_filter", join(&self.lp_filter));
        kv.insert("synth.categories", join(&self.synth.categories));
        kv.insert("synth.end_punctuation", self.synth.end_punctuation.iter().collect());
        kv.insert("synth.duplication_label", self.synth.duplication_label.to_string());
        kv.insert("synth.per_lp_sample", self.synth.per_lp_sample.to_string());
        kv.insert("synth.per_symbol_sample", self.synth.per_symbol_sample.to_string());
        kv.insert("synth.unrelated_window", self.synth.unrelated_window.to_string());
        kv.insert("mix.stage1.synthetic_ratio", self.stage1_synthetic_ratio.to_string());
        kv.insert("mix.stage2.synthetic_ratio", self.stage2_synthetic_ratio.to_string());
        kv.insert("mix.stage2.da_mqm_ratio", self.stage2_da_mqm_ratio.to_string());
        kv.insert("mix.categories", join(&self.mix_categories));
        kv.insert(
            "mix.mode_weights",
            format!(
                "{},{},{}",
                self.mode_weights.qe, self.mode_weights.reference, self.mode_weights.source_reference
            ),
        );
        kv.insert("mix.duplicate_all_modes", self.duplicate_all_modes.to_string());
        kv.insert("mix.max_input_chars", self.max_input_chars.to_string());
        kv.insert("baseline.max_ngram", self.baseline.max_ngram.to_string());
        kv.insert("baseline.beta", self.baseline.beta.to_string());
        kv.insert("selection.lps", join(&self.selection_lps));

        let mut out = format!("version = {CONFIG_VERSION}\n");
        for (k, v) in kv {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut config = Self::default();
        let mut version = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected `key = value`", i + 1))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "version" {
                version = Some(parse::<u32>(key, value)?);
                continue;
            }
            config
                .set(key, value)
                .with_context(|| format!("config line {}", i + 1))?;
        }
        match version {
            Some(CONFIG_VERSION) => Ok(config),
            Some(v) => bail!("unsupported config version {v}; expected {CONFIG_VERSION}"),
            None => bail!("config is missing the `version` key"),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => {
                self.seed = if value.is_empty() {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "output_dir" => self.output_dir = (!value.is_empty()).then(|| PathBuf::from(value)),
            "lp_filter" => self.lp_filter = split_list(value)?,
            "synth.categories" => self.synth.categories = split_list(value)?,
            "synth.end_punctuation" => {
                self.synth.end_punctuation = value.chars().filter(|c| !c.is_whitespace()).collect();
            }
            "synth.duplication_label" => self.synth.duplication_label = parse(key, value)?,
            "synth.per_lp_sample" => self.synth.per_lp_sample = parse(key, value)?,
            "synth.per_symbol_sample" => self.synth.per_symbol_sample = parse(key, value)?,
            "synth.unrelated_window" => self.synth.unrelated_window = parse(key, value)?,
            "mix.stage1.synthetic_ratio" => self.stage1_synthetic_ratio = parse(key, value)?,
            "mix.stage2.synthetic_ratio" => self.stage2_synthetic_ratio = parse(key, value)?,
            "mix.stage2.da_mqm_ratio" => self.stage2_da_mqm_ratio = parse(key, value)?,
            "mix.categories" => self.mix_categories = split_list(value)?,
            "mix.mode_weights" => {
                let w: Vec<f64> = value.split(',').map(|s| parse(key, s.trim())).collect::<Result<_>>()?;
                let [qe, reference, source_reference] = w[..] else {
                    bail!("config key `{key}` needs three comma-separated weights (QE, REF, SRC_REF)");
                };
                self.mode_weights = ModeWeights {
                    qe,
                    reference,
                    source_reference,
                };
            }
            "mix.duplicate_all_modes" => self.duplicate_all_modes = parse(key, value)?,
            "mix.max_input_chars" => self.max_input_chars = parse(key, value)?,
            "baseline.max_ngram" => self.baseline.max_ngram = parse(key, value)?,
            "baseline.beta" => self.baseline.beta = parse(key, value)?,
            "selection.lps" => self.selection_lps = split_list(value)?,
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    /// Canonical text without `output_dir`, so moving the outputs does not
    /// change the hash.
    pub fn manifest_text(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        c.to_text()
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.manifest_text().as_bytes()))
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| anyhow!("this command needs a seed (--seed or `seed` in the config)"))
    }

    pub fn mixture_spec(&self, stage: u8, seed: u64) -> MixtureSpec {
        let mut spec = if stage == 1 {
            MixtureSpec::stage1(seed)
        } else {
            MixtureSpec::stage2(seed)
        };
        spec.synthetic_ratio = if stage == 1 {
            self.stage1_synthetic_ratio
        } else {
            self.stage2_synthetic_ratio
        };
        if stage == 2 {
            spec.da_mqm_ratio = Some(self.stage2_da_mqm_ratio);
        }
        spec.categories = self.mix_categories.clone();
        spec.mode_weights = self.mode_weights;
        spec.duplicate_all_modes = self.duplicate_all_modes;
        spec.max_input_chars = self.max_input_chars;
        spec
    }

    pub fn keeps(&self, lp: &LanguagePair) -> bool {
        self.lp_filter.is_empty() || self.lp_filter.contains(lp)
    }
}
