use std::path::Path;

use anyhow::{bail, Context, Result};
use clozeforge::dataset::SortOrder;
use clozeforge::{ClozeConfig, Criterion, SegmentationConfig, TopK};
use serde::{Deserialize, Serialize};

/// Subset selection applied after generation or by `filter`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub criterion: Criterion,
    pub top_k: Option<TopK>,
    pub order: Option<SortOrder>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            criterion: Criterion::None,
            top_k: None,
            order: None,
        }
    }
}

/// Everything a run depends on. Loaded from TOML, then overridden by flags;
/// the effective value is recorded in the dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: usize,
    pub annotator: String,
    pub segmentation: SegmentationConfig,
    pub cloze: ClozeConfig,
    pub selection: SelectionConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 13,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            annotator: "builtin".into(),
            segmentation: SegmentationConfig::default(),
            cloze: ClozeConfig::default(),
            selection: SelectionConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            bail!("workers must be at least 1");
        }
        if let Err(e) = self.segmentation.validate() {
            bail!(e);
        }
        if let Err(e) = self.cloze.validate() {
            bail!(e);
        }
        if let Some(TopK::Count(n)) = self.selection.top_k {
            if n < 0 {
                bail!("top-k must not be negative, got {n}");
            }
        }
        if let Some(TopK::Fraction(f)) = self.selection.top_k {
            if !(0.0..=1.0).contains(&f) {
                bail!("fractional top-k must lie in [0, 1], got {f}");
            }
        }
        Ok(())
    }

    /// Config as recorded in a manifest. Worker count is left out since it
    /// does not affect the output.
    pub fn manifest_value(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).unwrap_or_default();
        if let Some(obj) = v.as_object_mut() {
            obj.remove("workers");
        }
        v
    }
}
