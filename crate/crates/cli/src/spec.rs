//! Sweep specifications and the checked-in figure presets.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use minent_core::predictors::nist::{NistConfig, NistPredictor};
use minent_core::{AlphaShape, Strategy};
use serde::{Deserialize, Serialize};

const FIG1: &str = include_str!("../presets/fig1.json");
const FIG2: &str = include_str!("../presets/fig2.json");
const FIG4: &str = include_str!("../presets/fig4.json");
const FIG5: &str = include_str!("../presets/fig5.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Fig1,
    Fig2,
    Fig4,
    Fig5,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Fig1, Family::Fig2, Family::Fig4, Family::Fig5];

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Fig1 => "fig1",
            Family::Fig2 => "fig2",
            Family::Fig4 => "fig4",
            Family::Fig5 => "fig5",
        }
    }

    pub fn preset_json(&self) -> &'static str {
        match self {
            Family::Fig1 => FIG1,
            Family::Fig2 => FIG2,
            Family::Fig4 => FIG4,
            Family::Fig5 => FIG5,
        }
    }

    pub fn preset(&self) -> ExperimentSpec {
        ExperimentSpec::from_json(self.preset_json()).expect("checked-in preset parses")
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .with_context(|| format!("unknown family {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Exact,
    Mc,
    Counting,
    Nist,
    External,
}

impl MethodKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodKind::Exact => "exact",
            MethodKind::Mc => "mc",
            MethodKind::Counting => "counting",
            MethodKind::Nist => "nist",
            MethodKind::External => "external",
        }
    }
}

/// Cartesian grid of gbAR models: `shapes x p x alpha_mass x signs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelGrid {
    pub shapes: Vec<AlphaShape>,
    pub p: Vec<usize>,
    pub alpha_mass: Vec<f64>,
    /// Sign patterns, repeated cyclically up to length `p`. Empty means all
    /// positive.
    pub signs: Vec<Vec<i8>>,
    pub epsilon: f64,
}

impl Default for ModelGrid {
    fn default() -> Self {
        Self {
            shapes: Vec::new(),
            p: Vec::new(),
            alpha_mass: Vec::new(),
            signs: Vec::new(),
            epsilon: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSettings {
    pub num_samples: usize,
    pub sample_bits: usize,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            num_samples: minent_core::monte_carlo::DEFAULT_NUM_SAMPLES,
            sample_bits: minent_core::monte_carlo::DEFAULT_SAMPLE_BITS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountingSettings {
    pub train_bits: usize,
    pub test_bits: usize,
    /// Context length of the predictor; `None` uses the model order.
    pub p_model: Option<usize>,
    pub strategies: Vec<Strategy>,
}

impl Default for CountingSettings {
    fn default() -> Self {
        Self {
            train_bits: 12_800_000,
            test_bits: 3_200_000,
            p_model: None,
            strategies: vec![Strategy::Joint],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NistSettings {
    pub bits: usize,
    pub predictors: Vec<NistPredictor>,
    pub config: NistConfig,
}

impl Default for NistSettings {
    fn default() -> Self {
        Self {
            bits: 1_000_000,
            predictors: NistPredictor::ALL.to_vec(),
            config: NistConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExternalFormat {
    /// The generator's bit-packed format.
    #[default]
    Packed,
    /// One byte (0 or 1) per bit.
    Unpacked,
}

/// External entropy-assessment program run once per model. `{file}` in any
/// argument is replaced by the path of the generated input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalHook {
    pub command: Vec<String>,
    #[serde(default = "default_external_bits")]
    pub bits: usize,
    #[serde(default)]
    pub format: ExternalFormat,
}

fn default_external_bits() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Label written to every row and used as the CSV file stem.
    pub family: String,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub models: ModelGrid,
    pub methods: Vec<MethodKind>,
    /// Future lengths `n` for exact and Monte Carlo points (`n + 1` bits).
    pub n: Vec<usize>,
    /// Predicted bits per evaluation for counting points.
    pub target_bits: Vec<usize>,
    pub mc: McSettings,
    pub counting: CountingSettings,
    pub nist: NistSettings,
    pub external: Option<ExternalHook>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            family: "sweep".into(),
            seed: 0,
            output_dir: None,
            models: ModelGrid::default(),
            methods: Vec::new(),
            n: Vec::new(),
            target_bits: Vec::new(),
            mc: McSettings::default(),
            counting: CountingSettings::default(),
            nist: NistSettings::default(),
            external: None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_json(s: &str) -> anyhow::Result<Self> {
        let spec: Self = serde_json::from_str(s).context("parsing experiment spec")?;
        spec.check()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    fn check(&self) -> anyhow::Result<()> {
        if self.family.is_empty() || self.family.contains(['/', '\\']) {
            bail!("family must be a plain file stem, got {:?}", self.family);
        }
        if self.methods.contains(&MethodKind::External) && self.external.is_none() {
            bail!("method \"external\" needs an \"external\" section");
        }
        if let Some(hook) = &self.external {
            if hook.command.is_empty() {
                bail!("external command is empty");
            }
        }
        if self.models.signs.iter().any(|s| s.is_empty()) {
            bail!("sign patterns must be non-empty");
        }
        Ok(())
    }
}
