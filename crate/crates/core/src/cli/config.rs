//! Run configuration: TOML file, then command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::aligner::AlignerConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Gendered challenge set(s).
    pub challenge_sets: Vec<PathBuf>,
    pub translations: Option<PathBuf>,
    pub alignments: Option<PathBuf>,
    pub neutral_set: Option<PathBuf>,
    pub neutral_translations: Option<PathBuf>,
    pub neutral_alignments: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub outcomes: Option<PathBuf>,
    pub neutral_outcomes: Option<PathBuf>,
    pub dumps: Option<PathBuf>,
    pub stereotypes: Option<PathBuf>,
    pub gender_lexicon: Option<PathBuf>,
    pub articles: Option<PathBuf>,
    pub profession_map: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttentionConfig {
    pub n_min: usize,
    /// Inclusive layer range for heatmaps.
    pub layers: (usize, usize),
    /// Fixed color scale; `None` scales to the data.
    pub scale: Option<(f64, f64)>,
    /// Aggregate the masculine variant of each pair instead of the feminine.
    pub masculine_cue: bool,
    /// Layer and heads reported by the sanity check.
    pub check_layer: usize,
    pub check_heads: Vec<usize>,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        AttentionConfig {
            n_min: 195,
            layers: (8, 20),
            scale: None,
            masculine_cue: false,
            check_layer: 15,
            check_heads: vec![10, 25],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Table,
    Machine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub aligner: AlignerConfig,
    pub attention: AttentionConfig,
    pub format: ReportFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            paths: Paths { output_dir: PathBuf::from("out"), ..Paths::default() },
            aligner: AlignerConfig::default(),
            attention: AttentionConfig::default(),
            format: ReportFormat::Table,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Check hyperparameters and that every referenced input exists.
    pub fn validate(&self) -> Result<(), CliError> {
        self.aligner.validate().map_err(|e| CliError::Validation(format!("aligner: {e}")))?;
        let a = &self.attention;
        if a.n_min == 0 {
            return Err(CliError::Validation("attention.n_min must be at least 1".into()));
        }
        if a.layers.0 > a.layers.1 {
            return Err(CliError::Validation(format!("layer range {}-{} is empty", a.layers.0, a.layers.1)));
        }
        if let Some((lo, hi)) = a.scale {
            if lo.is_nan() || hi.is_nan() || hi <= lo {
                return Err(CliError::Validation(format!("scale anchor [{lo}, {hi}] is empty")));
            }
        }
        let p = &self.paths;
        let inputs = p.challenge_sets.iter().chain(
            [
                &p.translations,
                &p.alignments,
                &p.neutral_set,
                &p.neutral_translations,
                &p.neutral_alignments,
                &p.pairs,
                &p.outcomes,
                &p.neutral_outcomes,
                &p.dumps,
                &p.stereotypes,
                &p.gender_lexicon,
                &p.articles,
                &p.profession_map,
            ]
            .into_iter()
            .flatten(),
        );
        for path in inputs {
            if !path.exists() {
                return Err(CliError::Io(format!("input {} does not exist", path.display())));
            }
        }
        Ok(())
    }
}

/// Parse `8-20` or `8..=20`.
pub fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) =
        s.split_once("..=").or_else(|| s.split_once('-')).ok_or_else(|| format!("expected LO-HI, got `{s}`"))?;
    let lo = a.trim().parse().map_err(|_| format!("bad bound `{a}`"))?;
    let hi = b.trim().parse().map_err(|_| format!("bad bound `{b}`"))?;
    Ok((lo, hi))
}

/// Parse `0,0.2`.
pub fn parse_scale(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got `{s}`"))?;
    let lo = a.trim().parse().map_err(|_| format!("bad value `{a}`"))?;
    let hi = b.trim().parse().map_err(|_| format!("bad value `{b}`"))?;
    Ok((lo, hi))
}
