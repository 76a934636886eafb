//! Challenge-set records, stereotype lexicon and minimal pairs.
//!
//! Input files follow the WinoMT tab-separated layout:
//!
//! ```text
//! gender<TAB>entity_index<TAB>sentence<TAB>profession[<TAB>secondary_index]
//! ```
//!
//! `entity_index` is a 0-based whitespace-token index. The optional fifth
//! column annotates the non-coreferent entity used by the attention sanity
//! checks.

mod pairs;
pub mod pronouns;
mod stereotype;

use std::cmp::Ordering;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{whitespace_tokens, word_key};

pub use pairs::{
    build_minimal_pairs, format_pairs, parse_pairs, MinimalPair, PairLink, PairSet, PairingKey, UnpairedReason,
};
pub use stereotype::{ProfessionStereotype, StereotypeLexicon};

/// Record identifier, `<source>:<line>`. Ordering is natural, so `en:2`
/// sorts before `en:10`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SentenceId(pub String);

impl SentenceId {
    pub fn new(source: &str, line: usize) -> Self {
        SentenceId(format!("{source}:{line}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SentenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SentenceId {
    fn from(s: &str) -> Self {
        SentenceId(s.to_string())
    }
}

impl Ord for SentenceId {
    fn cmp(&self, other: &Self) -> Ordering {
        natural_cmp(&self.0, &other.0)
    }
}

impl PartialOrd for SentenceId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn natural_cmp(a: &str, b: &str) -> Ordering {
    let mut a = a.as_bytes();
    let mut b = b.as_bytes();
    loop {
        match (a.first(), b.first()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) if x.is_ascii_digit() && y.is_ascii_digit() => {
                let la = a.iter().take_while(|c| c.is_ascii_digit()).count();
                let lb = b.iter().take_while(|c| c.is_ascii_digit()).count();
                let (na, nb) = (trim_zeros(&a[..la]), trim_zeros(&b[..lb]));
                let ord = na.len().cmp(&nb.len()).then_with(|| na.cmp(nb)).then(la.cmp(&lb));
                if ord != Ordering::Equal {
                    return ord;
                }
                a = &a[la..];
                b = &b[lb..];
            }
            (Some(x), Some(y)) => {
                if x != y {
                    return x.cmp(y);
                }
                a = &a[1..];
                b = &b[1..];
            }
        }
    }
}

fn trim_zeros(digits: &[u8]) -> &[u8] {
    let nz = digits.iter().position(|&d| d != b'0').unwrap_or(digits.len());
    &digits[nz..]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    Male,
    Female,
    Neutral,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Neutral => "neutral",
        }
    }

    pub fn is_gendered(self) -> bool {
        self != Gender::Neutral
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" => Ok(Gender::Male),
            "female" => Ok(Gender::Female),
            "neutral" => Ok(Gender::Neutral),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StereotypeClass {
    ProStereotypical,
    AntiStereotypical,
    None,
}

/// One challenge-set sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: SentenceId,
    pub gold_gender: Gender,
    pub entity_index: usize,
    pub sentence: String,
    pub profession: String,
    pub stereotype_class: StereotypeClass,
    pub secondary_entity_index: Option<usize>,
}

impl SentenceRecord {
    pub fn tokens(&self) -> Vec<&str> {
        whitespace_tokens(&self.sentence)
    }

    /// Lower-cased profession, the stereotype lexicon key.
    pub fn profession_key(&self) -> String {
        self.profession.trim().to_lowercase()
    }

    /// Surface word of the secondary entity, when annotated.
    pub fn secondary_word(&self) -> Option<String> {
        let i = self.secondary_entity_index?;
        self.tokens().get(i).map(|t| word_key(t))
    }

    /// Serialize back to the tab-separated layout.
    pub fn to_line(&self) -> String {
        let mut line = format!("{}\t{}\t{}\t{}", self.gold_gender, self.entity_index, self.sentence, self.profession);
        if let Some(s) = self.secondary_entity_index {
            line.push('\t');
            line.push_str(&s.to_string());
        }
        line
    }
}

/// Which values the gender column may hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenderColumn {
    /// male or female only.
    Gendered,
    /// neutral only (a neutralized set).
    Neutral,
    Any,
}

impl GenderColumn {
    fn admits(self, g: Gender) -> bool {
        match self {
            GenderColumn::Gendered => g.is_gendered(),
            GenderColumn::Neutral => g == Gender::Neutral,
            GenderColumn::Any => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LineError {
    #[error("expected 4 or 5 tab-separated fields, found {0}")]
    FieldCount(usize),
    #[error("unknown gender value {0:?}")]
    BadGender(String),
    #[error("gender {0} not allowed in this set")]
    UnexpectedGender(Gender),
    #[error("entity index {0:?} is not a non-negative integer")]
    BadIndex(String),
    #[error("index {index} out of range for {tokens} tokens")]
    IndexOutOfRange { index: usize, tokens: usize },
    #[error("token {found:?} at entity index does not match profession {expected:?}")]
    ProfessionMismatch { expected: String, found: String },
    #[error("secondary entity index equals entity index {0}")]
    SecondaryIsEntity(usize),
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name} line {line}: {kind}")]
    Parse { source_name: String, line: usize, kind: LineError },
    #[error("ambiguous pairing key {key}: records {ids:?} share it with the same gender")]
    AmbiguousKey { key: String, ids: Vec<SentenceId> },
    #[error("profession {profession:?} is both stereotypically feminine and masculine")]
    StereotypeConflict { profession: String },
    #[error("stereotype lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("record {0} is neutral; minimal pairs need gendered records")]
    NeutralRecord(SentenceId),
    #[error("pair file line {line}: {message}")]
    PairFormat { line: usize, message: String },
}

fn parse_line(line: &str, expect: GenderColumn) -> Result<(Gender, usize, String, String, Option<usize>), LineError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 4 && fields.len() != 5 {
        return Err(LineError::FieldCount(fields.len()));
    }
    let gender: Gender = fields[0].parse().map_err(LineError::BadGender)?;
    if !expect.admits(gender) {
        return Err(LineError::UnexpectedGender(gender));
    }
    let parse_index = |s: &str| s.trim().parse::<usize>().map_err(|_| LineError::BadIndex(s.to_string()));
    let entity_index = parse_index(fields[1])?;
    let sentence = fields[2].trim().to_string();
    let profession = fields[3].trim().to_string();
    let tokens = whitespace_tokens(&sentence);
    if entity_index >= tokens.len() {
        return Err(LineError::IndexOutOfRange { index: entity_index, tokens: tokens.len() });
    }
    let head = profession.split_whitespace().last().unwrap_or("").to_lowercase();
    let found = word_key(tokens[entity_index]);
    if found != head {
        return Err(LineError::ProfessionMismatch { expected: profession, found });
    }
    let secondary = match fields.get(4).map(|s| s.trim()) {
        None | Some("") => None,
        Some(s) => {
            let idx = parse_index(s)?;
            if idx >= tokens.len() {
                return Err(LineError::IndexOutOfRange { index: idx, tokens: tokens.len() });
            }
            if idx == entity_index {
                return Err(LineError::SecondaryIsEntity(idx));
            }
            Some(idx)
        }
    };
    Ok((gender, entity_index, sentence, profession, secondary))
}

/// Parse challenge-set text. Ids are `<source_name>:<line>` with 1-based line
/// numbers; blank lines are skipped without renumbering.
pub fn parse_challenge_str(
    text: &str,
    source_name: &str,
    expect: GenderColumn,
) -> Result<Vec<SentenceRecord>, CorpusError> {
    let mut records = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let (gold_gender, entity_index, sentence, profession, secondary_entity_index) = parse_line(line, expect)
            .map_err(|kind| CorpusError::Parse { source_name: source_name.to_string(), line: line_no, kind })?;
        records.push(SentenceRecord {
            id: SentenceId::new(source_name, line_no),
            gold_gender,
            entity_index,
            sentence,
            profession,
            stereotype_class: StereotypeClass::None,
            secondary_entity_index,
        });
    }
    Ok(records)
}

/// Parse a challenge-set file; the file stem becomes the id prefix.
pub fn parse_challenge_set(path: &Path, expect: GenderColumn) -> Result<Vec<SentenceRecord>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "set".to_string());
    parse_challenge_str(&text, &stem, expect)
}

/// Write records in the tab-separated layout, one per line.
pub fn format_challenge_set(records: &[SentenceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

/// Mark records as pro- or anti-stereotypical according to the lexicon.
/// Professions missing from the lexicon, and neutral records, stay `None`.
pub fn classify_stereotypes(records: &mut [SentenceRecord], lexicon: &StereotypeLexicon) {
    for r in records {
        r.stereotype_class = match (lexicon.get(&r.profession_key()), r.gold_gender) {
            (Some(s), g) if g.is_gendered() => {
                if s.matches(g) {
                    StereotypeClass::ProStereotypical
                } else {
                    StereotypeClass::AntiStereotypical
                }
            }
            _ => StereotypeClass::None,
        };
    }
}
