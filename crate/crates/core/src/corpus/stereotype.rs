use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CorpusError, Gender, SentenceRecord};

/// Which gender a profession is stereotypically associated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProfessionStereotype {
    ProF,
    ProM,
}

impl ProfessionStereotype {
    pub fn matches(self, gender: Gender) -> bool {
        matches!(
            (self, gender),
            (ProfessionStereotype::ProF, Gender::Female) | (ProfessionStereotype::ProM, Gender::Male)
        )
    }

    fn of_gender(g: Gender) -> Option<Self> {
        match g {
            Gender::Female => Some(ProfessionStereotype::ProF),
            Gender::Male => Some(ProfessionStereotype::ProM),
            Gender::Neutral => None,
        }
    }
}

impl fmt::Display for ProfessionStereotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfessionStereotype::ProF => "ProF",
            ProfessionStereotype::ProM => "ProM",
        })
    }
}

impl FromStr for ProfessionStereotype {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "ProF" => Ok(ProfessionStereotype::ProF),
            "ProM" => Ok(ProfessionStereotype::ProM),
            other => Err(format!("unknown stereotype {other:?}")),
        }
    }
}

/// Profession lemma (lower-cased English) to stereotype.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StereotypeLexicon {
    entries: BTreeMap<String, ProfessionStereotype>,
}

impl StereotypeLexicon {
    /// Compile from the pro-stereotypical subset: a profession appearing with
    /// a female referent there is ProF, with a male referent ProM.
    pub fn from_pro_subset(records: &[SentenceRecord]) -> Result<Self, CorpusError> {
        let mut entries = BTreeMap::new();
        for r in records {
            let Some(s) = ProfessionStereotype::of_gender(r.gold_gender) else {
                continue;
            };
            let key = r.profession_key();
            match entries.get(&key) {
                Some(prev) if *prev != s => {
                    return Err(CorpusError::StereotypeConflict { profession: key });
                }
                _ => {
                    entries.insert(key, s);
                }
            }
        }
        Ok(Self { entries })
    }

    /// Parse `lemma<TAB>ProF|ProM` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| CorpusError::Lexicon { line: n + 1, message };
            let (lemma, class) = line.split_once('\t').ok_or_else(|| err("expected lemma<TAB>class".into()))?;
            let class: ProfessionStereotype = class.parse().map_err(err)?;
            let key = lemma.trim().to_lowercase();
            if let Some(prev) = entries.insert(key.clone(), class) {
                if prev != class {
                    return Err(CorpusError::StereotypeConflict { profession: key });
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn bundled() -> Self {
        Self::parse(crate::data::STEREOTYPES).expect("bundled stereotype lexicon is valid")
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect()
    }

    pub fn get(&self, profession: &str) -> Option<ProfessionStereotype> {
        self.entries.get(&profession.trim().to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, ProfessionStereotype)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}
