//! Grammatical gender of an aligned Italian span.
//!
//! A fixed cascade decides: profession lexicon, then the article in front of
//! the head noun, then the head's suffix. Anything left over is Unknown.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aligner::{project_entity, tokenize, AlignmentLink, Lang};
use crate::corpus::{Gender, SentenceRecord};
use crate::data;
use crate::metrics::GenderOutcome;

#[derive(Debug, Error, PartialEq)]
pub enum MorphoError {
    #[error("{file} line {line}: {message}")]
    Data { file: &'static str, line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GenderLabel {
    Masculine,
    Feminine,
    Unknown,
}

impl GenderLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            GenderLabel::Masculine => "masculine",
            GenderLabel::Feminine => "feminine",
            GenderLabel::Unknown => "unknown",
        }
    }

    /// Whether the label realizes the given gold gender.
    pub fn matches(self, gold: Gender) -> bool {
        matches!((self, gold), (GenderLabel::Masculine, Gender::Male) | (GenderLabel::Feminine, Gender::Female))
    }
}

impl fmt::Display for GenderLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GenderLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "masculine" => Ok(GenderLabel::Masculine),
            "feminine" => Ok(GenderLabel::Feminine),
            "unknown" => Ok(GenderLabel::Unknown),
            other => Err(other.to_string()),
        }
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(n, l)| {
        let l = l.trim_end_matches('\r');
        if l.trim().is_empty() || l.starts_with('#') {
            None
        } else {
            Some((n + 1, l.split('\t').map(str::trim).collect()))
        }
    })
}

fn split_forms(field: &str) -> Vec<String> {
    field.split(',').map(|f| f.trim().to_lowercase()).filter(|f| !f.is_empty()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub lemma: String,
    pub masc_forms: Vec<String>,
    pub fem_forms: Vec<String>,
    pub epicene: bool,
}

impl LexiconEntry {
    pub fn all_forms(&self) -> impl Iterator<Item = &str> {
        self.masc_forms.iter().chain(&self.fem_forms).map(String::as_str)
    }
}

/// What a surface form says about gender.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FormEvidence {
    Masculine,
    Feminine,
    /// Epicene: shared by both genders.
    Both,
}

/// Italian profession forms by lemma.
#[derive(Debug, Clone, Default)]
pub struct GenderLexicon {
    entries: BTreeMap<String, LexiconEntry>,
    forms: HashMap<String, FormEvidence>,
}

impl GenderLexicon {
    pub fn parse(text: &str) -> Result<Self, MorphoError> {
        let err = |line, message: String| MorphoError::Data { file: "gender lexicon", line, message };
        let mut lex = GenderLexicon::default();
        for (line, f) in data_lines(text) {
            if f.len() != 4 {
                return Err(err(line, format!("expected 4 fields, found {}", f.len())));
            }
            let epicene = match f[3] {
                "true" => true,
                "false" => false,
                other => return Err(err(line, format!("epicene must be true or false, got `{other}`"))),
            };
            let entry = LexiconEntry {
                lemma: f[0].to_lowercase(),
                masc_forms: split_forms(f[1]),
                fem_forms: split_forms(f[2]),
                epicene,
            };
            if entry.masc_forms.is_empty() || entry.fem_forms.is_empty() {
                return Err(err(line, format!("`{}` needs forms on both sides", entry.lemma)));
            }
            if !epicene {
                if let Some(shared) = entry.masc_forms.iter().find(|m| entry.fem_forms.contains(m)) {
                    return Err(err(
                        line,
                        format!("`{shared}` is both masculine and feminine but the entry is not epicene"),
                    ));
                }
            }
            if lex.entries.contains_key(&entry.lemma) {
                return Err(err(line, format!("duplicate lemma `{}`", entry.lemma)));
            }
            let mut add = |form: &str, ev: FormEvidence| {
                let merged = match lex.forms.get(form) {
                    Some(&prev) if prev != ev => FormEvidence::Both,
                    _ => ev,
                };
                lex.forms.insert(form.to_string(), merged);
            };
            for m in &entry.masc_forms {
                add(m, FormEvidence::Masculine);
            }
            for fm in &entry.fem_forms {
                add(fm, FormEvidence::Feminine);
            }
            lex.entries.insert(entry.lemma.clone(), entry);
        }
        Ok(lex)
    }

    pub fn bundled() -> &'static GenderLexicon {
        static LEX: OnceLock<GenderLexicon> = OnceLock::new();
        LEX.get_or_init(|| GenderLexicon::parse(data::IT_PROFESSIONS).expect("bundled lexicon is valid"))
    }

    pub fn entry(&self, lemma: &str) -> Option<&LexiconEntry> {
        self.entries.get(&lemma.to_lowercase())
    }

    pub fn entries(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn evidence(&self, token: &str) -> Option<FormEvidence> {
        self.forms.get(&token.to_lowercase()).copied()
    }

    pub fn contains_form(&self, token: &str) -> bool {
        self.evidence(token).is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArticleClass {
    Masculine,
    Feminine,
    /// Elided before a vowel; says nothing about gender.
    Elided,
}

#[derive(Debug, Clone, Default)]
pub struct ArticleTable {
    map: HashMap<String, ArticleClass>,
}

impl ArticleTable {
    pub fn parse(text: &str) -> Result<Self, MorphoError> {
        let err = |line, message: String| MorphoError::Data { file: "article table", line, message };
        let mut map = HashMap::new();
        for (line, f) in data_lines(text) {
            if f.len() != 2 {
                return Err(err(line, format!("expected 2 fields, found {}", f.len())));
            }
            let class = match f[1] {
                "masculine" => ArticleClass::Masculine,
                "feminine" => ArticleClass::Feminine,
                "elided" => ArticleClass::Elided,
                other => return Err(err(line, format!("unknown class `{other}`"))),
            };
            let form = f[0].to_lowercase().replace('\u{2019}', "'");
            if let Some(prev) = map.insert(form.clone(), class) {
                if prev != class {
                    return Err(err(line, format!("`{form}` listed with two classes")));
                }
            }
        }
        Ok(ArticleTable { map })
    }

    pub fn bundled() -> &'static ArticleTable {
        static TABLE: OnceLock<ArticleTable> = OnceLock::new();
        TABLE.get_or_init(|| ArticleTable::parse(data::IT_ARTICLES).expect("bundled article table is valid"))
    }

    pub fn get(&self, token: &str) -> Option<ArticleClass> {
        self.map.get(&token.to_lowercase().replace('\u{2019}', "'")).copied()
    }
}

/// English profession to Italian lemma.
#[derive(Debug, Clone, Default)]
pub struct ProfessionMap {
    map: BTreeMap<String, String>,
}

impl ProfessionMap {
    pub fn parse(text: &str) -> Result<Self, MorphoError> {
        let mut map = BTreeMap::new();
        for (line, f) in data_lines(text) {
            if f.len() != 2 {
                return Err(MorphoError::Data {
                    file: "profession map",
                    line,
                    message: format!("expected 2 fields, found {}", f.len()),
                });
            }
            map.insert(f[0].to_lowercase(), f[1].to_lowercase());
        }
        Ok(ProfessionMap { map })
    }

    pub fn bundled() -> &'static ProfessionMap {
        static MAP: OnceLock<ProfessionMap> = OnceLock::new();
        MAP.get_or_init(|| ProfessionMap::parse(data::PROFESSION_MAP).expect("bundled profession map is valid"))
    }

    pub fn lemma(&self, english: &str) -> Option<&str> {
        self.map.get(&english.trim().to_lowercase()).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

const ARTICLE_WINDOW: usize = 2;

/// The decision cascade with its data.
#[derive(Debug, Clone, Copy)]
pub struct Morphology<'a> {
    pub lexicon: &'a GenderLexicon,
    pub articles: &'a ArticleTable,
}

impl Default for Morphology<'static> {
    fn default() -> Self {
        Morphology { lexicon: GenderLexicon::bundled(), articles: ArticleTable::bundled() }
    }
}

fn is_word(token: &str) -> bool {
    token.chars().any(char::is_alphabetic)
}

impl<'a> Morphology<'a> {
    pub fn new(lexicon: &'a GenderLexicon, articles: &'a ArticleTable) -> Self {
        Morphology { lexicon, articles }
    }

    /// Gender of the target tokens at `span`. Out-of-range indices are
    /// ignored; an empty span is Unknown.
    pub fn detect_gender<S: AsRef<str>>(&self, tokens: &[S], span: &[usize]) -> GenderLabel {
        let mut span: Vec<usize> = span.iter().copied().filter(|&i| i < tokens.len()).collect();
        span.sort_unstable();
        span.dedup();
        if span.is_empty() {
            return GenderLabel::Unknown;
        }
        let tok = |i: usize| tokens[i].as_ref();

        // 1. lexicon
        let mut masc = false;
        let mut fem = false;
        let mut head = None;
        for &i in &span {
            if let Some(ev) = self.lexicon.evidence(tok(i)) {
                head.get_or_insert(i);
                match ev {
                    FormEvidence::Masculine => masc = true,
                    FormEvidence::Feminine => fem = true,
                    FormEvidence::Both => {}
                }
            }
        }
        match (masc, fem) {
            (true, false) => return GenderLabel::Masculine,
            (false, true) => return GenderLabel::Feminine,
            (true, true) => return GenderLabel::Unknown,
            (false, false) => {}
        }
        let head = match head {
            Some(h) => h,
            None => match span.iter().rev().find(|&&i| is_word(tok(i)) && self.articles.get(tok(i)).is_none()) {
                Some(&h) => h,
                None => return GenderLabel::Unknown,
            },
        };

        // 2. nearest article before the head, skipping other words
        for i in (head.saturating_sub(ARTICLE_WINDOW)..head).rev() {
            match self.articles.get(tok(i)) {
                Some(ArticleClass::Masculine) => return GenderLabel::Masculine,
                Some(ArticleClass::Feminine) => return GenderLabel::Feminine,
                Some(ArticleClass::Elided) => break,
                None if is_word(tok(i)) => continue,
                None => break,
            }
        }

        // 3. suffix, never for epicene forms
        if self.lexicon.contains_form(tok(head)) {
            return GenderLabel::Unknown;
        }
        suffix_gender(tok(head))
    }

    /// Align-project-detect for one translated record. `links` index the
    /// alignment tokenization of the source sentence and `translation`.
    pub fn extract_outcome(
        &self,
        record: &SentenceRecord,
        translation: &str,
        links: &[AlignmentLink],
    ) -> GenderOutcome {
        let source = tokenize(&record.sentence, Lang::English);
        let target = tokenize(translation, Lang::Italian);
        let span = source.word_position(record.entity_index).map(|p| project_entity(links, p)).unwrap_or_default();
        let label = self.detect_gender(&target.tokens, &span);
        GenderOutcome::new(record.id.clone(), record.gold_gender, label, span)
    }
}

fn suffix_gender(word: &str) -> GenderLabel {
    let w = word.to_lowercase();
    if w.ends_with('o') || w.ends_with('i') {
        GenderLabel::Masculine
    } else if w.ends_with('a') {
        GenderLabel::Feminine
    } else {
        GenderLabel::Unknown
    }
}

/// [`Morphology::detect_gender`] with the bundled data.
pub fn detect_gender<S: AsRef<str>>(tokens: &[S], span: &[usize]) -> GenderLabel {
    Morphology::default().detect_gender(tokens, span)
}

/// [`Morphology::extract_outcome`] with the bundled data.
pub fn extract_outcome(record: &SentenceRecord, translation: &str, links: &[AlignmentLink]) -> GenderOutcome {
    Morphology::default().extract_outcome(record, translation, links)
}
