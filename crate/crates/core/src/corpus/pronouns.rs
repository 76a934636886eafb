//! The gendered pronoun inventory and grammatical-role assignment.
//!
//! "her" is either an object (OBJ) or a determiner (DET) and "his" is either
//! a determiner or a standalone possessive (POSS). Both are resolved with the
//! same lookahead: followed by end-of-clause punctuation, a preposition or a
//! clause boundary word (or nothing) means OBJ/POSS, anything else DET.

use std::fmt;

use crate::text::Affixed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PronounRole {
    Subj,
    Obj,
    Det,
    Poss,
    Refl,
}

impl PronounRole {
    pub fn placeholder(self) -> &'static str {
        match self {
            PronounRole::Subj => "SUBJ",
            PronounRole::Obj => "OBJ",
            PronounRole::Det => "DET",
            PronounRole::Poss => "POSS",
            PronounRole::Refl => "REFL",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "SUBJ" => Some(PronounRole::Subj),
            "OBJ" => Some(PronounRole::Obj),
            "DET" => Some(PronounRole::Det),
            "POSS" => Some(PronounRole::Poss),
            "REFL" => Some(PronounRole::Refl),
            _ => None,
        }
    }
}

impl fmt::Display for PronounRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.placeholder())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PronounGender {
    Masculine,
    Feminine,
}

/// A gendered pronoun found at some token position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PronounHit {
    pub role: PronounRole,
    pub gender: PronounGender,
    /// Lower-cased pronoun without clitic ("she" for "She's").
    pub base: String,
    /// Lower-cased contracted clitic, e.g. "'s", or empty.
    pub clitic: String,
}

impl PronounHit {
    /// Gender-erased stand-in used for pairing keys.
    pub fn placeholder(&self) -> String {
        format!("<{}{}>", self.role.placeholder(), self.clitic)
    }
}

const PREPOSITIONS: &[&str] = &[
    "about",
    "above",
    "across",
    "after",
    "against",
    "along",
    "among",
    "around",
    "as",
    "at",
    "before",
    "behind",
    "below",
    "beside",
    "between",
    "beyond",
    "by",
    "despite",
    "down",
    "during",
    "except",
    "for",
    "from",
    "in",
    "inside",
    "into",
    "like",
    "near",
    "of",
    "off",
    "on",
    "onto",
    "out",
    "outside",
    "over",
    "past",
    "since",
    "through",
    "throughout",
    "to",
    "toward",
    "towards",
    "under",
    "until",
    "up",
    "upon",
    "with",
    "within",
    "without",
];

const CLAUSE_WORDS: &[&str] = &[
    "again", "although", "and", "because", "but", "if", "or", "so", "that", "though", "when", "whenever", "whether",
    "while", "yet",
];

const CLITICS: &[&str] = &["'s", "'d", "'ll", "\u{2019}s", "\u{2019}d", "\u{2019}ll"];

/// True when the next token marks the end of the pronoun's phrase.
fn closes_phrase(tokens: &[&str], i: usize) -> bool {
    let here = Affixed::split(tokens[i]);
    if here.ends_clause() {
        return true;
    }
    let Some(next) = tokens.get(i + 1) else {
        return true;
    };
    let next = Affixed::split(next);
    if next.core.is_empty() {
        return next.prefix.chars().any(crate::text::is_clause_punct);
    }
    let key = next.core.to_lowercase();
    PREPOSITIONS.contains(&key.as_str()) || CLAUSE_WORDS.contains(&key.as_str())
}

fn split_clitic(word: &str) -> (&str, &str) {
    for clitic in CLITICS {
        if word.len() > clitic.len() && word.ends_with(clitic) {
            let cut = word.len() - clitic.len();
            return (&word[..cut], &word[cut..]);
        }
    }
    (word, "")
}

/// Classify the token at `i` as a gendered pronoun, if it is one.
pub fn classify(tokens: &[&str], i: usize) -> Option<PronounHit> {
    let word = Affixed::split(tokens.get(i)?).core.to_lowercase();
    let (base, clitic) = split_clitic(&word);
    use PronounGender::*;
    use PronounRole::*;
    let (role, gender) = match (base, clitic.is_empty()) {
        ("he", _) => (Subj, Masculine),
        ("she", _) => (Subj, Feminine),
        ("him", true) => (Obj, Masculine),
        ("her", true) => {
            let role = if closes_phrase(tokens, i) { Obj } else { Det };
            (role, Feminine)
        }
        ("his", true) => {
            let role = if closes_phrase(tokens, i) { Poss } else { Det };
            (role, Masculine)
        }
        ("hers", true) => (Poss, Feminine),
        ("himself", true) => (Refl, Masculine),
        ("herself", true) => (Refl, Feminine),
        _ => return None,
    };
    Some(PronounHit { role, gender, base: base.to_string(), clitic: clitic.replace('\u{2019}', "'") })
}

/// All gendered pronouns of a tokenized sentence, with positions.
pub fn find_all(tokens: &[&str]) -> Vec<(usize, PronounHit)> {
    (0..tokens.len()).filter_map(|i| classify(tokens, i).map(|hit| (i, hit))).collect()
}

/// True if the lower-cased word is in the gendered inventory in any role.
pub fn is_gendered_form(word: &str) -> bool {
    let (base, _) = split_clitic(word);
    matches!(base, "he" | "she" | "him" | "her" | "his" | "hers" | "himself" | "herself")
}
