//! Small text helpers shared by the English-side modules.
//!
//! Challenge-set sentences are indexed by whitespace tokens, so punctuation
//! stays glued to words ("design."). These helpers peel it off without
//! changing token counts.

/// A whitespace token split into leading punctuation, word core and
/// trailing punctuation. Internal apostrophes stay in the core ("he's").
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Affixed<'a> {
    pub prefix: &'a str,
    pub core: &'a str,
    pub suffix: &'a str,
}

impl<'a> Affixed<'a> {
    pub fn split(token: &'a str) -> Self {
        let start = token.char_indices().find(|(_, c)| c.is_alphanumeric()).map(|(i, _)| i);
        let Some(start) = start else {
            return Affixed { prefix: token, core: "", suffix: "" };
        };
        let end = token
            .char_indices()
            .rev()
            .find(|(_, c)| c.is_alphanumeric())
            .map(|(i, c)| i + c.len_utf8())
            .unwrap_or(token.len());
        Affixed { prefix: &token[..start], core: &token[start..end], suffix: &token[end..] }
    }

    /// Reassemble with a new core.
    pub fn with_core(&self, core: &str) -> String {
        format!("{}{}{}", self.prefix, core, self.suffix)
    }

    /// True when trailing punctuation closes a clause.
    pub fn ends_clause(&self) -> bool {
        self.suffix.chars().any(is_clause_punct)
    }
}

pub fn is_clause_punct(c: char) -> bool {
    matches!(c, ',' | '.' | ';' | ':' | '!' | '?')
}

/// Whitespace tokenization, the indexing convention of the challenge sets.
pub fn whitespace_tokens(sentence: &str) -> Vec<&str> {
    sentence.split_whitespace().collect()
}

/// Lower-cased word core of a token.
pub fn word_key(token: &str) -> String {
    Affixed::split(token).core.to_lowercase()
}

/// Capitalization shape of a word, used to transfer case onto replacements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseShape {
    Lower,
    Capitalized,
    Upper,
}

impl CaseShape {
    pub fn of(word: &str) -> Self {
        let mut chars = word.chars().filter(|c| c.is_alphabetic());
        let Some(first) = chars.next() else {
            return CaseShape::Lower;
        };
        let rest: Vec<char> = chars.collect();
        if first.is_uppercase() && !rest.is_empty() && rest.iter().all(|c| c.is_uppercase()) {
            CaseShape::Upper
        } else if first.is_uppercase() {
            CaseShape::Capitalized
        } else {
            CaseShape::Lower
        }
    }

    pub fn apply(self, word: &str) -> String {
        match self {
            CaseShape::Lower => word.to_lowercase(),
            CaseShape::Upper => word.to_uppercase(),
            CaseShape::Capitalized => {
                let mut chars = word.chars();
                match chars.next() {
                    Some(first) => first.to_uppercase().chain(chars).collect(),
                    None => String::new(),
                }
            }
        }
    }
}
