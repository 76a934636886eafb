//! Alignment tokenization: whitespace split, then punctuation and Italian
//! elided articles are separated ("l'insegnante" -> "l'" + "insegnante").
//!
//! Each token remembers which whitespace token it came from, so challenge-set
//! indices (which count whitespace tokens) can be mapped in.

use crate::text::Affixed;

const ELIDED_PREFIXES: &[&str] =
    &["l", "un", "dell", "all", "dall", "nell", "sull", "d", "quest", "quell", "sant", "bell"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lang {
    /// Source side: punctuation split only.
    English,
    /// Target side: punctuation split plus elided articles.
    Italian,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tokenized {
    pub tokens: Vec<String>,
    /// Whitespace-token index each token came from.
    pub origin: Vec<usize>,
}

impl Tokenized {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token carrying the word of whitespace token `raw`. For an elided
    /// Italian token this is the noun, not the article.
    pub fn word_position(&self, raw: usize) -> Option<usize> {
        self.origin
            .iter()
            .enumerate()
            .filter(|&(k, &o)| o == raw && self.tokens[k].chars().any(char::is_alphanumeric))
            .map(|(k, _)| k)
            .next_back()
    }

    pub fn as_strs(&self) -> Vec<&str> {
        self.tokens.iter().map(String::as_str).collect()
    }
}

fn push_punct(out: &mut Tokenized, s: &str, raw: usize) {
    if !s.is_empty() {
        out.tokens.push(s.to_string());
        out.origin.push(raw);
    }
}

pub fn tokenize(text: &str, lang: Lang) -> Tokenized {
    let mut out = Tokenized::default();
    for (raw, piece) in text.split_whitespace().enumerate() {
        let piece = piece.replace('\u{2019}', "'");
        let a = Affixed::split(&piece);
        push_punct(&mut out, a.prefix, raw);
        if !a.core.is_empty() {
            let mut core = a.core;
            if lang == Lang::Italian {
                if let Some((head, rest)) = core.split_once('\'') {
                    if !rest.is_empty() && ELIDED_PREFIXES.contains(&head.to_lowercase().as_str()) {
                        out.tokens.push(format!("{head}'"));
                        out.origin.push(raw);
                        core = rest;
                    }
                }
            }
            out.tokens.push(core.to_string());
            out.origin.push(raw);
        }
        push_punct(&mut out, a.suffix, raw);
    }
    out
}
