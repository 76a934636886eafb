//! Finding the translated entity and the gender cue among subword tokens.
//!
//! Tokens are detokenized by mapping the word-start markers `▁` and `Ġ` to a
//! space and concatenating; every token keeps its character range so a match
//! in the text maps back to the tokens it overlaps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dump::AttentionDump;
use crate::morpho::ArticleTable;

#[derive(Debug, Error, PartialEq)]
pub enum SpanError {
    #[error("cue `{0}` not found in the source segment")]
    CueMissing(String),
}

/// Token positions an attention computation needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanMap {
    /// Generated-token indices: optional article plus noun subwords.
    pub target_span: Vec<usize>,
    /// Context positions of the cue subwords.
    pub cue_positions: Vec<usize>,
    /// Generated-token indices of the secondary entity.
    pub secondary_span: Option<Vec<usize>>,
}

/// Result of span location for one dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpanMatch {
    Matched(SpanMap),
    /// No profession form occurs in the output; the instance is excluded.
    NoMatch,
}

fn clean(token: &str) -> String {
    let mut s = token.replace(['\u{2581}', '\u{120}'], " ");
    // byte-fallback tokens for printable ASCII
    if let Some(hex) = s.strip_prefix("<0x").and_then(|r| r.strip_suffix('>')) {
        if let Ok(b) = u8::from_str_radix(hex, 16) {
            if b.is_ascii() {
                s = (b as char).to_string();
            }
        }
    }
    s.replace('\u{2019}', "'")
}

/// Detokenized text (lower-cased) plus each token's char range in it.
struct Detok {
    chars: Vec<char>,
    ranges: Vec<(usize, usize)>,
}

impl Detok {
    fn new<'a>(tokens: impl Iterator<Item = &'a str>) -> Self {
        let mut chars = Vec::new();
        let mut ranges = Vec::new();
        for t in tokens {
            let start = chars.len();
            chars.extend(clean(t).to_lowercase().chars());
            ranges.push((start, chars.len()));
        }
        Detok { chars, ranges }
    }

    fn boundary(&self, i: usize) -> bool {
        i == 0 || i >= self.chars.len() || !self.chars[i].is_alphanumeric() || !self.chars[i - 1].is_alphanumeric()
    }

    fn matches_at(&self, at: usize, word: &[char]) -> bool {
        at + word.len() <= self.chars.len()
            && self.chars[at..at + word.len()] == *word
            && self.boundary(at)
            && self.boundary(at + word.len())
    }

    /// Greedy left-to-right whole-word match, longest form first at each
    /// position. Returns the char range.
    fn find(&self, forms: &[String], skip: &dyn Fn(usize, usize) -> bool) -> Option<(usize, usize)> {
        let mut words: Vec<Vec<char>> =
            forms.iter().map(|f| f.to_lowercase().chars().collect::<Vec<_>>()).filter(|w| !w.is_empty()).collect();
        words.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        for at in 0..self.chars.len() {
            for w in &words {
                if self.matches_at(at, w) && !skip(at, at + w.len()) {
                    return Some((at, at + w.len()));
                }
            }
        }
        None
    }

    fn tokens_overlapping(&self, (a, b): (usize, usize)) -> Vec<usize> {
        self.ranges.iter().enumerate().filter(|(_, &(s, e))| s < b && a < e).map(|(k, _)| k).collect()
    }

    /// Word immediately before char `at`: either an elided article glued by
    /// an apostrophe or the previous whitespace-separated word.
    fn word_before(&self, at: usize) -> Option<(usize, usize)> {
        let mut end = at;
        if end > 0 && self.chars[end - 1] == '\'' {
            let mut start = end - 1;
            while start > 0 && self.chars[start - 1].is_alphabetic() {
                start -= 1;
            }
            return (start < end - 1).then_some((start, end));
        }
        while end > 0 && self.chars[end - 1].is_whitespace() {
            end -= 1;
        }
        if end == at {
            return None;
        }
        let mut start = end;
        while start > 0 && !self.chars[start - 1].is_whitespace() {
            start -= 1;
        }
        (start < end).then_some((start, end))
    }

    fn text(&self, (a, b): (usize, usize)) -> String {
        self.chars[a..b].iter().collect()
    }
}

fn generated_span(gen: &Detok, forms: &[String], articles: &ArticleTable, avoid: &[usize]) -> Option<Vec<usize>> {
    let skip = |a: usize, b: usize| gen.tokens_overlapping((a, b)).iter().any(|k| avoid.contains(k));
    let noun = gen.find(forms, &skip)?;
    let mut span = gen.tokens_overlapping(noun);
    if let Some(w) = gen.word_before(noun.0) {
        if articles.get(&gen.text(w)).is_some() {
            span.extend(gen.tokens_overlapping(w));
        }
    }
    span.sort_unstable();
    span.dedup();
    Some(span)
}

/// Locate the entity span in the generated output and the cue in the source
/// segment of the prompt. `secondary_forms`, when given, are matched outside
/// the target span.
pub fn locate_spans(
    dump: &AttentionDump,
    profession_forms: &[String],
    cue_surface: &str,
    secondary_forms: Option<&[String]>,
    articles: &ArticleTable,
) -> Result<SpanMatch, SpanError> {
    let m = &dump.meta;
    let (src_a, src_b) = m.source_span;
    let src = Detok::new(m.context_tokens[src_a..src_b].iter().map(String::as_str));
    let cue: Vec<String> = vec![cue_surface.to_string()];
    let cue_range = src.find(&cue, &|_, _| false).ok_or_else(|| SpanError::CueMissing(cue_surface.to_string()))?;
    let cue_positions: Vec<usize> = src.tokens_overlapping(cue_range).into_iter().map(|k| k + src_a).collect();

    let gen = Detok::new(m.generated_tokens.iter().map(String::as_str));
    let Some(target_span) = generated_span(&gen, profession_forms, articles, &[]) else {
        return Ok(SpanMatch::NoMatch);
    };
    let secondary_span = secondary_forms.and_then(|f| generated_span(&gen, f, articles, &target_span));
    Ok(SpanMatch::Matched(SpanMap { target_span, cue_positions, secondary_span }))
}
