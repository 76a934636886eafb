//! Rewrite gendered pronouns to singular *they* and repair verb agreement.
//!
//! Every rewrite is one token for one token, so entity indices survive. The
//! rule table is loaded from a versioned data file (see
//! `data/neutralizer_rules.tsv`).

use std::collections::HashMap;
use std::sync::OnceLock;

use thiserror::Error;

use crate::corpus::pronouns::{self, PronounRole};
use crate::corpus::{Gender, SentenceId, SentenceRecord, StereotypeClass};
use crate::text::{Affixed, CaseShape};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NeutralizeError {
    #[error("record {0} contains no gendered pronoun")]
    NoGenderedPronoun(SentenceId),
    #[error("no rewrite rule for {form:?} as {role}")]
    MissingRule { form: String, role: PronounRole },
    #[error("rule file line {line}: {message}")]
    RuleFile { line: usize, message: String },
}

/// One pronoun rewrite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteRule {
    pub match_form: String,
    pub role: PronounRole,
    pub replacement: String,
}

/// Pronoun rewrites plus irregular agreement repairs.
#[derive(Debug, Clone)]
pub struct RuleTable {
    rules: Vec<RewriteRule>,
    agreement: HashMap<String, String>,
}

const ADVERBS: &[&str] = &[
    "not",
    "never",
    "always",
    "also",
    "often",
    "still",
    "just",
    "really",
    "already",
    "usually",
    "sometimes",
    "then",
    "soon",
    "even",
    "only",
    "rarely",
    "finally",
    "seldom",
    "ever",
    "once",
    "again",
    "frequently",
    "generally",
    "certainly",
    "probably",
];

fn is_adverb(word: &str) -> bool {
    ADVERBS.contains(&word) || (word.len() > 4 && word.ends_with("ly"))
}

/// Plural form of a regular third-person-singular verb, if `word` looks
/// like one.
fn regular_plural(word: &str) -> Option<String> {
    if word.len() < 3 || !word.ends_with('s') || !word.chars().all(|c| c.is_ascii_alphabetic()) {
        return None;
    }
    if word.ends_with("ss") || word.ends_with("us") || word.ends_with("is") {
        return None;
    }
    if word.len() > 4 && word.ends_with("ies") {
        return Some(format!("{}y", &word[..word.len() - 3]));
    }
    for es in ["sses", "shes", "ches", "xes", "zzes", "oes"] {
        if word.ends_with(es) {
            return Some(word[..word.len() - 2].to_string());
        }
    }
    Some(word[..word.len() - 1].to_string())
}

impl RuleTable {
    pub fn parse(text: &str) -> Result<Self, NeutralizeError> {
        let mut section = "";
        let mut rules = Vec::new();
        let mut agreement = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |message: &str| NeutralizeError::RuleFile { line: n + 1, message: message.to_string() };
            if trimmed.starts_with('[') {
                section = match trimmed {
                    "[pronouns]" => "pronouns",
                    "[agreement]" => "agreement",
                    _ => return Err(err("unknown section")),
                };
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match (section, fields.as_slice()) {
                ("pronouns", [form, role, replacement]) => rules.push(RewriteRule {
                    match_form: form.to_lowercase(),
                    role: PronounRole::parse(role).ok_or_else(|| err("unknown role"))?,
                    replacement: replacement.to_lowercase(),
                }),
                ("agreement", [singular, plural]) => {
                    agreement.insert(singular.to_lowercase(), plural.to_lowercase());
                }
                _ => return Err(err("malformed rule")),
            }
        }
        Ok(Self { rules, agreement })
    }

    pub fn bundled() -> &'static RuleTable {
        static TABLE: OnceLock<RuleTable> = OnceLock::new();
        TABLE.get_or_init(|| RuleTable::parse(crate::data::NEUTRALIZER_RULES).expect("bundled rules are valid"))
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    fn replacement(&self, form: &str, role: PronounRole) -> Option<&str> {
        self.rules.iter().find(|r| r.match_form == form && r.role == role).map(|r| r.replacement.as_str())
    }

    /// Plural agreement for a finite verb, irregulars first.
    pub fn plural_verb(&self, word: &str) -> Option<String> {
        let lower = word.to_lowercase();
        if let Some(p) = self.agreement.get(&lower) {
            return Some(p.clone());
        }
        regular_plural(&lower)
    }

    fn is_singular_irregular(&self, word: &str) -> bool {
        self.agreement.contains_key(word)
    }
}

/// Index of the finite verb governed by a subject at `subject`, skipping
/// adverbs. `None` when the clause ends first.
fn governed_verb(tokens: &[String], subject: usize) -> Option<usize> {
    if Affixed::split(&tokens[subject]).ends_clause() {
        return None;
    }
    let mut j = subject + 1;
    while j < tokens.len() {
        let a = Affixed::split(&tokens[j]);
        let word = a.core.to_lowercase();
        if word.is_empty() {
            return None;
        }
        if !is_adverb(&word) {
            return Some(j);
        }
        if a.ends_clause() {
            return None;
        }
        j += 1;
    }
    None
}

fn contracted_they(clitic: &str, next: Option<&str>) -> &'static str {
    match clitic {
        "'d" => "they'd",
        "'ll" => "they'll",
        _ => match next.map(|n| Affixed::split(n).core.to_lowercase()) {
            Some(w) if w == "been" || w == "got" => "they've",
            _ => "they're",
        },
    }
}

pub struct Neutralizer<'a> {
    table: &'a RuleTable,
}

impl Default for Neutralizer<'static> {
    fn default() -> Self {
        Neutralizer { table: RuleTable::bundled() }
    }
}

impl<'a> Neutralizer<'a> {
    pub fn new(table: &'a RuleTable) -> Self {
        Neutralizer { table }
    }

    /// Rewrite a sentence's tokens. Returns the new tokens and how many
    /// pronouns were replaced.
    pub fn rewrite_tokens(&self, tokens: &[&str]) -> Result<(Vec<String>, usize), NeutralizeError> {
        let hits = pronouns::find_all(tokens);
        let mut out: Vec<String> = tokens.iter().map(|t| t.to_string()).collect();
        for (i, hit) in &hits {
            let a = Affixed::split(tokens[*i]);
            let replacement = if hit.clitic.is_empty() {
                self.table
                    .replacement(&hit.base, hit.role)
                    .ok_or_else(|| NeutralizeError::MissingRule { form: hit.base.clone(), role: hit.role })?
            } else {
                contracted_they(&hit.clitic, tokens.get(i + 1).copied())
            };
            let shaped = CaseShape::of(a.core).apply(replacement);
            out[*i] = a.with_core(&shaped);
        }
        for (i, hit) in &hits {
            if hit.role != PronounRole::Subj || !hit.clitic.is_empty() {
                continue;
            }
            let Some(v) = governed_verb(&out, *i) else {
                continue;
            };
            let a = Affixed::split(&out[v]);
            if let Some(plural) = self.table.plural_verb(a.core) {
                let shaped = CaseShape::of(a.core).apply(&plural);
                out[v] = a.with_core(&shaped);
            }
        }
        Ok((out, hits.len()))
    }

    pub fn neutralize(&self, record: &SentenceRecord) -> Result<SentenceRecord, NeutralizeError> {
        if record.gold_gender == Gender::Neutral {
            log::warn!("record {} is already neutral; left unchanged", record.id);
            return Ok(record.clone());
        }
        let tokens = record.tokens();
        let (out, replaced) = self.rewrite_tokens(&tokens)?;
        if replaced == 0 {
            return Err(NeutralizeError::NoGenderedPronoun(record.id.clone()));
        }
        Ok(SentenceRecord {
            id: record.id.clone(),
            gold_gender: Gender::Neutral,
            entity_index: record.entity_index,
            sentence: out.join(" "),
            profession: record.profession.clone(),
            stereotype_class: StereotypeClass::None,
            secondary_entity_index: record.secondary_entity_index,
        })
    }

    /// Scan for residual gendered pronouns and singular verbs after "they".
    pub fn verify(&self, records: &[SentenceRecord]) -> NeutralReport {
        let mut report = NeutralReport::default();
        for r in records {
            let tokens: Vec<String> = r.tokens().iter().map(|t| t.to_string()).collect();
            for (i, tok) in tokens.iter().enumerate() {
                let word = Affixed::split(tok).core.to_lowercase();
                if pronouns::is_gendered_form(&word) {
                    report.issues.push(NeutralIssue {
                        id: r.id.clone(),
                        index: i,
                        kind: IssueKind::ResidualPronoun,
                        token: tok.clone(),
                    });
                } else if word == "they" {
                    if let Some(v) = governed_verb(&tokens, i) {
                        let verb = Affixed::split(&tokens[v]).core.to_lowercase();
                        if self.table.is_singular_irregular(&verb) || regular_plural(&verb).is_some() {
                            report.issues.push(NeutralIssue {
                                id: r.id.clone(),
                                index: v,
                                kind: IssueKind::AgreementResidue,
                                token: tokens[v].clone(),
                            });
                        }
                    }
                }
            }
        }
        report
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueKind {
    ResidualPronoun,
    AgreementResidue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeutralIssue {
    pub id: SentenceId,
    pub index: usize,
    pub kind: IssueKind,
    pub token: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NeutralReport {
    pub issues: Vec<NeutralIssue>,
}

impl NeutralReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }

    /// Offending ids, deduplicated, in first-seen order.
    pub fn offending_ids(&self) -> Vec<SentenceId> {
        let mut ids: Vec<SentenceId> = Vec::new();
        for issue in &self.issues {
            if !ids.contains(&issue.id) {
                ids.push(issue.id.clone());
            }
        }
        ids
    }
}

/// Neutralize with the bundled rule table.
pub fn neutralize(record: &SentenceRecord) -> Result<SentenceRecord, NeutralizeError> {
    Neutralizer::default().neutralize(record)
}

/// Verify with the bundled rule table.
pub fn verify_neutral(records: &[SentenceRecord]) -> NeutralReport {
    Neutralizer::default().verify(records)
}
