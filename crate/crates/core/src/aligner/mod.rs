//! Word alignment with a reparameterized IBM Model 2.
//!
//! The alignment prior favours the diagonal: for target position `j` of `m`
//! and source position `i` of `n` (both 1-based),
//!
//! ```text
//! p(a_j = 0)  = p0
//! p(a_j = i)  = (1 - p0) * exp(-tension * |i/n - j/m|) / Z(j, m, n)
//! ```
//!
//! with `Z` summing over the `n` real source positions. The tension and the
//! null probability are fixed; EM only re-estimates the lexical translation
//! table `t(target | source)`. Tokens are lower-cased before lookup.

mod pharaoh;
pub mod tokenize;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use pharaoh::{format_pharaoh, parse_pharaoh, read_bitext, read_parallel_files, AlignmentLink};
pub use tokenize::{tokenize, Lang, Tokenized};

/// Reserved source word id for the NULL token.
pub const NULL_ID: u32 = 0;
const NULL_WORD: &str = "<NULL>";
const SMOOTHING: f64 = 1e-12;
const CHUNK: usize = 256;

#[derive(Debug, Error, PartialEq)]
pub enum AlignError {
    #[error("parallel corpus is empty")]
    EmptyCorpus,
    #[error("sentence pair {0} has an empty side")]
    EmptySentence(usize),
    #[error("iterations must be at least 1")]
    NoIterations,
    #[error("tension must be a finite non-negative number, got {0}")]
    BadTension(f64),
    #[error("null probability must lie in (0, 1), got {0}")]
    BadNullProb(f64),
    #[error("corpus vocabulary does not match the model")]
    VocabMismatch,
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// Dense word ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    words: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocab {
    fn with_null() -> Self {
        let mut v = Vocab::default();
        v.intern(NULL_WORD);
        v
    }

    fn intern(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(word.to_string());
        self.index.insert(word.to_string(), id);
        id
    }

    pub fn get(&self, word: &str) -> Option<u32> {
        self.index.get(&word.to_lowercase()).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Sentence pairs as word ids. Source id 0 is NULL.
#[derive(Debug, Clone)]
pub struct ParallelCorpus {
    pub source_vocab: Vocab,
    pub target_vocab: Vocab,
    pub pairs: Vec<(Vec<u32>, Vec<u32>)>,
}

impl ParallelCorpus {
    pub fn new<S, T>(pairs: impl IntoIterator<Item = (Vec<S>, Vec<T>)>) -> Result<Self, AlignError>
    where
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut source_vocab = Vocab::with_null();
        let mut target_vocab = Vocab::default();
        let mut out = Vec::new();
        for (k, (src, tgt)) in pairs.into_iter().enumerate() {
            if src.is_empty() || tgt.is_empty() {
                return Err(AlignError::EmptySentence(k + 1));
            }
            let s = src.iter().map(|w| source_vocab.intern(&w.as_ref().to_lowercase())).collect();
            let t = tgt.iter().map(|w| target_vocab.intern(&w.as_ref().to_lowercase())).collect();
            out.push((s, t));
        }
        if out.is_empty() {
            return Err(AlignError::EmptyCorpus);
        }
        Ok(Self { source_vocab, target_vocab, pairs: out })
    }

    /// Tokenize raw English/Italian sentence pairs.
    pub fn from_text<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self, AlignError> {
        Self::new(
            pairs.into_iter().map(|(s, t)| (tokenize(s, Lang::English).tokens, tokenize(t, Lang::Italian).tokens)),
        )
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignerConfig {
    pub tension: f64,
    pub null_prob: f64,
    pub iterations: usize,
}

impl Default for AlignerConfig {
    fn default() -> Self {
        AlignerConfig { tension: 4.0, null_prob: 0.08, iterations: 5 }
    }
}

impl AlignerConfig {
    pub fn validate(&self) -> Result<(), AlignError> {
        if self.iterations == 0 {
            return Err(AlignError::NoIterations);
        }
        if !self.tension.is_finite() || self.tension < 0.0 {
            return Err(AlignError::BadTension(self.tension));
        }
        if !(self.null_prob > 0.0 && self.null_prob < 1.0) {
            return Err(AlignError::BadNullProb(self.null_prob));
        }
        Ok(())
    }
}

/// Alignment prior over source positions `0..=n` (0 = NULL) for target
/// position `j` (1-based) of `m`.
pub fn distortion(j: usize, m: usize, n: usize, tension: f64, null_prob: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(null_prob);
    let jm = j as f64 / m as f64;
    let weights: Vec<f64> = (1..=n).map(|i| (-tension * (i as f64 / n as f64 - jm).abs()).exp()).collect();
    let z: f64 = weights.iter().sum();
    out.extend(weights.iter().map(|w| (1.0 - null_prob) * w / z));
    out
}

/// Sparse translation table: one row per source id, sorted by target id.
#[derive(Debug, Clone, PartialEq)]
struct Table {
    rows: Vec<Vec<(u32, f64)>>,
}

impl Table {
    fn get(&self, s: u32, t: u32) -> f64 {
        let row = &self.rows[s as usize];
        match row.binary_search_by_key(&t, |&(id, _)| id) {
            Ok(k) => row[k].1,
            Err(_) => 0.0,
        }
    }

    fn slot(&self, s: u32, t: u32) -> Option<usize> {
        self.rows[s as usize].binary_search_by_key(&t, |&(id, _)| id).ok()
    }
}

/// Posterior expected link counts from one E-step.
#[derive(Debug, Clone)]
pub struct ExpectedCounts {
    rows: Vec<Vec<(u32, f64)>>,
    pub log_likelihood: f64,
}

impl ExpectedCounts {
    /// Count for a source/target word pair; `None` as source means NULL.
    pub fn get(&self, model: &AlignerModel, source: Option<&str>, target: &str) -> f64 {
        let s = match source {
            None => NULL_ID,
            Some(w) => match model.source_vocab.get(w) {
                Some(id) => id,
                None => return 0.0,
            },
        };
        let Some(t) = model.target_vocab.get(target) else {
            return 0.0;
        };
        let row = &self.rows[s as usize];
        row.binary_search_by_key(&t, |&(id, _)| id).map(|k| row[k].1).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct AlignerModel {
    pub source_vocab: Vocab,
    pub target_vocab: Vocab,
    table: Table,
    pub tension: f64,
    pub null_prob: f64,
    pub iterations: usize,
    /// Corpus log-likelihood before each M-step.
    pub log_likelihoods: Vec<f64>,
}

impl AlignerModel {
    /// Untrained model with uniform `t(target | source)` over the target
    /// vocabulary, restricted to co-occurring pairs.
    pub fn uniform(corpus: &ParallelCorpus, config: &AlignerConfig) -> Result<Self, AlignError> {
        config.validate()?;
        let mut support: Vec<Vec<u32>> = vec![Vec::new(); corpus.source_vocab.len()];
        for (src, tgt) in &corpus.pairs {
            for &s in std::iter::once(&NULL_ID).chain(src.iter()) {
                support[s as usize].extend(tgt.iter().copied());
            }
        }
        let uniform = 1.0 / corpus.target_vocab.len() as f64;
        let rows = support
            .into_iter()
            .map(|mut ts| {
                ts.sort_unstable();
                ts.dedup();
                ts.into_iter().map(|t| (t, uniform)).collect()
            })
            .collect();
        Ok(AlignerModel {
            source_vocab: corpus.source_vocab.clone(),
            target_vocab: corpus.target_vocab.clone(),
            table: Table { rows },
            tension: config.tension,
            null_prob: config.null_prob,
            iterations: 0,
            log_likelihoods: Vec::new(),
        })
    }

    /// `t(target | source)`; `None` as source means NULL.
    pub fn prob(&self, source: Option<&str>, target: &str) -> f64 {
        let s = match source {
            None => Some(NULL_ID),
            Some(w) => self.source_vocab.get(w),
        };
        match (s, self.target_vocab.get(target)) {
            (Some(s), Some(t)) => self.table.get(s, t),
            _ => 0.0,
        }
    }

    /// Sum of each translation-table row, keyed by source word.
    pub fn row_sums(&self) -> Vec<(String, f64)> {
        self.table
            .rows
            .iter()
            .enumerate()
            .map(|(s, row)| (self.source_vocab.word(s as u32).to_string(), row.iter().map(|&(_, p)| p).sum()))
            .collect()
    }

    fn check_vocab(&self, corpus: &ParallelCorpus) -> Result<(), AlignError> {
        if corpus.source_vocab.words != self.source_vocab.words || corpus.target_vocab.words != self.target_vocab.words
        {
            return Err(AlignError::VocabMismatch);
        }
        Ok(())
    }

    /// E-step over a corpus built with this model's vocabulary.
    pub fn expected_counts(&self, corpus: &ParallelCorpus) -> Result<ExpectedCounts, AlignError> {
        self.check_vocab(corpus)?;
        let shape: Vec<usize> = self.table.rows.iter().map(Vec::len).collect();
        let partials: Vec<(Vec<Vec<f64>>, f64)> = corpus
            .pairs
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut counts: Vec<Vec<f64>> = shape.iter().map(|&n| vec![0.0; n]).collect();
                let mut ll = 0.0;
                let mut post = Vec::new();
                for (src, tgt) in chunk {
                    let (n, m) = (src.len(), tgt.len());
                    for (j, &t) in tgt.iter().enumerate() {
                        let prior = distortion(j + 1, m, n, self.tension, self.null_prob);
                        post.clear();
                        post.push(prior[0] * self.table.get(NULL_ID, t));
                        post.extend(src.iter().enumerate().map(|(i, &s)| prior[i + 1] * self.table.get(s, t)));
                        let z: f64 = post.iter().sum();
                        ll += z.ln();
                        for (i, p) in post.iter().enumerate() {
                            let s = if i == 0 { NULL_ID } else { src[i - 1] };
                            let k = self.table.slot(s, t).expect("support covers co-occurring pairs");
                            counts[s as usize][k] += p / z;
                        }
                    }
                }
                (counts, ll)
            })
            .collect();

        let mut total: Vec<Vec<f64>> = shape.iter().map(|&n| vec![0.0; n]).collect();
        let mut log_likelihood = 0.0;
        for (counts, ll) in partials {
            log_likelihood += ll;
            for (acc, row) in total.iter_mut().zip(counts) {
                for (a, c) in acc.iter_mut().zip(row) {
                    *a += c;
                }
            }
        }
        let rows = self
            .table
            .rows
            .iter()
            .zip(total)
            .map(|(row, counts)| row.iter().map(|&(t, _)| t).zip(counts).collect())
            .collect();
        Ok(ExpectedCounts { rows, log_likelihood })
    }

    /// M-step: renormalize counts row-wise with add-epsilon smoothing.
    fn maximize(&mut self, counts: &ExpectedCounts) {
        for (row, crow) in self.table.rows.iter_mut().zip(&counts.rows) {
            let z: f64 = crow.iter().map(|&(_, c)| c + SMOOTHING).sum();
            for ((_, p), &(_, c)) in row.iter_mut().zip(crow) {
                *p = (c + SMOOTHING) / z;
            }
        }
    }

    /// Corpus log-likelihood under the current parameters.
    pub fn log_likelihood(&self, corpus: &ParallelCorpus) -> Result<f64, AlignError> {
        Ok(self.expected_counts(corpus)?.log_likelihood)
    }

    /// Viterbi alignment of one tokenized sentence pair.
    pub fn align<S: AsRef<str>, T: AsRef<str>>(&self, source: &[S], target: &[T]) -> Alignment {
        let n = source.len();
        let m = target.len();
        let src: Vec<Option<u32>> = source.iter().map(|w| self.source_vocab.get(w.as_ref())).collect();
        let mut alignment = Alignment::default();
        if n == 0 {
            return alignment;
        }
        for (j, word) in target.iter().enumerate() {
            let prior = distortion(j + 1, m, n, self.tension, self.null_prob);
            let t = self.target_vocab.get(word.as_ref());
            if t.is_none() {
                alignment.fallback_positions.push(j);
            }
            let score = |i: usize| -> f64 {
                match t {
                    None => prior[i],
                    Some(t) => {
                        let s = if i == 0 { Some(NULL_ID) } else { src[i - 1] };
                        prior[i] * s.map(|s| self.table.get(s, t)).unwrap_or(0.0)
                    }
                }
            };
            let mut best = 0;
            let mut best_score = score(0);
            for i in 1..=n {
                let sc = score(i);
                if sc > best_score {
                    best = i;
                    best_score = sc;
                }
            }
            if best > 0 {
                alignment.links.push(AlignmentLink { source_index: best - 1, target_index: j });
            }
        }
        alignment
    }
}

/// Viterbi output plus diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alignment {
    /// Sorted by target index.
    pub links: Vec<AlignmentLink>,
    /// Target positions scored by the prior alone (unknown target word).
    pub fallback_positions: Vec<usize>,
}

/// Train with EM from a uniform start.
pub fn train(corpus: &ParallelCorpus, config: &AlignerConfig) -> Result<AlignerModel, AlignError> {
    let mut model = AlignerModel::uniform(corpus, config)?;
    for it in 0..config.iterations {
        let counts = model.expected_counts(corpus)?;
        log::debug!("EM iteration {}: log-likelihood {:.6}", it + 1, counts.log_likelihood);
        model.log_likelihoods.push(counts.log_likelihood);
        model.maximize(&counts);
        model.iterations += 1;
    }
    Ok(model)
}

/// Target indices linked to `entity_index`, ascending. Empty means the
/// entity was not aligned.
pub fn project_entity(links: &[AlignmentLink], entity_index: usize) -> Vec<usize> {
    let mut out: Vec<usize> = links.iter().filter(|l| l.source_index == entity_index).map(|l| l.target_index).collect();
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(pairs: &[(&str, &str)]) -> ParallelCorpus {
        ParallelCorpus::new(
            pairs
                .iter()
                .map(|(s, t)| (s.split_whitespace().collect::<Vec<_>>(), t.split_whitespace().collect::<Vec<_>>())),
        )
        .unwrap()
    }

    #[test]
    fn distortion_is_a_distribution() {
        for (j, m, n) in [(1, 1, 1), (2, 5, 3), (7, 7, 12)] {
            let d = distortion(j, m, n, 4.0, 0.08);
            assert_eq!(d.len(), n + 1);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(d[0], 0.08);
        }
        // zero tension is uniform over real positions
        let d = distortion(1, 3, 4, 0.0, 0.2);
        assert!(d[1..].iter().all(|p| (p - 0.2).abs() < 1e-12));
    }

    #[test]
    fn single_token_pair_converges_in_one_iteration() {
        let c = corpus(&[("s", "t")]);
        let m = train(&c, &AlignerConfig { iterations: 1, ..Default::default() }).unwrap();
        assert!((m.prob(Some("s"), "t") - 1.0).abs() < 1e-12);
        let a = m.align(&["s"], &["t"]);
        assert_eq!(a.links, vec![AlignmentLink { source_index: 0, target_index: 0 }]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(ParallelCorpus::new(Vec::<(Vec<&str>, Vec<&str>)>::new()).unwrap_err(), AlignError::EmptyCorpus);
        assert_eq!(
            ParallelCorpus::new(vec![(vec!["a"], vec!["x"]), (vec![], vec!["y"])]).unwrap_err(),
            AlignError::EmptySentence(2)
        );
        let c = corpus(&[("a", "x")]);
        let bad = [
            AlignerConfig { iterations: 0, ..Default::default() },
            AlignerConfig { tension: -1.0, ..Default::default() },
            AlignerConfig { null_prob: 0.0, ..Default::default() },
            AlignerConfig { null_prob: 1.0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(train(&c, &cfg).is_err());
        }
    }

    #[test]
    fn rows_stay_stochastic() {
        let c = corpus(&[("a b c", "x y z"), ("a c", "x z"), ("b", "y"), ("c a", "z x w")]);
        let m = train(&c, &AlignerConfig::default()).unwrap();
        for (_, sum) in m.row_sums() {
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn unknown_target_uses_prior_only() {
        let c = corpus(&[("a b", "x y")]);
        let m = train(&c, &AlignerConfig::default()).unwrap();
        let a = m.align(&["a", "b"], &["x", "qqq"]);
        assert_eq!(a.fallback_positions, vec![1]);
        // the prior alone favours the diagonal
        assert!(a.links.contains(&AlignmentLink { source_index: 1, target_index: 1 }));
    }

    #[test]
    fn projection() {
        let links = [
            AlignmentLink { source_index: 1, target_index: 3 },
            AlignmentLink { source_index: 1, target_index: 2 },
            AlignmentLink { source_index: 0, target_index: 0 },
        ];
        assert_eq!(project_entity(&links, 1), vec![2, 3]);
        assert!(project_entity(&links[2..], 5).is_empty());
    }
}
