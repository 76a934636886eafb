//! Diagnostics for gender bias in machine translation.
//!
//! The crate covers the whole evaluation pipeline for WinoMT-style challenge
//! sets translated into Italian:
//!
//! - [`corpus`]: challenge-set parsing, stereotype lexicon, minimal pairs.
//! - [`neutralizer`]: rewriting gendered pronouns to singular *they*.
//! - [`aligner`]: IBM Model 2 word alignment with a diagonal prior.
//! - [`morpho`]: rule-based Italian grammatical gender detection.
//! - [`metrics`]: standard accuracy, minimal pair accuracy, prior bias,
//!   unknown rate.
//! - [`attention`]: attention dump I/O, span matching, head aggregation and
//!   sanity checks.

pub mod aligner;
pub mod attention;
pub mod cli;
pub mod corpus;
pub mod data;
pub mod metrics;
pub mod morpho;
pub mod neutralizer;
pub mod text;

pub use corpus::{Gender, MinimalPair, SentenceId, SentenceRecord, StereotypeClass};
pub use metrics::{GenderOutcome, MetricsReport, Ratio};
pub use morpho::GenderLabel;
