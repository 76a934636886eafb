//! File helpers for the subcommands.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use super::CliError;
use crate::aligner::{parse_pharaoh, AlignError, AlignmentLink};
use crate::corpus::{CorpusError, SentenceId};

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn write_log(dir: &Path, name: &str, log: &serde_json::Value) -> Result<(), CliError> {
    let path = dir.join(format!("{name}.log.json"));
    write(&path, serde_json::to_string_pretty(log).expect("log serializes") + "\n")
}

pub fn corpus_err(e: CorpusError) -> CliError {
    match e {
        CorpusError::Io { path, source } => CliError::io(&path, source),
        other => CliError::Validation(other.to_string()),
    }
}

pub fn align_err(e: AlignError) -> CliError {
    match e {
        AlignError::Io { path, message } => CliError::Io(format!("{path}: {message}")),
        other => CliError::Validation(other.to_string()),
    }
}

pub fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

/// `id<TAB>translation` lines, in file order.
pub fn read_translations(path: &Path) -> Result<Vec<(SentenceId, String)>, CliError> {
    let text = read(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, translation) = line.split_once('\t').ok_or_else(|| {
            CliError::Validation(format!("{} line {}: expected id<TAB>translation", path.display(), n + 1))
        })?;
        let id = SentenceId::from(id.trim());
        if !seen.insert(id.clone()) {
            return Err(CliError::Validation(format!("{}: duplicate id {id}", path.display())));
        }
        out.push((id, translation.trim().to_string()));
    }
    Ok(out)
}

/// Pharaoh lines keyed by id. Lines are either `id<TAB>links` or bare
/// links matched positionally against `order`.
pub fn read_alignments(path: &Path, order: &[SentenceId]) -> Result<HashMap<SentenceId, Vec<AlignmentLink>>, CliError> {
    let text = read(path)?;
    let lines: Vec<&str> = text.lines().collect();
    let mut out = HashMap::new();
    let keyed = lines.iter().any(|l| l.contains('\t'));
    if keyed {
        for (n, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (id, links) = line.split_once('\t').unwrap_or((line, ""));
            let links = parse_pharaoh(links, n + 1).map_err(align_err)?;
            out.insert(SentenceId::from(id.trim()), links);
        }
    } else {
        if lines.len() != order.len() {
            return Err(CliError::Validation(format!(
                "{} has {} lines for {} sentence pairs",
                path.display(),
                lines.len(),
                order.len()
            )));
        }
        for (n, (line, id)) in lines.iter().zip(order).enumerate() {
            out.insert(id.clone(), parse_pharaoh(line, n + 1).map_err(align_err)?);
        }
    }
    Ok(out)
}
