//! Pharaoh link format (`i-j`, 0-based) and bitext readers.

use std::fs;
use std::path::Path;

use super::AlignError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AlignmentLink {
    pub source_index: usize,
    pub target_index: usize,
}

/// Links as `i-j` pairs sorted by target index, then source index.
pub fn format_pharaoh(links: &[AlignmentLink]) -> String {
    let mut sorted = links.to_vec();
    sorted.sort_by_key(|l| (l.target_index, l.source_index));
    sorted.iter().map(|l| format!("{}-{}", l.source_index, l.target_index)).collect::<Vec<_>>().join(" ")
}

/// Parse one line of Pharaoh links. `line` is only used for errors.
pub fn parse_pharaoh(text: &str, line: usize) -> Result<Vec<AlignmentLink>, AlignError> {
    text.split_whitespace()
        .map(|pair| {
            let bad = || AlignError::Format { line, message: format!("bad link `{pair}`") };
            let (i, j) = pair.split_once('-').ok_or_else(bad)?;
            Ok(AlignmentLink {
                source_index: i.parse().map_err(|_| bad())?,
                target_index: j.parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

fn read(path: &Path) -> Result<String, AlignError> {
    fs::read_to_string(path).map_err(|e| AlignError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// `source ||| target` lines.
pub fn read_bitext(path: &Path) -> Result<Vec<(String, String)>, AlignError> {
    let text = read(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            let (s, t) = l
                .split_once("|||")
                .ok_or_else(|| AlignError::Format { line: k + 1, message: "expected `source ||| target`".into() })?;
            Ok((s.trim().to_string(), t.trim().to_string()))
        })
        .collect()
}

/// Two line-parallel files.
pub fn read_parallel_files(source: &Path, target: &Path) -> Result<Vec<(String, String)>, AlignError> {
    let s = read(source)?;
    let t = read(target)?;
    let s: Vec<&str> = s.lines().collect();
    let t: Vec<&str> = t.lines().collect();
    if s.len() != t.len() {
        return Err(AlignError::Format {
            line: s.len().min(t.len()) + 1,
            message: format!("source has {} lines, target has {}", s.len(), t.len()),
        });
    }
    Ok(s.into_iter().zip(t).map(|(a, b)| (a.trim().to_string(), b.trim().to_string())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_sorted_by_target() {
        let links = parse_pharaoh("2-1 0-0 1-2", 1).unwrap();
        assert_eq!(format_pharaoh(&links), "0-0 2-1 1-2");
        assert_eq!(parse_pharaoh(&format_pharaoh(&links), 1).unwrap().len(), 3);
        assert!(parse_pharaoh("", 1).unwrap().is_empty());
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(parse_pharaoh("0-0 x-1", 4), Err(AlignError::Format { line: 4, .. })));
        assert!(parse_pharaoh("3", 1).is_err());
    }

    #[test]
    fn bitext_reader() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.txt");
        fs::write(&p, "a b ||| x y\n\nc ||| z\n").unwrap();
        assert_eq!(read_bitext(&p).unwrap().len(), 2);
        fs::write(&p, "no separator\n").unwrap();
        assert!(read_bitext(&p).is_err());
    }
}
