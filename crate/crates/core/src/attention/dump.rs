//! On-disk attention dumps.
//!
//! One directory per sentence:
//!
//! - `meta`: JSON sidecar ([`DumpMeta`]).
//! - `attn.bin`: magic `ATTD`, `u32` version 1, `u32` step count, then for
//!   every generation step `t` a row-major block of little-endian `f32` with
//!   shape `n_layers x n_heads x (prompt_len + t)`.
//!
//! Context position `p` is a prompt token when `p < prompt_len`, otherwise
//! generated token `p - prompt_len`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"ATTD";
pub const VERSION: u32 = 1;
pub const META_FILE: &str = "meta";
pub const ATTN_FILE: &str = "attn.bin";
/// Maximum deviation of an attention row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad meta in {path}: {message}")]
    Meta { path: String, message: String },
    #[error("bad magic {0:?}")]
    Magic([u8; 4]),
    #[error("unsupported version {0}")]
    Version(u32),
    #[error("expected {expected} bytes, found {found}")]
    Length { expected: usize, found: usize },
    #[error("{0}")]
    Inconsistent(String),
    #[error("step {step} layer {layer} head {head}: row sums to {sum}")]
    RowSum { step: usize, layer: usize, head: usize, sum: f64 },
    #[error("step {step} layer {layer} head {head}: weight {value} is not in [0, 1]")]
    Weight { step: usize, layer: usize, head: usize, value: f32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpMeta {
    pub sentence_id: String,
    pub prompt_len: usize,
    /// Prompt positions `[start, end)` holding the embedded source sentence.
    pub source_span: (usize, usize),
    /// Prompt token strings, `prompt_len` of them.
    pub context_tokens: Vec<String>,
    /// One token per generation step.
    pub generated_tokens: Vec<String>,
    pub n_layers: usize,
    pub n_heads: usize,
    pub dtype: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionDump {
    pub meta: DumpMeta,
    /// `steps[t]` has `n_layers * n_heads * (prompt_len + t)` weights.
    pub steps: Vec<Vec<f32>>,
}

impl AttentionDump {
    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn step_width(&self, t: usize) -> usize {
        self.meta.prompt_len + t
    }

    /// Attention row of step `t`, layer `l`, head `h`.
    pub fn row(&self, t: usize, l: usize, h: usize) -> &[f32] {
        let w = self.step_width(t);
        let start = (l * self.meta.n_heads + h) * w;
        &self.steps[t][start..start + w]
    }

    /// Token string at context position `p`.
    pub fn context_token(&self, p: usize) -> &str {
        if p < self.meta.prompt_len {
            &self.meta.context_tokens[p]
        } else {
            &self.meta.generated_tokens[p - self.meta.prompt_len]
        }
    }

    /// Structural and numerical checks.
    pub fn validate(&self) -> Result<(), DumpError> {
        let m = &self.meta;
        let bad = |s: String| Err(DumpError::Inconsistent(s));
        if m.dtype != "f32le" {
            return bad(format!("dtype must be f32le, got {}", m.dtype));
        }
        if m.n_layers == 0 || m.n_heads == 0 {
            return bad("n_layers and n_heads must be positive".into());
        }
        if m.context_tokens.len() != m.prompt_len {
            return bad(format!("{} context tokens for prompt_len {}", m.context_tokens.len(), m.prompt_len));
        }
        if m.generated_tokens.len() != self.steps.len() {
            return bad(format!("{} generated tokens for {} steps", m.generated_tokens.len(), self.steps.len()));
        }
        let (a, b) = m.source_span;
        if a > b || b > m.prompt_len {
            return bad(format!("source span [{a}, {b}) outside the prompt"));
        }
        for (t, block) in self.steps.iter().enumerate() {
            let w = self.step_width(t);
            if w == 0 {
                return bad("step attends to no positions".into());
            }
            if block.len() != m.n_layers * m.n_heads * w {
                return bad(format!("step {t} has {} weights", block.len()));
            }
            for l in 0..m.n_layers {
                for h in 0..m.n_heads {
                    let row = self.row(t, l, h);
                    if let Some(&value) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                        return Err(DumpError::Weight { step: t, layer: l, head: h, value });
                    }
                    let sum: f64 = row.iter().map(|&v| v as f64).sum();
                    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                        return Err(DumpError::RowSum { step: t, layer: l, head: h, sum });
                    }
                }
            }
        }
        Ok(())
    }

    /// Binary payload of `attn.bin`.
    pub fn encode(&self) -> Vec<u8> {
        let total: usize = self.steps.iter().map(Vec::len).sum();
        let mut out = Vec::with_capacity(12 + 4 * total);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.steps.len() as u32).to_le_bytes());
        for block in &self.steps {
            for v in block {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Parse `attn.bin` against its meta, then validate.
    pub fn decode(meta: DumpMeta, bytes: &[u8]) -> Result<Self, DumpError> {
        if bytes.len() < 12 {
            return Err(DumpError::Length { expected: 12, found: bytes.len() });
        }
        let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
        if &magic != MAGIC {
            return Err(DumpError::Magic(magic));
        }
        let word = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().expect("4 bytes"));
        let version = word(4);
        if version != VERSION {
            return Err(DumpError::Version(version));
        }
        let n_steps = word(8) as usize;
        let cell = meta.n_layers * meta.n_heads;
        let sizes: Vec<usize> = (0..n_steps).map(|t| cell * (meta.prompt_len + t)).collect();
        let expected = 12 + 4 * sizes.iter().sum::<usize>();
        if bytes.len() != expected {
            return Err(DumpError::Length { expected, found: bytes.len() });
        }
        let mut floats = bytes[12..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")));
        let steps = sizes.iter().map(|&n| floats.by_ref().take(n).collect()).collect();
        let dump = AttentionDump { meta, steps };
        dump.validate()?;
        Ok(dump)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DumpError + '_ {
    move |source| DumpError::Io { path: path.display().to_string(), source }
}

pub fn write_dump(dir: &Path, dump: &AttentionDump) -> Result<(), DumpError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let meta_path = dir.join(META_FILE);
    let meta = serde_json::to_string_pretty(&dump.meta).expect("meta serializes");
    fs::write(&meta_path, meta + "\n").map_err(io_err(&meta_path))?;
    let attn_path = dir.join(ATTN_FILE);
    fs::write(&attn_path, dump.encode()).map_err(io_err(&attn_path))
}

pub fn read_dump(dir: &Path) -> Result<AttentionDump, DumpError> {
    let meta_path = dir.join(META_FILE);
    let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: DumpMeta = serde_json::from_str(&text)
        .map_err(|e| DumpError::Meta { path: meta_path.display().to_string(), message: e.to_string() })?;
    let attn_path = dir.join(ATTN_FILE);
    let bytes = fs::read(&attn_path).map_err(io_err(&attn_path))?;
    AttentionDump::decode(meta, &bytes)
}

/// Every dump directory directly under `root`, sorted by path.
pub fn list_dumps(root: &Path) -> Result<Vec<std::path::PathBuf>, DumpError> {
    let mut dirs: Vec<_> = fs::read_dir(root)
        .map_err(io_err(root))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(META_FILE).is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn uniform_dump(prompt_len: usize, steps: usize, layers: usize, heads: usize) -> AttentionDump {
        let meta = DumpMeta {
            sentence_id: "t:1".into(),
            prompt_len,
            source_span: (0, prompt_len),
            context_tokens: (0..prompt_len).map(|i| format!("p{i}")).collect(),
            generated_tokens: (0..steps).map(|i| format!("g{i}")).collect(),
            n_layers: layers,
            n_heads: heads,
            dtype: "f32le".into(),
        };
        let steps = (0..steps)
            .map(|t| {
                let w = prompt_len + t;
                vec![1.0 / w as f32; layers * heads * w]
            })
            .collect();
        AttentionDump { meta, steps }
    }

    #[test]
    fn binary_roundtrip() {
        let d = uniform_dump(5, 3, 2, 3);
        d.validate().unwrap();
        let bytes = d.encode();
        assert_eq!(&bytes[..4], b"ATTD");
        assert_eq!(bytes.len(), 12 + 4 * 2 * 3 * (5 + 6 + 7));
        assert_eq!(AttentionDump::decode(d.meta.clone(), &bytes).unwrap(), d);
    }

    #[test]
    fn header_checks() {
        let d = uniform_dump(4, 2, 1, 1);
        let mut bytes = d.encode();
        bytes[0] = b'X';
        assert!(matches!(AttentionDump::decode(d.meta.clone(), &bytes), Err(DumpError::Magic(_))));
        let mut bytes = d.encode();
        bytes[4] = 2;
        assert!(matches!(AttentionDump::decode(d.meta.clone(), &bytes), Err(DumpError::Version(2))));
        let mut bytes = d.encode();
        bytes.pop();
        assert!(matches!(AttentionDump::decode(d.meta.clone(), &bytes), Err(DumpError::Length { .. })));
    }

    #[test]
    fn row_sum_tolerance() {
        let mut d = uniform_dump(4, 1, 1, 1);
        d.steps[0][0] += 0.0009;
        d.validate().unwrap();
        d.steps[0][0] += 0.0003;
        assert!(matches!(d.validate(), Err(DumpError::RowSum { .. })));
    }

    #[test]
    fn directory_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let d = uniform_dump(3, 2, 2, 2);
        write_dump(&dir.path().join("a"), &d).unwrap();
        assert_eq!(read_dump(&dir.path().join("a")).unwrap(), d);
        assert_eq!(list_dumps(dir.path()).unwrap().len(), 1);
    }
}
