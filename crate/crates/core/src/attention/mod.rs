//! Attention to the gender cue, per layer and head.
//!
//! For a located instance, each cell is the attention mass on the cue
//! positions (summed over cue subwords) when generating the target,
//! averaged over the target's generated tokens.

pub mod dump;
pub mod heatmap;
pub mod spans;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SentenceId;
pub use dump::{list_dumps, read_dump, write_dump, AttentionDump, DumpError, DumpMeta};
pub use heatmap::{export_heatmap, heatmap_csv, render_heatmap, HeatmapError};
pub use spans::{locate_spans, SpanError, SpanMap, SpanMatch};

#[derive(Debug, Error, PartialEq)]
pub enum AttentionError {
    #[error("need at least {n_min} instances, have {have}")]
    TooFew { have: usize, n_min: usize },
    #[error("n_min must be at least 1")]
    ZeroMin,
    #[error("matrix shapes differ: {0:?} vs {1:?}")]
    Shape((usize, usize), (usize, usize)),
    #[error("no secondary entity span")]
    NoSecondary,
    #[error("span index {0} outside the dump")]
    OutOfBounds(usize),
}

/// Mean attention per layer and head over `n` instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadMatrix {
    pub n_layers: usize,
    pub n_heads: usize,
    /// Row-major, `n_layers * n_heads`.
    pub values: Vec<f64>,
    pub n: usize,
}

impl HeadMatrix {
    pub fn zeros(n_layers: usize, n_heads: usize) -> Self {
        HeadMatrix { n_layers, n_heads, values: vec![0.0; n_layers * n_heads], n: 0 }
    }

    pub fn get(&self, layer: usize, head: usize) -> f64 {
        self.values[layer * self.n_heads + head]
    }

    pub fn set(&mut self, layer: usize, head: usize, v: f64) {
        self.values[layer * self.n_heads + head] = v;
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_layers, self.n_heads)
    }
}

impl AttentionDump {
    /// Build a dump from a weight function `(step, layer, head, position)`.
    /// Weights are not renormalized.
    pub fn from_fn(meta: DumpMeta, f: impl Fn(usize, usize, usize, usize) -> f32) -> Self {
        let steps = (0..meta.generated_tokens.len())
            .map(|t| {
                let w = meta.prompt_len + t;
                let mut block = Vec::with_capacity(meta.n_layers * meta.n_heads * w);
                for l in 0..meta.n_layers {
                    for h in 0..meta.n_heads {
                        block.extend((0..w).map(|p| f(t, l, h, p)));
                    }
                }
                block
            })
            .collect();
        AttentionDump { meta, steps }
    }
}

fn check_bounds(dump: &AttentionDump, steps: &[usize], positions: &[usize]) -> Result<(), AttentionError> {
    if let Some(&t) = steps.iter().find(|&&t| t >= dump.n_steps()) {
        return Err(AttentionError::OutOfBounds(t));
    }
    if let Some(&p) = positions.iter().find(|&&p| p >= dump.meta.prompt_len) {
        return Err(AttentionError::OutOfBounds(p));
    }
    Ok(())
}

fn mass_on(dump: &AttentionDump, steps: &[usize], positions: &[usize]) -> HeadMatrix {
    let (nl, nh) = (dump.meta.n_layers, dump.meta.n_heads);
    let mut m = HeadMatrix::zeros(nl, nh);
    m.n = 1;
    if steps.is_empty() {
        return m;
    }
    for l in 0..nl {
        for h in 0..nh {
            let total: f64 = steps
                .iter()
                .map(|&t| {
                    let row = dump.row(t, l, h);
                    positions.iter().map(|&p| row[p] as f64).sum::<f64>()
                })
                .sum();
            m.set(l, h, total / steps.len() as f64);
        }
    }
    m
}

/// Attention on the cue while generating the target span.
pub fn cue_attention(dump: &AttentionDump, span: &SpanMap) -> Result<HeadMatrix, AttentionError> {
    check_bounds(dump, &span.target_span, &span.cue_positions)?;
    Ok(mass_on(dump, &span.target_span, &span.cue_positions))
}

/// Attention on the cue while generating the secondary entity.
pub fn secondary_entity_attention(dump: &AttentionDump, span: &SpanMap) -> Result<HeadMatrix, AttentionError> {
    let steps = span.secondary_span.as_ref().ok_or(AttentionError::NoSecondary)?;
    check_bounds(dump, steps, &span.cue_positions)?;
    Ok(mass_on(dump, steps, &span.cue_positions))
}

/// Attention on prompt-template tokens (the prompt minus the embedded
/// source sentence) while generating the target, averaged over target
/// steps, layers and heads.
pub fn prompt_attention_mass(dump: &AttentionDump, span: &SpanMap) -> Result<f64, AttentionError> {
    let (a, b) = dump.meta.source_span;
    let template: Vec<usize> = (0..dump.meta.prompt_len).filter(|p| !(a..b).contains(p)).collect();
    check_bounds(dump, &span.target_span, &template)?;
    let m = mass_on(dump, &span.target_span, &template);
    Ok(m.values.iter().sum::<f64>() / m.values.len() as f64)
}

/// Mean of the first `n_min` instances in ascending sentence-id order.
pub fn aggregate(instances: &[(SentenceId, HeadMatrix)], n_min: usize) -> Result<HeadMatrix, AttentionError> {
    if n_min == 0 {
        return Err(AttentionError::ZeroMin);
    }
    if instances.len() < n_min {
        return Err(AttentionError::TooFew { have: instances.len(), n_min });
    }
    let mut sorted: Vec<&(SentenceId, HeadMatrix)> = instances.iter().collect();
    sorted.sort_by(|x, y| x.0.cmp(&y.0));
    let shape = sorted[0].1.shape();
    let mut out = HeadMatrix::zeros(shape.0, shape.1);
    for (_, m) in sorted.iter().take(n_min) {
        if m.shape() != shape {
            return Err(AttentionError::Shape(shape, m.shape()));
        }
        for (acc, v) in out.values.iter_mut().zip(&m.values) {
            *acc += v;
        }
    }
    for v in &mut out.values {
        *v /= n_min as f64;
    }
    out.n = n_min;
    Ok(out)
}
