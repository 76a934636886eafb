//! Layer-by-head heatmap export: CSV matrix plus a PNG raster.
//!
//! Rows are layers from the highest to the lowest of the requested range,
//! columns are heads. Colors map values linearly onto a fixed ramp; with a
//! scale anchor the mapping is identical across files.

use std::fs;
use std::path::Path;

use image::{Rgb, RgbImage};
use thiserror::Error;

use super::HeadMatrix;

/// Pixels per cell side.
pub const CELL: u32 = 16;

const RAMP: [[f64; 3]; 3] = [[255.0, 255.0, 255.0], [253.0, 141.0, 60.0], [103.0, 0.0, 13.0]];

#[derive(Debug, Error)]
pub enum HeatmapError {
    #[error("layer range {lo}..={hi} invalid for {n_layers} layers")]
    Bounds { lo: usize, hi: usize, n_layers: usize },
    #[error("scale anchor [{0}, {1}] is empty")]
    Scale(f64, f64),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

fn check(m: &HeadMatrix, (lo, hi): (usize, usize)) -> Result<(), HeatmapError> {
    if lo > hi || hi >= m.n_layers {
        return Err(HeatmapError::Bounds { lo, hi, n_layers: m.n_layers });
    }
    Ok(())
}

/// CSV text: one row per layer, highest first, 4 decimals.
pub fn heatmap_csv(m: &HeadMatrix, layers: (usize, usize)) -> Result<String, HeatmapError> {
    check(m, layers)?;
    let mut out = String::new();
    for l in (layers.0..=layers.1).rev() {
        let row: Vec<String> = (0..m.n_heads).map(|h| format!("{:.4}", m.get(l, h))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

fn color(v: f64, (lo, hi): (f64, f64)) -> Rgb<u8> {
    let x = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
    let (a, b, f) = if x <= 0.5 { (RAMP[0], RAMP[1], x * 2.0) } else { (RAMP[1], RAMP[2], x * 2.0 - 1.0) };
    let c = |k: usize| (a[k] + (b[k] - a[k]) * f).round() as u8;
    Rgb([c(0), c(1), c(2)])
}

/// Render the selected layers. Without an anchor the scale spans the
/// displayed values.
pub fn render_heatmap(
    m: &HeadMatrix,
    layers: (usize, usize),
    anchor: Option<(f64, f64)>,
) -> Result<RgbImage, HeatmapError> {
    check(m, layers)?;
    let rows: Vec<usize> = (layers.0..=layers.1).rev().collect();
    let scale = match anchor {
        Some((lo, hi)) if hi > lo => (lo, hi),
        Some((lo, hi)) => return Err(HeatmapError::Scale(lo, hi)),
        None => {
            let vals = rows.iter().flat_map(|&l| (0..m.n_heads).map(move |h| m.get(l, h)));
            vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
        }
    };
    let mut img = RgbImage::new(m.n_heads as u32 * CELL, rows.len() as u32 * CELL);
    for (r, &l) in rows.iter().enumerate() {
        for h in 0..m.n_heads {
            let c = color(m.get(l, h), scale);
            for dy in 0..CELL {
                for dx in 0..CELL {
                    img.put_pixel(h as u32 * CELL + dx, r as u32 * CELL + dy, c);
                }
            }
        }
    }
    Ok(img)
}

/// Write `csv_path` and `png_path`.
pub fn export_heatmap(
    m: &HeadMatrix,
    layers: (usize, usize),
    anchor: Option<(f64, f64)>,
    csv_path: &Path,
    png_path: &Path,
) -> Result<(), HeatmapError> {
    let csv = heatmap_csv(m, layers)?;
    let img = render_heatmap(m, layers, anchor)?;
    let io = |p: &Path, e: String| HeatmapError::Io { path: p.display().to_string(), message: e };
    fs::write(csv_path, csv).map_err(|e| io(csv_path, e.to_string()))?;
    img.save_with_format(png_path, image::ImageFormat::Png).map_err(|e| io(png_path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(layers: usize, heads: usize) -> HeadMatrix {
        let mut m = HeadMatrix::zeros(layers, heads);
        for l in 0..layers {
            for h in 0..heads {
                m.set(l, h, (l * heads + h) as f64 / (layers * heads) as f64);
            }
        }
        m.n = 1;
        m
    }

    #[test]
    fn csv_rows_descend() {
        let m = matrix(32, 4);
        let csv = heatmap_csv(&m, (8, 20)).unwrap();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows.len(), 13);
        assert_eq!(rows[0], "0.6250,0.6328,0.6406,0.6484");
        assert_eq!(rows[12].split(',').next(), Some("0.2500"));
        assert_eq!(heatmap_csv(&m, (0, 31)).unwrap().lines().count(), 32);
    }

    #[test]
    fn bad_ranges() {
        let m = matrix(4, 2);
        assert!(heatmap_csv(&m, (3, 4)).is_err());
        assert!(heatmap_csv(&m, (2, 1)).is_err());
        assert!(render_heatmap(&m, (0, 1), Some((0.2, 0.2))).is_err());
    }

    #[test]
    fn anchored_colors_agree() {
        let a = matrix(4, 2);
        let mut b = HeadMatrix::zeros(4, 2);
        b.set(1, 1, a.get(1, 1));
        let anchor = Some((0.0, 0.2));
        let ia = render_heatmap(&a, (0, 3), anchor).unwrap();
        let ib = render_heatmap(&b, (0, 3), anchor).unwrap();
        // layer 1 is row 2 from the top
        let (x, y) = (CELL + 3, 2 * CELL + 5);
        assert_eq!(ia.get_pixel(x, y), ib.get_pixel(x, y));
        assert_eq!(*ib.get_pixel(0, 0), Rgb([255, 255, 255]));
    }
}
