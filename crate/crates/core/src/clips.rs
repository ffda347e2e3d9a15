//! Anchor-based clip sampling and clip-level prediction aggregation.

use ndarray::{Array1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const DEFAULT_CLIPS: usize = 6;
pub const DEFAULT_CLIP_FRAMES: usize = 36;
const PROB_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClipMode {
    Multi,
    Single,
}

impl ClipMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "multi" => Ok(ClipMode::Multi),
            "single" => Ok(ClipMode::Single),
            other => Err(invalid(format!("unknown clip mode {other:?}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClipMode::Multi => "multi",
            ClipMode::Single => "single",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipSet {
    pub clips: Vec<Vec<usize>>,
    pub source_length: usize,
    pub mode: ClipMode,
}

/// `round((i + 0.5) · L / n)` for `i < n`, clamped to the last frame.
pub fn anchors(length: usize, n: usize) -> Result<Vec<usize>> {
    if length < 1 || n < 1 {
        return Err(invalid(format!("need L ≥ 1 and n ≥ 1, got L={length}, n={n}")));
    }
    Ok((0..n)
        .map(|i| {
            let a = ((i as f64 + 0.5) * length as f64 / n as f64).round() as usize;
            a.min(length - 1)
        })
        .collect())
}

pub fn sample_multi_clips(length: usize, n: usize, t: usize) -> Result<ClipSet> {
    if t < 1 {
        return Err(invalid("clip length must be at least 1"));
    }
    let clips = anchors(length, n)?
        .into_iter()
        .map(|a| {
            let start = a as i64 - (t / 2) as i64;
            (0..t as i64)
                .map(|k| (start + k).clamp(0, length as i64 - 1) as usize)
                .collect()
        })
        .collect();
    Ok(ClipSet { clips, source_length: length, mode: ClipMode::Multi })
}

pub fn sample_single_clip(length: usize, n: usize) -> Result<ClipSet> {
    Ok(ClipSet { clips: vec![anchors(length, n)?], source_length: length, mode: ClipMode::Single })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub label: usize,
    pub mean_probs: Array1<f64>,
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn aggregate_predictions(per_clip: ArrayView2<'_, f64>) -> Result<Aggregate> {
    let (n, c) = per_clip.dim();
    if n == 0 || c == 0 {
        return Err(invalid("no clip predictions"));
    }
    for (i, row) in per_clip.outer_iter().enumerate() {
        if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) || (row.sum() - 1.0).abs() > PROB_TOL {
            return Err(invalid(format!("row {i} is not a probability vector")));
        }
    }
    // Sum in a fixed sorted order per column so the result ignores clip order.
    let mean_probs = Array1::from_iter(per_clip.axis_iter(Axis(1)).map(|col| {
        let mut v = col.to_vec();
        v.sort_by(f64::total_cmp);
        v.iter().sum::<f64>() / n as f64
    }));
    let label = argmax(mean_probs.as_slice().expect("contiguous"));
    Ok(Aggregate { label, mean_probs })
}
