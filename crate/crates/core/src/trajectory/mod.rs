//! Skeleton trajectories: storage, normalization, limb midpoints and LTI
//! impulse-response synthesis.

mod io;
mod transform;

pub use io::{load_skeletons, parse_skeletons, save_skeletons, skeletons_to_string, SkeletonFormat};
pub use transform::{apply_affine, random_affine, AffineParams, AffineTransform, TransformKind};

use ndarray::{s, Array2, Array3, ArrayView2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dictionary::{Pole, PoleKind};
use crate::error::{invalid, mismatch, Error, Result};

/// `T × J × D` joint coordinates with optional names and class label.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSequence {
    data: Array3<f64>,
    pub joint_names: Option<Vec<String>>,
    pub label: Option<u32>,
    pub fps: Option<f64>,
}

impl SkeletonSequence {
    pub fn new(data: Array3<f64>) -> Result<Self> {
        let (t, j, d) = data.dim();
        if t < 1 || j < 1 {
            return Err(invalid(format!("sequence needs at least one frame and joint, got {t}×{j}")));
        }
        if d != 2 && d != 3 {
            return Err(invalid(format!("coordinates must be 2D or 3D, got {d}")));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (f, rest) = (pos / (j * d), pos % (j * d));
            return Err(Error::NonFinite(format!(
                "frame {f}, joint {}, dim {}",
                rest / d,
                rest % d
            )));
        }
        Ok(SkeletonSequence { data, joint_names: None, label: None, fps: None })
    }

    pub fn with_label(mut self, label: u32) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_joint_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.joints() {
            return Err(mismatch(format!("{} names for {} joints", names.len(), self.joints())));
        }
        self.joint_names = Some(names);
        Ok(self)
    }

    pub fn data(&self) -> &Array3<f64> {
        &self.data
    }

    pub fn frames(&self) -> usize {
        self.data.dim().0
    }

    pub fn joints(&self) -> usize {
        self.data.dim().1
    }

    pub fn dims(&self) -> usize {
        self.data.dim().2
    }

    /// `T × D` trajectory of one joint.
    pub fn joint_trajectory(&self, joint: usize) -> ArrayView2<'_, f64> {
        self.data.slice(s![.., joint, ..])
    }

    /// Sequence restricted to the given frame indices (repeats allowed).
    pub fn select_frames(&self, frames: &[usize]) -> Result<SkeletonSequence> {
        if frames.is_empty() {
            return Err(invalid("no frames selected"));
        }
        if let Some(&f) = frames.iter().find(|&&f| f >= self.frames()) {
            return Err(invalid(format!("frame {f} out of range {}", self.frames())));
        }
        let (_, j, d) = self.data.dim();
        let mut out = Array3::zeros((frames.len(), j, d));
        for (i, &f) in frames.iter().enumerate() {
            out.slice_mut(s![i, .., ..]).assign(&self.data.slice(s![f, .., ..]));
        }
        Ok(self.replace_data(out))
    }

    fn replace_data(&self, data: Array3<f64>) -> SkeletonSequence {
        SkeletonSequence {
            data,
            joint_names: self.joint_names.clone(),
            label: self.label,
            fps: self.fps,
        }
    }
}

/// Per-(joint, dim) mean and population variance over a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: Array2<f64>,
    pub variance: Array2<f64>,
    pub computed_over: String,
}

pub fn compute_stats(train: &[SkeletonSequence]) -> Result<NormalizationStats> {
    let first = train.first().ok_or_else(|| invalid("empty training set"))?;
    let (j, d) = (first.joints(), first.dims());
    let mut sum = Array2::<f64>::zeros((j, d));
    let mut count = 0usize;
    for seq in train {
        if seq.joints() != j || seq.dims() != d {
            return Err(mismatch(format!(
                "sequence has {}×{} joints/dims, expected {j}×{d}",
                seq.joints(),
                seq.dims()
            )));
        }
        for frame in seq.data.outer_iter() {
            sum += &frame;
        }
        count += seq.frames();
    }
    let mean = sum / count as f64;
    let mut sq = Array2::<f64>::zeros((j, d));
    let mut hasher = Sha256::new();
    for seq in train {
        for frame in seq.data.outer_iter() {
            let dev = &frame - &mean;
            sq += &(&dev * &dev);
        }
        for v in seq.data.iter() {
            hasher.update(v.to_le_bytes());
        }
    }
    let variance = sq / count as f64;
    for ((jj, dd), &v) in variance.indexed_iter() {
        if !(v > 0.0) {
            return Err(Error::ZeroVariance { joint: jj, dim: dd });
        }
    }
    Ok(NormalizationStats {
        mean,
        variance,
        computed_over: hex::encode(&hasher.finalize()[..8]),
    })
}

/// `(x − mean) / √variance` per channel.
pub fn normalize(seq: &SkeletonSequence, stats: &NormalizationStats) -> Result<SkeletonSequence> {
    if stats.mean.dim() != (seq.joints(), seq.dims()) {
        return Err(mismatch("normalization stats do not match sequence layout"));
    }
    let std = stats.variance.mapv(f64::sqrt);
    let mut out = seq.data.clone();
    for mut frame in out.outer_iter_mut() {
        frame -= &stats.mean;
        frame /= &std;
    }
    Ok(seq.replace_data(out))
}

/// Joint pairs whose midpoints are appended as extra joints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimbSpec {
    pub pairs: Vec<(usize, usize)>,
}

impl LimbSpec {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        for (i, p) in pairs.iter().enumerate() {
            if p.0 == p.1 {
                return Err(invalid(format!("limb {i} connects joint {} to itself", p.0)));
            }
            if pairs[..i].iter().any(|q| q == p || (q.0 == p.1 && q.1 == p.0)) {
                return Err(invalid(format!("limb {p:?} listed twice")));
            }
        }
        Ok(LimbSpec { pairs })
    }

    /// Upper arms, forearms, thighs and shins of the 25-joint Kinect v2 layout.
    pub fn kinect25() -> Self {
        LimbSpec {
            pairs: vec![
                (4, 5),
                (8, 9),
                (5, 6),
                (9, 10),
                (12, 13),
                (16, 17),
                (13, 14),
                (17, 18),
            ],
        }
    }

    pub fn empty() -> Self {
        LimbSpec { pairs: vec![] }
    }
}

pub fn add_limb_midpoints(seq: &SkeletonSequence, spec: &LimbSpec) -> Result<SkeletonSequence> {
    let j = seq.joints();
    if let Some(p) = spec.pairs.iter().find(|p| p.0 >= j || p.1 >= j) {
        return Err(invalid(format!("limb {p:?} out of range for {j} joints")));
    }
    let (t, _, d) = seq.data.dim();
    let mut out = Array3::zeros((t, j + spec.pairs.len(), d));
    out.slice_mut(s![.., ..j, ..]).assign(&seq.data);
    for (i, &(a, b)) in spec.pairs.iter().enumerate() {
        let mid = (&seq.data.slice(s![.., a, ..]) + &seq.data.slice(s![.., b, ..])) * 0.5;
        out.slice_mut(s![.., j + i, ..]).assign(&mid);
    }
    let mut result = seq.replace_data(out);
    if let Some(names) = &seq.joint_names {
        let mut names = names.clone();
        for &(a, b) in &spec.pairs {
            names.push(format!("mid({},{})", names[a], names[b]));
        }
        result.joint_names = Some(names);
    }
    Ok(result)
}

/// One mode of an impulse response: `amplitude · ρ^m · cos(mθ + phase_offset)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub pole: Pole,
    pub amplitude: f64,
    /// Ignored for unit and real poles.
    pub phase_offset: f64,
}

impl Mode {
    pub fn new(pole: Pole, amplitude: f64, phase_offset: f64) -> Self {
        Mode { pole, amplitude, phase_offset }
    }

    fn sample(&self, m: usize) -> f64 {
        let r = self.pole.magnitude().powi(m as i32);
        let angle = m as f64 * self.pole.phase();
        match self.pole.kind() {
            PoleKind::ConjugatePair => self.amplitude * r * (angle + self.phase_offset).cos(),
            _ => self.amplitude * r * angle.cos(),
        }
    }
}

/// Impulse response `y_k = Σ_modes sample(k − 1 + delay)` for `k = 1..=frames`.
pub fn simulate_lti(modes: &[Mode], frames: usize, delay: usize) -> Result<Vec<f64>> {
    if frames < 1 {
        return Err(invalid("frames must be at least 1"));
    }
    Ok((0..frames)
        .map(|k| modes.iter().map(|m| m.sample(k + delay)).sum())
        .collect())
}
