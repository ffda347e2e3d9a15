use ndarray::{s, Array2, Array3, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};

use super::SkeletonSequence;
use crate::error::{invalid, mismatch, Result};

const ORTHONORMAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    /// 4×4 `[R|t]` with orthonormal `R`.
    Rigid3d,
    /// 4×4 with an arbitrary invertible linear block.
    Affine3d,
    /// 3×3 planar affine map.
    Affine2d,
    /// 3×4 affine camera from 3D onto the image plane.
    Project3to2,
}

impl TransformKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TransformKind::Rigid3d => "rigid3d",
            TransformKind::Affine3d => "affine3d",
            TransformKind::Affine2d => "affine2d",
            TransformKind::Project3to2 => "project3to2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rigid3d" => Ok(TransformKind::Rigid3d),
            "affine3d" => Ok(TransformKind::Affine3d),
            "affine2d" => Ok(TransformKind::Affine2d),
            "project3to2" => Ok(TransformKind::Project3to2),
            other => Err(invalid(format!("unknown transform kind {other:?}"))),
        }
    }

    pub fn input_dims(self) -> usize {
        match self {
            TransformKind::Affine2d => 2,
            _ => 3,
        }
    }

    pub fn output_dims(self) -> usize {
        match self {
            TransformKind::Rigid3d | TransformKind::Affine3d => 3,
            _ => 2,
        }
    }
}

/// Homogeneous affine map plus an integer frame delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform {
    matrix: Array2<f64>,
    delay: usize,
    kind: TransformKind,
}

impl AffineTransform {
    pub fn new(matrix: Array2<f64>, delay: usize, kind: TransformKind) -> Result<Self> {
        let want = (kind.output_dims() + 1, kind.input_dims() + 1);
        if matrix.dim() != want {
            return Err(mismatch(format!(
                "{} needs a {}×{} matrix, got {:?}",
                kind.as_str(),
                want.0,
                want.1,
                matrix.dim()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(crate::Error::NonFinite("transform matrix".into()));
        }
        let last = matrix.row(want.0 - 1);
        let (cols, rows) = (want.1, want.0);
        if last.iter().take(cols - 1).any(|&v| v != 0.0) || last[cols - 1] != 1.0 {
            return Err(invalid("last row must be (0, …, 0, 1)"));
        }
        if kind == TransformKind::Rigid3d {
            let r = matrix.slice(s![..rows - 1, ..cols - 1]);
            let rtr = r.t().dot(&r);
            let worst = rtr
                .indexed_iter()
                .map(|((i, j), v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
                .fold(0.0, f64::max);
            if worst > ORTHONORMAL_TOL {
                return Err(invalid(format!("rotation block is not orthonormal (error {worst:e})")));
            }
        }
        Ok(AffineTransform { matrix, delay, kind })
    }

    pub fn identity(dims: usize) -> Result<Self> {
        let kind = match dims {
            2 => TransformKind::Affine2d,
            3 => TransformKind::Rigid3d,
            _ => return Err(invalid(format!("no identity for {dims}D"))),
        };
        Ok(AffineTransform { matrix: Array2::eye(dims + 1), delay: 0, kind })
    }

    pub fn with_delay(mut self, delay: usize) -> Self {
        self.delay = delay;
        self
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    /// Linear block `A` (without translation).
    pub fn linear(&self) -> ArrayView2<'_, f64> {
        let (r, c) = self.matrix.dim();
        self.matrix.slice(s![..r - 1, ..c - 1])
    }

    pub fn is_square(&self) -> bool {
        self.kind.input_dims() == self.kind.output_dims()
    }

    /// `self ∘ inner`: applies `inner` first. Delays add.
    pub fn compose(&self, inner: &AffineTransform) -> Result<AffineTransform> {
        if self.kind.input_dims() != inner.kind.output_dims() {
            return Err(mismatch("transform dimensions do not chain"));
        }
        let kind = match (inner.kind.input_dims(), self.kind.output_dims()) {
            (2, 2) => TransformKind::Affine2d,
            (3, 2) => TransformKind::Project3to2,
            (3, 3) if self.kind == TransformKind::Rigid3d && inner.kind == TransformKind::Rigid3d => {
                TransformKind::Rigid3d
            }
            _ => TransformKind::Affine3d,
        };
        Ok(AffineTransform {
            matrix: self.matrix.dot(&inner.matrix),
            delay: self.delay + inner.delay,
            kind,
        })
    }

    /// Maps a `T × D` point track, dropping the first `delay` frames.
    pub fn apply_to_track(&self, track: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let (t, d) = track.dim();
        if d != self.kind.input_dims() {
            return Err(mismatch(format!("{}D track for a {} transform", d, self.kind.as_str())));
        }
        if self.delay >= t {
            return Err(invalid(format!("delay {} needs more than {t} frames", self.delay)));
        }
        let a = self.linear();
        let out_d = self.kind.output_dims();
        let shift = self.matrix.slice(s![..out_d, d]);
        let mut out = track.slice(s![self.delay.., ..]).dot(&a.t());
        for mut row in out.outer_iter_mut() {
            row += &shift;
        }
        Ok(out)
    }
}

/// Dehomogenized `matrix · [x; 1]` per joint, on frames `delay..T`.
pub fn apply_affine(seq: &SkeletonSequence, t: &AffineTransform) -> Result<SkeletonSequence> {
    let (frames, joints, _) = seq.data().dim();
    if t.delay >= frames {
        return Err(invalid(format!("delay {} needs more than {frames} frames", t.delay)));
    }
    let out_d = t.kind.output_dims();
    let mut out = Array3::zeros((frames - t.delay, joints, out_d));
    for j in 0..joints {
        let mapped = t.apply_to_track(seq.joint_trajectory(j))?;
        out.slice_mut(s![.., j, ..]).assign(&mapped);
    }
    Ok(seq.replace_data(out))
}

/// Bounds for [`random_affine`]. All-zero ranges give the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineParams {
    /// Maximum rotation angle in radians.
    pub rotation_range: f64,
    /// Per-axis scale drawn from `[1 − s, 1 + s]`.
    pub scale_range: f64,
    /// Per-axis translation drawn from `[−r, r]`.
    pub translation_range: f64,
    /// Delay drawn from `0..=max_delay`.
    pub max_delay: usize,
    pub kind: TransformKind,
}

impl AffineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rotation_range >= 0.0 && self.rotation_range <= std::f64::consts::PI) {
            return Err(invalid(format!("rotation_range {} outside [0, π]", self.rotation_range)));
        }
        if !(self.scale_range >= 0.0 && self.scale_range < 1.0) {
            return Err(invalid(format!("scale_range {} outside [0, 1)", self.scale_range)));
        }
        if !(self.translation_range >= 0.0 && self.translation_range.is_finite()) {
            return Err(invalid(format!("bad translation_range {}", self.translation_range)));
        }
        Ok(())
    }
}

fn symmetric(rng: &mut ChaCha8Rng, r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        rng.random_range(-r..=r)
    }
}

fn quaternion_rotation(rng: &mut ChaCha8Rng, max_angle: f64) -> Array2<f64> {
    let axis: [f64; 3] = UnitSphere.sample(rng);
    let angle = symmetric(rng, max_angle);
    let (sh, ch) = (angle / 2.0).sin_cos();
    let q = [ch, sh * axis[0], sh * axis[1], sh * axis[2]];
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    ndarray::array![
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

pub fn random_affine(seed: u64, params: &AffineParams) -> Result<AffineTransform> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = params.kind;
    let (din, dout) = (kind.input_dims(), kind.output_dims());
    let linear = if din == 2 {
        let a = symmetric(&mut rng, params.rotation_range);
        let (sn, cs) = a.sin_cos();
        ndarray::array![[cs, -sn], [sn, cs]]
    } else {
        quaternion_rotation(&mut rng, params.rotation_range)
    };
    let mut linear = linear;
    if kind != TransformKind::Rigid3d {
        for mut col in linear.columns_mut() {
            col *= 1.0 + symmetric(&mut rng, params.scale_range);
        }
    }
    let mut m = Array2::zeros((dout + 1, din + 1));
    m.slice_mut(s![..dout, ..din]).assign(&linear.slice(s![..dout, ..]));
    for i in 0..dout {
        m[[i, din]] = symmetric(&mut rng, params.translation_range);
    }
    m[[dout, din]] = 1.0;
    let delay = if params.max_delay == 0 { 0 } else { rng.random_range(0..=params.max_delay) };
    AffineTransform::new(m, delay, kind)
}
