//! Numerical checks of pole-support invariance under view changes and
//! delays, and the synthetic cross-view benchmark generator.

use ndarray::{Array2, Array3};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binarize::{jaccard, same_support};
use crate::dictionary::{Pole, PoleDictionary, PoleKind};
use crate::error::{invalid, Error, Result};
use crate::pipeline::{mix_seed, Encoder, GateConfig};
use crate::solver::SolverConfig;
use crate::trajectory::{
    random_affine, simulate_lti, AffineParams, AffineTransform, Mode, SkeletonSequence, TransformKind,
};

/// Which view change a verification trial applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// View 2 is view 1.
    Identity,
    /// Identity matrix with a delay in `1..=max_delay`.
    Delay,
    /// Random invertible 3D affine map with a delay in `0..=max_delay`.
    Affine,
}

impl Regime {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Regime::Identity),
            "delay" => Ok(Regime::Delay),
            "affine" => Ok(Regime::Affine),
            other => Err(invalid(format!("unknown regime {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub trials: usize,
    pub seed: u64,
    pub noise_sigma: f64,
    pub regime: Regime,
    pub max_poles: usize,
    pub max_delay: usize,
    /// Upper bound on the view-2 length; the lower bound is `2·order + 1`.
    pub max_frames: usize,
    pub dims: usize,
    pub rotation_range: f64,
    pub scale_range: f64,
    pub translation_range: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            trials: 1000,
            seed: 0,
            noise_sigma: 0.0,
            regime: Regime::Affine,
            max_poles: 4,
            max_delay: 5,
            max_frames: 64,
            dims: 3,
            rotation_range: std::f64::consts::PI,
            scale_range: 0.3,
            translation_range: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub delay: usize,
    pub transform_kind: Option<TransformKind>,
    pub frames_view1: usize,
    pub frames_view2: usize,
    /// Dictionary pole indices used to synthesize the trajectory.
    pub true_support: Vec<usize>,
    pub support_view1: Vec<usize>,
    pub support_view2: Vec<usize>,
    pub jaccard: f64,
    pub exact_match: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub trials: usize,
    pub mean_jaccard: f64,
    pub exact_match_rate: f64,
    pub records: Vec<TrialRecord>,
}

impl InvarianceReport {
    fn from_records(records: Vec<TrialRecord>) -> Self {
        let n = records.len().max(1) as f64;
        InvarianceReport {
            trials: records.len(),
            mean_jaccard: records.iter().map(|r| r.jaccard).sum::<f64>() / n,
            exact_match_rate: records.iter().filter(|r| r.exact_match).count() as f64 / n,
            records,
        }
    }
}

/// A random on-grid trajectory: poles, per-coordinate modes, order.
struct Draw {
    poles: Vec<usize>,
    modes: Vec<Vec<Mode>>,
    order: usize,
}

fn random_amplitude(rng: &mut ChaCha8Rng) -> f64 {
    let a = rng.random_range(0.5..=1.5);
    if rng.random::<bool>() { a } else { -a }
}

/// Draws `1..=max_poles` distinct non-unit dictionary poles and nonzero
/// per-coordinate amplitudes and phases.
fn draw_trajectory(dict: &PoleDictionary, rng: &mut ChaCha8Rng, max_poles: usize, dims: usize) -> Result<Draw> {
    let candidates: Vec<usize> = (0..dict.pole_count()).filter(|&i| i != dict.unit_index()).collect();
    if candidates.is_empty() {
        return Err(invalid("dictionary has no poles besides the unit pole"));
    }
    let n = rng.random_range(1..=max_poles.min(candidates.len()));
    let mut poles: Vec<usize> = sample(rng, candidates.len(), n).into_iter().map(|i| candidates[i]).collect();
    poles.sort_unstable();
    let modes = (0..dims)
        .map(|_| {
            poles
                .iter()
                .map(|&i| {
                    let pole = dict.poles()[i];
                    let phase = rng.random_range(0.0..std::f64::consts::TAU);
                    Mode::new(pole, random_amplitude(rng), phase)
                })
                .collect()
        })
        .collect();
    let order = poles.iter().map(|&i| dict.poles()[i].atom_count()).sum();
    Ok(Draw { poles, modes, order })
}

fn render_track(modes: &[Vec<Mode>], frames: usize, delay: usize) -> Result<Array2<f64>> {
    let mut y = Array2::zeros((frames, modes.len()));
    for (d, m) in modes.iter().enumerate() {
        let col = simulate_lti(m, frames, delay)?;
        y.column_mut(d).assign(&ndarray::Array1::from(col));
    }
    Ok(y)
}

fn add_noise(y: &mut Array2<f64>, sigma: f64, rng: &mut ChaCha8Rng) -> Result<()> {
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
        y.mapv_inplace(|v| v + normal.sample(rng));
    }
    Ok(())
}

fn view_transform(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<(AffineTransform, Option<TransformKind>)> {
    let identity = AffineTransform::identity(cfg.dims)?;
    match cfg.regime {
        Regime::Identity => Ok((identity, None)),
        Regime::Delay => {
            let delay = rng.random_range(1..=cfg.max_delay.max(1));
            Ok((identity.with_delay(delay), None))
        }
        Regime::Affine => {
            let kind = match (cfg.dims, rng.random::<bool>()) {
                (2, _) => TransformKind::Affine2d,
                (_, true) => TransformKind::Rigid3d,
                (_, false) => TransformKind::Affine3d,
            };
            let params = AffineParams {
                rotation_range: cfg.rotation_range,
                scale_range: cfg.scale_range,
                translation_range: cfg.translation_range,
                max_delay: cfg.max_delay,
                kind,
            };
            Ok((random_affine(rng.random(), &params)?, Some(kind)))
        }
    }
}

fn run_trial(dict: &PoleDictionary, encoder: &Encoder, cfg: &VerifyConfig, seed: u64) -> Result<TrialRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = draw_trajectory(dict, &mut rng, cfg.max_poles, cfg.dims)?;
    let (transform, kind) = view_transform(cfg, &mut rng)?;
    let min_frames = 2 * draw.order + 1;
    let frames_view2 = rng.random_range(min_frames..=cfg.max_frames.max(min_frames));
    let frames_view1 = frames_view2 + transform.delay();
    if frames_view2 < min_frames {
        return Err(Error::InvalidArgument(format!(
            "view 2 has {frames_view2} frames, order {} needs {min_frames}",
            draw.order
        )));
    }
    let mut y1 = render_track(&draw.modes, frames_view1, 0)?;
    let mut y2 = transform.apply_to_track(y1.view())?;
    add_noise(&mut y1, cfg.noise_sigma, &mut rng)?;
    add_noise(&mut y2, cfg.noise_sigma, &mut rng)?;
    let (_, b1) = encoder.binary_union(y1.view(), 1)?;
    let (_, b2) = encoder.binary_union(y2.view(), 2)?;
    Ok(TrialRecord {
        seed,
        delay: transform.delay(),
        transform_kind: kind,
        frames_view1,
        frames_view2,
        true_support: draw.poles,
        support_view1: b1.ones(),
        support_view2: b2.ones(),
        jaccard: jaccard(&b1, &b2, true)?,
        exact_match: same_support(&b1, &b2, true)?,
    })
}

/// Encodes two views of random on-grid trajectories and compares their
/// binary pole supports, ignoring the unit pole.
pub fn verify_invariance(
    dict: &PoleDictionary,
    solver: &SolverConfig,
    gate: GateConfig,
    cfg: &VerifyConfig,
) -> Result<InvarianceReport> {
    if cfg.trials < 1 {
        return Err(invalid("trial_count must be at least 1"));
    }
    if cfg.max_poles < 1 {
        return Err(invalid("max_poles must be at least 1"));
    }
    if cfg.dims != 2 && cfg.dims != 3 {
        return Err(invalid("dims must be 2 or 3"));
    }
    if !(cfg.noise_sigma >= 0.0 && cfg.noise_sigma.is_finite()) {
        return Err(invalid("noise_sigma must be nonnegative"));
    }
    let encoder = Encoder::new(dict.clone(), solver.clone(), gate)?;
    let records = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| run_trial(dict, &encoder, cfg, mix_seed(cfg.seed, &[i])))
        .collect::<Result<Vec<_>>>()?;
    Ok(InvarianceReport::from_records(records))
}

/// Affine regime with default threshold gate.
pub fn verify_corollary1(
    dict: &PoleDictionary,
    solver: &SolverConfig,
    trial_count: usize,
    seed: u64,
    noise_sigma: f64,
) -> Result<InvarianceReport> {
    let cfg = VerifyConfig { trials: trial_count, seed, noise_sigma, ..Default::default() };
    verify_invariance(dict, solver, GateConfig::default(), &cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthRecord {
    pub seed: u64,
    pub delay: usize,
    pub frames_view1: usize,
    pub truncations: Vec<usize>,
    /// Truncation lengths whose code differs from view 1.
    pub mismatches: Vec<usize>,
}

/// Delay plus truncation: view 1 of length `T₁`, view 2 is frames `δ..`
/// truncated to every length in `[2·order + 1, T₁ − δ]` (stepping by
/// `stride`). A trial matches when every truncation reproduces view 1's code.
pub fn verify_delay_length(
    dict: &PoleDictionary,
    solver: &SolverConfig,
    gate: GateConfig,
    cfg: &VerifyConfig,
    stride: usize,
) -> Result<(f64, Vec<LengthRecord>)> {
    if cfg.trials < 1 || stride < 1 {
        return Err(invalid("need at least one trial and a positive stride"));
    }
    let encoder = Encoder::new(dict.clone(), solver.clone(), gate)?;
    let records = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| -> Result<LengthRecord> {
            let seed = mix_seed(cfg.seed, &[i]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let draw = draw_trajectory(dict, &mut rng, cfg.max_poles, cfg.dims)?;
            let delay = rng.random_range(1..=cfg.max_delay.max(1));
            let min_frames = 2 * draw.order + 1;
            let frames_view1 = min_frames.max(cfg.max_frames) + delay;
            let y1 = render_track(&draw.modes, frames_view1, 0)?;
            let (_, b1) = encoder.binary_union(y1.view(), 0)?;
            let truncations: Vec<usize> = (min_frames..=frames_view1 - delay).step_by(stride).collect();
            let mut mismatches = Vec::new();
            for &t2 in &truncations {
                let y2 = y1.slice(ndarray::s![delay..delay + t2, ..]);
                let (_, b2) = encoder.binary_union(y2, 0)?;
                if !same_support(&b1, &b2, true)? {
                    mismatches.push(t2);
                }
            }
            Ok(LengthRecord { seed, delay, frames_view1, truncations, mismatches })
        })
        .collect::<Result<Vec<_>>>()?;
    let rate = records.iter().filter(|r| r.mismatches.is_empty()).count() as f64 / records.len() as f64;
    Ok((rate, records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkParams {
    pub class_count: usize,
    pub train_views: usize,
    pub test_views: usize,
    pub samples_per_class_view: usize,
    pub joints: usize,
    pub frames: usize,
    pub poles_per_class: usize,
    /// Class poles are drawn from dictionary pairs with `|ρ − 1| ≤ band`.
    pub magnitude_band: f64,
    pub max_delay: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        BenchmarkParams {
            class_count: 10,
            train_views: 2,
            test_views: 1,
            samples_per_class_view: 50,
            joints: 3,
            frames: 72,
            poles_per_class: 3,
            magnitude_band: 0.05,
            max_delay: 5,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticBenchmark {
    pub params: BenchmarkParams,
    /// Per-class dictionary pole indices.
    pub pole_sets: Vec<Vec<usize>>,
    pub poles: Vec<Vec<Pole>>,
    pub train_views: Vec<AffineTransform>,
    pub test_views: Vec<AffineTransform>,
}

const MAX_SEPARATION_ATTEMPTS: usize = 10_000;
const SEPARATION_LIMIT: f64 = 0.5;

fn set_jaccard(a: &[usize], b: &[usize]) -> f64 {
    let inter = a.iter().filter(|x| b.contains(x)).count();
    let union = a.len() + b.len() - inter;
    if union == 0 { 1.0 } else { inter as f64 / union as f64 }
}

fn check_separation(sets: &[Vec<usize>]) -> Result<()> {
    for i in 0..sets.len() {
        for j in 0..i {
            let s = set_jaccard(&sets[i], &sets[j]);
            if s > SEPARATION_LIMIT {
                return Err(Error::Separation(format!(
                    "classes {j} and {i} share too many poles (jaccard {s:.3})"
                )));
            }
        }
    }
    Ok(())
}

fn random_views(rng: &mut ChaCha8Rng, count: usize) -> Result<Vec<AffineTransform>> {
    let params = AffineParams {
        rotation_range: std::f64::consts::PI,
        scale_range: 0.0,
        translation_range: 1.0,
        max_delay: 0,
        kind: TransformKind::Rigid3d,
    };
    (0..count).map(|_| random_affine(rng.random(), &params)).collect()
}

impl SyntheticBenchmark {
    /// Benchmark with caller-chosen class pole sets (dictionary indices).
    pub fn from_pole_sets(dict: &PoleDictionary, params: BenchmarkParams, pole_sets: Vec<Vec<usize>>) -> Result<Self> {
        if params.class_count < 2 || pole_sets.len() != params.class_count {
            return Err(invalid("need at least two classes, one pole set each"));
        }
        if params.test_views < 1 || params.train_views < 1 {
            return Err(invalid("need at least one train and one test view"));
        }
        if params.joints < 1 || params.frames < 1 || params.samples_per_class_view < 1 {
            return Err(invalid("joints, frames and samples must be positive"));
        }
        for set in &pole_sets {
            if set.is_empty() || set.iter().any(|&i| i >= dict.pole_count() || i == dict.unit_index()) {
                return Err(invalid("pole sets must be nonempty non-unit dictionary indices"));
            }
        }
        check_separation(&pole_sets)?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(params.seed, &[u64::MAX]));
        let views = random_views(&mut rng, params.train_views + params.test_views)?;
        let (train, test) = views.split_at(params.train_views);
        Ok(SyntheticBenchmark {
            poles: pole_sets.iter().map(|s| s.iter().map(|&i| dict.poles()[i]).collect()).collect(),
            pole_sets,
            train_views: train.to_vec(),
            test_views: test.to_vec(),
            params,
        })
    }

    pub fn views(&self, split: Split) -> &[AffineTransform] {
        match split {
            Split::Train => &self.train_views,
            Split::Test => &self.test_views,
        }
    }
}

pub fn generate_benchmark(dict: &PoleDictionary, params: &BenchmarkParams) -> Result<SyntheticBenchmark> {
    let candidates: Vec<usize> = dict
        .poles()
        .iter()
        .enumerate()
        .filter(|(_, p)| p.kind() == PoleKind::ConjugatePair && (p.magnitude() - 1.0).abs() <= params.magnitude_band)
        .map(|(i, _)| i)
        .collect();
    let k = params.poles_per_class;
    if k < 1 || k > candidates.len() {
        return Err(Error::Separation(format!(
            "{k} poles per class from {} candidate poles",
            candidates.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(params.class_count);
    let mut attempts = 0;
    while sets.len() < params.class_count {
        attempts += 1;
        if attempts > MAX_SEPARATION_ATTEMPTS {
            return Err(Error::Separation(format!(
                "could not find {} separated classes after {MAX_SEPARATION_ATTEMPTS} draws",
                params.class_count
            )));
        }
        let mut set: Vec<usize> = sample(&mut rng, candidates.len(), k).into_iter().map(|i| candidates[i]).collect();
        set.sort_unstable();
        if sets.iter().all(|s| set_jaccard(s, &set) <= SEPARATION_LIMIT) {
            sets.push(set);
        }
    }
    SyntheticBenchmark::from_pole_sets(dict, params.clone(), sets)
}

/// Labeled sequences of one split, ordered by (view, class, sample).
pub fn render(bench: &SyntheticBenchmark, split: Split) -> Result<Vec<SkeletonSequence>> {
    let p = &bench.params;
    let split_tag = match split {
        Split::Train => 0,
        Split::Test => 1,
    };
    let mut out = Vec::new();
    for (v, view) in bench.views(split).iter().enumerate() {
        for (class, poles) in bench.poles.iter().enumerate() {
            for sample in 0..p.samples_per_class_view {
                let seed = mix_seed(p.seed, &[split_tag, v as u64, class as u64, sample as u64]);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let delay = rng.random_range(0..=p.max_delay);
                let mut data = Array3::zeros((p.frames, p.joints, 3));
                for j in 0..p.joints {
                    let modes: Vec<Vec<Mode>> = (0..3)
                        .map(|_| {
                            let mut m: Vec<Mode> = poles
                                .iter()
                                .map(|&pole| {
                                    let phase = rng.random_range(0.0..std::f64::consts::TAU);
                                    Mode::new(pole, random_amplitude(&mut rng), phase)
                                })
                                .collect();
                            m.push(Mode::new(Pole::unit(), rng.random_range(-1.0..=1.0), 0.0));
                            m
                        })
                        .collect();
                    let mut track = render_track(&modes, p.frames, delay)?;
                    add_noise(&mut track, p.noise_sigma, &mut rng)?;
                    data.slice_mut(ndarray::s![.., j, ..]).assign(&track);
                }
                let seq = SkeletonSequence::new(data)?.with_label(class as u32);
                out.push(crate::trajectory::apply_affine(&seq, view)?);
            }
        }
    }
    Ok(out)
}
