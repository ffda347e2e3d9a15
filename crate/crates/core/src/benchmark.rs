//! End-to-end synthetic cross-view run: render, normalize, clip, encode,
//! classify, evaluate.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{
    assemble_ordered, evaluate, knn_fit, softmax_train, DirFeature, Evaluation, Predictor, SoftmaxConfig,
    TestSample, DEFAULT_K,
};
use crate::clips::{sample_multi_clips, sample_single_clip, ClipMode, ClipSet, DEFAULT_CLIPS, DEFAULT_CLIP_FRAMES};
use crate::dictionary::PoleDictionary;
use crate::error::{invalid, Result};
use crate::invariance::{generate_benchmark, render, BenchmarkParams, Split};
use crate::pipeline::{mix_seed, Encoder, GateConfig};
use crate::solver::SolverConfig;
use crate::trajectory::{add_limb_midpoints, compute_stats, normalize, LimbSpec, SkeletonSequence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierChoice {
    Knn { k: usize },
    Softmax(SoftmaxConfig),
}

impl Default for ClassifierChoice {
    fn default() -> Self {
        ClassifierChoice::Knn { k: DEFAULT_K }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub mode: ClipMode,
    /// Anchor count; in single mode the anchors are the clip.
    pub clips_n: usize,
    /// Frames per multi clip.
    pub clip_t: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { mode: ClipMode::Multi, clips_n: DEFAULT_CLIPS, clip_t: DEFAULT_CLIP_FRAMES }
    }
}

impl SamplerConfig {
    pub fn clips(&self, length: usize) -> Result<ClipSet> {
        match self.mode {
            ClipMode::Multi => sample_multi_clips(length, self.clips_n, self.clip_t),
            ClipMode::Single => sample_single_clip(length, self.clips_n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub benchmark: BenchmarkParams,
    pub sampler: SamplerConfig,
    pub classifier: ClassifierChoice,
    pub limbs: LimbSpec,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            benchmark: BenchmarkParams::default(),
            sampler: SamplerConfig::default(),
            classifier: ClassifierChoice::default(),
            limbs: LimbSpec::empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub evaluation: Evaluation,
    pub train_sequences: usize,
    pub test_sequences: usize,
    pub train_clips: usize,
    pub pole_sets: Vec<Vec<usize>>,
}

/// One feature per clip of `seq`.
pub fn clip_features(
    encoder: &Encoder,
    seq: &SkeletonSequence,
    sampler: &SamplerConfig,
    stream: u64,
    id: &str,
) -> Result<Vec<DirFeature>> {
    let set = sampler.clips(seq.frames())?;
    set.clips
        .iter()
        .enumerate()
        .map(|(c, frames)| {
            let clip = seq.select_frames(frames)?;
            let codes = encoder.encode_sequence(&clip, mix_seed(stream, &[c as u64]))?;
            assemble_ordered(codes, clip.joints(), clip.dims(), &format!("{id}/{c}"))
        })
        .collect()
}

fn split_features(
    encoder: &Encoder,
    seqs: &[SkeletonSequence],
    sampler: &SamplerConfig,
    tag: &str,
) -> Result<Vec<Vec<DirFeature>>> {
    seqs.par_iter()
        .enumerate()
        .map(|(i, s)| clip_features(encoder, s, sampler, mix_seed(i as u64, &[tag.len() as u64]), &format!("{tag}/{i}")))
        .collect()
}

fn label_of(seq: &SkeletonSequence) -> Result<usize> {
    seq.label.map(|l| l as usize).ok_or_else(|| invalid("unlabeled sequence"))
}

pub fn run_benchmark(
    dict: &PoleDictionary,
    solver: &SolverConfig,
    gate: GateConfig,
    config: &BenchmarkConfig,
) -> Result<BenchmarkResult> {
    let bench = generate_benchmark(dict, &config.benchmark)?;
    let prepare = |split| -> Result<Vec<SkeletonSequence>> {
        render(&bench, split)?.iter().map(|s| add_limb_midpoints(s, &config.limbs)).collect()
    };
    let train = prepare(Split::Train)?;
    let test = prepare(Split::Test)?;
    let stats = compute_stats(&train)?;
    let train: Vec<SkeletonSequence> = train.iter().map(|s| normalize(s, &stats)).collect::<Result<_>>()?;
    let test: Vec<SkeletonSequence> = test.iter().map(|s| normalize(s, &stats)).collect::<Result<_>>()?;

    let encoder = Encoder::new(dict.clone(), solver.clone(), gate)?;
    let train_feats = split_features(&encoder, &train, &config.sampler, "train")?;
    let test_feats = split_features(&encoder, &test, &config.sampler, "test")?;

    let mut items = Vec::new();
    let mut labels = Vec::new();
    for (seq, feats) in train.iter().zip(train_feats) {
        let l = label_of(seq)?;
        for f in feats {
            items.push(f);
            labels.push(l);
        }
    }
    let train_clips = items.len();
    let samples: Vec<TestSample> = test
        .iter()
        .zip(test_feats)
        .map(|(s, clips)| Ok(TestSample { clips, label: label_of(s)? }))
        .collect::<Result<_>>()?;
    let class_count = config.benchmark.class_count;
    let model: Box<dyn Predictor> = match &config.classifier {
        ClassifierChoice::Knn { k } => Box::new(knn_fit(items, labels, Some(class_count), *k)?),
        ClassifierChoice::Softmax(cfg) => {
            let dim = items.first().map_or(0, DirFeature::len);
            let mut x = Array2::zeros((items.len(), dim));
            for (mut row, f) in x.outer_iter_mut().zip(&items) {
                row.assign(&f.to_dense());
            }
            Box::new(softmax_train(x.view(), &labels, cfg)?.0)
        }
    };
    let evaluation = evaluate(model.as_ref(), &samples)?;
    Ok(BenchmarkResult {
        evaluation,
        train_sequences: train.len(),
        test_sequences: samples.len(),
        train_clips,
        pole_sets: bench.pole_sets,
    })
}
