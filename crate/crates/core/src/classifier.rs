//! Desk-scale classifiers over concatenated pole-support codes: Hamming
//! k-NN and a linear softmax trained by full-batch gradient descent.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::binarize::BinaryCode;
use crate::clips::{aggregate_predictions, argmax};
use crate::error::{invalid, mismatch, Error, Result};

pub const DEFAULT_K: usize = 5;

/// Block layout of a feature: `joints × dims` codes of `code_len` bits each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub joints: usize,
    pub dims: usize,
    pub code_len: usize,
}

impl FeatureLayout {
    pub fn len(&self) -> usize {
        self.joints * self.dims * self.code_len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A code tagged with the (joint, dim) coordinate it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateCode {
    pub joint: usize,
    pub dim: usize,
    pub code: BinaryCode,
}

/// Packed concatenation of per-coordinate codes, joint-major then dim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirFeature {
    words: Vec<u64>,
    len: usize,
    pub dictionary_hash: String,
    pub clip_id: String,
}

impl DirFeature {
    pub fn from_bits(bits: &[bool], dictionary_hash: &str, clip_id: &str) -> Self {
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        DirFeature { words, len: bits.len(), dictionary_hash: dictionary_hash.to_owned(), clip_id: clip_id.to_owned() }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// Bits as `0.0 / 1.0`.
    pub fn to_dense(&self) -> Array1<f64> {
        Array1::from_iter((0..self.len).map(|i| self.get(i) as u8 as f64))
    }

    pub fn hamming(&self, other: &DirFeature) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a ^ b).count_ones() as usize).sum()
    }
}

pub fn assemble_feature(codes: &[CoordinateCode], layout: &FeatureLayout, clip_id: &str) -> Result<DirFeature> {
    if codes.len() != layout.joints * layout.dims {
        return Err(mismatch(format!(
            "{} codes for a {}×{} layout",
            codes.len(),
            layout.joints,
            layout.dims
        )));
    }
    let hash = codes.first().map_or("", |c| c.code.dictionary_hash.as_str());
    let mut bits = Vec::with_capacity(layout.len());
    for (i, c) in codes.iter().enumerate() {
        let want = (i / layout.dims, i % layout.dims);
        if (c.joint, c.dim) != want {
            return Err(invalid(format!(
                "code {i} is for (joint {}, dim {}), layout expects {want:?}",
                c.joint, c.dim
            )));
        }
        if c.code.len() != layout.code_len {
            return Err(mismatch(format!("code {i} has {} bits, expected {}", c.code.len(), layout.code_len)));
        }
        if c.code.dictionary_hash != hash {
            return Err(Error::HashMismatch { expected: hash.to_owned(), found: c.code.dictionary_hash.clone() });
        }
        bits.extend(c.code.to_bools());
    }
    Ok(DirFeature::from_bits(&bits, hash, clip_id))
}

/// Tags joint-major codes with their coordinates and assembles them.
pub fn assemble_ordered(codes: Vec<BinaryCode>, joints: usize, dims: usize, clip_id: &str) -> Result<DirFeature> {
    let code_len = codes.first().map_or(0, BinaryCode::len);
    let tagged: Vec<CoordinateCode> = codes
        .into_iter()
        .enumerate()
        .map(|(i, code)| CoordinateCode { joint: i / dims.max(1), dim: i % dims.max(1), code })
        .collect();
    assemble_feature(&tagged, &FeatureLayout { joints, dims, code_len }, clip_id)
}

fn check_features<'a>(features: impl IntoIterator<Item = &'a DirFeature>) -> Result<(usize, String)> {
    let mut it = features.into_iter();
    let first = it.next().ok_or_else(|| invalid("empty feature set"))?;
    for f in it {
        if f.len != first.len {
            return Err(mismatch(format!("feature of {} bits among {}-bit features", f.len, first.len)));
        }
        if f.dictionary_hash != first.dictionary_hash {
            return Err(Error::HashMismatch { expected: first.dictionary_hash.clone(), found: f.dictionary_hash.clone() });
        }
    }
    Ok((first.len, first.dictionary_hash.clone()))
}

/// Anything producing class probabilities for a feature.
pub trait Predictor {
    fn class_count(&self) -> usize;
    fn predict_probs(&self, feature: &DirFeature) -> Result<Vec<f64>>;
}

/// Exhaustive Hamming nearest-neighbour index.
#[derive(Debug, Clone)]
pub struct KnnIndex {
    items: Vec<DirFeature>,
    labels: Vec<usize>,
    class_count: usize,
    feature_len: usize,
    dictionary_hash: String,
    pub k: usize,
}

impl KnnIndex {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn check_query(&self, q: &DirFeature) -> Result<()> {
        if q.len != self.feature_len {
            return Err(mismatch(format!("query has {} bits, index {}", q.len, self.feature_len)));
        }
        if q.dictionary_hash != self.dictionary_hash {
            return Err(Error::HashMismatch { expected: self.dictionary_hash.clone(), found: q.dictionary_hash.clone() });
        }
        Ok(())
    }

    /// Indices of the `k` nearest items; equal distances keep insertion order.
    pub fn neighbours(&self, query: &DirFeature, k: usize) -> Result<Vec<usize>> {
        self.check_query(query)?;
        if k < 1 || k > self.items.len() {
            return Err(invalid(format!("k = {k} outside 1..={}", self.items.len())));
        }
        let mut order: Vec<(usize, usize)> =
            self.items.iter().enumerate().map(|(i, f)| (f.hamming(query), i)).collect();
        order.select_nth_unstable(k - 1);
        order.truncate(k);
        order.sort_unstable();
        Ok(order.into_iter().map(|(_, i)| i).collect())
    }
}

/// `class_count` defaults to one more than the largest label.
pub fn knn_fit(train: Vec<DirFeature>, labels: Vec<usize>, class_count: Option<usize>, k: usize) -> Result<KnnIndex> {
    if train.len() != labels.len() {
        return Err(mismatch(format!("{} features, {} labels", train.len(), labels.len())));
    }
    let (feature_len, dictionary_hash) = check_features(&train)?;
    let needed = labels.iter().max().map_or(0, |m| m + 1);
    let class_count = class_count.unwrap_or(needed);
    if needed > class_count {
        return Err(invalid(format!("label {} outside {class_count} classes", needed - 1)));
    }
    if k < 1 || k > train.len() {
        return Err(invalid(format!("k = {k} outside 1..={}", train.len())));
    }
    Ok(KnnIndex { items: train, labels, class_count, feature_len, dictionary_hash, k })
}

/// Vote fractions among the `k` Hamming-nearest training items.
pub fn knn_predict(index: &KnnIndex, query: &DirFeature, k: usize) -> Result<Vec<f64>> {
    let mut votes = vec![0.0; index.class_count];
    for i in index.neighbours(query, k)? {
        votes[index.labels[i]] += 1.0;
    }
    Ok(votes.into_iter().map(|v| v / k as f64).collect())
}

impl Predictor for KnnIndex {
    fn class_count(&self) -> usize {
        self.class_count
    }

    fn predict_probs(&self, feature: &DirFeature) -> Result<Vec<f64>> {
        knn_predict(self, feature, self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SoftmaxConfig {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for SoftmaxConfig {
    fn default() -> Self {
        SoftmaxConfig { lr: 0.1, epochs: 500, l2: 1e-4 }
    }
}

/// `probs = softmax(W x + b)` over `class_count` classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub class_labels: Vec<usize>,
}

impl LinearModel {
    pub fn zeros(class_count: usize, features: usize) -> Self {
        LinearModel {
            weights: Array2::zeros((class_count, features)),
            bias: Array1::zeros(class_count),
            class_labels: (0..class_count).collect(),
        }
    }

    pub fn logits(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        self.weights.dot(&x) + &self.bias
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: ArrayView1<'_, f64>) -> Array1<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e = logits.mapv(|v| (v - m).exp());
    let s = e.sum();
    e / s
}

/// Mean cross-entropy plus `(l2/2)‖W‖²` and its gradient `(∂W, ∂b)`.
pub fn softmax_loss_grad(
    model: &LinearModel,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    l2: f64,
) -> Result<(f64, Array2<f64>, Array1<f64>)> {
    let (n, f) = x.dim();
    let c = model.bias.len();
    if n == 0 || labels.len() != n || model.weights.dim() != (c, f) {
        return Err(mismatch("inconsistent training dimensions"));
    }
    if labels.iter().any(|&l| l >= c) {
        return Err(invalid("label outside model classes"));
    }
    let logits = x.dot(&model.weights.t()) + &model.bias;
    let mut delta = Array2::zeros((n, c));
    let mut loss = 0.0;
    for (i, row) in logits.outer_iter().enumerate() {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        loss += lse - row[labels[i]];
        for k in 0..c {
            delta[[i, k]] = (row[k] - lse).exp();
        }
        delta[[i, labels[i]]] -= 1.0;
    }
    let inv = 1.0 / n as f64;
    loss = loss * inv + 0.5 * l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
    let gw = delta.t().dot(&x) * inv + &model.weights * l2;
    let gb = delta.sum_axis(Axis(0)) * inv;
    Ok((loss, gw, gb))
}

/// Full-batch gradient descent. A step that raises the loss is undone and
/// retried with half the learning rate. Returns the model and the loss
/// after each epoch.
pub fn softmax_train(x: ArrayView2<'_, f64>, labels: &[usize], config: &SoftmaxConfig) -> Result<(LinearModel, Vec<f64>)> {
    if !(config.lr > 0.0 && config.l2 >= 0.0) {
        return Err(invalid("lr must be positive and l2 nonnegative"));
    }
    let class_count = labels.iter().max().map_or(0, |m| m + 1);
    let distinct = (0..class_count).filter(|c| labels.contains(c)).count();
    if distinct < 2 {
        return Err(invalid("softmax training needs at least two classes"));
    }
    let mut model = LinearModel::zeros(class_count, x.ncols());
    let (mut loss, mut gw, mut gb) = softmax_loss_grad(&model, x, labels, config.l2)?;
    let mut lr = config.lr;
    let mut history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        loop {
            let trial = LinearModel {
                weights: &model.weights - &(&gw * lr),
                bias: &model.bias - &(&gb * lr),
                class_labels: model.class_labels.clone(),
            };
            let (l, g1, g2) = softmax_loss_grad(&trial, x, labels, config.l2)?;
            if l <= loss {
                (model, loss, gw, gb) = (trial, l, g1, g2);
                break;
            }
            lr *= 0.5;
            if lr < f64::MIN_POSITIVE {
                break;
            }
        }
        history.push(loss);
    }
    Ok((model, history))
}

pub fn softmax_predict(model: &LinearModel, feature: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    if feature.len() != model.weights.ncols() {
        return Err(mismatch(format!("{} features for a {}-input model", feature.len(), model.weights.ncols())));
    }
    Ok(softmax(model.logits(feature).view()))
}

impl Predictor for LinearModel {
    fn class_count(&self) -> usize {
        self.bias.len()
    }

    fn predict_probs(&self, feature: &DirFeature) -> Result<Vec<f64>> {
        Ok(softmax_predict(self, feature.to_dense().view())?.to_vec())
    }
}

/// A test item: one feature per clip and the true class.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSample {
    pub clips: Vec<DirFeature>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// `None` for classes absent from the test set.
    pub per_class_accuracy: Vec<Option<f64>>,
    pub total: usize,
}

/// Clip probabilities are averaged per sample before the argmax.
pub fn evaluate(model: &dyn Predictor, test: &[TestSample]) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(invalid("empty test set"));
    }
    let c = model.class_count();
    let mut confusion = vec![vec![0usize; c]; c];
    for (i, s) in test.iter().enumerate() {
        if s.label >= c {
            return Err(mismatch(format!("test label {} outside {c} model classes", s.label)));
        }
        if s.clips.is_empty() {
            return Err(invalid(format!("test sample {i} has no clips")));
        }
        let mut probs = Array2::zeros((s.clips.len(), c));
        for (row, clip) in s.clips.iter().enumerate() {
            let p = model.predict_probs(clip)?;
            probs.row_mut(row).assign(&ArrayView1::from(&p));
        }
        let predicted = if s.clips.len() == 1 {
            argmax(probs.row(0).as_slice().expect("contiguous"))
        } else {
            aggregate_predictions(probs.view())?.label
        };
        confusion[s.label][predicted] += 1;
    }
    let correct: usize = (0..c).map(|k| confusion[k][k]).sum();
    let per_class_accuracy = confusion
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let n: usize = row.iter().sum();
            (n > 0).then(|| row[k] as f64 / n as f64)
        })
        .collect();
    Ok(Evaluation { accuracy: correct as f64 / test.len() as f64, confusion, per_class_accuracy, total: test.len() })
}
