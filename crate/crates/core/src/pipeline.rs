//! Trajectory → sparse code → binary code plumbing shared by the
//! verification harness, the benchmark and the CLI.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::binarize::{self, BinaryCode, PoleEnergy};
use crate::dictionary::{
    build_vandermonde, dictionary_loss, gradient_step_with_permutation, permute_code_rows, PoleDictionary,
    VandermondeMatrix,
};
use crate::error::{invalid, Error, Result};
use crate::solver::{reweighted_fista, SolverConfig, SparseCode};
use crate::trajectory::SkeletonSequence;

/// Gate turning pole energies into bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum GateConfig {
    Threshold { tau_rel: f64, floor: f64 },
    Gumbel { temperature: f64, alpha: f64, seed: u64 },
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig::Threshold { tau_rel: binarize::DEFAULT_TAU_REL, floor: binarize::DEFAULT_FLOOR }
    }
}

impl GateConfig {
    /// `stream` decorrelates Gumbel noise between coordinate sequences.
    pub fn apply(&self, energy: &PoleEnergy, stream: u64) -> Result<BinaryCode> {
        match *self {
            GateConfig::Threshold { tau_rel, floor } => binarize::binarize_threshold(energy, tau_rel, floor),
            GateConfig::Gumbel { temperature, alpha, seed } => {
                binarize::binarize_gumbel(energy, temperature, alpha, mix_seed(seed, &[stream]))
            }
        }
    }
}

/// SplitMix64 fold of `parts` into `seed`.
pub fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    parts.iter().fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p)))
}

/// Encodes trajectories against one dictionary, caching `P` per length.
pub struct Encoder {
    dict: PoleDictionary,
    pub solver: SolverConfig,
    pub gate: GateConfig,
    cache: Mutex<HashMap<usize, Arc<VandermondeMatrix>>>,
}

impl Encoder {
    pub fn new(dict: PoleDictionary, solver: SolverConfig, gate: GateConfig) -> Result<Self> {
        solver.validate()?;
        Ok(Encoder { dict, solver, gate, cache: Mutex::new(HashMap::new()) })
    }

    pub fn dictionary(&self) -> &PoleDictionary {
        &self.dict
    }

    pub fn matrix(&self, frames: usize) -> Result<Arc<VandermondeMatrix>> {
        if let Some(p) = self.cache.lock().expect("cache poisoned").get(&frames) {
            return Ok(Arc::clone(p));
        }
        let p = build_vandermonde(&self.dict, frames)?;
        p.lipschitz()?;
        let p = Arc::new(p);
        let mut cache = self.cache.lock().expect("cache poisoned");
        Ok(Arc::clone(cache.entry(frames).or_insert(p)))
    }

    /// Jointly codes the columns of a `T × d` block.
    pub fn code(&self, y: ArrayView2<'_, f64>) -> Result<SparseCode> {
        let p = self.matrix(y.nrows())?;
        reweighted_fista(&p, y, &self.solver)
    }

    /// One code for the whole block, pooling energy over its columns.
    pub fn binary_union(&self, y: ArrayView2<'_, f64>, stream: u64) -> Result<(SparseCode, BinaryCode)> {
        let code = self.code(y)?;
        let bits = self.gate.apply(&binarize::pair_energy(&code, &self.dict)?, stream)?;
        Ok((code, bits))
    }

    /// One binary code per column of `code`.
    pub fn binary_columns(&self, code: &SparseCode, stream: u64) -> Result<Vec<BinaryCode>> {
        (0..code.columns())
            .map(|c| {
                let e = binarize::column_pair_energy(code, &self.dict, c)?;
                self.gate.apply(&e, mix_seed(stream, &[c as u64]))
            })
            .collect()
    }

    /// Codes each joint's `T × D` track jointly; returns per-joint sparse codes.
    pub fn code_sequence(&self, seq: &SkeletonSequence) -> Result<Vec<SparseCode>> {
        (0..seq.joints()).map(|j| self.code(seq.joint_trajectory(j))).collect()
    }

    /// Binary codes for every (joint, dim) of a sequence, joint-major.
    pub fn encode_sequence(&self, seq: &SkeletonSequence, stream: u64) -> Result<Vec<BinaryCode>> {
        let mut out = Vec::with_capacity(seq.joints() * seq.dims());
        for (j, code) in self.code_sequence(seq)?.iter().enumerate() {
            out.extend(self.binary_columns(code, mix_seed(stream, &[j as u64]))?);
        }
        Ok(out)
    }
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn check_threads(requested: Option<usize>) -> Result<usize> {
    match requested {
        Some(0) => Err(invalid("thread count must be at least 1")),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnConfig {
    pub rounds: usize,
    pub learning_rate: f64,
    /// Halvings of the learning rate tried before a pole step is skipped.
    pub max_backtracks: usize,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig { rounds: 5, learning_rate: 1e-3, max_backtracks: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnOutcome {
    pub dictionary: PoleDictionary,
    /// Dictionary loss before the first round, then after each round.
    pub losses: Vec<f64>,
    /// Final learning rate after backtracking.
    pub learning_rate: f64,
}

/// Alternating minimization of the dictionary loss over a fixed batch.
///
/// Each round takes one pole step (halving the learning rate until the loss
/// does not increase) and then recodes the batch, keeping the new codes only
/// if they do not increase the loss either. The recorded losses are
/// therefore non-increasing.
pub fn learn_dictionary(
    dict: &PoleDictionary,
    trajectories: &[Array2<f64>],
    solver: &SolverConfig,
    config: &LearnConfig,
) -> Result<LearnOutcome> {
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(invalid("learning rate must be positive"));
    }
    if trajectories.is_empty() {
        return Err(invalid("no trajectories to learn from"));
    }
    let lambda = solver.lambda;
    let code_all = |d: &PoleDictionary| -> Result<Vec<Array2<f64>>> {
        let enc = Encoder::new(d.clone(), solver.clone(), GateConfig::default())?;
        trajectories.par_iter().map(|y| Ok(enc.code(y.view())?.coefficients)).collect()
    };
    let mut current = dict.clone();
    let mut codes = code_all(&current)?;
    let mut loss = dictionary_loss(&current, trajectories, &codes, lambda)?;
    let mut losses = vec![loss];
    let mut lr = config.learning_rate;
    for _ in 0..config.rounds {
        for _ in 0..=config.max_backtracks {
            let (next, perm) = gradient_step_with_permutation(&current, trajectories, &codes, lr)?;
            let moved: Vec<Array2<f64>> =
                codes.iter().map(|c| permute_code_rows(&current, &next, &perm, c)).collect();
            let l = dictionary_loss(&next, trajectories, &moved, lambda)?;
            if l <= loss {
                current = next;
                codes = moved;
                loss = l;
                break;
            }
            lr *= 0.5;
        }
        let fresh = code_all(&current)?;
        let l = dictionary_loss(&current, trajectories, &fresh, lambda)?;
        if l <= loss {
            codes = fresh;
            loss = l;
        }
        losses.push(loss);
    }
    Ok(LearnOutcome { dictionary: current, losses, learning_rate: lr })
}
