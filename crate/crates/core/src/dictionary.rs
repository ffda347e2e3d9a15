//! Pole dictionaries and the Vandermonde measurement matrices built from them.
//!
//! Every pole contributes one or two atoms: the unit pole and real poles give a
//! single column `ρ^k cos(kθ)` (θ ∈ {0, π}); a conjugate pair `ρe^{±iθ}` gives
//! the two real columns `ρ^k cos(kθ)` and `ρ^k sin(kθ)`, in that order.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::OnceLock;

use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, mismatch, Error, Result};
use crate::linalg;

/// Upper bound applied to pole magnitudes by gradient updates.
pub const MAGNITUDE_CAP: f64 = 1.2;

/// Phases per magnitude ring for grid dictionaries.
pub const PHASES_PER_RING: usize = 16;

/// Conjugate-pair phases are kept at least this far from 0 and π.
const PHASE_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleKind {
    Unit,
    Real,
    ConjugatePair,
}

impl PoleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PoleKind::Unit => "unit",
            PoleKind::Real => "real",
            PoleKind::ConjugatePair => "pair",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(PoleKind::Unit),
            "real" => Ok(PoleKind::Real),
            "pair" => Ok(PoleKind::ConjugatePair),
            other => Err(Error::Parse(format!("unknown pole kind '{other}'"))),
        }
    }
}

/// A discrete-time pole in polar form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    magnitude: f64,
    phase: f64,
    kind: PoleKind,
}

impl Pole {
    pub fn unit() -> Self {
        Pole { magnitude: 1.0, phase: 0.0, kind: PoleKind::Unit }
    }

    /// Positive real pole `ρ`.
    pub fn real(magnitude: f64) -> Result<Self> {
        Self::new(magnitude, 0.0, PoleKind::Real)
    }

    /// Negative real pole `-ρ`.
    pub fn negative_real(magnitude: f64) -> Result<Self> {
        Self::new(magnitude, PI, PoleKind::Real)
    }

    pub fn pair(magnitude: f64, phase: f64) -> Result<Self> {
        Self::new(magnitude, phase, PoleKind::ConjugatePair)
    }

    pub fn new(magnitude: f64, phase: f64, kind: PoleKind) -> Result<Self> {
        if !(magnitude.is_finite() && magnitude > 0.0) {
            return Err(invalid(format!("pole magnitude must be positive, got {magnitude}")));
        }
        if !phase.is_finite() {
            return Err(invalid("pole phase must be finite"));
        }
        match kind {
            PoleKind::Unit if magnitude != 1.0 || phase != 0.0 => {
                Err(invalid("unit pole must have magnitude 1 and phase 0"))
            }
            PoleKind::Real if phase != 0.0 && phase != PI => {
                Err(invalid(format!("real pole phase must be 0 or π, got {phase}")))
            }
            PoleKind::ConjugatePair if !(phase > 0.0 && phase < PI) => {
                Err(invalid(format!("conjugate pair phase must lie in (0, π), got {phase}")))
            }
            _ => Ok(Pole { magnitude, phase, kind }),
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn kind(&self) -> PoleKind {
        self.kind
    }

    pub fn atom_count(&self) -> usize {
        match self.kind {
            PoleKind::ConjugatePair => 2,
            _ => 1,
        }
    }

    fn order_key(&self, other: &Pole) -> Ordering {
        self.magnitude
            .total_cmp(&other.magnitude)
            .then(self.phase.total_cmp(&other.phase))
    }
}

/// Column(s) of a single pole for `frames` samples, before normalization.
///
/// Accepts any `(magnitude, phase)`; validation lives on [`Pole`].
pub fn pair_atoms(magnitude: f64, phase: f64, frames: usize) -> (Vec<f64>, Vec<f64>) {
    let mut cos_col = Vec::with_capacity(frames);
    let mut sin_col = Vec::with_capacity(frames);
    for k in 0..frames {
        let r = magnitude.powi(k as i32);
        let a = k as f64 * phase;
        cos_col.push(r * a.cos());
        sin_col.push(r * a.sin());
    }
    (cos_col, sin_col)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionaryScheme {
    Grid,
    SeededRandom,
}

/// Parameters for [`generate_dictionary`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DictionaryParams {
    pub pair_count: usize,
    pub magnitude_range: (f64, f64),
    pub real_pole_count: usize,
    pub scheme: DictionaryScheme,
    pub seed: u64,
    pub normalize_columns: bool,
}

impl Default for DictionaryParams {
    /// 80 pairs on 5 rings × 16 phases in [0.85, 1.15], 4 real poles and the
    /// unit pole: 165 atoms.
    fn default() -> Self {
        DictionaryParams {
            pair_count: 80,
            magnitude_range: (0.85, 1.15),
            real_pole_count: 4,
            scheme: DictionaryScheme::Grid,
            seed: 0,
            normalize_columns: true,
        }
    }
}

/// An ordered, immutable set of candidate poles.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleDictionary {
    poles: Vec<Pole>,
    /// First atom index of each pole.
    atom_offsets: Vec<usize>,
    atom_count: usize,
    unit_index: usize,
    normalize_columns: bool,
    content_hash: String,
}

impl PoleDictionary {
    /// Builds a dictionary from an arbitrary pole list. The list is sorted by
    /// `(magnitude, phase)`; duplicates and missing/extra unit poles are rejected.
    pub fn from_poles(mut poles: Vec<Pole>, normalize_columns: bool) -> Result<Self> {
        let units = poles.iter().filter(|p| p.kind == PoleKind::Unit).count();
        if units != 1 {
            return Err(invalid(format!("dictionary needs exactly one unit pole, found {units}")));
        }
        poles.sort_by(|a, b| a.order_key(b));
        for w in poles.windows(2) {
            if w[0].order_key(&w[1]) == Ordering::Equal {
                return Err(invalid(format!(
                    "duplicate pole (magnitude {}, phase {})",
                    w[0].magnitude, w[0].phase
                )));
            }
        }
        let mut atom_offsets = Vec::with_capacity(poles.len());
        let mut atom_count = 0;
        for p in &poles {
            atom_offsets.push(atom_count);
            atom_count += p.atom_count();
        }
        let unit_index = poles.iter().position(|p| p.kind == PoleKind::Unit).unwrap();
        let content_hash = content_hash(&poles, normalize_columns);
        Ok(PoleDictionary {
            poles,
            atom_offsets,
            atom_count,
            unit_index,
            normalize_columns,
            content_hash,
        })
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    pub fn pole_count(&self) -> usize {
        self.poles.len()
    }

    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn unit_index(&self) -> usize {
        self.unit_index
    }

    pub fn normalize_columns(&self) -> bool {
        self.normalize_columns
    }

    pub fn content_hash(&self) -> &str {
        &self.content_hash
    }

    /// Atom range `[start, start + count)` of pole `index`.
    pub fn atoms_of(&self, index: usize) -> std::ops::Range<usize> {
        let start = self.atom_offsets[index];
        start..start + self.poles[index].atom_count()
    }

    /// Pole owning atom `atom`.
    pub fn pole_of_atom(&self, atom: usize) -> usize {
        match self.atom_offsets.binary_search(&atom) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    /// Index of the pole equal to `pole`, if present.
    pub fn find(&self, pole: &Pole) -> Option<usize> {
        self.poles
            .binary_search_by(|p| p.order_key(pole))
            .ok()
    }
}

fn content_hash(poles: &[Pole], normalize: bool) -> String {
    let mut h = Sha256::new();
    h.update(b"dynpose-dictionary-v1\n");
    h.update(if normalize { b"normalize=1\n" } else { b"normalize=0\n" });
    for p in poles {
        h.update(format_pole_row(p).as_bytes());
        h.update(b"\n");
    }
    hex::encode(&h.finalize()[..16])
}

pub(crate) fn format_pole_row(p: &Pole) -> String {
    format!("{} {:.16e} {:.16e}", p.kind.as_str(), p.magnitude, p.phase)
}

/// Evenly spaced values over `[lo, hi]` (inclusive); a single point is the midpoint.
fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Generates a candidate pole dictionary.
///
/// Grid pairs are laid out ring-major: `ceil(pair_count / 16)` magnitude rings
/// spanning the range (one ring when `lo == hi`), each with phases
/// `(j + ½)π / m`. Seeded-random pairs draw magnitude and phase uniformly.
pub fn generate_dictionary(params: &DictionaryParams) -> Result<PoleDictionary> {
    let (lo, hi) = params.magnitude_range;
    if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || lo > hi {
        return Err(invalid(format!("invalid magnitude range [{lo}, {hi}]")));
    }
    let mut poles = vec![Pole::unit()];
    for m in linspace(lo, hi, params.real_pole_count) {
        if m == 1.0 {
            return Err(invalid("a real pole at magnitude 1 would duplicate the unit pole"));
        }
        poles.push(Pole::real(m)?);
    }
    match params.scheme {
        DictionaryScheme::Grid => {
            if params.pair_count > 0 {
                let rings = if lo == hi {
                    1
                } else {
                    params.pair_count.div_ceil(PHASES_PER_RING)
                };
                let per_ring = params.pair_count.div_ceil(rings);
                let mags = linspace(lo, hi, rings);
                'outer: for &m in &mags {
                    for j in 0..per_ring {
                        if poles.len() - 1 - params.real_pole_count == params.pair_count {
                            break 'outer;
                        }
                        let theta = (j as f64 + 0.5) * PI / per_ring as f64;
                        poles.push(Pole::pair(m, theta)?);
                    }
                }
            }
        }
        DictionaryScheme::SeededRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            for _ in 0..params.pair_count {
                let m = if lo == hi { lo } else { rng.random_range(lo..hi) };
                let mut theta: f64 = rng.random::<f64>() * PI;
                if theta <= 0.0 {
                    theta = PHASE_MARGIN;
                }
                poles.push(Pole::pair(m, theta)?);
            }
        }
    }
    let dict = PoleDictionary::from_poles(poles, params.normalize_columns)?;
    if dict.atom_count() == 0 {
        return Err(invalid("dictionary has no atoms"));
    }
    Ok(dict)
}

/// The `T × N` measurement matrix of a dictionary.
#[derive(Debug)]
pub struct VandermondeMatrix {
    entries: Array2<f64>,
    column_scales: Array1<f64>,
    normalized: bool,
    dictionary_hash: String,
    lipschitz: OnceLock<f64>,
}

impl Clone for VandermondeMatrix {
    fn clone(&self) -> Self {
        let lipschitz = OnceLock::new();
        if let Some(&l) = self.lipschitz.get() {
            let _ = lipschitz.set(l);
        }
        VandermondeMatrix {
            entries: self.entries.clone(),
            column_scales: self.column_scales.clone(),
            normalized: self.normalized,
            dictionary_hash: self.dictionary_hash.clone(),
            lipschitz,
        }
    }
}

impl VandermondeMatrix {
    /// Wraps an arbitrary matrix (used for solver tests and synthetic designs).
    pub fn from_entries(entries: Array2<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(invalid("matrix must be nonempty"));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries".into()));
        }
        let n = entries.ncols();
        Ok(VandermondeMatrix {
            entries,
            column_scales: Array1::ones(n),
            normalized: false,
            dictionary_hash: String::new(),
            lipschitz: OnceLock::new(),
        })
    }

    pub fn entries(&self) -> ArrayView2<'_, f64> {
        self.entries.view()
    }

    pub fn column_scales(&self) -> &Array1<f64> {
        &self.column_scales
    }

    pub fn frames(&self) -> usize {
        self.entries.nrows()
    }

    pub fn atoms(&self) -> usize {
        self.entries.ncols()
    }

    pub fn dictionary_hash(&self) -> &str {
        &self.dictionary_hash
    }

    /// Unnormalized matrix `entries · diag(column_scales)`.
    pub fn raw(&self) -> Array2<f64> {
        &self.entries * &self.column_scales
    }

    /// Largest eigenvalue of `PᵀP`, computed once and cached.
    pub fn lipschitz(&self) -> Result<f64> {
        if let Some(&l) = self.lipschitz.get() {
            return Ok(l);
        }
        let l = crate::solver::lipschitz_constant(self)?;
        let _ = self.lipschitz.set(l);
        Ok(l)
    }
}

/// Builds the `frames × N` Vandermonde matrix of `dict`.
///
/// With normalization on, every nonzero column is scaled to unit ℓ2 norm and
/// the removed norms are kept in `column_scales`; all-zero columns (sine atoms
/// at `frames = 1`) keep scale 1.
pub fn build_vandermonde(dict: &PoleDictionary, frames: usize) -> Result<VandermondeMatrix> {
    if frames < 1 {
        return Err(invalid("frame count must be at least 1"));
    }
    let n = dict.atom_count();
    let mut entries = Array2::<f64>::zeros((frames, n));
    for (i, pole) in dict.poles().iter().enumerate() {
        let start = dict.atom_offsets[i];
        let (c, s) = pair_atoms(pole.magnitude, pole.phase, frames);
        for k in 0..frames {
            entries[[k, start]] = c[k];
            if pole.kind == PoleKind::ConjugatePair {
                entries[[k, start + 1]] = s[k];
            }
        }
    }
    if entries.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "Vandermonde entries overflow at {frames} frames"
        )));
    }
    let mut column_scales = Array1::<f64>::ones(n);
    if dict.normalize_columns() {
        for (j, mut col) in entries.columns_mut().into_iter().enumerate() {
            let norm = linalg::norm2(col.view());
            if !norm.is_finite() {
                return Err(Error::NonFinite(format!(
                    "column {j} norm overflows at {frames} frames"
                )));
            }
            if norm > 0.0 {
                col.mapv_inplace(|v| v / norm);
                column_scales[j] = norm;
            }
        }
    }
    Ok(VandermondeMatrix {
        entries,
        column_scales,
        normalized: dict.normalize_columns(),
        dictionary_hash: dict.content_hash().to_owned(),
        lipschitz: OnceLock::new(),
    })
}

/// Gradient of the dictionary loss with respect to one pole's parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoleGradient {
    pub magnitude: f64,
    pub phase: f64,
}

fn check_batch(
    dict: &PoleDictionary,
    trajectories: &[Array2<f64>],
    codes: &[Array2<f64>],
) -> Result<()> {
    if trajectories.len() != codes.len() {
        return Err(mismatch(format!(
            "{} trajectories but {} codes",
            trajectories.len(),
            codes.len()
        )));
    }
    for (b, (y, c)) in trajectories.iter().zip(codes).enumerate() {
        if c.nrows() != dict.atom_count() {
            return Err(mismatch(format!(
                "code {b} has {} rows, dictionary has {} atoms",
                c.nrows(),
                dict.atom_count()
            )));
        }
        if c.ncols() != y.ncols() {
            return Err(mismatch(format!(
                "code {b} has {} columns, trajectory has {}",
                c.ncols(),
                y.ncols()
            )));
        }
        if y.nrows() == 0 {
            return Err(mismatch(format!("trajectory {b} is empty")));
        }
    }
    Ok(())
}

/// `Σ_b ‖Y_b − P C_b‖² + λ Σ_b ‖C_b‖₁` with `P` built per trajectory length.
pub fn dictionary_loss(
    dict: &PoleDictionary,
    trajectories: &[Array2<f64>],
    codes: &[Array2<f64>],
    lambda: f64,
) -> Result<f64> {
    check_batch(dict, trajectories, codes)?;
    let mut total = 0.0;
    for (y, c) in trajectories.iter().zip(codes) {
        let p = build_vandermonde(dict, y.nrows())?;
        let r = y - &p.entries.dot(c);
        total += linalg::frobenius_sq(r.view()) + lambda * c.iter().map(|v| v.abs()).sum::<f64>();
    }
    Ok(total)
}

/// Analytic gradient of [`dictionary_loss`] with respect to every pole's
/// `(magnitude, phase)`, codes held fixed. Unit poles get zero; real poles zero
/// phase gradient.
pub fn dictionary_gradient(
    dict: &PoleDictionary,
    trajectories: &[Array2<f64>],
    codes: &[Array2<f64>],
) -> Result<Vec<PoleGradient>> {
    check_batch(dict, trajectories, codes)?;
    let mut grads = vec![PoleGradient::default(); dict.pole_count()];
    for (y, c) in trajectories.iter().zip(codes) {
        let frames = y.nrows();
        let p = build_vandermonde(dict, frames)?;
        let residual = y - &p.entries.dot(c);
        // dL/dP = -2 R Cᵀ  (T × N)
        let dl_dp = residual.dot(&c.t()) * -2.0;
        for (i, pole) in dict.poles().iter().enumerate() {
            if pole.kind == PoleKind::Unit {
                continue;
            }
            let start = dict.atom_offsets[i];
            let (rho, theta) = (pole.magnitude, pole.phase);
            let mut d_cos_rho = vec![0.0; frames];
            let mut d_cos_theta = vec![0.0; frames];
            let mut d_sin_rho = vec![0.0; frames];
            let mut d_sin_theta = vec![0.0; frames];
            for k in 1..frames {
                let kf = k as f64;
                let rk1 = rho.powi(k as i32 - 1);
                let rk = rk1 * rho;
                let (s, co) = (kf * theta).sin_cos();
                d_cos_rho[k] = kf * rk1 * co;
                d_cos_theta[k] = -kf * rk * s;
                d_sin_rho[k] = kf * rk1 * s;
                d_sin_theta[k] = kf * rk * co;
            }
            let col_grad = |atom: usize, dv: &[f64]| -> f64 {
                let du = column_derivative(&p, atom, dv);
                du.iter()
                    .enumerate()
                    .map(|(k, d)| d * dl_dp[[k, atom]])
                    .sum::<f64>()
            };
            grads[i].magnitude += col_grad(start, &d_cos_rho);
            if pole.kind == PoleKind::ConjugatePair {
                grads[i].magnitude += col_grad(start + 1, &d_sin_rho);
                grads[i].phase += col_grad(start, &d_cos_theta) + col_grad(start + 1, &d_sin_theta);
            }
        }
    }
    Ok(grads)
}

/// Derivative of the (possibly normalized) column `atom` given the raw
/// column derivative `dv`: `(dv − u(u·dv)) / s` for `u = v / s`.
fn column_derivative(p: &VandermondeMatrix, atom: usize, dv: &[f64]) -> Vec<f64> {
    let s = p.column_scales[atom];
    let u = p.entries.column(atom);
    // A zero column was never rescaled, so it behaves like a raw column.
    if !p.normalized || u.iter().all(|&v| v == 0.0) {
        return dv.to_vec();
    }
    let proj: f64 = u.iter().zip(dv).map(|(a, b)| a * b).sum();
    u.iter().zip(dv).map(|(ui, d)| (d - ui * proj) / s).collect()
}

/// One gradient-descent step on the dictionary loss over pole parameters.
///
/// Magnitudes are clamped to `(0, MAGNITUDE_CAP]`, pair phases to `(0, π)`.
/// The returned dictionary is re-sorted, so atom order may change.
pub fn dictionary_gradient_step(
    dict: &PoleDictionary,
    trajectories: &[Array2<f64>],
    codes: &[Array2<f64>],
    learning_rate: f64,
) -> Result<PoleDictionary> {
    Ok(gradient_step_with_permutation(dict, trajectories, codes, learning_rate)?.0)
}

/// Like [`dictionary_gradient_step`], also returning `perm` where
/// `perm[new_pole_index] = old_pole_index`.
pub fn gradient_step_with_permutation(
    dict: &PoleDictionary,
    trajectories: &[Array2<f64>],
    codes: &[Array2<f64>],
    learning_rate: f64,
) -> Result<(PoleDictionary, Vec<usize>)> {
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(invalid("learning rate must be positive"));
    }
    let grads = dictionary_gradient(dict, trajectories, codes)?;
    let mut moved: Vec<(Pole, usize)> = Vec::with_capacity(dict.pole_count());
    for (i, (pole, g)) in dict.poles().iter().zip(&grads).enumerate() {
        let next = match pole.kind {
            PoleKind::Unit => *pole,
            PoleKind::Real => {
                let m = clamp_magnitude(pole.magnitude - learning_rate * g.magnitude);
                Pole::new(m, pole.phase, PoleKind::Real)?
            }
            PoleKind::ConjugatePair => {
                let m = clamp_magnitude(pole.magnitude - learning_rate * g.magnitude);
                let t = (pole.phase - learning_rate * g.phase)
                    .clamp(PHASE_MARGIN, PI - PHASE_MARGIN);
                Pole::pair(m, t)?
            }
        };
        moved.push((next, i));
    }
    moved.sort_by(|a, b| a.0.order_key(&b.0));
    let perm = moved.iter().map(|(_, i)| *i).collect();
    let poles = moved.into_iter().map(|(p, _)| p).collect();
    Ok((PoleDictionary::from_poles(poles, dict.normalize_columns())?, perm))
}

fn clamp_magnitude(m: f64) -> f64 {
    if m.is_nan() {
        return MAGNITUDE_CAP;
    }
    m.clamp(1e-6, MAGNITUDE_CAP)
}

/// Reorders the rows of a code computed against `old` to match `new`, given
/// the pole permutation returned by [`gradient_step_with_permutation`].
pub fn permute_code_rows(
    old: &PoleDictionary,
    new: &PoleDictionary,
    perm: &[usize],
    code: &Array2<f64>,
) -> Array2<f64> {
    let mut out = Array2::zeros(code.raw_dim());
    for (new_idx, &old_idx) in perm.iter().enumerate() {
        for (a_new, a_old) in new.atoms_of(new_idx).zip(old.atoms_of(old_idx)) {
            out.row_mut(a_new).assign(&code.row(a_old));
        }
    }
    out
}

// --- text serialization ---------------------------------------------------

const DICT_HEADER: &str = "dynpose-dictionary v1";

/// Serializes a dictionary to its versioned text record.
pub fn dictionary_to_text(dict: &PoleDictionary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{DICT_HEADER}");
    let _ = writeln!(s, "normalize_columns {}", dict.normalize_columns);
    let _ = writeln!(s, "hash {}", dict.content_hash);
    let _ = writeln!(s, "poles {}", dict.poles.len());
    for p in &dict.poles {
        let _ = writeln!(s, "{}", format_pole_row(p));
    }
    s
}

/// Parses [`dictionary_to_text`] output, verifying the stored hash.
pub fn dictionary_from_text(text: &str) -> Result<PoleDictionary> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Parse("empty dictionary file".into()))?;
    if header != DICT_HEADER {
        return Err(Error::Parse(format!("unsupported dictionary header '{header}'")));
    }
    let mut field = |name: &str| -> Result<String> {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing '{name}' line")))?;
        line.strip_prefix(name)
            .map(|v| v.trim().to_owned())
            .ok_or_else(|| Error::Parse(format!("expected '{name}', got '{line}'")))
    };
    let normalize = match field("normalize_columns")?.as_str() {
        "true" => true,
        "false" => false,
        v => return Err(Error::Parse(format!("bad normalize_columns '{v}'"))),
    };
    let hash = field("hash")?;
    let count: usize = field("poles")?
        .parse()
        .map_err(|_| Error::Parse("bad pole count".into()))?;
    let mut poles = Vec::with_capacity(count);
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("bad pole row '{line}'")));
        }
        let kind = PoleKind::parse(parts[0])?;
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{s}'")))
        };
        poles.push(Pole::new(num(parts[1])?, num(parts[2])?, kind)?);
    }
    if poles.len() != count {
        return Err(Error::Parse(format!("declared {count} poles, found {}", poles.len())));
    }
    let dict = PoleDictionary::from_poles(poles, normalize)?;
    if dict.content_hash != hash {
        return Err(Error::HashMismatch { expected: hash, found: dict.content_hash });
    }
    Ok(dict)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn only_unit() -> PoleDictionary {
        generate_dictionary(&DictionaryParams {
            pair_count: 0,
            real_pole_count: 0,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn minimal_dictionary_is_unit_pole() {
        let d = only_unit();
        assert_eq!(d.atom_count(), 1);
        assert_eq!(d.poles()[0].kind(), PoleKind::Unit);
    }

    #[test]
    fn single_grid_pair_sits_at_half_pi() {
        let d = generate_dictionary(&DictionaryParams {
            pair_count: 1,
            real_pole_count: 0,
            magnitude_range: (0.9, 0.9),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(d.atom_count(), 3);
        let pair = d.poles().iter().find(|p| p.kind() == PoleKind::ConjugatePair).unwrap();
        assert_eq!(pair.magnitude(), 0.9);
        assert_close(pair.phase(), PI / 2.0, 1e-15);
    }

    #[test]
    fn default_dictionary_has_165_atoms() {
        let d = generate_dictionary(&DictionaryParams::default()).unwrap();
        assert_eq!(d.atom_count(), 165);
        assert_eq!(d.pole_count(), 85);
        let rings: std::collections::BTreeSet<u64> = d
            .poles()
            .iter()
            .filter(|p| p.kind() == PoleKind::ConjugatePair)
            .map(|p| p.magnitude().to_bits())
            .collect();
        assert_eq!(rings.len(), 5);
    }

    #[test]
    fn seeded_dictionary_is_deterministic() {
        let params = DictionaryParams {
            pair_count: 80,
            scheme: DictionaryScheme::SeededRandom,
            seed: 7,
            ..Default::default()
        };
        let a = generate_dictionary(&params).unwrap();
        let b = generate_dictionary(&params).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        let c = generate_dictionary(&DictionaryParams { seed: 8, ..params }).unwrap();
        assert_ne!(a.content_hash(), c.content_hash());
    }

    #[test]
    fn invalid_ranges_rejected() {
        for range in [(0.0, 1.0), (-1.0, 1.0), (1.1, 1.0)] {
            let r = generate_dictionary(&DictionaryParams {
                magnitude_range: range,
                ..Default::default()
            });
            assert!(matches!(r, Err(Error::InvalidArgument(_))), "{range:?}");
        }
    }

    #[test]
    fn pole_invariants_enforced() {
        assert!(Pole::pair(1.0, 0.0).is_err());
        assert!(Pole::pair(1.0, PI).is_err());
        assert!(Pole::real(-0.5).is_err());
        assert!(Pole::new(1.0, 0.3, PoleKind::Real).is_err());
        assert!(Pole::new(0.9, 0.0, PoleKind::Unit).is_err());
        assert!(Pole::negative_real(0.9).is_ok());
    }

    #[test]
    fn duplicate_poles_rejected() {
        let poles = vec![Pole::unit(), Pole::real(0.9).unwrap(), Pole::real(0.9).unwrap()];
        assert!(PoleDictionary::from_poles(poles, true).is_err());
        assert!(PoleDictionary::from_poles(vec![Pole::real(0.9).unwrap()], true).is_err());
    }

    #[test]
    fn single_frame_rows() {
        let d = generate_dictionary(&DictionaryParams {
            normalize_columns: false,
            ..Default::default()
        })
        .unwrap();
        let p = build_vandermonde(&d, 1).unwrap();
        for (i, pole) in d.poles().iter().enumerate() {
            let atoms = d.atoms_of(i);
            assert_eq!(p.entries()[[0, atoms.start]], 1.0);
            if pole.kind() == PoleKind::ConjugatePair {
                assert_eq!(p.entries()[[0, atoms.start + 1]], 0.0);
            }
        }
    }

    #[test]
    fn direct_powers() {
        let d = PoleDictionary::from_poles(vec![Pole::unit(), Pole::real(0.9).unwrap()], false)
            .unwrap();
        let p = build_vandermonde(&d, 3).unwrap();
        // 0.9 sorts before the unit pole
        assert_eq!(p.entries().column(1).to_vec(), vec![1.0, 1.0, 1.0]);
        let c = p.entries().column(0).to_vec();
        assert_close(c[0], 1.0, 1e-15);
        assert_close(c[1], 0.9, 1e-15);
        assert_close(c[2], 0.81, 1e-15);
    }

    #[test]
    fn half_turn_pair_alternates() {
        let (c, s) = pair_atoms(1.0, PI, 4);
        let expect = [1.0, -1.0, 1.0, -1.0];
        for k in 0..4 {
            assert_close(c[k], expect[k], 1e-12);
            assert_close(s[k], 0.0, 1e-12);
        }
    }

    #[test]
    fn normalized_columns_roundtrip() {
        let d = generate_dictionary(&DictionaryParams::default()).unwrap();
        let raw_dict = PoleDictionary::from_poles(d.poles().to_vec(), false).unwrap();
        let p = build_vandermonde(&d, 36).unwrap();
        let raw = build_vandermonde(&raw_dict, 36).unwrap();
        for col in p.entries().columns() {
            assert_close(col.dot(&col).sqrt(), 1.0, 1e-12);
        }
        let rebuilt = p.raw();
        for (a, b) in rebuilt.iter().zip(raw.entries().iter()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn zero_frames_rejected() {
        assert!(build_vandermonde(&only_unit(), 0).is_err());
    }

    #[test]
    fn capped_dictionary_finite_at_long_horizon() {
        let d = generate_dictionary(&DictionaryParams::default()).unwrap();
        assert!(build_vandermonde(&d, 4000).is_ok());
    }

    #[test]
    fn zero_code_has_zero_gradient() {
        let d = generate_dictionary(&DictionaryParams::default()).unwrap();
        let y = Array2::from_shape_fn((20, 2), |(k, j)| (k as f64 * 0.3 + j as f64).sin());
        let c = Array2::zeros((d.atom_count(), 2));
        let g = dictionary_gradient(&d, std::slice::from_ref(&y), std::slice::from_ref(&c)).unwrap();
        assert!(g.iter().all(|g| g.magnitude == 0.0 && g.phase == 0.0));
        let stepped = dictionary_gradient_step(&d, &[y], &[c], 0.1).unwrap();
        assert_eq!(stepped.poles(), d.poles());
    }

    #[test]
    fn exact_code_has_zero_gradient() {
        let d = generate_dictionary(&DictionaryParams::default()).unwrap();
        let p = build_vandermonde(&d, 24).unwrap();
        let mut c = Array2::zeros((d.atom_count(), 1));
        c[[3, 0]] = 0.8;
        c[[50, 0]] = -1.1;
        let y = p.entries().dot(&c);
        let g = dictionary_gradient(&d, &[y], &[c]).unwrap();
        for gi in g {
            assert!(gi.magnitude.abs() < 1e-12 && gi.phase.abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_step_reports_mismatch() {
        let d = generate_dictionary(&DictionaryParams::default()).unwrap();
        let y = Array2::zeros((10, 2));
        let c = Array2::zeros((d.atom_count() - 1, 2));
        assert!(matches!(
            dictionary_gradient_step(&d, &[y], &[c], 0.1),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn text_roundtrip_preserves_hash() {
        let d = generate_dictionary(&DictionaryParams {
            scheme: DictionaryScheme::SeededRandom,
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        let text = dictionary_to_text(&d);
        let back = dictionary_from_text(&text).unwrap();
        assert_eq!(back, d);
        let tampered = text.replacen("pair 8", "pair 9", 1);
        assert!(dictionary_from_text(&tampered).is_err());
    }

    #[test]
    fn pole_of_atom_inverts_offsets() {
        let d = generate_dictionary(&DictionaryParams::default()).unwrap();
        for i in 0..d.pole_count() {
            for a in d.atoms_of(i) {
                assert_eq!(d.pole_of_atom(a), i);
            }
        }
    }
}
