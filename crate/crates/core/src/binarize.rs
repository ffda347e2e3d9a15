//! Pole-support indicator vectors.
//!
//! Coefficient energy is aggregated per pole (cos/sin atoms of a pair merge)
//! on the unnormalized atom basis, where a mode's amplitude does not depend on
//! how many frames were observed. Bits are then set by a relative threshold or
//! by a seeded Gumbel-sigmoid gate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dictionary::{PoleDictionary, PoleKind};
use crate::error::{invalid, mismatch, Error, Result};
use crate::solver::SparseCode;

/// Default relative threshold for [`binarize_threshold`].
pub const DEFAULT_TAU_REL: f64 = 0.05;
/// Default absolute energy floor for [`binarize_threshold`].
pub const DEFAULT_FLOOR: f64 = 1e-4;
/// Default temperature of the Gumbel gate.
pub const DEFAULT_TEMPERATURE: f64 = 0.1;
/// Gumbel threshold for pole features used on their own.
pub const GUMBEL_ALPHA_DIR: f64 = 0.51;
/// Gumbel threshold when fused with an appearance stream.
pub const GUMBEL_ALPHA_TWO_STREAM: f64 = 0.505;

/// Per-pole energy of a code, tagged with the dictionary it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleEnergy {
    pub values: Vec<f64>,
    pub unit_index: Option<usize>,
    pub dictionary_hash: String,
}

impl PoleEnergy {
    pub fn new(values: Vec<f64>, unit_index: Option<usize>, dictionary_hash: &str) -> Self {
        PoleEnergy { values, unit_index, dictionary_hash: dictionary_hash.to_owned() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[cfg(test)]
    fn scaled(&self, alpha: f64) -> Self {
        PoleEnergy { values: self.values.iter().map(|v| v * alpha).collect(), ..self.clone() }
    }
}

fn check_code(code: &SparseCode, dict: &PoleDictionary) -> Result<()> {
    if code.atoms() != dict.atom_count() {
        return Err(mismatch(format!(
            "code has {} atoms, dictionary has {}",
            code.atoms(),
            dict.atom_count()
        )));
    }
    if !code.dictionary_hash.is_empty() && code.dictionary_hash != dict.content_hash() {
        return Err(Error::HashMismatch {
            expected: dict.content_hash().to_owned(),
            found: code.dictionary_hash.clone(),
        });
    }
    Ok(())
}

fn energies<F>(code: &SparseCode, dict: &PoleDictionary, columns: F) -> Result<PoleEnergy>
where
    F: Fn() -> std::ops::Range<usize>,
{
    check_code(code, dict)?;
    let raw = code.raw_coefficients();
    let values = dict
        .poles()
        .iter()
        .enumerate()
        .map(|(i, pole)| {
            let atoms = dict.atoms_of(i);
            columns()
                .map(|j| match pole.kind() {
                    PoleKind::ConjugatePair => {
                        raw[[atoms.start, j]].hypot(raw[[atoms.start + 1, j]])
                    }
                    _ => raw[[atoms.start, j]].abs(),
                })
                .fold(0.0f64, f64::max)
        })
        .collect();
    Ok(PoleEnergy::new(values, Some(dict.unit_index()), dict.content_hash()))
}

/// Per-pole energy taking the maximum over all code columns.
pub fn pair_energy(code: &SparseCode, dict: &PoleDictionary) -> Result<PoleEnergy> {
    let d = code.columns();
    energies(code, dict, || 0..d)
}

/// Per-pole energy of a single code column.
pub fn column_pair_energy(code: &SparseCode, dict: &PoleDictionary, column: usize) -> Result<PoleEnergy> {
    if column >= code.columns() {
        return Err(mismatch(format!("column {column} out of {}", code.columns())));
    }
    energies(code, dict, || column..column + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BitConvention {
    #[default]
    ZeroOne,
    PlusMinusOne,
}

/// Fixed-length pole indicator vector, packed 64 bits per word.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryCode {
    words: Vec<u64>,
    len: usize,
    pub gate_values: Vec<f64>,
    pub convention: BitConvention,
    pub unit_index: Option<usize>,
    pub dictionary_hash: String,
}

impl BinaryCode {
    pub fn from_bits(bits: &[bool], gate_values: Vec<f64>, unit_index: Option<usize>, dictionary_hash: &str) -> Self {
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        BinaryCode {
            words,
            len: bits.len(),
            gate_values,
            convention: BitConvention::ZeroOne,
            unit_index,
            dictionary_hash: dictionary_hash.to_owned(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of set bits.
    pub fn ones(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// Bit values in the code's convention: `{0, 1}` or `{−1, +1}`.
    pub fn values(&self) -> Vec<i8> {
        (0..self.len)
            .map(|i| {
                let b = self.get(i) as i8;
                match self.convention {
                    BitConvention::ZeroOne => b,
                    BitConvention::PlusMinusOne => 2 * b - 1,
                }
            })
            .collect()
    }

    pub fn with_convention(mut self, convention: BitConvention) -> Self {
        self.convention = convention;
        self
    }

    /// Lowercase hex, least-significant bit of byte 0 is bit 0.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = (0..self.len.div_ceil(8))
            .map(|b| (self.words[b / 8] >> ((b % 8) * 8)) as u8)
            .collect();
        hex::encode(bytes)
    }

    pub fn from_hex(s: &str, len: usize, unit_index: Option<usize>, dictionary_hash: &str) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::Parse(format!("bad hex code: {e}")))?;
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::Parse(format!("{} hex bytes for {len} bits", bytes.len())));
        }
        let bits: Vec<bool> = (0..len).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect();
        if (len..bytes.len() * 8).any(|i| bytes[i / 8] >> (i % 8) & 1 == 1) {
            return Err(Error::Parse("padding bits set".into()));
        }
        let gates = bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Ok(BinaryCode::from_bits(&bits, gates, unit_index, dictionary_hash))
    }
}

/// Relative-threshold gate: bit `i` is on iff
/// `energy_i ≥ max(tau_rel · max_j energy_j, floor)`.
pub fn binarize_threshold(energy: &PoleEnergy, tau_rel: f64, floor: f64) -> Result<BinaryCode> {
    if !(tau_rel > 0.0 && tau_rel < 1.0) {
        return Err(invalid(format!("tau_rel must lie in (0, 1), got {tau_rel}")));
    }
    if !(floor > 0.0) {
        return Err(invalid("floor must be positive"));
    }
    if energy.values.iter().any(|v| !(*v >= 0.0)) {
        return Err(invalid("energies must be nonnegative"));
    }
    let max = energy.values.iter().cloned().fold(0.0f64, f64::max);
    let cut = (tau_rel * max).max(floor);
    let bits: Vec<bool> = energy.values.iter().map(|&e| e >= cut).collect();
    let denom = if max > 0.0 { max } else { 1.0 };
    let gates = energy.values.iter().map(|e| e / denom).collect();
    Ok(BinaryCode::from_bits(&bits, gates, energy.unit_index, &energy.dictionary_hash))
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Standard Gumbel noise for index `i` of a seeded stream.
fn gumbel_stream(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            let u: f64 = rng.random::<f64>().clamp(1e-300, 1.0 - f64::EPSILON);
            -(-u.ln()).ln()
        })
        .collect()
}

/// Gumbel-sigmoid gate: `g_i = σ((ln(e_i + 1e−12) + G_i) / temperature)`,
/// bit on iff `g_i > alpha`.
pub fn binarize_gumbel(energy: &PoleEnergy, temperature: f64, alpha: f64, rng_seed: u64) -> Result<BinaryCode> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(invalid(format!("temperature must be positive, got {temperature}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if energy.values.iter().any(|v| !(*v >= 0.0)) {
        return Err(invalid("energies must be nonnegative"));
    }
    let noise = gumbel_stream(rng_seed, energy.len());
    let gates: Vec<f64> = energy
        .values
        .iter()
        .zip(&noise)
        .map(|(&e, &g)| sigmoid(((e + 1e-12).ln() + g) / temperature))
        .collect();
    let bits: Vec<bool> = gates.iter().map(|&g| g > alpha).collect();
    Ok(BinaryCode::from_bits(&bits, gates, energy.unit_index, &energy.dictionary_hash))
}

/// Probability that [`binarize_gumbel`] sets a bit of energy `e`.
pub fn gumbel_on_probability(e: f64, temperature: f64, alpha: f64) -> f64 {
    // g > α  ⇔  G > τ·logit(α) − ln(e⁺);  P(G > x) = 1 − exp(−exp(−x))
    let logit = (alpha / (1.0 - alpha)).ln();
    let x = temperature * logit - (e + 1e-12).ln();
    -(-(-x).exp()).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinarizationLosses {
    /// `Σ | |2g − 1| − 1 |` over gate values.
    pub bi: f64,
    /// Number of set bits.
    pub gumbel: f64,
}

pub fn binarization_losses(code: &BinaryCode) -> BinarizationLosses {
    let bi = code
        .gate_values
        .iter()
        .map(|g| ((2.0 * g - 1.0).abs() - 1.0).abs())
        .sum();
    BinarizationLosses { bi, gumbel: code.count_ones() as f64 }
}

fn check_pair(a: &BinaryCode, b: &BinaryCode) -> Result<()> {
    if a.dictionary_hash != b.dictionary_hash {
        return Err(Error::HashMismatch {
            expected: a.dictionary_hash.clone(),
            found: b.dictionary_hash.clone(),
        });
    }
    if a.len != b.len {
        return Err(mismatch(format!("code lengths {} and {}", a.len, b.len)));
    }
    Ok(())
}

pub fn hamming(a: &BinaryCode, b: &BinaryCode) -> Result<usize> {
    check_pair(a, b)?;
    Ok(a.words
        .iter()
        .zip(&b.words)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum())
}

/// Intersection over union of the set bits; two empty sets score 1.
pub fn jaccard(a: &BinaryCode, b: &BinaryCode, ignore_unit_pole: bool) -> Result<f64> {
    check_pair(a, b)?;
    let mask = unit_mask(a, ignore_unit_pole);
    let (mut inter, mut union) = (0u32, 0u32);
    for (i, (x, y)) in a.words.iter().zip(&b.words).enumerate() {
        let m = !mask.get(i).copied().unwrap_or(0);
        inter += (x & y & m).count_ones();
        union += ((x | y) & m).count_ones();
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Whether two codes agree on every bit, optionally ignoring the unit pole.
pub fn same_support(a: &BinaryCode, b: &BinaryCode, ignore_unit_pole: bool) -> Result<bool> {
    check_pair(a, b)?;
    let mask = unit_mask(a, ignore_unit_pole);
    Ok(a.words
        .iter()
        .zip(&b.words)
        .enumerate()
        .all(|(i, (x, y))| (x ^ y) & !mask.get(i).copied().unwrap_or(0) == 0))
}

fn unit_mask(code: &BinaryCode, ignore_unit: bool) -> Vec<u64> {
    let mut mask = vec![0u64; code.words.len()];
    if let (true, Some(u)) = (ignore_unit, code.unit_index) {
        if u < code.len {
            mask[u / 64] |= 1 << (u % 64);
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{generate_dictionary, DictionaryParams, Pole};
    use ndarray::Array2;

    fn small_dict() -> PoleDictionary {
        PoleDictionary::from_poles(
            vec![Pole::unit(), Pole::real(0.7).unwrap(), Pole::pair(0.95, 1.0).unwrap()],
            false,
        )
        .unwrap()
    }

    fn code(dict: &PoleDictionary, c: Array2<f64>) -> SparseCode {
        SparseCode::from_coefficients(c, dict.content_hash())
    }

    fn energy(values: &[f64]) -> PoleEnergy {
        PoleEnergy::new(values.to_vec(), None, "h")
    }

    #[test]
    fn zero_code_zero_energy() {
        let d = small_dict();
        let e = pair_energy(&code(&d, Array2::zeros((4, 2))), &d).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
    }

    #[test]
    fn real_pole_energy() {
        let d = small_dict();
        let mut c = Array2::zeros((4, 1));
        c[[0, 0]] = -0.7; // real 0.7 sorts first
        let e = pair_energy(&code(&d, c), &d).unwrap();
        assert_eq!(e.values, vec![0.7, 0.0, 0.0]);
    }

    #[test]
    fn pair_energy_is_pythagorean() {
        let d = small_dict();
        let mut c = Array2::zeros((4, 2));
        let pair = d.atoms_of(1);
        c[[pair.start, 1]] = 3.0;
        c[[pair.start + 1, 1]] = 4.0;
        c[[pair.start, 0]] = 1.0;
        let e = pair_energy(&code(&d, c.clone()), &d).unwrap();
        assert_eq!(e.values[1], 5.0);
        let e0 = column_pair_energy(&code(&d, c), &d, 0).unwrap();
        assert_eq!(e0.values[1], 1.0);
    }

    #[test]
    fn energy_uses_raw_basis() {
        let d = small_dict();
        let mut sc = code(&d, Array2::from_elem((4, 1), 2.0));
        sc.column_scales = ndarray::array![2.0, 1.0, 4.0, 4.0];
        let e = pair_energy(&sc, &d).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0f64.hypot(0.5), 0.5]);
    }

    #[test]
    fn energy_rejects_foreign_code() {
        let d = small_dict();
        let other = generate_dictionary(&DictionaryParams::default()).unwrap();
        let c = code(&other, Array2::zeros((other.atom_count(), 1)));
        assert!(pair_energy(&c, &d).is_err());
    }

    #[test]
    fn threshold_examples() {
        let b = binarize_threshold(&energy(&[0.0, 0.0, 0.0]), 0.05, 1e-4).unwrap();
        assert_eq!(b.count_ones(), 0);
        let b = binarize_threshold(&energy(&[1.0, 0.04, 0.2]), 0.05, 1e-4).unwrap();
        assert_eq!(b.to_bools(), vec![true, false, true]);
        let b = binarize_threshold(&energy(&[0.0, 3.0, 0.0, 0.0]), 0.05, 1e-4).unwrap();
        assert_eq!(b.ones(), vec![1]);
        assert_eq!(b.gate_values, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn gumbel_same_seed_same_bits() {
        let e = energy(&[0.5, 2.0, 0.0, 1.1, 0.9]);
        let a = binarize_gumbel(&e, 0.1, GUMBEL_ALPHA_DIR, 42).unwrap();
        let b = binarize_gumbel(&e, 0.1, GUMBEL_ALPHA_DIR, 42).unwrap();
        assert_eq!(a, b);
        assert!(binarize_gumbel(&e, 0.0, 0.5, 1).is_err());
        assert!(binarize_gumbel(&e, 0.1, 1.0, 1).is_err());
    }

    #[test]
    fn alpha_constants() {
        assert_eq!(GUMBEL_ALPHA_DIR, 0.51);
        assert_eq!(GUMBEL_ALPHA_TWO_STREAM, 0.505);
    }

    #[test]
    fn loss_examples() {
        let b = BinaryCode::from_bits(&[true, false, true], vec![1.0, 0.0, 1.0], None, "h");
        assert_eq!(binarization_losses(&b).bi, 0.0);
        let mut half = b.clone();
        half.gate_values = vec![0.5; 3];
        assert_eq!(binarization_losses(&half).bi, 3.0);
        let none = BinaryCode::from_bits(&[false; 5], vec![0.0; 5], None, "h");
        assert_eq!(binarization_losses(&none).gumbel, 0.0);
        assert_eq!(binarization_losses(&b).gumbel, 2.0);
    }

    #[test]
    fn convention_conversion() {
        let b = BinaryCode::from_bits(&[true, false], vec![1.0, 0.0], None, "h");
        assert_eq!(b.values(), vec![1, 0]);
        let pm = b.with_convention(BitConvention::PlusMinusOne);
        assert_eq!(pm.values(), vec![1, -1]);
    }

    #[test]
    fn distance_examples() {
        let a = BinaryCode::from_bits(&[true, true, false], vec![], None, "h");
        let b = BinaryCode::from_bits(&[true, false, true], vec![], None, "h");
        assert_eq!(hamming(&a, &a).unwrap(), 0);
        assert_eq!(jaccard(&a, &a, false).unwrap(), 1.0);
        assert_eq!(hamming(&a, &b).unwrap(), 2);
        assert!((jaccard(&a, &b, false).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let c = BinaryCode::from_bits(&[false, false, true], vec![], None, "h");
        let d = BinaryCode::from_bits(&[true, true, false], vec![], None, "h");
        assert_eq!(jaccard(&c, &d, false).unwrap(), 0.0);
        let empty = BinaryCode::from_bits(&[false; 3], vec![], None, "h");
        assert_eq!(jaccard(&empty, &empty, false).unwrap(), 1.0);
    }

    #[test]
    fn unit_pole_can_be_ignored() {
        let a = BinaryCode::from_bits(&[true, true, false], vec![], Some(0), "h");
        let b = BinaryCode::from_bits(&[false, true, false], vec![], Some(0), "h");
        assert_eq!(jaccard(&a, &b, true).unwrap(), 1.0);
        assert!(same_support(&a, &b, true).unwrap());
        assert!(!same_support(&a, &b, false).unwrap());
        assert_eq!(jaccard(&a, &b, false).unwrap(), 0.5);
    }

    #[test]
    fn hash_mismatch_is_error() {
        let a = BinaryCode::from_bits(&[true], vec![], None, "x");
        let b = BinaryCode::from_bits(&[true], vec![], None, "y");
        assert!(matches!(hamming(&a, &b), Err(Error::HashMismatch { .. })));
        assert!(jaccard(&a, &b, true).is_err());
    }

    #[test]
    fn hex_roundtrip() {
        let bits: Vec<bool> = (0..85).map(|i| i % 3 == 0 || i == 84).collect();
        let b = BinaryCode::from_bits(&bits, vec![], Some(2), "h");
        let back = BinaryCode::from_hex(&b.to_hex(), 85, Some(2), "h").unwrap();
        assert_eq!(back.to_bools(), bits);
        assert!(BinaryCode::from_hex("zz", 8, None, "h").is_err());
    }

    #[test]
    fn scale_invariance_of_threshold() {
        let e = energy(&[0.3, 1.2, 0.05, 0.0, 0.9]);
        let base = binarize_threshold(&e, 0.05, 1e-4).unwrap();
        for alpha in [0.01, 0.5, 3.0, 1e3] {
            let scaled = binarize_threshold(&e.scaled(alpha), 0.05, 1e-4).unwrap();
            assert_eq!(scaled.to_bools(), base.to_bools(), "alpha {alpha}");
        }
    }
}
