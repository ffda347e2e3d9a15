use std::f64::consts::PI;

use dynpose::dictionary::*;
use dynpose::error::Error;
use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn raw_params(pairs: usize, lo: f64, hi: f64, reals: usize) -> DictionaryParams {
    DictionaryParams {
        pair_count: pairs,
        magnitude_range: (lo, hi),
        real_pole_count: reals,
        ..Default::default()
    }
}

fn to_na(a: ndarray::ArrayView2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

#[test]
fn default_grid_has_165_atoms() {
    let d = generate_dictionary(&DictionaryParams::default()).unwrap();
    assert_eq!(d.atom_count(), 165);
    assert_eq!(d.pole_count(), 85);
    let units = d.poles().iter().filter(|p| p.kind() == PoleKind::Unit).count();
    assert_eq!(units, 1);
    let pairs = d.poles().iter().filter(|p| p.kind() == PoleKind::ConjugatePair).count();
    assert_eq!(pairs, 80);
    let mut rings: Vec<f64> = d.poles().iter().filter(|p| p.kind() == PoleKind::ConjugatePair).map(|p| p.magnitude()).collect();
    rings.dedup();
    assert_eq!(rings.len(), 5);
    assert!((rings[0] - 0.85).abs() < 1e-15 && (rings[4] - 1.15).abs() < 1e-15);
}

#[test]
fn poles_sorted_by_magnitude_then_phase() {
    let d = generate_dictionary(&DictionaryParams { scheme: DictionaryScheme::SeededRandom, seed: 3, ..Default::default() }).unwrap();
    for w in d.poles().windows(2) {
        assert!((w[0].magnitude(), w[0].phase()) < (w[1].magnitude(), w[1].phase()));
    }
}

#[test]
fn minimal_dictionary_is_the_unit_pole() {
    let d = generate_dictionary(&raw_params(0, 0.9, 1.1, 0)).unwrap();
    assert_eq!(d.atom_count(), 1);
    assert_eq!(d.poles(), &[Pole::unit()]);
}

#[test]
fn single_forced_grid_point() {
    let d = generate_dictionary(&raw_params(1, 0.9, 0.9, 0)).unwrap();
    assert_eq!(d.atom_count(), 3);
    let pair = d.poles().iter().find(|p| p.kind() == PoleKind::ConjugatePair).unwrap();
    assert_eq!(pair.magnitude(), 0.9);
    assert!((pair.phase() - PI / 2.0).abs() < 1e-15);
}

#[test]
fn seeded_random_is_deterministic() {
    let p = DictionaryParams { scheme: DictionaryScheme::SeededRandom, seed: 7, ..raw_params(80, 0.85, 1.15, 4) };
    let a = generate_dictionary(&p).unwrap();
    let b = generate_dictionary(&p).unwrap();
    assert_eq!(a.content_hash(), b.content_hash());
    assert_eq!(a, b);
    let c = generate_dictionary(&DictionaryParams { seed: 8, ..p }).unwrap();
    assert_ne!(a.content_hash(), c.content_hash());
}

#[test]
fn bad_magnitude_ranges_rejected() {
    for (lo, hi) in [(0.0, 1.0), (-0.5, 1.0), (1.2, 1.1), (f64::NAN, 1.0)] {
        let e = generate_dictionary(&raw_params(4, lo, hi, 1)).unwrap_err();
        assert!(matches!(e, Error::InvalidArgument(_)), "{lo} {hi}: {e}");
    }
}

#[test]
fn real_pole_on_the_unit_magnitude_rejected() {
    let e = generate_dictionary(&raw_params(2, 0.9, 1.1, 1)).unwrap_err();
    assert!(e.to_string().contains("unit pole"), "{e}");
}

#[test]
fn one_frame_gives_k0_powers() {
    let d = generate_dictionary(&DictionaryParams { normalize_columns: false, ..Default::default() }).unwrap();
    let p = build_vandermonde(&d, 1).unwrap();
    assert_eq!(p.frames(), 1);
    for (i, pole) in d.poles().iter().enumerate() {
        let atoms = d.atoms_of(i);
        assert_eq!(p.entries()[[0, atoms.start]], 1.0);
        if pole.kind() == PoleKind::ConjugatePair {
            assert_eq!(p.entries()[[0, atoms.start + 1]], 0.0);
        }
    }
}

#[test]
fn unit_and_real_columns_are_direct_powers() {
    let d = PoleDictionary::from_poles(vec![Pole::unit(), Pole::real(0.9).unwrap()], false).unwrap();
    let p = build_vandermonde(&d, 3).unwrap();
    let e = p.entries();
    assert_eq!(e.column(d.atoms_of(d.unit_index()).start).to_vec(), vec![1.0, 1.0, 1.0]);
    let real_index = d.find(&Pole::real(0.9).unwrap()).unwrap();
    let real = e.column(d.atoms_of(real_index).start).to_vec();
    for (a, b) in real.iter().zip([1.0, 0.9, 0.81]) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn pair_at_pi_alternates() {
    let (c, s) = pair_atoms(1.0, PI, 4);
    for (a, b) in c.iter().zip([1.0, -1.0, 1.0, -1.0]) {
        assert!((a - b).abs() < 1e-15);
    }
    assert!(s.iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn pair_columns_match_formula() {
    let d = PoleDictionary::from_poles(vec![Pole::unit(), Pole::pair(0.95, 0.7).unwrap()], false).unwrap();
    let p = build_vandermonde(&d, 20).unwrap();
    let a = d.atoms_of(d.find(&Pole::pair(0.95, 0.7).unwrap()).unwrap()).start;
    for k in 0..20 {
        let r = 0.95f64.powi(k as i32);
        assert!((p.entries()[[k, a]] - r * (0.7 * k as f64).cos()).abs() < 1e-14);
        assert!((p.entries()[[k, a + 1]] - r * (0.7 * k as f64).sin()).abs() < 1e-14);
    }
}

#[test]
fn normalized_columns_have_unit_norm_and_reproduce_raw() {
    let on = generate_dictionary(&DictionaryParams::default()).unwrap();
    let off = generate_dictionary(&DictionaryParams { normalize_columns: false, ..Default::default() }).unwrap();
    for t in [2, 9, 36, 120] {
        let pn = build_vandermonde(&on, t).unwrap();
        let pr = build_vandermonde(&off, t).unwrap();
        for col in pn.entries().columns() {
            let n = col.dot(&col).sqrt();
            assert!((n - 1.0).abs() <= 1e-12);
        }
        let back = pn.raw();
        for (a, b) in back.iter().zip(pr.entries().iter()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        let u = on.atoms_of(on.unit_index()).start;
        assert!(pr.entries().column(u).iter().all(|&v| v == 1.0));
        assert!((pn.column_scales()[u] - (t as f64).sqrt()).abs() < 1e-12);
    }
}

#[test]
fn zero_frames_rejected() {
    let d = generate_dictionary(&DictionaryParams::default()).unwrap();
    assert!(matches!(build_vandermonde(&d, 0), Err(Error::InvalidArgument(_))));
}

#[test]
fn long_sequences_stay_finite_until_overflow_is_reported() {
    let d = generate_dictionary(&DictionaryParams::default()).unwrap();
    let p = build_vandermonde(&d, 3000).unwrap();
    assert!(p.entries().iter().all(|v| v.is_finite()));
    assert!(p.column_scales().iter().all(|v| v.is_finite() && *v > 0.0));
    assert!(matches!(build_vandermonde(&d, 10_000), Err(Error::NonFinite(_))));
}

#[test]
fn lipschitz_matches_eigen_oracle() {
    let d = generate_dictionary(&DictionaryParams::default()).unwrap();
    for t in [3, 12, 36, 64] {
        let p = build_vandermonde(&d, t).unwrap();
        let a = to_na(p.entries());
        let eig = (a.transpose() * &a).symmetric_eigen();
        let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let l = p.lipschitz().unwrap();
        assert!((l - max).abs() <= 1e-9 * max, "T={t}: {l} vs {max}");
    }
}

#[test]
fn text_roundtrip_preserves_content_and_hash() {
    for p in [
        DictionaryParams::default(),
        DictionaryParams { scheme: DictionaryScheme::SeededRandom, seed: 11, normalize_columns: false, ..raw_params(13, 0.8, 1.1, 2) },
    ] {
        let d = generate_dictionary(&p).unwrap();
        let text = dictionary_to_text(&d);
        let back = dictionary_from_text(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(dictionary_to_text(&back), text);
    }
}

#[test]
fn tampered_dictionary_text_rejected() {
    let d = generate_dictionary(&raw_params(4, 0.9, 1.0, 1)).unwrap();
    let text = dictionary_to_text(&d);
    let bad_hash = text.replace(d.content_hash(), &"0".repeat(d.content_hash().len()));
    assert!(dictionary_from_text(&bad_hash).is_err());
    let edited: String = text
        .lines()
        .map(|l| if l.starts_with("real") { l.replacen("e-1", "e-2", 1) } else { l.to_owned() })
        .collect::<Vec<_>>()
        .join("\n");
    assert!(dictionary_from_text(&edited).is_err());
    assert!(dictionary_from_text("dynpose-dictionary v9\n").is_err());
    assert!(dictionary_from_text("").is_err());
}

/// Small dictionary with well-separated poles so finite differences never reorder atoms.
fn random_small_dict(rng: &mut ChaCha8Rng, normalize: bool) -> PoleDictionary {
    let mut poles = vec![Pole::unit()];
    let pairs = rng.random_range(1..=3);
    for i in 0..pairs {
        let m = rng.random_range(0.8..1.1);
        let lo = 0.3 + i as f64 * 0.9;
        poles.push(Pole::pair(m, rng.random_range(lo..lo + 0.6)).unwrap());
    }
    poles.push(Pole::real(rng.random_range(0.5..0.75)).unwrap());
    PoleDictionary::from_poles(poles, normalize).unwrap()
}

fn perturbed(dict: &PoleDictionary, index: usize, dm: f64, dt: f64) -> PoleDictionary {
    let poles = dict
        .poles()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if i != index {
                *p
            } else {
                Pole::new(p.magnitude() + dm, p.phase() + dt, p.kind()).unwrap()
            }
        })
        .collect();
    PoleDictionary::from_poles(poles, dict.normalize_columns()).unwrap()
}

/// Largest componentwise error relative to the largest component magnitude.
fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = numeric.iter().chain(analytic).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    analytic.iter().zip(numeric).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn dictionary_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let h = 1e-6;
    for trial in 0..100 {
        let normalize = trial % 2 == 0;
        let dict = random_small_dict(&mut rng, normalize);
        let batch = rng.random_range(1..=3);
        let mut ys = Vec::new();
        let mut cs = Vec::new();
        for _ in 0..batch {
            let t = rng.random_range(6..=16);
            ys.push(Array2::from_shape_fn((t, 2), |_| rng.random_range(-1.0..1.0)));
            cs.push(Array2::from_shape_fn((dict.atom_count(), 2), |_| {
                if rng.random_bool(0.6) { rng.random_range(-1.0..1.0) } else { 0.0 }
            }));
        }
        let lambda = 0.1;
        let grads = dictionary_gradient(&dict, &ys, &cs).unwrap();
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        for (i, pole) in dict.poles().iter().enumerate() {
            if pole.kind() == PoleKind::Unit {
                continue;
            }
            let f = |dm: f64, dt: f64| dictionary_loss(&perturbed(&dict, i, dm, dt), &ys, &cs, lambda).unwrap();
            analytic.push(grads[i].magnitude);
            numeric.push((f(h, 0.0) - f(-h, 0.0)) / (2.0 * h));
            if pole.kind() == PoleKind::ConjugatePair {
                analytic.push(grads[i].phase);
                numeric.push((f(0.0, h) - f(0.0, -h)) / (2.0 * h));
            }
        }
        let err = max_relative_error(&analytic, &numeric);
        assert!(err <= 1e-5, "trial {trial}: relative error {err}");
    }
}

#[test]
fn zero_codes_give_zero_gradient_and_unchanged_poles() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dict = random_small_dict(&mut rng, true);
    let ys = vec![Array2::from_shape_fn((10, 3), |_| rng.random_range(-1.0..1.0))];
    let cs = vec![Array2::zeros((dict.atom_count(), 3))];
    let g = dictionary_gradient(&dict, &ys, &cs).unwrap();
    assert!(g.iter().all(|g| g.magnitude == 0.0 && g.phase == 0.0));
    let next = dictionary_gradient_step(&dict, &ys, &cs, 0.1).unwrap();
    assert_eq!(next.poles(), dict.poles());
}

#[test]
fn exact_representation_has_zero_reconstruction_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dict = random_small_dict(&mut rng, true);
    let p = build_vandermonde(&dict, 12).unwrap();
    let c = Array2::from_shape_fn((dict.atom_count(), 2), |_| rng.random_range(-1.0..1.0));
    let y = p.entries().dot(&c);
    let g = dictionary_gradient(&dict, &[y], &[c]).unwrap();
    assert!(g.iter().all(|g| g.magnitude.abs() < 1e-10 && g.phase.abs() < 1e-10));
}

#[test]
fn gradient_step_clamps_magnitudes() {
    let dict = PoleDictionary::from_poles(vec![Pole::unit(), Pole::pair(1.19, 1.0).unwrap()], false).unwrap();
    let p = build_vandermonde(&dict, 8).unwrap();
    let c = Array2::from_shape_fn((3, 1), |(i, _)| if i == 0 { 0.0 } else { 1.0 });
    // Target far larger than the current reconstruction pulls ρ upward.
    let y = p.entries().dot(&c) * 50.0;
    let next = dictionary_gradient_step(&dict, &[y], &[c], 10.0).unwrap();
    let pair = next.poles().iter().find(|p| p.kind() == PoleKind::ConjugatePair).unwrap();
    assert!(pair.magnitude() <= MAGNITUDE_CAP);
    assert_ne!(next.content_hash(), dict.content_hash());
}

#[test]
fn gradient_rejects_mismatched_batches() {
    let d = generate_dictionary(&raw_params(2, 0.9, 1.0, 0)).unwrap();
    let y = vec![Array2::zeros((5, 2))];
    assert!(dictionary_gradient(&d, &y, &[]).is_err());
    assert!(dictionary_gradient(&d, &y, &[Array2::zeros((d.atom_count() + 1, 2))]).is_err());
    assert!(dictionary_gradient(&d, &y, &[Array2::zeros((d.atom_count(), 3))]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn raw_reconstruction_roundtrip(seed in 0u64..1000, frames in 1usize..60, cols in 1usize..4) {
        let d = generate_dictionary(&DictionaryParams {
            scheme: DictionaryScheme::SeededRandom, seed, ..raw_params(12, 0.85, 1.15, 2)
        }).unwrap();
        let raw = generate_dictionary(&DictionaryParams {
            scheme: DictionaryScheme::SeededRandom, seed, normalize_columns: false, ..raw_params(12, 0.85, 1.15, 2)
        }).unwrap();
        let pn = build_vandermonde(&d, frames).unwrap();
        let pr = build_vandermonde(&raw, frames).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = Array2::from_shape_fn((d.atom_count(), cols), |_| rng.random_range(-1.0..1.0));
        let lhs = pr.entries().dot(&c);
        let scaled = &c * &pn.column_scales().view().insert_axis(ndarray::Axis(1));
        let rhs = pn.entries().dot(&scaled);
        for (a, b) in lhs.iter().zip(rhs.iter()) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn same_content_same_matrix(seed in 0u64..1000, frames in 1usize..40) {
        let p = DictionaryParams { scheme: DictionaryScheme::SeededRandom, seed, ..raw_params(6, 0.9, 1.05, 1) };
        let a = generate_dictionary(&p).unwrap();
        let b = generate_dictionary(&p).unwrap();
        prop_assert_eq!(a.content_hash(), b.content_hash());
        let (pa, pb) = (build_vandermonde(&a, frames).unwrap(), build_vandermonde(&b, frames).unwrap());
        prop_assert_eq!(pa.entries(), pb.entries());
    }

    #[test]
    fn shifted_cosine_lies_in_pair_span(rho in 0.85f64..1.15, theta in 0.01f64..3.13, phi in -PI..PI, frames in 3usize..64) {
        let (c, s) = pair_atoms(rho, theta, frames);
        let a = DMatrix::from_fn(frames, 2, |k, j| if j == 0 { c[k] } else { s[k] });
        let y = DVector::from_fn(frames, |k, _| rho.powi(k as i32) * (k as f64 * theta + phi).cos());
        let x = a.clone().svd(true, true).solve(&y, 1e-14).unwrap();
        let r = (&y - &a * x).norm();
        prop_assert!(r <= 1e-10 * y.norm().max(1.0), "residual {}", r);
    }
}
