use dynpose::dictionary::*;
use dynpose::solver::*;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn default_matrix(frames: usize) -> VandermondeMatrix {
    let d = generate_dictionary(&DictionaryParams::default()).unwrap();
    build_vandermonde(&d, frames).unwrap()
}

fn small_dictionary() -> PoleDictionary {
    let poles = vec![
        Pole::unit(),
        Pole::real(0.8).unwrap(),
        Pole::pair(0.9, 0.6).unwrap(),
        Pole::pair(1.0, 1.3).unwrap(),
        Pole::pair(0.95, 2.1).unwrap(),
        Pole::pair(1.05, 2.8).unwrap(),
    ];
    PoleDictionary::from_poles(poles, true).unwrap()
}

fn naive_objective(p: &Array2<f64>, y: &Array2<f64>, c: &Array2<f64>, lambda: f64, w: &Array1<f64>) -> f64 {
    let (t, n) = p.dim();
    let d = y.ncols();
    let mut total = 0.0;
    for i in 0..t {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..n {
                s += p[[i, k]] * c[[k, j]];
            }
            total += (y[[i, j]] - s).powi(2);
        }
    }
    for k in 0..n {
        for j in 0..d {
            total += lambda * w[k] * c[[k, j]].abs();
        }
    }
    total
}

fn random_instance(seed: u64) -> (VandermondeMatrix, Array2<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = small_dictionary();
    let t = rng.random_range(5..40);
    let p = build_vandermonde(&d, t).unwrap();
    let cols = rng.random_range(1..4);
    let y = Array2::from_shape_fn((t, cols), |_| rng.random_range(-1.0..1.0));
    (p, y)
}

#[test]
fn single_atom_matches_closed_form_lasso() {
    let p = default_matrix(32);
    let lambda = 1e-4;
    let config = SolverConfig { lambda, max_iterations: 2000, convergence_tol: 0.0, ..Default::default() };
    for atom in [0, 17, 80, 164] {
        let col = p.entries().column(atom).to_owned();
        let y = (&col * 0.7).insert_axis(ndarray::Axis(1));
        let code = fista(&p, y.view(), Array1::ones(p.atoms()).view(), &config).unwrap();
        let corr = col.dot(&y.column(0));
        let oracle = corr.signum() * (corr.abs() - lambda / 2.0).max(0.0) / col.dot(&col);
        assert_eq!(code.support, vec![atom], "atom {atom}");
        assert!((code.coefficients[[atom, 0]] - oracle).abs() < 1e-3);
        assert!((code.coefficients[[atom, 0]] - 0.7).abs() < 1e-3);
    }
}

#[test]
fn orthogonal_design_recovers_both_atoms() {
    let t = 16;
    let mut entries = Array2::zeros((t, 4));
    for i in 0..t {
        let x = (i as f64 + 0.5) * std::f64::consts::PI / t as f64;
        entries[[i, 0]] = 1.0;
        entries[[i, 1]] = x.cos();
        entries[[i, 2]] = (2.0 * x).cos();
        entries[[i, 3]] = (3.0 * x).cos();
    }
    let p = VandermondeMatrix::from_entries(entries).unwrap();
    let cols = p.entries().to_owned();
    let y = (&cols.column(1) * 1.5 + &cols.column(3) * -0.8).insert_axis(ndarray::Axis(1));
    let lambda = 0.3;
    let config = SolverConfig { lambda, max_iterations: 2000, ..Default::default() };
    let code = fista(&p, y.view(), Array1::ones(4).view(), &config).unwrap();
    assert_eq!(code.support, vec![1, 3]);
    for k in 0..4 {
        let col = cols.column(k);
        let corr = col.dot(&y.column(0));
        let oracle = corr.signum() * (corr.abs() - lambda / 2.0).max(0.0) / col.dot(&col);
        assert!((code.coefficients[[k, 0]] - oracle).abs() < 1e-8, "atom {k}");
    }
}

#[test]
fn objective_matches_naive_loop() {
    for seed in 0..50 {
        let (p, y) = random_instance(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
        let c = Array2::from_shape_fn((p.atoms(), y.ncols()), |_| {
            if rng.random_bool(0.3) { rng.random_range(-2.0..2.0) } else { 0.0 }
        });
        let w = Array1::from_shape_fn(p.atoms(), |_| rng.random_range(0.1..3.0));
        let lambda = rng.random_range(0.01..1.0);
        let pe = p.entries().to_owned();
        let fast = objective(p.entries(), y.view(), c.view(), lambda, w.view()).unwrap();
        let slow = naive_objective(&pe, &y, &c, lambda, &w);
        assert!((fast - slow).abs() <= 1e-12 * slow.max(1.0), "seed {seed}: {fast} vs {slow}");
    }
}

#[test]
fn reported_objective_is_recomputable() {
    let config = SolverConfig { lambda: 0.1, ..Default::default() };
    for seed in 0..20 {
        let (p, y) = random_instance(seed);
        let code = fista(&p, y.view(), Array1::ones(p.atoms()).view(), &config).unwrap();
        let again = objective(p.entries(), y.view(), code.coefficients.view(), 0.1, Array1::ones(p.atoms()).view()).unwrap();
        assert!((code.objective_value - again).abs() <= 1e-9 * again.max(1e-12));
    }
}

#[test]
fn traced_objective_never_increases() {
    let config = SolverConfig { lambda: 0.05, max_iterations: 400, convergence_tol: 0.0, ..Default::default() };
    for seed in 0..100 {
        let (p, y) = random_instance(seed);
        let (_, trace) = fista_traced(&p, y.view(), Array1::ones(p.atoms()).view(), &config).unwrap();
        assert!(!trace.is_empty());
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-10 * w[0].abs().max(1.0), "seed {seed}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn zero_rounds_bit_equal_to_fista() {
    let config = SolverConfig { reweight_rounds: 0, ..Default::default() };
    for seed in 0..20 {
        let (p, y) = random_instance(seed);
        let a = reweighted_fista(&p, y.view(), &config).unwrap();
        let b = fista(&p, y.view(), Array1::ones(p.atoms()).view(), &config).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn zero_signal_on_default_grid() {
    let p = default_matrix(24);
    let y = Array2::zeros((24, 3));
    let code = reweighted_fista(&p, y.view(), &SolverConfig::default()).unwrap();
    assert!(code.coefficients.iter().all(|&v| v == 0.0));
    assert_eq!(code.objective_value, 0.0);
    assert!(code.support.is_empty());
}

#[test]
fn solver_is_deterministic() {
    let (p, y) = random_instance(7);
    let config = SolverConfig::default();
    let a = reweighted_fista(&p, y.view(), &config).unwrap();
    let b = reweighted_fista(&p, y.view(), &config).unwrap();
    assert_eq!(a, b);
}

#[test]
fn wrong_frame_count_is_an_error() {
    let p = default_matrix(10);
    let y = Array2::zeros((11, 1));
    assert!(reweighted_fista(&p, y.view(), &SolverConfig::default()).is_err());
}

proptest! {
    #[test]
    fn soft_threshold_scales(values in prop::collection::vec(-10.0f64..10.0, 1..20), tau in 0.0f64..5.0, alpha in 0.01f64..100.0) {
        let v = Array1::from(values);
        let t = Array1::from_elem(v.len(), tau);
        let base = soft_threshold(v.view(), t.view()).unwrap();
        let scaled = soft_threshold((&v * alpha).view(), (&t * alpha).view()).unwrap();
        for (s, b) in scaled.iter().zip(base.iter()) {
            prop_assert!((s - alpha * b).abs() <= 1e-12 * (alpha * b.abs()).max(1.0));
        }
    }

    #[test]
    fn soft_threshold_never_grows_magnitude(values in prop::collection::vec(-10.0f64..10.0, 1..20), tau in 0.0f64..5.0) {
        let v = Array1::from(values);
        let t = Array1::from_elem(v.len(), tau);
        let out = soft_threshold(v.view(), t.view()).unwrap();
        for (o, x) in out.iter().zip(v.iter()) {
            prop_assert!(o.abs() <= x.abs());
            prop_assert!(*o == 0.0 || o.signum() == x.signum());
        }
    }
}
