//! Weighted ℓ1-regularized least squares over a pole dictionary.
//!
//! Objective: `F(C) = ‖Y − P C‖²_F + λ Σ_ij W_ij |C_ij|`. The smooth part has
//! gradient `2Pᵀ(PC − Y)`, whose Lipschitz constant is `2·λ_max(PᵀP)`, so the
//! proximal step size is `1 / (2L)` with `L` from [`lipschitz_constant`].

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::dictionary::VandermondeMatrix;
use crate::error::{invalid, mismatch, Error, Result};
use crate::linalg;

/// How reweighting shares penalties across the `d` jointly solved columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightSharing {
    /// One weight per atom from the largest magnitude across columns.
    #[default]
    PerAtom,
    /// One weight per scalar coefficient.
    PerCoefficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub lambda: f64,
    pub max_iterations: usize,
    /// Stop when the relative objective change drops below this.
    pub convergence_tol: f64,
    pub reweight_rounds: usize,
    pub reweight_epsilon: f64,
    pub support_floor: f64,
    #[serde(default)]
    pub weight_sharing: WeightSharing,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: 0.2,
            max_iterations: 300,
            convergence_tol: 1e-7,
            reweight_rounds: 2,
            reweight_epsilon: 1e-4,
            support_floor: 1e-4,
            weight_sharing: WeightSharing::PerAtom,
        }
    }
}

impl SolverConfig {
    /// Settings used when the pole features are combined with an appearance stream.
    pub fn joint_workflow() -> Self {
        SolverConfig { lambda: 0.1, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.max_iterations < 1 {
            return Err(invalid("max_iterations must be at least 1"));
        }
        if !(self.reweight_epsilon > 0.0) {
            return Err(invalid("reweight_epsilon must be positive"));
        }
        if !(self.support_floor > 0.0) {
            return Err(invalid("support_floor must be positive"));
        }
        if !(self.convergence_tol >= 0.0) {
            return Err(invalid("convergence_tol must be nonnegative"));
        }
        Ok(())
    }
}

/// Coefficients of a trajectory batch against a dictionary's atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    /// `N × d` coefficients in the normalized-column basis.
    pub coefficients: Array2<f64>,
    /// Per-coefficient penalty weights used in the last solve.
    pub weights: Array2<f64>,
    pub lambda: f64,
    pub objective_value: f64,
    pub iterations_used: usize,
    /// Atoms with `|c| > support_floor` in any column, ascending.
    pub support: Vec<usize>,
    /// Column norms removed from the measurement matrix.
    pub column_scales: Array1<f64>,
    pub dictionary_hash: String,
}

impl SparseCode {
    pub fn atoms(&self) -> usize {
        self.coefficients.nrows()
    }

    pub fn columns(&self) -> usize {
        self.coefficients.ncols()
    }

    /// Coefficients against the unnormalized atoms: `C / column_scales`.
    pub fn raw_coefficients(&self) -> Array2<f64> {
        let mut raw = self.coefficients.clone();
        for (mut row, &s) in raw.rows_mut().into_iter().zip(self.column_scales.iter()) {
            row.mapv_inplace(|v| v / s);
        }
        raw
    }

    /// Wraps externally prepared coefficients with unit scales.
    pub fn from_coefficients(coefficients: Array2<f64>, dictionary_hash: &str) -> Self {
        let n = coefficients.nrows();
        SparseCode {
            weights: Array2::ones(coefficients.raw_dim()),
            coefficients,
            lambda: 0.0,
            objective_value: 0.0,
            iterations_used: 0,
            support: Vec::new(),
            column_scales: Array1::ones(n),
            dictionary_hash: dictionary_hash.to_owned(),
        }
    }
}

/// Largest eigenvalue of `PᵀP` by power iteration.
///
/// Runs at least 50 iterations and stops once the Rayleigh quotient changes by
/// less than 1e-13 relative (at most 20 000 iterations).
pub fn lipschitz_constant(p: &VandermondeMatrix) -> Result<f64> {
    let a = p.entries();
    if a.is_empty() {
        return Err(invalid("empty matrix"));
    }
    let n = a.ncols();
    let mut v = Array1::from_shape_fn(n, |i| 1.0 + 0.01 * ((i as f64) * 0.7 + 0.3).sin());
    let mut norm = linalg::norm2(v.view());
    v /= norm;
    let mut estimate = 0.0;
    for it in 0..20_000 {
        let w = a.t().dot(&a.dot(&v));
        let next = v.dot(&w);
        norm = linalg::norm2(w.view());
        if norm == 0.0 {
            return Err(Error::DegenerateDictionary("PᵀP is zero".into()));
        }
        v = w / norm;
        let done = it >= 50 && (next - estimate).abs() <= 1e-13 * next.abs();
        estimate = next;
        if done {
            break;
        }
    }
    // The Rayleigh quotient approaches from below; use the larger of it and
    // the last ‖PᵀPv‖ (also a lower bound, usually the tighter one).
    let l = estimate.max(norm);
    if !(l > 0.0) {
        return Err(Error::DegenerateDictionary("largest eigenvalue is zero".into()));
    }
    Ok(l)
}

/// `sign(v) · max(|v| − τ, 0)` elementwise.
pub fn soft_threshold(v: ArrayView1<f64>, thresholds: ArrayView1<f64>) -> Result<Array1<f64>> {
    if v.len() != thresholds.len() {
        return Err(mismatch("soft_threshold lengths differ"));
    }
    Ok(Zip::from(&v)
        .and(&thresholds)
        .map_collect(|&x, &t| shrink(x, t)))
}

#[inline]
fn shrink(x: f64, t: f64) -> f64 {
    let m = x.abs() - t;
    if m > 0.0 {
        m.copysign(x)
    } else {
        0.0
    }
}

/// `‖Y − PC‖²_F + λ‖W∘C‖₁`; `weights` has one entry per atom.
pub fn objective(
    p: ArrayView2<f64>,
    y: ArrayView2<f64>,
    c: ArrayView2<f64>,
    lambda: f64,
    weights: ArrayView1<f64>,
) -> Result<f64> {
    if p.nrows() != y.nrows() || p.ncols() != c.nrows() || y.ncols() != c.ncols() {
        return Err(mismatch(format!(
            "P {:?}, Y {:?}, C {:?}",
            p.dim(),
            y.dim(),
            c.dim()
        )));
    }
    if weights.len() != c.nrows() {
        return Err(mismatch("one weight per atom required"));
    }
    let w = broadcast_weights(weights, c.ncols());
    Ok(weighted_objective(p, y, c, lambda, w.view()))
}

fn broadcast_weights(weights: ArrayView1<f64>, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((weights.len(), cols), |(i, _)| weights[i])
}

fn weighted_objective(
    p: ArrayView2<f64>,
    y: ArrayView2<f64>,
    c: ArrayView2<f64>,
    lambda: f64,
    w: ArrayView2<f64>,
) -> f64 {
    let r = &y - &p.dot(&c);
    linalg::frobenius_sq(r.view()) + lambda * penalty(c, w)
}

fn penalty(c: ArrayView2<f64>, w: ArrayView2<f64>) -> f64 {
    Zip::from(&c).and(&w).fold(0.0, |acc, &ci, &wi| acc + wi * ci.abs())
}

fn check_inputs(p: &VandermondeMatrix, y: ArrayView2<f64>) -> Result<()> {
    if y.nrows() != p.frames() {
        return Err(mismatch(format!(
            "Y has {} rows, P has {} frames",
            y.nrows(),
            p.frames()
        )));
    }
    if y.ncols() == 0 {
        return Err(mismatch("Y has no columns"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("trajectory contains NaN or infinity".into()));
    }
    Ok(())
}

/// FISTA with uniform or caller-supplied per-atom weights, cold start.
pub fn fista(
    p: &VandermondeMatrix,
    y: ArrayView2<f64>,
    weights: ArrayView1<f64>,
    config: &SolverConfig,
) -> Result<SparseCode> {
    fista_warm(p, y, weights, config, None)
}

/// FISTA from an optional warm start.
pub fn fista_warm(
    p: &VandermondeMatrix,
    y: ArrayView2<f64>,
    weights: ArrayView1<f64>,
    config: &SolverConfig,
    init: Option<&Array2<f64>>,
) -> Result<SparseCode> {
    if weights.len() != p.atoms() {
        return Err(mismatch(format!(
            "{} weights for {} atoms",
            weights.len(),
            p.atoms()
        )));
    }
    let w = broadcast_weights(weights, y.ncols());
    solve(p, y, w, config, init, None)
}

/// FISTA that also returns the objective after every proximal step.
pub fn fista_traced(
    p: &VandermondeMatrix,
    y: ArrayView2<f64>,
    weights: ArrayView1<f64>,
    config: &SolverConfig,
) -> Result<(SparseCode, Vec<f64>)> {
    if weights.len() != p.atoms() {
        return Err(mismatch("one weight per atom required"));
    }
    let w = broadcast_weights(weights, y.ncols());
    let mut trace = Vec::new();
    let code = solve(p, y, w, config, None, Some(&mut trace))?;
    Ok((code, trace))
}

/// Iterations between active-set polish attempts.
const POLISH_INTERVAL: usize = 10;
/// Relative tolerance on the off-support optimality check.
const KKT_SLACK: f64 = 1e-9;
/// Support cuts tried by the polish step, relative to the column maximum.
const POLISH_CUTS: &[f64] = &[0.0, 1e-3, 1e-2, 3e-2, 1e-1];
/// Candidate support sizes taken from the largest entries regardless of cut.
const POLISH_PREFIXES: &[usize] = &[1, 2, 3, 4, 6, 8];

/// Monotone FISTA on the weighted objective.
///
/// When a momentum step would raise the objective, momentum is reset and a
/// plain proximal step is taken from the last accepted iterate; if even that
/// fails to decrease (possible only through rounding) the iterate is kept.
/// Every [`POLISH_INTERVAL`] iterations an exact solve on the current support
/// replaces the iterate when it does not raise the objective; the loop ends
/// early once that candidate passes the optimality check.
fn solve(
    p: &VandermondeMatrix,
    y: ArrayView2<f64>,
    weights: Array2<f64>,
    config: &SolverConfig,
    init: Option<&Array2<f64>>,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<SparseCode> {
    config.validate()?;
    check_inputs(p, y)?;
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(invalid("weights must be strictly positive"));
    }
    let a = p.entries();
    let n = p.atoms();
    let d = y.ncols();
    if let Some(c0) = init {
        if c0.dim() != (n, d) {
            return Err(mismatch("warm start has wrong shape"));
        }
    }
    let lip = p.lipschitz()?;
    let step = 1.0 / (2.0 * lip);
    let thresholds = weights.mapv(|w| w * config.lambda * step);
    let lambda = config.lambda;

    let at = a.t().as_standard_layout().into_owned();
    let aty = linalg::mul_dense(at.view(), y);
    // Prox step from `point`, given `pp = P·point`.
    let prox_from = |point: &Array2<f64>, pp: &Array2<f64>| -> Array2<f64> {
        let grad = linalg::mul_dense(at.view(), pp.view()) - &aty;
        let mut out = point - &(grad * (2.0 * step));
        Zip::from(&mut out)
            .and(&thresholds)
            .for_each(|v, &t| *v = shrink(*v, t));
        out
    };
    // Objective of `c` together with `P·c`.
    let eval = |c: &Array2<f64>| -> (f64, Array2<f64>) {
        let pc = linalg::mul_sparse_rows(at.view(), c.view());
        let r = &y - &pc;
        (linalg::frobenius_sq(r.view()) + lambda * penalty(c.view(), weights.view()), pc)
    };

    let mut x = init.cloned().unwrap_or_else(|| Array2::zeros((n, d)));
    let (mut fx, mut px) = eval(&x);
    let mut z = x.clone();
    let mut pz = px.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;
    let mut certified = false;
    for _ in 0..config.max_iterations {
        iterations += 1;
        let mut x_new = prox_from(&z, &pz);
        let (mut f_new, mut px_new) = eval(&x_new);
        if f_new > fx {
            t = 1.0;
            x_new = prox_from(&x, &px);
            (f_new, px_new) = eval(&x_new);
            if f_new > fx {
                x_new = x.clone();
                px_new = px.clone();
                f_new = fx;
            }
        }
        // Gradient-based adaptive restart: drop momentum once it points uphill.
        if restart_momentum(&z, &x_new, &x) {
            t = 1.0;
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        z = &x_new + &((&x_new - &x) * beta);
        pz = &px_new + &((&px_new - &px) * beta);
        let change = (fx - f_new).abs() / fx.abs().max(f64::MIN_POSITIVE);
        x = x_new;
        px = px_new;
        fx = f_new;
        t = t_new;
        let mut optimal = false;
        if iterations % POLISH_INTERVAL == 0 {
            if let Some((c, kkt)) = polish(a, y, &x, &weights, lambda) {
                let (fc, pc) = eval(&c);
                if fc <= fx {
                    x = c;
                    px = pc;
                    fx = fc;
                    z = x.clone();
                    pz = px.clone();
                    t = 1.0;
                    optimal = kkt;
                }
            }
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(fx);
        }
        if optimal || fx == 0.0 || change < config.convergence_tol {
            certified = optimal;
            break;
        }
    }
    if !certified && fx > 0.0 {
        let c = feature_sign(a, y, &x, &weights, lambda);
        let (fc, _) = eval(&c);
        if fc < fx {
            x = c;
            fx = fc;
            if let Some(tr) = trace.as_mut() {
                tr.push(fx);
            }
        }
    }
    Ok(finish(p, x, weights, config, fx, iterations))
}

/// Exact minimizer on a support with signs held fixed:
/// `c_S = (P_SᵀP_S)⁻¹ (P_Sᵀy − (λ/2) w_S ∘ sign(c_S))`, per column. Supports
/// are the entries of `x` above each fraction in [`POLISH_CUTS`] of the column
/// maximum, plus the [`POLISH_PREFIXES`] largest entries. The lowest-objective candidate is returned with a flag telling
/// whether it satisfies the optimality conditions of the full problem (signs
/// preserved, `|2P_jᵀr| ≤ λ w_j` off the support).
fn polish(
    a: ArrayView2<f64>,
    y: ArrayView2<f64>,
    x: &Array2<f64>,
    weights: &Array2<f64>,
    lambda: f64,
) -> Option<(Array2<f64>, bool)> {
    let (frames, n) = a.dim();
    let mut out = Array2::zeros(x.raw_dim());
    let mut kkt = true;
    for col in 0..x.ncols() {
        let xc = x.column(col);
        let max = xc.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max == 0.0 {
            continue;
        }
        let ycol = nalgebra::DVector::from_fn(frames, |r, _| y[[r, col]]);
        let mut order: Vec<usize> = (0..n).filter(|&i| xc[i] != 0.0).collect();
        order.sort_by(|&a, &b| xc[b].abs().total_cmp(&xc[a].abs()).then(a.cmp(&b)));
        let mut lengths: Vec<usize> = POLISH_CUTS
            .iter()
            .map(|&cut| order.iter().take_while(|&&i| xc[i].abs() > cut * max).count())
            .chain(POLISH_PREFIXES.iter().copied())
            .filter(|&len| len >= 1 && len <= order.len() && len <= frames)
            .collect();
        lengths.sort_unstable();
        lengths.dedup();
        let mut best: Option<(f64, Vec<usize>, nalgebra::DVector<f64>, bool)> = None;
        for len in lengths {
            let mut support = order[..len].to_vec();
            support.sort_unstable();
            let ps = nalgebra::DMatrix::from_fn(frames, support.len(), |r, k| a[[r, support[k]]]);
            let mut rhs = ps.tr_mul(&ycol);
            for (k, &i) in support.iter().enumerate() {
                rhs[k] -= 0.5 * lambda * weights[[i, col]] * xc[i].signum();
            }
            let Some(chol) = ps.tr_mul(&ps).cholesky() else { continue };
            let sol = chol.solve(&rhs);
            if sol.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let signs_kept = support.iter().zip(sol.iter()).all(|(&i, v)| *v != 0.0 && v.signum() == xc[i].signum());
            let r = &ycol - &ps * &sol;
            let pen: f64 = support.iter().zip(sol.iter()).map(|(&i, v)| weights[[i, col]] * v.abs()).sum();
            let f = r.norm_squared() + lambda * pen;
            if best.as_ref().is_none_or(|b| f < b.0) {
                best = Some((f, support, sol, signs_kept));
            }
        }
        let (_, support, sol, signs_kept) = best?;
        kkt &= signs_kept;
        for (k, &i) in support.iter().enumerate() {
            out[[i, col]] = sol[k];
        }
    }
    if kkt {
        let r = &y - &a.dot(&out);
        let corr = a.t().dot(&r);
        kkt = Zip::from(&corr)
            .and(&out)
            .and(weights)
            .all(|&g, &c, &w| c != 0.0 || 2.0 * g.abs() <= lambda * w * (1.0 + KKT_SLACK));
    }
    Some((out, kkt))
}

/// Upper bound on feature-sign steps per column.
const FEATURE_SIGN_STEPS: usize = 2000;

/// Feature-sign search per column, from the warm start `x` and from zero;
/// the lower objective wins.
fn feature_sign(
    a: ArrayView2<f64>,
    y: ArrayView2<f64>,
    x: &Array2<f64>,
    weights: &Array2<f64>,
    lambda: f64,
) -> Array2<f64> {
    let gram = a.t().dot(&a);
    let aty = a.t().dot(&y);
    let mut out = x.clone();
    for col in 0..x.ncols() {
        let column = FeatureSignColumn {
            a,
            gram: gram.view(),
            b: aty.column(col),
            y: y.column(col),
            w: weights.column(col),
            lambda,
        };
        let warm = column.run(x.column(col).to_owned());
        if warm.2 {
            out.column_mut(col).assign(&warm.0);
            continue;
        }
        let cold = column.run(Array1::zeros(x.nrows()));
        out.column_mut(col).assign(if cold.1 < warm.1 { &cold.0 } else { &warm.0 });
    }
    out
}

/// One column of `‖y − Pc‖² + λ Σ w_i |c_i|` with `G = PᵀP`, `b = Pᵀy`.
struct FeatureSignColumn<'a> {
    a: ArrayView2<'a, f64>,
    gram: ArrayView2<'a, f64>,
    b: ArrayView1<'a, f64>,
    y: ArrayView1<'a, f64>,
    w: ArrayView1<'a, f64>,
    lambda: f64,
}

impl FeatureSignColumn<'_> {
    fn objective(&self, c: &Array1<f64>) -> f64 {
        let mut r = self.y.to_owned();
        for (i, &v) in c.iter().enumerate() {
            if v != 0.0 {
                r.scaled_add(-v, &self.a.column(i));
            }
        }
        r.dot(&r) + self.lambda * c.iter().zip(self.w.iter()).map(|(v, wi)| wi * v.abs()).sum::<f64>()
    }

    /// Alternates sign-fixed least-squares steps on the active set, with a
    /// line search over the zero crossings on the way, and activation of the
    /// zero coefficient that most violates `|2P_jᵀr| ≤ λ w_j`. Every accepted
    /// step strictly lowers the objective; stops at the optimality
    /// conditions, on a singular or oversized active set, or without progress.
    /// The flag reports whether the optimality conditions were reached.
    fn run(&self, mut c: Array1<f64>) -> (Array1<f64>, f64, bool) {
        let (lambda, w) = (self.lambda, self.w);
        let mut f = self.objective(&c);
        let mut active: Vec<usize> = (0..c.len()).filter(|&i| c[i] != 0.0).collect();
        let mut signs: Vec<f64> = active.iter().map(|&i| c[i].signum()).collect();
        for _ in 0..FEATURE_SIGN_STEPS {
            // gradient of the smooth part: 2(Gc − b)
            let mut g = self.b.mapv(|v| -2.0 * v);
            for &i in &active {
                g.scaled_add(2.0 * c[i], &self.gram.column(i));
            }
            let on_target = active.iter().zip(&signs).all(|(&i, &s)| {
                (g[i] + lambda * w[i] * s).abs() <= 1e-9 * (lambda * w[i] + g[i].abs())
            });
            if on_target {
                let worst = (0..c.len())
                    .filter(|&i| c[i] == 0.0)
                    .map(|i| (i, g[i].abs() - lambda * w[i] * (1.0 + KKT_SLACK)))
                    .filter(|&(_, v)| v > 0.0)
                    .max_by(|p, q| p.1.total_cmp(&q.1));
                let Some((i, _)) = worst else { return (c, f, true) };
                let pos = active.partition_point(|&k| k < i);
                active.insert(pos, i);
                signs.insert(pos, -g[i].signum());
            }
            let m = active.len();
            if m > self.a.nrows() {
                break;
            }
            let gs = nalgebra::DMatrix::from_fn(m, m, |r, k| self.gram[[active[r], active[k]]]);
            let rhs = nalgebra::DVector::from_fn(m, |r, _| self.b[active[r]] - 0.5 * lambda * w[active[r]] * signs[r]);
            let Some(chol) = gs.cholesky() else { break };
            let target = chol.solve(&rhs);
            if target.iter().any(|v| !v.is_finite()) {
                break;
            }
            let start: Vec<f64> = active.iter().map(|&i| c[i]).collect();
            let crossings = (0..m).filter_map(|k| {
                let (s0, s1) = (start[k], target[k]);
                (s0 != 0.0 && s0.signum() != s1.signum()).then(|| (s0 / (s0 - s1), Some(k)))
            });
            let mut best: Option<(f64, Array1<f64>)> = None;
            for (t, zeroed) in std::iter::once((1.0, None)).chain(crossings) {
                let mut cand = c.clone();
                for k in 0..m {
                    cand[active[k]] = start[k] + t * (target[k] - start[k]);
                }
                if let Some(k) = zeroed {
                    cand[active[k]] = 0.0;
                }
                let fc = self.objective(&cand);
                if best.as_ref().is_none_or(|(fb, _)| fc < *fb) {
                    best = Some((fc, cand));
                }
            }
            let Some((fc, cand)) = best else { break };
            if !(fc < f) {
                break;
            }
            f = fc;
            c = cand;
            active.retain(|&i| c[i] != 0.0);
            signs = active.iter().map(|&i| c[i].signum()).collect();
        }
        (c, f, false)
    }
}

/// `(z − x⁺)·(x⁺ − x) > 0`: the last step moved against the prox direction.
fn restart_momentum(z: &Array2<f64>, x_new: &Array2<f64>, x: &Array2<f64>) -> bool {
    Zip::from(z)
        .and(x_new)
        .and(x)
        .fold(0.0, |acc, &zi, &xn, &xo| acc + (zi - xn) * (xn - xo))
        > 0.0
}

fn finish(
    p: &VandermondeMatrix,
    coefficients: Array2<f64>,
    weights: Array2<f64>,
    config: &SolverConfig,
    objective_value: f64,
    iterations_used: usize,
) -> SparseCode {
    let support = coefficients
        .rows()
        .into_iter()
        .enumerate()
        .filter(|(_, row)| row.iter().any(|v| v.abs() > config.support_floor))
        .map(|(i, _)| i)
        .collect();
    SparseCode {
        coefficients,
        weights,
        lambda: config.lambda,
        objective_value,
        iterations_used,
        support,
        column_scales: p.column_scales().clone(),
        dictionary_hash: p.dictionary_hash().to_owned(),
    }
}

/// Reweighted FISTA: a uniform-weight solve followed by `reweight_rounds`
/// warm-started solves with weights `1 / (|c| + ε)` normalized to mean 1.
pub fn reweighted_fista(
    p: &VandermondeMatrix,
    y: ArrayView2<f64>,
    config: &SolverConfig,
) -> Result<SparseCode> {
    let (n, d) = (p.atoms(), y.ncols());
    let mut code = solve(p, y, Array2::ones((n, d)), config, None, None)?;
    let mut total_iterations = code.iterations_used;
    for _ in 0..config.reweight_rounds {
        let w = reweight(&code.coefficients, config);
        let next = solve(p, y, w, config, Some(&code.coefficients), None)?;
        total_iterations += next.iterations_used;
        code = next;
    }
    code.iterations_used = total_iterations;
    Ok(code)
}

fn reweight(c: &Array2<f64>, config: &SolverConfig) -> Array2<f64> {
    let eps = config.reweight_epsilon;
    let mut w = match config.weight_sharing {
        WeightSharing::PerAtom => {
            let mut w = Array2::zeros(c.raw_dim());
            for (mut wr, cr) in w.rows_mut().into_iter().zip(c.rows()) {
                let m = cr.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                wr.fill(1.0 / (m + eps));
            }
            w
        }
        WeightSharing::PerCoefficient => c.mapv(|v| 1.0 / (v.abs() + eps)),
    };
    let mean = w.mean().unwrap_or(1.0);
    w /= mean;
    w
}
