//! Small dense helpers shared by the solver and dictionary code.

use ndarray::{Array2, ArrayView1, ArrayView2};

/// Squared Frobenius norm.
pub fn frobenius_sq(m: ArrayView2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

/// Euclidean norm computed with a max-abs prescale so huge entries do not overflow.
pub fn norm2(v: ArrayView1<f64>) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale) * (x / scale)).sum::<f64>().sqrt()
}

/// `A·x` given `at = Aᵀ` (`N × T`) and `x` (`N × d`), skipping zero entries
/// of `x`. The result is column-major.
///
/// At solver sizes (tens of frames, a few columns) a general GEMM spends most
/// of its time packing, so these loops are faster.
pub fn mul_sparse_rows(at: ArrayView2<f64>, x: ArrayView2<f64>) -> Array2<f64> {
    let (n, t) = at.dim();
    let d = x.ncols();
    debug_assert_eq!(x.nrows(), n);
    let a = at.to_slice().expect("standard layout");
    let mut out = vec![0.0; d * t];
    for (col, xr) in a.chunks_exact(t).zip(x.outer_iter()) {
        for (o, &c) in out.chunks_exact_mut(t).zip(xr.iter()) {
            if c != 0.0 {
                for (ov, &v) in o.iter_mut().zip(col) {
                    *ov += c * v;
                }
            }
        }
    }
    Array2::from_shape_vec((d, t), out).expect("shape").reversed_axes()
}

/// `Aᵀ·r` given `at = Aᵀ` (`N × T`, standard layout) and `r` (`T × d`).
pub fn mul_dense(at: ArrayView2<f64>, r: ArrayView2<f64>) -> Array2<f64> {
    let (n, t) = at.dim();
    let d = r.ncols();
    debug_assert_eq!(r.nrows(), t);
    let a = at.to_slice().expect("standard layout");
    let rt: Vec<f64> = r.t().iter().copied().collect();
    let mut out = vec![0.0; n * d];
    for (orow, col) in out.chunks_exact_mut(d).zip(a.chunks_exact(t)) {
        for (o, rcol) in orow.iter_mut().zip(rt.chunks_exact(t)) {
            *o = dot(col, rcol);
        }
    }
    Array2::from_shape_vec((n, d), out).expect("shape")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
