//! Small dense matrices and the weighted least-squares solver.
//!
//! Every regression in this crate is a kernel-weighted least-squares fit
//! with at most a handful of columns, so the solver is written directly:
//! Cholesky on the normal matrix `XᵀWX` while it is well conditioned
//! (1-norm condition estimate below [`COND_LIMIT`]), Householder QR on
//! `√W·X` otherwise. Covariances use the heteroscedastic sandwich
//! `(XᵀWX)⁻¹ (XᵀWVWX) (XᵀWX)⁻¹`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

/// Condition-number threshold above which the solver switches to QR.
pub const COND_LIMIT: f64 = 1e10;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    /// All-zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Builds a matrix from row slices; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "shape mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut s = 0.0;
            for j in 0..self.cols {
                s += self[(i, j)] * v[j];
            }
            out[i] = s;
        }
        out
    }

    /// 1-norm (maximum absolute column sum).
    pub fn norm_one(&self) -> f64 {
        let mut best = 0.0;
        for j in 0..self.cols {
            let mut s = 0.0;
            for i in 0..self.rows {
                s += libm::fabs(self[(i, j)]);
            }
            best = s.max(best);
        }
        best
    }

    /// Forces exact symmetry by averaging with the transpose.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..i {
                let m = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = m;
                self[(j, i)] = m;
            }
        }
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Failure of a dense solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinalgError {
    /// The normal matrix is numerically singular; carries the condition
    /// estimate (infinite when a pivot vanished outright).
    Singular {
        /// 1-norm condition estimate at the point of failure.
        cond: f64,
    },
    /// Fewer rows than columns: the system is underdetermined.
    Underdetermined {
        /// Rows available.
        rows: usize,
        /// Columns required.
        cols: usize,
    },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::Singular { cond } => {
                write!(f, "singular normal matrix (condition estimate {cond:e})")
            }
            LinalgError::Underdetermined { rows, cols } => {
                write!(f, "underdetermined system: {rows} rows for {cols} columns")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LinalgError {}

/// Result of a weighted least-squares solve.
#[derive(Debug, Clone)]
pub struct WlsFit {
    /// Coefficient vector.
    pub beta: Vec<f64>,
    /// `(XᵀWX)⁻¹`, the bread of the sandwich covariance.
    pub xtwx_inv: Mat,
    /// 1-norm condition estimate of `XᵀWX`.
    pub cond: f64,
    /// True when the QR fallback produced the solution.
    pub via_qr: bool,
}

/// Cholesky factor `L` (lower triangular, `A = L Lᵀ`) of a symmetric
/// positive-definite matrix, or `None` if a pivot is not strictly positive.
pub fn cholesky(a: &Mat) -> Option<Mat> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[(i, i)] = libm::sqrt(s);
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Solves `A x = b` for symmetric positive-definite `A` via Cholesky;
/// `None` when `A` is not positive definite.
pub fn solve_spd(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let l = cholesky(a)?;
    let n = l.rows();
    let mut x: Vec<f64> = b.to_vec();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Some(x)
}

// Inverse of A from its Cholesky factor: solve L Lᵀ X = I column by column.
fn inverse_from_cholesky(l: &Mat) -> Mat {
    let n = l.rows();
    let mut inv = Mat::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        for x in col.iter_mut() {
            *x = 0.0;
        }
        col[j] = 1.0;
        // forward substitution L z = e_j
        for i in 0..n {
            let mut s = col[i];
            for k in 0..i {
                s -= l[(i, k)] * col[k];
            }
            col[i] = s / l[(i, i)];
        }
        // back substitution Lᵀ x = z
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * col[k];
            }
            col[i] = s / l[(i, i)];
        }
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    inv
}

/// Weighted least squares: minimises `Σ w_i (y_i - x_iᵀβ)²`.
///
/// `x` is the `n×q` design, `w` the nonnegative weights, `y` the response.
/// Solves the normal equations by Cholesky; falls back to Householder QR
/// of `√W·X` when the Cholesky pivot fails or the condition estimate
/// exceeds [`COND_LIMIT`].
pub fn wls(x: &Mat, w: &[f64], y: &[f64]) -> Result<WlsFit, LinalgError> {
    let n = x.rows();
    let q = x.cols();
    assert_eq!(w.len(), n, "weight length");
    assert_eq!(y.len(), n, "response length");
    if n < q {
        return Err(LinalgError::Underdetermined { rows: n, cols: q });
    }

    let mut a = Mat::zeros(q, q);
    let mut b = vec![0.0; q];
    for i in 0..n {
        let wi = w[i];
        if wi == 0.0 {
            continue;
        }
        for r in 0..q {
            let xr = x[(i, r)] * wi;
            b[r] += xr * y[i];
            for c in r..q {
                a[(r, c)] += xr * x[(i, c)];
            }
        }
    }
    for r in 0..q {
        for c in 0..r {
            a[(r, c)] = a[(c, r)];
        }
    }

    if let Some(l) = cholesky(&a) {
        let inv = inverse_from_cholesky(&l);
        let cond = a.norm_one() * inv.norm_one();
        if cond.is_finite() && cond <= COND_LIMIT {
            let beta = inv.matvec(&b);
            return Ok(WlsFit { beta, xtwx_inv: inv, cond, via_qr: false });
        }
    }
    qr_route(x, w, y)
}

// QR of B = diag(√w)·X; solves R β = Qᵀ √w y and returns R⁻¹R⁻ᵀ = (XᵀWX)⁻¹.
fn qr_route(x: &Mat, w: &[f64], y: &[f64]) -> Result<WlsFit, LinalgError> {
    let n = x.rows();
    let q = x.cols();
    let mut b = Mat::zeros(n, q);
    let mut z = vec![0.0; n];
    for i in 0..n {
        let sw = libm::sqrt(w[i].max(0.0));
        for j in 0..q {
            b[(i, j)] = sw * x[(i, j)];
        }
        z[i] = sw * y[i];
    }

    for k in 0..q {
        // Householder vector for column k.
        let mut norm = 0.0;
        for i in k..n {
            norm += b[(i, k)] * b[(i, k)];
        }
        let norm = libm::sqrt(norm);
        if norm == 0.0 {
            return Err(LinalgError::Singular { cond: f64::INFINITY });
        }
        let alpha = if b[(k, k)] >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n - k];
        for i in k..n {
            v[i - k] = b[(i, k)];
        }
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|t| t * t).sum();
        if vtv > 0.0 {
            // Reflect the remaining columns and the response.
            for j in k..q {
                let mut dot = 0.0;
                for i in k..n {
                    dot += v[i - k] * b[(i, j)];
                }
                let f = 2.0 * dot / vtv;
                for i in k..n {
                    b[(i, j)] -= f * v[i - k];
                }
            }
            let mut dot = 0.0;
            for i in k..n {
                dot += v[i - k] * z[i];
            }
            let f = 2.0 * dot / vtv;
            for i in k..n {
                z[i] -= f * v[i - k];
            }
        }
        b[(k, k)] = alpha;
        for i in (k + 1)..n {
            b[(i, k)] = 0.0;
        }
    }

    let mut dmin = f64::INFINITY;
    let mut dmax: f64 = 0.0;
    for k in 0..q {
        let d = libm::fabs(b[(k, k)]);
        dmin = dmin.min(d);
        dmax = dmax.max(d);
    }
    if dmin <= dmax * 1e-13 {
        let cond = if dmin == 0.0 { f64::INFINITY } else { (dmax / dmin) * (dmax / dmin) };
        return Err(LinalgError::Singular { cond });
    }

    // β from R β = (Qᵀz)[..q]
    let mut beta = vec![0.0; q];
    for i in (0..q).rev() {
        let mut s = z[i];
        for j in (i + 1)..q {
            s -= b[(i, j)] * beta[j];
        }
        beta[i] = s / b[(i, i)];
    }

    // (XᵀWX)⁻¹ = R⁻¹ R⁻ᵀ; R⁻¹ is upper triangular, solved column by column.
    let mut rinv = Mat::zeros(q, q);
    for j in 0..q {
        for i in (0..=j).rev() {
            let mut s = if i == j { 1.0 } else { 0.0 };
            for k in (i + 1)..=j {
                s -= b[(i, k)] * rinv[(k, j)];
            }
            rinv[(i, j)] = s / b[(i, i)];
        }
    }
    let mut inv = Mat::zeros(q, q);
    for i in 0..q {
        for j in 0..q {
            let mut s = 0.0;
            for k in 0..q {
                s += rinv[(i, k)] * rinv[(j, k)];
            }
            inv[(i, j)] = s;
        }
    }
    let cond = (dmax / dmin) * (dmax / dmin);
    Ok(WlsFit { beta, xtwx_inv: inv, cond, via_qr: true })
}

/// Sandwich covariance `(XᵀWX)⁻¹ XᵀWVWX (XᵀWX)⁻¹` for nonnegative
/// per-row response variances `v`.
pub fn sandwich_covariance(xtwx_inv: &Mat, x: &Mat, w: &[f64], v: &[f64]) -> Mat {
    let n = x.rows();
    let q = x.cols();
    assert_eq!(w.len(), n);
    assert_eq!(v.len(), n);
    let mut meat = Mat::zeros(q, q);
    for i in 0..n {
        let f = w[i] * w[i] * v[i];
        if f == 0.0 {
            continue;
        }
        for r in 0..q {
            let xr = x[(i, r)] * f;
            for c in r..q {
                meat[(r, c)] += xr * x[(i, c)];
            }
        }
    }
    for r in 0..q {
        for c in 0..r {
            meat[(r, c)] = meat[(c, r)];
        }
    }
    let mut cov = xtwx_inv.matmul(&meat).matmul(xtwx_inv);
    cov.symmetrize();
    cov
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ORACLE_EPS: f64 = 1e-10;

    // Independent route: plain normal equations by Gauss-Jordan with
    // partial pivoting. Deliberately shares no code with `wls`.
    fn gauss_jordan_wls(x: &Mat, w: &[f64], y: &[f64]) -> Vec<f64> {
        let n = x.rows();
        let q = x.cols();
        let mut aug = vec![vec![0.0; q + 1]; q];
        for r in 0..q {
            for c in 0..q {
                let mut s = 0.0;
                for i in 0..n {
                    s += x[(i, r)] * w[i] * x[(i, c)];
                }
                aug[r][c] = s;
            }
            let mut s = 0.0;
            for i in 0..n {
                s += x[(i, r)] * w[i] * y[i];
            }
            aug[r][q] = s;
        }
        for col in 0..q {
            let piv = (col..q)
                .max_by(|&a, &b| aug[a][col].abs().partial_cmp(&aug[b][col].abs()).unwrap())
                .unwrap();
            aug.swap(col, piv);
            let p = aug[col][col];
            for val in aug[col].iter_mut() {
                *val /= p;
            }
            for r in 0..q {
                if r != col {
                    let f = aug[r][col];
                    for c in 0..=q {
                        aug[r][c] -= f * aug[col][c];
                    }
                }
            }
        }
        (0..q).map(|r| aug[r][q]).collect()
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, q: usize) -> (Mat, Vec<f64>, Vec<f64>) {
        let mut x = Mat::zeros(n, q);
        for i in 0..n {
            x[(i, 0)] = 1.0;
            for j in 1..q {
                x[(i, j)] = rng.gen_range(-2.0..2.0);
            }
        }
        let w = (0..n).map(|_| rng.gen_range(0.05..3.0)).collect();
        let y = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        (x, w, y)
    }

    #[test]
    fn wls_matches_gauss_jordan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..200 {
            let n = rng.gen_range(4..=30);
            let q = rng.gen_range(1..=4).min(n);
            let (x, w, y) = random_instance(&mut rng, n, q);
            let fit = wls(&x, &w, &y).unwrap();
            let oracle = gauss_jordan_wls(&x, &w, &y);
            for j in 0..q {
                assert!(
                    (fit.beta[j] - oracle[j]).abs() < ORACLE_EPS,
                    "trial {trial} coeff {j}: {} vs {}",
                    fit.beta[j],
                    oracle[j]
                );
            }
        }
    }

    #[test]
    fn wls_residuals_are_w_orthogonal_to_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(5..=25);
            let (x, w, y) = random_instance(&mut rng, n, 3);
            let fit = wls(&x, &w, &y).unwrap();
            for j in 0..3 {
                let mut s = 0.0;
                for i in 0..n {
                    let fitted: f64 = (0..3).map(|k| x[(i, k)] * fit.beta[k]).sum();
                    s += x[(i, j)] * w[i] * (y[i] - fitted);
                }
                assert!(s.abs() < 1e-9, "gradient {j} = {s}");
            }
        }
    }

    #[test]
    fn wls_is_scale_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (x, w, y) = random_instance(&mut rng, 12, 3);
        let fit = wls(&x, &w, &y).unwrap();
        let y2: Vec<f64> = y.iter().map(|t| t * 8.0).collect();
        let fit2 = wls(&x, &w, &y2).unwrap();
        for j in 0..3 {
            assert_eq!(fit2.beta[j], 8.0 * fit.beta[j]);
        }
    }

    #[test]
    fn qr_fallback_handles_near_collinear_columns() {
        // Third column differs from the second by a tiny quadratic bend:
        // condition far above COND_LIMIT, so the QR route must engage and
        // still fit y exactly when y lies in the column span.
        let n = 10;
        let mut x = Mat::zeros(n, 3);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let t = i as f64 / 10.0;
            x[(i, 0)] = 1.0;
            x[(i, 1)] = t;
            x[(i, 2)] = t + 1e-8 * t * t;
            y[i] = 2.0 + 3.0 * t;
        }
        let w = vec![1.0; n];
        let fit = wls(&x, &w, &y).unwrap();
        assert!(fit.via_qr, "cond={}", fit.cond);
        for i in 0..n {
            let fitted: f64 = (0..3).map(|k| x[(i, k)] * fit.beta[k]).sum();
            assert!((fitted - y[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn singular_design_reports_condition() {
        let mut x = Mat::zeros(6, 2);
        for i in 0..6 {
            x[(i, 0)] = 1.0;
            x[(i, 1)] = 0.0; // identically zero column
        }
        let w = vec![1.0; 6];
        let y = vec![1.0; 6];
        match wls(&x, &w, &y) {
            Err(LinalgError::Singular { cond }) => assert!(cond > COND_LIMIT),
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn underdetermined_is_rejected() {
        let x = Mat::zeros(2, 3);
        assert!(matches!(
            wls(&x, &[1.0, 1.0], &[0.0, 0.0]),
            Err(LinalgError::Underdetermined { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn sandwich_reduces_to_classic_form_for_unit_weights() {
        // With W = I and V = σ²I the sandwich is σ²(XᵀX)⁻¹.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (x, _, y) = random_instance(&mut rng, 15, 3);
        let w = vec![1.0; 15];
        let fit = wls(&x, &w, &y).unwrap();
        let v = vec![0.7; 15];
        let cov = sandwich_covariance(&fit.xtwx_inv, &x, &w, &v);
        for i in 0..3 {
            for j in 0..3 {
                assert!((cov[(i, j)] - 0.7 * fit.xtwx_inv[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn covariance_is_symmetric_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..20 {
            let (x, w, y) = random_instance(&mut rng, 14, 3);
            let fit = wls(&x, &w, &y).unwrap();
            let v: Vec<f64> = (0..14).map(|_| rng.gen_range(0.01..2.0)).collect();
            let cov = sandwich_covariance(&fit.xtwx_inv, &x, &w, &v);
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(cov[(i, j)], cov[(j, i)]);
                }
            }
            // PSD check via Cholesky with a tiny jitter for roundoff.
            let mut jittered = cov.clone();
            for i in 0..3 {
                jittered[(i, i)] += 1e-12;
            }
            assert!(cholesky(&jittered).is_some());
        }
    }
}
