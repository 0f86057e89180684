//! Dense row-major linear algebra in double precision.
//!
//! Sizes in this crate are small (d ≤ 256), so everything here is a plain
//! dense kernel: Cholesky for symmetric positive-definite solves, cyclic
//! Jacobi for the symmetric eigenproblem, and an eigen-based pseudoinverse.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::math;
use crate::{Error, Result};

/// Default relative cutoff below which eigenvalues count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Tolerance used when a routine requires a symmetric input.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from equal-length rows.
    ///
    /// Panics if the rows are ragged; intended for literals and tests.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// Column vector from a slice.
    pub fn column(values: &[f64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            rows: 1,
            cols: 1,
            data: vec![value],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Value of a 1×1 matrix (or the first entry otherwise).
    pub fn to_scalar(&self) -> f64 {
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        matmul(self, other)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with("add", other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with("sub", other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        self.map(|v| v * factor)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(
        &self,
        op: &'static str,
        other: &Matrix,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix> {
        self.check_same_shape(op, other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &Matrix) -> Result<()> {
        self.check_same_shape("add_assign", other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn check_same_shape(&self, op: &'static str, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(self.mismatch(op, other));
        }
        Ok(())
    }

    fn mismatch(&self, op: &'static str, other: &Matrix) -> Error {
        Error::DimensionMismatch {
            op,
            left_rows: self.rows,
            left_cols: self.cols,
            right_rows: other.rows,
            right_cols: other.cols,
        }
    }

    fn require_square(&self, op: &'static str) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                op,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    /// Sum of the diagonal. Requires a square matrix.
    pub fn trace(&self) -> Result<f64> {
        self.require_square("trace")?;
        Ok((0..self.rows).map(|i| self[(i, i)]).sum())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    /// Elementwise (Frobenius) inner product `Σ a_ij b_ij`.
    pub fn dot(&self, other: &Matrix) -> Result<f64> {
        self.check_same_shape("dot", other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(math::abs(v)))
    }

    /// Largest `|m_ij - m_ji|`; zero for non-square inputs is never returned,
    /// non-square matrices report infinity.
    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max(math::abs(self[(i, j)] - self[(j, i)]));
            }
        }
        worst
    }

    /// `(M + Mᵀ) / 2`, exactly symmetric.
    pub fn symmetrize(&self) -> Result<Matrix> {
        self.require_square("symmetrize")?;
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(out)
    }

    /// Returns `self + diag(values)`.
    pub fn add_diag(&self, values: &[f64]) -> Result<Matrix> {
        self.require_square("add_diag")?;
        if values.len() != self.rows {
            return Err(Error::DimensionMismatch {
                op: "add_diag",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: values.len(),
                right_cols: values.len(),
            });
        }
        let mut out = self.clone();
        for (i, v) in values.iter().enumerate() {
            out[(i, i)] += v;
        }
        Ok(out)
    }

    fn require_symmetric(&self, op: &'static str) -> Result<()> {
        self.require_square(op)?;
        let asym = self.max_asymmetry();
        // Relative to the matrix scale so large well-formed inputs pass.
        if asym > SYMMETRY_TOL * self.max_abs().max(1.0) {
            return Err(Error::NotSymmetric {
                max_asymmetry: asym,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Standard matrix product.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(a.mismatch("matmul", b));
    }
    let (n, m, p) = (a.rows, a.cols, b.cols);
    let mut out = vec![0.0; n * p];
    for i in 0..n {
        let row = &mut out[i * p..(i + 1) * p];
        for k in 0..m {
            let aik = a.data[i * m + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b.data[k * p..(k + 1) * p];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
    Ok(Matrix {
        rows: n,
        cols: p,
        data: out,
    })
}

/// `tr(A B)` without forming the product.
pub fn trace_of_product(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.cols != b.rows || a.rows != b.cols {
        return Err(a.mismatch("trace_of_product", b));
    }
    let mut acc = 0.0;
    for i in 0..a.rows {
        for k in 0..a.cols {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    Ok(acc)
}

/// Lower-triangular Cholesky factor `L` with `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn factor(m: &Matrix) -> Result<Self> {
        m.require_symmetric("cholesky")?;
        let n = m.rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut diag = m[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    index: j,
                    pivot: diag,
                });
            }
            let ljj = math::sqrt(diag);
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    /// Solves `M Z = rhs` column by column.
    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix> {
        let n = self.l.rows;
        if rhs.rows != n {
            return Err(self.l.mismatch("spd_solve", rhs));
        }
        let mut z = rhs.clone();
        let cols = rhs.cols;
        for c in 0..cols {
            // forward: L y = b
            for i in 0..n {
                let mut s = z[(i, c)];
                for k in 0..i {
                    s -= self.l[(i, k)] * z[(k, c)];
                }
                z[(i, c)] = s / self.l[(i, i)];
            }
            // backward: Lᵀ x = y
            for i in (0..n).rev() {
                let mut s = z[(i, c)];
                for k in (i + 1)..n {
                    s -= self.l[(k, i)] * z[(k, c)];
                }
                z[(i, c)] = s / self.l[(i, i)];
            }
        }
        Ok(z)
    }

    /// `M⁻¹`, symmetrized.
    pub fn inverse(&self) -> Result<Matrix> {
        self.solve(&Matrix::identity(self.l.rows))?.symmetrize()
    }
}

/// Solves `m Z = rhs` for symmetric positive-definite `m` via Cholesky.
pub fn spd_solve(m: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    Cholesky::factor(m)?.solve(rhs)
}

/// Symmetric eigendecomposition.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, aligned with `values`.
    pub vectors: Matrix,
}

impl SymEig {
    /// `V diag(w) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        self.reconstruct_with(|w| w)
    }

    /// `V diag(f(w)) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.vectors.rows;
        let mut out = Matrix::zeros(n, n);
        for (k, &w) in self.values.iter().enumerate() {
            let fw = f(w);
            if fw == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, k)] * fw;
                if vi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, k)];
                }
            }
        }
        out
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eig(m: &Matrix) -> Result<SymEig> {
    m.require_symmetric("sym_eig")?;
    if !m.is_finite() {
        return Err(Error::NonFinite {
            what: "sym_eig input".into(),
        });
    }
    let n = m.rows;
    let mut a = m.symmetrize()?;
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();
    if n > 1 && scale > 0.0 {
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
            if math::sqrt(off) <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = {
                        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                        sign / (math::abs(theta) + math::hypot(theta, 1.0))
                    };
                    let c = 1.0 / math::sqrt(t * t + 1.0);
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(SymEig { values, vectors })
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix.
///
/// Eigenvalues at or below `rank_tol * λ_max` are treated as zero.
pub fn pseudoinverse(m: &Matrix, rank_tol: f64) -> Result<Matrix> {
    let eig = sym_eig(m)?;
    let top = eig.values.iter().fold(0.0f64, |a, &w| a.max(math::abs(w)));
    let cutoff = rank_tol * top;
    eig.reconstruct_with(|w| {
        if top > 0.0 && w > cutoff {
            1.0 / w
        } else {
            0.0
        }
    })
    .symmetrize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Matrix::new(rows, cols, data).unwrap()
    }

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let a = random(n, n, rng);
        a.matmul(&a.transpose())
            .unwrap()
            .add_diag(&vec![0.5; n])
            .unwrap()
            .symmetrize()
            .unwrap()
    }

    #[test]
    fn matmul_identity_zero_and_literal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random(3, 3, &mut rng);
        assert_eq!(Matrix::identity(3).matmul(&a).unwrap(), a);
        assert_eq!(a.matmul(&Matrix::zeros(3, 3)).unwrap(), Matrix::zeros(3, 3));
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let y = Matrix::from_rows(&[[5.0, 6.0], [7.0, 8.0]]);
        assert_eq!(
            x.matmul(&y).unwrap(),
            Matrix::from_rows(&[[19.0, 22.0], [43.0, 50.0]])
        );
    }

    #[test]
    fn matmul_shape_error_reports_both_shapes() {
        let err = matmul(&Matrix::zeros(2, 3), &Matrix::zeros(2, 3)).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                op: "matmul",
                left_rows: 2,
                left_cols: 3,
                right_rows: 2,
                right_cols: 3
            }
        );
    }

    #[test]
    fn spd_solve_cases() {
        let b = Matrix::column(&[3.0, -1.0]);
        assert_eq!(spd_solve(&Matrix::identity(2), &b).unwrap(), b);
        let z = spd_solve(
            &Matrix::from_diag(&[2.0, 4.0]),
            &Matrix::column(&[2.0, 4.0]),
        )
        .unwrap();
        assert!(z.sub(&Matrix::column(&[1.0, 1.0])).unwrap().max_abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_spd(8, &mut rng);
        let b = random(8, 1, &mut rng);
        let z = spd_solve(&m, &b).unwrap();
        let resid = m.matmul(&z).unwrap().sub(&b).unwrap().frobenius_norm();
        assert!(resid / b.frobenius_norm() <= 1e-8);
    }

    #[test]
    fn spd_solve_round_trip_up_to_128() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1usize, 5, 32, 128] {
            let m = random_spd(n, &mut rng);
            let b = random(n, 3, &mut rng);
            let z = spd_solve(&m, &b).unwrap();
            let resid = m.matmul(&z).unwrap().sub(&b).unwrap().frobenius_norm();
            assert!(resid <= 1e-8 * b.frobenius_norm(), "n={n} resid={resid}");
        }
    }

    #[test]
    fn cholesky_reports_failing_pivot() {
        let m = Matrix::from_diag(&[1.0, -2.0, 3.0]);
        match spd_solve(&m, &Matrix::column(&[1.0, 1.0, 1.0])) {
            Err(Error::NotPositiveDefinite { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sym_eig_cases() {
        let e = sym_eig(&Matrix::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        let e = sym_eig(&Matrix::identity(4)).unwrap();
        assert!(e.values.iter().all(|&w| w == 1.0));

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random(6, 6, &mut rng);
        let m = a.add(&a.transpose()).unwrap();
        let e = sym_eig(&m).unwrap();
        let err = e.reconstruct().sub(&m).unwrap().frobenius_norm();
        assert!(err <= 1e-8 * m.frobenius_norm());
        let vtv = e.vectors.transpose().matmul(&e.vectors).unwrap();
        assert!(vtv.sub(&Matrix::identity(6)).unwrap().max_abs() <= 1e-8);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn sym_eig_rejects_asymmetric() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]);
        assert_eq!(
            sym_eig(&m).unwrap_err(),
            Error::NotSymmetric { max_asymmetry: 2.0 }
        );
    }

    fn penrose_residual(m: &Matrix, p: &Matrix) -> f64 {
        let mpm = m.matmul(p).unwrap().matmul(m).unwrap();
        let pmp = p.matmul(m).unwrap().matmul(p).unwrap();
        let mp = m.matmul(p).unwrap();
        let pm = p.matmul(m).unwrap();
        [
            mpm.sub(m).unwrap().max_abs(),
            pmp.sub(p).unwrap().max_abs(),
            mp.max_asymmetry(),
            pm.max_asymmetry(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    #[test]
    fn pseudoinverse_cases() {
        let p = pseudoinverse(&Matrix::from_diag(&[2.0, 0.0]), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(p, Matrix::from_diag(&[0.5, 0.0]));
        let p = pseudoinverse(&Matrix::identity(3), DEFAULT_RANK_TOL).unwrap();
        assert!(p.sub(&Matrix::identity(3)).unwrap().max_abs() < 1e-14);

        // rank one: (vvᵀ)† = vvᵀ / ‖v‖⁴ with ‖v‖ = 2
        let v = Matrix::column(&[2.0 * 0.6, 2.0 * 0.8]);
        let m = v.matmul(&v.transpose()).unwrap();
        let p = pseudoinverse(&m, DEFAULT_RANK_TOL).unwrap();
        assert!(p.sub(&m.scale(1.0 / 16.0)).unwrap().max_abs() < 1e-12);
        assert!(penrose_residual(&m, &p) < 1e-7);
    }

    #[test]
    fn pseudoinverse_penrose_on_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let d = rng.random_range(2..=20usize);
            let r = rng.random_range(1..=d.min(16));
            let x = random(d, r, &mut rng);
            let m = x.matmul(&x.transpose()).unwrap().symmetrize().unwrap();
            let p = pseudoinverse(&m, DEFAULT_RANK_TOL).unwrap();
            assert!(penrose_residual(&m, &p) < 1e-7);
        }
    }

    #[test]
    fn trace_of_product_matches_matmul() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random(4, 3, &mut rng);
        let b = random(3, 4, &mut rng);
        let direct = a.matmul(&b).unwrap().trace().unwrap();
        assert!((trace_of_product(&a, &b).unwrap() - direct).abs() < 1e-14);
    }
}
