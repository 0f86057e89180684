//! Hard and soft projection operators and the similarity scores built on them.
//!
//! A span matrix `X` (d×n) defines the subspace `span(X)`. Its orthogonal
//! projector is `X (XᵀX)† Xᵀ`; the soft projector replaces the pseudoinverse
//! by `(XᵀX + Λ)⁻¹` with `Λ ≻ 0`, which shrinks every eigenvalue `σ²` of the
//! Gram matrix to `σ² / (σ² + λ) ∈ (0, 1)`. The trace of either is the
//! (effective) dimension of the subspace.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::autodiff::{Tape, Var};
use crate::linalg::{self, Matrix};
use crate::{Error, Result};

/// Traces at or below this value make the inclusion score undefined.
pub const DEGENERATE_TRACE: f64 = 1e-12;

/// The d×n matrix whose columns span a concept subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanMatrix {
    x: Matrix,
}

impl SpanMatrix {
    pub fn new(x: Matrix) -> Result<Self> {
        if x.rows() == 0 || x.cols() == 0 {
            return Err(Error::BadShape {
                rows: x.rows(),
                cols: x.cols(),
                len: x.as_slice().len(),
            });
        }
        if !x.is_finite() {
            return Err(Error::NonFinite {
                what: "span matrix".into(),
            });
        }
        Ok(Self { x })
    }

    /// Ambient dimension.
    pub fn d(&self) -> usize {
        self.x.rows()
    }

    /// Number of spanning vectors.
    pub fn n(&self) -> usize {
        self.x.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.x
    }

    pub fn matrix_mut(&mut self) -> &mut Matrix {
        &mut self.x
    }

    pub fn into_matrix(self) -> Matrix {
        self.x
    }
}

/// Diagonal of the Tikhonov term `Λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Regularizer {
    lambda_diag: Vec<f64>,
}

impl Regularizer {
    /// `Λ = diag(lambda_diag)`; every entry must be finite and strictly positive.
    pub fn new(lambda_diag: Vec<f64>) -> Result<Self> {
        if lambda_diag.is_empty() {
            return Err(Error::InvalidRegularizer("empty diagonal".into()));
        }
        if let Some(bad) = lambda_diag.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidRegularizer(format!(
                "entries must be positive and finite, found {bad}"
            )));
        }
        Ok(Self { lambda_diag })
    }

    /// `Λ = λ I_n`.
    pub fn isotropic(n: usize, lambda: f64) -> Result<Self> {
        Self::new(vec![lambda; n])
    }

    pub fn diag(&self) -> &[f64] {
        &self.lambda_diag
    }

    pub fn len(&self) -> usize {
        self.lambda_diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda_diag.is_empty()
    }
}

/// A symmetric d×d operator representing a subspace: an orthogonal projector,
/// a soft projector, or a lattice combination of those.
#[derive(Debug, Clone)]
pub struct Projector {
    p: Matrix,
    /// Set when this operator was built as `I − M`; keeps `M` so that a
    /// second complement returns it bit for bit.
    complement_of: Option<Box<Matrix>>,
}

impl PartialEq for Projector {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
    }
}

impl Projector {
    /// Wraps a square matrix, symmetrizing it. Fails if it is visibly
    /// asymmetric (beyond 1e-9) or not finite.
    pub fn from_matrix(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                op: "projector",
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        if !m.is_finite() {
            return Err(Error::NonFinite {
                what: "projector".into(),
            });
        }
        let asym = m.max_asymmetry();
        if asym > 1e-9 {
            return Err(Error::NotSymmetric {
                max_asymmetry: asym,
            });
        }
        Ok(Self::raw(m.symmetrize()?))
    }

    pub fn zero(d: usize) -> Self {
        Self::raw(Matrix::zeros(d, d))
    }

    pub fn identity(d: usize) -> Self {
        Self::raw(Matrix::identity(d))
    }

    /// Orthogonal projector onto the line through `v` (normalized internally).
    pub fn line(v: &[f64]) -> Result<Self> {
        let x = SpanMatrix::new(Matrix::column(v))?;
        hard_projector(&x, linalg::DEFAULT_RANK_TOL)
    }

    pub(crate) fn raw(p: Matrix) -> Self {
        Self {
            p,
            complement_of: None,
        }
    }

    /// `I − P`. Applying it twice returns the original operator exactly.
    pub fn complement(&self) -> Projector {
        if let Some(orig) = &self.complement_of {
            return Projector::raw((**orig).clone());
        }
        let d = self.dim();
        let mut out = Matrix::identity(d);
        for (o, v) in out.as_mut_slice().iter_mut().zip(self.p.as_slice()) {
            *o -= v;
        }
        Projector {
            p: out,
            complement_of: Some(Box::new(self.p.clone())),
        }
    }

    pub fn dim(&self) -> usize {
        self.p.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.p
    }

    pub fn into_matrix(self) -> Matrix {
        self.p
    }

    /// `‖P² − P‖_F`.
    pub fn idempotence_residual(&self) -> f64 {
        let p2 = self.p.matmul(&self.p).expect("square");
        p2.sub(&self.p).expect("same shape").frobenius_norm()
    }

    /// Eigenvalues in descending order.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        Ok(linalg::sym_eig(&self.p)?.values)
    }

    pub(crate) fn check_dims(&self, other: &Projector, op: &'static str) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                op,
                left_rows: self.dim(),
                left_cols: self.dim(),
                right_rows: other.dim(),
                right_cols: other.dim(),
            });
        }
        Ok(())
    }
}

/// `X (XᵀX)† Xᵀ`, the orthogonal projector onto `span(X)`.
pub fn hard_projector(x: &SpanMatrix, rank_tol: f64) -> Result<Projector> {
    let xm = x.matrix();
    let xt = xm.transpose();
    let gram = xt.matmul(xm)?;
    let pinv = linalg::pseudoinverse(&gram, rank_tol)?;
    let p = xm.matmul(&pinv)?.matmul(&xt)?;
    Ok(Projector::raw(p.symmetrize()?))
}

/// `X (XᵀX + Λ)⁻¹ Xᵀ`. Eigenvalues lie in `[0, 1)`.
pub fn soft_projector(x: &SpanMatrix, reg: &Regularizer) -> Result<Projector> {
    if reg.len() != x.n() {
        return Err(Error::InvalidRegularizer(format!(
            "regularizer has {} entries but span matrix has {} columns",
            reg.len(),
            x.n()
        )));
    }
    let xm = x.matrix();
    let xt = xm.transpose();
    let m = xt.matmul(xm)?.add_diag(reg.diag())?;
    let z = linalg::spd_solve(&m, &xt)?;
    let p = xm.matmul(&z)?;
    Ok(Projector::raw(p.symmetrize()?))
}

/// Orthogonal projector onto the eigenvectors of `p` whose eigenvalue
/// exceeds `cut`. Turns a soft projector into a hard one.
pub fn harden(p: &Projector, cut: f64) -> Result<Projector> {
    let eig = linalg::sym_eig(&p.p)?;
    let hard = eig.reconstruct_with(|mu| if mu > cut { 1.0 } else { 0.0 });
    Ok(Projector::raw(hard.symmetrize()?))
}

/// Subspace similarity `tr(P Q)`, computed as `vec(P)·vec(Q)` so that it is
/// exactly symmetric in its arguments.
pub fn overlap(p: &Projector, q: &Projector) -> Result<f64> {
    p.check_dims(q, "overlap")?;
    p.p.dot(&q.p)
}

/// `tr(P)`.
pub fn effective_dim(p: &Projector) -> f64 {
    p.p.trace().expect("projectors are square")
}

/// Normalized inclusion score `tr(P_i P_j) / tr(P_i)`: how much of subspace
/// `i` lies inside subspace `j`. Equals 1 for hard projectors iff `i ⊆ j`.
pub fn inclusion_score(p_i: &Projector, p_j: &Projector) -> Result<f64> {
    let denom = effective_dim(p_i);
    if !(denom > DEGENERATE_TRACE) {
        return Err(Error::DegenerateSubspace {
            trace: denom,
            threshold: DEGENERATE_TRACE,
        });
    }
    Ok(overlap(p_i, p_j)? / denom)
}

/// `span(inner) ⊆ span(outer)`, decided as `‖P_outer P_inner − P_inner‖_F ≤ tol`.
///
/// Both operators must be idempotent within `tol`.
pub fn is_subspace_of(inner: &Projector, outer: &Projector, tol: f64) -> Result<bool> {
    inner.check_dims(outer, "is_subspace_of")?;
    for p in [inner, outer] {
        let residual = p.idempotence_residual();
        if residual > tol {
            return Err(Error::NotIdempotent { residual });
        }
    }
    let resid = outer.p.matmul(&inner.p)?.sub(&inner.p)?.frobenius_norm();
    Ok(resid <= tol)
}

/// Records `X (XᵀX + Λ)⁻¹ Xᵀ` on a tape.
pub fn record_soft_projector(tape: &mut Tape, x: Var, reg: &Regularizer) -> Result<Var> {
    let xt = tape.transpose(x)?;
    let gram = tape.matmul(xt, x)?;
    let m = tape.add_diag(gram, reg.diag())?;
    let inv = tape.spd_inverse(m)?;
    let xi = tape.matmul(x, inv)?;
    tape.matmul(xi, xt)
}

/// Records `tr(P Q)` on a tape.
pub fn record_overlap(tape: &mut Tape, p: Var, q: Var) -> Result<Var> {
    tape.trace_product(p, q)
}

/// Records `tr(P_i P_j) / tr(P_i)` on a tape.
pub fn record_inclusion_score(tape: &mut Tape, p_i: Var, p_j: Var) -> Result<Var> {
    let num = tape.trace_product(p_i, p_j)?;
    let den = tape.trace(p_i)?;
    tape.div(num, den)
}
