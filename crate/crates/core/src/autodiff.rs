//! Tape-based reverse-mode differentiation over matrices.
//!
//! Every primitive records its forward value on a [`Tape`]; [`Tape::backward`]
//! walks the tape once in reverse, accumulating adjoints. Tapes are built per
//! loss evaluation and dropped afterwards.
//!
//! ```
//! use subspace_core::autodiff::Tape;
//! use subspace_core::Matrix;
//!
//! let mut tape = Tape::new();
//! let x = tape.leaf(Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]));
//! let xt = tape.transpose(x).unwrap();
//! let loss = tape.trace_product(xt, x).unwrap(); // tr(XᵀX)
//! let grads = tape.backward(loss).unwrap();
//! assert_eq!(grads.get(x).unwrap(), &tape.value(x).scale(2.0));
//! ```

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::linalg::{self, Cholesky, Matrix};
use crate::math;
use crate::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    AddDiag(Var),
    Transpose(Var),
    Trace(Var),
    TraceProduct(Var, Var),
    SpdInverse(Var),
    Div(Var, Var),
    Exp(Var),
    Ln(Var),
    Relu(Var),
    Sigmoid(Var),
    Sum(Vec<Var>),
    LogSumExp(Vec<Var>),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Matrix,
    requires_grad: bool,
}

/// Recorded computation. Nodes are stored in creation order, which is a
/// topological order since inputs must exist before the op that uses them.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar loss with respect to the differentiable leaves.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradients {
    by_node: BTreeMap<usize, Matrix>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&Matrix> {
        self.by_node.get(&var.0)
    }

    pub fn remove(&mut self, var: Var) -> Option<Matrix> {
        self.by_node.remove(&var.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Matrix)> {
        self.by_node.iter().map(|(&k, v)| (k, v))
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Differentiable input.
    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(Op::Leaf, value, true)
    }

    /// Non-differentiable input.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(Op::Leaf, value, false)
    }

    pub fn value(&self, var: Var) -> &Matrix {
        &self.nodes[var.0].value
    }

    /// Scalar value of a 1×1 node.
    pub fn scalar(&self, var: Var) -> f64 {
        self.nodes[var.0].value.to_scalar()
    }

    fn push(&mut self, op: Op, value: Matrix, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn node(&self, var: Var) -> Result<&Node> {
        self.nodes.get(var.0).ok_or(Error::UnknownVar(var.0))
    }

    fn grad_flag(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    fn require_scalar(&self, var: Var) -> Result<()> {
        let (rows, cols) = self.node(var)?.value.shape();
        if (rows, cols) != (1, 1) {
            return Err(Error::NotScalar { rows, cols });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.node(a)?.value.matmul(&self.node(b)?.value)?;
        let rg = self.grad_flag(&[a, b]);
        Ok(self.push(Op::MatMul(a, b), value, rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.node(a)?.value.add(&self.node(b)?.value)?;
        let rg = self.grad_flag(&[a, b]);
        Ok(self.push(Op::Add(a, b), value, rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.node(a)?.value.sub(&self.node(b)?.value)?;
        let rg = self.grad_flag(&[a, b]);
        Ok(self.push(Op::Sub(a, b), value, rg))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        let value = self.node(a)?.value.scale(factor);
        let rg = self.grad_flag(&[a]);
        Ok(self.push(Op::Scale(a, factor), value, rg))
    }

    /// Adds a constant to every entry.
    pub fn add_scalar(&mut self, a: Var, c: f64) -> Result<Var> {
        let value = self.node(a)?.value.map(|v| v + c);
        let rg = self.grad_flag(&[a]);
        Ok(self.push(Op::AddScalar(a), value, rg))
    }

    /// Adds a constant diagonal to a square matrix.
    pub fn add_diag(&mut self, a: Var, diag: &[f64]) -> Result<Var> {
        let value = self.node(a)?.value.add_diag(diag)?;
        let rg = self.grad_flag(&[a]);
        Ok(self.push(Op::AddDiag(a), value, rg))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let value = self.node(a)?.value.transpose();
        let rg = self.grad_flag(&[a]);
        Ok(self.push(Op::Transpose(a), value, rg))
    }

    pub fn trace(&mut self, a: Var) -> Result<Var> {
        let t = self.node(a)?.value.trace()?;
        let rg = self.grad_flag(&[a]);
        Ok(self.push(Op::Trace(a), Matrix::scalar(t), rg))
    }

    /// `tr(A B)` as a fused op.
    pub fn trace_product(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = linalg::trace_of_product(&self.node(a)?.value, &self.node(b)?.value)?;
        let rg = self.grad_flag(&[a, b]);
        Ok(self.push(Op::TraceProduct(a, b), Matrix::scalar(t), rg))
    }

    /// Inverse of a symmetric positive-definite matrix.
    ///
    /// The pullback reuses the forward inverse: `Ā = −M⁻ᵀ Ḡ M⁻ᵀ`.
    pub fn spd_inverse(&mut self, m: Var) -> Result<Var> {
        let inv = Cholesky::factor(&self.node(m)?.value)?.inverse()?;
        let rg = self.grad_flag(&[m]);
        Ok(self.push(Op::SpdInverse(m), inv, rg))
    }

    /// Ratio of two scalars.
    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.require_scalar(a)?;
        self.require_scalar(b)?;
        let value = Matrix::scalar(self.scalar(a) / self.scalar(b));
        let rg = self.grad_flag(&[a, b]);
        Ok(self.push(Op::Div(a, b), value, rg))
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        let value = self.node(a)?.value.map(math::exp);
        let rg = self.grad_flag(&[a]);
        Ok(self.push(Op::Exp(a), value, rg))
    }

    pub fn ln(&mut self, a: Var) -> Result<Var> {
        let value = self.node(a)?.value.map(math::ln);
        let rg = self.grad_flag(&[a]);
        Ok(self.push(Op::Ln(a), value, rg))
    }

    /// Elementwise `max(x, 0)`; the derivative at exactly zero is taken as 0.
    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let value = self.node(a)?.value.map(|v| if v > 0.0 { v } else { 0.0 });
        let rg = self.grad_flag(&[a]);
        Ok(self.push(Op::Relu(a), value, rg))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let value = self.node(a)?.value.map(sigmoid);
        let rg = self.grad_flag(&[a]);
        Ok(self.push(Op::Sigmoid(a), value, rg))
    }

    /// Sum of same-shaped values. An empty list yields a scalar zero.
    pub fn sum(&mut self, vars: &[Var]) -> Result<Var> {
        let mut acc = match vars.first() {
            Some(&v) => self.node(v)?.value.clone(),
            None => Matrix::scalar(0.0),
        };
        for &v in vars.iter().skip(1) {
            acc.add_assign(&self.node(v)?.value)?;
        }
        let rg = self.grad_flag(vars);
        Ok(self.push(Op::Sum(vars.to_vec()), acc, rg))
    }

    /// Numerically stable `log Σ exp(x_k)` over scalars.
    pub fn logsumexp(&mut self, vars: &[Var]) -> Result<Var> {
        if vars.is_empty() {
            return Err(Error::InvalidConfig("logsumexp of an empty list".into()));
        }
        for &v in vars {
            self.require_scalar(v)?;
        }
        let xs: Vec<f64> = vars.iter().map(|&v| self.scalar(v)).collect();
        let value = Matrix::scalar(logsumexp(&xs));
        let rg = self.grad_flag(vars);
        Ok(self.push(Op::LogSumExp(vars.to_vec()), value, rg))
    }

    /// Reverse pass from a scalar loss.
    ///
    /// Returns gradients for every differentiable leaf reachable from `loss`.
    /// Leaves the loss does not depend on get a zero gradient.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        self.require_scalar(loss)?;
        let mut adj: Vec<Option<Matrix>> = alloc::vec![None; loss.0 + 1];
        adj[loss.0] = Some(Matrix::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = adj[idx].take() else { continue };
            if let Op::Leaf = node.op {
                adj[idx] = Some(g);
                continue;
            }
            self.pullback(node, &g, &mut adj)?;
        }

        let mut by_node = BTreeMap::new();
        for (idx, node) in self.nodes.iter().enumerate().take(loss.0 + 1) {
            if matches!(node.op, Op::Leaf) && node.requires_grad {
                let (r, c) = node.value.shape();
                let g = adj[idx].take().unwrap_or_else(|| Matrix::zeros(r, c));
                by_node.insert(idx, g);
            }
        }
        // Leaves created after the loss cannot influence it.
        for (idx, node) in self.nodes.iter().enumerate().skip(loss.0 + 1) {
            if matches!(node.op, Op::Leaf) && node.requires_grad {
                let (r, c) = node.value.shape();
                by_node.insert(idx, Matrix::zeros(r, c));
            }
        }
        Ok(Gradients { by_node })
    }

    fn pullback(&self, node: &Node, g: &Matrix, adj: &mut [Option<Matrix>]) -> Result<()> {
        let mut acc = |var: Var, contrib: Matrix| -> Result<()> {
            if !self.nodes[var.0].requires_grad {
                return Ok(());
            }
            match &mut adj[var.0] {
                Some(existing) => existing.add_assign(&contrib),
                slot @ None => {
                    *slot = Some(contrib);
                    Ok(())
                }
            }
        };
        let val = |v: Var| &self.nodes[v.0].value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.nodes[a.0].requires_grad {
                    acc(*a, g.matmul(&val(*b).transpose())?)?;
                }
                if self.nodes[b.0].requires_grad {
                    acc(*b, val(*a).transpose().matmul(g)?)?;
                }
            }
            Op::Add(a, b) => {
                acc(*a, g.clone())?;
                acc(*b, g.clone())?;
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone())?;
                acc(*b, g.scale(-1.0))?;
            }
            Op::Scale(a, f) => acc(*a, g.scale(*f))?,
            Op::AddScalar(a) | Op::AddDiag(a) => acc(*a, g.clone())?,
            Op::Transpose(a) => acc(*a, g.transpose())?,
            Op::Trace(a) => {
                let n = val(*a).rows();
                acc(*a, Matrix::identity(n).scale(g.to_scalar()))?;
            }
            Op::TraceProduct(a, b) => {
                let s = g.to_scalar();
                if self.nodes[a.0].requires_grad {
                    acc(*a, val(*b).transpose().scale(s))?;
                }
                if self.nodes[b.0].requires_grad {
                    acc(*b, val(*a).transpose().scale(s))?;
                }
            }
            Op::SpdInverse(m) => {
                let inv_t = node.value.transpose();
                let contrib = inv_t.matmul(g)?.matmul(&inv_t)?.scale(-1.0);
                acc(*m, contrib)?;
            }
            Op::Div(a, b) => {
                let (av, bv, s) = (val(*a).to_scalar(), val(*b).to_scalar(), g.to_scalar());
                acc(*a, Matrix::scalar(s / bv))?;
                acc(*b, Matrix::scalar(-s * av / (bv * bv)))?;
            }
            Op::Exp(a) => acc(*a, g.zip_with("exp", &node.value, |gi, e| gi * e)?)?,
            Op::Ln(a) => acc(*a, g.zip_with("ln", val(*a), |gi, x| gi / x)?)?,
            Op::Relu(a) => acc(
                *a,
                g.zip_with("relu", val(*a), |gi, x| if x > 0.0 { gi } else { 0.0 })?,
            )?,
            Op::Sigmoid(a) => acc(
                *a,
                g.zip_with("sigmoid", &node.value, |gi, s| gi * s * (1.0 - s))?,
            )?,
            Op::Sum(vars) => {
                for &v in vars {
                    acc(v, g.clone())?;
                }
            }
            Op::LogSumExp(vars) => {
                let total = node.value.to_scalar();
                let s = g.to_scalar();
                for &v in vars {
                    let w = math::exp(val(v).to_scalar() - total);
                    acc(v, Matrix::scalar(s * w))?;
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + math::exp(-x))
    } else {
        let e = math::exp(x);
        e / (1.0 + e)
    }
}

pub(crate) fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + math::ln(xs.iter().map(|&x| math::exp(x - m)).sum::<f64>())
}

/// Central-difference gradient of `f` at `x`.
pub fn numerical_gradient(f: impl Fn(&Matrix) -> f64, x: &Matrix, step: f64) -> Matrix {
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    let mut probe = x.clone();
    for k in 0..x.as_slice().len() {
        let orig = probe.as_slice()[k];
        probe.as_mut_slice()[k] = orig + step;
        let up = f(&probe);
        probe.as_mut_slice()[k] = orig - step;
        let down = f(&probe);
        probe.as_mut_slice()[k] = orig;
        grad.as_mut_slice()[k] = (up - down) / (2.0 * step);
    }
    grad
}

/// Compares an analytic gradient with central differences of `f`.
///
/// Returns the largest entrywise `|g_fd − g| / max(|g|, 1e-8)`.
pub fn finite_difference_check(
    f: impl Fn(&Matrix) -> f64,
    x: &Matrix,
    analytic: &Matrix,
    step: f64,
) -> f64 {
    let numeric = numerical_gradient(f, x, step);
    numeric
        .as_slice()
        .iter()
        .zip(analytic.as_slice())
        .map(|(&n, &a)| math::abs(n - a) / math::abs(a).max(1e-8))
        .fold(0.0, f64::max)
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
            .add_diag(&alloc::vec![1.0; n])
            .unwrap()
            .symmetrize()
            .unwrap()
    }

    #[test]
    fn trace_of_identity_and_its_gradient() {
        let mut tape = Tape::new();
        let a = tape.leaf(Matrix::identity(4));
        let t = tape.trace(a).unwrap();
        assert_eq!(tape.scalar(t), 4.0);
        let g = tape.backward(t).unwrap();
        assert_eq!(g.get(a).unwrap(), &Matrix::identity(4));
    }

    #[test]
    fn trace_of_product_gradient_is_b_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a0 = random(3, 3, &mut rng);
        let b0 = random(3, 3, &mut rng);
        let mut tape = Tape::new();
        let a = tape.leaf(a0.clone());
        let b = tape.constant(b0.clone());
        let ab = tape.matmul(a, b).unwrap();
        let t = tape.trace(ab).unwrap();
        let g = tape.backward(t).unwrap();
        let ga = g.get(a).unwrap();
        assert!(ga.sub(&b0.transpose()).unwrap().max_abs() < 1e-14);
        let f = |x: &Matrix| x.matmul(&b0).unwrap().trace().unwrap();
        assert!(finite_difference_check(f, &a0, ga, 1e-5) < 1e-6);
    }

    #[test]
    fn transpose_gradient_is_transposed() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a0 = random(2, 3, &mut rng);
        let w = random(3, 2, &mut rng);
        // f(Aᵀ) = tr(W' Aᵀ) with W' = wᵀ, so df/dAᵀ = w and df/dA = wᵀ.
        let mut tape = Tape::new();
        let a = tape.leaf(a0);
        let at = tape.transpose(a).unwrap();
        let wc = tape.constant(w.transpose());
        let t = tape.trace_product(wc, at).unwrap();
        let g = tape.backward(t).unwrap();
        assert_eq!(g.get(a).unwrap(), &w.transpose());
    }

    #[test]
    fn spd_inverse_trace_gradients_closed_form() {
        for (diag, expect) in [
            ([1.0, 1.0], [-1.0, -1.0]),
            ([2.0, 4.0], [-0.25, -1.0 / 16.0]),
        ] {
            let mut tape = Tape::new();
            let m = tape.leaf(Matrix::from_diag(&diag));
            let inv = tape.spd_inverse(m).unwrap();
            let t = tape.trace(inv).unwrap();
            let g = tape.backward(t).unwrap();
            let diff = g.get(m).unwrap().sub(&Matrix::from_diag(&expect)).unwrap();
            assert!(diff.max_abs() < 1e-15);
        }
    }

    #[test]
    fn spd_inverse_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m0 = random_spd(5, &mut rng);
        let w = random(5, 5, &mut rng);
        let build = |tape: &mut Tape, m: Var| {
            let inv = tape.spd_inverse(m).unwrap();
            let wc = tape.constant(w.clone());
            let p = tape.matmul(inv, inv).unwrap();
            tape.trace_product(wc, p).unwrap()
        };
        let mut tape = Tape::new();
        let m = tape.leaf(m0.clone());
        let loss = build(&mut tape, m);
        let g = tape.backward(loss).unwrap();
        // Perturb symmetrically: the function is evaluated on (M + Mᵀ)/2 so
        // the oracle and the tape see the same symmetric parameterization.
        let f = |x: &Matrix| {
            let mut t = Tape::new();
            let sym = x.add(&x.transpose()).unwrap().scale(0.5);
            let v = t.constant(sym);
            let l = build(&mut t, v);
            t.scalar(l)
        };
        let gsym = {
            let gm = g.get(m).unwrap();
            gm.add(&gm.transpose()).unwrap().scale(0.5)
        };
        assert!(finite_difference_check(f, &m0, &gsym, 1e-5) <= 1e-5);
    }

    #[test]
    fn gram_trace_gradient_is_two_x() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x0 = random(4, 3, &mut rng);
        let mut tape = Tape::new();
        let x = tape.leaf(x0.clone());
        let xt = tape.transpose(x).unwrap();
        let gram = tape.matmul(xt, x).unwrap();
        let t = tape.trace(gram).unwrap();
        let g = tape.backward(t).unwrap();
        assert!(g.get(x).unwrap().sub(&x0.scale(2.0)).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let mut tape = Tape::new();
        let x = tape.leaf(Matrix::identity(2));
        let c = tape.constant(Matrix::scalar(3.0));
        let loss = tape.exp(c).unwrap();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(x).unwrap(), &Matrix::zeros(2, 2));
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut tape = Tape::new();
        let x = tape.leaf(Matrix::identity(2));
        assert_eq!(
            tape.backward(x).unwrap_err(),
            Error::NotScalar { rows: 2, cols: 2 }
        );
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut tape = Tape::new();
        let a = tape.leaf(Matrix::zeros(2, 3));
        let b = tape.leaf(Matrix::zeros(2, 3));
        assert!(matches!(
            tape.matmul(a, b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn linear_function_check_is_exact_to_rounding() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let x0 = random(4, 4, &mut rng);
        let f = |x: &Matrix| x.trace().unwrap();
        assert!(finite_difference_check(f, &x0, &Matrix::identity(4), 1e-5) <= 1e-9);
    }

    #[test]
    fn scalar_ops_match_finite_differences() {
        let x0 = Matrix::from_rows(&[[0.3, -0.7], [1.1, 0.4]]);
        let build = |tape: &mut Tape, x: Var| {
            let s = tape.sigmoid(x).unwrap();
            let e = tape.exp(x).unwrap();
            let r = tape.relu(x).unwrap();
            let t1 = tape.trace(s).unwrap();
            let t2 = tape.trace(e).unwrap();
            let t3 = tape.trace_product(r, e).unwrap();
            let lt = tape.ln(t2).unwrap();
            let q = tape.div(t1, lt).unwrap();
            let l = tape.logsumexp(&[q, t3, t1]).unwrap();
            let k = tape.add_scalar(l, 2.0).unwrap();
            tape.scale(k, 0.5).unwrap()
        };
        let mut tape = Tape::new();
        let x = tape.leaf(x0.clone());
        let loss = build(&mut tape, x);
        let g = tape.backward(loss).unwrap();
        let f = |m: &Matrix| {
            let mut t = Tape::new();
            let v = t.constant(m.clone());
            let l = build(&mut t, v);
            t.scalar(l)
        };
        assert!(finite_difference_check(f, &x0, g.get(x).unwrap(), 1e-5) <= 1e-6);
    }

    #[test]
    fn backward_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let x0 = random(5, 3, &mut rng);
        let run = || {
            let mut tape = Tape::new();
            let x = tape.leaf(x0.clone());
            let xt = tape.transpose(x).unwrap();
            let gram = tape.matmul(xt, x).unwrap();
            let reg = tape.add_diag(gram, &[0.2; 3]).unwrap();
            let inv = tape.spd_inverse(reg).unwrap();
            let xi = tape.matmul(x, inv).unwrap();
            let p = tape.matmul(xi, xt).unwrap();
            let l = tape.trace_product(p, p).unwrap();
            tape.backward(l).unwrap()
        };
        assert_eq!(run(), run());
    }
}
